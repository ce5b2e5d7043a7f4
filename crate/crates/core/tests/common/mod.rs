//! Test-only reference implementation of PARENT and random instance
//! generators.
//!
//! The oracle materializes n-gram lists and counts by linear scan, computes
//! LCS by memoized recursion and combines orders through logarithms, so it
//! shares no code path with the library.

#![allow(dead_code)]

use proedit_core::parent::Instance;
use proedit_core::table::{Table, TableRecord};
use proedit_core::textcore::TokenSeq;
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleScore {
    pub precision: f64,
    pub recall_vs_reference: f64,
    pub recall_vs_table: f64,
    pub lambda: f64,
    pub recall: f64,
    pub f1: f64,
}

fn grams(tokens: &[String], n: usize) -> Vec<Vec<String>> {
    let mut out = Vec::new();
    let mut i = 0;
    while i + n <= tokens.len() {
        out.push(tokens[i..i + n].to_vec());
        i += 1;
    }
    out
}

fn count(list: &[Vec<String>], g: &[String]) -> usize {
    list.iter().filter(|x| x.as_slice() == g).count()
}

fn distinct(list: &[Vec<String>]) -> Vec<Vec<String>> {
    let mut out: Vec<Vec<String>> = Vec::new();
    for g in list {
        if !out.contains(g) {
            out.push(g.clone());
        }
    }
    out
}

fn table_words(table: &Table) -> Vec<String> {
    let mut words = Vec::new();
    for r in table.records() {
        words.extend(r.attribute().iter().cloned());
        words.extend(r.value().iter().cloned());
    }
    words
}

fn w(g: &[String], words: &[String]) -> f64 {
    g.iter().filter(|t| words.contains(t)).count() as f64 / g.len() as f64
}

fn geo(values: &[f64]) -> f64 {
    if values.contains(&0.0) {
        return 0.0;
    }
    (values.iter().map(|v| v.ln()).sum::<f64>() / values.len() as f64).exp()
}

fn lcs(a: &[String], b: &[String]) -> usize {
    fn go(
        a: &[String],
        b: &[String],
        i: usize,
        j: usize,
        memo: &mut Vec<Vec<Option<usize>>>,
    ) -> usize {
        if i == a.len() || j == b.len() {
            return 0;
        }
        if let Some(v) = memo[i][j] {
            return v;
        }
        let v = if a[i] == b[j] {
            1 + go(a, b, i + 1, j + 1, memo)
        } else {
            go(a, b, i + 1, j, memo).max(go(a, b, i, j + 1, memo))
        };
        memo[i][j] = Some(v);
        v
    }
    let mut memo = vec![vec![None; b.len() + 1]; a.len() + 1];
    go(a, b, 0, 0, &mut memo)
}

pub fn oracle_table_recall(text: &[String], table: &Table) -> f64 {
    let k = table.records().len() as f64;
    table
        .records()
        .iter()
        .map(|r| lcs(r.value(), text) as f64 / r.value().len() as f64)
        .sum::<f64>()
        / k
}

/// PARENT with uniform order weights and, when `fixed_lambda` is `None`, the
/// reference-coverage lambda.
pub fn oracle(inst: &Instance, n_max: usize, fixed_lambda: Option<f64>) -> OracleScore {
    let gen = inst.generation.as_slice();
    let reference = inst.reference.as_slice();
    let words = table_words(&inst.table);

    let mut precisions = Vec::new();
    let mut recalls = Vec::new();
    for n in 1..=n_max {
        let g_list = grams(gen, n);
        let r_list = grams(reference, n);

        if !g_list.is_empty() {
            let mut num = 0.0;
            let mut den = 0.0;
            for g in distinct(&g_list) {
                let cg = count(&g_list, &g) as f64;
                let cgr = cg.min(count(&r_list, &g) as f64);
                let pr = cgr / cg;
                num += (pr + (1.0 - pr) * w(&g, &words)) * cg;
                den += cg;
            }
            precisions.push(num / den);
        }

        let mut num = 0.0;
        let mut den = 0.0;
        for g in distinct(&r_list) {
            let cr = count(&r_list, &g) as f64;
            let clipped = cr.min(count(&g_list, &g) as f64);
            num += clipped * w(&g, &words);
            den += cr * w(&g, &words);
        }
        if den > 0.0 {
            recalls.push(num / den);
        }
    }

    let precision = if precisions.is_empty() {
        0.0
    } else {
        geo(&precisions)
    };
    let recall_vs_reference = if recalls.is_empty() {
        if gen == reference {
            1.0
        } else {
            0.0
        }
    } else {
        geo(&recalls)
    };
    let recall_vs_table = oracle_table_recall(gen, &inst.table);
    let lambda = fixed_lambda
        .unwrap_or_else(|| (1.0 - oracle_table_recall(reference, &inst.table)).clamp(0.0, 1.0));
    let recall = recall_vs_reference.powf(1.0 - lambda) * recall_vs_table.powf(lambda);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    OracleScore {
        precision,
        recall_vs_reference,
        recall_vs_table,
        lambda,
        recall,
        f1,
    }
}

fn random_tokens(rng: &mut impl Rng, vocab: usize, len: usize) -> TokenSeq {
    TokenSeq::from_tokens((0..len).map(|_| format!("w{}", rng.gen_range(0..vocab)))).unwrap()
}

/// Vocabulary `vocab`, reference length 1..=max_len, generation length
/// 0..=max_len, 1..=max_records records with values of 1..=6 tokens.
pub fn random_instance(
    rng: &mut impl Rng,
    id: usize,
    vocab: usize,
    max_len: usize,
    max_records: usize,
) -> Instance {
    let records = (0..rng.gen_range(1..=max_records))
        .map(|_| {
            let attr_len = rng.gen_range(0..=2);
            let value_len = rng.gen_range(1..=6.min(max_len));
            TableRecord::new(
                random_tokens(rng, vocab, attr_len),
                random_tokens(rng, vocab, value_len),
            )
            .unwrap()
        })
        .collect();
    let ref_len = rng.gen_range(1..=max_len);
    let gen_len = rng.gen_range(0..=max_len);
    let reference = random_tokens(rng, vocab, ref_len);
    // Bias some generations towards the reference so clipping is exercised.
    let generation = if rng.gen_bool(0.3) {
        let mut g = reference.clone().into_inner();
        g.truncate(gen_len.max(1));
        if !g.is_empty() && rng.gen_bool(0.5) {
            let i = rng.gen_range(0..g.len());
            g[i] = format!("w{}", rng.gen_range(0..vocab));
        }
        TokenSeq::from_tokens(g).unwrap()
    } else {
        random_tokens(rng, vocab, gen_len)
    };
    Instance {
        id: format!("inst-{id:05}"),
        table: Table::new(records),
        reference,
        generation,
    }
}
