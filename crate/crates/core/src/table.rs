//! Structured inputs: tables of attribute/value records.
//!
//! Tables can be built from attribute/value string pairs or parsed from the
//! flat `Name[value] Name[value] ...` rendering used for linearized model
//! inputs. Attribute names have underscores turned into spaces before
//! tokenization in both cases, so `Page_Title` and `page title` agree.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::textcore::{TokenSeq, Tokenizer};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableRecord {
    attribute: TokenSeq,
    value: TokenSeq,
}

impl TableRecord {
    /// `value` must hold at least one token; `attribute` may be empty.
    pub fn new(attribute: TokenSeq, value: TokenSeq) -> Result<Self> {
        if value.is_empty() {
            return Err(Error::EmptyValue { index: 0 });
        }
        Ok(Self { attribute, value })
    }

    pub fn attribute(&self) -> &TokenSeq {
        &self.attribute
    }

    pub fn value(&self) -> &TokenSeq {
        &self.value
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Table {
    records: Vec<TableRecord>,
}

impl Table {
    pub fn new(records: Vec<TableRecord>) -> Self {
        Self { records }
    }

    /// Tokenizes raw attribute/value pairs. Records are kept in order, and
    /// repeated attributes stay separate records.
    pub fn from_pairs<A, V>(
        pairs: impl IntoIterator<Item = (A, V)>,
        tokenizer: Tokenizer,
    ) -> Result<Self>
    where
        A: AsRef<str>,
        V: AsRef<str>,
    {
        let mut records = Vec::new();
        for (index, (attr, value)) in pairs.into_iter().enumerate() {
            let value = tokenizer.tokenize(value.as_ref());
            if value.is_empty() {
                return Err(Error::EmptyValue { index });
            }
            records.push(TableRecord {
                attribute: tokenize_attribute(attr.as_ref(), tokenizer),
                value,
            });
        }
        Ok(Self { records })
    }

    pub fn records(&self) -> &[TableRecord] {
        &self.records
    }

    /// Number of records, `K`.
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn push(&mut self, record: TableRecord) {
        self.records.push(record);
    }

    /// Every attribute and value token across all records.
    pub fn token_set(&self) -> HashSet<&str> {
        self.records
            .iter()
            .flat_map(|r| r.attribute.iter().chain(r.value.iter()))
            .map(String::as_str)
            .collect()
    }

    /// Renders the table as `attr[value]` groups separated by single spaces.
    ///
    /// Lossy if a token contains a bracket, which only happens for tables
    /// built from pairs.
    pub fn linearize(&self) -> String {
        self.records
            .iter()
            .map(|r| format!("{}[{}]", r.attribute.join(), r.value.join()))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// See [`Table::token_set`].
pub fn table_token_set(table: &Table) -> HashSet<&str> {
    table.token_set()
}

fn tokenize_attribute(name: &str, tokenizer: Tokenizer) -> TokenSeq {
    tokenizer.tokenize(&name.replace('_', " "))
}

/// Parses `Name[value] Name[value] ...` with the default tokenizer.
pub fn parse_linearized_table(text: &str) -> Result<Table> {
    parse_linearized_table_with(text, Tokenizer::default())
}

pub fn parse_linearized_table_with(text: &str, tokenizer: Tokenizer) -> Result<Table> {
    let err = |offset: usize, message: &str| Error::TableParse {
        offset,
        message: message.to_owned(),
    };

    let mut records = Vec::new();
    let mut name_start = 0;
    let mut iter = text.char_indices();
    while let Some((i, c)) = iter.next() {
        match c {
            ']' => return Err(err(i, "unmatched ']'")),
            '[' => {
                let value_start = i + 1;
                let close = loop {
                    match iter.next() {
                        Some((j, ']')) => break j,
                        Some((j, '[')) => return Err(err(j, "nested '[' is not supported")),
                        Some(_) => {}
                        None => return Err(err(i, "unbalanced '['")),
                    }
                };
                let value = tokenizer.tokenize(&text[value_start..close]);
                if value.is_empty() {
                    return Err(err(i, "empty value inside brackets"));
                }
                records.push(TableRecord {
                    attribute: tokenize_attribute(&text[name_start..i], tokenizer),
                    value,
                });
                name_start = close + 1;
            }
            _ => {}
        }
    }
    let trailing = &text[name_start..];
    if !trailing.trim().is_empty() {
        let offset = name_start + (trailing.len() - trailing.trim_start().len());
        return Err(err(offset, "attribute without a bracketed value"));
    }
    Ok(Table { records })
}
