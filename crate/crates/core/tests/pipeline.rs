use std::fs;
use std::path::Path;

use proedit_core::pipeline::{Pipeline, PipelineSettings};
use proedit_core::proedit::DatasetRow;
use proedit_core::Error;

const CORPUS: &str = r#"{"id":"herc","linearized_table":"Page_Title[Herculaneum, Missouri] Historical population[2010] Census Historical population[3,468]","target":"As of the census of 2010, there were 3,468 people residing in Herculaneum, Missouri."}
{"id":"sunda","linearized_table":"Page_Title[Sunda Kingdom] Period[723 – 732] King's name[Sanjaya/Harisdarma/ Rakeyan Jamri]","target":"In 723, Jamri was the King of Sunda."}
"#;

fn setup(dir: &Path) -> PipelineSettings {
    let corpus = dir.join("corpus.jsonl");
    fs::write(&corpus, CORPUS).unwrap();
    PipelineSettings::new(corpus)
}

fn dataset(path: &Path) -> Vec<DatasetRow> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn write_outputs(path: &Path, rows: &[(&str, &str)]) {
    let text: String = rows
        .iter()
        .map(|(id, out)| serde_json::json!({"id": id, "output": out}).to_string() + "\n")
        .collect();
    fs::write(path, text).unwrap();
}

#[test]
fn full_two_stage_run() {
    let tmp = tempfile::tempdir().unwrap();
    let work = tmp.path().join("work");
    let (pipeline, summary) = Pipeline::init(&work, setup(tmp.path())).unwrap();
    assert_eq!(summary.rows, 2);
    assert!(summary.skipped.is_empty());

    let rows = dataset(&summary.dataset);
    assert_eq!(
        rows[1].target,
        "In 723, Jamri was the King of Sunda. <SEP> In 723, Jamri was the King of Sunda."
    );
    assert!(rows[0]
        .input
        .starts_with("Page_Title[Herculaneum, Missouri]"));

    let status = pipeline.status().unwrap();
    assert_eq!(status.stages, 1);
    assert!(status.decision.is_none());
    assert_eq!(
        status.pending.as_deref(),
        Some("stage 0 awaits model outputs")
    );

    // Stage 1 cannot be built before stage 0 has outputs.
    assert!(matches!(pipeline.make_dataset(1), Err(Error::Stage(_))));
    assert!(matches!(pipeline.score_stage(0), Err(Error::Stage(_))));

    let out0 = tmp.path().join("out0.jsonl");
    write_outputs(
        &out0,
        &[
            (
                "herc",
                "In 2010, there were 3,468 people. <SEP> 3,468 people.",
            ),
            ("sunda", "Sanjaya was king in 723 <SEP> king"),
        ],
    );
    pipeline.ingest_outputs(0, &out0).unwrap();
    let report = pipeline.score_stage(0).unwrap();
    assert_eq!(report.blocks.len(), 2);
    assert!(work.join("stage-0/report.json").exists());

    let s1 = pipeline.make_dataset(1).unwrap();
    let rows = dataset(&s1.dataset);
    assert_eq!(rows[0].target, "In 2010, there were 3,468 people. <SEP> As of the census of 2010, there were 3,468 people residing in Herculaneum, Missouri.");
    assert_eq!(
        rows[1].target,
        "Sanjaya was king in 723 <SEP> In 723, Jamri was the King of Sunda."
    );

    // Building the same stage twice is an ordering error.
    assert!(matches!(pipeline.make_dataset(1), Err(Error::Stage(_))));
    assert!(matches!(pipeline.make_dataset(3), Err(Error::Stage(_))));
    // Stage 0 outputs are frozen once stage 1 exists.
    assert!(matches!(
        pipeline.ingest_outputs(0, &out0),
        Err(Error::Stage(_))
    ));

    let out1 = tmp.path().join("out1.jsonl");
    write_outputs(&out1, &[
        ("herc", "As of the census of 2010, there were 3,468 people residing in Herculaneum, Missouri. <SEP> x"),
        ("sunda", "Sanjaya/Harisdarma/ Rakeyan Jamri was the King of Sunda from 723 – 732 <SEP> y"),
    ]);
    pipeline.ingest_outputs(1, &out1).unwrap();
    pipeline.score_stage(1).unwrap();

    let reopened = Pipeline::open(&work).unwrap();
    let status = reopened.status().unwrap();
    assert_eq!(status.first_part_f1.len(), 2);
    assert!(status.first_part_f1[1] > status.first_part_f1[0]);
    let decision = status.decision.unwrap();
    assert!(decision.proceed, "{}", decision.reason);
    assert!(status.pending.is_none());
}

#[test]
fn ingest_rejects_id_mismatch() {
    let tmp = tempfile::tempdir().unwrap();
    let (pipeline, _) = Pipeline::init(tmp.path().join("w"), setup(tmp.path())).unwrap();
    let out = tmp.path().join("out.jsonl");
    write_outputs(&out, &[("herc", "x <SEP> y")]);
    match pipeline.ingest_outputs(0, &out) {
        Err(Error::IdMismatch { missing, .. }) => assert_eq!(missing, ["sunda"]),
        other => panic!("unexpected {other:?}"),
    }
    assert!(matches!(
        pipeline.ingest_outputs(4, &out),
        Err(Error::Stage(_))
    ));
}

#[test]
fn init_refuses_existing_pipeline_and_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let settings = setup(tmp.path());
    let (_, a) = Pipeline::init(tmp.path().join("a"), settings.clone()).unwrap();
    let (_, b) = Pipeline::init(tmp.path().join("b"), settings.clone()).unwrap();
    assert_eq!(fs::read(&a.dataset).unwrap(), fs::read(&b.dataset).unwrap());
    assert!(matches!(
        Pipeline::init(tmp.path().join("a"), settings),
        Err(Error::Stage(_))
    ));
}

#[test]
fn colliding_targets_are_skipped_throughout() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("c.jsonl");
    fs::write(
        &corpus,
        concat!(
            r#"{"id":"a","linearized_table":"x[1]","target":"one"}"#,
            "\n",
            r#"{"id":"b","linearized_table":"x[2]","target":"two <SEP> parts"}"#,
            "\n"
        ),
    )
    .unwrap();
    let (pipeline, summary) =
        Pipeline::init(tmp.path().join("w"), PipelineSettings::new(corpus)).unwrap();
    assert_eq!(summary.rows, 1);
    assert_eq!(summary.skipped[0].id, "b");

    let out = tmp.path().join("o.jsonl");
    write_outputs(&out, &[("a", "one <SEP> one")]);
    pipeline.ingest_outputs(0, &out).unwrap();
    pipeline.score_stage(0).unwrap();
    let s1 = pipeline.make_dataset(1).unwrap();
    assert_eq!(s1.rows, 1);
}
