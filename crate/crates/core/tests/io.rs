use std::fs;
use std::path::{Path, PathBuf};

use iwd_sched::io::{
    bundled, diamond, import_dax, load_profile, load_workflow, parse_workflow, resolve_workflow, save_workflow,
    IoError, BUNDLED_NAMES, DEFAULT_REFERENCE_MIPS,
};
use iwd_sched::resource::CloudProfile;
use iwd_sched::workflow::{DataEdge, Task, Workflow};
use serde_json::Value;

fn repo(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn schema(name: &str) -> jsonschema::Validator {
    let text = fs::read_to_string(repo(&format!("docs/schemas/{name}"))).unwrap();
    jsonschema::validator_for(&serde_json::from_str(&text).unwrap()).unwrap()
}

fn assert_valid(validator: &jsonschema::Validator, doc: &Value) {
    let errors: Vec<String> = validator.iter_errors(doc).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{errors:?}");
}

#[test]
fn fixture_matches_bundled_diamond() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/diamond.v1.json");
    let wf = load_workflow(&path).unwrap();
    assert_eq!(wf, diamond());
    assert_eq!((wf.len(), wf.edges().len()), (4, 4));
}

#[test]
fn round_trip_every_bundled_instance() {
    let dir = tempfile::tempdir().unwrap();
    for name in BUNDLED_NAMES {
        let wf = bundled(name).unwrap();
        let path = dir.path().join(format!("{name}.json"));
        save_workflow(&wf, &path).unwrap();
        assert_eq!(load_workflow(&path).unwrap(), wf, "{name}");
    }
}

#[test]
fn golden_examples_validate_against_schemas() {
    let wf_schema = schema("workflow.v1.schema.json");
    for name in BUNDLED_NAMES {
        let doc: Value = serde_json::from_str(&iwd_sched::io::workflow_to_json(&bundled(name).unwrap())).unwrap();
        assert_valid(&wf_schema, &doc);
    }
    let golden = |f: &str| -> Value { serde_json::from_str(&fs::read_to_string(repo(f)).unwrap()).unwrap() };
    assert_valid(&wf_schema, &golden("docs/examples/diamond.workflow.json"));
    assert_valid(&schema("profile.v1.schema.json"), &golden("docs/examples/default.profile.json"));
    assert_valid(&schema("schedule-report.v1.schema.json"), &golden("docs/examples/diamond.schedule.json"));
    assert_valid(&schema("deadlines.schema.json"), &golden("docs/examples/diamond.deadlines.json"));

    assert_eq!(
        load_workflow(repo("docs/examples/diamond.workflow.json")).unwrap(),
        diamond()
    );
    assert_eq!(load_profile(repo("docs/examples/default.profile.json")).unwrap(), CloudProfile::default());
}

#[test]
fn workflow_without_edges_or_deadline() {
    let wf = parse_workflow(r#"{"version": "workflow/v1", "name": "solo", "tasks": [{"id": "x", "size_mi": 5}]}"#, "t")
        .unwrap();
    assert_eq!(wf.deadline(), None);
    assert!(wf.edges().is_empty());
}

#[test]
fn unknown_fields_are_rejected() {
    let text = r#"{"version": "workflow/v1", "name": "x", "tasks": [{"id": "a", "size_mi": 1, "cpu": 2}]}"#;
    match parse_workflow(text, "t") {
        Err(IoError::Field { field, .. }) => assert_eq!(field, "tasks[0].cpu"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn cycle_in_file_is_named() {
    let text = r#"{"version": "workflow/v1", "name": "loop",
        "tasks": [{"id": "A", "size_mi": 1}, {"id": "B", "size_mi": 1}, {"id": "C", "size_mi": 1}, {"id": "D", "size_mi": 1}],
        "edges": [{"parent": "D", "child": "A", "volume_mb": 0},
                  {"parent": "A", "child": "B", "volume_mb": 0},
                  {"parent": "B", "child": "C", "volume_mb": 0},
                  {"parent": "C", "child": "A", "volume_mb": 0}]}"#;
    let err = parse_workflow(text, "loop.json").unwrap_err();
    assert!(err.to_string().contains("cycle {A,B,C}"), "{err}");
}

#[test]
fn dax_file_import() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pair.dax");
    fs::write(
        &path,
        r#"<?xml version="1.0"?>
<adag xmlns="http://pegasus.isi.edu/schema/DAX" version="2.1">
  <job id="ID00000" name="mProjectPP" runtime="10.0">
    <uses file="p.fits" link="output" size="4200000"/>
  </job>
  <job id="ID00001" name="mAdd" runtime="3.5">
    <uses file="p.fits" link="input" size="4200000"/>
  </job>
  <child ref="ID00001"><parent ref="ID00000"/></child>
</adag>
"#,
    )
    .unwrap();
    let wf = import_dax(&path, DEFAULT_REFERENCE_MIPS).unwrap();
    assert_eq!(wf.name(), "pair");
    let expected = Workflow::new(
        "pair",
        vec![Task::new("ID00000", 10_000.0), Task::new("ID00001", 3_500.0)],
        vec![DataEdge::new("ID00000", "ID00001", 4.2)],
        None,
    )
    .unwrap();
    assert_eq!(wf, expected);
    assert_eq!(resolve_workflow(path.to_str().unwrap()).unwrap(), expected);

    let half = import_dax(&path, 500.0).unwrap();
    assert_eq!(half.task(0).size, 5_000.0);
}
