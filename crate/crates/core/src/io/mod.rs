//! Reading and writing workflows and cloud profiles, DAX import, and the
//! bundled desk-scale workflow instances.
//!
//! Both native formats are versioned JSON documents; their schemas live in
//! `docs/schemas/`.

mod bundled;
mod dax;

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bundled::{bundled, bundled_instances, diamond, BUNDLED_NAMES};
pub use dax::{import_dax, parse_dax, DEFAULT_REFERENCE_MIPS};

use crate::resource::{CloudProfile, DegradationModel, VmType, DEFAULT_ECU_TO_MIPS};
use crate::workflow::{DataEdge, Task, ValidationReport, Workflow};

pub const WORKFLOW_VERSION: &str = "workflow/v1";
pub const PROFILE_VERSION: &str = "profile/v1";

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{origin}:{line}:{column}: {message}")]
    Syntax { origin: String, line: usize, column: usize, message: String },
    #[error("{origin}: field `{field}`: {message}")]
    Field { origin: String, field: String, message: String },
    #[error("{origin}: unsupported version {found:?}, expected {expected:?}")]
    Version { origin: String, found: Option<String>, expected: &'static str },
    #[error("{origin}: invalid workflow: {report}")]
    Invalid { origin: String, report: ValidationReport },
    #[error("{origin}: invalid profile: {message}")]
    InvalidProfile { origin: String, message: String },
    #[error("{origin}:{line}: {message}")]
    Dax { origin: String, line: u32, message: String },
    #[error("{origin}:{line}: unsupported DAX element <{element}>")]
    Unsupported { origin: String, line: u32, element: String },
    #[error("unknown bundled workflow {0:?}")]
    UnknownBundled(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskRow {
    pub id: String,
    pub size_mi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeRow {
    pub parent: String,
    pub child: String,
    pub volume_mb: f64,
}

/// On-disk workflow document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkflowFileV1 {
    pub version: String,
    pub name: String,
    pub tasks: Vec<TaskRow>,
    #[serde(default)]
    pub edges: Vec<EdgeRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deadline_s: Option<f64>,
}

impl WorkflowFileV1 {
    pub fn from_workflow(w: &Workflow) -> Self {
        WorkflowFileV1 {
            version: WORKFLOW_VERSION.to_string(),
            name: w.name().to_string(),
            tasks: w.tasks().iter().map(|t| TaskRow { id: t.id.clone(), size_mi: t.size }).collect(),
            edges: w
                .edges()
                .iter()
                .map(|e| EdgeRow { parent: e.parent.clone(), child: e.child.clone(), volume_mb: e.volume })
                .collect(),
            deadline_s: w.deadline(),
        }
    }

    pub fn into_workflow(self, origin: &str) -> Result<Workflow, IoError> {
        let tasks = self.tasks.into_iter().map(|t| Task::new(t.id, t.size_mi)).collect();
        let edges = self
            .edges
            .into_iter()
            .map(|e| DataEdge::new(e.parent, e.child, e.volume_mb))
            .collect();
        let wf = Workflow::from_parts(self.name, tasks, edges, self.deadline_s);
        let report = wf.validate();
        if report.is_empty() {
            Ok(wf)
        } else {
            Err(IoError::Invalid { origin: origin.to_string(), report })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogRow {
    pub name: String,
    pub ecu: f64,
    pub cores: u32,
    pub memory_gb: f64,
    pub cost_per_period: f64,
}

/// On-disk cloud profile. Omitted fields take the default catalog and constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProfileFileV1 {
    pub version: String,
    pub catalog: Vec<CatalogRow>,
    /// MB/s.
    pub bandwidth_mbps: f64,
    pub billing_period_s: f64,
    pub boot_time_s: f64,
    pub degradation: DegradationModel,
    pub ecu_to_mips: f64,
}

impl Default for ProfileFileV1 {
    fn default() -> Self {
        let row = |name: &str, ecu: f64, cores: u32, memory_gb: f64, cost_per_period: f64| CatalogRow {
            name: name.to_string(),
            ecu,
            cores,
            memory_gb,
            cost_per_period,
        };
        ProfileFileV1 {
            version: PROFILE_VERSION.to_string(),
            catalog: vec![
                row("m1.small", 1.0, 1, 1.7, 0.06),
                row("m1.medium", 2.0, 1, 3.75, 0.12),
                row("m1.large", 2.0, 2, 7.5, 0.24),
                row("m1.xlarge", 2.0, 4, 15.0, 0.48),
                row("m3.xlarge", 3.25, 4, 15.0, 0.50),
                row("m3.xxlarge", 3.25, 8, 30.0, 1.00),
            ],
            bandwidth_mbps: 20.0,
            billing_period_s: 3600.0,
            boot_time_s: 97.0,
            degradation: DegradationModel { mean: 0.12, stddev: 0.10, cap: 0.24 },
            ecu_to_mips: DEFAULT_ECU_TO_MIPS,
        }
    }
}

impl ProfileFileV1 {
    pub fn into_profile(self, origin: &str) -> Result<CloudProfile, IoError> {
        if !(self.ecu_to_mips > 0.0) {
            return Err(IoError::InvalidProfile {
                origin: origin.to_string(),
                message: "ecu_to_mips must be positive".into(),
            });
        }
        let profile = CloudProfile {
            catalog: self
                .catalog
                .into_iter()
                .map(|r| VmType {
                    name: r.name,
                    speed: r.ecu * self.ecu_to_mips,
                    cost_per_period: r.cost_per_period,
                    cores: r.cores,
                    memory_gb: r.memory_gb,
                })
                .collect(),
            bandwidth: self.bandwidth_mbps,
            billing_period: self.billing_period_s,
            boot_time: self.boot_time_s,
            degradation: self.degradation,
        };
        profile.validate().map_err(|e| IoError::InvalidProfile {
            origin: origin.to_string(),
            message: e.to_string(),
        })?;
        Ok(profile)
    }
}

fn read(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::Io { path: path.to_path_buf(), source })
}

/// Parses a versioned JSON document: syntax first, then the version tag,
/// then the typed fields.
fn parse_versioned<T: DeserializeOwned>(text: &str, origin: &str, expected: &'static str) -> Result<T, IoError> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| IoError::Syntax {
        origin: origin.to_string(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let found = value.get("version").and_then(|v| v.as_str());
    if found != Some(expected) {
        return Err(IoError::Version {
            origin: origin.to_string(),
            found: found.map(str::to_string),
            expected,
        });
    }
    serde_path_to_error::deserialize(value).map_err(|e| IoError::Field {
        origin: origin.to_string(),
        field: e.path().to_string(),
        message: e.into_inner().to_string(),
    })
}

pub fn parse_workflow(text: &str, origin: &str) -> Result<Workflow, IoError> {
    parse_versioned::<WorkflowFileV1>(text, origin, WORKFLOW_VERSION)?.into_workflow(origin)
}

pub fn load_workflow(path: impl AsRef<Path>) -> Result<Workflow, IoError> {
    let path = path.as_ref();
    parse_workflow(&read(path)?, &path.display().to_string())
}

pub fn workflow_to_json(workflow: &Workflow) -> String {
    serde_json::to_string_pretty(&WorkflowFileV1::from_workflow(workflow)).expect("serializable") + "\n"
}

pub fn save_workflow(workflow: &Workflow, path: impl AsRef<Path>) -> Result<(), IoError> {
    let path = path.as_ref();
    fs::write(path, workflow_to_json(workflow))
        .map_err(|source| IoError::Io { path: path.to_path_buf(), source })
}

pub fn parse_profile(text: &str, origin: &str) -> Result<CloudProfile, IoError> {
    parse_versioned::<ProfileFileV1>(text, origin, PROFILE_VERSION)?.into_profile(origin)
}

pub fn load_profile(path: impl AsRef<Path>) -> Result<CloudProfile, IoError> {
    let path = path.as_ref();
    parse_profile(&read(path)?, &path.display().to_string())
}

/// Loads `bundled:<name>` from the built-in set, `*.dax`/`*.xml` through the
/// DAX importer, and anything else as a workflow file.
pub fn resolve_workflow(spec: &str) -> Result<Workflow, IoError> {
    if let Some(name) = spec.strip_prefix("bundled:") {
        return bundled(name).ok_or_else(|| IoError::UnknownBundled(name.to_string()));
    }
    let path = Path::new(spec);
    match path.extension().and_then(|e| e.to_str()) {
        Some("dax") | Some("xml") => import_dax(path, DEFAULT_REFERENCE_MIPS),
        _ => load_workflow(path),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_profile_file_matches_builtin() {
        let p = ProfileFileV1::default().into_profile("default").unwrap();
        assert_eq!(p, CloudProfile::default());
        let parsed = parse_profile(r#"{"version": "profile/v1"}"#, "x").unwrap();
        assert_eq!(parsed, CloudProfile::default());
    }

    #[test]
    fn profile_overrides_and_errors() {
        let p = parse_profile(r#"{"version": "profile/v1", "bandwidth_mbps": 50, "boot_time_s": 0}"#, "x")
            .unwrap();
        assert_eq!(p.bandwidth, 50.0);
        assert_eq!(p.boot_time, 0.0);
        assert!(matches!(
            parse_profile(r#"{"version": "profile/v2"}"#, "x"),
            Err(IoError::Version { .. })
        ));
        assert!(matches!(
            parse_profile(r#"{"version": "profile/v1", "bandwidth_mbps": -1}"#, "x"),
            Err(IoError::InvalidProfile { .. })
        ));
        match parse_profile(r#"{"version": "profile/v1", "degradation": {"mean": "x"}}"#, "x") {
            Err(IoError::Field { field, .. }) => assert_eq!(field, "degradation.mean"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn workflow_parse_errors_are_distinct() {
        assert!(matches!(parse_workflow("{ nope", "f"), Err(IoError::Syntax { line: 1, .. })));
        assert!(matches!(
            parse_workflow(r#"{"version": "workflow/v9", "name": "x", "tasks": []}"#, "f"),
            Err(IoError::Version { found: Some(v), .. }) if v == "workflow/v9"
        ));
        assert!(matches!(
            parse_workflow(r#"{"name": "x", "tasks": []}"#, "f"),
            Err(IoError::Version { found: None, .. })
        ));
        match parse_workflow(
            r#"{"version": "workflow/v1", "name": "x", "tasks": [{"id": "a", "size_mi": "big"}]}"#,
            "f",
        ) {
            Err(IoError::Field { field, .. }) => assert_eq!(field, "tasks[0].size_mi"),
            other => panic!("{other:?}"),
        }
        let dup = r#"{"version": "workflow/v1", "name": "x",
            "tasks": [{"id": "a", "size_mi": 1}, {"id": "a", "size_mi": 2}]}"#;
        match parse_workflow(dup, "f") {
            Err(e @ IoError::Invalid { .. }) => assert!(e.to_string().contains("duplicate task id a")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_file() {
        assert!(matches!(load_workflow("/definitely/not/here.json"), Err(IoError::Io { .. })));
    }

    #[test]
    fn resolve_bundled() {
        assert_eq!(resolve_workflow("bundled:diamond").unwrap().len(), 4);
        assert!(matches!(resolve_workflow("bundled:nope"), Err(IoError::UnknownBundled(_))));
    }
}
