//! Pipeline artifacts as versioned, canonical JSON documents.
//!
//! | kind          | schema id                   | producer           |
//! |---------------|-----------------------------|--------------------|
//! | test data     | `mrtrim/td/v1`              | generation         |
//! | transformed   | `mrtrim/transformed/v1`     | transformation     |
//! | execution     | `mrtrim/execution/v1`       | runner, checker    |
//! | analysis      | `mrtrim/analysis/v1`        | analyzer, miner    |
//!
//! Every document is a JSON object whose `schema` member names its kind and
//! version. Execution artifacts hold one method each.

mod artifacts;
pub mod canonical;
pub mod numbers;

use std::collections::BTreeMap;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use crate::analyzer::GroundTruth;
use crate::mr::MrId;
use crate::{Error, Result};

pub use artifacts::{
    AnalysisArtifact, ArtifactPaths, ExecutionArtifact, GtEntry, MinerSettings, ReportEntry, RuleEntry, RunContext, RunManifest,
    TdArtifact, TransformedArtifact,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArtifactKind {
    Td,
    Transformed,
    Execution,
    Analysis,
}

impl ArtifactKind {
    pub fn tag(self) -> &'static str {
        match self {
            ArtifactKind::Td => "td",
            ArtifactKind::Transformed => "transformed",
            ArtifactKind::Execution => "execution",
            ArtifactKind::Analysis => "analysis",
        }
    }

    pub fn schema(self) -> String {
        format!("mrtrim/{}/v1", self.tag())
    }
}

/// A document that can be stored as an artifact.
pub trait Artifact: Serialize + DeserializeOwned {
    const KIND: ArtifactKind;

    /// Semantic checks beyond the JSON shape. Errors carry the offending
    /// location within the document.
    fn validate(&self) -> std::result::Result<(), (String, String)> {
        Ok(())
    }
}

/// Canonical text of an artifact, including its schema member.
pub fn to_canonical<A: Artifact>(artifact: &A) -> Result<String> {
    let mut value = serde_json::to_value(artifact).map_err(|e| Error::Serialize(e.to_string()))?;
    match &mut value {
        Value::Object(map) => {
            map.insert("schema".into(), Value::String(A::KIND.schema()));
        }
        _ => return Err(Error::Serialize("artifact must serialize to an object".into())),
    }
    canonical::to_canonical_string(&value)
}

/// Parse and validate artifact text. `origin` names the source in errors.
pub fn from_text<A: Artifact>(text: &str, origin: &Path) -> Result<A> {
    let mut value: Value = serde_json::from_str(text).map_err(|e| Error::Parse {
        path: origin.to_path_buf(),
        message: e.to_string(),
    })?;
    let schema_err = |at: &str, message: String| Error::Schema {
        path: origin.to_path_buf(),
        at: at.to_string(),
        message,
    };
    let Value::Object(map) = &mut value else {
        return Err(schema_err("$", "document is not a JSON object".into()));
    };
    let expected = A::KIND.schema();
    match map.remove("schema") {
        Some(Value::String(found)) if found == expected => {}
        Some(Value::String(found)) => {
            let prefix = format!("mrtrim/{}/", A::KIND.tag());
            return Err(if found.starts_with(&prefix) {
                Error::SchemaVersion {
                    path: origin.to_path_buf(),
                    found,
                    expected,
                }
            } else {
                schema_err("schema", format!("expected `{expected}`, found `{found}`"))
            });
        }
        Some(_) => return Err(schema_err("schema", "schema must be a string".into())),
        None => return Err(schema_err("schema", "missing schema member".into())),
    }
    let artifact: A = serde_path_to_error::deserialize(value).map_err(|e| {
        let at = e.path().to_string();
        schema_err(&at, e.into_inner().to_string())
    })?;
    artifact.validate().map_err(|(at, message)| schema_err(&at, message))?;
    Ok(artifact)
}

pub fn write<A: Artifact>(artifact: &A, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = to_canonical(artifact)?;
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read<A: Artifact>(path: impl AsRef<Path>) -> Result<A> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_text(&text, path)
}

/// Write any serializable value as canonical JSON, without a schema member.
pub fn write_json<T: Serialize>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let value = serde_json::to_value(value).map_err(|e| Error::Serialize(e.to_string()))?;
    let text = canonical::to_canonical_string(&value)?;
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Ground-truth labels from a document shaped like
/// `{"average": {"MR_ADD": 1, "MR_PER": 1}, "durbinWatson": {"MR_PER": 0}}`.
pub fn read_ground_truth(path: impl AsRef<Path>) -> Result<GroundTruth> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut de = serde_json::Deserializer::from_str(&text);
    let table: BTreeMap<String, BTreeMap<MrId, u8>> = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let at = e.path().to_string();
        let inner = e.into_inner();
        if inner.is_syntax() || inner.is_eof() {
            Error::Parse {
                path: path.to_path_buf(),
                message: inner.to_string(),
            }
        } else {
            Error::Schema {
                path: path.to_path_buf(),
                at,
                message: inner.to_string(),
            }
        }
    })?;
    let mut gt = GroundTruth::new();
    for (method, row) in table {
        for (mr, label) in row {
            if label > 1 {
                return Err(Error::Schema {
                    path: path.to_path_buf(),
                    at: format!("{method}.{mr}"),
                    message: format!("labels must be 0 or 1, got {label}"),
                });
            }
            gt.insert((method.clone(), mr), label);
        }
    }
    Ok(gt)
}
