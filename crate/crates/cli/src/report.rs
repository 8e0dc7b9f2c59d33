use std::path::Path;
use std::time::Instant;

use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::Flags;

/// A failed command: exit code and one-line diagnostic.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn invalid(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }

    pub fn no_certificate(message: impl Into<String>) -> Self {
        Self { code: 1, message: message.into() }
    }
}

impl From<robh2::Error> for Failure {
    fn from(e: robh2::Error) -> Self {
        use robh2::Error::*;
        let code = match e {
            DimensionMismatch { .. }
            | StructuralViolation { .. }
            | InvalidStructure(_)
            | ImproperWeight(_)
            | TopologyMismatch(_)
            | WrongTimeDomain { .. }
            | InvalidArgument(_)
            | Json(_) => 2,
            Infeasible => return Self::no_certificate(format!("infeasible: {e}")),
            _ => 1,
        };
        Self { code, message: e.to_string() }
    }
}

pub type Outcome = Result<Report, Failure>;

/// Input file contents with their digest.
pub struct Input {
    pub text: String,
    pub sha256: String,
}

pub fn read_input(path: &Path) -> Result<Input, Failure> {
    let bytes = std::fs::read(path).map_err(|e| Failure::invalid(format!("cannot read {}: {e}", path.display())))?;
    let sha256 = hex::encode(Sha256::digest(&bytes));
    let text = String::from_utf8(bytes).map_err(|_| Failure::invalid(format!("{} is not UTF-8", path.display())))?;
    Ok(Input { text, sha256 })
}

pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub struct Report {
    fields: Map<String, Value>,
    started: Instant,
    timings: bool,
}

impl Report {
    pub fn new(command: &str, flags: &Flags) -> Self {
        let mut fields = Map::new();
        fields.insert("command".into(), json!(command));
        fields.insert("tool_version".into(), json!(env!("CARGO_PKG_VERSION")));
        fields.insert("flags".into(), json!({ "tol": flags.tol, "seed": flags.seed, "max_iter": flags.max_iter }));
        fields.insert("inputs".into(), json!({}));
        Self { fields, started: Instant::now(), timings: flags.timings }
    }

    pub fn input(&mut self, role: &str, path: &Path, input: &Input) {
        self.fields["inputs"]
            .as_object_mut()
            .unwrap()
            .insert(role.into(), json!({ "path": path.display().to_string(), "sha256": input.sha256 }));
    }

    pub fn set(&mut self, key: &str, value: Value) {
        self.fields.insert(key.into(), value);
    }

    pub fn render(mut self) -> String {
        if self.timings {
            self.fields.insert("timings".into(), json!({ "total_s": self.started.elapsed().as_secs_f64() }));
        }
        serde_json::to_string_pretty(&Value::Object(self.fields)).expect("report serializes")
    }
}
