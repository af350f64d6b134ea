use serde::Serialize;

pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    ConfigError,
    SolverFailure,
}

/// One pass/fail check. `value` and `threshold` are omitted (null) when the
/// check is qualitative; non-finite values serialize as null.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: Option<f64>,
    pub threshold: Option<f64>,
    pub detail: Option<String>,
}

impl Check {
    pub fn describe(&self) -> String {
        let mut s = self.name.clone();
        if let Some(v) = self.value {
            s += &format!(": {v:e}");
        }
        if let Some(t) = self.threshold {
            s += &format!(" (threshold {t:e})");
        }
        if let Some(d) = &self.detail {
            s += &format!(" {d}");
        }
        s
    }
}

/// Contents of `summary.json`; the schema is in `docs/summary.schema.json`.
#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub command: String,
    pub status: Status,
    pub exit_code: i32,
    pub seed: u64,
    pub config: Option<String>,
    pub levels: [usize; 2],
    pub checks: Vec<Check>,
    pub artifacts: Vec<String>,
    pub error: Option<String>,
}
