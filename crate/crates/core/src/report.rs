//! Check records shared by the verification suite and the CLI.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    /// The grid is too coarse for a refinement-based check to mean anything.
    InsufficientResolution,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub suite: String,
    pub name: String,
    pub measured: f64,
    pub tolerance: f64,
    pub status: Status,
    pub detail: String,
}

impl Check {
    /// Passes when `measured ≤ tolerance`.
    pub fn at_most(suite: &str, name: &str, measured: f64, tolerance: f64) -> Self {
        Self::with_status(suite, name, measured, tolerance, measured <= tolerance)
    }

    /// Passes when `measured ≥ tolerance`.
    pub fn at_least(suite: &str, name: &str, measured: f64, tolerance: f64) -> Self {
        Self::with_status(suite, name, measured, tolerance, measured >= tolerance)
    }

    pub fn with_status(suite: &str, name: &str, measured: f64, tolerance: f64, ok: bool) -> Self {
        Check {
            suite: suite.into(),
            name: name.into(),
            measured,
            tolerance,
            status: if ok && measured.is_finite() { Status::Pass } else { Status::Fail },
            detail: String::new(),
        }
    }

    pub fn insufficient(suite: &str, name: &str, detail: impl Into<String>) -> Self {
        Check {
            suite: suite.into(),
            name: name.into(),
            measured: f64::NAN,
            tolerance: f64::NAN,
            status: Status::InsufficientResolution,
            detail: detail.into(),
        }
    }

    pub fn failed(suite: &str, name: &str, detail: impl Into<String>) -> Self {
        Check {
            suite: suite.into(),
            name: name.into(),
            measured: f64::NAN,
            tolerance: f64::NAN,
            status: Status::Fail,
            detail: detail.into(),
        }
    }

    pub fn detail(mut self, d: impl Into<String>) -> Self {
        self.detail = d.into();
        self
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn push(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn count(&self, s: Status) -> usize {
        self.checks.iter().filter(|c| c.status == s).count()
    }

    /// Fail dominates insufficient resolution, which dominates pass.
    pub fn overall(&self) -> Status {
        if self.count(Status::Fail) > 0 {
            Status::Fail
        } else if self.count(Status::InsufficientResolution) > 0 {
            Status::InsufficientResolution
        } else {
            Status::Pass
        }
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        #[derive(Serialize)]
        struct Summary<'a> {
            overall: Status,
            passed: usize,
            failed: usize,
            insufficient: usize,
            checks: &'a [Check],
        }
        serde_json::to_string_pretty(&Summary {
            overall: self.overall(),
            passed: self.count(Status::Pass),
            failed: self.count(Status::Fail),
            insufficient: self.count(Status::InsufficientResolution),
            checks: &self.checks,
        })
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("suite,name,measured,tolerance,status,detail\n");
        for c in &self.checks {
            let status = match c.status {
                Status::Pass => "pass",
                Status::Fail => "fail",
                Status::InsufficientResolution => "insufficient_resolution",
            };
            s.push_str(&format!(
                "{},{},{:e},{:e},{},\"{}\"\n",
                c.suite,
                c.name,
                c.measured,
                c.tolerance,
                status,
                c.detail.replace('"', "'")
            ));
        }
        s
    }
}
