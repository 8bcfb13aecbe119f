//! Verification records, the recorder that produces them, and output files.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use arpoisson_core::Result as CoreResult;
use serde::{Deserialize, Serialize};

/// A small table attached to a check (for example a coefficient table).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// One check. `pass` holds iff `max_defect < tolerance`.
///
/// Negative controls, which must *exceed* a threshold, are recorded with
/// `max_defect = threshold / observed` against a tolerance of 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub suite: String,
    pub check: String,
    pub max_defect: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub witness: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observed: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Table>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub suite: String,
    pub check: String,
    pub wall_time_ms: f64,
}

/// Largest defect seen so far and where. NaN counts as infinite.
#[derive(Clone, Debug, Default)]
pub struct Worst {
    pub max: f64,
    pub witness: Option<Vec<f64>>,
}

impl Worst {
    pub fn update(&mut self, defect: f64, p: &[f64]) {
        let d = if defect.is_nan() { f64::INFINITY } else { defect };
        if self.witness.is_none() || d > self.max {
            self.max = d;
            self.witness = Some(p.to_vec());
        }
    }

    pub fn merge(&mut self, other: Worst) {
        if let Some(w) = other.witness {
            self.update(other.max, &w);
        }
    }
}

/// What a check closure hands back.
pub struct Outcome {
    pub worst: Worst,
    pub observed: Option<f64>,
    pub note: Option<String>,
    pub table: Option<Table>,
}

impl From<Worst> for Outcome {
    fn from(worst: Worst) -> Self {
        Outcome { worst, observed: None, note: None, table: None }
    }
}

impl Outcome {
    pub fn with_table(mut self, t: Table) -> Self {
        self.table = Some(t);
        self
    }

    pub fn with_note(mut self, n: impl Into<String>) -> Self {
        self.note = Some(n.into());
        self
    }
}

pub struct Recorder {
    suite: String,
    tol_scale: f64,
    pub reports: Vec<VerificationReport>,
    pub timings: Vec<Timing>,
}

impl Recorder {
    pub fn new(tol_scale: f64) -> Self {
        Recorder { suite: String::new(), tol_scale, reports: Vec::new(), timings: Vec::new() }
    }

    pub fn set_suite(&mut self, s: &str) {
        self.suite = s.to_string();
    }

    pub fn all_pass(&self) -> bool {
        self.reports.iter().all(|r| r.pass)
    }

    fn push(&mut self, check: &str, res: CoreResult<Outcome>, tol: f64, start: Instant, transform: impl Fn(f64) -> f64) {
        let (max_defect, witness, observed, note, table) = match res {
            Ok(o) => (transform(o.worst.max), o.worst.witness, o.observed, o.note, o.table),
            Err(e) => (f64::INFINITY, None, None, Some(format!("error: {e}")), None),
        };
        let pass = max_defect < tol;
        self.reports.push(VerificationReport {
            suite: self.suite.clone(),
            check: check.to_string(),
            max_defect,
            tolerance: tol,
            pass,
            witness,
            observed,
            note,
            table,
        });
        self.timings.push(Timing {
            suite: self.suite.clone(),
            check: check.to_string(),
            wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
        });
    }

    /// Passes iff the returned defect is below `tol` (scaled by `--tol-scale`).
    pub fn upper<O: Into<Outcome>>(&mut self, check: &str, tol: f64, f: impl FnOnce() -> CoreResult<O>) {
        let start = Instant::now();
        let res = f().map(Into::into);
        self.push(check, res, tol * self.tol_scale, start, |d| d);
    }

    /// Negative control: passes iff the returned quantity exceeds `threshold`.
    pub fn lower<O: Into<Outcome>>(&mut self, check: &str, threshold: f64, f: impl FnOnce() -> CoreResult<O>) {
        let start = Instant::now();
        let res = f().map(Into::into);
        let res = res.map(|mut o| {
            o.observed = Some(o.worst.max);
            o
        });
        self.push(check, res, 1.0, start, move |obs| if obs > 0.0 { threshold / obs } else { f64::INFINITY });
    }

    /// A predicate; a false result is recorded as defect 1 against tolerance 0.5.
    pub fn flag(&mut self, check: &str, f: impl FnOnce() -> CoreResult<(bool, Option<String>)>) {
        let start = Instant::now();
        let res = f().map(|(ok, note)| Outcome {
            worst: Worst { max: if ok { 0.0 } else { 1.0 }, witness: None },
            observed: None,
            note,
            table: None,
        });
        self.push(check, res, 0.5, start, |d| d);
    }
}

/// Writes `bytes` to `path` through a temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp.{}", std::process::id()));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

pub fn csv_string(columns: &[&str], rows: &[Vec<f64>]) -> String {
    let mut s = columns.join(",");
    s.push('\n');
    for r in rows {
        let line: Vec<String> = r.iter().map(|v| fmt_f64(*v)).collect();
        s.push_str(&line.join(","));
        s.push('\n');
    }
    s
}

pub fn write_csv(path: &Path, columns: &[&str], rows: &[Vec<f64>]) -> std::io::Result<()> {
    write_atomic(path, csv_string(columns, rows).as_bytes())
}
