use std::fs;
use std::path::{Path, PathBuf};

use paradis::{CMat, C64};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

/// Process exit statuses.
pub const EXIT_DECIDED: u8 = 0;
pub const EXIT_INDETERMINATE: u8 = 2;
pub const EXIT_USAGE: u8 = 64;
pub const EXIT_PARSE: u8 = 65;
pub const EXIT_CAP: u8 = 70;

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Input(String),
    Cap(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Input(_) => EXIT_PARSE,
            Failure::Cap(_) => EXIT_CAP,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Input(m) | Failure::Cap(m) => m,
        }
    }
}

impl From<paradis::Error> for Failure {
    fn from(e: paradis::Error) -> Self {
        match e {
            paradis::Error::CapExceeded { .. } => Failure::Cap(e.to_string()),
            other => Failure::Input(other.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, Failure>;

/// A complex matrix as two real arrays.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixFile {
    pub d_rows: usize,
    pub d_cols: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl MatrixFile {
    pub fn from_cmat(m: &CMat) -> Self {
        let (r, c) = m.shape();
        let part = |f: fn(&C64) -> f64| -> Vec<Vec<f64>> {
            (0..r).map(|i| (0..c).map(|j| f(&m[(i, j)])).collect()).collect()
        };
        Self {
            d_rows: r,
            d_cols: c,
            re: part(|z| z.re),
            im: part(|z| z.im),
        }
    }

    pub fn to_cmat(&self) -> Result<CMat, String> {
        let check = |name: &str, rows: &[Vec<f64>]| {
            if rows.len() != self.d_rows || rows.iter().any(|r| r.len() != self.d_cols) {
                return Err(format!("{name} is not {}x{}", self.d_rows, self.d_cols));
            }
            if rows.iter().flatten().any(|v| !v.is_finite()) {
                return Err(format!("{name} has non-finite entries"));
            }
            Ok(())
        };
        check("re", &self.re)?;
        check("im", &self.im)?;
        if self.d_rows == 0 || self.d_cols == 0 {
            return Err("empty matrix".into());
        }
        Ok(CMat::from_fn(self.d_rows, self.d_cols, |i, j| {
            C64::new(self.re[i][j], self.im[i][j])
        }))
    }
}

/// Reads files and remembers their bytes for the report digest.
#[derive(Default)]
pub struct Inputs {
    hasher: Sha256,
}

impl Inputs {
    pub fn read(&mut self, path: &Path) -> CliResult<String> {
        let text = fs::read_to_string(path)
            .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
        self.hasher.update((text.len() as u64).to_le_bytes());
        self.hasher.update(text.as_bytes());
        Ok(text)
    }

    pub fn json(&mut self, path: &Path) -> CliResult<Value> {
        let text = self.read(path)?;
        serde_json::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
    }

    /// One matrix, or an array of matrices, per file.
    pub fn matrices(&mut self, path: &Path) -> CliResult<Vec<CMat>> {
        let value = self.json(path)?;
        let items = match value {
            Value::Array(items) => items,
            single => vec![single],
        };
        items
            .into_iter()
            .enumerate()
            .map(|(k, v)| {
                let bad = |e: String| Failure::Input(format!("{} (matrix {k}): {e}", path.display()));
                let file: MatrixFile = serde_json::from_value(v).map_err(|e| bad(e.to_string()))?;
                file.to_cmat().map_err(bad)
            })
            .collect()
    }

    pub fn matrix(&mut self, path: &Path) -> CliResult<CMat> {
        let mut all = self.matrices(path)?;
        if all.len() != 1 {
            return Err(Failure::Input(format!(
                "{}: expected one matrix, found {}",
                path.display(),
                all.len()
            )));
        }
        Ok(all.remove(0))
    }

    pub fn digest(self) -> String {
        self.hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

pub fn write_json(path: &Path, value: &impl Serialize) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).expect("serializable");
    fs::write(path, text + "\n").map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

/// Collects every square matrix from the listed files; all must share a size.
pub fn generators(inputs: &mut Inputs, files: &[PathBuf]) -> CliResult<(Vec<CMat>, usize)> {
    let mut all = Vec::new();
    for f in files {
        all.extend(inputs.matrices(f)?);
    }
    let d = all.first().map(CMat::rows).ok_or_else(|| Failure::Usage("no generators given".into()))?;
    if let Some(bad) = all.iter().find(|m| m.shape() != (d, d)) {
        return Err(Failure::Input(format!(
            "generators must all be {d}x{d}, found {}x{}",
            bad.rows(),
            bad.cols()
        )));
    }
    Ok((all, d))
}

#[derive(Serialize)]
pub struct RunReport {
    pub command: Vec<String>,
    pub inputs_digest: String,
    pub outcome: Value,
    pub residuals: Value,
    pub wall_time_s: f64,
    pub version: &'static str,
    pub seed: u64,
}
