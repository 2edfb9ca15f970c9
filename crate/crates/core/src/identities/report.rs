use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;

/// Outcome of one identity or inequality check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidualReport {
    pub name: String,
    #[serde(rename = "L")]
    pub band_limit: usize,
    pub l_max_data: usize,
    pub sup_residual: f64,
    pub rel_residual: f64,
    pub passed: bool,
    /// Why the check could not be evaluated, if it could not.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip)]
    pub tolerance: f64,
}

impl ResidualReport {
    /// `passed` is `rel_residual <= tolerance`; a non-finite residual fails.
    pub fn new(
        name: impl Into<String>,
        band_limit: usize,
        l_max_data: usize,
        sup_residual: f64,
        rel_residual: f64,
        tolerance: f64,
    ) -> Self {
        Self {
            name: name.into(),
            band_limit,
            l_max_data,
            sup_residual,
            rel_residual,
            passed: rel_residual.is_finite() && rel_residual <= tolerance,
            error: None,
            tolerance,
        }
    }

    /// A check that raised an error. The residuals are pinned at `f64::MAX`
    /// so the document stays valid JSON.
    pub fn failed(
        name: impl Into<String>,
        band_limit: usize,
        l_max_data: usize,
        error: impl ToString,
    ) -> Self {
        Self {
            name: name.into(),
            band_limit,
            l_max_data,
            sup_residual: f64::MAX,
            rel_residual: f64::MAX,
            passed: false,
            error: Some(error.to_string()),
            tolerance: 0.0,
        }
    }

    /// Residual measured against `normalizer`.
    pub fn from_residual(
        name: impl Into<String>,
        band_limit: usize,
        l_max_data: usize,
        sup_residual: f64,
        normalizer: f64,
        tolerance: f64,
    ) -> Self {
        Self::new(
            name,
            band_limit,
            l_max_data,
            sup_residual,
            sup_residual / normalizer,
            tolerance,
        )
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self.passed = self.rel_residual.is_finite() && self.rel_residual <= tolerance;
        self
    }
}

/// Pretty JSON array of reports, ordered by name.
pub fn reports_to_json(reports: &[ResidualReport]) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&sorted_by_name(reports))?;
    s.push('\n');
    Ok(s)
}

pub(crate) fn sorted_by_name(reports: &[ResidualReport]) -> Vec<ResidualReport> {
    let mut sorted = reports.to_vec();
    sorted.sort_by(|a, b| a.name.cmp(&b.name));
    sorted
}

/// Full-precision decimal for CSV output (17 significant digits).
pub fn csv_number(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes to a sibling temporary file and renames it over `path`.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = Path::new(&tmp);
    {
        let mut f = fs::File::create(tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(tmp, path)?;
    Ok(())
}
