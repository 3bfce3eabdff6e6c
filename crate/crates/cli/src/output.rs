//! CSV and sidecar writing.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::config::Resolved;
use crate::CliError;

/// Formats a float with 17 significant digits, like C's `%.17g`.
pub fn num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.into();
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..17).contains(&exp) {
        trim(&format!("{:.*}", (16 - exp) as usize, x)).into()
    } else {
        format!("{}e{exp}", trim(mantissa))
    }
}

fn trim(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Accumulates a CSV table in memory and writes it in one go.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self {
            text: header.join(",") + "\n",
        }
    }

    pub fn row(&mut self, cells: &[String]) {
        let _ = writeln!(self.text, "{}", cells.join(","));
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        fs::write(path, &self.text).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
    }
}

pub fn write_sidecar(cfg: &Resolved) -> Result<(), CliError> {
    let path = cfg.sidecar_path();
    let json = serde_json::to_string_pretty(cfg).expect("config serializes");
    fs::write(&path, json + "\n").map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
}
