//! Report formatting: fixed-width floats, CSV emission, and the readers
//! that make every emitted CSV round-trip through the tool itself.

use crate::config::ConfigError;

/// Four decimal places; Rust's float formatter resolves exact ties
/// half-to-even, which keeps reruns byte-identical.
pub fn fmt4(v: f64) -> String {
    if v.is_nan() {
        return "NA".to_string();
    }
    format!("{v:.4}")
}

pub const METRICS_HEADER: &str = "method,seed,acc,bwt,forg,pla,fwt,ttime_min,fps";

/// One metrics.csv row: a method at one ordering seed.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub method: String,
    pub seed: u64,
    pub acc: f64,
    pub bwt: f64,
    pub forg: f64,
    pub pla: f64,
    pub fwt: f64,
    pub ttime_min: f64,
    pub fps: f64,
}

impl MetricsRow {
    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.method,
            self.seed,
            fmt4(self.acc),
            fmt4(self.bwt),
            fmt4(self.forg),
            fmt4(self.pla),
            fmt4(self.fwt),
            fmt4(self.ttime_min),
            fmt4(self.fps),
        )
    }
}

pub fn write_metrics_csv(rows: &[MetricsRow]) -> String {
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.to_csv_line());
        out.push('\n');
    }
    out
}

fn field_err(line: usize, what: &str) -> ConfigError {
    ConfigError { line: Some(line), msg: format!("metrics csv: {what}") }
}

/// Reader for our own metrics.csv (used by `compare` and the round-trip
/// tests).
pub fn parse_metrics_csv(text: &str) -> Result<Vec<MetricsRow>, ConfigError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == METRICS_HEADER => {}
        other => {
            return Err(field_err(1, &format!("bad header {:?}", other.map(|(_, h)| h))));
        }
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        let lineno = i + 1;
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 9 {
            return Err(field_err(lineno, &format!("expected 9 fields, got {}", f.len())));
        }
        let num = |s: &str, what: &str| -> Result<f64, ConfigError> {
            s.parse().map_err(|_| field_err(lineno, &format!("bad {what} {s:?}")))
        };
        rows.push(MetricsRow {
            method: f[0].to_string(),
            seed: f[1].parse().map_err(|_| field_err(lineno, &format!("bad seed {:?}", f[1])))?,
            acc: num(f[2], "acc")?,
            bwt: num(f[3], "bwt")?,
            forg: num(f[4], "forg")?,
            pla: num(f[5], "pla")?,
            fwt: num(f[6], "fwt")?,
            ttime_min: num(f[7], "ttime_min")?,
            fps: num(f[8], "fps")?,
        });
    }
    Ok(rows)
}

/// Markdown table from a header and pre-formatted rows.
pub fn markdown_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    out.push_str(&format!("| {} |\n", header.join(" | ")));
    out.push_str(&format!("|{}\n", "---|".repeat(header.len())));
    for row in rows {
        out.push_str(&format!("| {} |\n", row.join(" | ")));
    }
    out
}
