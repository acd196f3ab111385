//! Tabular experiment outputs: CSV (machine contract) and aligned markdown
//! (human mirror).

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RejectionRow {
    pub dgp: String,
    pub n: usize,
    pub test: String,
    pub level: f64,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RejectionTable {
    pub rows: Vec<RejectionRow>,
    pub replications: usize,
    pub failures: usize,
}

impl RejectionTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("dgp,n,test,level,rate,failures\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.dgp, r.n, r.test, r.level, r.rate, self.failures
            ));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<RejectionTable> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Data("empty table".into()))?;
        if header != "dgp,n,test,level,rate,failures" {
            return Err(Error::Data(format!("unexpected header `{header}`")));
        }
        let mut rows = Vec::new();
        let mut failures = 0;
        for (i, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 6 {
                return Err(Error::Data(format!("row {}: expected 6 fields", i + 2)));
            }
            let parse_err = |c: &str| Error::Data(format!("row {}: bad {c}", i + 2));
            rows.push(RejectionRow {
                dgp: f[0].to_string(),
                n: f[1].parse().map_err(|_| parse_err("n"))?,
                test: f[2].to_string(),
                level: f[3].parse().map_err(|_| parse_err("level"))?,
                rate: f[4].parse().map_err(|_| parse_err("rate"))?,
            });
            failures = f[5].parse().map_err(|_| parse_err("failures"))?;
        }
        Ok(RejectionTable { rows, replications: 0, failures })
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::from("| dgp | n | test | level | rate |\n|---|---|---|---|---|\n");
        for r in &self.rows {
            out.push_str(&format!(
                "| {} | {} | {} | {:.2} | {:.4} |\n",
                r.dgp, r.n, r.test, r.level, r.rate
            ));
        }
        out.push_str(&format!(
            "\n{} replications, {} failures excluded\n",
            self.replications, self.failures
        ));
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerCurve {
    pub grid: Vec<f64>,
    pub tests: Vec<String>,
    /// One row of per-test rates for each grid point.
    pub rates: Vec<Vec<f64>>,
    pub n: usize,
    pub replications: usize,
    pub level: f64,
    pub failures: usize,
}

impl PowerCurve {
    /// Rates of one test along the grid.
    pub fn series(&self, test: &str) -> Option<Vec<f64>> {
        let idx = self.tests.iter().position(|t| t == test)?;
        Some(self.rates.iter().map(|r| r[idx]).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("grid,test,rate\n");
        for (g, row) in self.grid.iter().zip(&self.rates) {
            for (t, rate) in self.tests.iter().zip(row) {
                out.push_str(&format!("{},{},{}\n", g, t, rate));
            }
        }
        out
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::from("| grid |");
        for t in &self.tests {
            out.push_str(&format!(" {} |", t));
        }
        out.push_str("\n|---|");
        out.push_str(&"---|".repeat(self.tests.len()));
        out.push('\n');
        for (g, row) in self.grid.iter().zip(&self.rates) {
            out.push_str(&format!("| {} |", g));
            for rate in row {
                out.push_str(&format!(" {:.4} |", rate));
            }
            out.push('\n');
        }
        out.push_str(&format!(
            "\nn = {}, {} replications per grid point, level {:.2}, {} failures excluded\n",
            self.n, self.replications, self.level, self.failures
        ));
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestCalibration {
    pub test: String,
    pub df: usize,
    pub draws: usize,
    pub q90: f64,
    pub q95: f64,
    pub q99: f64,
    pub ks_distance: f64,
    pub ks_band_5pct: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationSummary {
    pub tests: Vec<TestCalibration>,
    pub replications: usize,
    pub failures: usize,
}

impl CalibrationSummary {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for t in &self.tests {
            let verdict = if t.ks_distance < t.ks_band_5pct { "within" } else { "OUTSIDE" };
            out.push_str(&format!(
                "{}: df={} draws={} q90={:.4} q95={:.4} q99={:.4} ks={:.4} ({} 5% band {:.4})\n",
                t.test, t.df, t.draws, t.q90, t.q95, t.q99, t.ks_distance, verdict, t.ks_band_5pct
            ));
        }
        out.push_str(&format!(
            "{} replications, {} failures excluded\n",
            self.replications, self.failures
        ));
        out
    }
}
