//! Strict CSV readers for the three data formats. Blank fields, non-numeric
//! values, NaN and ragged rows are hard errors; nothing is imputed.

use super::PanelData;
use crate::error::{Error, Result};
use std::collections::BTreeMap;
use std::path::Path;

fn split_line(line: &str) -> Vec<String> {
    line.split(',').map(|f| f.trim().to_string()).collect()
}

fn parse_field(raw: &str, line_no: usize, col: &str) -> Result<f64> {
    if raw.is_empty() {
        return Err(Error::Data(format!("line {line_no}: empty field in column `{col}`")));
    }
    let v: f64 = raw
        .parse()
        .map_err(|_| Error::Data(format!("line {line_no}: `{raw}` in column `{col}` is not a number")))?;
    if !v.is_finite() {
        return Err(Error::Data(format!("line {line_no}: non-finite value in column `{col}`")));
    }
    Ok(v)
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Data(format!("cannot read {}: {e}", path.display())))?;
    let lines: Vec<String> = text.lines().map(|l| l.to_string()).filter(|l| !l.trim().is_empty()).collect();
    if lines.len() < 2 {
        return Err(Error::Data(format!("{}: need a header and at least one row", path.display())));
    }
    Ok(lines)
}

/// A univariate series: single column named `x`.
pub fn read_series(path: &Path) -> Result<Vec<f64>> {
    let lines = read_lines(path)?;
    let header = split_line(&lines[0]);
    if header != ["x"] {
        return Err(Error::Data(format!(
            "{}: expected header `x`, got `{}`",
            path.display(),
            lines[0]
        )));
    }
    let mut out = Vec::with_capacity(lines.len() - 1);
    for (idx, line) in lines.iter().enumerate().skip(1) {
        let fields = split_line(line);
        if fields.len() != 1 {
            return Err(Error::Data(format!("line {}: expected 1 field, got {}", idx + 1, fields.len())));
        }
        out.push(parse_field(&fields[0], idx + 1, "x")?);
    }
    Ok(out)
}

/// Survival data: a `time` column followed by covariate columns. Returns
/// event times and covariate rows with an intercept column prepended.
pub fn read_survival(path: &Path) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let lines = read_lines(path)?;
    let header = split_line(&lines[0]);
    if header.first().map(|s| s.as_str()) != Some("time") {
        return Err(Error::Data(format!(
            "{}: first column must be `time`, got `{}`",
            path.display(),
            lines[0]
        )));
    }
    let width = header.len();
    let mut times = Vec::new();
    let mut covs = Vec::new();
    for (idx, line) in lines.iter().enumerate().skip(1) {
        let fields = split_line(line);
        if fields.len() != width {
            return Err(Error::Data(format!(
                "line {}: expected {} fields, got {}",
                idx + 1,
                width,
                fields.len()
            )));
        }
        times.push(parse_field(&fields[0], idx + 1, "time")?);
        let mut row = vec![1.0];
        for (f, name) in fields[1..].iter().zip(&header[1..]) {
            row.push(parse_field(f, idx + 1, name)?);
        }
        covs.push(row);
    }
    Ok((times, covs))
}

/// Balanced panel data: columns `id`, `t`, `y`, then covariates. Rows may
/// arrive in any order; they are arranged individual-major with periods
/// sorted. Missing cells or duplicates make the panel unbalanced.
pub fn read_panel(path: &Path) -> Result<PanelData> {
    let lines = read_lines(path)?;
    let header = split_line(&lines[0]);
    if header.len() < 3 || header[0] != "id" || header[1] != "t" || header[2] != "y" {
        return Err(Error::Data(format!(
            "{}: expected header starting `id,t,y`, got `{}`",
            path.display(),
            lines[0]
        )));
    }
    let width = header.len();
    // id and period labels are kept as strings; only y and covariates must be numeric
    let mut cells: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
    let mut ids: Vec<String> = Vec::new();
    let mut periods: Vec<String> = Vec::new();
    for (idx, line) in lines.iter().enumerate().skip(1) {
        let fields = split_line(line);
        if fields.len() != width {
            return Err(Error::Data(format!(
                "line {}: expected {} fields, got {}",
                idx + 1,
                width,
                fields.len()
            )));
        }
        let (id, t) = (fields[0].clone(), fields[1].clone());
        if id.is_empty() || t.is_empty() {
            return Err(Error::Data(format!("line {}: empty id or period label", idx + 1)));
        }
        let mut row = Vec::with_capacity(width - 2);
        for (f, name) in fields[2..].iter().zip(&header[2..]) {
            row.push(parse_field(f, idx + 1, name)?);
        }
        if cells.insert((id.clone(), t.clone()), row).is_some() {
            return Err(Error::UnbalancedPanel(format!("duplicate cell ({id}, {t})")));
        }
        if !ids.contains(&id) {
            ids.push(id);
        }
        if !periods.contains(&t) {
            periods.push(t);
        }
    }
    ids.sort();
    periods.sort();
    let (n, t) = (ids.len(), periods.len());
    if cells.len() != n * t {
        return Err(Error::UnbalancedPanel(format!(
            "{} cells for {} individuals x {} periods",
            cells.len(),
            n,
            t
        )));
    }
    let mut y = Vec::with_capacity(n * t);
    let mut x = Vec::with_capacity(n * t);
    for id in &ids {
        for period in &periods {
            let row = cells
                .get(&(id.clone(), period.clone()))
                .ok_or_else(|| Error::UnbalancedPanel(format!("missing cell ({id}, {period})")))?;
            y.push(row[0]);
            let mut covs = vec![1.0];
            covs.extend_from_slice(&row[1..]);
            x.push(covs);
        }
    }
    PanelData::new(n, t, y, x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn series_round_trip() {
        let f = write_temp("x\n1.5\n-2.25\n0.0\n");
        assert_eq!(read_series(f.path()).unwrap(), vec![1.5, -2.25, 0.0]);
    }

    #[test]
    fn series_rejects_bad_header_and_nan() {
        let f = write_temp("value\n1.0\n");
        assert!(read_series(f.path()).is_err());
        let f = write_temp("x\nNaN\n");
        assert!(read_series(f.path()).is_err());
        let f = write_temp("x\n\n1.0\n");
        // blank lines are skipped, not treated as data
        assert_eq!(read_series(f.path()).unwrap(), vec![1.0]);
        let f = write_temp("x\n1.0,2.0\n");
        assert!(read_series(f.path()).is_err());
    }

    #[test]
    fn survival_prepends_intercept() {
        let f = write_temp("time,z\n2.0,0.3\n1.0,0.7\n");
        let (times, covs) = read_survival(f.path()).unwrap();
        assert_eq!(times, vec![2.0, 1.0]);
        assert_eq!(covs, vec![vec![1.0, 0.3], vec![1.0, 0.7]]);
    }

    #[test]
    fn survival_rejects_ragged_rows() {
        let f = write_temp("time,z\n2.0,0.3\n1.0\n");
        assert!(read_survival(f.path()).is_err());
    }

    #[test]
    fn panel_reorders_and_balances() {
        let f = write_temp("id,t,y,z\nb,2,4.0,0.4\na,1,1.0,0.1\nb,1,3.0,0.3\na,2,2.0,0.2\n");
        let p = read_panel(f.path()).unwrap();
        assert_eq!((p.n_individuals, p.n_periods), (2, 2));
        // individual-major with sorted labels: (a,1), (a,2), (b,1), (b,2)
        assert_eq!(p.y, vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(p.x[0], vec![1.0, 0.1]);
    }

    #[test]
    fn panel_rejects_missing_cell_and_duplicate() {
        let f = write_temp("id,t,y\na,1,1.0\na,2,2.0\nb,1,3.0\n");
        assert!(matches!(read_panel(f.path()), Err(Error::UnbalancedPanel(_))));
        let f = write_temp("id,t,y\na,1,1.0\na,1,2.0\nb,1,3.0\nb,2,1.0\na,2,0.0\n");
        assert!(matches!(read_panel(f.path()), Err(Error::UnbalancedPanel(_))));
    }
}
