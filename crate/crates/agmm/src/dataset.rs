//! Paired observations of real predictors and angular responses.

use std::fmt::Write as _;
use std::path::Path;

use crate::angle::Angle;
use crate::error::{Error, Result};

/// A sample `{(x_i, θ_i)}` of `p`-dimensional predictors and angles.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    xs: Vec<Vec<f64>>,
    thetas: Vec<Angle>,
    p: usize,
}

/// A dataset parsed from CSV, plus how many responses had to be wrapped
/// back into `[-π, π)`.
#[derive(Debug, Clone)]
pub struct CsvLoad {
    pub dataset: Dataset,
    pub wrapped_count: usize,
}

impl Dataset {
    pub fn new(xs: Vec<Vec<f64>>, thetas: Vec<Angle>) -> Result<Dataset> {
        if xs.is_empty() {
            return Err(Error::InvalidArgument("dataset must contain at least one point".into()));
        }
        if xs.len() != thetas.len() {
            return Err(Error::InvalidArgument(format!(
                "{} predictor rows but {} responses",
                xs.len(),
                thetas.len()
            )));
        }
        let p = xs[0].len();
        if p == 0 {
            return Err(Error::InvalidArgument("predictors must have dimension >= 1".into()));
        }
        for (i, x) in xs.iter().enumerate() {
            if x.len() != p {
                return Err(Error::InvalidArgument(format!(
                    "row {i} has dimension {} but row 0 has {p}",
                    x.len()
                )));
            }
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument(format!("row {i} has a non-finite predictor")));
            }
        }
        Ok(Dataset { xs, thetas, p })
    }

    /// Convenience constructor for scalar predictors.
    pub fn from_scalar(xs: Vec<f64>, thetas: Vec<Angle>) -> Result<Dataset> {
        Dataset::new(xs.into_iter().map(|x| vec![x]).collect(), thetas)
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        false // n >= 1 by construction
    }

    /// Predictor dimension `p`.
    pub fn dim(&self) -> usize {
        self.p
    }

    pub fn x(&self, i: usize) -> &[f64] {
        &self.xs[i]
    }

    pub fn theta(&self, i: usize) -> Angle {
        self.thetas[i]
    }

    pub fn xs(&self) -> &[Vec<f64>] {
        &self.xs
    }

    pub fn thetas(&self) -> &[Angle] {
        &self.thetas
    }

    /// The subset of rows selected by `keep(i)`; errors if none survive.
    pub fn filter(&self, mut keep: impl FnMut(usize) -> bool) -> Result<Dataset> {
        let mut xs = Vec::new();
        let mut thetas = Vec::new();
        for i in 0..self.len() {
            if keep(i) {
                xs.push(self.xs[i].clone());
                thetas.push(self.thetas[i]);
            }
        }
        Dataset::new(xs, thetas)
    }

    /// Serializes to the `x1,...,xp,theta` CSV format.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for j in 1..=self.p {
            let _ = write!(out, "x{j},");
        }
        out.push_str("theta\n");
        for i in 0..self.len() {
            for v in &self.xs[i] {
                let _ = write!(out, "{v},");
            }
            let _ = writeln!(out, "{}", self.thetas[i].radians());
        }
        out
    }

    /// Parses the `x1,...,xp,theta` CSV format.
    ///
    /// Responses outside `[-π, π)` are wrapped and counted rather than
    /// rejected.
    pub fn from_csv(text: &str) -> Result<CsvLoad> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::InvalidArgument("empty CSV".into()))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols.len() < 2 || cols[cols.len() - 1] != "theta" {
            return Err(Error::InvalidArgument(
                "CSV header must be x1,...,xp,theta".into(),
            ));
        }
        let p = cols.len() - 1;
        for (j, c) in cols[..p].iter().enumerate() {
            let expected = format!("x{}", j + 1);
            if *c != expected {
                return Err(Error::InvalidArgument(format!(
                    "CSV header column {} is '{c}', expected '{expected}'",
                    j + 1
                )));
            }
        }
        let mut xs = Vec::new();
        let mut thetas = Vec::new();
        let mut wrapped_count = 0usize;
        for (lineno, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != p + 1 {
                return Err(Error::InvalidArgument(format!(
                    "line {} has {} fields, expected {}",
                    lineno + 2,
                    fields.len(),
                    p + 1
                )));
            }
            let mut row = Vec::with_capacity(p);
            for f in &fields[..p] {
                let v: f64 = f.parse().map_err(|_| {
                    Error::InvalidArgument(format!("line {}: bad number '{f}'", lineno + 2))
                })?;
                row.push(v);
            }
            let raw: f64 = fields[p].parse().map_err(|_| {
                Error::InvalidArgument(format!("line {}: bad theta '{}'", lineno + 2, fields[p]))
            })?;
            if !(-std::f64::consts::PI..std::f64::consts::PI).contains(&raw) {
                wrapped_count += 1;
            }
            // Direction-preserving reduction: the column holds angles, not
            // latent responses.
            thetas.push(Angle::from_radians(raw)?);
            xs.push(row);
        }
        Ok(CsvLoad { dataset: Dataset::new(xs, thetas)?, wrapped_count })
    }

    pub fn write_csv(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_csv())
    }

    pub fn read_csv(path: &Path) -> Result<CsvLoad> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))?;
        Dataset::from_csv(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn angles(vals: &[f64]) -> Vec<Angle> {
        vals.iter().map(|&v| Angle::from_radians(v).unwrap()).collect()
    }

    #[test]
    fn csv_roundtrip_is_bit_faithful() {
        let data = Dataset::from_scalar(
            vec![0.123456789012345, -0.9, 0.5],
            angles(&[0.7, 1.1, 2.9]),
        )
        .unwrap();
        let text = data.to_csv();
        let back = Dataset::from_csv(&text).unwrap();
        assert_eq!(back.wrapped_count, 0);
        assert_eq!(back.dataset, data);
    }

    #[test]
    fn csv_wraps_out_of_range_theta() {
        let text = "x1,theta\n0.0,7.0\n0.5,0.3\n";
        let load = Dataset::from_csv(text).unwrap();
        assert_eq!(load.wrapped_count, 1);
        // 7.0 rad reduces to the same direction, 7.0 - 2π.
        let t = load.dataset.theta(0).radians();
        assert!((t - (7.0 - 2.0 * PI)).abs() < 1e-12);
        assert_eq!(load.dataset.theta(1).radians(), 0.3);
    }

    #[test]
    fn csv_rejects_bad_header() {
        assert!(Dataset::from_csv("a,b\n1,2\n").is_err());
        assert!(Dataset::from_csv("theta\n1\n").is_err());
    }

    #[test]
    fn mismatched_rows_rejected() {
        let err = Dataset::new(vec![vec![0.0], vec![1.0, 2.0]], angles(&[0.1, 0.2]));
        assert!(err.is_err());
    }
}
