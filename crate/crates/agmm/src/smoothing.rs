//! Nonparametric circular smoothing: Nadaraya–Watson estimates of
//! `E[sin Θ | x]` and `E[cos Θ | x]` combined through the arctangent.

use serde::{Deserialize, Serialize};

use crate::angle::Angle;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::metrics::mean_circular_error;

/// A fitted smoother; prediction is `atan2(ŝ(x), ĉ(x))` where `ŝ` and `ĉ`
/// are local-constant kernel regressions of `sin θ` and `cos θ`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Smoother {
    xs: Vec<Vec<f64>>,
    sin_theta: Vec<f64>,
    cos_theta: Vec<f64>,
    kernel: Kernel,
    degenerate_as_zero: bool,
}

/// Builds a smoother over the sample; needs at least two points.
pub fn smooth_fit(data: &Dataset, kernel: Kernel) -> Result<Smoother> {
    if data.len() < 2 {
        return Err(Error::InvalidArgument("smoothing needs at least two points".into()));
    }
    Ok(Smoother {
        xs: data.xs().to_vec(),
        sin_theta: data.thetas().iter().map(|t| t.radians().sin()).collect(),
        cos_theta: data.thetas().iter().map(|t| t.radians().cos()).collect(),
        kernel,
        degenerate_as_zero: false,
    })
}

impl Smoother {
    /// Resolve exact sin/cos cancellation to angle 0 instead of erroring.
    pub fn with_degenerate_as_zero(mut self, allow: bool) -> Self {
        self.degenerate_as_zero = allow;
        self
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    /// Kernel-weighted `(ŝ(x), ĉ(x))`.
    pub fn components(&self, x: &[f64]) -> Result<(f64, f64)> {
        if x.len() != self.xs[0].len() {
            return Err(Error::InvalidArgument(format!(
                "query has dimension {}, data has {}",
                x.len(),
                self.xs[0].len()
            )));
        }
        let mut wsum = 0.0;
        let mut s = 0.0;
        let mut c = 0.0;
        for i in 0..self.xs.len() {
            let d = self.xs[i]
                .iter()
                .zip(x)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            let w = self.kernel.weight(d);
            wsum += w;
            s += w * self.sin_theta[i];
            c += w * self.cos_theta[i];
        }
        if !(wsum > 0.0) {
            return Err(Error::NoSupport);
        }
        Ok((s / wsum, c / wsum))
    }

    /// Predicted circular mean at `x`.
    pub fn predict(&self, x: &[f64]) -> Result<Angle> {
        let (s, c) = self.components(x)?;
        if s.hypot(c) < 1e-12 {
            if self.degenerate_as_zero {
                return Angle::from_radians(0.0);
            }
            return Err(Error::DegenerateDirection);
        }
        Angle::from_radians(s.atan2(c))
    }
}

/// Selects the bandwidth by `folds`-fold cross validation on held-out
/// circular error; ties prefer the larger bandwidth. Folds are assigned
/// round-robin by index.
pub fn smooth_cv(data: &Dataset, h_range: &[f64], folds: usize, kernel_of: impl Fn(f64) -> Result<Kernel>) -> Result<f64> {
    if h_range.is_empty() {
        return Err(Error::InvalidArgument("empty bandwidth range".into()));
    }
    if folds < 2 {
        return Err(Error::InvalidArgument("cross validation needs at least 2 folds".into()));
    }
    let mut hs = h_range.to_vec();
    hs.sort_by(|a, b| a.partial_cmp(b).expect("finite bandwidths"));
    hs.dedup();
    if hs.len() == 1 {
        return Ok(hs[0]);
    }
    let mut best: Option<(f64, f64)> = None;
    for &h in &hs {
        let kernel = kernel_of(h)?;
        let mut scores = Vec::with_capacity(folds);
        let mut failed = false;
        for fold in 0..folds {
            let train = match data.filter(|i| i % folds != fold) {
                Ok(d) => d,
                Err(_) => {
                    failed = true;
                    break;
                }
            };
            let test = match data.filter(|i| i % folds == fold) {
                Ok(d) => d,
                Err(_) => continue,
            };
            let smoother = match smooth_fit(&train, kernel) {
                Ok(s) => s,
                Err(_) => {
                    failed = true;
                    break;
                }
            };
            let mut preds = Vec::with_capacity(test.len());
            let mut ok = true;
            for i in 0..test.len() {
                match smoother.predict(test.x(i)) {
                    Ok(a) => preds.push(a),
                    Err(_) => {
                        ok = false;
                        break;
                    }
                }
            }
            if !ok {
                failed = true;
                break;
            }
            scores.push(mean_circular_error(test.thetas(), &preds)?);
        }
        if failed || scores.is_empty() {
            continue;
        }
        let score = scores.iter().sum::<f64>() / scores.len() as f64;
        // `<=` so equal scores prefer the larger bandwidth.
        if best.map_or(true, |(_, b)| score <= b) {
            best = Some((h, score));
        }
    }
    match best {
        Some((h, _)) => Ok(h),
        None => Err(Error::NoSupport),
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
    fn constant_data_predicts_the_constant() {
        let data =
            Dataset::from_scalar(vec![0.0, 0.5, 1.0], angles(&[PI / 2.0, PI / 2.0, PI / 2.0]))
                .unwrap();
        let s = smooth_fit(&data, Kernel::gaussian(0.3).unwrap()).unwrap();
        for x in [-1.0, 0.2, 3.0] {
            let p = s.predict(&[x]).unwrap().radians();
            assert!((p - PI / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn huge_bandwidth_averages_everything() {
        let thetas = [0.1, 0.7, -0.4, 1.2];
        let data = Dataset::from_scalar(vec![0.0, 1.0, 2.0, 3.0], angles(&thetas)).unwrap();
        let s = smooth_fit(&data, Kernel::gaussian(1e9).unwrap()).unwrap();
        let (sh, ch) = s.components(&[0.5]).unwrap();
        let sm = thetas.iter().map(|t| t.sin()).sum::<f64>() / 4.0;
        let cm = thetas.iter().map(|t| t.cos()).sum::<f64>() / 4.0;
        assert!((sh - sm).abs() < 1e-9);
        assert!((ch - cm).abs() < 1e-9);
    }

    #[test]
    fn tiny_bandwidth_interpolates() {
        let thetas = [0.3, -0.9, 1.8];
        let data = Dataset::from_scalar(vec![0.0, 1.0, 2.0], angles(&thetas)).unwrap();
        let s = smooth_fit(&data, Kernel::gaussian(0.01).unwrap()).unwrap();
        for (i, t) in thetas.iter().enumerate() {
            let p = s.predict(&[i as f64]).unwrap().radians();
            assert!((p - t).abs() < 1e-9);
        }
    }

    #[test]
    fn equal_components_give_quarter_turn() {
        // All thetas at π/4: s = c > 0 at every query point.
        let data = Dataset::from_scalar(vec![0.0, 1.0], angles(&[PI / 4.0, PI / 4.0])).unwrap();
        let s = smooth_fit(&data, Kernel::gaussian(0.5).unwrap()).unwrap();
        assert!((s.predict(&[0.5]).unwrap().radians() - PI / 4.0).abs() < 1e-12);
    }

    #[test]
    fn no_support_under_triangular_kernel() {
        let data = Dataset::from_scalar(vec![0.0, 0.1], angles(&[0.2, 0.4])).unwrap();
        let s = smooth_fit(&data, Kernel::triangular(0.05).unwrap()).unwrap();
        assert_eq!(s.predict(&[5.0]).unwrap_err(), Error::NoSupport);
    }

    #[test]
    fn antipodal_cancellation_is_degenerate() {
        let data =
            Dataset::from_scalar(vec![0.0, 0.0], angles(&[0.3, 0.3 - PI])).unwrap();
        let s = smooth_fit(&data, Kernel::gaussian(1.0).unwrap()).unwrap();
        assert_eq!(s.predict(&[0.0]).unwrap_err(), Error::DegenerateDirection);
        let zeroed = s.with_degenerate_as_zero(true);
        assert_eq!(zeroed.predict(&[0.0]).unwrap().radians(), 0.0);
    }

    #[test]
    fn rotation_equivariance() {
        let thetas = [0.4, -1.1, 2.0, 0.9, -2.6];
        let xs = vec![0.0, 0.5, 1.0, 1.5, 2.0];
        let delta = 1.234;
        let data = Dataset::from_scalar(xs.clone(), angles(&thetas)).unwrap();
        let rotated_thetas: Vec<f64> = thetas.iter().map(|t| t + delta).collect();
        let rotated = Dataset::from_scalar(xs, angles(&rotated_thetas)).unwrap();
        let kernel = Kernel::triangular(1.5).unwrap();
        let s0 = smooth_fit(&data, kernel).unwrap();
        let s1 = smooth_fit(&rotated, kernel).unwrap();
        for x in [0.1, 0.8, 1.9] {
            let a = s0.predict(&[x]).unwrap().radians();
            let b = s1.predict(&[x]).unwrap().radians();
            let diff = (b - a - delta).rem_euclid(2.0 * PI);
            let wrapped = diff.min(2.0 * PI - diff);
            assert!(wrapped < 1e-10, "x = {x}: {wrapped}");
        }
    }

    #[test]
    fn duplication_invariance() {
        let thetas = [0.4, -1.1, 2.0];
        let xs = vec![0.0, 1.0, 2.0];
        let data = Dataset::from_scalar(xs.clone(), angles(&thetas)).unwrap();
        let mut xs2 = xs.clone();
        xs2.extend(xs);
        let mut t2 = thetas.to_vec();
        t2.extend(thetas);
        let doubled = Dataset::from_scalar(xs2, angles(&t2)).unwrap();
        let kernel = Kernel::gaussian(0.7).unwrap();
        let s0 = smooth_fit(&data, kernel).unwrap();
        let s1 = smooth_fit(&doubled, kernel).unwrap();
        for x in [0.2, 1.4] {
            let a = s0.predict(&[x]).unwrap().radians();
            let b = s1.predict(&[x]).unwrap().radians();
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn component_norm_is_bounded() {
        let thetas = [0.4, -1.1, 2.0, 2.9, -0.3];
        let data =
            Dataset::from_scalar(vec![0.0, 0.5, 1.0, 1.5, 2.0], angles(&thetas)).unwrap();
        let s = smooth_fit(&data, Kernel::gaussian(0.4).unwrap()).unwrap();
        for j in 0..40 {
            let x = -0.5 + j as f64 * 0.08;
            let (sh, ch) = s.components(&[x]).unwrap();
            assert!(sh * sh + ch * ch <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn cv_singleton_range() {
        let data = Dataset::from_scalar(
            (0..20).map(|i| i as f64 * 0.1).collect(),
            angles(&(0..20).map(|i| 0.1 * i as f64).collect::<Vec<_>>()),
        )
        .unwrap();
        let h = smooth_cv(&data, &[0.4], 5, Kernel::triangular).unwrap();
        assert_eq!(h, 0.4);
    }

    #[test]
    fn cv_prefers_sensible_bandwidth() {
        // Noisy sine signal: near-interpolation (tiny h) reproduces the
        // noise and must lose to a moderate bandwidth.
        use crate::rng::rng_from_seed;
        use rand::Rng as _;
        let mut rng = rng_from_seed(14);
        let mut xs = Vec::new();
        let mut ts = Vec::new();
        for _ in 0..80 {
            let x: f64 = rng.gen_range(-1.0..1.0);
            xs.push(x);
            ts.push(1.2 * (2.0 * x).sin() + rng.gen_range(-0.5..0.5));
        }
        let data = Dataset::from_scalar(xs, angles(&ts)).unwrap();
        let h = smooth_cv(&data, &[0.002, 0.2, 0.5], 5, Kernel::gaussian).unwrap();
        assert!(h > 0.002);
    }
}
