//! Seeded synthetic generators with known ground truth.
//!
//! Four scalar-predictor families: two wrapped lines of different slopes,
//! an arctangent mean, and a wrapped Gaussian whose latent mean fits in
//! `[0, 2π]` but whose noise pushes samples across the wrap boundary.

use std::f64::consts::PI;

use rand::Rng as _;

use crate::angle::{wrap_to_circle, Angle};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, Rng};

/// Draws one von Mises variate by the Best–Fisher rejection method.
///
/// Returns the draw together with the number of proposals consumed.
fn von_mises_draw(omega: f64, kappa: f64, rng: &mut Rng) -> (f64, usize) {
    if kappa == 0.0 {
        return (rng.gen_range(-PI..PI), 1);
    }
    let tau = 1.0 + (1.0 + 4.0 * kappa * kappa).sqrt();
    let rho = (tau - (2.0 * tau).sqrt()) / (2.0 * kappa);
    let r = (1.0 + rho * rho) / (2.0 * rho);
    let mut proposals = 0;
    let f = loop {
        proposals += 1;
        let u1: f64 = rng.gen();
        let z = (PI * u1).cos();
        let f = (1.0 + r * z) / (r + z);
        let c = kappa * (r - f);
        let u2: f64 = rng.gen();
        if c * (2.0 - c) - u2 > 0.0 || (c / u2).ln() + 1.0 - c >= 0.0 {
            break f;
        }
    };
    let u3: f64 = rng.gen();
    let angle = if u3 > 0.5 { omega + f.acos() } else { omega - f.acos() };
    (angle, proposals)
}

pub(crate) fn sample_von_mises_counted(
    omega: Angle,
    kappa: f64,
    n: usize,
    seed: u64,
) -> Result<(Vec<Angle>, usize)> {
    if kappa < 0.0 || !kappa.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "concentration must be nonnegative, got {kappa}"
        )));
    }
    if n < 1 {
        return Err(Error::InvalidArgument("need at least one draw".into()));
    }
    let mut rng = rng_from_seed(seed);
    let mut out = Vec::with_capacity(n);
    let mut proposals = 0;
    for _ in 0..n {
        let (v, p) = von_mises_draw(omega.radians(), kappa, &mut rng);
        proposals += p;
        out.push(Angle::from_radians(v)?);
    }
    Ok((out, proposals))
}

/// I.i.d. draws from `VM(ω, κ)`, wrapped to `[-π, π)`.
///
/// `κ = 0` degenerates to the uniform distribution on the circle.
pub fn sample_von_mises(omega: Angle, kappa: f64, n: usize, seed: u64) -> Result<Vec<Angle>> {
    sample_von_mises_counted(omega, kappa, n, seed).map(|(draws, _)| draws)
}

/// The Bessel ratio `I₁(κ)/I₀(κ)`, the mean resultant length of `VM(·, κ)`.
///
/// Both series are summed directly with terms dropped below 1e-16 relative
/// accuracy; κ above 500 would overflow the unscaled terms.
pub fn bessel_ratio(kappa: f64) -> Result<f64> {
    if !(kappa > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "concentration must be positive, got {kappa}"
        )));
    }
    if kappa > 500.0 {
        return Err(Error::OutOfRange(format!(
            "bessel_ratio supports kappa <= 500, got {kappa}"
        )));
    }
    let x2 = kappa * kappa / 4.0;
    // I0: term_m = (κ/2)^{2m} / (m!)²
    let mut i0 = 0.0;
    let mut term = 1.0;
    let mut m = 0u32;
    loop {
        i0 += term;
        m += 1;
        term *= x2 / ((m as f64) * (m as f64));
        if term < 1e-16 * i0 {
            i0 += term;
            break;
        }
    }
    // I1: term_m = (κ/2)^{2m+1} / (m! (m+1)!)
    let mut i1 = 0.0;
    let mut term = kappa / 2.0;
    let mut m = 0u32;
    loop {
        i1 += term;
        m += 1;
        term *= x2 / ((m as f64) * (m as f64 + 1.0));
        if term < 1e-16 * i1 {
            i1 += term;
            break;
        }
    }
    Ok(i1 / i0)
}

/// The four synthetic families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Example {
    /// `ω(x) = 0.1 + arctan(5x)`, `VM(ω, 8)`, n = 80.
    Two,
    /// `ω(x) = 0.1 + 5x`, `VM(ω, 8)`, n = 160.
    Three,
    /// Wrapped Gaussian with an arc-trig mean and `σ² = 0.7`, n = 300.
    Four,
    /// `ω(x) = 0.1 + 8x`, `VM(ω, 8)`, n = 160.
    Five,
}

impl Example {
    pub fn from_id(id: u8) -> Result<Example> {
        match id {
            2 => Ok(Example::Two),
            3 => Ok(Example::Three),
            4 => Ok(Example::Four),
            5 => Ok(Example::Five),
            other => Err(Error::InvalidArgument(format!(
                "unknown example {other}; expected 2, 3, 4 or 5"
            ))),
        }
    }

    pub fn id(self) -> u8 {
        match self {
            Example::Two => 2,
            Example::Three => 3,
            Example::Four => 4,
            Example::Five => 5,
        }
    }

    /// Sample size of the family.
    pub fn sample_size(self) -> usize {
        match self {
            Example::Two => 80,
            Example::Three => 160,
            Example::Four => 300,
            Example::Five => 160,
        }
    }

    /// Unwrapped latent mean at `x`.
    pub fn latent_mean(self, x: f64) -> f64 {
        match self {
            Example::Two => 0.1 + (5.0 * x).atan(),
            Example::Three => 0.1 + 5.0 * x,
            Example::Four => {
                ((2.0 * x).atan() + (x / 2.0).asin() - x.asin() + (x / 3.0).acos() - PI / 2.0)
                    * 7.85
                    + PI
            }
            Example::Five => 0.1 + 8.0 * x,
        }
    }
}

/// The generating mean function and noise level of a synthetic family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundTruth {
    pub example: Example,
    /// Reference variance: the latent `σ²` for the wrapped Gaussian family,
    /// and the circular variance `1 - I₁(κ)/I₀(κ)` for the von Mises ones.
    pub sigma2: f64,
}

impl GroundTruth {
    pub fn new(example: Example) -> GroundTruth {
        let sigma2 = match example {
            Example::Four => 0.7,
            _ => 1.0 - bessel_ratio(8.0).expect("kappa = 8 is in range"),
        };
        GroundTruth { example, sigma2 }
    }

    /// Wrapped true mean at `x`.
    ///
    /// The von Mises families state their mean as an angle, so it reduces
    /// direction-preservingly; the wrapped Gaussian family states a latent
    /// mean, which goes through the modulo link.
    pub fn mean_at(&self, x: f64) -> Angle {
        let m = self.example.latent_mean(x);
        match self.example {
            Example::Four => wrap_to_circle(m).expect("latent means are finite"),
            _ => Angle::from_radians(m).expect("angular means are finite"),
        }
    }
}

/// Generates one seeded replication of a synthetic family.
pub fn gen_example(example: Example, seed: u64) -> Result<(Dataset, GroundTruth)> {
    let truth = GroundTruth::new(example);
    match example {
        Example::Four => {
            let (data, _) = example4_with_latent(seed)?;
            Ok((data, truth))
        }
        _ => {
            let n = example.sample_size();
            let mut rng = rng_from_seed(seed);
            let mut xs = Vec::with_capacity(n);
            let mut thetas = Vec::with_capacity(n);
            for _ in 0..n {
                let x: f64 = rng.gen_range(-1.0..1.0);
                let omega = example.latent_mean(x);
                let (draw, _) = von_mises_draw(omega, 8.0, &mut rng);
                xs.push(x);
                thetas.push(Angle::from_radians(draw)?);
            }
            Ok((Dataset::from_scalar(xs, thetas)?, truth))
        }
    }
}

/// The wrapped Gaussian family, returning the latent responses as well.
///
/// The latent mean stays inside `[0, 2π]`, so every wrap crossing in the
/// sample is caused by the noise pushing `y` outside that band.
pub fn example4_with_latent(seed: u64) -> Result<(Dataset, Vec<f64>)> {
    let n = Example::Four.sample_size();
    let sigma = 0.7f64.sqrt();
    let mut rng = rng_from_seed(seed);
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    let mut thetas = Vec::with_capacity(n);
    for _ in 0..n {
        let x: f64 = rng.gen_range(-1.0..1.0);
        let eps: f64 = rng.sample(rand_distr::StandardNormal);
        let y = Example::Four.latent_mean(x) + sigma * eps;
        xs.push(x);
        ys.push(y);
        thetas.push(wrap_to_circle(y)?);
    }
    Ok((Dataset::from_scalar(xs, thetas)?, ys))
}

/// Seeded uniform test locations on `(-1, 1)` paired with the wrapped truth.
pub fn truth_grid(truth: &GroundTruth, t: usize, seed: u64) -> Result<Vec<(f64, Angle)>> {
    if t < 1 {
        return Err(Error::InvalidArgument("need at least one test location".into()));
    }
    let mut rng = rng_from_seed(seed);
    Ok((0..t)
        .map(|_| {
            let x: f64 = rng.gen_range(-1.0..1.0);
            (x, truth.mean_at(x))
        })
        .collect())
}
