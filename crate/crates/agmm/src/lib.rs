//! Circular regression via angular Gaussian mixtures.
//!
//! An angular response is modeled as the wrap of an unobserved linear
//! response: `Θ = (Y mod 2π) - π` with `Y | X = x` Gaussian around a mean
//! function `μ(x)`. Conditioning on the integer turn count turns the
//! wrapped model into a finite mixture of linear regressions whose
//! component means are copies of `μ(x)` shifted by `(2k+1)π`. The crate
//! provides
//!
//! - a parametric maximum-likelihood fitter ([`fit_em`]) with BIC
//!   component-count selection ([`select_k`]),
//! - a kernel local-likelihood fitter for nonparametric `μ(·)`, `σ²(·)`,
//!   `r_k(·)` ([`fit_local_em`], [`tune`]),
//! - a conjugate Gibbs sampler for the parametric model ([`gibbs_sample`]),
//! - clustering-based initialization of the turn counts ([`initial_model`]),
//! - a sin/cos smoothing baseline ([`Smoother`]), and
//! - seeded synthetic generators with known ground truth ([`gen_example`]).
//!
//! ```
//! use agmm::{fit_em, initial_model, Basis, Dataset, EmOptions, InitOptions, wrap_to_circle};
//!
//! // A wrapped noisy line: theta = wrap(1 + 5x + e).
//! let xs: Vec<f64> = (0..60).map(|i| -1.0 + i as f64 / 30.0).collect();
//! let thetas = xs
//!     .iter()
//!     .map(|&x| wrap_to_circle(1.0 + 5.0 * x + 0.05 * (40.0 * x).sin()).unwrap())
//!     .collect();
//! let data = Dataset::from_scalar(xs, thetas).unwrap();
//!
//! let basis = Basis::polynomial(1, 1);
//! let init = initial_model(&data, 2, &basis, &InitOptions::default()).unwrap();
//! let (model, report) = fit_em(&data, init, &EmOptions::default()).unwrap();
//! assert!(report.converged);
//! assert_eq!(model.num_components(), 2);
//! assert!((model.beta[1] - 5.0).abs() < 0.1);
//! ```

mod angle;
mod basis;
mod dataset;
mod datagen;
mod em;
mod error;
mod gibbs;
mod init;
mod kernel;
mod likelihood;
mod linalg;
mod metrics;
mod model;
mod npem;
pub mod rng;
mod smoothing;

pub use angle::{unwrap, wrap_to_circle, Angle};
pub use basis::{Basis, BasisFn};
pub use dataset::{CsvLoad, Dataset};
pub use datagen::{
    bessel_ratio, example4_with_latent, gen_example, sample_von_mises, truth_grid, Example,
    GroundTruth,
};
pub use em::{
    e_step, fit_em, m_step, predict_mean, select_k, EmOptions, KCandidate, SIGMA2_FLOOR,
};
pub use error::{Error, Result};
pub use gibbs::{gibbs_sample, posterior_summary, GibbsDraw, GibbsTrace, PosteriorSummary, Priors};
pub use init::{
    assign_offsets, cluster_gap, density_cluster, init_parameters, initial_assignment,
    initial_model, ClusterAssignment, InitOptions, ZAssignment,
};
pub use kernel::{kernel_weight, Kernel, KernelShape};
pub use likelihood::{
    component_mean, gaussian_log_pdf, gaussian_pdf, log_sum_exp, mixture_loglik,
};
pub use metrics::{bic, mean_circular_error};
pub use model::{FitReport, ParametricAgmm, Responsibilities};
pub use npem::{
    fit_local_em, initial_local_model, interpolate, local_e_step, local_loglik, local_m_step,
    tune, GridSpec, Interpolated, NonparametricAgmm, TuneOptions,
};
pub use smoothing::{smooth_cv, smooth_fit, Smoother};
