//! Doc-tested chapters of the guide in `book/`.
//!
//! mdbook cannot run chapter code blocks against crate dependencies, so
//! each chapter is included here as module documentation and
//! `cargo test --doc` exercises every snippet. One module per chapter
//! keeps failures attributable to their source file.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/circular-model.md")]
pub mod circular_model {}

#[doc = include_str!("../../../book/src/parametric-em.md")]
pub mod parametric_em {}

#[doc = include_str!("../../../book/src/initialization.md")]
pub mod initialization {}

#[doc = include_str!("../../../book/src/nonparametric-em.md")]
pub mod nonparametric_em {}

#[doc = include_str!("../../../book/src/gibbs.md")]
pub mod gibbs {}

#[doc = include_str!("../../../book/src/smoothing-baseline.md")]
pub mod smoothing_baseline {}

#[doc = include_str!("../../../book/src/data-and-benchmarks.md")]
pub mod data_and_benchmarks {}
