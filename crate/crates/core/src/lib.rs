//! Support estimation with separating kernels and spectral regularization.
//!
//! Given i.i.d. samples from a distribution on ℝ^d, the support is
//! recovered as a superlevel set of the score
//!
//! ```text
//! F_n(x) = (1/n) K_xᵀ g_λ(K_n / n) K_x ∈ [0, 1],
//! ```
//!
//! where `K_n` is the Gram matrix of a completely separating kernel (Abel,
//! ℓ1-exponential) and `g_λ` a spectral filter (Tikhonov, spectral cut-off,
//! Landweber, kernel-PCA truncation). Points with `F_n(x) ≥ 1 − τ` are
//! declared inside the support.
//!
//! ```
//! use spectral_support::{fit, synth, FilterSpec, KernelSpec, Task};
//!
//! let train = synth::sample(&Task::Circle, 100, 7).unwrap();
//! let model = fit(
//!     train,
//!     KernelSpec::abel(0.5).unwrap(),
//!     FilterSpec::tikhonov(1e-3).unwrap(),
//! )
//! .unwrap();
//! let on = model.score(&spectral_support::Point::new(vec![1.0, 0.0]).unwrap()).unwrap();
//! let off = model.score(&spectral_support::Point::new(vec![0.0, 0.0]).unwrap()).unwrap();
//! assert!(on > off);
//! ```

pub mod dataset;
pub mod error;
pub mod estimator;
pub mod eval;
pub mod filters;
pub mod kernels;
pub mod oracles;
pub mod persist;
pub mod point;
pub mod report;
pub mod selection;
pub mod synth;
mod textfmt;

pub use error::{Error, ErrorClass, Result};
pub use estimator::{fit, predict_member, Algorithm, ScoreVector, SupportModel};
pub use filters::{decompose, FilterSpec, KpcaCut, SpectralDecomposition};
pub use kernels::{gram, GramMatrix, KernelSpec, ProductFactor, Separation};
pub use point::Point;
pub use synth::Task;
