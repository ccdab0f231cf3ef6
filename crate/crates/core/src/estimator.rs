//! The regularized support score
//!
//! ```text
//! F_n(x) = (1/n) K_xᵀ g(K_n / n) K_x
//! ```
//!
//! and the set estimate `X_n = { x : F_n(x) ≥ 1 − τ }`.
//!
//! Three interchangeable algorithms compute the same score: functional
//! calculus on the cached eigendecomposition (any filter), a Cholesky solve
//! of `(K_n + nλ I) α = K_x` (Tikhonov), and the Landweber recursion
//! `α ← α + (K_x − K_n α)/n` (Landweber).

use std::fmt;
use std::ops::Deref;
use std::str::FromStr;
use std::sync::OnceLock;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::filters::{decompose, FilterSpec, SpectralDecomposition};
use crate::kernels::{cross_gram, gram, kernel_vector, GramMatrix, KernelSpec};
use crate::point::{self, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Spectral,
    Cholesky,
    Landweber,
}

impl Algorithm {
    /// Direct solve for a single Tikhonov fit, the recursion for
    /// Landweber, eigendecomposition otherwise.
    pub fn default_for(filter: &FilterSpec) -> Self {
        match filter {
            FilterSpec::Tikhonov { .. } => Algorithm::Cholesky,
            FilterSpec::Landweber { .. } => Algorithm::Landweber,
            _ => Algorithm::Spectral,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Spectral => "spectral",
            Algorithm::Cholesky => "cholesky",
            Algorithm::Landweber => "landweber",
        })
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spectral" => Ok(Algorithm::Spectral),
            "cholesky" => Ok(Algorithm::Cholesky),
            "landweber" => Ok(Algorithm::Landweber),
            _ => Err(Error::param(format!("unknown algorithm `{s}`"))),
        }
    }
}

/// Scores of a batch of test points, each in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector(Vec<f64>);

impl ScoreVector {
    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for ScoreVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// A fitted support estimator. Immutable once built.
#[derive(Debug)]
pub struct SupportModel {
    points: Vec<Point>,
    dim: usize,
    kernel: KernelSpec,
    filter: FilterSpec,
    resolved: FilterSpec,
    algorithm: Algorithm,
    tau: f64,
    gram: GramMatrix,
    decomposition: OnceLock<SpectralDecomposition>,
    cholesky: Option<Cholesky<f64, Dyn>>,
}

fn check_tau(tau: f64) -> Result<f64> {
    if (0.0..1.0).contains(&tau) {
        Ok(tau)
    } else {
        Err(Error::param(format!(
            "threshold τ must lie in [0, 1), got {tau}"
        )))
    }
}

/// Fits with the default algorithm for `filter`.
pub fn fit(points: Vec<Point>, kernel: KernelSpec, filter: FilterSpec) -> Result<SupportModel> {
    let algorithm = Algorithm::default_for(&filter);
    SupportModel::fit(points, kernel, filter, algorithm)
}

impl SupportModel {
    pub fn fit(
        points: Vec<Point>,
        kernel: KernelSpec,
        filter: FilterSpec,
        algorithm: Algorithm,
    ) -> Result<Self> {
        Self::fit_inner(points, kernel, filter, algorithm, None)
    }

    pub(crate) fn fit_inner(
        points: Vec<Point>,
        kernel: KernelSpec,
        filter: FilterSpec,
        algorithm: Algorithm,
        cached: Option<SpectralDecomposition>,
    ) -> Result<Self> {
        if !kernel.unit_diagonal() {
            return Err(Error::param(
                "support estimation needs a unit-diagonal kernel; normalize it first",
            ));
        }
        match (algorithm, &filter) {
            (Algorithm::Cholesky, FilterSpec::Tikhonov { .. })
            | (Algorithm::Landweber, FilterSpec::Landweber { .. })
            | (Algorithm::Spectral, _) => {}
            (a, f) => {
                return Err(Error::param(format!("algorithm {a} cannot evaluate {f}")));
            }
        }
        let dim = point::common_dim(&points)?;
        let gram = gram(&kernel, &points)?;
        let decomposition = OnceLock::new();
        if let Some(d) = cached {
            if d.n() != gram.n() {
                return Err(Error::param(
                    "cached decomposition does not match the sample",
                ));
            }
            let _ = decomposition.set(d);
        } else if algorithm == Algorithm::Spectral
            || matches!(filter, FilterSpec::KpcaTruncation(_))
        {
            let _ = decomposition.set(decompose(&gram)?);
        }
        let resolved = match decomposition.get() {
            Some(d) => filter.resolve(d)?,
            None => filter,
        };
        let cholesky = match (algorithm, filter) {
            (Algorithm::Cholesky, FilterSpec::Tikhonov { lambda }) => {
                Some(tikhonov_factor(&gram, lambda)?)
            }
            _ => None,
        };
        Ok(SupportModel {
            points,
            dim,
            kernel,
            filter,
            resolved,
            algorithm,
            tau: 0.0,
            gram,
            decomposition,
            cholesky,
        })
    }

    pub fn with_tau(mut self, tau: f64) -> Result<Self> {
        self.tau = check_tau(tau)?;
        Ok(self)
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    /// The filter as requested (a kPCA rank cut stays a rank cut).
    pub fn filter(&self) -> &FilterSpec {
        &self.filter
    }

    /// The filter actually applied.
    pub fn resolved_filter(&self) -> &FilterSpec {
        &self.resolved
    }

    pub fn algorithm(&self) -> Algorithm {
        self.algorithm
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn gram(&self) -> &GramMatrix {
        &self.gram
    }

    /// Eigendecomposition of `K_n / n`, computed on first use.
    pub fn decomposition(&self) -> Result<&SpectralDecomposition> {
        if let Some(d) = self.decomposition.get() {
            return Ok(d);
        }
        let d = decompose(&self.gram)?;
        let _ = self.decomposition.set(d);
        Ok(self.decomposition.get().expect("set above"))
    }

    fn check_point(&self, x: &Point) -> Result<()> {
        if x.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.dim(),
            });
        }
        Ok(())
    }

    /// `F_n(x)`.
    pub fn score(&self, x: &Point) -> Result<f64> {
        self.check_point(x)?;
        let kx = kernel_vector(&self.kernel, &self.points, x)?;
        let n = self.n() as f64;
        let raw = match self.algorithm {
            Algorithm::Spectral => {
                let d = self.decomposition()?;
                let coeffs = d.eigenvectors().tr_mul(&kx);
                spectral_sum(&self.resolved, d, coeffs.as_slice())? / n
            }
            Algorithm::Cholesky => {
                let chol = self.cholesky.as_ref().expect("factor built at fit");
                chol.solve(&kx).dot(&kx)
            }
            Algorithm::Landweber => {
                let FilterSpec::Landweber { m } = self.resolved else {
                    unreachable!("checked at fit")
                };
                landweber_coefficients(&self.gram, &kx, m).dot(&kx)
            }
        };
        Ok(raw.clamp(0.0, 1.0))
    }

    /// Scores for many points through one n×N cross-kernel matrix.
    pub fn score_batch(&self, xs: &[Point]) -> Result<ScoreVector> {
        for x in xs {
            self.check_point(x)?;
        }
        let kxn = cross_gram(&self.kernel, &self.points, xs)?;
        let n = self.n() as f64;
        let raw: Vec<f64> = match self.algorithm {
            Algorithm::Spectral => {
                let d = self.decomposition()?;
                let coeffs = d.eigenvectors().tr_mul(&kxn);
                let mut out = Vec::with_capacity(xs.len());
                for col in coeffs.column_iter() {
                    out.push(spectral_sum(&self.resolved, d, col.as_slice())? / n);
                }
                out
            }
            Algorithm::Cholesky => {
                let chol = self.cholesky.as_ref().expect("factor built at fit");
                let alpha = chol.solve(&kxn);
                column_dots(&alpha, &kxn)
            }
            Algorithm::Landweber => {
                let FilterSpec::Landweber { m } = self.resolved else {
                    unreachable!("checked at fit")
                };
                let alpha = landweber_iterate(self.gram.entries(), &kxn, m);
                column_dots(&alpha, &kxn)
            }
        };
        Ok(ScoreVector(
            raw.into_iter().map(|s| s.clamp(0.0, 1.0)).collect(),
        ))
    }

    /// Membership in `X_n` at the model's stored τ.
    pub fn contains(&self, x: &Point) -> Result<bool> {
        predict_member(self.score(x)?, self.tau)
    }

    /// Scores of `xs` (rows) for every `λ` of the grid (columns), reusing
    /// one eigendecomposition.
    pub fn regularization_path(&self, xs: &[Point], lambdas: &[f64]) -> Result<DMatrix<f64>> {
        if lambdas.is_empty() {
            return Err(Error::Empty("λ grid"));
        }
        let filters = lambdas
            .iter()
            .map(|&l| self.filter.with_lambda(l))
            .collect::<Result<Vec<_>>>()?;
        for x in xs {
            self.check_point(x)?;
        }
        let d = self.decomposition()?;
        let kxn = cross_gram(&self.kernel, &self.points, xs)?;
        let coeffs = d.eigenvectors().tr_mul(&kxn);
        let n = self.n() as f64;
        let mut out = DMatrix::zeros(xs.len(), lambdas.len());
        for (j, f) in filters.iter().enumerate() {
            for (i, col) in coeffs.column_iter().enumerate() {
                out[(i, j)] = (spectral_sum(f, d, col.as_slice())? / n).clamp(0.0, 1.0);
            }
        }
        Ok(out)
    }
}

fn column_dots(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Vec<f64> {
    a.column_iter()
        .zip(b.column_iter())
        .map(|(x, y)| x.dot(&y))
        .collect()
}

/// `Σ_j g(σ_j) c_j²` over the eigenvalues above the null threshold.
fn spectral_sum(f: &FilterSpec, d: &SpectralDecomposition, coeffs: &[f64]) -> Result<f64> {
    let rank = d.rank();
    let mut acc = 0.0;
    for (j, c) in coeffs.iter().enumerate().take(rank) {
        acc += f.g_unchecked(d.eigenvalues()[j])? * c * c;
    }
    Ok(acc)
}

fn tikhonov_factor(g: &GramMatrix, lambda: f64) -> Result<Cholesky<f64, Dyn>> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::param(format!("λ must be positive, got {lambda}")));
    }
    let n = g.n();
    let shifted = g.entries() + DMatrix::identity(n, n) * (n as f64 * lambda);
    Cholesky::new(shifted).ok_or_else(|| {
        Error::Factorization(format!(
            "K_n + nλI is not positive definite at λ = {lambda:e}"
        ))
    })
}

/// Solves `(K_n + nλ I) α = k_x`.
pub fn tikhonov_coefficients(
    g: &GramMatrix,
    kx: &DVector<f64>,
    lambda: f64,
) -> Result<DVector<f64>> {
    if kx.len() != g.n() {
        return Err(Error::DimensionMismatch {
            expected: g.n(),
            got: kx.len(),
        });
    }
    Ok(tikhonov_factor(g, lambda)?.solve(kx))
}

/// `m + 1` Landweber updates from `α = 0`; equals `(1/n) g_m(K_n/n) k_x`.
pub fn landweber_coefficients(g: &GramMatrix, kx: &DVector<f64>, m: u32) -> DVector<f64> {
    let k = DMatrix::from_column_slice(kx.len(), 1, kx.as_slice());
    landweber_iterate(g.entries(), &k, m).column(0).into_owned()
}

fn landweber_iterate(gram: &DMatrix<f64>, kx: &DMatrix<f64>, m: u32) -> DMatrix<f64> {
    let inv_n = 1.0 / gram.nrows() as f64;
    let mut alpha = DMatrix::zeros(kx.nrows(), kx.ncols());
    for _ in 0..=m {
        let residual = kx - gram * &alpha;
        alpha += residual * inv_n;
    }
    alpha
}

/// Scores this close below `1 − τ` still count as members; interpolating
/// filters give `F_n(x_i) = 1` only up to rounding.
pub const MEMBER_SLACK: f64 = 1e-9;

/// `score ≥ 1 − τ`, up to [`MEMBER_SLACK`].
pub fn predict_member(score: f64, tau: f64) -> Result<bool> {
    let tau = check_tau(tau)?;
    Ok(score >= 1.0 - tau - MEMBER_SLACK)
}
