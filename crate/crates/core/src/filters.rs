//! Spectral filter families and functional calculus on `K_n / n`.
//!
//! A filter is a pair `(r, g)` with `r(σ) = σ g(σ)`; `r` approximates the
//! step function on the spectrum and `g` the corresponding regularized
//! inverse. Tikhonov, spectral cut-off and Landweber are Lipschitz on
//! `[0, 1]`. The kernel-PCA truncation is a hard step and is not.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::kernels::{GramMatrix, EPS_PSD};
use crate::textfmt::{parse_f64, Record};

/// Eigenvalues below `NULL_REL_TOL * σ_max` are treated as zero.
pub const NULL_REL_TOL: f64 = 1e-12;

/// Slack accepted on the filter domain `[0, 1]` before an argument is rejected.
const DOMAIN_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KpcaCut {
    /// Keep eigenvalues `σ ≥ λ`.
    Threshold(f64),
    /// Keep the top `M` distinct eigenvalues; resolved to a threshold once a
    /// spectrum is known.
    Rank(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FilterSpec {
    Tikhonov { lambda: f64 },
    SpectralCutoff { lambda: f64 },
    Landweber { m: u32 },
    KpcaTruncation(KpcaCut),
}

fn check_lambda(lambda: f64) -> Result<f64> {
    if lambda.is_finite() && lambda > 0.0 {
        Ok(lambda)
    } else {
        Err(Error::param(format!(
            "regularization parameter must be positive, got {lambda}"
        )))
    }
}

fn check_domain(sigma: f64) -> Result<f64> {
    if !(-DOMAIN_SLACK..=1.0 + DOMAIN_SLACK).contains(&sigma) {
        return Err(Error::param(format!(
            "filter argument {sigma} outside [0, 1]"
        )));
    }
    Ok(sigma.clamp(0.0, 1.0))
}

impl FilterSpec {
    pub fn tikhonov(lambda: f64) -> Result<Self> {
        Ok(FilterSpec::Tikhonov {
            lambda: check_lambda(lambda)?,
        })
    }

    pub fn spectral_cutoff(lambda: f64) -> Result<Self> {
        Ok(FilterSpec::SpectralCutoff {
            lambda: check_lambda(lambda)?,
        })
    }

    pub fn landweber(m: u32) -> Self {
        FilterSpec::Landweber { m }
    }

    pub fn kpca_threshold(lambda: f64) -> Result<Self> {
        Ok(FilterSpec::KpcaTruncation(KpcaCut::Threshold(
            check_lambda(lambda)?,
        )))
    }

    pub fn kpca_rank(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::param("kPCA rank must be at least 1"));
        }
        Ok(FilterSpec::KpcaTruncation(KpcaCut::Rank(m)))
    }

    /// Regularization parameter, if this filter is parameterized by one.
    pub fn lambda(&self) -> Option<f64> {
        match *self {
            FilterSpec::Tikhonov { lambda }
            | FilterSpec::SpectralCutoff { lambda }
            | FilterSpec::KpcaTruncation(KpcaCut::Threshold(lambda)) => Some(lambda),
            _ => None,
        }
    }

    /// Same family with a different `λ`. Landweber has no `λ` and is rejected.
    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        match self {
            FilterSpec::Tikhonov { .. } => FilterSpec::tikhonov(lambda),
            FilterSpec::SpectralCutoff { .. } => FilterSpec::spectral_cutoff(lambda),
            FilterSpec::KpcaTruncation(_) => FilterSpec::kpca_threshold(lambda),
            FilterSpec::Landweber { .. } => Err(Error::param(
                "Landweber is parameterized by an iteration count, not λ",
            )),
        }
    }

    pub fn is_lipschitz(&self) -> bool {
        !matches!(self, FilterSpec::KpcaTruncation(_))
    }

    /// Replaces a rank-based kPCA cut by its threshold on `d`.
    pub fn resolve(&self, d: &SpectralDecomposition) -> Result<FilterSpec> {
        match *self {
            FilterSpec::KpcaTruncation(KpcaCut::Rank(m)) => Ok(FilterSpec::KpcaTruncation(
                KpcaCut::Threshold(kpca_lambda_from_rank(d, m)?),
            )),
            other => Ok(other),
        }
    }

    fn unresolved(&self) -> Error {
        Error::param("kPCA rank cut must be resolved against a spectrum first")
    }

    /// `r(σ)`; `σ` must lie in `[0, 1]`.
    pub fn r_value(&self, sigma: f64) -> Result<f64> {
        let s = check_domain(sigma)?;
        self.r_unchecked(s)
    }

    /// `g(σ)`, with `r(σ) = σ g(σ)`.
    pub fn g_value(&self, sigma: f64) -> Result<f64> {
        let s = check_domain(sigma)?;
        self.g_unchecked(s)
    }

    pub(crate) fn r_unchecked(&self, s: f64) -> Result<f64> {
        Ok(match *self {
            FilterSpec::Tikhonov { lambda } => s / (s + lambda),
            FilterSpec::SpectralCutoff { lambda } => {
                if s > lambda {
                    1.0
                } else {
                    s / lambda
                }
            }
            // 1 − (1 − σ)^{m+1}, evaluated without cancellation near σ = 0
            FilterSpec::Landweber { m } => -((f64::from(m) + 1.0) * (-s).ln_1p()).exp_m1(),
            FilterSpec::KpcaTruncation(KpcaCut::Threshold(lambda)) => {
                if s >= lambda {
                    1.0
                } else {
                    0.0
                }
            }
            FilterSpec::KpcaTruncation(KpcaCut::Rank(_)) => return Err(self.unresolved()),
        })
    }

    pub(crate) fn g_unchecked(&self, s: f64) -> Result<f64> {
        Ok(match *self {
            FilterSpec::Tikhonov { lambda } => 1.0 / (s + lambda),
            FilterSpec::SpectralCutoff { lambda } => {
                if s > lambda {
                    1.0 / s
                } else {
                    1.0 / lambda
                }
            }
            FilterSpec::Landweber { m } => {
                if s == 0.0 {
                    f64::from(m) + 1.0
                } else {
                    self.r_unchecked(s)? / s
                }
            }
            FilterSpec::KpcaTruncation(KpcaCut::Threshold(lambda)) => {
                if s >= lambda {
                    1.0 / s
                } else {
                    0.0
                }
            }
            FilterSpec::KpcaTruncation(KpcaCut::Rank(_)) => return Err(self.unresolved()),
        })
    }

    /// Lipschitz constant of `r` on `[0, 1]`: `1/λ` for Tikhonov and
    /// cut-off, `m + 1` for Landweber, none for kPCA truncation.
    pub fn lipschitz_constant(&self) -> Option<f64> {
        match *self {
            FilterSpec::Tikhonov { lambda } | FilterSpec::SpectralCutoff { lambda } => {
                Some(1.0 / lambda)
            }
            FilterSpec::Landweber { m } => Some(f64::from(m) + 1.0),
            FilterSpec::KpcaTruncation(_) => None,
        }
    }
}

impl fmt::Display for FilterSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FilterSpec::Tikhonov { lambda } => write!(f, "filter=tikhonov lambda={lambda:e}"),
            FilterSpec::SpectralCutoff { lambda } => write!(f, "filter=cutoff lambda={lambda:e}"),
            FilterSpec::Landweber { m } => write!(f, "filter=landweber m={m}"),
            FilterSpec::KpcaTruncation(KpcaCut::Threshold(l)) => {
                write!(f, "filter=kpca lambda={l:e}")
            }
            FilterSpec::KpcaTruncation(KpcaCut::Rank(m)) => write!(f, "filter=kpca rank={m}"),
        }
    }
}

impl FromStr for FilterSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let rec = Record::parse(s)?;
        match rec.require("filter")? {
            "tikhonov" => {
                rec.only(&["filter", "lambda"])?;
                FilterSpec::tikhonov(rec.require_f64("lambda")?)
            }
            "cutoff" => {
                rec.only(&["filter", "lambda"])?;
                FilterSpec::spectral_cutoff(rec.require_f64("lambda")?)
            }
            "landweber" => {
                rec.only(&["filter", "m"])?;
                let m = rec.require("m")?;
                let m = m
                    .parse::<u32>()
                    .map_err(|_| Error::param(format!("`m`: `{m}` is not an iteration count")))?;
                Ok(FilterSpec::landweber(m))
            }
            "kpca" => {
                rec.only(&["filter", "lambda", "rank"])?;
                match (rec.get("lambda"), rec.get("rank")) {
                    (Some(l), None) => FilterSpec::kpca_threshold(parse_f64(l, "lambda")?),
                    (None, Some(r)) => FilterSpec::kpca_rank(
                        r.parse()
                            .map_err(|_| Error::param(format!("`rank`: `{r}` is not a count")))?,
                    ),
                    _ => Err(Error::param("kpca takes exactly one of lambda= or rank=")),
                }
            }
            other => Err(Error::param(format!("unknown filter `{other}`"))),
        }
    }
}

/// Eigenpairs of a symmetric matrix with spectrum in `[0, 1]`, eigenvalues
/// in descending order and eigenvectors stored as columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
}

impl SpectralDecomposition {
    /// Decomposes `a`, requiring its spectrum to lie in `[-slack, 1 + slack]`
    /// and clamping it to `[0, 1]`.
    pub fn of_symmetric(a: &DMatrix<f64>, slack: f64) -> Result<Self> {
        let n = a.nrows();
        if n == 0 || a.ncols() != n {
            return Err(Error::param("matrix must be square and nonempty"));
        }
        let eig =
            nalgebra::linalg::SymmetricEigen::try_new(a.clone(), f64::EPSILON, 1000 * n.max(10))
                .ok_or(Error::EigenSolver)?;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
        let mut values = DVector::zeros(n);
        let mut vectors = DMatrix::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            let v = eig.eigenvalues[src];
            if !(-slack..=1.0 + slack).contains(&v) {
                return Err(Error::NotPositiveSemidefinite(format!(
                    "eigenvalue {v:e} outside [0, 1]"
                )));
            }
            values[dst] = v.clamp(0.0, 1.0);
            vectors.set_column(dst, &eig.eigenvectors.column(src));
        }
        Ok(SpectralDecomposition {
            eigenvalues: values,
            eigenvectors: vectors,
        })
    }

    /// Builds a decomposition from known parts. Eigenvalues must be
    /// descending and in `[0, 1]`.
    pub fn from_parts(eigenvalues: DVector<f64>, eigenvectors: DMatrix<f64>) -> Result<Self> {
        let n = eigenvalues.len();
        if n == 0 || eigenvectors.nrows() != n || eigenvectors.ncols() != n {
            return Err(Error::param("decomposition shape mismatch"));
        }
        if eigenvalues.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::param("eigenvalues must lie in [0, 1]"));
        }
        if eigenvalues.as_slice().windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::param("eigenvalues must be descending"));
        }
        Ok(SpectralDecomposition {
            eigenvalues,
            eigenvectors,
        })
    }

    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    /// Eigenvalues at or below this are null.
    pub fn null_threshold(&self) -> f64 {
        NULL_REL_TOL * self.eigenvalues[0].max(0.0)
    }

    /// Number of leading eigenvalues above the null threshold.
    pub fn rank(&self) -> usize {
        let t = self.null_threshold();
        self.eigenvalues.iter().take_while(|&&v| v > t).count()
    }

    /// Distinct positive eigenvalues, descending; values within the null
    /// threshold of each other are merged.
    pub fn distinct_positive(&self) -> Vec<f64> {
        let t = self.null_threshold();
        let mut out: Vec<f64> = Vec::new();
        for &v in self.eigenvalues.iter().take(self.rank()) {
            match out.last() {
                Some(&last) if last - v <= t => {}
                _ => out.push(v),
            }
        }
        out
    }

    /// `V diag(f(σ_j)) Vᵀ`.
    pub fn apply_fn(&self, f: impl Fn(f64) -> Result<f64>) -> Result<DMatrix<f64>> {
        let n = self.n();
        let mut scaled = self.eigenvectors.clone();
        for j in 0..n {
            let w = f(self.eigenvalues[j])?;
            scaled.column_mut(j).scale_mut(w);
        }
        let m = scaled * self.eigenvectors.transpose();
        Ok((&m + m.transpose()) * 0.5)
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        self.apply_fn(Ok).expect("identity cannot fail")
    }
}

/// Eigendecomposition of `G / n`.
pub fn decompose(g: &GramMatrix) -> Result<SpectralDecomposition> {
    let n = g.n() as f64;
    let scaled = g.entries() / n;
    let slack = EPS_PSD * (g.norm1() / n).max(1.0);
    SpectralDecomposition::of_symmetric(&scaled, slack)
}

/// `r(A) = V diag(r(σ_j)) Vᵀ`.
pub fn apply_r(f: &FilterSpec, d: &SpectralDecomposition) -> Result<DMatrix<f64>> {
    let f = f.resolve(d)?;
    d.apply_fn(|s| f.r_unchecked(s))
}

/// `g(A) = V diag(g(σ_j)) Vᵀ`.
pub fn apply_g(f: &FilterSpec, d: &SpectralDecomposition) -> Result<DMatrix<f64>> {
    let f = f.resolve(d)?;
    d.apply_fn(|s| f.g_unchecked(s))
}

/// Threshold between the `M`-th and `(M+1)`-th distinct positive eigenvalues.
pub fn kpca_lambda_from_rank(d: &SpectralDecomposition, m: usize) -> Result<f64> {
    if m == 0 {
        return Err(Error::param("kPCA rank must be at least 1"));
    }
    let distinct = d.distinct_positive();
    if distinct.len() < m + 1 {
        return Err(Error::param(format!(
            "rank {m} needs {} distinct positive eigenvalues, found {}",
            m + 1,
            distinct.len()
        )));
    }
    Ok(0.5 * (distinct[m - 1] + distinct[m]))
}
