//! Finite-sample realizations of the operator quantities behind the
//! consistency theory, the closed-form bounds, and Monte-Carlo harnesses
//! that compare observed deviations with those bounds.
//!
//! The population operator `T` is never formed. Hilbert–Schmidt geometry of
//! empirical operators `T_n = (1/n) Σ K_{x_i} ⊗ K_{x_i}` reduces exactly to
//! sums of squared kernel values, and a large reference sample stands in
//! for `T` in the harnesses.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::filters::{FilterSpec, SpectralDecomposition};
use crate::kernels::{GramMatrix, KernelSpec, EPS_PSD};
use crate::point::{self, Point};
use crate::synth::{self, Task};

/// `T_n` for a sample, represented through its kernel values.
#[derive(Debug)]
pub struct EmpiricalOperator {
    sample: Vec<Point>,
    kernel: KernelSpec,
    norm_sq: OnceLock<f64>,
}

impl EmpiricalOperator {
    pub fn new(sample: Vec<Point>, kernel: KernelSpec) -> Result<Self> {
        let d = point::common_dim(&sample)?;
        kernel.check_dim(d)?;
        Ok(EmpiricalOperator {
            sample,
            kernel,
            norm_sq: OnceLock::new(),
        })
    }

    pub fn sample(&self) -> &[Point] {
        &self.sample
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    /// `⟨T_a, T_b⟩_HS = (1/(n m)) Σ_{ij} K(x_i, y_j)²`, summed row by row in a
    /// fixed order.
    fn inner(&self, other: &EmpiricalOperator) -> Result<f64> {
        let rows: Vec<f64> = self
            .sample
            .par_iter()
            .map(|x| {
                let mut acc = 0.0;
                for y in &other.sample {
                    let k = self.kernel.eval_unchecked(x, y)?;
                    acc += k * k;
                }
                Ok(acc)
            })
            .collect::<Result<_>>()?;
        let total: f64 = rows.iter().sum();
        Ok(total / (self.sample.len() as f64 * other.sample.len() as f64))
    }

    /// `‖T_n‖²_HS`, cached.
    pub fn hs_norm_sq(&self) -> Result<f64> {
        if let Some(v) = self.norm_sq.get() {
            return Ok(*v);
        }
        let v = self.inner(self)?;
        let _ = self.norm_sq.set(v);
        Ok(v)
    }

    /// `tr T_n = (1/n) Σ K(x_i, x_i)`.
    pub fn trace(&self) -> Result<f64> {
        let s = self
            .sample
            .iter()
            .map(|x| self.kernel.eval_unchecked(x, x))
            .sum::<Result<f64>>()?;
        Ok(s / self.sample.len() as f64)
    }
}

/// `‖T_a − T_b‖_HS` through `‖T_a‖² + ‖T_b‖² − 2⟨T_a, T_b⟩`.
pub fn hs_distance(a: &EmpiricalOperator, b: &EmpiricalOperator) -> Result<f64> {
    if a.kernel != b.kernel {
        return Err(Error::param("empirical operators use different kernels"));
    }
    let da = point::common_dim(&a.sample)?;
    let db = point::common_dim(&b.sample)?;
    if da != db {
        return Err(Error::DimensionMismatch {
            expected: da,
            got: db,
        });
    }
    let sq = a.hs_norm_sq()? + b.hs_norm_sq()? - 2.0 * a.inner(b)?;
    Ok(sq.max(0.0).sqrt())
}

fn delta_factor(delta: f64) -> f64 {
    delta.max((2.0 * delta).sqrt())
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::param(format!("{name} must be positive, got {v}")))
    }
}

/// `2 (δ ∨ √(2δ)) / √n`: holds for `‖T − T_n‖_HS` with probability at
/// least `1 − 2e^{−δ}`.
pub fn concentration_bound(n: usize, delta: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::param("n must be at least 1"));
    }
    check_positive("δ", delta)?;
    Ok(2.0 * delta_factor(delta) / (n as f64).sqrt())
}

/// `N(λ) = Σ σ_j / (σ_j + λ)` over the positive eigenvalues.
pub fn effective_dimension(d: &SpectralDecomposition, lambda: f64) -> Result<f64> {
    effective_dimension_of(d.eigenvalues().as_slice(), lambda)
}

/// [`effective_dimension`] on a bare spectrum.
pub fn effective_dimension_of(eigenvalues: &[f64], lambda: f64) -> Result<f64> {
    check_positive("λ", lambda)?;
    Ok(eigenvalues
        .iter()
        .filter(|&&s| s > 0.0)
        .map(|&s| s / (s + lambda))
        .sum())
}

/// `δ/(nλ) + sqrt(2δ N(λ) / (nλ))`.
pub fn sample_error_bound(n: usize, lambda: f64, delta: f64, eff_dim: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::param("n must be at least 1"));
    }
    check_positive("λ", lambda)?;
    check_positive("δ", delta)?;
    check_positive("N(λ)", eff_dim)?;
    let nl = n as f64 * lambda;
    Ok(delta / nl + (2.0 * delta * eff_dim / nl).sqrt())
}

/// `λ^s C_s`.
pub fn approximation_error_bound(lambda: f64, s: f64, c_s: f64) -> Result<f64> {
    check_positive("λ", lambda)?;
    check_positive("C_s", c_s)?;
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::param(format!("s must lie in (0, 1], got {s}")));
    }
    Ok(lambda.powf(s) * c_s)
}

/// `(C_s ∨ 2 D_b (δ ∨ √(2δ))) n^{−s/(2s+b+1)}`, the uniform error bound at
/// the rate-optimal `λ_n`.
///
/// The constant is the one the derivation actually produces; the headline
/// statement of the theorem carries `D_b (2δ ∨ √(2δ))` instead, which is
/// smaller when `√(2δ) > δ`.
pub fn finite_sample_bound(
    n: usize,
    delta: f64,
    s: f64,
    b: f64,
    c_s: f64,
    d_b: f64,
) -> Result<f64> {
    check_positive("δ", delta)?;
    check_positive("C_s", c_s)?;
    if !(d_b >= 1.0 && d_b.is_finite()) {
        return Err(Error::param(format!("D_b must be at least 1, got {d_b}")));
    }
    let rate = crate::selection::rate_error(n, s, b)?;
    Ok(c_s.max(2.0 * d_b * delta_factor(delta)) * rate)
}

/// `Mδ/n + sqrt(2σ²δ/n)` for the deviation of a mean of bounded i.i.d.
/// vectors, with probability at least `1 − 2e^{−δ}`.
pub fn bernstein_bound(m: f64, variance: f64, n: usize, delta: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::param("n must be at least 1"));
    }
    check_positive("M", m)?;
    check_positive("σ²", variance)?;
    check_positive("δ", delta)?;
    let n = n as f64;
    Ok(m * delta / n + (2.0 * variance * delta / n).sqrt())
}

/// Both sides of `‖r(S) − r(T)‖_F ≤ L ‖S − T‖_F` for symmetric `S`, `T`
/// with spectra in `[0, 1]`.
pub fn maurer_check(s: &DMatrix<f64>, t: &DMatrix<f64>, f: &FilterSpec) -> Result<(f64, f64)> {
    let lip = f
        .lipschitz_constant()
        .ok_or_else(|| Error::param(format!("{f} is not Lipschitz")))?;
    if s.shape() != t.shape() {
        return Err(Error::param("matrices differ in shape"));
    }
    let ds = SpectralDecomposition::of_symmetric(s, EPS_PSD)?;
    let dt = SpectralDecomposition::of_symmetric(t, EPS_PSD)?;
    let rs = ds.apply_fn(|x| f.r_unchecked(x))?;
    let rt = dt.apply_fn(|x| f.r_unchecked(x))?;
    Ok(((rs - rt).norm(), lip * (s - t).norm()))
}

/// `k_xᵀ K_n⁺ k_x` with a rank-truncated pseudo-inverse; the finite-sample
/// projection score.
pub fn exact_projection_score(g: &GramMatrix, kx: &DVector<f64>) -> Result<f64> {
    if kx.len() != g.n() {
        return Err(Error::DimensionMismatch {
            expected: g.n(),
            got: kx.len(),
        });
    }
    let n = g.n();
    let eig = nalgebra::linalg::SymmetricEigen::try_new(
        g.entries().clone(),
        f64::EPSILON,
        1000 * n.max(10),
    )
    .ok_or(Error::EigenSolver)?;
    let smax = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let cut = crate::filters::NULL_REL_TOL * smax;
    let coeffs = eig.eigenvectors.tr_mul(kx);
    Ok(eig
        .eigenvalues
        .iter()
        .zip(coeffs.iter())
        .filter(|(&s, _)| s > cut)
        .map(|(&s, c)| c * c / s)
        .sum())
}

/// One row of a bound-verification table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialRecord {
    pub trial: usize,
    pub n: usize,
    pub delta: f64,
    pub observed: f64,
    pub bound: f64,
    pub violated: bool,
}

pub fn violation_fraction(records: &[TrialRecord]) -> f64 {
    if records.is_empty() {
        return 0.0;
    }
    records.iter().filter(|r| r.violated).count() as f64 / records.len() as f64
}

/// `2e^{−δ}`, the admissible violation rate.
pub fn violation_budget(delta: f64) -> f64 {
    2.0 * (-delta).exp()
}

/// Seed of trial `t` in a harness seeded with `seed`.
fn trial_seed(seed: u64, t: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(t as u64 + 1)
}

#[derive(Debug, Clone)]
pub struct ConcentrationConfig {
    pub task: Task,
    pub kernel: KernelSpec,
    pub n: usize,
    pub delta: f64,
    pub trials: usize,
    pub reference_n: usize,
    pub seed: u64,
}

/// Draws `trials` samples of size `n` and compares `‖T_n − T_ref‖_HS`
/// against [`concentration_bound`], `T_ref` built from `reference_n` points.
pub fn concentration_harness(cfg: &ConcentrationConfig) -> Result<Vec<TrialRecord>> {
    if cfg.trials == 0 {
        return Err(Error::param("at least one trial is required"));
    }
    let bound = concentration_bound(cfg.n, cfg.delta)?;
    let reference = EmpiricalOperator::new(
        synth::sample(&cfg.task, cfg.reference_n, cfg.seed)?,
        cfg.kernel.clone(),
    )?;
    reference.hs_norm_sq()?;
    (0..cfg.trials)
        .map(|t| {
            let s = synth::sample(&cfg.task, cfg.n, trial_seed(cfg.seed, t))?;
            let op = EmpiricalOperator::new(s, cfg.kernel.clone())?;
            let observed = hs_distance(&op, &reference)?;
            Ok(TrialRecord {
                trial: t,
                n: cfg.n,
                delta: cfg.delta,
                observed,
                bound,
                violated: observed > bound,
            })
        })
        .collect()
}

/// Means of `n` fair ±1 coins against [`bernstein_bound`] with `M = 1`,
/// `σ² = 1`.
pub fn bernstein_coin_harness(
    n: usize,
    delta: f64,
    trials: usize,
    seed: u64,
) -> Result<Vec<TrialRecord>> {
    if trials == 0 {
        return Err(Error::param("at least one trial is required"));
    }
    let bound = bernstein_bound(1.0, 1.0, n, delta)?;
    Ok((0..trials)
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(seed, t));
            let sum: i64 = (0..n)
                .map(|_| if rng.random::<bool>() { 1 } else { -1 })
                .sum();
            let observed = (sum as f64 / n as f64).abs();
            TrialRecord {
                trial: t,
                n,
                delta,
                observed,
                bound,
                violated: observed > bound,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filters::decompose;
    use crate::kernels::{gram, kernel_vector};
    use proptest::prelude::*;

    fn pts(v: &[&[f64]]) -> Vec<Point> {
        v.iter().map(|c| Point::new(c.to_vec()).unwrap()).collect()
    }

    fn op(v: &[&[f64]]) -> EmpiricalOperator {
        EmpiricalOperator::new(pts(v), KernelSpec::abel(1.0).unwrap()).unwrap()
    }

    #[test]
    fn hs_distance_examples() {
        let a = op(&[&[0.0, 0.0], &[1.0, 0.5]]);
        let b = op(&[&[0.0, 0.0], &[1.0, 0.5]]);
        assert_eq!(hs_distance(&a, &a).unwrap(), 0.0);
        assert_eq!(hs_distance(&a, &b).unwrap(), 0.0);
        // K(x, y) underflows to 0 for points 1e4 bandwidths apart
        let d = hs_distance(&op(&[&[0.0]]), &op(&[&[1e4]])).unwrap();
        assert!((d - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(hs_distance(&op(&[&[3.0]]), &op(&[&[3.0]])).unwrap(), 0.0);
        let other = EmpiricalOperator::new(pts(&[&[0.0]]), KernelSpec::abel(2.0).unwrap()).unwrap();
        assert!(hs_distance(&op(&[&[0.0]]), &other).is_err());
    }

    #[test]
    fn singleton_distance_formula() {
        // ‖K_x⊗K_x − K_y⊗K_y‖² = 2 − 2K(x,y)²
        let k = (-0.7f64).exp();
        let d = hs_distance(&op(&[&[0.0]]), &op(&[&[0.7]])).unwrap();
        assert!((d - (2.0 - 2.0 * k * k).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn trace_identity() {
        let a = op(&[&[0.0, 0.0], &[1.0, 0.5], &[0.2, -0.3]]);
        assert_eq!(a.trace().unwrap(), 1.0);
        let hs = a.hs_norm_sq().unwrap();
        assert!(hs > 0.0 && hs <= 1.0);
    }

    #[test]
    fn closed_form_examples() {
        assert!((concentration_bound(100, 2.0).unwrap() - 0.4).abs() < 1e-15);
        assert!((concentration_bound(100, 0.5).unwrap() - 0.2).abs() < 1e-15);
        assert!(concentration_bound(0, 1.0).is_err());

        let d = crate::filters::SpectralDecomposition::from_parts(
            DVector::from_vec(vec![0.75, 0.25]),
            DMatrix::identity(2, 2),
        )
        .unwrap();
        assert!((effective_dimension(&d, 0.25).unwrap() - 1.25).abs() < 1e-15);
        assert!(effective_dimension(&d, 1e9).unwrap() < 1e-8);
        assert!((effective_dimension_of(&[0.5, 0.3, 0.2, 0.0], 1e-12).unwrap() - 3.0).abs() < 1e-6);

        assert!((sample_error_bound(100, 0.1, 1.0, 5.0).unwrap() - 1.1).abs() < 1e-15);
        assert!(sample_error_bound(100, 0.1, 1e-300, 5.0).unwrap() < 1e-140);
        assert!(
            sample_error_bound(200, 0.1, 1.0, 5.0).unwrap()
                < sample_error_bound(100, 0.1, 1.0, 5.0).unwrap()
        );

        assert!((approximation_error_bound(0.01, 0.5, 2.0).unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(approximation_error_bound(0.3, 1.0, 2.0).unwrap(), 0.6);
        assert_eq!(approximation_error_bound(1.0, 0.4, 7.0).unwrap(), 7.0);

        let f = finite_sample_bound(1024, 0.5, 1.0, 1.0, 1.0, 1.0).unwrap();
        assert!((f - 2.0 * 2f64.powf(-2.5)).abs() < 1e-15);
        assert!((f - 0.3535534).abs() < 1e-7);
        assert_eq!(
            finite_sample_bound(1, 3.0, 0.5, 0.5, 1.0, 2.0).unwrap(),
            12.0
        );
        assert!(finite_sample_bound(10, 1.0, 1.0, 1.0, 1.0, 0.5).is_err());

        assert!((bernstein_bound(1.0, 1.0, 100, 2.0).unwrap() - 0.22).abs() < 1e-15);
        assert!(bernstein_bound(1.0, 1.0, 100, 1e-300).unwrap() < 1e-140);
    }

    #[test]
    fn bounds_monotone_on_grids() {
        let ns = [1usize, 10, 100, 1000, 100_000];
        let deltas = [0.1, 0.5, 1.0, 2.0, 5.0];
        for w in ns.windows(2) {
            for &d in &deltas {
                assert!(
                    concentration_bound(w[1], d).unwrap() < concentration_bound(w[0], d).unwrap()
                );
                assert!(
                    bernstein_bound(1.0, 0.5, w[1], d).unwrap()
                        < bernstein_bound(1.0, 0.5, w[0], d).unwrap()
                );
                assert!(
                    sample_error_bound(w[1], 0.1, d, 3.0).unwrap()
                        < sample_error_bound(w[0], 0.1, d, 3.0).unwrap()
                );
                assert!(
                    finite_sample_bound(w[1], d, 0.5, 0.5, 1.0, 1.0).unwrap()
                        < finite_sample_bound(w[0], d, 0.5, 0.5, 1.0, 1.0).unwrap()
                );
            }
        }
        for w in deltas.windows(2) {
            assert!(
                concentration_bound(50, w[1]).unwrap() > concentration_bound(50, w[0]).unwrap()
            );
            assert!(
                bernstein_bound(1.0, 0.5, 50, w[1]).unwrap()
                    > bernstein_bound(1.0, 0.5, 50, w[0]).unwrap()
            );
            assert!(
                finite_sample_bound(50, w[1], 0.5, 0.5, 0.1, 1.0).unwrap()
                    > finite_sample_bound(50, w[0], 0.5, 0.5, 0.1, 1.0).unwrap()
            );
        }
    }

    #[test]
    fn maurer_scalar_case() {
        let s = DMatrix::from_element(1, 1, 0.5);
        let t = DMatrix::from_element(1, 1, 0.3);
        let f = FilterSpec::tikhonov(0.1).unwrap();
        let (lhs, rhs) = maurer_check(&s, &t, &f).unwrap();
        assert!((lhs - 1.0 / 12.0).abs() < 1e-15);
        assert!((rhs - 2.0).abs() < 1e-14);
        assert_eq!(maurer_check(&s, &s, &f).unwrap(), (0.0, 0.0));
        assert!(maurer_check(&s, &t, &FilterSpec::kpca_threshold(0.1).unwrap()).is_err());
        let big = DMatrix::from_element(1, 1, 1.5);
        assert!(maurer_check(&big, &t, &f).is_err());
    }

    #[test]
    fn projection_score_examples() {
        let k = KernelSpec::abel(1.0).unwrap();
        let train = pts(&[&[0.0], &[0.5], &[2.0]]);
        let g = gram(&k, &train).unwrap();
        for x in &train {
            let kx = kernel_vector(&k, &train, x).unwrap();
            assert!((exact_projection_score(&g, &kx).unwrap() - 1.0).abs() < 1e-12);
        }
        // rank-one Gram: orthogonal complement of (1, 1) scores zero
        let g = GramMatrix::from_matrix(DMatrix::from_element(2, 2, 1.0)).unwrap();
        let kx = DVector::from_vec(vec![1.0, -1.0]);
        assert!(exact_projection_score(&g, &kx).unwrap().abs() < 1e-20);
    }

    #[test]
    fn projection_matches_small_cutoff() {
        let k = KernelSpec::abel(0.7).unwrap();
        let train = crate::synth::sample(&Task::Cube { dim: 2 }, 25, 4).unwrap();
        let g = gram(&k, &train).unwrap();
        let d = decompose(&g).unwrap();
        let f = FilterSpec::spectral_cutoff(1e-10).unwrap();
        let gm = crate::filters::apply_g(&f, &d).unwrap();
        for x in crate::synth::sample(&Task::Cube { dim: 2 }, 10, 5).unwrap() {
            let kx = kernel_vector(&k, &train, &x).unwrap();
            let cut = (&gm * &kx).dot(&kx) / 25.0;
            assert!((exact_projection_score(&g, &kx).unwrap() - cut).abs() < 1e-6);
        }
    }

    #[test]
    fn harness_records() {
        let cfg = ConcentrationConfig {
            task: Task::Circle,
            kernel: KernelSpec::abel(1.0).unwrap(),
            n: 20,
            delta: 2.0,
            trials: 5,
            reference_n: 200,
            seed: 1,
        };
        let a = concentration_harness(&cfg).unwrap();
        let b = concentration_harness(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 5);
        assert!(a
            .iter()
            .all(|r| r.bound == concentration_bound(20, 2.0).unwrap()));
        assert!(concentration_harness(&ConcentrationConfig { trials: 0, ..cfg }).is_err());

        let coins = bernstein_coin_harness(100, 2.0, 2000, 9).unwrap();
        assert!(violation_fraction(&coins) <= violation_budget(2.0));
        assert!(bernstein_coin_harness(100, 2.0, 0, 9).is_err());
    }

    fn arb_sample() -> impl Strategy<Value = Vec<Vec<f64>>> {
        prop::collection::vec(prop::collection::vec(-2.0f64..2.0, 2), 1..8)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn hs_distance_is_a_metric(a in arb_sample(), b in arb_sample(), c in arb_sample()) {
            let k = KernelSpec::abel(0.8).unwrap();
            let mk = |v: Vec<Vec<f64>>| EmpiricalOperator::new(
                v.into_iter().map(|r| Point::new(r).unwrap()).collect(), k.clone()).unwrap();
            let (a, b, c) = (mk(a), mk(b), mk(c));
            let ab = hs_distance(&a, &b).unwrap();
            let ba = hs_distance(&b, &a).unwrap();
            let ac = hs_distance(&a, &c).unwrap();
            let cb = hs_distance(&c, &b).unwrap();
            prop_assert!((ab - ba).abs() < 1e-12);
            prop_assert!(ab <= ac + cb + 1e-7);
            prop_assert_eq!(hs_distance(&a, &a).unwrap(), 0.0);
            prop_assert!(a.hs_norm_sq().unwrap() <= a.trace().unwrap() + 1e-15);
        }
    }
}
