//! Parameter choices: the k-NN bandwidth heuristic, the eigenvalue-curvature
//! heuristic for λ, and the a-priori rate schedule.

use crate::error::{Error, Result};
use crate::point::{self, Point};

/// Neighbour rank used by [`width_heuristic`] when none is given.
pub const DEFAULT_K: usize = 10;

/// Eigenvalues at or below this are ignored by the curvature heuristic.
pub const CURVATURE_FLOOR: f64 = 1e-12;

/// Second differences closer than this to the maximum count as ties.
const CURVATURE_TIE: f64 = 1e-12;

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len().is_multiple_of(2) {
        0.5 * (v[m - 1] + v[m])
    } else {
        v[m]
    }
}

/// Median over the sample of the Euclidean distance to the k-th nearest
/// neighbour (self excluded).
pub fn width_heuristic(points: &[Point], k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::param("k must be at least 1"));
    }
    let n = points.len();
    if n <= k {
        return Err(Error::param(format!(
            "width heuristic needs more than k = {k} points, got {n}"
        )));
    }
    point::common_dim(points)?;
    let mut kth: Vec<f64> = points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut d: Vec<f64> = points
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, q)| point::euclidean(p, q))
                .collect();
            let (_, v, _) = d.select_nth_unstable_by(k - 1, f64::total_cmp);
            *v
        })
        .collect();
    let sigma = median(&mut kth);
    if sigma <= 0.0 {
        return Err(Error::param(
            "k-NN distances are zero (duplicated points); bandwidth must be positive",
        ));
    }
    Ok(sigma)
}

/// λ at the point of maximum curvature of the log-eigenvalue curve.
///
/// Over the eigenvalues above [`CURVATURE_FLOOR`], picks the interior index
/// maximizing `log σ_{j−1} − 2 log σ_j + log σ_{j+1}`, smallest index on ties.
pub fn lambda_curvature(eigenvalues: &[f64]) -> Result<f64> {
    let logs: Vec<f64> = eigenvalues
        .iter()
        .take_while(|&&v| v > CURVATURE_FLOOR)
        .map(|v| v.log10())
        .collect();
    if logs.len() < 3 {
        return Err(Error::param(format!(
            "curvature heuristic needs at least 3 positive eigenvalues, got {}",
            logs.len()
        )));
    }
    if eigenvalues.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::param("eigenvalues must be in descending order"));
    }
    let curv: Vec<f64> = logs.windows(3).map(|w| w[0] - 2.0 * w[1] + w[2]).collect();
    let best = curv.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let j = curv
        .iter()
        .position(|&c| c >= best - CURVATURE_TIE)
        .expect("nonempty");
    Ok(eigenvalues[j + 1])
}

/// `λ_n = n^{−1/(2s+b+1)}`.
pub fn rate_lambda(n: usize, s: f64, b: f64) -> Result<f64> {
    check_rate_params(n, s, b)?;
    Ok((n as f64).powf(-1.0 / (2.0 * s + b + 1.0)))
}

/// The error rate `n^{−s/(2s+b+1)}` that accompanies [`rate_lambda`].
pub fn rate_error(n: usize, s: f64, b: f64) -> Result<f64> {
    check_rate_params(n, s, b)?;
    Ok((n as f64).powf(-s / (2.0 * s + b + 1.0)))
}

fn check_rate_params(n: usize, s: f64, b: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::param("n must be at least 1"));
    }
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::param(format!("s must lie in (0, 1], got {s}")));
    }
    if !(0.0..=1.0).contains(&b) {
        return Err(Error::param(format!("b must lie in [0, 1], got {b}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn line(v: &[f64]) -> Vec<Point> {
        v.iter().map(|&x| Point::new(vec![x]).unwrap()).collect()
    }

    /// Brute-force k-NN distances with an explicit full sort.
    fn knn_oracle(v: &[f64], k: usize) -> Vec<f64> {
        (0..v.len())
            .map(|i| {
                let mut d: Vec<f64> = (0..v.len())
                    .filter(|&j| j != i)
                    .map(|j| (v[i] - v[j]).abs())
                    .collect();
                d.sort_by(f64::total_cmp);
                d[k - 1]
            })
            .collect()
    }

    #[test]
    fn width_examples() {
        assert_eq!(width_heuristic(&line(&[0.0, 1.0, 2.0]), 1).unwrap(), 1.0);
        assert_eq!(
            knn_oracle(&[0.0, 1.0, 2.0, 3.0], 2),
            vec![2.0, 1.0, 1.0, 2.0]
        );
        assert_eq!(
            width_heuristic(&line(&[0.0, 1.0, 2.0, 3.0]), 2).unwrap(),
            1.5
        );
        assert!(width_heuristic(&line(&[0.0, 0.0, 5.0, 5.0]), 1).is_err());
        assert!(width_heuristic(&line(&[0.0, 1.0]), 2).is_err());
        assert!(width_heuristic(&line(&[0.0, 1.0]), 0).is_err());
    }

    #[test]
    fn curvature_examples() {
        assert_eq!(
            lambda_curvature(&[1.0, 0.99, 0.01, 0.009, 0.008]).unwrap(),
            0.01
        );
        let geo: Vec<f64> = (0..8).map(|j| 0.5f64.powi(j)).collect();
        assert_eq!(lambda_curvature(&geo).unwrap(), 0.5);
        let geo: Vec<f64> = (0..8).map(|j| 0.3f64.powi(j)).collect();
        assert_eq!(lambda_curvature(&geo).unwrap(), 0.3);
        assert!(lambda_curvature(&[1.0, 0.5]).is_err());
        assert!(lambda_curvature(&[1.0, 0.5, 0.0, 0.0]).is_err());
        assert!(lambda_curvature(&[0.1, 0.5, 0.2]).is_err());
    }

    #[test]
    fn rate_examples() {
        assert!((rate_lambda(1024, 1.0, 1.0).unwrap() - 2f64.powf(-2.5)).abs() < 1e-16);
        assert!((rate_lambda(1024, 1.0, 1.0).unwrap() - 0.1767767).abs() < 1e-7);
        assert_eq!(rate_lambda(1, 0.3, 0.7).unwrap(), 1.0);
        assert!((rate_lambda(1_000_000, 0.5, 0.0).unwrap() - 1e-3).abs() < 1e-15);
        assert!(rate_lambda(0, 1.0, 1.0).is_err());
        assert!(rate_lambda(10, 0.0, 1.0).is_err());
        assert!(rate_lambda(10, 1.0, 1.5).is_err());
    }

    #[test]
    fn rates_are_monotone() {
        for b in [0.0, 0.5, 1.0] {
            let mut prev = f64::INFINITY;
            for n in [1usize, 2, 10, 100, 10_000] {
                let l = rate_lambda(n, 0.7, b).unwrap();
                assert!(l < prev || n == 1);
                prev = l;
            }
            let e: Vec<f64> = [0.1, 0.4, 0.7, 1.0]
                .iter()
                .map(|&s| rate_error(1000, s, b).unwrap())
                .collect();
            assert!(e.windows(2).all(|w| w[1] < w[0]));
        }
    }

    proptest! {
        #[test]
        fn width_matches_oracle_and_scales(
            v in prop::collection::vec(-10.0f64..10.0, 6..30),
            c in 0.1f64..10.0,
            shift in -5.0f64..5.0,
        ) {
            let k = 3;
            let mut o = knn_oracle(&v, k);
            o.sort_by(f64::total_cmp);
            let m = o.len() / 2;
            let expected = if o.len().is_multiple_of(2) { 0.5 * (o[m - 1] + o[m]) } else { o[m] };
            prop_assume!(expected > 0.0);
            let w = width_heuristic(&line(&v), k).unwrap();
            prop_assert_eq!(w, expected);
            let scaled: Vec<f64> = v.iter().map(|x| c * x).collect();
            let ws = width_heuristic(&line(&scaled), k).unwrap();
            prop_assert!((ws - c * w).abs() <= 1e-12 * ws.max(1.0));
            let moved: Vec<f64> = v.iter().map(|x| x + shift).collect();
            let wm = width_heuristic(&line(&moved), k).unwrap();
            prop_assert!((wm - w).abs() <= 1e-12 * w.max(1.0) * 10.0);
            let mut rev = v.clone();
            rev.reverse();
            prop_assert_eq!(width_heuristic(&line(&rev), k).unwrap(), w);
        }

        #[test]
        fn curvature_returns_an_input(mut v in prop::collection::vec(1e-6f64..1.0, 3..40)) {
            v.sort_by(|a, b| b.total_cmp(a));
            let l = lambda_curvature(&v).unwrap();
            prop_assert!(v.contains(&l));
        }
    }
}
