//! Set-estimation quality metrics and reference baselines.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernels::{induced_metric, KernelSpec};
use crate::point::{self, Point};

#[derive(Debug, Clone)]
pub enum Metric {
    Euclidean,
    Induced(KernelSpec),
}

impl Metric {
    pub fn distance(&self, a: &Point, b: &Point) -> Result<f64> {
        match self {
            Metric::Euclidean => {
                if a.dim() != b.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: a.dim(),
                        got: b.dim(),
                    });
                }
                Ok(point::euclidean(a, b))
            }
            Metric::Induced(k) => induced_metric(k, a, b),
        }
    }
}

/// `sup_{a ∈ A} inf_{b ∈ B} d(a, b)`.
pub fn directed_hausdorff(a: &[Point], b: &[Point], metric: &Metric) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty("Hausdorff distance needs nonempty sets"));
    }
    let mins: Vec<f64> = a
        .par_iter()
        .map(|p| {
            b.iter()
                .try_fold(f64::INFINITY, |m, q| Ok(m.min(metric.distance(p, q)?)))
        })
        .collect::<Result<_>>()?;
    Ok(mins.into_iter().fold(0.0, f64::max))
}

/// `max{ sup_a d(a, B), sup_b d(b, A) }` over finite sets.
pub fn hausdorff(a: &[Point], b: &[Point], metric: &Metric) -> Result<f64> {
    Ok(directed_hausdorff(a, b, metric)?.max(directed_hausdorff(b, a, metric)?))
}

/// Measure of the symmetric difference of two sets given as indicators over
/// the same grid.
pub fn symdiff_measure(a: &[bool], b: &[bool], cell_volume: f64) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    if !(cell_volume > 0.0 && cell_volume.is_finite()) {
        return Err(Error::param("cell volume must be positive"));
    }
    Ok(cell_volume * a.iter().zip(b).filter(|(x, y)| x != y).count() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Label {
    Positive,
    Negative,
}

#[derive(Debug, Clone, Default)]
pub struct LabeledScores {
    pub pairs: Vec<(f64, Label)>,
}

impl LabeledScores {
    pub fn from_groups(positives: &[f64], negatives: &[f64]) -> Self {
        let pairs = positives
            .iter()
            .map(|&s| (s, Label::Positive))
            .chain(negatives.iter().map(|&s| (s, Label::Negative)))
            .collect();
        LabeledScores { pairs }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Debug, Clone)]
pub struct Roc {
    /// From `(0, 0)` at threshold +∞ through every distinct score, descending.
    pub points: Vec<RocPoint>,
    pub auc: f64,
}

/// ROC curve and the Mann–Whitney AUC, ties counted one half.
pub fn roc_auc(scores: &LabeledScores) -> Result<Roc> {
    let pos = scores
        .pairs
        .iter()
        .filter(|p| p.1 == Label::Positive)
        .count();
    let neg = scores.pairs.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::param(
            "AUC needs both positive and negative examples",
        ));
    }
    if scores.pairs.iter().any(|p| p.0.is_nan()) {
        return Err(Error::param("scores must not be NaN"));
    }
    let mut sorted = scores.pairs.clone();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));

    let mut points = vec![RocPoint {
        threshold: f64::INFINITY,
        fpr: 0.0,
        tpr: 0.0,
    }];
    // Tied groups, descending. Each positive in a group beats every negative
    // below it and ties with the negatives in its own group.
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut wins = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let s = sorted[i].0;
        let (mut gp, mut gn) = (0usize, 0usize);
        while i < sorted.len() && sorted[i].0 == s {
            match sorted[i].1 {
                Label::Positive => gp += 1,
                Label::Negative => gn += 1,
            }
            i += 1;
        }
        // negatives strictly below this group: neg − fp − gn
        wins += gp as f64 * (neg - fp - gn) as f64 + 0.5 * (gp * gn) as f64;
        tp += gp;
        fp += gn;
        points.push(RocPoint {
            threshold: s,
            fpr: fp as f64 / neg as f64,
            tpr: tp as f64 / pos as f64,
        });
    }
    Ok(Roc {
        points,
        auc: wins / (pos as f64 * neg as f64),
    })
}

/// Unnormalized Laplacian Parzen window `1/(n hᵈ) Σ exp(−‖x − x_i‖/h)`.
pub fn parzen_score(train: &[Point], h: f64, x: &Point) -> Result<f64> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::param(format!(
            "Parzen width must be positive, got {h}"
        )));
    }
    let d = point::common_dim(train)?;
    if x.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: x.dim(),
        });
    }
    let sum: f64 = train
        .iter()
        .map(|p| (-point::euclidean(p, x) / h).exp())
        .sum();
    Ok(sum / (train.len() as f64 * h.powi(d as i32)))
}

/// Membership in the union of closed balls `∪ B(x_i, ε)`.
pub fn devroye_wise_member(train: &[Point], eps: f64, x: &Point) -> Result<bool> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::param(format!(
            "ball radius must be positive, got {eps}"
        )));
    }
    let d = point::common_dim(train)?;
    if x.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: x.dim(),
        });
    }
    Ok(train.iter().any(|p| point::euclidean(p, x) <= eps))
}

/// Mean and sample standard deviation (`T − 1` denominator; 0 for one value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.is_empty() {
        f64::NAN
    } else if v.len().is_multiple_of(2) {
        0.5 * (v[m - 1] + v[m])
    } else {
        v[m]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::KernelSpec;
    use proptest::prelude::*;

    fn pts(v: &[&[f64]]) -> Vec<Point> {
        v.iter().map(|c| Point::new(c.to_vec()).unwrap()).collect()
    }

    #[test]
    fn hausdorff_examples() {
        let a = pts(&[&[0.0, 0.0]]);
        let b = pts(&[&[3.0, 4.0]]);
        assert_eq!(hausdorff(&a, &b, &Metric::Euclidean).unwrap(), 5.0);
        let a = pts(&[&[0.0], &[1.0]]);
        let b = pts(&[&[0.0]]);
        assert_eq!(directed_hausdorff(&b, &a, &Metric::Euclidean).unwrap(), 0.0);
        assert_eq!(directed_hausdorff(&a, &b, &Metric::Euclidean).unwrap(), 1.0);
        assert_eq!(hausdorff(&a, &b, &Metric::Euclidean).unwrap(), 1.0);
        assert!(hausdorff(&a, &[], &Metric::Euclidean).is_err());
        assert!(hausdorff(&a, &pts(&[&[0.0, 0.0]]), &Metric::Euclidean).is_err());
    }

    #[test]
    fn induced_metric_hausdorff() {
        let m = Metric::Induced(KernelSpec::abel(1.0).unwrap());
        let d = hausdorff(&pts(&[&[0.0]]), &pts(&[&[1.0]]), &m).unwrap();
        assert!((d - (2.0 - 2.0 * (-1.0f64).exp()).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn symdiff_examples() {
        assert_eq!(
            symdiff_measure(&[true, false, true], &[true, true, false], 0.25).unwrap(),
            0.5
        );
        assert_eq!(symdiff_measure(&[true], &[true], 1.0).unwrap(), 0.0);
        assert!(symdiff_measure(&[true], &[true, false], 1.0).is_err());
        assert!(symdiff_measure(&[true], &[true], 0.0).is_err());
    }

    #[test]
    fn auc_examples() {
        let r = roc_auc(&LabeledScores::from_groups(&[0.9, 0.4], &[0.5, 0.1])).unwrap();
        assert_eq!(r.auc, 0.75);
        let r = roc_auc(&LabeledScores::from_groups(
            &[0.9, 0.8, 0.3, 0.2],
            &[0.7, 0.1],
        ))
        .unwrap();
        assert_eq!(r.auc, 0.75);
        let r = roc_auc(&LabeledScores::from_groups(
            &[0.9, 0.8, 0.6, 0.2],
            &[0.5, 0.1],
        ))
        .unwrap();
        assert_eq!(r.auc, 0.875);
        let r = roc_auc(&LabeledScores::from_groups(&[0.5, 0.5], &[0.5, 0.5, 0.5])).unwrap();
        assert_eq!(r.auc, 0.5);
        assert_eq!(r.points.len(), 2);
        assert_eq!(
            r.points[1],
            RocPoint {
                threshold: 0.5,
                fpr: 1.0,
                tpr: 1.0
            }
        );
        assert!(roc_auc(&LabeledScores::from_groups(&[1.0], &[])).is_err());
        assert!(roc_auc(&LabeledScores::from_groups(&[f64::NAN], &[0.0])).is_err());
    }

    #[test]
    fn parzen_examples() {
        let t = pts(&[&[0.0]]);
        let h = 0.5;
        assert_eq!(
            parzen_score(&t, h, &Point::new(vec![0.0]).unwrap()).unwrap(),
            1.0 / h
        );
        let v = parzen_score(&t, h, &Point::new(vec![h]).unwrap()).unwrap();
        assert!((v - (-1.0f64).exp() / h).abs() < 1e-15);
        assert!(parzen_score(&t, 0.0, &t[0]).is_err());
    }

    #[test]
    fn parzen_quadrature() {
        let h = 0.3;
        let one = pts(&[&[0.0]]);
        let dx = 1e-3;
        let s: f64 = (-20_000..=20_000)
            .map(|i| parzen_score(&one, h, &Point::new(vec![i as f64 * dx]).unwrap()).unwrap() * dx)
            .sum();
        assert!((s - 2.0).abs() < 1e-5, "{s}");

        let two = pts(&[&[0.0, 0.0]]);
        let dx = 0.02;
        let mut s = 0.0;
        for i in -400..=400 {
            for j in -400..=400 {
                let p = Point::new(vec![i as f64 * dx, j as f64 * dx]).unwrap();
                s += parzen_score(&two, h, &p).unwrap() * dx * dx;
            }
        }
        assert!((s - 2.0 * std::f64::consts::PI).abs() < 1e-2, "{s}");
    }

    #[test]
    fn devroye_wise_examples() {
        let t = pts(&[&[0.0, 0.0], &[2.0, 0.0]]);
        let at = |x: f64, y: f64| {
            devroye_wise_member(&t, 1.0, &Point::new(vec![x, y]).unwrap()).unwrap()
        };
        assert!(at(1.0, 0.0));
        assert!(at(2.0, 1.0));
        assert!(!at(1.0, 0.5));
        assert!(devroye_wise_member(&t, -1.0, &t[0]).is_err());
    }

    #[test]
    fn summary_statistics() {
        assert_eq!(mean_std(&[1.0, 2.0, 3.0]), (2.0, 1.0));
        assert_eq!(mean_std(&[4.0]), (4.0, 0.0));
        assert!(mean_std(&[]).0.is_nan());
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    /// Pairwise count, independent of the sorted sweep.
    fn auc_oracle(p: &[f64], n: &[f64]) -> f64 {
        let mut w = 0.0;
        for a in p {
            for b in n {
                w += if a > b {
                    1.0
                } else if a == b {
                    0.5
                } else {
                    0.0
                };
            }
        }
        w / (p.len() * n.len()) as f64
    }

    proptest! {
        #[test]
        fn auc_matches_pairwise_and_is_invariant(
            p in prop::collection::vec(0u8..10, 1..20),
            n in prop::collection::vec(0u8..10, 1..20),
        ) {
            let p: Vec<f64> = p.into_iter().map(f64::from).collect();
            let n: Vec<f64> = n.into_iter().map(f64::from).collect();
            let auc = roc_auc(&LabeledScores::from_groups(&p, &n)).unwrap().auc;
            prop_assert!((auc - auc_oracle(&p, &n)).abs() < 1e-15);
            let f = |v: &[f64]| v.iter().map(|x| (x * 0.3).exp() + 2.0).collect::<Vec<_>>();
            let mono = roc_auc(&LabeledScores::from_groups(&f(&p), &f(&n))).unwrap().auc;
            prop_assert!((mono - auc).abs() < 1e-15);
            let swapped = roc_auc(&LabeledScores::from_groups(&n, &p)).unwrap().auc;
            prop_assert!((swapped - (1.0 - auc)).abs() < 1e-15);
        }

        #[test]
        fn hausdorff_is_symmetric(
            a in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 2), 1..10),
            b in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 2), 1..10),
        ) {
            let a: Vec<Point> = a.into_iter().map(|r| Point::new(r).unwrap()).collect();
            let b: Vec<Point> = b.into_iter().map(|r| Point::new(r).unwrap()).collect();
            let ab = hausdorff(&a, &b, &Metric::Euclidean).unwrap();
            prop_assert_eq!(ab, hausdorff(&b, &a, &Metric::Euclidean).unwrap());
            prop_assert_eq!(hausdorff(&a, &a, &Metric::Euclidean).unwrap(), 0.0);
        }
    }
}
