//! Synthetic distributions with known support, mostly concentrated on
//! curves in the plane.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::point::Point;

/// Centres of the two unit circles of [`Task::TwoCircles`].
pub const TWO_CIRCLE_CENTRES: [[f64; 2]; 2] = [[-1.25, 0.0], [1.25, 0.0]];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Task {
    /// Unit circle, uniform angle.
    Circle,
    /// `{(t, 0) : t ∈ [0, 1]}`.
    Segment,
    /// Upper arc `(cos t, sin t)` and lower arc `(1 − cos t, ½ − sin t)`,
    /// `t ∈ [0, π]`, plus isotropic Gaussian noise of the given scale.
    TwoMoons { noise: f64 },
    /// Two disjoint unit circles.
    TwoCircles,
    /// Unit circle perturbed along the normal by `eta · N(0, 1)`.
    NoisyCircle { eta: f64 },
    /// Uniform on `[0, 1]^dim`.
    Cube { dim: usize },
}

impl Task {
    pub fn dim(&self) -> usize {
        match self {
            Task::Cube { dim } => *dim,
            _ => 2,
        }
    }

    /// Number of mixture components; samples are labelled by component.
    pub fn components(&self) -> usize {
        match self {
            Task::TwoMoons { .. } | Task::TwoCircles => 2,
            _ => 1,
        }
    }

    /// True when samples lie exactly on the support curve or set.
    pub fn noiseless(&self) -> bool {
        match self {
            Task::TwoMoons { noise } => *noise == 0.0,
            Task::NoisyCircle { eta } => *eta == 0.0,
            _ => true,
        }
    }

    /// Axis-aligned box containing the support with some margin.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Task::Circle => (vec![-1.5, -1.5], vec![1.5, 1.5]),
            Task::NoisyCircle { eta } => {
                let r = 1.5 + 3.0 * eta;
                (vec![-r, -r], vec![r, r])
            }
            Task::Segment => (vec![-0.5, -0.5], vec![1.5, 0.5]),
            Task::TwoMoons { noise } => {
                let m = 0.5 + 3.0 * noise;
                (vec![-1.0 - m, -0.5 - m], vec![2.0 + m, 1.0 + m])
            }
            Task::TwoCircles => (vec![-2.75, -1.5], vec![2.75, 1.5]),
            Task::Cube { dim } => (vec![-0.25; *dim], vec![1.25; *dim]),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Task::TwoMoons { noise } if !(noise >= 0.0 && noise.is_finite()) => {
                Err(Error::param("two-moons noise must be nonnegative"))
            }
            Task::NoisyCircle { eta } if !(eta >= 0.0 && eta.is_finite()) => {
                Err(Error::param("noise level must be nonnegative"))
            }
            Task::Cube { dim: 0 } => Err(Error::param("cube dimension must be positive")),
            _ => Ok(()),
        }
    }

    fn draw(&self, component: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        match *self {
            Task::Circle => {
                let t = rng.random_range(0.0..TAU);
                vec![t.cos(), t.sin()]
            }
            Task::Segment => vec![rng.random_range(0.0..=1.0), 0.0],
            Task::TwoMoons { noise } => {
                let t = rng.random_range(0.0..=PI);
                let (x, y) = if component == 0 {
                    (t.cos(), t.sin())
                } else {
                    (1.0 - t.cos(), 0.5 - t.sin())
                };
                if noise > 0.0 {
                    let nx: f64 = rng.sample(StandardNormal);
                    let ny: f64 = rng.sample(StandardNormal);
                    vec![x + noise * nx, y + noise * ny]
                } else {
                    vec![x, y]
                }
            }
            Task::TwoCircles => {
                let t = rng.random_range(0.0..TAU);
                let c = TWO_CIRCLE_CENTRES[component];
                vec![c[0] + t.cos(), c[1] + t.sin()]
            }
            Task::NoisyCircle { eta } => {
                let t = rng.random_range(0.0..TAU);
                let z: f64 = rng.sample(StandardNormal);
                let r = 1.0 + eta * z;
                vec![r * t.cos(), r * t.sin()]
            }
            Task::Cube { dim } => (0..dim).map(|_| rng.random_range(0.0..=1.0)).collect(),
        }
    }

    /// Euclidean distance from `x` to the noiseless support.
    pub fn distance_to_support(&self, x: &[f64]) -> f64 {
        let circle = |cx: f64, cy: f64| ((x[0] - cx).hypot(x[1] - cy) - 1.0).abs();
        match *self {
            Task::Circle | Task::NoisyCircle { .. } => circle(0.0, 0.0),
            Task::Segment => {
                let t = x[0].clamp(0.0, 1.0);
                (x[0] - t).hypot(x[1])
            }
            Task::TwoMoons { .. } => {
                // upper arc: angle in [0, π] around the origin
                let upper = arc_distance(x[0], x[1]);
                let lower = arc_distance(1.0 - x[0], 0.5 - x[1]);
                upper.min(lower)
            }
            Task::TwoCircles => TWO_CIRCLE_CENTRES
                .iter()
                .map(|c| circle(c[0], c[1]))
                .fold(f64::INFINITY, f64::min),
            Task::Cube { .. } => x
                .iter()
                .map(|&v| (v - v.clamp(0.0, 1.0)).powi(2))
                .sum::<f64>()
                .sqrt(),
        }
    }
}

/// Distance from `(x, y)` to the unit half circle `{(cos t, sin t): t ∈ [0, π]}`.
fn arc_distance(x: f64, y: f64) -> f64 {
    if y >= 0.0 {
        (x.hypot(y) - 1.0).abs()
    } else {
        (x - 1.0).hypot(y).min((x + 1.0).hypot(y))
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Task::Circle => write!(f, "circle"),
            Task::Segment => write!(f, "segment"),
            Task::TwoMoons { noise } => write!(f, "two-moons:{noise}"),
            Task::TwoCircles => write!(f, "two-circles"),
            Task::NoisyCircle { eta } => write!(f, "noisy-circle:{eta}"),
            Task::Cube { dim } => write!(f, "cube:{dim}"),
        }
    }
}

impl FromStr for Task {
    type Err = Error;

    /// `circle`, `segment`, `two-moons[:noise]`, `two-circles`,
    /// `noisy-circle[:eta]`, `cube[:dim]`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((a, b)) => (a, Some(b)),
            None => (s, None),
        };
        let num = |default: f64| -> Result<f64> {
            arg.map_or(Ok(default), |a| {
                a.parse()
                    .map_err(|_| Error::param(format!("bad task parameter `{a}`")))
            })
        };
        let task = match name {
            "circle" => Task::Circle,
            "segment" => Task::Segment,
            "two-moons" => Task::TwoMoons { noise: num(0.1)? },
            "two-circles" => Task::TwoCircles,
            "noisy-circle" => Task::NoisyCircle { eta: num(0.05)? },
            "cube" => Task::Cube {
                dim: arg.map_or(Ok(2), |a| {
                    a.parse()
                        .map_err(|_| Error::param(format!("bad cube dimension `{a}`")))
                })?,
            },
            _ => return Err(Error::param(format!("unknown task `{s}`"))),
        };
        task.validate()?;
        Ok(task)
    }
}

/// `n` i.i.d. points, deterministic in `seed`.
pub fn sample(task: &Task, n: usize, seed: u64) -> Result<Vec<Point>> {
    Ok(sample_labeled(task, n, seed)?.0)
}

/// `n` i.i.d. points with the mixture component each came from.
pub fn sample_labeled(task: &Task, n: usize, seed: u64) -> Result<(Vec<Point>, Vec<usize>)> {
    task.validate()?;
    if n == 0 {
        return Err(Error::param("sample size must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = task.components();
    let mut pts = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let c = if k > 1 { rng.random_range(0..k) } else { 0 };
        pts.push(Point::new(task.draw(c, &mut rng))?);
        labels.push(c);
    }
    Ok((pts, labels))
}

/// `n` points from a single mixture component.
pub fn sample_component(task: &Task, component: usize, n: usize, seed: u64) -> Result<Vec<Point>> {
    task.validate()?;
    if component >= task.components() {
        return Err(Error::param(format!(
            "task {task} has no component {component}"
        )));
    }
    if n == 0 {
        return Err(Error::param("sample size must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| Point::new(task.draw(component, &mut rng)))
        .collect()
}

/// `n` points uniform on the bounding box at distance more than `margin`
/// from the noiseless support, by rejection.
pub fn sample_off_support(task: &Task, n: usize, margin: f64, seed: u64) -> Result<Vec<Point>> {
    task.validate()?;
    if n == 0 {
        return Err(Error::param("sample size must be at least 1"));
    }
    if !(margin >= 0.0 && margin.is_finite()) {
        return Err(Error::param("margin must be nonnegative"));
    }
    let (lo, hi) = task.bounding_box();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    let mut tries = 0usize;
    while out.len() < n {
        tries += 1;
        if tries > 1000 * n {
            return Err(Error::param(format!(
                "margin {margin} leaves no room in the bounding box"
            )));
        }
        let x: Vec<f64> = lo
            .iter()
            .zip(&hi)
            .map(|(a, b)| rng.random_range(*a..=*b))
            .collect();
        if task.distance_to_support(&x) > margin {
            out.push(Point::new(x)?);
        }
    }
    Ok(out)
}

/// A dense discretization of the noiseless support with roughly `m` points
/// (per unit of curve length for curves, per axis for cubes).
pub fn reference_support(task: &Task, m: usize) -> Result<Vec<Point>> {
    task.validate()?;
    if m < 2 {
        return Err(Error::param("reference resolution must be at least 2"));
    }
    let ring = |cx: f64, cy: f64, count: usize, start: f64, span: f64, closed: bool| {
        let steps = if closed { count } else { count - 1 };
        (0..count).map(move |i| {
            let t = start + span * i as f64 / steps as f64;
            vec![cx + t.cos(), cy + t.sin()]
        })
    };
    let count = |len: f64| ((m as f64 * len).ceil() as usize).max(2);
    let rows: Vec<Vec<f64>> = match *task {
        Task::Circle | Task::NoisyCircle { .. } => {
            ring(0.0, 0.0, count(TAU), 0.0, TAU, true).collect()
        }
        Task::Segment => {
            let c = count(1.0);
            (0..c)
                .map(|i| vec![i as f64 / (c - 1) as f64, 0.0])
                .collect()
        }
        Task::TwoMoons { .. } => {
            let c = count(PI);
            let upper = ring(0.0, 0.0, c, 0.0, PI, false);
            let lower = ring(0.0, 0.0, c, 0.0, PI, false).map(|v| vec![1.0 - v[0], 0.5 - v[1]]);
            upper.chain(lower).collect()
        }
        Task::TwoCircles => TWO_CIRCLE_CENTRES
            .iter()
            .flat_map(|c| ring(c[0], c[1], count(TAU), 0.0, TAU, true))
            .collect(),
        Task::Cube { dim } => {
            let axis: Vec<f64> = (0..m).map(|i| i as f64 / (m - 1) as f64).collect();
            grid_rows(&vec![axis; dim])
        }
    };
    rows.into_iter().map(Point::new).collect()
}

fn grid_rows(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut rows = vec![Vec::new()];
    for axis in axes {
        rows = rows
            .into_iter()
            .flat_map(|r| {
                axis.iter().map(move |&v| {
                    let mut r = r.clone();
                    r.push(v);
                    r
                })
            })
            .collect();
    }
    rows
}

/// A regular grid over a task's bounding box with its ground-truth indicator.
#[derive(Debug, Clone)]
pub struct Grid {
    pub points: Vec<Point>,
    pub inside: Vec<bool>,
    /// Spacing along each axis.
    pub step: Vec<f64>,
    pub cell_volume: f64,
}

/// `resolution` nodes per axis. Lower-dimensional supports are thickened by
/// one grid step; noisy circles by `max(step, 3η)`; the cube is exact.
pub fn reference_grid(task: &Task, resolution: usize) -> Result<Grid> {
    task.validate()?;
    if resolution < 2 {
        return Err(Error::param("grid resolution must be at least 2"));
    }
    let (lo, hi) = task.bounding_box();
    let step: Vec<f64> = lo
        .iter()
        .zip(&hi)
        .map(|(a, b)| (b - a) / (resolution - 1) as f64)
        .collect();
    let axes: Vec<Vec<f64>> = lo
        .iter()
        .zip(&step)
        .map(|(a, h)| (0..resolution).map(|i| a + h * i as f64).collect())
        .collect();
    let h = step.iter().copied().fold(0.0, f64::max);
    let thickness = match *task {
        Task::Cube { .. } => 0.0,
        Task::NoisyCircle { eta } => h.max(3.0 * eta),
        _ => h,
    };
    let rows = grid_rows(&axes);
    let inside = rows
        .iter()
        .map(|r| task.distance_to_support(r) <= thickness)
        .collect();
    Ok(Grid {
        points: rows.into_iter().map(Point::new).collect::<Result<_>>()?,
        inside,
        cell_volume: step.iter().product(),
        step,
    })
}
