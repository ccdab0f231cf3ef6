//! Turns command-line choices into concrete kernels, filters and samples.

use spectral_support::dataset::{load_csv, CsvOptions};
use spectral_support::kernels::{gram, normalize, Separation};
use spectral_support::selection::{lambda_curvature, rate_lambda, width_heuristic};
use spectral_support::synth::{sample, sample_component};
use spectral_support::{decompose, Error, FilterSpec, KernelSpec, Point};

use crate::args::{DataArgs, FilterName, FitArgs, LambdaChoice, SigmaChoice};
use crate::{usage, CliResult};

pub fn training_points(d: &DataArgs) -> CliResult<Vec<Point>> {
    match (&d.data, &d.task) {
        (Some(path), _) => {
            let ds = load_csv(
                path,
                &CsvOptions {
                    header: d.header,
                    label_column: d.label_column,
                },
            )?;
            match d.label {
                Some(l) => {
                    let rows = ds.with_label(l);
                    if rows.is_empty() {
                        return Err(Error::Empty("no rows carry the requested label").into());
                    }
                    Ok(rows)
                }
                None => Ok(ds.rows),
            }
        }
        (None, Some(task)) => Ok(match d.component {
            Some(c) => sample_component(task, c, d.n, d.seed)?,
            None => sample(task, d.n, d.seed)?,
        }),
        (None, None) => usage("give training data with --data or --task"),
    }
}

pub fn kernel(fit: &FitArgs, points: &[Point]) -> CliResult<KernelSpec> {
    let k = if fit.kernel.contains('=') {
        fit.kernel.parse::<KernelSpec>()?
    } else {
        let sigma = || -> CliResult<f64> {
            Ok(match fit.sigma {
                SigmaChoice::Auto(k) => width_heuristic(points, k)?,
                SigmaChoice::Value(v) => v,
            })
        };
        match fit.kernel.as_str() {
            "abel" => KernelSpec::abel(sigma()?)?,
            "l1exp" => KernelSpec::l1_exponential(sigma()?)?,
            "gaussian" => KernelSpec::gaussian(sigma()?)?,
            "linear" => normalize(&KernelSpec::Linear),
            other => return usage(format!("unknown kernel `{other}`")),
        }
    };
    if k.separating() == Separation::None {
        eprintln!("warning: {k} is not separating; its level sets need not recover the support");
    }
    Ok(k)
}

pub fn filter(fit: &FitArgs, points: &[Point], kernel: &KernelSpec) -> CliResult<FilterSpec> {
    if fit.filter == FilterName::Landweber {
        return Ok(FilterSpec::landweber(fit.m));
    }
    if let (FilterName::Kpca, Some(r)) = (fit.filter, fit.rank) {
        return Ok(FilterSpec::kpca_rank(r)?);
    }
    let lambda = lambda(fit.lambda, points, kernel)?;
    Ok(match fit.filter {
        FilterName::Tikhonov => FilterSpec::tikhonov(lambda)?,
        FilterName::Cutoff => FilterSpec::spectral_cutoff(lambda)?,
        _ => FilterSpec::kpca_threshold(lambda)?,
    })
}

pub fn lambda(choice: LambdaChoice, points: &[Point], kernel: &KernelSpec) -> CliResult<f64> {
    Ok(match choice {
        LambdaChoice::Value(v) => v,
        LambdaChoice::Rate { s, b } => rate_lambda(points.len(), s, b)?,
        LambdaChoice::Auto => {
            let d = decompose(&gram(kernel, points)?)?;
            let eigs: Vec<f64> = d.eigenvalues().iter().copied().collect();
            lambda_curvature(&eigs)?
        }
    })
}

/// Parses `a,b,c` or `log:<lo>,<hi>,<count>`.
pub fn grid(spec: &str, what: &str) -> CliResult<Vec<f64>> {
    let num = |t: &str| -> CliResult<f64> {
        t.trim()
            .parse()
            .or_else(|_| usage(format!("{what}: `{t}` is not a number")))
    };
    if let Some(rest) = spec.strip_prefix("log:") {
        let parts: Vec<&str> = rest.split(',').collect();
        if parts.len() != 3 {
            return usage(format!("{what}: expected log:<lo>,<hi>,<count>"));
        }
        let (lo, hi) = (num(parts[0])?, num(parts[1])?);
        let count: usize = parts[2]
            .trim()
            .parse()
            .or_else(|_| usage(format!("{what}: `{}` is not a count", parts[2])))?;
        if !(lo > 0.0 && hi > 0.0) || count == 0 {
            return usage(format!(
                "{what}: log grids need positive ends and a positive count"
            ));
        }
        if count == 1 {
            return Ok(vec![lo]);
        }
        let (a, b) = (lo.log10(), hi.log10());
        return Ok((0..count)
            .map(|i| 10f64.powf(a + (b - a) * i as f64 / (count - 1) as f64))
            .collect());
    }
    let v = spec
        .split(',')
        .filter(|t| !t.trim().is_empty())
        .map(num)
        .collect::<CliResult<Vec<f64>>>()?;
    if v.is_empty() {
        return usage(format!("{what}: empty grid"));
    }
    Ok(v)
}
