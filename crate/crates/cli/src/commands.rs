use std::fs;

use spectral_support::dataset::{load_csv, CsvOptions};
use spectral_support::eval::{
    hausdorff, mean_std, parzen_score, roc_auc, symdiff_measure, LabeledScores, Metric,
};
use spectral_support::oracles::{
    bernstein_coin_harness, concentration_harness, violation_budget, violation_fraction,
    ConcentrationConfig, TrialRecord,
};
use spectral_support::persist::{load, save, ModelFormat, SaveOptions};
use spectral_support::report::{fmt_num, Cell, Table};
use spectral_support::synth::{
    reference_grid, reference_support, sample, sample_component, sample_labeled, sample_off_support,
};
use spectral_support::{
    predict_member, Algorithm, Error, FilterSpec, KernelSpec, Point, SupportModel, Task,
};

use crate::args::{
    EvalArgs, FileFormat, FilterName, Harness, ScoreArgs, SweepArgs, SynthArgs, TrainArgs,
    VerifyArgs,
};
use crate::{emit, resolve, stamp, usage, CliResult};

/// Reference points per unit length for Hausdorff distances.
const REFERENCE_DENSITY: usize = 200;

pub fn train(a: TrainArgs) -> CliResult<()> {
    let points = resolve::training_points(&a.data)?;
    let kernel = resolve::kernel(&a.fit, &points)?;
    let filter = resolve::filter(&a.fit, &points, &kernel)?;
    let algorithm = a
        .fit
        .algorithm
        .unwrap_or_else(|| Algorithm::default_for(&filter));
    let model = SupportModel::fit(points, kernel, filter, algorithm)?.with_tau(a.fit.tau)?;
    let format = match a.format {
        FileFormat::Text => ModelFormat::Text,
        FileFormat::Binary => ModelFormat::Binary,
    };
    save(
        &model,
        &a.out,
        SaveOptions {
            format,
            include_decomposition: a.include_decomposition,
        },
    )?;

    let d = model.decomposition()?;
    let mut t = Table::new(["index", "eigenvalue"]);
    t.meta("kernel", spec_value(model.kernel(), "kernel="))
        .meta("filter", spec_value(model.resolved_filter(), "filter="))
        .meta("n", model.n())
        .meta("rank", d.rank());
    for (i, v) in d.eigenvalues().iter().enumerate() {
        t.push(vec![i.into(), (*v).into()]);
    }
    stamp(&mut t, a.no_timestamp);
    let spectrum = a.spectrum.clone().unwrap_or_else(|| {
        let mut p = a.out.clone().into_os_string();
        p.push(".spectrum.csv");
        p.into()
    });
    fs::write(&spectrum, t.to_csv())?;

    let top: Vec<String> = d
        .eigenvalues()
        .iter()
        .take(5)
        .map(|v| fmt_num(*v))
        .collect();
    eprintln!("{}", model.kernel());
    eprintln!(
        "{} (algorithm {})",
        model.resolved_filter(),
        model.algorithm()
    );
    eprintln!(
        "n={} dim={} tau={} rank={} leading eigenvalues: {}",
        model.n(),
        model.dim(),
        fmt_num(model.tau()),
        d.rank(),
        top.join(", ")
    );
    eprintln!("wrote {} and {}", a.out.display(), spectrum.display());
    Ok(())
}

pub fn score(a: ScoreArgs) -> CliResult<()> {
    let mut model = load(&a.model)?;
    if let Some(tau) = a.tau {
        model = model.with_tau(tau)?;
    }
    let ds = load_csv(
        &a.data,
        &CsvOptions {
            header: a.header,
            label_column: None,
        },
    )?;
    let scores = model.score_batch(&ds.rows)?;
    let mut t = Table::new(["index", "score", "member"]);
    t.meta("n_train", model.n())
        .meta("n_test", ds.len())
        .meta("tau", fmt_num(model.tau()));
    for (i, s) in scores.iter().enumerate() {
        t.push(vec![
            i.into(),
            (*s).into(),
            predict_member(*s, model.tau())?.into(),
        ]);
    }
    emit(t, &a.output)
}

/// A spec's text form without its leading `key=`.
fn spec_value(spec: impl ToString, key: &str) -> String {
    let s = spec.to_string();
    s.strip_prefix(key).map(str::to_string).unwrap_or(s)
}

fn bandwidth(k: &KernelSpec) -> Option<f64> {
    match k {
        KernelSpec::Abel { sigma }
        | KernelSpec::L1Exponential { sigma }
        | KernelSpec::Gaussian { sigma } => Some(*sigma),
        KernelSpec::Normalized(inner) => bandwidth(inner),
        _ => None,
    }
}

fn auc(model: &SupportModel, pos: &[Point], neg: &[Point]) -> CliResult<f64> {
    let sp = model.score_batch(pos)?;
    let sn = model.score_batch(neg)?;
    Ok(roc_auc(&LabeledScores::from_groups(&sp, &sn))?.auc)
}

fn parzen_auc(train: &[Point], h: f64, pos: &[Point], neg: &[Point]) -> CliResult<f64> {
    let f = |xs: &[Point]| -> CliResult<Vec<f64>> {
        xs.iter().map(|x| Ok(parzen_score(train, h, x)?)).collect()
    };
    Ok(roc_auc(&LabeledScores::from_groups(&f(pos)?, &f(neg)?))?.auc)
}

/// Distance beyond which a uniform draw counts as off the support.
fn off_support_margin(task: &Task, grid_step: f64) -> f64 {
    match *task {
        Task::NoisyCircle { eta } => grid_step.max(3.0 * eta),
        Task::TwoMoons { noise } => grid_step.max(3.0 * noise),
        _ => grid_step,
    }
}

pub fn eval(a: EvalArgs) -> CliResult<()> {
    let mut model = load(&a.model)?;
    if let Some(tau) = a.tau {
        model = model.with_tau(tau)?;
    }
    let h = bandwidth(model.kernel());
    let mut t = Table::new(["metric", "mean", "std", "trials"]);
    t.meta("kernel", spec_value(model.kernel(), "kernel="))
        .meta("filter", spec_value(model.resolved_filter(), "filter="))
        .meta("tau", fmt_num(model.tau()));
    let mut row = |name: &str, values: &[f64]| {
        let (m, s) = mean_std(values);
        t.push(vec![name.into(), m.into(), s.into(), values.len().into()]);
    };

    match (&a.task, &a.data) {
        (Some(task), _) => {
            if task.dim() != model.dim() {
                return Err(Error::DimensionMismatch {
                    expected: model.dim(),
                    got: task.dim(),
                }
                .into());
            }
            if a.trials == 0 {
                return usage("at least one trial is required");
            }
            let grid = reference_grid(task, a.resolution)?;
            let step = grid.step.iter().copied().fold(0.0, f64::max);
            let margin = off_support_margin(task, step);
            let draw = |component: Option<usize>, seed: u64| -> CliResult<Vec<Point>> {
                Ok(match component {
                    Some(c) => sample_component(task, c, a.n_test, seed)?,
                    None => sample(task, a.n_test, seed)?,
                })
            };
            let (mut spectral, mut parzen) = (Vec::new(), Vec::new());
            for trial in 0..a.trials as u64 {
                let s = a.seed.wrapping_add(2 * trial);
                let pos = draw(a.positive_component, s)?;
                let neg = match a.negative_component {
                    Some(c) => sample_component(task, c, a.n_test, s + 1)?,
                    None => sample_off_support(task, a.n_test, margin, s + 1)?,
                };
                spectral.push(auc(&model, &pos, &neg)?);
                if let Some(h) = h {
                    parzen.push(parzen_auc(model.points(), h, &pos, &neg)?);
                }
            }
            row("auc_spectral", &spectral);
            if !parzen.is_empty() {
                row("auc_parzen", &parzen);
            }

            let scores = model.score_batch(&grid.points)?;
            let inside: Vec<bool> = scores
                .iter()
                .map(|s| predict_member(*s, model.tau()))
                .collect::<Result<_, _>>()?;
            let estimate: Vec<Point> = grid
                .points
                .iter()
                .zip(&inside)
                .filter(|(_, &b)| b)
                .map(|(p, _)| p.clone())
                .collect();
            let d_h = if estimate.is_empty() {
                eprintln!("warning: the estimate contains no grid point");
                f64::INFINITY
            } else {
                let truth = reference_support(task, REFERENCE_DENSITY)?;
                hausdorff(&estimate, &truth, &Metric::Euclidean)?
            };
            row("hausdorff", &[d_h]);
            row(
                "symdiff",
                &[symdiff_measure(&inside, &grid.inside, grid.cell_volume)?],
            );
            t.meta("task", task).meta("grid", a.resolution);
        }
        (None, Some(path)) => {
            let ds = load_csv(
                path,
                &CsvOptions {
                    header: a.header,
                    label_column: a.label_column,
                },
            )?;
            let labels = ds.labels.as_ref().ok_or(Error::Empty("labels"))?;
            let (mut pos, mut neg) = (Vec::new(), Vec::new());
            for (p, l) in ds.rows.iter().zip(labels) {
                if *l == a.positive_label {
                    pos.push(p.clone());
                } else {
                    neg.push(p.clone());
                }
            }
            if pos.is_empty() || neg.is_empty() {
                return Err(Error::Empty("AUC needs both positive and negative test rows").into());
            }
            row("auc_spectral", &[auc(&model, &pos, &neg)?]);
            if let Some(h) = h {
                row("auc_parzen", &[parzen_auc(model.points(), h, &pos, &neg)?]);
            }
        }
        (None, None) => return usage("give a test set with --task or --data"),
    }
    emit(t, &a.output)
}

pub fn sweep(a: SweepArgs) -> CliResult<()> {
    if a.fit.filter == FilterName::Landweber {
        return usage("sweep needs a λ-indexed filter (tikhonov, cutoff or kpca)");
    }
    let lambdas = resolve::grid(&a.lambdas, "--lambdas")?;
    let taus = resolve::grid(&a.taus, "--taus")?;
    for &tau in &taus {
        predict_member(1.0, tau)?;
    }
    let points = resolve::training_points(&a.data)?;
    let kernel = resolve::kernel(&a.fit, &points)?;
    let filter = match a.fit.filter {
        FilterName::Tikhonov => FilterSpec::tikhonov(lambdas[0])?,
        FilterName::Cutoff => FilterSpec::spectral_cutoff(lambdas[0])?,
        _ => FilterSpec::kpca_threshold(lambdas[0])?,
    };
    let model = SupportModel::fit(points, kernel, filter, Algorithm::Spectral)?;
    let test = match &a.test {
        Some(path) => {
            load_csv(
                path,
                &CsvOptions {
                    header: a.data.header,
                    label_column: None,
                },
            )?
            .rows
        }
        None => model.points().to_vec(),
    };
    let path = model.regularization_path(&test, &lambdas)?;

    let mut t = Table::new(["lambda", "tau", "index", "score", "member"]);
    t.meta("kernel", spec_value(model.kernel(), "kernel="))
        .meta("filter", spec_value(model.filter(), "filter="))
        .meta("n_train", model.n())
        .meta("n_test", test.len())
        .meta("grid", format!("{}x{}", lambdas.len(), taus.len()));
    for (j, &lambda) in lambdas.iter().enumerate() {
        for &tau in &taus {
            for i in 0..test.len() {
                let s = path[(i, j)];
                t.push(vec![
                    lambda.into(),
                    tau.into(),
                    i.into(),
                    s.into(),
                    predict_member(s, tau)?.into(),
                ]);
            }
        }
    }
    emit(t, &a.output)
}

fn coordinate_columns(d: usize) -> Vec<String> {
    (0..d).map(|i| format!("x{i}")).collect()
}

pub fn synth(a: SynthArgs) -> CliResult<()> {
    let (points, labels) = sample_labeled(&a.task, a.n, a.seed)?;
    let mut cols = coordinate_columns(a.task.dim());
    cols.push("component".into());
    let mut t = Table::new(cols);
    t.meta("task", a.task).meta("n", a.n).meta("seed", a.seed);
    for (p, l) in points.iter().zip(&labels) {
        let mut row: Vec<Cell> = p.iter().map(|v| Cell::from(*v)).collect();
        row.push((*l).into());
        t.push(row);
    }

    if let (Some(res), Some(path)) = (a.grid, &a.grid_out) {
        let grid = reference_grid(&a.task, res)?;
        let mut cols = coordinate_columns(a.task.dim());
        cols.push("inside".into());
        let mut g = Table::new(cols);
        g.meta("task", a.task)
            .meta("resolution", res)
            .meta("cell_volume", fmt_num(grid.cell_volume));
        for (p, inside) in grid.points.iter().zip(&grid.inside) {
            let mut row: Vec<Cell> = p.iter().map(|v| Cell::from(*v)).collect();
            row.push((*inside).into());
            g.push(row);
        }
        stamp(&mut g, a.output.no_timestamp);
        fs::write(path, g.to_csv())?;
    }
    emit(t, &a.output)
}

pub fn verify_bounds(a: VerifyArgs) -> CliResult<()> {
    let mut runs: Vec<(&str, Vec<TrialRecord>)> = Vec::new();
    if matches!(a.harness, Harness::Concentration | Harness::All) {
        let cfg = ConcentrationConfig {
            task: a.task,
            kernel: KernelSpec::abel(a.sigma)?,
            n: a.n,
            delta: a.delta,
            trials: a.trials,
            reference_n: a.reference_n,
            seed: a.seed,
        };
        runs.push(("concentration", concentration_harness(&cfg)?));
    }
    if matches!(a.harness, Harness::Bernstein | Harness::All) {
        runs.push((
            "bernstein",
            bernstein_coin_harness(a.n, a.delta, a.trials, a.seed)?,
        ));
    }

    let budget = violation_budget(a.delta);
    let mut t = Table::new([
        "harness", "trial", "n", "delta", "observed", "bound", "violated",
    ]);
    t.meta("budget", fmt_num(budget));
    for (name, records) in &runs {
        let frac = violation_fraction(records);
        t.meta(format!("violation_fraction_{name}"), fmt_num(frac));
        eprintln!(
            "{name}: {} of {} trials above the bound (fraction {}, budget {})",
            records.iter().filter(|r| r.violated).count(),
            records.len(),
            fmt_num(frac),
            fmt_num(budget)
        );
        for r in records {
            t.push(vec![
                (*name).into(),
                r.trial.into(),
                r.n.into(),
                r.delta.into(),
                r.observed.into(),
                r.bound.into(),
                r.violated.into(),
            ]);
        }
    }
    emit(t, &a.output)
}
