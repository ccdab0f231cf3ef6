use spectral_support::eval::{hausdorff, median, Metric};
use spectral_support::selection::{lambda_curvature, width_heuristic, DEFAULT_K};
use spectral_support::synth::{reference_grid, reference_support, sample};
use spectral_support::{fit, Algorithm, FilterSpec, KernelSpec, SupportModel, Task};

/// `F_n(x) = ⟨r(T_n) K_x, K_x⟩ ≤ ‖r(T_n)‖ K(x, x)`, and `‖r(T_n)‖ = r(σ₁)`.
#[test]
fn score_never_exceeds_filter_at_top_eigenvalue() {
    for (task, sigma, lambda) in [
        (Task::Circle, 0.1, 0.3),
        (Task::Circle, 5.0, 0.3),
        (Task::TwoMoons { noise: 0.1 }, 0.5, 1e-2),
        (Task::Cube { dim: 3 }, 1.0, 1e-3),
    ] {
        let train = sample(&task, 150, 21).unwrap();
        let filter = FilterSpec::tikhonov(lambda).unwrap();
        let model = SupportModel::fit(
            train,
            KernelSpec::abel(sigma).unwrap(),
            filter,
            Algorithm::Spectral,
        )
        .unwrap();
        let top = model.decomposition().unwrap().eigenvalues()[0];
        let ceiling = filter.r_value(top).unwrap();
        let grid = reference_grid(&task, 21).unwrap();
        let scores = model.score_batch(&grid.points).unwrap();
        let worst = scores.iter().copied().fold(0.0, f64::max);
        assert!(
            worst <= ceiling * (1.0 + 1e-12),
            "{task}: {worst} > {ceiling}"
        );
    }
}

#[test]
fn samples_approach_the_support() {
    for task in [
        Task::Circle,
        Task::Segment,
        Task::TwoCircles,
        Task::TwoMoons { noise: 0.0 },
    ] {
        let truth = reference_support(&task, 400).unwrap();
        let medians: Vec<f64> = [50, 200, 800]
            .iter()
            .map(|&n| {
                let d: Vec<f64> = (0..10)
                    .map(|s| {
                        hausdorff(&sample(&task, n, s).unwrap(), &truth, &Metric::Euclidean)
                            .unwrap()
                    })
                    .collect();
                median(&d)
            })
            .collect();
        assert!(
            medians.windows(2).all(|w| w[1] <= w[0]),
            "{task}: {medians:?}"
        );
    }
}

#[test]
fn heuristic_pipeline_separates_moons() {
    let task = Task::TwoMoons { noise: 0.05 };
    let train = spectral_support::synth::sample_component(&task, 0, 200, 1).unwrap();
    let sigma = width_heuristic(&train, DEFAULT_K).unwrap();
    let kernel = KernelSpec::abel(sigma).unwrap();
    let probe = fit(
        train.clone(),
        kernel.clone(),
        FilterSpec::spectral_cutoff(1e-3).unwrap(),
    )
    .unwrap();
    let eigs: Vec<f64> = probe
        .decomposition()
        .unwrap()
        .eigenvalues()
        .iter()
        .copied()
        .collect();
    let lambda = lambda_curvature(&eigs).unwrap();
    assert!(eigs.contains(&lambda));
    let model = fit(train, kernel, FilterSpec::tikhonov(lambda).unwrap()).unwrap();
    let on = spectral_support::synth::sample_component(&task, 0, 100, 2).unwrap();
    let off = spectral_support::synth::sample_component(&task, 1, 100, 3).unwrap();
    let a = median(&model.score_batch(&on).unwrap());
    let b = median(&model.score_batch(&off).unwrap());
    assert!(a > b, "{a} vs {b}");
}

#[test]
fn kernel_and_filter_specs_round_trip_through_text() {
    for k in [
        "kernel=abel sigma=0.5",
        "kernel=l1exp sigma=2",
        "kernel=linear normalized=true",
        "kernel=product factors=abel(1)@0..1;gaussian(0.25)@1..3",
    ] {
        let spec: KernelSpec = k.parse().unwrap();
        assert_eq!(spec.to_string().parse::<KernelSpec>().unwrap(), spec);
    }
    for f in [
        "filter=tikhonov lambda=0.001",
        "filter=landweber m=7",
        "filter=kpca rank=3",
    ] {
        let spec: FilterSpec = f.parse().unwrap();
        assert_eq!(spec.to_string().parse::<FilterSpec>().unwrap(), spec);
    }
}
