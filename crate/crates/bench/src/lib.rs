//! Shared fixtures for the criterion benchmarks.

use spectral_support::{synth, KernelSpec, Point, Task};

/// `n` points on the unit circle, fixed seed.
pub fn circle(n: usize) -> Vec<Point> {
    synth::sample(&Task::Circle, n, 0xC1C1E).expect("valid task")
}

pub fn abel() -> KernelSpec {
    KernelSpec::abel(0.5).expect("positive bandwidth")
}
