use teamform::harness::experiments::seeded_split;
use teamform::nash::{solve_backward_induction, ThresholdMode};
use teamform::{shapley, BoardDistribution};

fn main() {
    let (_, test) = seeded_split(&BoardDistribution::d(), 1, 20, 2024).unwrap();
    for (j, b) in test.boards.iter().enumerate() {
        let phi = shapley(b).unwrap();
        let sol = solve_backward_induction(b, 20, 10, ThresholdMode::Real).unwrap();
        let dev: f64 = phi
            .values()
            .iter()
            .zip(&sol.normalized)
            .map(|(p, u)| (p - u).abs())
            .fold(0.0, f64::max);
        println!(
            "board {j} w={:?} phi={:?} u={:?} maxdev={:.3}",
            b.weights().iter().map(|w| *w as i64).collect::<Vec<_>>(),
            phi.values().iter().map(|v| (v * 1000.0).round() / 1000.0).collect::<Vec<_>>(),
            sol.normalized.iter().map(|v| (v * 1000.0).round() / 1000.0).collect::<Vec<_>>(),
            dev
        );
    }
}
