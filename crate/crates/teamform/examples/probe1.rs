use teamform::harness::experiments::{nash_shapley_correlation, seeded_split, shapley_regression};
use teamform::BoardDistribution;

fn main() {
    // criterion 4: 20-board D test set, r=20, T=10
    for seed in [1u64, 7, 42, 2024] {
        let (_, test) = seeded_split(&BoardDistribution::d(), 1, 20, seed).unwrap();
        let rep = nash_shapley_correlation(&test, 20, 10).unwrap();
        println!("nash-corr seed={seed}: r = {:.4} over {} pairs", rep.pearson, rep.pairs.len());
    }
    // criterion 10: 3000 boards, 20 hidden units
    let t0 = std::time::Instant::now();
    let rep = shapley_regression(&BoardDistribution::d(), 3000, 20, 400, 11).unwrap();
    println!(
        "regression: train mse {:.6} test mse {:.6} R2 {:.4} in {:.1}s",
        rep.train_mse, rep.test_mse, rep.test_r2, t0.elapsed().as_secs_f64()
    );
}
