use teamform::harness::experiments::shapley_regression;
use teamform::BoardDistribution;

fn main() {
    for (epochs, seed) in [(5000usize, 11u64), (5000, 3)] {
        let t0 = std::time::Instant::now();
        let rep = shapley_regression(&BoardDistribution::d(), 3000, 20, epochs, seed).unwrap();
        println!(
            "epochs={epochs} seed={seed}: train mse {:.6} test mse {:.6} R2 {:.4} in {:.1}s",
            rep.train_mse, rep.test_mse, rep.test_r2, t0.elapsed().as_secs_f64()
        );
    }
}
