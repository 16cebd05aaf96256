use teamform::env::propose_accept::PaConfig;
use teamform::harness::experiments::{seeded_split, shapley_correspondence, EnvKind};
use teamform::learner::population::RlConfig;
use teamform::BoardDistribution;

fn main() {
    let pa = PaConfig { total_reward: 10, ..PaConfig::default() };
    let rl = RlConfig {
        episodes: 25_000,
        learning_rate: 1e-3,
        curve_window: 5000,
        ..RlConfig::default()
    };
    for (label, dist) in [("D", BoardDistribution::d()), ("D'", BoardDistribution::d_prime())] {
        let (train, test) = seeded_split(&dist, 40, 10, 701).unwrap();
        let t0 = std::time::Instant::now();
        let rep = shapley_correspondence(
            &EnvKind::ProposeAccept(pa.clone()),
            &train,
            &test,
            &rl,
            2,
            1500,
            702,
        )
        .unwrap();
        println!(
            "{label}: r = {:.4}, mad = {:.4} over {} pairs in {:.0}s",
            rep.pearson,
            rep.mean_abs_dev,
            rep.pairs.len(),
            t0.elapsed().as_secs_f64()
        );
    }
}
