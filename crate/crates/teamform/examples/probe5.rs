use teamform::boards::{BoardSet, SetLabel};
use teamform::env::propose_accept::PaConfig;
use teamform::learner::population::{evaluate_pa, train_pa_population, RlConfig, SeatSpec};
use teamform::Board;

fn main() {
    let dictator = Board::new(vec![16.0, 1.0, 1.0, 1.0, 1.0], 15.0).unwrap();
    let boards = BoardSet { boards: vec![dictator.clone()], label: SetLabel::Train, seed: 0 };
    let pa = PaConfig { total_reward: 10, ..PaConfig::default() };
    for (episodes, lr, opt_init, seed) in
        [(30000usize, 1e-3, 10.0, 17u64), (30000, 1e-3, 5.0, 17), (30000, 2e-3, 10.0, 17)]
    {
        let rl = RlConfig {
            episodes,
            learning_rate: lr,
            optimistic_init: opt_init,
            curve_window: 5000,
            ..RlConfig::default()
        };
        let t0 = std::time::Instant::now();
        let pop = train_pa_population(&boards, &pa, &rl, &[SeatSpec::Learner; 5], seed).unwrap();
        let rep = evaluate_pa(&pop.eval_seats(), &dictator, &pa, 2000, 99).unwrap();
        println!(
            "ep={episodes} lr={lr} init={opt_init} seed={seed}: seat0 {:.3} means={:?} agree={:.2} in {:.0}s",
            rep.mean_rewards[0] / 10.0,
            rep.mean_rewards.iter().map(|m| (m * 100.0).round() / 100.0).collect::<Vec<_>>(),
            rep.agreement_rate,
            t0.elapsed().as_secs_f64()
        );
    }
}
