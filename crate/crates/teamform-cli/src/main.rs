//! Command-line front end: board generation, Shapley values, the Nash
//! solver, population training/evaluation, and the paper-style experiment
//! runs. Every experiment writes CSV outputs plus a manifest recording the
//! resolved config and seed, and reruns with the same inputs are
//! byte-identical.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use teamform::boards::{empirical_weight_std, BoardSet};
use teamform::bots::BotMode;
use teamform::harness::config::ExperimentConfig;
use teamform::harness::experiments::{self, EnvKind};
use teamform::harness::report::{fmt_f64, write_csv, write_manifest};
use teamform::learner::population::{
    evaluate_pa, evaluate_tp, train_pa_population, train_tp_population, write_curves_csv,
    Checkpoint, SeatSpec,
};
use teamform::nash::{solve_backward_induction, ThresholdMode};
use teamform::{generate_split, shapley, Board, BoardDistribution};

#[derive(Parser)]
#[command(name = "teamform", version, about = "Negotiation and team-formation laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// TOML experiment config; unset fields fall back to desk-scale defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for CSVs and the manifest.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

impl ConfigArgs {
    fn load(&self) -> anyhow::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)
                .with_context(|| format!("loading config {}", path.display()))?,
            None => ExperimentConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        std::fs::create_dir_all(&self.out)?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Sample a train/test board split and store it as text files.
    GenBoards {
        #[arg(long, default_value_t = 5)]
        n: usize,
        #[arg(long, default_value_t = 15.0)]
        quota: f64,
        #[arg(long, default_value_t = 6.0)]
        mean: f64,
        #[arg(long, default_value_t = 1.0)]
        std: f64,
        #[arg(long, default_value_t = 150)]
        train: usize,
        #[arg(long, default_value_t = 50)]
        test: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Reject boards on which every agent has identical power.
        #[arg(long, default_value_t = false)]
        exclude_equal_power: bool,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Exact Shapley values for one board or a board file.
    Shapley {
        /// Board file; values print per line per board.
        #[arg(long, conflicts_with_all = ["weights", "quota"])]
        board: Option<PathBuf>,
        /// Inline weights, comma-separated (e.g. 5,6,7,5,4).
        #[arg(long)]
        weights: Option<String>,
        #[arg(long)]
        quota: Option<f64>,
    },
    /// Backward-induction equilibrium of the fixed-horizon game.
    SolveNash {
        #[arg(long)]
        board: PathBuf,
        #[arg(long, default_value_t = 20)]
        reward: u32,
        #[arg(long, default_value_t = 10)]
        rounds: u32,
        /// Integer-threshold variant (a = floor(expectation) + 1).
        #[arg(long, default_value_t = false)]
        integer_thresholds: bool,
        /// Output CSV (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train a population and write a checkpoint plus learning curves.
    Train {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Environment: pa (Propose-Accept) or tp (Team Patches).
        #[arg(long, default_value = "pa")]
        env: String,
        /// Pin a bot into one seat, as `seat:mode` (e.g. 0:weight).
        #[arg(long)]
        bot: Option<String>,
        /// Write a trajectory log for the first evaluation episodes.
        #[arg(long)]
        episodes: Option<usize>,
    },
    /// Evaluate a frozen checkpoint on the test boards.
    Evaluate {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        episodes: Option<usize>,
    },
    /// All-RL vs single-bot comparison with a Mann-Whitney test.
    CompareBots {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, default_value = "random")]
        bot: String,
        /// Evaluate against a different bot than the one trained against.
        #[arg(long)]
        eval_bot: Option<String>,
    },
    /// Shapley-value vs empirical-reward correspondence.
    Correspondence {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, default_value = "pa")]
        env: String,
        /// Use the reduced-variance distribution (keep equal-power boards).
        #[arg(long, default_value_t = false)]
        dprime: bool,
        /// Append Shapley values to the observations.
        #[arg(long, default_value_t = false)]
        shapley_aware: bool,
    },
    /// Spatial-perturbation sweep over spawn offsets.
    Perturb {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Supervised Shapley regression on sampled boards.
    Regress {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Correlation between Shapley values and Nash equilibrium payoffs.
    NashCorr {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
}

fn parse_bot(s: &str) -> anyhow::Result<BotMode> {
    s.parse::<BotMode>().map_err(|e| anyhow::anyhow!("{e}"))
}

fn pair_csv(pairs: &[experiments::CorrespondencePair]) -> Vec<Vec<String>> {
    pairs
        .iter()
        .map(|p| {
            vec![p.board.to_string(), p.seat.to_string(), fmt_f64(p.shapley), fmt_f64(p.share)]
        })
        .collect()
}

fn load_single_board(path: &Path) -> anyhow::Result<Board> {
    let set = BoardSet::load(path)?;
    match set.boards.len() {
        0 => bail!("board file {} is empty", path.display()),
        _ => Ok(set.boards[0].clone()),
    }
}

fn main() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::GenBoards {
            n,
            quota,
            mean,
            std,
            train,
            test,
            seed,
            exclude_equal_power,
            out,
        } => {
            let dist = BoardDistribution {
                n,
                quota,
                weight_mean: mean,
                weight_std: std,
                exclude_equal_power,
                integer_weights: true,
            };
            std::fs::create_dir_all(&out)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (train_set, test_set) = generate_split(&dist, &mut rng, train, test, seed)?;
            train_set.save(out.join("train.boards"))?;
            test_set.save(out.join("test.boards"))?;
            let mut std_rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5555);
            let emp = empirical_weight_std(&dist, &mut std_rng, 2000)?;
            println!(
                "wrote {} train / {} test boards to {}; empirical weight std {:.3} (nominal sigma {})",
                train_set.boards.len(),
                test_set.boards.len(),
                out.display(),
                emp,
                dist.weight_std
            );
        }
        Command::Shapley { board, weights, quota } => {
            let boards = match (board, weights, quota) {
                (Some(path), _, _) => BoardSet::load(&path)?.boards,
                (None, Some(ws), Some(q)) => {
                    let weights: Vec<f64> = ws
                        .split(',')
                        .map(|t| t.trim().parse::<f64>())
                        .collect::<Result<_, _>>()
                        .context("parsing --weights")?;
                    vec![Board::new(weights, q)?]
                }
                _ => bail!("pass either --board FILE or --weights W1,..,WN --quota Q"),
            };
            for b in &boards {
                let phi = shapley(b)?;
                let parts: Vec<String> = phi.values().iter().map(|v| fmt_f64(*v)).collect();
                println!("{}", parts.join(","));
            }
        }
        Command::SolveNash { board, reward, rounds, integer_thresholds, out } => {
            let b = load_single_board(&board)?;
            let mode = if integer_thresholds {
                ThresholdMode::IntegerCeiling
            } else {
                ThresholdMode::Real
            };
            let sol = solve_backward_induction(&b, reward, rounds, mode)?;
            let mut lines = vec!["player,expected_utility,normalized".to_string()];
            for i in 0..b.n() {
                lines.push(format!(
                    "{i},{},{}",
                    fmt_f64(sol.expected_utilities[i]),
                    fmt_f64(sol.normalized[i])
                ));
            }
            let text = lines.join("\n") + "\n";
            match out {
                Some(path) => std::fs::write(path, text)?,
                None => print!("{text}"),
            }
        }
        Command::Train { cfg, env, bot, episodes } => {
            let mut conf = cfg.load()?;
            if let Some(e) = episodes {
                conf.learner.episodes = e;
            }
            let dist = conf.boards.distribution();
            let (train_set, test_set) = experiments::seeded_split(
                &dist,
                conf.boards.n_train,
                conf.boards.n_test,
                conf.seed,
            )?;
            train_set.save(cfg.out.join("train.boards"))?;
            test_set.save(cfg.out.join("test.boards"))?;
            let n = conf.boards.n;
            let mut seats = vec![SeatSpec::Learner; n];
            if let Some(spec) = &bot {
                let (seat, mode) = spec
                    .split_once(':')
                    .ok_or_else(|| anyhow::anyhow!("--bot expects seat:mode"))?;
                let seat: usize = seat.parse()?;
                seats[seat] = SeatSpec::Bot(parse_bot(mode)?);
            }
            let ckpt_path = cfg.out.join("checkpoint.json");
            let curves_path = cfg.out.join("curves.csv");
            match env.as_str() {
                "pa" => {
                    let pop = train_pa_population(
                        &train_set,
                        &conf.propose_accept.pa_config(),
                        &conf.learner,
                        &seats,
                        conf.seed,
                    )?;
                    write_curves_csv(&pop.curves, &curves_path)?;
                    Checkpoint::for_pa(pop).save(&ckpt_path)?;
                }
                "tp" => {
                    if bot.is_some() {
                        bail!("bots are Propose-Accept only");
                    }
                    let pop = train_tp_population(
                        &train_set,
                        &conf.team_patches.tp_config()?,
                        &conf.learner,
                        conf.seed,
                    )?;
                    write_curves_csv(&pop.curves, &curves_path)?;
                    Checkpoint::for_tp(pop).save(&ckpt_path)?;
                }
                other => bail!("unknown env {other:?} (expected pa or tp)"),
            }
            write_manifest(
                &cfg.out,
                &format!("train --env {env}"),
                &conf.to_toml(),
                &[ckpt_path.clone(), curves_path],
            )?;
            println!("checkpoint written to {}", ckpt_path.display());
        }
        Command::Evaluate { cfg, checkpoint, episodes } => {
            let conf = cfg.load()?;
            let eval_episodes = episodes.unwrap_or(conf.run.eval_episodes);
            let ckpt = Checkpoint::load(&checkpoint)?;
            let dist = conf.boards.distribution();
            let (_, test_set) = experiments::seeded_split(
                &dist,
                conf.boards.n_train,
                conf.boards.n_test,
                conf.seed,
            )?;
            let mut rows = Vec::new();
            if let Some(pop) = &ckpt.pa {
                let pa = conf.propose_accept.pa_config();
                for (j, board) in test_set.boards.iter().enumerate() {
                    let rep = evaluate_pa(
                        &pop.eval_seats(),
                        board,
                        &pa,
                        eval_episodes,
                        conf.seed ^ (j as u64) << 17,
                    )?;
                    for (i, m) in rep.mean_rewards.iter().enumerate() {
                        rows.push(vec![j.to_string(), i.to_string(), fmt_f64(*m)]);
                    }
                }
            } else if let Some(pop) = &ckpt.tp {
                let tp = conf.team_patches.tp_config()?;
                for (j, board) in test_set.boards.iter().enumerate() {
                    let rep = evaluate_tp(
                        pop,
                        board,
                        &tp,
                        eval_episodes,
                        conf.seed ^ (j as u64) << 17,
                    )?;
                    for (i, m) in rep.mean_rewards.iter().enumerate() {
                        rows.push(vec![j.to_string(), i.to_string(), fmt_f64(*m)]);
                    }
                }
            } else {
                bail!("checkpoint holds no population");
            }
            let out_csv = cfg.out.join("evaluation.csv");
            write_csv(&out_csv, "board,seat,mean_reward", &rows)?;
            write_manifest(&cfg.out, "evaluate", &conf.to_toml(), &[out_csv.clone()])?;
            println!("wrote {}", out_csv.display());
        }
        Command::CompareBots { cfg, bot, eval_bot } => {
            let conf = cfg.load()?;
            let dist = conf.boards.distribution();
            let (train_set, test_set) = experiments::seeded_split(
                &dist,
                conf.boards.n_train,
                conf.boards.n_test,
                conf.seed,
            )?;
            let result = experiments::bot_comparison(
                &train_set,
                &test_set,
                &conf.propose_accept.pa_config(),
                &conf.learner,
                parse_bot(&bot)?,
                eval_bot.as_deref().map(parse_bot).transpose()?,
                conf.run.pairs,
                &conf.run.bot_seats,
                conf.run.eval_episodes,
                conf.seed,
            )?;
            let out_csv = cfg.out.join("bot_comparison.csv");
            write_csv(
                &out_csv,
                "rl_mean_share,bot_mean_share,difference,u,p,n_rl,n_bot",
                &[vec![
                    fmt_f64(result.rl_mean_share),
                    fmt_f64(result.bot_mean_share),
                    fmt_f64(result.difference),
                    fmt_f64(result.u_statistic),
                    fmt_f64(result.p_value),
                    result.n_rl.to_string(),
                    result.n_bot.to_string(),
                ]],
            )?;
            write_manifest(
                &cfg.out,
                &format!("compare-bots --bot {bot}"),
                &conf.to_toml(),
                &[out_csv],
            )?;
            println!(
                "RL {:.4} vs bot {:.4} (d={:+.4}), Mann-Whitney p={:.4}",
                result.rl_mean_share, result.bot_mean_share, result.difference, result.p_value
            );
        }
        Command::Correspondence { cfg, env, dprime, shapley_aware } => {
            let conf = cfg.load()?;
            let mut dist = conf.boards.distribution();
            if dprime {
                dist.exclude_equal_power = false;
            }
            let (train_set, test_set) = experiments::seeded_split(
                &dist,
                conf.boards.n_train,
                conf.boards.n_test,
                conf.seed,
            )?;
            let kind = match env.as_str() {
                "pa" => {
                    let mut pa = conf.propose_accept.pa_config();
                    pa.shapley_aware = shapley_aware || pa.shapley_aware;
                    EnvKind::ProposeAccept(pa)
                }
                "tp" => EnvKind::TeamPatches(conf.team_patches.tp_config()?),
                other => bail!("unknown env {other:?}"),
            };
            let rep = experiments::shapley_correspondence(
                &kind,
                &train_set,
                &test_set,
                &conf.learner,
                conf.run.populations,
                conf.run.eval_episodes,
                conf.seed,
            )?;
            let out_csv = cfg.out.join("correspondence.csv");
            write_csv(&out_csv, "board,seat,shapley,share", &pair_csv(&rep.pairs))?;
            write_manifest(
                &cfg.out,
                &format!("correspondence --env {env} dprime={dprime}"),
                &conf.to_toml(),
                &[out_csv],
            )?;
            println!(
                "pearson r = {:.4}, mean |share - shapley| = {:.4} over {} pairs",
                rep.pearson,
                rep.mean_abs_dev,
                rep.pairs.len()
            );
        }
        Command::Perturb { cfg } => {
            let conf = cfg.load()?;
            let dist = conf.boards.distribution();
            let (train_set, test_set) = experiments::seeded_split(
                &dist,
                conf.boards.n_train,
                conf.boards.n_test,
                conf.seed,
            )?;
            let mut rl = conf.learner.clone();
            rl.episodes = conf.run.perturb_episodes;
            let base = conf.team_patches.tp_config()?;
            let rep = experiments::spatial_perturbation(
                &train_set,
                &test_set,
                &base,
                &rl,
                conf.run.perturb_max_offset,
                conf.run.perturb_eval_episodes,
                conf.seed,
            )?;
            let rows: Vec<Vec<String>> = rep
                .rows
                .iter()
                .map(|r| {
                    vec![
                        r.offset.to_string(),
                        fmt_f64(r.perturbed_share),
                        fmt_f64(r.unperturbed_share),
                    ]
                })
                .collect();
            let out_csv = cfg.out.join("perturbation.csv");
            write_csv(&out_csv, "offset,perturbed_share,unperturbed_share", &rows)?;
            write_manifest(&cfg.out, "perturb", &conf.to_toml(), &[out_csv])?;
            println!("spearman rho(offset, share) = {:.4}", rep.spearman);
        }
        Command::Regress { cfg } => {
            let conf = cfg.load()?;
            let rep = experiments::shapley_regression(
                &conf.boards.distribution(),
                conf.run.regression_boards,
                conf.run.regression_hidden,
                conf.run.regression_epochs,
                conf.seed,
            )?;
            let out_csv = cfg.out.join("regression.csv");
            write_csv(&out_csv, "board,seat,shapley,prediction", &pair_csv(&rep.pairs))?;
            write_manifest(&cfg.out, "regress", &conf.to_toml(), &[out_csv])?;
            println!(
                "train mse {:.6}, test mse {:.6}, test R^2 {:.4} ({} train / {} test boards)",
                rep.train_mse, rep.test_mse, rep.test_r2, rep.n_train, rep.n_test
            );
        }
        Command::NashCorr { cfg } => {
            let conf = cfg.load()?;
            let dist = conf.boards.distribution();
            let (_, test_set) = experiments::seeded_split(
                &dist,
                conf.boards.n_train,
                conf.boards.n_test,
                conf.seed,
            )?;
            let rep = experiments::nash_shapley_correlation(
                &test_set,
                conf.run.nash_reward,
                conf.run.nash_rounds,
            )?;
            let out_csv = cfg.out.join("nash_shapley.csv");
            write_csv(&out_csv, "board,seat,shapley,nash_share", &pair_csv(&rep.pairs))?;
            write_manifest(&cfg.out, "nash-corr", &conf.to_toml(), &[out_csv])?;
            println!("pearson r = {:.4} over {} pairs", rep.pearson, rep.pairs.len());
        }
    }
    Ok(())
}
