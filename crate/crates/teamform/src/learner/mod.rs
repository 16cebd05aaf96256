//! Independent multi-agent reinforcement learning: SARSA(lambda) with an MLP
//! action-value network for Propose-Accept, and advantage actor-critic with
//! V-trace and a convolutional network for Team Patches.

pub mod actor_critic;
pub mod net;
pub mod population;
pub mod sarsa;
pub mod vtrace;

pub use actor_critic::{AcHyper, AcLearner};
pub use net::{masked_softmax, AdamHyper, ConvAc, Mlp, Optimizer, ParamSet};
pub use population::{
    evaluate_pa, evaluate_tp, train_pa_population, train_tp_population, Checkpoint, CurvePoint,
    EvalSeat, PaPopulation, RlConfig, SeatSpec, TpPopulation,
};
pub use sarsa::{sarsa_lambda_update, SarsaHyper, SarsaLearner, Transition};
pub use vtrace::{vtrace_targets, VTraceOutput};

/// Q-value of one action: the MLP forward pass restricted to an index.
pub fn value_forward(net: &Mlp, observation: &[f64], action: usize) -> crate::error::Result<f64> {
    if observation.len() != net.in_dim() {
        return Err(crate::error::Error::Contract(format!(
            "observation length {} does not match the network input {}",
            observation.len(),
            net.in_dim()
        )));
    }
    if action >= net.out_dim() {
        return Err(crate::error::Error::Contract(format!(
            "action {action} out of range for {} outputs",
            net.out_dim()
        )));
    }
    Ok(net.forward(observation)[action])
}

/// Masked policy distribution and state value from the conv actor-critic.
pub fn policy_value_forward(
    net: &ConvAc,
    grid: &ndarray::Array3<f64>,
    extras: &[f64],
    mask: Option<&[bool]>,
) -> crate::error::Result<(Vec<f64>, f64)> {
    net.policy_value(grid, extras, mask)
}
