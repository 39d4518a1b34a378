use serde::Serialize;

use crate::error::Result;
use crate::mdp::{Mdp, Trajectory};
use crate::policy::Policy;
use crate::shaping::{ShapedBatch, ShapedObjective};

/// `d̂ = ĝ + Σ_k î_k` with its components.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GradientEstimate {
    pub direction: Vec<f64>,
    pub extrinsic: Vec<f64>,
    /// One entry per bonus, already scaled by its weight.
    pub intrinsic: Vec<Vec<f64>>,
    pub histories: usize,
    pub horizon: usize,
    pub seed: u64,
}

impl GradientEstimate {
    pub fn norm(&self) -> f64 {
        self.direction.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// `(1/N) Σ_n Σ_t ∇log π(a_t|s_t) · scale · Σ_{t'≥t} γ^{t'} r_{t'}` where
/// `rewards` selects the reward sequence of each trajectory.
pub fn reinforce<S, A, P>(
    policy: &P,
    trajectories: &[Trajectory<S, A>],
    gamma: f64,
    scale: f64,
    rewards: impl Fn(&Trajectory<S, A>) -> &[f64],
) -> Vec<f64>
where
    P: Policy<S, Action = A>,
{
    let mut grad = vec![0.0; policy.params().len()];
    if scale == 0.0 || trajectories.is_empty() {
        return grad;
    }
    let mut to_go = Vec::new();
    for traj in trajectories {
        let r = rewards(traj);
        to_go.clear();
        to_go.resize(r.len(), 0.0);
        let mut discount = 1.0;
        for (g, x) in to_go.iter_mut().zip(r) {
            *g = discount * x;
            discount *= gamma;
        }
        let mut acc = 0.0;
        for g in to_go.iter_mut().rev() {
            acc += *g;
            *g = scale * acc;
        }
        policy.accumulate_scores(
            traj.states.iter().zip(&traj.actions).zip(to_go.iter().copied()).map(|((s, a), w)| (s, a, w)),
            &mut grad,
        );
    }
    let n = trajectories.len() as f64;
    grad.iter_mut().for_each(|g| *g /= n);
    grad
}

/// `ĝ` on a fresh batch.
pub fn reinforce_extrinsic<M, P>(obj: &ShapedObjective<M>, policy: &P, seed: u64) -> Result<Vec<f64>>
where
    M: Mdp,
    P: Policy<M::State, Action = M::Action>,
{
    let trajectories = crate::mdp::sample_batch(obj.mdp, policy, obj.histories, obj.horizon, seed)?;
    Ok(reinforce(policy, &trajectories, obj.mdp.discount(), 1.0, |t| &t.rewards))
}

/// `î_k` on a shaped batch: the bonus values are treated as fixed rewards.
pub fn reinforce_intrinsic<M, P>(
    obj: &ShapedObjective<M>,
    policy: &P,
    batch: &ShapedBatch<M::State, M::Action>,
    bonus: usize,
) -> Vec<f64>
where
    M: Mdp,
    P: Policy<M::State, Action = M::Action>,
{
    let weight = obj.bonuses[bonus].weight;
    reinforce(policy, &batch.trajectories, obj.mdp.discount(), weight, |t| &t.intrinsic[bonus])
}

/// All components on one shared batch.
pub fn estimate_from_batch<M, P>(
    obj: &ShapedObjective<M>,
    policy: &P,
    batch: &ShapedBatch<M::State, M::Action>,
) -> GradientEstimate
where
    M: Mdp,
    P: Policy<M::State, Action = M::Action>,
{
    let extrinsic = reinforce(policy, &batch.trajectories, obj.mdp.discount(), 1.0, |t| &t.rewards);
    let intrinsic: Vec<Vec<f64>> = (0..obj.bonuses.len())
        .map(|k| reinforce_intrinsic(obj, policy, batch, k))
        .collect();
    let mut direction = extrinsic.clone();
    for (k, i) in intrinsic.iter().enumerate() {
        if obj.bonuses[k].weight == 0.0 {
            continue;
        }
        direction.iter_mut().zip(i).for_each(|(d, x)| *d += x);
    }
    GradientEstimate {
        direction,
        extrinsic,
        intrinsic,
        histories: batch.trajectories.len(),
        horizon: obj.horizon,
        seed: batch.seed,
    }
}

/// Samples a shaped batch and returns the ascent direction for `L`.
pub fn estimate_direction<M, P>(
    obj: &ShapedObjective<M>,
    policy: &P,
    seed: u64,
) -> Result<(GradientEstimate, ShapedBatch<M::State, M::Action>)>
where
    M: Mdp,
    P: Policy<M::State, Action = M::Action>,
{
    let batch = obj.sample(policy, seed)?;
    Ok((estimate_from_batch(obj, policy, &batch), batch))
}
