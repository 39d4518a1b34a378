use std::io::Write;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::mdp::Mdp;
use crate::num::num;
use crate::policy::Policy;
use crate::rng;
use crate::shaping::ShapedObjective;

use super::estimator::estimate_from_batch;
use super::optim::OptimizerState;

/// Estimates at the parameters an update started from.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainRecord {
    pub iter: usize,
    pub j_hat: f64,
    pub l_hat: f64,
    pub intrinsic: Vec<f64>,
    pub grad_norm: f64,
    pub seed: u64,
    /// Wall time of the iteration; 0 unless wall-clock logging is enabled.
    pub ms: u64,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct TrainLog {
    /// Bonus labels, one `Jint_<label>` column each.
    pub labels: Vec<String>,
    pub records: Vec<TrainRecord>,
}

impl TrainLog {
    pub fn header(&self) -> String {
        let mut cols = vec!["iter".to_string(), "J_hat".into(), "L_hat".into()];
        cols.extend(self.labels.iter().map(|l| format!("Jint_{l}")));
        cols.extend(["grad_norm".into(), "seed".into(), "ms".into()]);
        cols.join(",")
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{}", self.header())?;
        for r in &self.records {
            write!(out, "{},{},{}", r.iter, num(r.j_hat), num(r.l_hat))?;
            for v in &r.intrinsic {
                write!(out, ",{}", num(*v))?;
            }
            writeln!(out, ",{},{},{}", num(r.grad_norm), r.seed, r.ms)?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is ascii")
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutcome<P> {
    pub log: TrainLog,
    pub policy: P,
    pub optimizer: OptimizerState,
    /// Diagnostic of a rejected update that stopped the run early.
    pub halted: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrainSettings {
    pub iterations: usize,
    pub seed: u64,
    pub wall_clock: bool,
}

/// Batch seed of iteration `iter`.
pub fn iteration_seed(seed: u64, iter: usize) -> u64 {
    rng::derive(seed, iter as u64)
}

pub fn train<M, P>(
    obj: &ShapedObjective<M>,
    policy: P,
    optimizer: OptimizerState,
    iterations: usize,
    seed: u64,
) -> Result<TrainOutcome<P>>
where
    M: Mdp,
    P: Policy<M::State, Action = M::Action>,
{
    let settings = TrainSettings {
        iterations,
        seed,
        wall_clock: false,
    };
    train_with_observer(obj, policy, optimizer, settings, |_, _| Ok(()))
}

/// Sample, estimate, update. `observer(i, π_i)` sees the policy before every
/// update and the final policy (`i = iterations`, or the halting iteration).
pub fn train_with_observer<M, P, F>(
    obj: &ShapedObjective<M>,
    mut policy: P,
    mut optimizer: OptimizerState,
    settings: TrainSettings,
    mut observer: F,
) -> Result<TrainOutcome<P>>
where
    M: Mdp,
    P: Policy<M::State, Action = M::Action>,
    F: FnMut(usize, &P) -> Result<()>,
{
    let mut log = TrainLog {
        labels: obj.bonuses.iter().map(|b| b.label.clone()).collect(),
        records: Vec::with_capacity(settings.iterations),
    };
    let mut halted = None;
    for iter in 0..settings.iterations {
        observer(iter, &policy)?;
        let start = Instant::now();
        let seed = iteration_seed(settings.seed, iter);
        let batch = obj.sample(&policy, seed)?;
        let estimate = obj.summarize(&batch);
        let grad = estimate_from_batch(obj, &policy, &batch);
        let step = optimizer.update(policy.params(), &grad.direction);
        let ms = if settings.wall_clock {
            start.elapsed().as_millis() as u64
        } else {
            0
        };
        log.records.push(TrainRecord {
            iter,
            j_hat: estimate.j().mean,
            l_hat: estimate.l().mean,
            intrinsic: (0..obj.bonuses.len()).map(|k| estimate.intrinsic(k).mean).collect(),
            grad_norm: grad.norm(),
            seed,
            ms,
        });
        match step {
            Ok(next) => policy = policy.with_params(&next),
            Err(Error::UpdateRejected(msg)) => {
                halted = Some(msg);
                break;
            }
            Err(e) => return Err(e),
        }
    }
    observer(log.records.len(), &policy)?;
    Ok(TrainOutcome {
        log,
        policy,
        optimizer,
        halted,
    })
}
