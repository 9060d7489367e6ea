//! Negative-sampled training: link and location objectives, backpropagation
//! through time, AdaGrad, and the alternating epoch loop.

mod adagrad;
mod grads;
mod network;
mod sampling;
mod trajectory;

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

pub use adagrad::{adagrad_update, OptimizerState};
pub use grads::{Gradients, SparseRows};
pub use network::{network_iteration, network_loss, sampled_network_loss_and_grads, NetworkBatch, NetworkSample};
pub use sampling::{sample_negative_links, sample_negative_locations};
pub use trajectory::{
    clip_bounds, sampled_location_loss, trajectory_iteration, trajectory_loss, trajectory_loss_and_grads,
    LocationLoss, TrajectoryBatch, TrajectorySample,
};

use crate::data::{Dataset, SocialGraph, Splits};
use crate::error::{Error, Result};
use crate::eval::{eval_next_location_on, EvalTarget, Mode, Slice};
use crate::model::{write_checkpoint, Checkpoint, ModelParams, TensorId, VariantMask};
use crate::rng::{self, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub dim: usize,
    pub learning_rate: f64,
    /// Negative links per user per network pass.
    pub n1_per_user: usize,
    /// Negative locations per prediction.
    pub n2: usize,
    pub max_iterations: usize,
    pub batch_users: usize,
    pub seed: u64,
    pub init_range: f64,
    pub adagrad_epsilon: f64,
    pub variant: VariantMask,
    /// Epochs without validation improvement before stopping; 0 disables.
    pub patience: usize,
    /// Write measured seconds to the log; when off the column is 0.
    pub record_wall_time: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dim: 50,
            learning_rate: 0.1,
            n1_per_user: 100,
            n2: 100,
            max_iterations: 50,
            batch_users: 32,
            seed: 0,
            init_range: 0.02,
            adagrad_epsilon: 1e-8,
            variant: VariantMask::FULL,
            patience: 3,
            record_wall_time: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::config("dim", "must be positive"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config("learning_rate", "must be positive"));
        }
        if self.batch_users == 0 {
            return Err(Error::config("batch_users", "must be positive"));
        }
        if !(self.init_range >= 0.0 && self.init_range.is_finite()) {
            return Err(Error::config("init_range", "must be non-negative"));
        }
        if !(self.adagrad_epsilon > 0.0) {
            return Err(Error::config("adagrad_epsilon", "must be positive"));
        }
        Ok(())
    }
}

/// Every entry i.i.d. uniform on `[-init_range, init_range)`, drawn in
/// checkpoint tensor order from the init stream.
pub fn init_params(config: &TrainConfig, num_users: usize, num_locations: usize) -> ModelParams {
    let mut params = ModelParams::zeros(num_users, num_locations, config.dim);
    if config.init_range == 0.0 {
        return params;
    }
    let mut rng = rng::stream(config.seed, Stream::Init);
    let r = config.init_range;
    for t in TensorId::ALL {
        for v in params.tensor_mut(t).data.iter_mut() {
            *v = rng.gen::<f64>() * 2.0 * r - r;
        }
    }
    params
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub net_loss: f64,
    pub traj_loss: f64,
    /// Absent when no validation positions exist.
    pub val_recall5: Option<f64>,
    pub seconds: f64,
}

pub const LOG_HEADER: &str = "epoch,net_loss,traj_loss,val_recall5,seconds";

pub fn format_log(log: &[EpochRecord]) -> String {
    let mut out = String::from(LOG_HEADER);
    out.push('\n');
    for r in log {
        let val = r.val_recall5.map(|v| format!("{v:.6}")).unwrap_or_default();
        let _ = writeln!(out, "{},{:.6},{:.6},{},{:.3}", r.epoch, r.net_loss, r.traj_loss, val, r.seconds);
    }
    out
}

pub fn write_log_csv(path: impl AsRef<Path>, log: &[EpochRecord]) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_log(log)).map_err(|e| Error::io(path, e))
}

/// Network objective over `users` in batches of `batch_users`, one AdaGrad
/// step per batch. Returns the summed batch losses.
pub fn network_pass(
    params: &mut ModelParams,
    optimizer: &mut OptimizerState,
    graph: &SocialGraph,
    users: &[usize],
    config: &TrainConfig,
    rng: &mut impl Rng,
) -> Result<f64> {
    let mut total = 0.0;
    for chunk in users.chunks(config.batch_users) {
        let batch = NetworkBatch::sample(graph, chunk, config.n1_per_user, rng);
        let (loss, grads) = sampled_network_loss_and_grads(params, &batch);
        adagrad_update(params, &grads, optimizer, config.learning_rate, config.adagrad_epsilon)?;
        total += loss;
    }
    Ok(total)
}

/// Trajectory objective over `users` in batches, one AdaGrad step per batch.
pub fn trajectory_pass(
    params: &mut ModelParams,
    optimizer: &mut OptimizerState,
    dataset: &Dataset,
    splits: &Splits,
    users: &[usize],
    config: &TrainConfig,
    rng: &mut impl Rng,
) -> Result<f64> {
    let mut total = 0.0;
    for chunk in users.chunks(config.batch_users) {
        let batch = TrajectoryBatch::sample(dataset, splits, chunk, config, rng);
        let (loss, grads) = trajectory_loss_and_grads(params, &batch);
        adagrad_update(params, &grads, optimizer, config.learning_rate, config.adagrad_epsilon)?;
        total += loss;
    }
    Ok(total)
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters at the best validation epoch (or the last epoch when no
    /// validation positions exist).
    pub params: ModelParams,
    pub last_params: ModelParams,
    pub log: Vec<EpochRecord>,
    pub best_epoch: Option<usize>,
}

/// Alternates a network pass and a trajectory pass per epoch, each applied
/// in AdaGrad mini-batches of `batch_users` users, and tracks validation
/// Recall@5. Writes the best parameters so far to `checkpoint` when given.
pub fn train(
    dataset: &Dataset,
    splits: &Splits,
    config: &TrainConfig,
    checkpoint: Option<&Path>,
) -> Result<TrainOutcome> {
    config.validate()?;
    let num_users = dataset.num_users();
    let graph = splits.train_graph(num_users);
    let mut params = init_params(config, num_users, dataset.num_locations());
    let mut optimizer = OptimizerState::new(&params);
    let mut link_rng = rng::stream(config.seed, Stream::LinkNegatives);
    let mut loc_rng = rng::stream(config.seed, Stream::LocationNegatives);
    let mut shuffle_rng = rng::stream(config.seed, Stream::Shuffle);

    let save = |params: &ModelParams| -> Result<()> {
        match checkpoint {
            Some(path) => write_checkpoint(
                path,
                &Checkpoint {
                    params: params.clone(),
                    mask: config.variant,
                    users: dataset.users.clone(),
                    locations: dataset.locations.clone(),
                },
            ),
            None => Ok(()),
        }
    };
    save(&params)?;

    let mut log = Vec::new();
    let mut best: Option<f64> = None;
    let mut best_params = params.clone();
    let mut best_epoch = None;
    let mut stale = 0;
    let mut order: Vec<usize> = (0..num_users).collect();

    for epoch in 1..=config.max_iterations {
        let started = Instant::now();
        order.shuffle(&mut shuffle_rng);

        let net_loss = network_pass(&mut params, &mut optimizer, &graph, &order, config, &mut link_rng)?;
        let traj_loss = trajectory_pass(&mut params, &mut optimizer, dataset, splits, &order, config, &mut loc_rng)?;

        let val = eval_next_location_on(
            &params,
            config.variant,
            dataset,
            splits,
            EvalTarget::Validation,
            &[5],
            Mode::General,
            Slice::All,
        )
        .recall(5);
        let improved = match (val, best) {
            (Some(v), Some(b)) => v > b,
            _ => true,
        };
        if improved {
            best = val.or(best);
            best_params.clone_from(&params);
            best_epoch = Some(epoch);
            stale = 0;
            save(&params)?;
        } else {
            stale += 1;
        }
        let seconds = if config.record_wall_time { started.elapsed().as_secs_f64() } else { 0.0 };
        log.push(EpochRecord { epoch, net_loss, traj_loss, val_recall5: val, seconds });
        if config.patience > 0 && stale >= config.patience {
            break;
        }
    }

    Ok(TrainOutcome { params: best_params, last_params: params, log, best_epoch })
}
