//! Central finite-difference oracle for the hand-written gradients.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, SocialGraph, Trajectory, Vocab};
use crate::error::{Error, Result};
use crate::model::{ModelParams, TensorId};
use crate::rng::{self, Stream};
use crate::train::{
    init_params, network_loss, sample_negative_locations, sampled_network_loss_and_grads, trajectory_loss,
    trajectory_loss_and_grads, Gradients, NetworkBatch, TrainConfig, TrajectoryBatch, TrajectorySample,
};

/// Both sampled objectives with all negatives drawn up front, so the loss is a
/// deterministic function of the parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrozenBatch {
    pub network: NetworkBatch,
    pub trajectory: TrajectoryBatch,
}

impl FrozenBatch {
    /// Every user's full trajectory and out-links.
    pub fn sample(dataset: &Dataset, config: &TrainConfig) -> Self {
        let users: Vec<usize> = (0..dataset.num_users()).collect();
        let mut link_rng = rng::stream(config.seed, Stream::LinkNegatives);
        let mut loc_rng = rng::stream(config.seed, Stream::LocationNegatives);
        let network = NetworkBatch::sample(&dataset.graph, &users, config.n1_per_user, &mut link_rng);
        let samples = dataset
            .trajectories
            .iter()
            .filter(|t| !t.is_empty())
            .map(|t| TrajectorySample {
                user: t.user_index,
                locations: t.locations.clone(),
                bounds: t.bounds.clone(),
                negatives: t
                    .locations
                    .iter()
                    .map(|&l| sample_negative_locations(dataset.num_locations(), l, config.n2, &mut loc_rng))
                    .collect(),
            })
            .collect();
        FrozenBatch { network, trajectory: TrajectoryBatch { mask: config.variant, samples } }
    }

    pub fn loss(&self, params: &ModelParams) -> f64 {
        network_loss(params, &self.network) + trajectory_loss(params, &self.trajectory)
    }

    pub fn loss_and_grads(&self, params: &ModelParams) -> (f64, Gradients) {
        let (ln, mut g) = sampled_network_loss_and_grads(params, &self.network);
        let (lt, gt) = trajectory_loss_and_grads(params, &self.trajectory);
        g.add(&gt);
        (ln + lt, g)
    }
}

/// `(loss(θ + h·e) − loss(θ − h·e)) / 2h` for one entry, on a private copy.
pub fn finite_diff_gradient(
    loss_fn: impl Fn(&ModelParams) -> f64,
    params: &ModelParams,
    entry: (TensorId, usize),
    step: f64,
) -> Result<f64> {
    let (tensor, flat) = entry;
    let mut probe = params.clone();
    let base = params.tensor(tensor).data[flat];
    probe.tensor_mut(tensor).data[flat] = base + step;
    let plus = loss_fn(&probe);
    probe.tensor_mut(tensor).data[flat] = base - step;
    let minus = loss_fn(&probe);
    for v in [plus, minus] {
        if !v.is_finite() {
            return Err(Error::NonFiniteLoss(v));
        }
    }
    Ok((plus - minus) / (2.0 * step))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GradCheckOptions {
    pub tolerance_rel: f64,
    pub tolerance_abs: f64,
    pub sample_entries_per_tensor: usize,
    pub step: f64,
    /// Seeds the choice of probed entries.
    pub seed: u64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        GradCheckOptions { tolerance_rel: 1e-5, tolerance_abs: 1e-8, sample_entries_per_tensor: 20, step: 1e-5, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TensorCheck {
    pub tensor: TensorId,
    pub max_rel: f64,
    pub max_abs: f64,
    /// Flat index of the entry with the largest relative error.
    pub worst_index: usize,
    pub entries_checked: usize,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub tensors: Vec<TensorCheck>,
    pub pass: bool,
}

pub const REPORT_HEADER: &str = "tensor,max_rel,max_abs,worst_index,pass";

impl GradCheckReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(REPORT_HEADER);
        out.push('\n');
        for t in &self.tensors {
            let _ = writeln!(out, "{},{:e},{:e},{},{}", t.tensor.name(), t.max_rel, t.max_abs, t.worst_index, t.pass);
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for t in &self.tensors {
            let _ = writeln!(
                out,
                "{:<6} {:>4} entries  max_rel {:.3e}  max_abs {:.3e}  worst #{:<4} {}",
                t.tensor.name(),
                t.entries_checked,
                t.max_rel,
                t.max_abs,
                t.worst_index,
                if t.pass { "ok" } else { "FAIL" }
            );
        }
        let _ = writeln!(out, "{}", if self.pass { "gradient check passed" } else { "gradient check FAILED" });
        out
    }

    pub fn failing(&self) -> impl Iterator<Item = &TensorCheck> {
        self.tensors.iter().filter(|t| !t.pass)
    }
}

/// Entries probed for one tensor: all of a vector, otherwise a seeded sample
/// plus the entry with the largest analytic magnitude.
fn probe_indices(analytic: &[f64], is_vector: bool, k: usize, rng: &mut impl Rng) -> Vec<usize> {
    let n = analytic.len();
    if is_vector || n <= k {
        return (0..n).collect();
    }
    let mut idx = index::sample(rng, n, k).into_vec();
    let largest = (0..n).max_by(|&a, &b| analytic[a].abs().total_cmp(&analytic[b].abs())).unwrap_or(0);
    if !idx.contains(&largest) {
        idx.push(largest);
    }
    idx.sort_unstable();
    idx
}

/// Compares `analytic` against central differences of `loss_fn`. An entry
/// passes when its absolute or its relative error is within tolerance.
pub fn check_gradients(
    loss_fn: impl Fn(&ModelParams) -> f64,
    params: &ModelParams,
    analytic: &Gradients,
    opts: &GradCheckOptions,
) -> Result<GradCheckReport> {
    let mut rng = rng::stream(opts.seed, Stream::Sampling);
    let mut tensors = Vec::new();
    for id in TensorId::ALL {
        let dense = analytic.to_dense(id);
        let is_vector = params.tensor(id).rows == 1;
        let mut check = TensorCheck { tensor: id, max_rel: 0.0, max_abs: 0.0, worst_index: 0, entries_checked: 0, pass: true };
        for flat in probe_indices(&dense, is_vector, opts.sample_entries_per_tensor, &mut rng) {
            let numeric = finite_diff_gradient(&loss_fn, params, (id, flat), opts.step)?;
            let a = dense[flat];
            let abs = (a - numeric).abs();
            let scale = a.abs().max(numeric.abs());
            let rel = if scale > 0.0 { abs / scale } else { 0.0 };
            if !(abs <= opts.tolerance_abs || rel <= opts.tolerance_rel) {
                check.pass = false;
            }
            if rel > check.max_rel || check.entries_checked == 0 {
                check.worst_index = flat;
            }
            check.max_rel = check.max_rel.max(rel);
            check.max_abs = check.max_abs.max(abs);
            check.entries_checked += 1;
        }
        tensors.push(check);
    }
    let pass = tensors.iter().all(|t| t.pass);
    Ok(GradCheckReport { tensors, pass })
}

/// Freezes the sampling, computes analytic gradients once, and probes them.
pub fn check_all(dataset: &Dataset, config: &TrainConfig, opts: &GradCheckOptions) -> Result<GradCheckReport> {
    check_all_with(dataset, config, opts, |_| {})
}

/// As [`check_all`], with a hook that may alter the analytic gradients before
/// comparison (used to confirm the oracle catches corrupted gradients).
pub fn check_all_with(
    dataset: &Dataset,
    config: &TrainConfig,
    opts: &GradCheckOptions,
    tamper: impl FnOnce(&mut Gradients),
) -> Result<GradCheckReport> {
    config.validate()?;
    let params = init_params(config, dataset.num_users(), dataset.num_locations());
    let batch = FrozenBatch::sample(dataset, config);
    let (_, mut grads) = batch.loss_and_grads(&params);
    tamper(&mut grads);
    check_gradients(|p| batch.loss(p), &params, &grads, opts)
}

pub const TOY_USERS: usize = 6;
pub const TOY_LOCATIONS: usize = 8;
pub const TOY_DIM: usize = 4;

/// Six users, eight locations; users 0 and 1 each have two subtrajectories of
/// two to four check-ins, the rest only links.
pub fn toy_dataset(seed: u64) -> Dataset {
    let mut rng = rng::stream(seed, Stream::Synth);
    let mut pairs = Vec::new();
    for i in 0..TOY_USERS {
        for j in i + 1..TOY_USERS {
            if rng.gen_bool(0.4) {
                pairs.push((i, j));
            }
        }
    }
    if pairs.is_empty() {
        pairs.push((0, 1));
    }
    let trajectories = (0..TOY_USERS)
        .map(|u| {
            if u >= 2 {
                return Trajectory::new(u, vec![], vec![]);
            }
            let mut locs = Vec::new();
            let mut ts = Vec::new();
            let mut t = 0i64;
            for s in 0..2 {
                if s > 0 {
                    t += 7 * 3600;
                }
                for k in 0..rng.gen_range(2..=4) {
                    if k > 0 {
                        t += 3600;
                    }
                    locs.push(rng.gen_range(0..TOY_LOCATIONS));
                    ts.push(t);
                }
            }
            Trajectory::new(u, locs, ts)
        })
        .collect();
    Dataset {
        graph: SocialGraph::from_undirected(TOY_USERS, pairs),
        trajectories,
        users: Vocab::from_ordered((0..TOY_USERS).map(|u| format!("u{u}")).collect()),
        locations: Vocab::from_ordered((0..TOY_LOCATIONS).map(|l| format!("l{l}")).collect()),
    }
}

/// Training settings for the toy: large enough initial weights that gates
/// leave their linear regime, a few negatives per objective.
pub fn toy_config(seed: u64) -> TrainConfig {
    TrainConfig { dim: TOY_DIM, seed, init_range: 0.5, n1_per_user: 3, n2: 4, ..TrainConfig::default() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::VariantMask;

    #[test]
    fn central_difference_examples() {
        let mut p = ModelParams::zeros(1, 1, 1);
        p.b_c.data[0] = 3.0;
        let sq = finite_diff_gradient(|q| q.b_c.data[0].powi(2), &p, (TensorId::BC, 0), 1e-5).unwrap();
        assert!((sq - 6.0).abs() < 1e-9);
        assert_eq!(finite_diff_gradient(|_| 4.0, &p, (TensorId::BC, 0), 1e-5).unwrap(), 0.0);
        let sum = |q: &ModelParams| q.b_c.data.iter().sum::<f64>();
        assert!((finite_diff_gradient(sum, &p, (TensorId::BC, 0), 1e-5).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn non_finite_loss_is_reported() {
        let p = ModelParams::zeros(1, 1, 1);
        let err = finite_diff_gradient(|_| f64::NAN, &p, (TensorId::BC, 0), 1e-5).unwrap_err();
        assert!(matches!(err, Error::NonFiniteLoss(_)));
    }

    #[test]
    fn toy_shape() {
        let d = toy_dataset(3);
        assert!(d.validate().is_ok());
        assert_eq!(d.num_users(), 6);
        assert_eq!(d.num_locations(), 8);
        for u in 0..2 {
            let t = &d.trajectories[u];
            assert_eq!(t.num_subtrajectories(), 2);
            assert!(t.bounds.iter().all(|&(a, b)| (2..=4).contains(&(b - a))));
        }
    }

    #[test]
    fn toy_passes() {
        let report = check_all(&toy_dataset(1), &toy_config(1), &GradCheckOptions::default()).unwrap();
        assert!(report.pass, "{}", report.to_text());
    }

    #[test]
    fn corrupted_forget_gate_weight_is_caught() {
        let report = check_all_with(&toy_dataset(2), &toy_config(2), &GradCheckOptions::default(), |g| {
            g.scale_tensor(TensorId::WF1, 1.01)
        })
        .unwrap();
        assert!(!report.pass);
        let failing: Vec<TensorId> = report.failing().map(|t| t.tensor).collect();
        assert_eq!(failing, vec![TensorId::WF1]);
    }

    #[test]
    fn masked_variant_compares_zero_with_zero() {
        let cfg = TrainConfig { variant: VariantMask::BASE, ..toy_config(4) };
        let report = check_all(&toy_dataset(4), &cfg, &GradCheckOptions::default()).unwrap();
        assert!(report.pass);
        for t in &report.tensors {
            if !matches!(t.tensor, TensorId::P | TensorId::F | TensorId::FCtx | TensorId::UOut) {
                assert_eq!(t.max_abs, 0.0, "{}", t.tensor.name());
            }
        }
    }

    #[test]
    fn truncation_error_is_second_order() {
        let d = toy_dataset(5);
        let cfg = toy_config(5);
        let params = init_params(&cfg, d.num_users(), d.num_locations());
        let batch = FrozenBatch::sample(&d, &cfg);
        let (_, g) = batch.loss_and_grads(&params);
        let entry = (TensorId::WC1, 5);
        let exact = g.get(entry.0, entry.1);
        let err = |h: f64| (finite_diff_gradient(|p| batch.loss(p), &params, entry, h).unwrap() - exact).abs();
        let (e1, e2) = (err(1e-2), err(5e-3));
        assert!(e1 > 1e-9, "probe too flat: {e1}");
        let ratio = e1 / e2;
        assert!((3.0..5.0).contains(&ratio), "ratio {ratio}");
    }
}
