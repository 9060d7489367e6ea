use rand::Rng;
use rayon::prelude::*;

use super::network::reduce;
use super::{sample_negative_locations, Gradients, TrainConfig};
use crate::data::{Dataset, Splits};
use crate::math::{axpy, dot, matvec_t_add, outer_add};
use crate::model::{forward_trajectory, initial_long_state, ForwardTrace, ModelParams, TensorId, VariantMask};

/// Result of the sampled softmax at one position.
#[derive(Debug, Clone, PartialEq)]
pub struct LocationLoss {
    /// `-log softmax` of the target among itself and the negatives.
    pub loss: f64,
    /// Gradient with respect to the context.
    pub d_context: Vec<f64>,
    /// `(location, c)`: the gradient of `U_out[location]` is `c · context`.
    pub candidate_coeffs: Vec<(usize, f64)>,
}

impl LocationLoss {
    pub fn u_out_row_grad(&self, context: &[f64], k: usize) -> Vec<f64> {
        context.iter().map(|r| r * self.candidate_coeffs[k].1).collect()
    }
}

/// Softmax restricted to `target` and `negatives`, with exact gradients.
pub fn sampled_location_loss(params: &ModelParams, context: &[f64], target: usize, negatives: &[usize]) -> LocationLoss {
    debug_assert!(!negatives.contains(&target));
    let candidates: Vec<usize> = std::iter::once(target).chain(negatives.iter().copied()).collect();
    let scores: Vec<f64> = candidates.iter().map(|&l| dot(context, params.u_out.row(l))).collect();
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    let loss = max + z.ln() - scores[0];
    let mut d_context = vec![0.0; context.len()];
    let mut candidate_coeffs = Vec::with_capacity(candidates.len());
    for (k, (&l, e)) in candidates.iter().zip(&exps).enumerate() {
        let c = e / z - if k == 0 { 1.0 } else { 0.0 };
        axpy(c, params.u_out.row(l), &mut d_context);
        candidate_coeffs.push((l, c));
    }
    LocationLoss { loss, d_context, candidate_coeffs }
}

/// One user's training prefix with frozen negatives per position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrajectorySample {
    pub user: usize,
    pub locations: Vec<usize>,
    pub bounds: Vec<(usize, usize)>,
    pub negatives: Vec<Vec<usize>>,
}

/// Frozen trajectory objective over a set of users.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrajectoryBatch {
    pub mask: VariantMask,
    pub samples: Vec<TrajectorySample>,
}

impl TrajectoryBatch {
    /// Restricts each user to the fitted part of their split and draws `n2`
    /// negatives per position. Users with nothing to fit are skipped.
    pub fn sample(
        dataset: &Dataset,
        splits: &Splits,
        users: &[usize],
        config: &TrainConfig,
        rng: &mut impl Rng,
    ) -> Self {
        let num_locations = dataset.num_locations();
        let samples = users
            .iter()
            .filter_map(|&user| {
                let end = splits.users[user].fit.end;
                if end == 0 {
                    return None;
                }
                let t = &dataset.trajectories[user];
                let locations = t.locations[..end].to_vec();
                let bounds = clip_bounds(&t.bounds, end);
                let negatives = locations
                    .iter()
                    .map(|&l| sample_negative_locations(num_locations, l, config.n2, rng))
                    .collect();
                Some(TrajectorySample { user, locations, bounds, negatives })
            })
            .collect();
        TrajectoryBatch { mask: config.variant, samples }
    }
}

/// Bounds restricted to the first `end` positions.
pub fn clip_bounds(bounds: &[(usize, usize)], end: usize) -> Vec<(usize, usize)> {
    bounds
        .iter()
        .filter(|&&(a, _)| a < end)
        .map(|&(a, b)| (a, b.min(end)))
        .collect()
}

/// Sampled negative log-likelihood, forward only.
pub fn trajectory_loss(params: &ModelParams, batch: &TrajectoryBatch) -> f64 {
    batch
        .samples
        .iter()
        .map(|s| {
            let trace = forward_trajectory(params, batch.mask, s.user, &s.locations, &s.bounds);
            trace
                .contexts
                .iter()
                .zip(&s.locations)
                .zip(&s.negatives)
                .map(|((r, &l), negs)| sampled_location_loss(params, r, l, negs).loss)
                .sum::<f64>()
        })
        .sum()
}

/// Loss and exact gradients for a frozen batch via backpropagation through time.
pub fn trajectory_loss_and_grads(params: &ModelParams, batch: &TrajectoryBatch) -> (f64, Gradients) {
    let parts: Vec<(f64, Gradients)> = batch
        .samples
        .par_iter()
        .map(|s| {
            let mut g = Gradients::zeros_like(params);
            let l = user_loss_and_grads(params, batch.mask, s, &mut g);
            (l, g)
        })
        .collect();
    reduce(params, parts)
}

/// One pass of the trajectory objective over every user's training prefix.
pub fn trajectory_iteration(
    params: &ModelParams,
    dataset: &Dataset,
    splits: &Splits,
    config: &TrainConfig,
    rng: &mut impl Rng,
) -> (f64, Gradients) {
    let users: Vec<usize> = (0..dataset.num_users()).collect();
    let batch = TrajectoryBatch::sample(dataset, splits, &users, config, rng);
    trajectory_loss_and_grads(params, &batch)
}

fn user_loss_and_grads(params: &ModelParams, mask: VariantMask, s: &TrajectorySample, grads: &mut Gradients) -> f64 {
    let d = params.dim;
    let trace = forward_trajectory(params, mask, s.user, &s.locations, &s.bounds);
    let mut loss = 0.0;
    let mut d_short = if mask.use_short { vec![vec![0.0; d]; s.locations.len()] } else { Vec::new() };
    let mut d_boundary = if mask.use_long { vec![vec![0.0; d]; s.bounds.len()] } else { Vec::new() };
    let mut d_f = vec![0.0; d];
    let mut d_p = vec![0.0; d];

    for (j, &(a, b)) in s.bounds.iter().enumerate() {
        for p in a..b {
            let r = &trace.contexts[p];
            let out = sampled_location_loss(params, r, s.locations[p], &s.negatives[p]);
            loss += out.loss;
            let u_out = grads.table_mut(TensorId::UOut);
            for &(l, c) in &out.candidate_coeffs {
                axpy(c, r, u_out.row_mut(l));
            }
            let dr = &out.d_context;
            axpy(1.0, &dr[..d], &mut d_f);
            axpy(1.0, &dr[d..2 * d], &mut d_p);
            if mask.use_short {
                d_short[p].copy_from_slice(&dr[2 * d..3 * d]);
            }
            if mask.use_long {
                axpy(1.0, &dr[3 * d..], &mut d_boundary[j]);
            }
        }
    }
    if s.locations.is_empty() {
        return loss;
    }
    axpy(1.0, &d_f, grads.table_mut(TensorId::F).row_mut(s.user));
    axpy(1.0, &d_p, grads.table_mut(TensorId::P).row_mut(s.user));

    if mask.use_short {
        backprop_short(params, s, &trace, &d_short, grads);
    }
    if mask.use_long {
        backprop_long(params, s, &trace, &d_boundary, grads);
    }
    loss
}

/// Reverse pass through the short-term recurrence of each subtrajectory,
/// ending at `S0`.
fn backprop_short(
    params: &ModelParams,
    s: &TrajectorySample,
    trace: &ForwardTrace,
    d_short: &[Vec<f64>],
    grads: &mut Gradients,
) {
    let d = params.dim;
    let mut d_s0 = vec![0.0; d];
    let mut d_w = vec![0.0; d * d];
    for &(a, b) in &s.bounds {
        let mut g = vec![0.0; d];
        for p in (a + 1..b).rev() {
            axpy(1.0, &d_short[p], &mut g);
            let state = &trace.short_states[p];
            let da: Vec<f64> = g.iter().zip(state).map(|(gi, si)| gi * (1.0 - si * si)).collect();
            axpy(1.0, &da, grads.table_mut(TensorId::U).row_mut(s.locations[p - 1]));
            outer_add(&mut d_w, &da, &trace.short_states[p - 1]);
            g.iter_mut().for_each(|v| *v = 0.0);
            matvec_t_add(&params.w.data, d, &da, &mut g);
        }
        axpy(1.0, &d_short[a], &mut g);
        axpy(1.0, &g, &mut d_s0);
    }
    axpy(1.0, &d_s0, grads.dense_mut(TensorId::S0));
    if has_recurrent_steps(&s.bounds) {
        axpy(1.0, &d_w, grads.dense_mut(TensorId::W));
    }
}

fn has_recurrent_steps(bounds: &[(usize, usize)]) -> bool {
    bounds.iter().any(|&(a, b)| b - a > 1)
}

/// Reverse pass through every long-term step down to `C0`.
fn backprop_long(
    params: &ModelParams,
    s: &TrajectorySample,
    trace: &ForwardTrace,
    d_boundary: &[Vec<f64>],
    grads: &mut Gradients,
) {
    let d = params.dim;
    let steps = trace.long_cells.len();
    let mut d_hidden = vec![vec![0.0; d]; steps];
    let mut d_initial = vec![0.0; d];
    for (j, dh) in d_boundary.iter().enumerate() {
        match trace.long_source[j] {
            Some(t) => axpy(1.0, dh, &mut d_hidden[t]),
            None => axpy(1.0, dh, &mut d_initial),
        }
    }

    let (c0, h0) = initial_long_state(params);
    let mut acc = GateGrads::new(d, steps > 0);
    let mut d_cell_carry = vec![0.0; d];
    for t in (0..steps).rev() {
        let (i_gate, f_gate, cand) = &trace.gate_activations[t];
        let h = &trace.long_hidden[t];
        let c_prev: &[f64] = if t == 0 { &c0 } else { &trace.long_cells[t - 1] };
        let h_prev: &[f64] = if t == 0 { &h0 } else { &trace.long_hidden[t - 1] };
        let x = params.u.row(s.locations[t]);

        let d_cell: Vec<f64> = (0..d)
            .map(|k| d_hidden[t][k] * (1.0 - h[k] * h[k]) + d_cell_carry[k])
            .collect();
        let mut da_c = vec![0.0; d];
        let mut da_i = vec![0.0; d];
        let mut da_f = vec![0.0; d];
        for k in 0..d {
            da_c[k] = d_cell[k] * i_gate[k] * (1.0 - cand[k] * cand[k]);
            da_i[k] = d_cell[k] * cand[k] * i_gate[k] * (1.0 - i_gate[k]);
            da_f[k] = d_cell[k] * c_prev[k] * f_gate[k] * (1.0 - f_gate[k]);
            d_cell_carry[k] = d_cell[k] * f_gate[k];
        }
        acc.accumulate(&da_c, &da_i, &da_f, x, h_prev);

        let mut dx = vec![0.0; d];
        let mut dh_prev = vec![0.0; d];
        for (w1, w2, da) in [
            (&params.w_c1, &params.w_c2, &da_c),
            (&params.w_i1, &params.w_i2, &da_i),
            (&params.w_f1, &params.w_f2, &da_f),
        ] {
            matvec_t_add(&w1.data, d, da, &mut dx);
            matvec_t_add(&w2.data, d, da, &mut dh_prev);
        }
        axpy(1.0, &dx, grads.table_mut(TensorId::U).row_mut(s.locations[t]));
        if t == 0 {
            axpy(1.0, &dh_prev, &mut d_initial);
        } else {
            axpy(1.0, &dh_prev, &mut d_hidden[t - 1]);
        }
    }

    let d_c0: Vec<f64> = (0..d)
        .map(|k| d_initial[k] * (1.0 - h0[k] * h0[k]) + d_cell_carry[k])
        .collect();
    axpy(1.0, &d_c0, grads.dense_mut(TensorId::C0));
    acc.flush(grads);
}

struct GateGrads {
    active: bool,
    w: [Vec<f64>; 6],
    b: [Vec<f64>; 3],
}

impl GateGrads {
    fn new(d: usize, active: bool) -> Self {
        let sq = || vec![0.0; d * d];
        let v = || vec![0.0; d];
        GateGrads { active, w: [sq(), sq(), sq(), sq(), sq(), sq()], b: [v(), v(), v()] }
    }

    fn accumulate(&mut self, da_c: &[f64], da_i: &[f64], da_f: &[f64], x: &[f64], h_prev: &[f64]) {
        for (k, da) in [da_c, da_i, da_f].into_iter().enumerate() {
            outer_add(&mut self.w[2 * k], da, x);
            outer_add(&mut self.w[2 * k + 1], da, h_prev);
            axpy(1.0, da, &mut self.b[k]);
        }
    }

    fn flush(self, grads: &mut Gradients) {
        if !self.active {
            return;
        }
        let ids = [TensorId::WC1, TensorId::WC2, TensorId::WI1, TensorId::WI2, TensorId::WF1, TensorId::WF2];
        for (id, w) in ids.into_iter().zip(&self.w) {
            axpy(1.0, w, grads.dense_mut(id));
        }
        for (id, b) in [TensorId::BC, TensorId::BI, TensorId::BF].into_iter().zip(&self.b) {
            axpy(1.0, b, grads.dense_mut(id));
        }
    }
}
