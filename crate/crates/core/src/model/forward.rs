use super::{ModelParams, VariantMask};
use crate::math::{dot, matvec_add, sigmoid};

/// `tanh(U[loc] + W · s_prev)`.
pub fn rnn_step(params: &ModelParams, s_prev: &[f64], loc: usize) -> Vec<f64> {
    let mut a = params.u.row(loc).to_vec();
    matvec_add(&params.w.data, params.dim, s_prev, &mut a);
    a.iter_mut().for_each(|v| *v = v.tanh());
    a
}

/// Activations of one step of the gated long-term cell.
#[derive(Debug, Clone, PartialEq)]
pub struct GruStep {
    pub cell: Vec<f64>,
    pub hidden: Vec<f64>,
    pub input_gate: Vec<f64>,
    pub forget_gate: Vec<f64>,
    pub candidate: Vec<f64>,
}

/// Input/forget gated cell with `h = tanh(C)`:
///
/// ```text
/// C~ = tanh(W_c1 x + W_c2 h' + b_c)
/// i  = σ(W_i1 x + W_i2 h' + b_i)
/// f  = σ(W_f1 x + W_f2 h' + b_f)
/// C  = i ∗ C~ + f ∗ C'
/// ```
/// where `x = U[loc]`.
pub fn gru_step(params: &ModelParams, c_prev: &[f64], h_prev: &[f64], loc: usize) -> GruStep {
    let d = params.dim;
    let x = params.u.row(loc);
    let affine = |w1: &[f64], w2: &[f64], b: &[f64]| {
        let mut a = b.to_vec();
        matvec_add(w1, d, x, &mut a);
        matvec_add(w2, d, h_prev, &mut a);
        a
    };
    let candidate: Vec<f64> =
        affine(&params.w_c1.data, &params.w_c2.data, &params.b_c.data).into_iter().map(f64::tanh).collect();
    let input_gate: Vec<f64> =
        affine(&params.w_i1.data, &params.w_i2.data, &params.b_i.data).into_iter().map(sigmoid).collect();
    let forget_gate: Vec<f64> =
        affine(&params.w_f1.data, &params.w_f2.data, &params.b_f.data).into_iter().map(sigmoid).collect();
    let cell: Vec<f64> = (0..d)
        .map(|k| input_gate[k] * candidate[k] + forget_gate[k] * c_prev[k])
        .collect();
    let hidden = cell.iter().map(|c| c.tanh()).collect();
    GruStep { cell, hidden, input_gate, forget_gate, candidate }
}

/// `(C0, tanh(C0))`.
pub fn initial_long_state(params: &ModelParams) -> (Vec<f64>, Vec<f64>) {
    let c = params.c0.data.clone();
    let h = c.iter().map(|v| v.tanh()).collect();
    (c, h)
}

/// `[F[user]; P[user]; S; h]` with masked blocks zeroed.
pub fn build_context(params: &ModelParams, mask: VariantMask, user: usize, s: &[f64], h: &[f64]) -> Vec<f64> {
    let d = params.dim;
    let mut r = Vec::with_capacity(4 * d);
    r.extend_from_slice(params.f.row(user));
    r.extend_from_slice(params.p.row(user));
    if mask.use_short {
        r.extend_from_slice(s);
    } else {
        r.resize(r.len() + d, 0.0);
    }
    if mask.use_long {
        r.extend_from_slice(h);
    } else {
        r.resize(r.len() + d, 0.0);
    }
    r
}

/// Scores `R · U_out[l]` for every location.
pub fn location_logits(params: &ModelParams, context: &[f64]) -> Vec<f64> {
    (0..params.num_locations()).map(|l| dot(context, params.u_out.row(l))).collect()
}

/// Cached activations from one pass over a (possibly truncated) trajectory.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ForwardTrace {
    pub user: usize,
    pub mask: Option<VariantMask>,
    /// Short-term state consulted at each position; empty when the short block is masked.
    pub short_states: Vec<Vec<f64>>,
    /// `tanh(C0)`, the long-term summary before any location.
    pub initial_hidden: Vec<f64>,
    /// Per long-term step `t`, the cell after visiting location `t`.
    pub long_cells: Vec<Vec<f64>>,
    pub long_hidden: Vec<Vec<f64>>,
    /// `(input gate, forget gate, candidate)` per long-term step.
    pub gate_activations: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)>,
    /// Long-term step whose hidden state subtrajectory `j` consults; `None` means `tanh(C0)`.
    pub long_source: Vec<Option<usize>>,
    /// Context per position.
    pub contexts: Vec<Vec<f64>>,
    /// Locations fed into state advances, short-term then long-term order preserved per cell.
    pub short_inputs: Vec<usize>,
    pub long_inputs: Vec<usize>,
}

impl ForwardTrace {
    pub fn long_hidden_at(&self, step: Option<usize>) -> &[f64] {
        match step {
            None => &self.initial_hidden,
            Some(t) => &self.long_hidden[t],
        }
    }
}

/// Runs both recurrent cells over `locations` with subtrajectory `bounds` and
/// emits one context per position.
///
/// The short-term state restarts from `S0` in every subtrajectory and the
/// context at a position uses the state after the preceding locations of that
/// subtrajectory. The long-term cell steps over every location; positions in
/// subtrajectory `j` consult its hidden state after the last location of
/// subtrajectory `j - 1`. Steps past the start of the final subtrajectory
/// influence no prediction and are not computed.
pub fn forward_trajectory(
    params: &ModelParams,
    mask: VariantMask,
    user: usize,
    locations: &[usize],
    bounds: &[(usize, usize)],
) -> ForwardTrace {
    let d = params.dim;
    let mut trace = ForwardTrace { user, mask: Some(mask), ..Default::default() };
    if locations.is_empty() {
        return trace;
    }
    debug_assert_eq!(bounds.first().map(|b| b.0), Some(0));
    debug_assert_eq!(bounds.last().map(|b| b.1), Some(locations.len()));

    let (c0, h0) = initial_long_state(params);
    trace.initial_hidden = h0;
    if mask.use_long {
        let last_start = bounds.last().map_or(0, |b| b.0);
        let mut c_prev = c0;
        for (t, &loc) in locations[..last_start].iter().enumerate() {
            let h_prev = if t == 0 { &trace.initial_hidden } else { &trace.long_hidden[t - 1] };
            let step = gru_step(params, &c_prev, h_prev, loc);
            trace.long_inputs.push(loc);
            c_prev = step.cell.clone();
            trace.long_cells.push(step.cell);
            trace.long_hidden.push(step.hidden);
            trace.gate_activations.push((step.input_gate, step.forget_gate, step.candidate));
        }
    }
    trace.long_source = bounds.iter().map(|&(a, _)| a.checked_sub(1)).collect();

    let zeros = vec![0.0; d];
    for (j, &(a, b)) in bounds.iter().enumerate() {
        let h: &[f64] = if mask.use_long { trace.long_hidden_at(trace.long_source[j]) } else { &zeros };
        let h = h.to_vec();
        let mut s = params.s0.data.clone();
        for p in a..b {
            if p > a && mask.use_short {
                s = rnn_step(params, &s, locations[p - 1]);
                trace.short_inputs.push(locations[p - 1]);
            }
            trace.contexts.push(build_context(params, mask, user, &s, &h));
            if mask.use_short {
                trace.short_states.push(s.clone());
            }
        }
    }
    trace
}
