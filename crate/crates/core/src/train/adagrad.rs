use super::Gradients;
use crate::error::{Error, Result};
use crate::model::{ModelParams, TensorId};

/// Per-entry sums of squared gradients, shaped like the parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub accumulators: ModelParams,
}

impl OptimizerState {
    pub fn new(params: &ModelParams) -> Self {
        OptimizerState {
            accumulators: ModelParams::zeros(params.num_users(), params.num_locations(), params.dim),
        }
    }
}

/// AdaGrad step on every entry with a nonzero gradient:
/// `acc += g²; θ -= lr · g / (√acc + ε)`.
///
/// Rejects the whole update, leaving parameters untouched, if any gradient
/// entry is non-finite.
pub fn adagrad_update(
    params: &mut ModelParams,
    grads: &Gradients,
    state: &mut OptimizerState,
    learning_rate: f64,
    epsilon: f64,
) -> Result<()> {
    if let Some(t) = grads.first_non_finite() {
        return Err(Error::NonFiniteGradient { tensor: t.name() });
    }
    for t in TensorId::ALL {
        let theta = params.tensor_mut(t);
        let acc = state.accumulators.tensor_mut(t);
        let mut step = |idx: usize, g: f64| {
            if g != 0.0 {
                acc.data[idx] += g * g;
                theta.data[idx] -= learning_rate * g / (acc.data[idx].sqrt() + epsilon);
            }
        };
        if t.is_table() {
            let cols = theta.cols;
            for (row, g) in grads.table(t).iter() {
                for (c, &gv) in g.iter().enumerate() {
                    step(row * cols + c, gv);
                }
            }
        } else if let Some(g) = grads.dense(t) {
            for (idx, &gv) in g.iter().enumerate() {
                step(idx, gv);
            }
        }
    }
    Ok(())
}
