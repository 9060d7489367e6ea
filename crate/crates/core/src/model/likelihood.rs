//! Full, unsampled likelihoods. Quadratic in `|V|` and linear in `|L|` per
//! prediction, so these serve as oracles on small instances.

use super::{forward_trajectory, location_logits, ModelParams, VariantMask};
use crate::data::{Dataset, SocialGraph};
use crate::math::{dot, log_sigmoid, log_sum_exp, sigmoid};

/// `F[i] · F_ctx[j]`.
pub fn link_logit(params: &ModelParams, i: usize, j: usize) -> f64 {
    dot(params.f.row(i), params.f_ctx.row(j))
}

/// Probability that the directed link exists; increasing in the logit.
pub fn link_prob(s: f64) -> f64 {
    sigmoid(s)
}

/// Bernoulli log-likelihood over every ordered pair of distinct users.
pub fn network_log_likelihood_full(params: &ModelParams, graph: &SocialGraph) -> f64 {
    let n = graph.num_users();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let s = link_logit(params, i, j);
            total += if graph.has_edge(i, j) { log_sigmoid(s) } else { log_sigmoid(-s) };
        }
    }
    total
}

/// `log softmax(R · U_out)` at `target`, over all locations.
pub fn location_log_prob_full(params: &ModelParams, context: &[f64], target: usize) -> f64 {
    let logits = location_logits(params, context);
    logits[target] - log_sum_exp(&logits)
}

pub fn trajectory_log_likelihood_full(
    params: &ModelParams,
    mask: VariantMask,
    user: usize,
    locations: &[usize],
    bounds: &[(usize, usize)],
) -> f64 {
    let trace = forward_trajectory(params, mask, user, locations, bounds);
    trace
        .contexts
        .iter()
        .zip(locations)
        .map(|(r, &l)| location_log_prob_full(params, r, l))
        .sum()
}

/// Network term plus every check-in of every user under the full softmax.
pub fn joint_log_likelihood_full(params: &ModelParams, mask: VariantMask, dataset: &Dataset) -> f64 {
    let network = network_log_likelihood_full(params, &dataset.graph);
    let trajectories: f64 = dataset
        .trajectories
        .iter()
        .map(|t| trajectory_log_likelihood_full(params, mask, t.user_index, &t.locations, &t.bounds))
        .sum();
    network + trajectories
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    #[test]
    fn link_logit_examples() {
        let mut p = ModelParams::zeros(2, 1, 2);
        assert_eq!(link_logit(&p, 0, 1), 0.0);
        p.f.row_mut(0).copy_from_slice(&[1.0, 2.0]);
        p.f_ctx.row_mut(1).copy_from_slice(&[0.5, -0.25]);
        assert_eq!(link_logit(&p, 0, 1), 0.0);
        p.f_ctx.row_mut(1).copy_from_slice(&[1.0, 1.0]);
        p.f.row_mut(0).copy_from_slice(&[1.0, 1.0]);
        assert_eq!(link_logit(&p, 0, 1), 2.0);
    }

    #[test]
    fn link_prob_examples() {
        assert_eq!(link_prob(0.0), 0.5);
        assert!((link_prob(3f64.ln()) - 0.75).abs() < 1e-15);
        assert!((link_prob(-(3f64.ln())) - 0.25).abs() < 1e-15);
        assert!(link_prob(700.0).is_finite() && link_prob(-700.0).is_finite());
    }

    #[test]
    fn network_oracle_small_cases() {
        let p = ModelParams::zeros(2, 1, 3);
        let g = SocialGraph::from_undirected(2, [(0, 1)]);
        assert!((network_log_likelihood_full(&p, &g) + 2.0 * LN_2).abs() < 1e-15);
        let p3 = ModelParams::zeros(3, 1, 3);
        let g3 = SocialGraph::from_directed(3, []);
        assert!((network_log_likelihood_full(&p3, &g3) + 6.0 * LN_2).abs() < 1e-14);
    }

    #[test]
    fn network_likelihood_tends_to_zero_when_separated() {
        // user 0 -> 1 linked, 1 -> 0 not; logits ±40
        let mut p = ModelParams::zeros(2, 1, 1);
        p.f.data = vec![1.0, -1.0];
        p.f_ctx.data = vec![40.0, 40.0];
        let g = SocialGraph::from_directed(2, [(0, 1)]);
        assert!(network_log_likelihood_full(&p, &g).abs() < 1e-15);
    }

    #[test]
    fn softmax_cases() {
        let mut p = ModelParams::zeros(1, 4, 1);
        p.u_out.data.iter_mut().for_each(|v| *v = 0.3);
        let r = [1.0, -2.0, 0.5, 0.1];
        assert!((location_log_prob_full(&p, &r, 2) - (0.25f64).ln()).abs() < 1e-15);

        let mut p = ModelParams::zeros(1, 2, 1);
        p.u_out.row_mut(0)[0] = 1.0;
        let r = [1.0, 0.0, 0.0, 0.0];
        // log(e / (e + 1))
        assert!((location_log_prob_full(&p, &r, 0) + 0.313_261_687_518_222_8).abs() < 1e-15);
    }
}
