use rand::Rng;
use rayon::prelude::*;

use super::{sample_negative_links, Gradients, TrainConfig};
use crate::data::SocialGraph;
use crate::math::{axpy, sigmoid, softplus};
use crate::model::{link_logit, ModelParams, TensorId};

/// One user's observed out-links and frozen negative targets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkSample {
    pub user: usize,
    pub positives: Vec<usize>,
    pub negatives: Vec<usize>,
}

/// Frozen network objective: evaluating it twice gives the same number.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct NetworkBatch {
    pub samples: Vec<NetworkSample>,
}

impl NetworkBatch {
    /// Draws `n1` negatives per user, in the given user order.
    pub fn sample(graph: &SocialGraph, users: &[usize], n1: usize, rng: &mut impl Rng) -> Self {
        let samples = users
            .iter()
            .map(|&user| NetworkSample {
                user,
                positives: graph.neighbors(user).to_vec(),
                negatives: sample_negative_links(graph, user, n1, rng),
            })
            .collect();
        NetworkBatch { samples }
    }
}

fn sample_loss(params: &ModelParams, s: &NetworkSample, grads: Option<&mut Gradients>) -> f64 {
    // positives: -log σ(s), derivative σ(s) - 1; negatives: -log(1 - σ(s)), derivative σ(s)
    let terms = s
        .positives
        .iter()
        .map(|&j| (j, true))
        .chain(s.negatives.iter().map(|&j| (j, false)));
    let mut loss = 0.0;
    let mut coeffs = Vec::new();
    for (j, linked) in terms {
        let logit = link_logit(params, s.user, j);
        if linked {
            loss += softplus(-logit);
            coeffs.push((j, sigmoid(logit) - 1.0));
        } else {
            loss += softplus(logit);
            coeffs.push((j, sigmoid(logit)));
        }
    }
    if let Some(grads) = grads {
        let mut d_user = vec![0.0; params.dim];
        for &(j, c) in &coeffs {
            axpy(c, params.f_ctx.row(j), &mut d_user);
            axpy(c, params.f.row(s.user), grads.table_mut(TensorId::FCtx).row_mut(j));
        }
        if !coeffs.is_empty() {
            axpy(1.0, &d_user, grads.table_mut(TensorId::F).row_mut(s.user));
        }
    }
    loss
}

/// Negative log-likelihood of the frozen network sample.
pub fn network_loss(params: &ModelParams, batch: &NetworkBatch) -> f64 {
    batch.samples.iter().map(|s| sample_loss(params, s, None)).sum()
}

/// Loss and exact gradients on `F` and `F_ctx`. Per-user work runs in
/// parallel; results are summed in batch order, so the output does not depend
/// on the thread count.
pub fn sampled_network_loss_and_grads(params: &ModelParams, batch: &NetworkBatch) -> (f64, Gradients) {
    let parts: Vec<(f64, Gradients)> = batch
        .samples
        .par_iter()
        .map(|s| {
            let mut g = Gradients::zeros_like(params);
            let l = sample_loss(params, s, Some(&mut g));
            (l, g)
        })
        .collect();
    reduce(params, parts)
}

pub(crate) fn reduce(params: &ModelParams, parts: Vec<(f64, Gradients)>) -> (f64, Gradients) {
    let mut total = Gradients::zeros_like(params);
    let mut loss = 0.0;
    for (l, g) in parts {
        loss += l;
        total.add(&g);
    }
    (loss, total)
}

/// One pass of the network objective over every user with fresh negatives.
pub fn network_iteration(
    params: &ModelParams,
    graph: &SocialGraph,
    config: &TrainConfig,
    rng: &mut impl Rng,
) -> (f64, Gradients) {
    let users: Vec<usize> = (0..graph.num_users()).collect();
    let batch = NetworkBatch::sample(graph, &users, config.n1_per_user, rng);
    sampled_network_loss_and_grads(params, &batch)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};
    use std::f64::consts::LN_2;

    #[test]
    fn zero_embeddings_give_ln2_per_term() {
        let g = SocialGraph::from_undirected(6, [(0, 1), (1, 2)]);
        let params = ModelParams::zeros(6, 1, 3);
        let batch = NetworkBatch::sample(&g, &(0..6).collect::<Vec<_>>(), 2, &mut stream(0, Stream::LinkNegatives));
        let terms: usize = batch.samples.iter().map(|s| s.positives.len() + s.negatives.len()).sum();
        assert_eq!(terms, 4 + 12);
        let (loss, grads) = sampled_network_loss_and_grads(&params, &batch);
        assert!((loss - terms as f64 * LN_2).abs() < 1e-12);
        // with F = F_ctx = 0 every gradient row is a multiple of a zero vector
        assert!(grads.table(TensorId::F).iter().all(|(_, r)| r.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn lone_user_has_nothing_to_learn() {
        let g = SocialGraph::from_directed(1, []);
        let params = ModelParams::zeros(1, 1, 3);
        let cfg = TrainConfig::default();
        let (loss, grads) = network_iteration(&params, &g, &cfg, &mut stream(0, Stream::LinkNegatives));
        assert_eq!(loss, 0.0);
        assert_eq!(grads.table(TensorId::F).touched().count(), 0);
        assert_eq!(grads.table(TensorId::FCtx).touched().count(), 0);
    }

    #[test]
    fn edgeless_graph_without_negatives_is_zero() {
        let g = SocialGraph::from_directed(5, []);
        let params = ModelParams::zeros(5, 1, 2);
        let cfg = TrainConfig { n1_per_user: 0, ..TrainConfig::default() };
        let (loss, grads) = network_iteration(&params, &g, &cfg, &mut stream(0, Stream::LinkNegatives));
        assert_eq!(loss, 0.0);
        assert_eq!(grads.table(TensorId::F).touched().count(), 0);
    }

    #[test]
    fn gradient_matches_hand_derivative_at_one_pair() {
        // one positive link 0 -> 1 with s = F0·Fc1 = 0.5
        let mut params = ModelParams::zeros(2, 1, 1);
        params.f.data = vec![1.0, 0.0];
        params.f_ctx.data = vec![0.0, 0.5];
        let batch = NetworkBatch {
            samples: vec![NetworkSample { user: 0, positives: vec![1], negatives: vec![] }],
        };
        let (loss, grads) = sampled_network_loss_and_grads(&params, &batch);
        let s: f64 = 0.5;
        assert!((loss - (1.0 + (-s).exp()).ln()).abs() < 1e-15);
        let c = 1.0 / (1.0 + (-s).exp()) - 1.0;
        assert!((grads.get(TensorId::F, 0) - c * 0.5).abs() < 1e-15);
        assert!((grads.get(TensorId::FCtx, 1) - c * 1.0).abs() < 1e-15);
    }
}
