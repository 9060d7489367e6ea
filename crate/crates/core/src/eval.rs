//! Rank-based evaluation: next-location and friend recommendation, Recall@K.
//!
//! Scores are ranked descending with ties broken by ascending index. Recall is
//! micro-averaged: hits over all ground-truth items are summed before dividing.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::data::{Dataset, Splits};
use crate::error::{Error, Result};
use crate::math::{dot, log_sigmoid};
use crate::model::{forward_trajectory, ModelParams, VariantMask};
use crate::train::clip_bounds;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    NextLocation,
    Friend,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    General,
    /// Only locations the user has not visited before the position.
    NewOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Slice {
    All,
    /// Users with at most five subtrajectories.
    ColdStart,
    /// Users with fewer than five training friends.
    LowDegree,
}

/// Which positions of each trajectory are predicted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalTarget {
    Fit,
    Validation,
    Test,
}

pub const COLD_START_MAX_SUBTRAJECTORIES: usize = 5;
pub const LOW_DEGREE_MAX_FRIENDS: usize = 4;

fn label<T: Serialize>(v: T) -> String {
    serde_json::to_value(v).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub task: Task,
    pub mode: Mode,
    pub slice: Slice,
    /// The requested cutoffs, kept so empty reports still list them.
    pub ks: Vec<usize>,
    /// Empty when `num_events` is zero.
    pub recall_at: BTreeMap<usize, f64>,
    pub num_events: usize,
}

impl EvalReport {
    fn from_hits(task: Task, mode: Mode, slice: Slice, ks: &[usize], hits: &[usize], events: usize) -> Self {
        let recall_at = if events == 0 {
            BTreeMap::new()
        } else {
            ks.iter().zip(hits).map(|(&k, &h)| (k, h as f64 / events as f64)).collect()
        };
        EvalReport { task, mode, slice, ks: ks.to_vec(), recall_at, num_events: events }
    }

    pub fn recall(&self, k: usize) -> Option<f64> {
        self.recall_at.get(&k).copied()
    }
}

pub const REPORT_HEADER: &str = "task,mode,slice,K,recall,num_events";

/// CSV rows in the report schema; one row per K, empty recall when undefined.
pub fn format_reports(reports: &[EvalReport]) -> String {
    let mut out = String::from(REPORT_HEADER);
    out.push('\n');
    for r in reports {
        let (task, mode, slice) = (label(r.task), label(r.mode), label(r.slice));
        for k in &r.ks {
            let v = r.recall(*k).map(|v| format!("{v:.6}")).unwrap_or_default();
            let _ = writeln!(out, "{task},{mode},{slice},{k},{v},{}", r.num_events);
        }
    }
    out
}

pub fn write_reports_csv(path: impl AsRef<Path>, reports: &[EvalReport]) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_reports(reports)).map_err(|e| Error::io(path, e))
}

/// `|truth ∩ top-K| / |truth|`, or `None` for empty truth.
pub fn recall_at_k<T: PartialEq>(ranked: &[T], truth: &[T], k: usize) -> Option<f64> {
    if truth.is_empty() {
        return None;
    }
    let top = &ranked[..k.min(ranked.len())];
    let hits = truth.iter().filter(|t| top.contains(t)).count();
    Some(hits as f64 / truth.len() as f64)
}

/// Zero-based rank of `target` among candidates accepted by `keep`.
fn rank_of(scores: &[f64], target: usize, keep: impl Fn(usize) -> bool) -> usize {
    let st = scores[target];
    scores
        .iter()
        .enumerate()
        .filter(|&(l, &s)| l != target && keep(l) && (s > st || (s == st && l < target)))
        .count()
}

/// Next-location Recall@K on the test positions.
pub fn eval_next_location(
    params: &ModelParams,
    mask: VariantMask,
    dataset: &Dataset,
    splits: &Splits,
    ks: &[usize],
    mode: Mode,
    slice: Slice,
) -> EvalReport {
    eval_next_location_on(params, mask, dataset, splits, EvalTarget::Test, ks, mode, slice)
}

/// Next-location Recall@K over the chosen positions.
///
/// Recurrent states are advanced over the ground-truth history up to each
/// predicted position, and every location is scored with the full softmax
/// logits.
#[allow(clippy::too_many_arguments)]
pub fn eval_next_location_on(
    params: &ModelParams,
    mask: VariantMask,
    dataset: &Dataset,
    splits: &Splits,
    target: EvalTarget,
    ks: &[usize],
    mode: Mode,
    slice: Slice,
) -> EvalReport {
    let per_user = next_location_counts(params, mask, dataset, splits, target, ks, mode, slice);
    let (hits, events) = sum_counts(per_user.into_iter().map(|u| (u.hits, u.events)).collect(), ks.len());
    EvalReport::from_hits(Task::NextLocation, mode, slice, ks, &hits, events)
}

/// Hit and event counts for one user; `hits[i]` belongs to the i-th K.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UserCounts {
    pub user: usize,
    pub events: usize,
    pub hits: Vec<usize>,
}

/// Per-user counts behind [`eval_next_location_on`], in user order.
#[allow(clippy::too_many_arguments)]
pub fn next_location_counts(
    params: &ModelParams,
    mask: VariantMask,
    dataset: &Dataset,
    splits: &Splits,
    target: EvalTarget,
    ks: &[usize],
    mode: Mode,
    slice: Slice,
) -> Vec<UserCounts> {
    dataset
        .trajectories
        .par_iter()
        .map(|t| {
            let u = t.user_index;
            if slice == Slice::ColdStart && t.num_subtrajectories() > COLD_START_MAX_SUBTRAJECTORIES {
                return UserCounts { user: u, events: 0, hits: vec![0; ks.len()] };
            }
            let split = &splits.users[u];
            let range = match target {
                EvalTarget::Fit => split.fit.clone(),
                EvalTarget::Validation => split.validation.clone(),
                EvalTarget::Test => split.test.clone(),
            };
            if range.is_empty() {
                return UserCounts { user: u, events: 0, hits: vec![0; ks.len()] };
            }
            let bounds = clip_bounds(&t.bounds, range.end);
            let trace = forward_trajectory(params, mask, u, &t.locations[..range.end], &bounds);
            let mut visited: HashSet<usize> = t.locations[..range.start].iter().copied().collect();
            let mut hits = vec![0; ks.len()];
            let mut events = 0;
            for p in range {
                let truth = t.locations[p];
                let counted = mode == Mode::General || !visited.contains(&truth);
                if counted {
                    let scores: Vec<f64> =
                        (0..params.num_locations()).map(|l| dot(&trace.contexts[p], params.u_out.row(l))).collect();
                    let rank = match mode {
                        Mode::General => rank_of(&scores, truth, |_| true),
                        Mode::NewOnly => rank_of(&scores, truth, |l| !visited.contains(&l)),
                    };
                    for (h, &k) in hits.iter_mut().zip(ks) {
                        *h += (rank < k) as usize;
                    }
                    events += 1;
                }
                visited.insert(truth);
            }
            UserCounts { user: u, events, hits }
        })
        .collect()
}

fn sum_counts(parts: Vec<(Vec<usize>, usize)>, n: usize) -> (Vec<usize>, usize) {
    parts.into_iter().fold((vec![0; n], 0), |(mut h, e), (ph, pe)| {
        h.iter_mut().zip(ph).for_each(|(a, b)| *a += b);
        (h, e + pe)
    })
}

/// Symmetrised link score `log σ(F[v]·F_ctx[u]) + log σ(F[u]·F_ctx[v])`.
pub fn friend_score(params: &ModelParams, v: usize, u: usize) -> f64 {
    log_sigmoid(dot(params.f.row(v), params.f_ctx.row(u))) + log_sigmoid(dot(params.f.row(u), params.f_ctx.row(v)))
}

/// Candidates for `v`, best first: everyone except `v` and its training friends.
pub fn rank_friend_candidates(params: &ModelParams, train: &crate::data::SocialGraph, v: usize) -> Vec<usize> {
    let mut scored: Vec<(f64, usize)> = (0..train.num_users())
        .filter(|&u| u != v && !train.has_edge(v, u))
        .map(|u| (friend_score(params, v, u), u))
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    scored.into_iter().map(|(_, u)| u).collect()
}

/// Friend-recommendation Recall@K against held-out links. `num_events` counts
/// held-out friends.
pub fn eval_friend_rec(params: &ModelParams, dataset: &Dataset, splits: &Splits, ks: &[usize], slice: Slice) -> EvalReport {
    let n = dataset.num_users();
    let train = splits.train_graph(n);
    let test = splits.test_graph(n);
    let per_user: Vec<(Vec<usize>, usize)> = (0..n)
        .into_par_iter()
        .map(|v| {
            let truth = test.neighbors(v);
            if truth.is_empty() || (slice == Slice::LowDegree && train.neighbors(v).len() > LOW_DEGREE_MAX_FRIENDS) {
                return (vec![0; ks.len()], 0);
            }
            let ranked = rank_friend_candidates(params, &train, v);
            let hits = ks
                .iter()
                .map(|&k| {
                    let top = &ranked[..k.min(ranked.len())];
                    truth.iter().filter(|t| top.contains(t)).count()
                })
                .collect();
            (hits, truth.len())
        })
        .collect();
    let (hits, events) = sum_counts(per_user, ks.len());
    EvalReport::from_hits(Task::Friend, Mode::General, slice, ks, &hits, events)
}
