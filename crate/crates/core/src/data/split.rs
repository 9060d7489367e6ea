use std::ops::Range;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{Dataset, SocialGraph};
use crate::rng::{self, Stream};

/// Check-ins further apart than this start a new subtrajectory.
pub const SUBTRAJECTORY_GAP_SECONDS: i64 = 6 * 3600;

/// Segments a time-ordered sequence wherever the gap strictly exceeds `gap_seconds`.
pub fn split_into_subtrajectories(timestamps: &[i64], gap_seconds: i64) -> Vec<(usize, usize)> {
    let mut bounds = Vec::new();
    if timestamps.is_empty() {
        return bounds;
    }
    let mut start = 0;
    for i in 1..timestamps.len() {
        if timestamps[i] - timestamps[i - 1] > gap_seconds {
            bounds.push((start, i));
            start = i;
        }
    }
    bounds.push((start, timestamps.len()));
    bounds
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitConfig {
    pub trajectory_train_frac: f64,
    pub validation_frac_of_train: f64,
    pub link_train_ratio: f64,
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            trajectory_train_frac: 0.9,
            validation_frac_of_train: 0.1,
            link_train_ratio: 0.5,
            seed: 0,
        }
    }
}

impl SplitConfig {
    pub fn validate(&self) -> crate::Result<()> {
        let in_unit = |v: f64| v > 0.0 && v <= 1.0;
        if !in_unit(self.trajectory_train_frac) {
            return Err(crate::Error::config("trajectory_train_frac", "must lie in (0, 1]"));
        }
        if !in_unit(self.validation_frac_of_train) {
            return Err(crate::Error::config("validation_frac_of_train", "must lie in (0, 1]"));
        }
        if !(self.link_train_ratio > 0.0 && self.link_train_ratio < 1.0) {
            return Err(crate::Error::config("link_train_ratio", "must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// Check-in position ranges for one user. `fit`, `validation` and `test` are
/// contiguous, in that order, and cover the whole trajectory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserSplit {
    pub train_subtrajectories: Range<usize>,
    pub test_subtrajectories: Range<usize>,
    /// Positions the model is fitted on.
    pub fit: Range<usize>,
    /// Tail of the training subtrajectories held out for model selection.
    pub validation: Range<usize>,
    pub test: Range<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Splits {
    pub users: Vec<UserSplit>,
    /// Directed; both directions of a pair are on the same side.
    pub train_edges: Vec<(usize, usize)>,
    pub test_edges: Vec<(usize, usize)>,
}

impl Splits {
    pub fn train_graph(&self, num_users: usize) -> SocialGraph {
        SocialGraph::from_directed(num_users, self.train_edges.iter().copied())
    }

    pub fn test_graph(&self, num_users: usize) -> SocialGraph {
        SocialGraph::from_directed(num_users, self.test_edges.iter().copied())
    }
}

fn ceil_frac(frac: f64, n: usize) -> usize {
    // tolerance absorbs representation error, e.g. 0.9 * 10
    ((frac * n as f64) - 1e-9).ceil().max(0.0) as usize
}

/// Chronological trajectory split per user plus a seeded random link split.
///
/// A user with a single subtrajectory keeps everything for training.
pub fn make_splits(dataset: &Dataset, config: &SplitConfig) -> Splits {
    let users = dataset
        .trajectories
        .iter()
        .map(|t| {
            let m = t.num_subtrajectories();
            let n_train = if m <= 1 { m } else { ceil_frac(config.trajectory_train_frac, m).clamp(1, m) };
            let train_end = if n_train == 0 { 0 } else { t.bounds[n_train - 1].1 };
            let n_val = (config.validation_frac_of_train * train_end as f64 + 1e-9).floor() as usize;
            let fit_end = train_end - n_val.min(train_end);
            UserSplit {
                train_subtrajectories: 0..n_train,
                test_subtrajectories: n_train..m,
                fit: 0..fit_end,
                validation: fit_end..train_end,
                test: train_end..t.len(),
            }
        })
        .collect();

    let mut pairs = dataset.graph.undirected_pairs();
    let mut rng = rng::stream(config.seed, Stream::Splits);
    pairs.shuffle(&mut rng);
    let n_train = (config.link_train_ratio * pairs.len() as f64).round() as usize;
    let expand = |ps: &[(usize, usize)]| {
        let mut e: Vec<(usize, usize)> = ps.iter().flat_map(|&(i, j)| [(i, j), (j, i)]).collect();
        e.sort_unstable();
        e
    };
    Splits {
        users,
        train_edges: expand(&pairs[..n_train]),
        test_edges: expand(&pairs[n_train..]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{build_dataset, CheckIn};

    #[test]
    fn split_rule_examples() {
        assert_eq!(split_into_subtrajectories(&[0, 3600, 28800, 36000], 21600), vec![(0, 2), (2, 4)]);
        assert_eq!(split_into_subtrajectories(&[42], 21600), vec![(0, 1)]);
        assert_eq!(split_into_subtrajectories(&[0, 21600, 43200, 64800], 21600), vec![(0, 4)]);
        assert!(split_into_subtrajectories(&[], 21600).is_empty());
    }

    fn user_with_subtrajectories(m: usize) -> Vec<CheckIn> {
        (0..m)
            .map(|j| CheckIn { user: "u".into(), location: format!("l{j}"), timestamp: j as i64 * 100_000 })
            .collect()
    }

    #[test]
    fn ten_subtrajectories_give_nine_train() {
        let d = build_dataset(&user_with_subtrajectories(10), &[]);
        let s = make_splits(&d, &SplitConfig::default());
        let u = &s.users[0];
        assert_eq!(u.train_subtrajectories, 0..9);
        assert_eq!(u.test_subtrajectories, 9..10);
        assert_eq!(u.test, 9..10);
        // 9 training check-ins, floor(0.9) = 0 held out
        assert_eq!(u.validation, 9..9);
    }

    #[test]
    fn single_subtrajectory_user_is_all_train() {
        let d = build_dataset(&user_with_subtrajectories(1), &[]);
        let s = make_splits(&d, &SplitConfig::default());
        assert!(s.users[0].test.is_empty());
        assert!(s.users[0].test_subtrajectories.is_empty());
    }

    #[test]
    fn link_split_is_deterministic() {
        let cs: Vec<CheckIn> = (0..5)
            .map(|u| CheckIn { user: u.to_string(), location: "x".into(), timestamp: 0 })
            .collect();
        let es: Vec<(String, String)> =
            [("0", "1"), ("1", "2"), ("2", "3"), ("3", "4")].iter().map(|(a, b)| (a.to_string(), b.to_string())).collect();
        let d = build_dataset(&cs, &es);
        let cfg = SplitConfig { link_train_ratio: 0.5, seed: 11, ..Default::default() };
        let a = make_splits(&d, &cfg);
        let b = make_splits(&d, &cfg);
        assert_eq!(a, b);
        assert_eq!(a.train_edges.len(), 4);
        assert_eq!(a.test_edges.len(), 4);
        for e in &a.train_edges {
            assert!(!a.test_edges.contains(e));
            assert!(a.train_edges.contains(&(e.1, e.0)));
        }
    }
}
