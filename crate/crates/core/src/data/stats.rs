use std::collections::BTreeSet;
use std::fmt;

use rand::seq::index;
use rand::Rng;
use serde::Serialize;

use super::Dataset;
use crate::rng::{self, Stream};

/// Counts in the layout of a dataset statistics table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct DatasetStats {
    pub users: usize,
    /// Undirected friendship pairs.
    pub edges: usize,
    pub checkins: usize,
    pub locations: usize,
    pub subtrajectories: usize,
}

impl fmt::Display for DatasetStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "|V|={} |E|={} |D|={} |L|={} subtrajectories={}",
            self.users, self.edges, self.checkins, self.locations, self.subtrajectories
        )
    }
}

/// `|A ∩ B| / min(|A|, |B|)`, zero when either set is empty.
pub fn overlap_coefficient(a: &BTreeSet<usize>, b: &BTreeSet<usize>) -> f64 {
    let smaller = a.len().min(b.len());
    if smaller == 0 {
        return 0.0;
    }
    a.intersection(b).count() as f64 / smaller as f64
}

/// Same as [`overlap_coefficient`] for sorted, deduplicated slices.
pub fn overlap_sorted(a: &[usize], b: &[usize]) -> f64 {
    let smaller = a.len().min(b.len());
    if smaller == 0 {
        return 0.0;
    }
    intersection_size(a, b) as f64 / smaller as f64
}

fn intersection_size(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationReport {
    pub friend_pairs_sampled: usize,
    pub friend_mean_overlap: Option<f64>,
    pub non_friend_pairs_sampled: usize,
    pub non_friend_mean_overlap: Option<f64>,
    /// Exact share of user pairs that are friends.
    pub friend_probability: Option<f64>,
    pub common_location_pairs_sampled: usize,
    /// Share of friends among sampled pairs sharing more than three locations.
    pub friend_probability_given_common: Option<f64>,
}

const COMMON_LOCATION_THRESHOLD: usize = 3;

/// Sampled estimates of how friendship and visited-location overlap co-vary.
pub fn correlation_report(dataset: &Dataset, num_pair_samples: usize, seed: u64) -> CorrelationReport {
    let n = dataset.num_users();
    let sets: Vec<Vec<usize>> = dataset
        .trajectories
        .iter()
        .map(|t| {
            let mut s = t.locations.clone();
            s.sort_unstable();
            s.dedup();
            s
        })
        .collect();
    let mut rng = rng::stream(seed, Stream::Sampling);
    let mean = |xs: &[f64]| (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64);

    let pairs = dataset.graph.undirected_pairs();
    let take = num_pair_samples.min(pairs.len());
    let friend: Vec<f64> = index::sample(&mut rng, pairs.len(), take)
        .into_iter()
        .map(|k| {
            let (i, j) = pairs[k];
            overlap_sorted(&sets[i], &sets[j])
        })
        .collect();

    let total_pairs = n * n.saturating_sub(1) / 2;
    let non_friend_available = total_pairs - pairs.len();
    let mut non_friend = Vec::new();
    let mut common_pairs = 0;
    let mut common_friends = 0;
    if n >= 2 {
        if non_friend_available > 0 {
            while non_friend.len() < num_pair_samples.min(non_friend_available) {
                let (i, j) = random_pair(&mut rng, n);
                if !dataset.graph.has_edge(i, j) {
                    non_friend.push(overlap_sorted(&sets[i], &sets[j]));
                }
            }
        }
        for _ in 0..num_pair_samples {
            let (i, j) = random_pair(&mut rng, n);
            if intersection_size(&sets[i], &sets[j]) > COMMON_LOCATION_THRESHOLD {
                common_pairs += 1;
                common_friends += dataset.graph.has_edge(i, j) as usize;
            }
        }
    }

    CorrelationReport {
        friend_pairs_sampled: friend.len(),
        friend_mean_overlap: mean(&friend),
        non_friend_pairs_sampled: non_friend.len(),
        non_friend_mean_overlap: mean(&non_friend),
        friend_probability: (total_pairs > 0).then(|| pairs.len() as f64 / total_pairs as f64),
        common_location_pairs_sampled: common_pairs,
        friend_probability_given_common: (common_pairs > 0)
            .then(|| common_friends as f64 / common_pairs as f64),
    }
}

fn random_pair(rng: &mut impl Rng, n: usize) -> (usize, usize) {
    let i = rng.gen_range(0..n);
    let mut j = rng.gen_range(0..n - 1);
    if j >= i {
        j += 1;
    }
    (i, j)
}
