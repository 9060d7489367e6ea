use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::CheckIn;

/// Minimum check-in counts for users and locations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    pub min_user_checkins: usize,
    pub min_location_checkins: usize,
}

impl Thresholds {
    pub const GOWALLA: Thresholds = Thresholds { min_user_checkins: 10, min_location_checkins: 15 };
    pub const BRIGHTKITE: Thresholds = Thresholds { min_user_checkins: 10, min_location_checkins: 5 };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterMode {
    /// Users, then locations, then users left empty; once.
    #[default]
    SinglePass,
    /// Repeat the single pass until nothing changes.
    Fixpoint,
}

/// Single-pass activity filter.
pub fn filter_dataset(
    checkins: &[CheckIn],
    edges: &[(String, String)],
    thresholds: Thresholds,
) -> (Vec<CheckIn>, Vec<(String, String)>) {
    filter_dataset_with(checkins, edges, thresholds, FilterMode::SinglePass)
}

pub fn filter_dataset_with(
    checkins: &[CheckIn],
    edges: &[(String, String)],
    thresholds: Thresholds,
    mode: FilterMode,
) -> (Vec<CheckIn>, Vec<(String, String)>) {
    let mut kept = single_pass(checkins, thresholds);
    if mode == FilterMode::Fixpoint {
        loop {
            let next = single_pass(&kept, thresholds);
            if next.len() == kept.len() {
                break;
            }
            kept = next;
        }
    }
    let users: HashSet<&str> = kept.iter().map(|c| c.user.as_str()).collect();
    let kept_edges = edges
        .iter()
        .filter(|(a, b)| users.contains(a.as_str()) && users.contains(b.as_str()))
        .cloned()
        .collect();
    (kept, kept_edges)
}

fn single_pass(checkins: &[CheckIn], t: Thresholds) -> Vec<CheckIn> {
    let user_counts = count_by(checkins.iter().map(|c| c.user.as_str()));
    let active: Vec<&CheckIn> = checkins
        .iter()
        .filter(|c| user_counts[c.user.as_str()] >= t.min_user_checkins)
        .collect();
    let loc_counts = count_by(active.iter().map(|c| c.location.as_str()));
    // users whose check-ins all vanish here disappear with them, so the
    // drop-empty-users step needs no separate pass
    active
        .into_iter()
        .filter(|c| loc_counts[c.location.as_str()] >= t.min_location_checkins)
        .cloned()
        .collect()
}

fn count_by<'a>(keys: impl Iterator<Item = &'a str>) -> HashMap<&'a str, usize> {
    let mut counts = HashMap::new();
    for k in keys {
        *counts.entry(k).or_insert(0) += 1;
    }
    counts
}
