//! Check-in/edge ingestion and the indexed dataset the model trains on.

pub(crate) mod cache;
mod filter;
mod parse;
mod split;
mod stats;

use std::collections::HashMap;

pub use cache::{read_dataset, read_dataset_from, write_dataset, write_dataset_to, CACHE_MAGIC, CACHE_VERSION};
pub use filter::{filter_dataset, filter_dataset_with, FilterMode, Thresholds};
pub use parse::{parse_checkins, parse_checkins_from, parse_edges, parse_edges_from, CheckIn};
pub use split::{make_splits, split_into_subtrajectories, SplitConfig, Splits, UserSplit, SUBTRAJECTORY_GAP_SECONDS};
pub use stats::{correlation_report, overlap_coefficient, overlap_sorted, CorrelationReport, DatasetStats};

/// One user's check-ins in time order, segmented into subtrajectories.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trajectory {
    pub user_index: usize,
    pub locations: Vec<usize>,
    pub timestamps: Vec<i64>,
    /// Half-open `[start, end)` check-in ranges, contiguous and in order.
    pub bounds: Vec<(usize, usize)>,
}

impl Trajectory {
    pub fn new(user_index: usize, locations: Vec<usize>, timestamps: Vec<i64>) -> Self {
        assert_eq!(locations.len(), timestamps.len());
        let bounds = split_into_subtrajectories(&timestamps, SUBTRAJECTORY_GAP_SECONDS);
        Trajectory { user_index, locations, timestamps, bounds }
    }

    pub fn len(&self) -> usize {
        self.locations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locations.is_empty()
    }

    pub fn num_subtrajectories(&self) -> usize {
        self.bounds.len()
    }

    pub fn subtrajectory(&self, j: usize) -> &[usize] {
        let (a, b) = self.bounds[j];
        &self.locations[a..b]
    }
}

/// Directed social graph over internal user ids.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SocialGraph {
    num_users: usize,
    adjacency: Vec<Vec<usize>>,
}

impl SocialGraph {
    /// Builds a graph from directed pairs; self-pairs and duplicates are dropped.
    pub fn from_directed(num_users: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut adjacency = vec![Vec::new(); num_users];
        for (i, j) in edges {
            assert!(i < num_users && j < num_users, "edge ({i}, {j}) out of range");
            if i != j {
                adjacency[i].push(j);
            }
        }
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
        }
        SocialGraph { num_users, adjacency }
    }

    /// Each undirected pair becomes two directed edges.
    pub fn from_undirected(num_users: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        Self::from_directed(num_users, pairs.into_iter().flat_map(|(i, j)| [(i, j), (j, i)]))
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn neighbors(&self, user: usize) -> &[usize] {
        &self.adjacency[user]
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency[i].binary_search(&j).is_ok()
    }

    pub fn num_directed_edges(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum()
    }

    pub fn directed_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(i, list)| list.iter().map(move |&j| (i, j)))
    }

    /// Pairs `(i, j)` with `i < j` and both directions present.
    pub fn undirected_pairs(&self) -> Vec<(usize, usize)> {
        self.directed_edges()
            .filter(|&(i, j)| i < j && self.has_edge(j, i))
            .collect()
    }

    pub fn is_symmetric(&self) -> bool {
        self.directed_edges().all(|(i, j)| self.has_edge(j, i))
    }
}

/// Bijection between external string ids and dense internal indices.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Vocab {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocab {
    /// Indices follow the sorted order of the distinct names.
    pub fn from_names<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut names: Vec<String> = names.into_iter().map(Into::into).collect();
        names.sort_unstable();
        names.dedup();
        Self::from_ordered(names)
    }

    /// Keeps the given order; names must be distinct.
    pub fn from_ordered(names: Vec<String>) -> Self {
        let index: HashMap<String, usize> =
            names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        assert_eq!(index.len(), names.len(), "duplicate vocabulary entries");
        Vocab { names, index }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn name(&self, idx: usize) -> &str {
        &self.names[idx]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Dataset {
    pub graph: SocialGraph,
    /// Indexed by internal user id.
    pub trajectories: Vec<Trajectory>,
    pub users: Vocab,
    pub locations: Vocab,
}

impl Dataset {
    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn num_locations(&self) -> usize {
        self.locations.len()
    }

    pub fn num_checkins(&self) -> usize {
        self.trajectories.iter().map(Trajectory::len).sum()
    }

    pub fn num_subtrajectories(&self) -> usize {
        self.trajectories.iter().map(Trajectory::num_subtrajectories).sum()
    }

    pub fn stats(&self) -> DatasetStats {
        DatasetStats {
            users: self.num_users(),
            edges: self.graph.undirected_pairs().len(),
            checkins: self.num_checkins(),
            locations: self.num_locations(),
            subtrajectories: self.num_subtrajectories(),
        }
    }

    /// Checks the cross-table invariants; returns a description of the first violation.
    pub fn validate(&self) -> Result<(), String> {
        if self.graph.num_users() != self.num_users() || self.trajectories.len() != self.num_users() {
            return Err("user count mismatch between graph, trajectories and vocab".into());
        }
        for (u, t) in self.trajectories.iter().enumerate() {
            if t.user_index != u {
                return Err(format!("trajectory {u} carries user_index {}", t.user_index));
            }
            if t.locations.len() != t.timestamps.len() {
                return Err(format!("user {u}: locations/timestamps length mismatch"));
            }
            if let Some(&l) = t.locations.iter().find(|&&l| l >= self.num_locations()) {
                return Err(format!("user {u}: location {l} out of range"));
            }
            if t.timestamps.windows(2).any(|w| w[0] > w[1]) {
                return Err(format!("user {u}: timestamps not sorted"));
            }
            if t.bounds != split_into_subtrajectories(&t.timestamps, SUBTRAJECTORY_GAP_SECONDS) {
                return Err(format!("user {u}: subtrajectory bounds inconsistent with timestamps"));
            }
        }
        Ok(())
    }
}

/// Indexes filtered check-ins and edges.
///
/// Check-ins are grouped per user and stably sorted by timestamp, so equal
/// timestamps keep their input order. Edges naming unknown users, self-loops and
/// duplicates are dropped; every surviving pair is stored in both directions.
pub fn build_dataset(checkins: &[CheckIn], edges: &[(String, String)]) -> Dataset {
    let users = Vocab::from_names(checkins.iter().map(|c| c.user.as_str()));
    let locations = Vocab::from_names(checkins.iter().map(|c| c.location.as_str()));

    let mut per_user: Vec<Vec<(i64, usize)>> = vec![Vec::new(); users.len()];
    for c in checkins {
        let u = users.get(&c.user).expect("user in vocab");
        let l = locations.get(&c.location).expect("location in vocab");
        per_user[u].push((c.timestamp, l));
    }
    let trajectories = per_user
        .into_iter()
        .enumerate()
        .map(|(u, mut visits)| {
            visits.sort_by_key(|&(ts, _)| ts);
            let (timestamps, locs) = visits.into_iter().unzip();
            Trajectory::new(u, locs, timestamps)
        })
        .collect();

    let pairs = edges
        .iter()
        .filter_map(|(a, b)| Some((users.get(a)?, users.get(b)?)));
    let graph = SocialGraph::from_undirected(users.len(), pairs);

    Dataset { graph, trajectories, users, locations }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ci(user: &str, loc: &str, ts: i64) -> CheckIn {
        CheckIn { user: user.into(), location: loc.into(), timestamp: ts }
    }

    #[test]
    fn undirected_edge_expands_to_two() {
        let d = build_dataset(
            &[ci("a", "x", 0), ci("b", "y", 0)],
            &[("a".into(), "b".into())],
        );
        assert_eq!(d.graph.num_directed_edges(), 2);
        assert!(d.graph.has_edge(0, 1) && d.graph.has_edge(1, 0));
    }

    #[test]
    fn edges_to_unknown_users_self_loops_and_duplicates_dropped() {
        let d = build_dataset(
            &[ci("a", "x", 0), ci("b", "y", 0)],
            &[
                ("a".into(), "ghost".into()),
                ("a".into(), "a".into()),
                ("a".into(), "b".into()),
                ("b".into(), "a".into()),
            ],
        );
        assert_eq!(d.graph.num_directed_edges(), 2);
        assert_eq!(d.graph.undirected_pairs(), vec![(0, 1)]);
    }

    #[test]
    fn equal_timestamps_keep_file_order() {
        let d = build_dataset(
            &[ci("u", "z", 100), ci("u", "a", 50), ci("u", "m", 100), ci("u", "b", 100)],
            &[],
        );
        let names: Vec<&str> = d.trajectories[0]
            .locations
            .iter()
            .map(|&l| d.locations.name(l))
            .collect();
        assert_eq!(names, ["a", "z", "m", "b"]);
    }

    #[test]
    fn vocab_is_sorted_and_bijective() {
        let d = build_dataset(&[ci("u2", "l9", 0), ci("u1", "l3", 0), ci("u2", "l3", 5)], &[]);
        assert_eq!(d.users.names(), ["u1", "u2"]);
        assert_eq!(d.locations.names(), ["l3", "l9"]);
        for i in 0..d.locations.len() {
            assert_eq!(d.locations.get(d.locations.name(i)), Some(i));
        }
        d.validate().unwrap();
    }
}
