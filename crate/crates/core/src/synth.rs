//! Seeded synthetic LBSN generator with planted communities and Markov
//! location chains.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use chrono::{DateTime, SecondsFormat};
use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{build_dataset, CheckIn, Dataset, Splits};
use crate::error::{Error, Result};
use crate::rng::{self, Stream};

pub const INTRA_GAP_SECONDS: i64 = 3600;
pub const INTER_GAP_SECONDS: i64 = 7 * 3600;
/// 2010-01-01T00:00:00Z
pub const START_TIMESTAMP: i64 = 1_262_304_000;
/// Probability that a preference draw lands in the community's own vocabulary.
pub const OWN_VOCABULARY_SHARE: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthConfig {
    pub num_communities: usize,
    pub users_per_community: usize,
    pub locations_per_community: usize,
    pub shared_locations: usize,
    pub intra_edge_prob: f64,
    pub inter_edge_prob: f64,
    pub subtrajectories_per_user: usize,
    pub locations_per_subtrajectory: usize,
    /// Probability of following the community chain instead of drawing from
    /// the preference distribution.
    pub markov_stickiness: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            num_communities: 2,
            users_per_community: 20,
            locations_per_community: 30,
            shared_locations: 6,
            intra_edge_prob: 0.3,
            inter_edge_prob: 0.02,
            subtrajectories_per_user: 10,
            locations_per_subtrajectory: 5,
            markov_stickiness: 0.7,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        for (key, v) in [
            ("num_communities", self.num_communities),
            ("users_per_community", self.users_per_community),
            ("locations_per_community", self.locations_per_community),
            ("subtrajectories_per_user", self.subtrajectories_per_user),
            ("locations_per_subtrajectory", self.locations_per_subtrajectory),
        ] {
            if v == 0 {
                return Err(Error::config(key, "must be positive"));
            }
        }
        for (key, p) in [
            ("intra_edge_prob", self.intra_edge_prob),
            ("inter_edge_prob", self.inter_edge_prob),
            ("markov_stickiness", self.markov_stickiness),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::config(key, "must be a probability in [0, 1]"));
            }
        }
        if self.num_communities > 1 && self.intra_edge_prob <= self.inter_edge_prob {
            return Err(Error::config("intra_edge_prob", "must exceed inter_edge_prob"));
        }
        Ok(())
    }

    pub fn num_users(&self) -> usize {
        self.num_communities * self.users_per_community
    }

    pub fn num_locations(&self) -> usize {
        self.num_communities * self.locations_per_community + self.shared_locations
    }

    pub fn community_of(&self, user: usize) -> usize {
        user / self.users_per_community
    }
}

fn id(prefix: char, i: usize, n: usize) -> String {
    let width = n.saturating_sub(1).to_string().len().max(4);
    format!("{prefix}{i:0width$}")
}

/// Per-community location behaviour: a weighted preference over own plus
/// shared locations and a deterministic successor for every location.
struct Community {
    preference: Vec<usize>,
    weights: WeightedIndex<f64>,
    successor: BTreeMap<usize, usize>,
}

fn plan_community(config: &SynthConfig, c: usize, rng: &mut impl Rng) -> Community {
    let own: Vec<usize> = (0..config.locations_per_community).map(|i| c * config.locations_per_community + i).collect();
    let shared: Vec<usize> = (0..config.shared_locations).map(|i| config.num_communities * config.locations_per_community + i).collect();

    // Zipf-like weights over a random ranking of own locations.
    let mut ranked = own.clone();
    ranked.shuffle(rng);
    let harmonic: f64 = (1..=ranked.len()).map(|r| 1.0 / r as f64).sum();
    let own_share = if shared.is_empty() { 1.0 } else { OWN_VOCABULARY_SHARE };
    let mut preference = Vec::new();
    let mut weights = Vec::new();
    for (r, &l) in ranked.iter().enumerate() {
        preference.push(l);
        weights.push(own_share / (harmonic * (r + 1) as f64));
    }
    for &l in &shared {
        preference.push(l);
        weights.push((1.0 - own_share) / shared.len() as f64);
    }

    // A random cycle through own locations; each shared location feeds into a
    // fixed entry point of the cycle.
    let mut cycle = own.clone();
    cycle.shuffle(rng);
    let mut successor = BTreeMap::new();
    for (i, &l) in cycle.iter().enumerate() {
        successor.insert(l, cycle[(i + 1) % cycle.len()]);
    }
    for &l in &shared {
        successor.insert(l, *cycle.choose(rng).expect("non-empty community"));
    }
    Community { preference, weights: WeightedIndex::new(weights).expect("positive weights"), successor }
}

/// Generated check-ins and friendship pairs with external ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthRecords {
    pub checkins: Vec<CheckIn>,
    pub edges: Vec<(String, String)>,
}

pub fn generate_records(config: &SynthConfig) -> SynthRecords {
    let mut rng = rng::stream(config.seed, Stream::Synth);
    let (nu, nl) = (config.num_users(), config.num_locations());

    let mut edges = Vec::new();
    for i in 0..nu {
        for j in i + 1..nu {
            let p = if config.community_of(i) == config.community_of(j) {
                config.intra_edge_prob
            } else {
                config.inter_edge_prob
            };
            if rng.gen::<f64>() < p {
                edges.push((id('u', i, nu), id('u', j, nu)));
            }
        }
    }

    let communities: Vec<Community> = (0..config.num_communities).map(|c| plan_community(config, c, &mut rng)).collect();
    let mut checkins = Vec::new();
    for u in 0..nu {
        let comm = &communities[config.community_of(u)];
        let mut ts = START_TIMESTAMP;
        for s in 0..config.subtrajectories_per_user {
            if s > 0 {
                ts += INTER_GAP_SECONDS;
            }
            let mut prev: Option<usize> = None;
            for k in 0..config.locations_per_subtrajectory {
                if k > 0 {
                    ts += INTRA_GAP_SECONDS;
                }
                let loc = match prev {
                    Some(p) if rng.gen::<f64>() < config.markov_stickiness => comm.successor[&p],
                    _ => comm.preference[comm.weights.sample(&mut rng)],
                };
                checkins.push(CheckIn { user: id('u', u, nu), location: id('l', loc, nl), timestamp: ts });
                prev = Some(loc);
            }
        }
    }
    SynthRecords { checkins, edges }
}

/// Builds the dataset through the same indexing path as parsed files.
///
/// Locations never visited are absent from the vocabulary, so internal ids can
/// differ from the planted ones when a location goes unused.
pub fn generate(config: &SynthConfig) -> Dataset {
    let records = generate_records(config);
    build_dataset(&records.checkins, &records.edges)
}

/// Writes the records in the check-in and edge TSV layouts the parser reads.
fn wrap(p: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| Error::io(p, e)
}

pub fn write_tsv(records: &SynthRecords, checkins_path: impl AsRef<Path>, edges_path: impl AsRef<Path>) -> Result<()> {
    let checkins_path = checkins_path.as_ref();
    let edges_path = edges_path.as_ref();

    let mut w = BufWriter::new(File::create(checkins_path).map_err(wrap(checkins_path))?);
    for c in &records.checkins {
        let time = DateTime::from_timestamp(c.timestamp, 0)
            .expect("timestamp in range")
            .to_rfc3339_opts(SecondsFormat::Secs, true);
        writeln!(w, "{}\t{}\t0.0\t0.0\t{}", c.user, time, c.location).map_err(wrap(checkins_path))?;
    }
    w.flush().map_err(wrap(checkins_path))?;

    let mut w = BufWriter::new(File::create(edges_path).map_err(wrap(edges_path))?);
    for (a, b) in &records.edges {
        writeln!(w, "{a}\t{b}\n{b}\t{a}").map_err(wrap(edges_path))?;
    }
    w.flush().map_err(wrap(edges_path))
}

/// Expected Recall@K under a uniformly random ranking of `candidates` items
/// with one relevant item.
pub fn chance_recall(k: usize, candidates: usize) -> f64 {
    if candidates == 0 || k >= candidates {
        1.0
    } else {
        k as f64 / candidates as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChanceBaselines {
    /// Micro-averaged over held-out friends with each user's own candidate count.
    pub friend_recall: BTreeMap<usize, f64>,
    /// General mode, every location a candidate.
    pub next_location_recall: BTreeMap<usize, f64>,
}

/// Chance-level recalls for the evaluation protocol on this generated instance.
pub fn chance_baselines(dataset: &Dataset, splits: &Splits, ks: &[usize]) -> ChanceBaselines {
    let n = dataset.num_users();
    let train = splits.train_graph(n);
    let test = splits.test_graph(n);
    let mut friend_recall = BTreeMap::new();
    for &k in ks {
        let mut expected = 0.0;
        let mut truths = 0usize;
        for v in 0..n {
            let t = test.neighbors(v).len();
            if t == 0 {
                continue;
            }
            let candidates = n - 1 - train.neighbors(v).len();
            expected += t as f64 * chance_recall(k, candidates);
            truths += t;
        }
        if truths > 0 {
            friend_recall.insert(k, expected / truths as f64);
        }
    }
    let next_location_recall = ks.iter().map(|&k| (k, chance_recall(k, dataset.num_locations()))).collect();
    ChanceBaselines { friend_recall, next_location_recall }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{make_splits, SplitConfig};

    fn small() -> SynthConfig {
        SynthConfig { subtrajectories_per_user: 3, seed: 5, ..SynthConfig::default() }
    }

    #[test]
    fn shape_matches_config() {
        let cfg = small();
        let d = generate(&cfg);
        assert_eq!(d.num_users(), 40);
        assert_eq!(d.num_checkins(), 40 * 3 * 5);
        assert!(d.trajectories.iter().all(|t| t.bounds == vec![(0, 5), (5, 10), (10, 15)]));
        assert!(d.validate().is_ok());
        assert!(d.graph.is_symmetric());
    }

    #[test]
    fn no_inter_edges_gives_two_blocks() {
        let cfg = SynthConfig { inter_edge_prob: 0.0, ..small() };
        let d = generate(&cfg);
        for (i, j) in d.graph.directed_edges() {
            assert_eq!(cfg.community_of(i), cfg.community_of(j));
        }
    }

    #[test]
    fn full_stickiness_follows_chain() {
        let cfg = SynthConfig { markov_stickiness: 1.0, ..small() };
        let mut rng = rng::stream(cfg.seed, Stream::Synth);
        // replay the generator's draws to recover the planted successor maps
        let nu = cfg.num_users();
        for i in 0..nu {
            for _ in i + 1..nu {
                let _: f64 = rng.gen();
            }
        }
        let comms: Vec<Community> = (0..cfg.num_communities).map(|c| plan_community(&cfg, c, &mut rng)).collect();
        let records = generate_records(&cfg);
        let nl = cfg.num_locations();
        let planted = |name: &str| name[1..].parse::<usize>().unwrap();
        for w in records.checkins.windows(2) {
            if w[0].user == w[1].user && w[1].timestamp - w[0].timestamp == INTRA_GAP_SECONDS {
                let u = planted(&w[0].user);
                let next = comms[cfg.community_of(u)].successor[&planted(&w[0].location)];
                assert_eq!(id('l', next, nl), w[1].location);
            }
        }
    }

    #[test]
    fn deterministic_per_seed() {
        assert_eq!(generate_records(&small()), generate_records(&small()));
        assert_ne!(generate_records(&small()), generate_records(&SynthConfig { seed: 6, ..small() }));
    }

    #[test]
    fn chance_values() {
        assert_eq!(chance_recall(5, 60), 5.0 / 60.0);
        assert_eq!(chance_recall(10, 7), 1.0);
        let d = generate(&small());
        let s = make_splits(&d, &SplitConfig { seed: 1, ..SplitConfig::default() });
        let b = chance_baselines(&d, &s, &[5, 10]);
        assert_eq!(b.next_location_recall[&5], 5.0 / d.num_locations() as f64);
        assert!(b.friend_recall[&10] > b.friend_recall[&5]);
    }

    #[test]
    fn validation_names_key() {
        let e = SynthConfig { markov_stickiness: 1.5, ..small() }.validate().unwrap_err();
        assert!(e.to_string().contains("markov_stickiness"));
    }
}
