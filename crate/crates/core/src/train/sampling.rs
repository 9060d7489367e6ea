use rand::seq::{index, SliceRandom};
use rand::Rng;

use crate::data::SocialGraph;

/// Up to `count` distinct users that are neither `user` nor one of its
/// out-neighbours, uniformly at random. Returns every eligible user (ascending)
/// when there are no more than `count` of them.
pub fn sample_negative_links(graph: &SocialGraph, user: usize, count: usize, rng: &mut impl Rng) -> Vec<usize> {
    let n = graph.num_users();
    let neighbors = graph.neighbors(user);
    let eligible = n - 1 - neighbors.len();
    let is_eligible = |u: usize| u != user && neighbors.binary_search(&u).is_err();
    if eligible <= count {
        return (0..n).filter(|&u| is_eligible(u)).collect();
    }
    if eligible < 2 * count {
        let pool: Vec<usize> = (0..n).filter(|&u| is_eligible(u)).collect();
        return pool.choose_multiple(rng, count).copied().collect();
    }
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let u = rng.gen_range(0..n);
        if is_eligible(u) && !out.contains(&u) {
            out.push(u);
        }
    }
    out
}

/// `n2` distinct locations other than `target`, uniformly without replacement.
/// Returns all other locations when fewer than `n2` exist.
pub fn sample_negative_locations(num_locations: usize, target: usize, n2: usize, rng: &mut impl Rng) -> Vec<usize> {
    debug_assert!(target < num_locations);
    let others = num_locations - 1;
    if others <= n2 {
        return (0..num_locations).filter(|&l| l != target).collect();
    }
    index::sample(rng, others, n2)
        .into_iter()
        .map(|l| if l >= target { l + 1 } else { l })
        .collect()
}
