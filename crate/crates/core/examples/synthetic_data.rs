//! Planted-community data: structure of the graph and the trajectories, and
//! the chance floors used by the acceptance checks.
//!
//! cargo run --example synthetic_data -- [seed]

use jntm::data::{make_splits, SplitConfig};
use jntm::synth::{chance_baselines, generate, SynthConfig};

fn main() {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let cfg = SynthConfig { seed, ..SynthConfig::default() };
    let d = generate(&cfg);
    println!("{}", d.stats());

    let cross = d.graph.undirected_pairs().iter().filter(|&&(i, j)| cfg.community_of(i) != cfg.community_of(j)).count();
    println!("edges across communities: {cross} of {}", d.graph.undirected_pairs().len());

    let t = &d.trajectories[0];
    let first: Vec<&str> = t.subtrajectory(0).iter().map(|&l| d.locations.name(l)).collect();
    println!("{} subtrajectory 0: {}", d.users.name(0), first.join(" -> "));

    let splits = make_splits(&d, &SplitConfig { seed, ..SplitConfig::default() });
    let chance = chance_baselines(&d, &splits, &[1, 5, 10]);
    println!("chance friend recall: {:?}", chance.friend_recall);
    println!("chance next-location recall: {:?}", chance.next_location_recall);
}
