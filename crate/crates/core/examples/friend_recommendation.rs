//! Rank candidate friends for one user and score held-out links.
//!
//! cargo run --release --example friend_recommendation

use jntm::data::{make_splits, SplitConfig};
use jntm::eval::{eval_friend_rec, friend_score, rank_friend_candidates, Slice};
use jntm::synth::{generate, SynthConfig};
use jntm::train::{train, TrainConfig};

fn main() -> jntm::Result<()> {
    let synth = SynthConfig { seed: 3, ..SynthConfig::default() };
    let data = generate(&synth);
    let splits = make_splits(&data, &SplitConfig { seed: 3, ..SplitConfig::default() });
    let model = train(&data, &splits, &TrainConfig { seed: 3, ..TrainConfig::default() }, None)?;

    let n = data.num_users();
    let (train_graph, test_graph) = (splits.train_graph(n), splits.test_graph(n));
    let v = (0..n).find(|&v| !test_graph.neighbors(v).is_empty()).expect("some held-out link");
    let ranked = rank_friend_candidates(&model.params, &train_graph, v);
    println!("top candidates for {} (community {}):", data.users.name(v), synth.community_of(v));
    for &u in ranked.iter().take(5) {
        let held_out = if test_graph.has_edge(v, u) { "  held-out friend" } else { "" };
        println!("  {} community {} score {:.3}{held_out}", data.users.name(u), synth.community_of(u), friend_score(&model.params, v, u));
    }

    for slice in [Slice::All, Slice::LowDegree] {
        let r = eval_friend_rec(&model.params, &data, &splits, &[5, 10], slice);
        println!("{slice:?}: {:?} over {} held-out links", r.recall_at, r.num_events);
    }
    Ok(())
}
