//! How friendship and visited-location overlap co-vary.
//!
//! cargo run --example correlation_stats

use jntm::data::correlation_report;
use jntm::synth::{generate, SynthConfig};

fn main() {
    for (intra, inter) in [(0.3, 0.02), (0.1, 0.1)] {
        let d = generate(&SynthConfig { intra_edge_prob: intra, inter_edge_prob: inter, seed: 1, ..SynthConfig::default() });
        let r = correlation_report(&d, 10_000, 1);
        println!("intra {intra} inter {inter}: {}", d.stats());
        println!(
            "  mean overlap: friends {:.3} ({} pairs), others {:.3} ({} pairs)",
            r.friend_mean_overlap.unwrap_or(f64::NAN),
            r.friend_pairs_sampled,
            r.non_friend_mean_overlap.unwrap_or(f64::NAN),
            r.non_friend_pairs_sampled
        );
        println!(
            "  P(friends) {:.4}, P(friends | >3 common locations) {:.4}",
            r.friend_probability.unwrap_or(f64::NAN),
            r.friend_probability_given_common.unwrap_or(f64::NAN)
        );
    }
}
