//! The three model variants on the same data: network and preference only,
//! plus the long-term cell, plus the short-term recurrence.
//!
//! cargo run --release --example ablation -- [seeds]

use jntm::data::{make_splits, SplitConfig};
use jntm::eval::{eval_next_location, Mode, Slice};
use jntm::model::VariantMask;
use jntm::synth::{generate, SynthConfig};
use jntm::train::{train, TrainConfig};

fn main() -> jntm::Result<()> {
    let seeds: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let variants = [VariantMask::BASE, VariantMask::BASE_LONG, VariantMask::FULL];
    let mut totals = [[0.0; 2]; 3];
    for seed in 0..seeds {
        let data = generate(&SynthConfig { seed, ..SynthConfig::default() });
        let splits = make_splits(&data, &SplitConfig { seed, ..SplitConfig::default() });
        for (i, &variant) in variants.iter().enumerate() {
            let model = train(&data, &splits, &TrainConfig { seed, variant, ..TrainConfig::default() }, None)?;
            let r = eval_next_location(&model.params, variant, &data, &splits, &[1, 5], Mode::General, Slice::All);
            totals[i][0] += r.recall(1).unwrap_or(0.0);
            totals[i][1] += r.recall(5).unwrap_or(0.0);
        }
    }
    println!("{:<16} {:>8} {:>8}", "variant", "R@1", "R@5");
    for (v, t) in variants.iter().zip(totals) {
        println!("{:<16} {:>8.3} {:>8.3}", v.label(), t[0] / seeds as f64, t[1] / seeds as f64);
    }
    Ok(())
}
