//! Trains the full model and the base variant on planted-community data and
//! compares friend and next-location recall with chance.
//!
//! cargo run --release --example planted_recovery -- [seeds]

use jntm::data::{make_splits, SplitConfig};
use jntm::eval::{eval_friend_rec, eval_next_location, Mode, Slice};
use jntm::model::VariantMask;
use jntm::synth::{chance_baselines, generate, SynthConfig};
use jntm::train::{train, TrainConfig};

fn main() -> jntm::Result<()> {
    let seeds: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(5);
    let mut full_sum = 0.0;
    let mut base_sum = 0.0;
    for seed in 0..seeds {
        let data = generate(&SynthConfig { seed, ..SynthConfig::default() });
        let splits = make_splits(&data, &SplitConfig { seed, ..SplitConfig::default() });
        let chance = chance_baselines(&data, &splits, &[10]);
        let mut row = format!("seed {seed}: friend chance@10 {:.3}", chance.friend_recall[&10]);
        for variant in [VariantMask::FULL, VariantMask::BASE] {
            let cfg = TrainConfig { seed, variant, ..TrainConfig::default() };
            let out = train(&data, &splits, &cfg, None)?;
            let next = eval_next_location(&out.params, variant, &data, &splits, &[5], Mode::General, Slice::All);
            let friend = eval_friend_rec(&out.params, &data, &splits, &[10], Slice::All);
            let r5 = next.recall(5).unwrap_or(0.0);
            if variant == VariantMask::FULL {
                full_sum += r5;
            } else {
                base_sum += r5;
            }
            row += &format!(
                " | {} epochs {} next@5 {:.3} friend@10 {:.3}",
                variant.label(),
                out.log.len(),
                r5,
                friend.recall(10).unwrap_or(0.0)
            );
        }
        println!("{row}");
    }
    println!("mean next@5: full {:.3} base {:.3}", full_sum / seeds as f64, base_sum / seeds as f64);
    Ok(())
}
