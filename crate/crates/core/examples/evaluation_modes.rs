//! General, new-location and cold-start next-location recall, written as the
//! report CSV.
//!
//! cargo run --release --example evaluation_modes

use jntm::data::{make_splits, SplitConfig};
use jntm::eval::{eval_next_location, format_reports, Mode, Slice};
use jntm::synth::{generate, SynthConfig};
use jntm::train::{train, TrainConfig};

fn main() -> jntm::Result<()> {
    // five subtrajectories per user, so every user falls in the cold-start slice
    let synth = SynthConfig { subtrajectories_per_user: 5, locations_per_subtrajectory: 8, seed: 6, ..SynthConfig::default() };
    let data = generate(&synth);
    let splits = make_splits(&data, &SplitConfig { seed: 6, trajectory_train_frac: 0.8, ..SplitConfig::default() });
    let cfg = TrainConfig { dim: 24, max_iterations: 15, seed: 6, ..TrainConfig::default() };
    let model = train(&data, &splits, &cfg, None)?;

    let ks = [1, 5, 10];
    let mut reports = Vec::new();
    for slice in [Slice::All, Slice::ColdStart] {
        for mode in [Mode::General, Mode::NewOnly] {
            reports.push(eval_next_location(&model.params, cfg.variant, &data, &splits, &ks, mode, slice));
        }
    }
    print!("{}", format_reports(&reports));
    Ok(())
}
