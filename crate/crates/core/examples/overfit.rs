//! Memorises a tiny synthetic dataset: training-set Recall@1 should approach 1.
//!
//! cargo run --release --example overfit

use jntm::data::{make_splits, SplitConfig};
use jntm::eval::{eval_next_location_on, EvalTarget, Mode, Slice};
use jntm::synth::{generate, SynthConfig};
use jntm::train::{train, TrainConfig};

fn main() -> jntm::Result<()> {
    let synth = SynthConfig {
        num_communities: 1,
        users_per_community: 4,
        locations_per_community: 10,
        shared_locations: 0,
        subtrajectories_per_user: 3,
        locations_per_subtrajectory: 5,
        seed: 0,
        ..SynthConfig::default()
    };
    let data = generate(&synth);
    let splits = make_splits(&data, &SplitConfig::default());
    let cfg = TrainConfig { dim: 16, max_iterations: 500, patience: 0, ..TrainConfig::default() };
    let out = train(&data, &splits, &cfg, None)?;
    let report =
        eval_next_location_on(&out.last_params, cfg.variant, &data, &splits, EvalTarget::Fit, &[1], Mode::General, Slice::All);
    let last = out.log.last().expect("at least one epoch");
    println!(
        "|L|={} epochs={} traj_loss={:.4} train Recall@1={:.3} over {} positions",
        data.num_locations(),
        out.log.len(),
        last.traj_loss,
        report.recall(1).unwrap_or(0.0),
        report.num_events
    );
    Ok(())
}
