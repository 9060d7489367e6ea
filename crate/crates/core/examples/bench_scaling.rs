//! Time per check-in of a trajectory pass as the data grows.
//!
//! cargo run --release --example bench_scaling

use jntm::cli::{bench, format_bench};
use jntm::data::SplitConfig;
use jntm::synth::{generate, SynthConfig};
use jntm::train::TrainConfig;

fn main() -> jntm::Result<()> {
    let cfg = TrainConfig::default();
    for subtrajectories in [10, 20, 40] {
        let data = generate(&SynthConfig { subtrajectories_per_user: subtrajectories, ..SynthConfig::default() });
        let rows = bench(&data, &SplitConfig::default(), &cfg, 3)?;
        println!("|D| = {}", data.num_checkins());
        print!("{}", format_bench(&rows));
    }
    Ok(())
}
