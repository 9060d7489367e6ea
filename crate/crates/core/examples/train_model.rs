//! Train on synthetic data, write a checkpoint and the per-epoch log, reload.
//!
//! cargo run --release --example train_model

use jntm::data::{make_splits, SplitConfig};
use jntm::model::read_checkpoint;
use jntm::synth::{generate, SynthConfig};
use jntm::train::{format_log, train, TrainConfig};

fn main() -> jntm::Result<()> {
    let data = generate(&SynthConfig { seed: 4, ..SynthConfig::default() });
    let splits = make_splits(&data, &SplitConfig { seed: 4, ..SplitConfig::default() });
    let cfg = TrainConfig { dim: 32, max_iterations: 20, seed: 4, ..TrainConfig::default() };

    let path = std::env::temp_dir().join("jntm-example.jntm");
    let out = train(&data, &splits, &cfg, Some(&path))?;
    print!("{}", format_log(&out.log));
    println!("best epoch {:?}, checkpoint {}", out.best_epoch, path.display());

    let ckpt = read_checkpoint(&path)?;
    assert_eq!(ckpt.params, out.params);
    assert_eq!(ckpt.locations, data.locations);
    Ok(())
}
