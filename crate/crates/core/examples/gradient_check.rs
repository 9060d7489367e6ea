//! Finite-difference check of every parameter tensor, plus a corrupted
//! gradient to show what a failure looks like.
//!
//! cargo run --example gradient_check -- [seed]

use jntm::gradcheck::{check_all, check_all_with, toy_config, toy_dataset, GradCheckOptions};
use jntm::model::TensorId;

fn main() -> jntm::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let data = toy_dataset(seed);
    let cfg = toy_config(seed);
    let opts = GradCheckOptions { seed, ..GradCheckOptions::default() };

    print!("{}", check_all(&data, &cfg, &opts)?.to_text());

    let bad = check_all_with(&data, &cfg, &opts, |g| g.scale_tensor(TensorId::WF1, 1.01))?;
    let failing: Vec<&str> = bad.failing().map(|t| t.tensor.name()).collect();
    println!("with W_f1 gradient scaled by 1.01: failing {failing:?}");
    Ok(())
}
