//! Strategies and property checks shared by the property suite and the
//! acceptance runner.
#![allow(dead_code)]

use proptest::collection::vec;
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

use jntm::data::{build_dataset, split_into_subtrajectories, CheckIn, Dataset, SplitConfig, Trajectory, SUBTRAJECTORY_GAP_SECONDS};
use jntm::eval::{eval_next_location_on, EvalTarget, Mode, Slice};
use jntm::model::{forward_trajectory, ModelParams, TensorId, VariantMask};
use jntm::train::{adagrad_update, init_params, Gradients, OptimizerState, TrainConfig};

pub const CASES: u32 = 100;

pub fn config() -> ProptestConfig {
    ProptestConfig { cases: CASES, failure_persistence: None, ..ProptestConfig::default() }
}

/// Sorted timestamps whose gaps straddle the six-hour boundary.
pub fn timestamps() -> impl Strategy<Value = Vec<i64>> {
    let gap = prop_oneof![
        0i64..3600,
        Just(SUBTRAJECTORY_GAP_SECONDS),
        Just(SUBTRAJECTORY_GAP_SECONDS + 1),
        0i64..60_000,
    ];
    (0i64..1_000_000, vec(gap, 0..60)).prop_map(|(start, gaps)| {
        let mut t = start;
        let mut out = Vec::with_capacity(gaps.len());
        for g in gaps {
            t += g;
            out.push(t);
        }
        out
    })
}

pub fn check_split_round_trip(ts: &[i64]) -> Result<(), TestCaseError> {
    let bounds = split_into_subtrajectories(ts, SUBTRAJECTORY_GAP_SECONDS);
    let mut next = 0;
    for &(a, b) in &bounds {
        prop_assert_eq!(a, next);
        prop_assert!(b > a);
        for w in ts[a..b].windows(2) {
            prop_assert!(w[1] - w[0] <= SUBTRAJECTORY_GAP_SECONDS);
        }
        if a > 0 {
            prop_assert!(ts[a] - ts[a - 1] > SUBTRAJECTORY_GAP_SECONDS);
        }
        next = b;
    }
    prop_assert_eq!(next, ts.len());

    let locations: Vec<usize> = (0..ts.len()).map(|i| i % 7).collect();
    let t = Trajectory::new(0, locations.clone(), ts.to_vec());
    let joined: Vec<usize> = (0..t.num_subtrajectories()).flat_map(|j| t.subtrajectory(j).to_vec()).collect();
    prop_assert_eq!(joined, locations);
    Ok(())
}

/// A few users with random visits over a small vocabulary.
pub fn small_dataset() -> impl Strategy<Value = Dataset> {
    (1usize..5, 2usize..12)
        .prop_flat_map(|(nu, nl)| vec(vec((0..nl, 0i64..30_000), 2..25), nu))
        .prop_map(|users| {
            let mut checkins = Vec::new();
            for (u, visits) in users.iter().enumerate() {
                let mut ts = 0;
                for &(l, gap) in visits {
                    ts += gap;
                    checkins.push(CheckIn { user: format!("u{u}"), location: format!("l{l:02}"), timestamp: ts });
                }
            }
            build_dataset(&checkins, &[])
        })
}

pub fn random_params(dataset: &Dataset, dim: usize, seed: u64, init_range: f64) -> ModelParams {
    let cfg = TrainConfig { dim, seed, init_range, ..TrainConfig::default() };
    init_params(&cfg, dataset.num_users(), dataset.num_locations())
}

fn all_reports(params: &ModelParams, d: &Dataset, ks: &[usize]) -> Vec<jntm::eval::EvalReport> {
    let splits = jntm::data::make_splits(d, &SplitConfig::default());
    let mut out = Vec::new();
    for target in [EvalTarget::Fit, EvalTarget::Test] {
        for mode in [Mode::General, Mode::NewOnly] {
            out.push(eval_next_location_on(params, VariantMask::FULL, d, &splits, target, ks, mode, Slice::All));
        }
    }
    out
}

pub fn check_recall_monotone(d: &Dataset, seed: u64) -> Result<(), TestCaseError> {
    let params = random_params(d, 3, seed, 1.0);
    let ks: Vec<usize> = (1..=d.num_locations() + 1).collect();
    for r in all_reports(&params, d, &ks) {
        let values: Vec<f64> = ks.iter().filter_map(|&k| r.recall(k)).collect();
        prop_assert!(values.iter().all(|v| (0.0..=1.0).contains(v)));
        prop_assert!(values.windows(2).all(|w| w[0] <= w[1]), "{:?}", values);
        if let Some(&last) = values.last() {
            prop_assert_eq!(last, 1.0);
        }
    }
    Ok(())
}

/// Relabels location `l` as `perm[l]` in both data and parameters.
pub fn permute_locations(d: &Dataset, params: &ModelParams, perm: &[usize]) -> (Dataset, ModelParams) {
    let mut d2 = d.clone();
    for t in &mut d2.trajectories {
        for l in &mut t.locations {
            *l = perm[*l];
        }
    }
    let mut p2 = params.clone();
    for id in [TensorId::U, TensorId::UOut] {
        let src = params.tensor(id);
        let dst = p2.tensor_mut(id);
        for (l, &to) in perm.iter().enumerate() {
            dst.row_mut(to).copy_from_slice(src.row(l));
        }
    }
    (d2, p2)
}

pub fn check_permutation_equivariance(d: &Dataset, seed: u64, perm: &[usize]) -> Result<(), TestCaseError> {
    let params = random_params(d, 3, seed, 1.0);
    let (d2, p2) = permute_locations(d, &params, perm);
    let ks: Vec<usize> = (1..=d.num_locations()).collect();
    prop_assert_eq!(all_reports(&params, d, &ks), all_reports(&p2, &d2, &ks));
    Ok(())
}

/// Dataset paired with a permutation of its locations.
pub fn dataset_with_permutation() -> impl Strategy<Value = (Dataset, Vec<usize>)> {
    small_dataset().prop_flat_map(|d| {
        let n = d.num_locations();
        (Just(d), Just((0..n).collect::<Vec<_>>()).prop_shuffle())
    })
}

pub fn check_gate_ranges(seed: u64, scale: f64, locations: &[usize]) -> Result<(), TestCaseError> {
    let cfg = TrainConfig { dim: 4, seed, init_range: scale, ..TrainConfig::default() };
    let params = init_params(&cfg, 1, 6);
    let ts: Vec<i64> = (0..locations.len() as i64).map(|i| i * 3600 * (1 + i % 9)).collect();
    let bounds = split_into_subtrajectories(&ts, SUBTRAJECTORY_GAP_SECONDS);
    let trace = forward_trajectory(&params, VariantMask::FULL, 0, locations, &bounds);
    let unit = |v: &f64| (-1.0..=1.0).contains(v);
    for (i, f, c) in &trace.gate_activations {
        prop_assert!(i.iter().chain(f).all(|v| (0.0..=1.0).contains(v)));
        prop_assert!(c.iter().all(unit));
    }
    prop_assert!(trace.long_hidden.iter().flatten().all(unit));
    // S0 is a free parameter; every state after a recurrent step is a tanh
    for &(a, b) in &bounds {
        prop_assert!(trace.short_states[a + 1..b].iter().flatten().all(unit));
    }
    let mut prev = params.c0.data.clone();
    for cell in &trace.long_cells {
        for (c, p) in cell.iter().zip(&prev) {
            prop_assert!(c.abs() <= p.abs() + 1.0 + 1e-12);
        }
        prev = cell.clone();
    }
    Ok(())
}

pub fn gate_case() -> impl Strategy<Value = (u64, f64, Vec<usize>)> {
    (any::<u64>(), 0.0f64..5.0, vec(0usize..6, 1..30))
}

/// Sequences of gradient steps, each a list of `(tensor, flat index, value)`.
pub fn gradient_steps() -> impl Strategy<Value = Vec<Vec<(usize, usize, f64)>>> {
    let entry = (0usize..TensorId::ALL.len(), 0usize..64, -1e3f64..1e3);
    vec(vec(entry, 1..10), 1..20)
}

pub fn check_adagrad_monotone(steps: &[Vec<(usize, usize, f64)>]) -> Result<(), TestCaseError> {
    let mut params = ModelParams::zeros(2, 3, 2);
    let mut state = OptimizerState::new(&params);
    for step in steps {
        let mut g = Gradients::zeros_like(&params);
        for &(t, idx, v) in step {
            let id = TensorId::ALL[t];
            let (rows, cols) = g.shape(id);
            let flat = idx % (rows * cols);
            if id.is_table() {
                g.table_mut(id).row_mut(flat / cols)[flat % cols] += v;
            } else {
                g.dense_mut(id)[flat] += v;
            }
        }
        let before = state.accumulators.clone();
        adagrad_update(&mut params, &g, &mut state, 0.1, 1e-8).map_err(|e| TestCaseError::fail(e.to_string()))?;
        for id in TensorId::ALL {
            let (a, b) = (&before.tensor(id).data, &state.accumulators.tensor(id).data);
            prop_assert!(a.iter().zip(b).all(|(x, y)| y >= x));
        }
        prop_assert!(params.is_finite());
    }
    Ok(())
}
