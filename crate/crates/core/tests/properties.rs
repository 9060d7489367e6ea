mod support;

use proptest::prelude::*;
use support::*;

proptest! {
    #![proptest_config(config())]

    #[test]
    fn subtrajectory_split_round_trip(ts in timestamps()) {
        check_split_round_trip(&ts)?;
    }

    #[test]
    fn recall_is_monotone_in_k(d in small_dataset(), seed in any::<u64>()) {
        check_recall_monotone(&d, seed)?;
    }

    #[test]
    fn rankings_are_location_permutation_equivariant((d, perm) in dataset_with_permutation(), seed in any::<u64>()) {
        check_permutation_equivariance(&d, seed, &perm)?;
    }

    #[test]
    fn gates_and_states_stay_in_range((seed, scale, locs) in gate_case()) {
        check_gate_ranges(seed, scale, &locs)?;
    }

    #[test]
    fn adagrad_accumulators_never_decrease(steps in gradient_steps()) {
        check_adagrad_monotone(&steps)?;
    }
}
