mod common;

use proptest::prelude::*;

use common::props;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn whnf_is_idempotent(seed in any::<u64>()) {
        props::whnf_idempotent(seed).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn failed_defeq_rolls_back(seed in any::<u64>()) {
        props::rollback_on_failure(seed).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn abstraction_inverts_instantiation(seed in any::<u64>()) {
        props::abstract_instantiate_inverse(seed).map_err(TestCaseError::fail)?;
    }
}

#[test]
fn rollback_cases_mostly_fail() {
    // The property above is only informative if failures are common.
    let failures = (0..500).filter(|s| props::rollback_on_failure(*s).unwrap()).count();
    assert!(failures > 250, "only {failures} of 500 comparisons failed");
    assert!(failures < 500);
}
