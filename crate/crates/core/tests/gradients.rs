mod common;

use common::gradcheck::check;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn analytic_gradient_matches_central_differences(seed in any::<u64>()) {
        let outcome = check(seed);
        prop_assume!(outcome.is_some());
        if let Some(Err(msg)) = outcome {
            prop_assert!(false, "{}", msg);
        }
    }
}
