mod common;

use chameleon_core::CacheConfig;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn random_sequences_keep_invariants(which in 0usize..8, seed in any::<u64>(), len in 1usize..80) {
        let cfg = common::fidelity_configs()[which].clone();
        prop_assert_eq!(common::check_sequence(&cfg, seed, len), Ok(()));
    }

    #[test]
    fn larger_geometries_keep_invariants(
        s_log in 1u32..5,
        w_log in 0u32..4,
        d_log in 0u32..4,
        w_vc in 0usize..5,
        seed in any::<u64>(),
    ) {
        let (s, w) = (1usize << s_log, 1usize << w_log);
        let d = (1usize << d_log).min(w);
        let cfg = if w_vc == 0 {
            CacheConfig::ceaser_s(s, w, d)
        } else {
            CacheConfig::chameleon(s, w, d, w_vc)
        };
        prop_assert_eq!(common::check_sequence(&cfg, seed, 60), Ok(()));
    }
}
