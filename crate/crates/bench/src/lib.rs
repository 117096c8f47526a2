//! Shared fixtures for the criterion benchmarks.

use swan_core::{build_centered_layout, sample_users, SystemParams, UserSet, WaveguideLayout};

/// Default parameters, `m` centred segments and `k` users over a 20 m x 20 m region.
pub fn scenario(m: usize, k: usize, seed: u64) -> (UserSet, WaveguideLayout, SystemParams) {
    let params = SystemParams::default();
    let layout = build_centered_layout(m, 1.0, 3.0, 0.0).expect("valid layout");
    let users =
        sample_users(k, 20.0, 20.0, swan_core::dbm_to_watts(10.0), seed).expect("valid users");
    (users, layout, params)
}
