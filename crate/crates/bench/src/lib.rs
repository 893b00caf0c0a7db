//! Shared fixtures for the criterion benchmarks.

use blds_core::harness::{gen_instance, GenConfig, GenMode};
use blds_core::model::{validate_instance, ValidatedInstance};
use blds_core::rational::rat;

/// A mid-sized random instance matching the benchmark campaign's shape.
pub fn campaign_instance(n: usize, m: usize, r: u32, seed: u64) -> ValidatedInstance {
    let cfg = GenConfig {
        n,
        m,
        r,
        cost_max: 10,
        count: 1,
        seed,
        mode: GenMode::Raw,
        include_prob: rat(1, 2),
    };
    validate_instance(gen_instance(&cfg, 0)).expect("generated instances are valid")
}
