//! Benchmark fixtures shared by the criterion targets.

use instmix_core::synth::{build_catalog, FixtureSpec};
use instmix_core::TaskCatalog;

/// The full-size 1873-task catalog with `records` records per task.
pub fn full_catalog(records: usize) -> TaskCatalog {
    build_catalog(&FixtureSpec::full_scale(records))
}
