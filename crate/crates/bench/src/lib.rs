//! Shared fixtures for the benchmarks.

use lnnd_core::process::sample_cloud;
use lnnd_core::{Dimension, PointCloud, SeedRecord};

/// A fixed standard-normal cloud.
pub fn fixture(n: usize, d: u32) -> PointCloud {
    sample_cloud(Dimension::new(d).expect("d >= 2"), n, SeedRecord::new(42, 0))
}
