//! Fixtures shared by the benchmarks.

use winscale_core::synthetic::{planted_dataset, PlantedConfig};
use winscale_core::Dataset;

/// Planted dataset with `n` vertices and `steps` steps.
pub fn fixture(n: usize, steps: usize) -> Dataset {
    planted_dataset(&PlantedConfig {
        n,
        steps,
        edges_per_step: n / 2,
        change_points: vec![steps / 4, steps / 2, 3 * steps / 4],
        ..PlantedConfig::default()
    })
}
