//! Benchmark fixtures shared by the criterion targets.

use reflekt_core::valuefn::EngineConfig;
use reflekt_core::{PresetName, Problem};

pub const SEED: u64 = 7;

pub fn problem(name: PresetName) -> Problem {
    Problem::preset(name)
}

/// Engine sizes small enough for repeated sampling.
pub fn grid_engine() -> EngineConfig {
    EngineConfig::grid(50, 51, SEED)
}

pub fn regression_engine() -> EngineConfig {
    EngineConfig::regression(20, 5000, SEED)
}
