//! The value function `u(t, x) = Y_t^{t,x}` and the experiments built on it.

mod experiments;
mod surface;

pub use experiments::{
    continuity_modulus, evaluate_points, evaluate_u, geometric_sequence, markov_consistency, regression_paths,
    sequence_ensembles, tightness_along_sequence, value_surface, Engine, EngineConfig, MarkovRow, MemberEnsembles,
    ModulusRow, ModulusTable, SequenceEnsembles, SequenceTightness,
};
pub use surface::ValueSurface;
