//! Càdlàg paths on finite grids: total variation, Stieltjes integrals with
//! exact jump handling, and the conditional-variation diagnostics.

mod integrals;
mod path;
mod selftest;
mod variation;

pub use integrals::{
    helly_bray_gap, ibp_residual, jump_covariation, jump_covariation_between, refinement_sequence, stieltjes_left,
    stieltjes_right, total_variation,
};
pub use path::{BVPath, CadlagPath, Interp, Partition};
pub use selftest::{random_step_path, selftest, sine_path, CadlagSelftest, MONOTONE_SLACK};
pub use variation::{
    conditional_variation, s_tightness_diagnostic, CvEstimate, PathEnsemble, Regressor, TightnessReport, TightnessRow,
    BOUNDED_RATIO, DEFAULT_BINS, MIN_ENSEMBLE,
};
