//! Time and position POVM kernels, overlap integrals, probability densities
//! and completeness diagnostics.

mod position;
mod reconstruct;
mod time;

pub use position::{
    position_distribution, position_distribution_raw, position_overlap, CoordinateMaps,
    PositionDistribution, PositionPovmKernel, PositionQuadrature,
};
pub use reconstruct::{nw_from_time_povm_residual, reconstruction_scan, ReconstructionSettings};
pub use time::{
    time_completeness_defect, time_distribution, time_overlap, time_uncertainty,
    TimeDistribution, TimePovmKernel, TimeUncertainty,
};
