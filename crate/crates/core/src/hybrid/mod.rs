//! Hybrid equilibria: cheap-talk labels chosen before the anchor is seen,
//! followed by an anchored report inside the chosen label.

mod asymptotic;
mod exact;

pub use asymptotic::{
    boundary_gain, fisher_info, loss_difference, r_and_d_profiles, shift_moments, width_correction, AsymptoticProfiles,
    LossBreakdown, Player, Side, PROFILE_NODES,
};
pub use exact::{
    boundary_gaps, compare_formats, hybrid_exact, hybrid_exact_with, hybrid_with_cutoffs, label_value, most_informative_hybrid, reporting_cost_scaling, Continuation,
    FormatComparison, FormatLosses, HybridEquilibrium, HybridOptions, HybridWelfare, ScalingRow, ScalingTable,
};
