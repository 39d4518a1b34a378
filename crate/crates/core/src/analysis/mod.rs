//! Landscape scans, coherence, improvement probabilities and the
//! local-optimality diagnostic.

mod coherence;
mod efficiency;
mod frequency;
mod improvement;
mod landscape;
mod local_opt;

pub use coherence::{coherence_report, CoherenceReport};
pub use efficiency::{ball_between, efficiency_attraction_report, EfficiencyReport};
pub use frequency::{multi_step_improvement_frequency, trial_step_seed, FrequencySettings};
pub use improvement::{
    improvement_probability, positive_fraction, ImprovementPoint, ImprovementProfile, Probability, Proportion,
    ReferenceMethod, REFERENCE_NORM_FLOOR, WILSON_Z,
};
pub use landscape::{cell_seed, scan_landscape, Axis, ComponentScan, LandscapeGrid, DEFAULT_MARGIN};
pub use local_opt::{zero_reward_mass, LocalOptimalityDiagnostic};
