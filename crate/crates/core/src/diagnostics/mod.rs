//! Quantitative checks on trajectories and fields: decay rates, `H^2` bounds,
//! blow-up of `psi'` at the boundary, contact-set dimension, and convergence of
//! the envelope flows.

mod blowup;
mod contact;
mod decay;
mod gamma;
mod regularity;

pub use blowup::{blowup_rate_scan, BlowupRow, BlowupScanSpec, BlowupTable, BLOWUP_COLUMNS};
pub use contact::{
    box_counts, contact_report, covering_content, dimension_estimate, holder_seminorm, nesting_holds, BoxCount,
    ContactReport, ContentBound, DEFAULT_BETAS, HOLDER_CUTOFF, HOLDER_RANDOM_PAIRS,
};
pub use decay::{grad_decay_check, grad_decay_check_with, ConventionCheck, DecayReport, DEFAULT_KAPPA, GRAD_FLOOR};
pub use gamma::{gamma_study, GammaReport, GammaRow};
pub use regularity::{
    energy_lower_bound, h2_bound_check, mean_deviation_check, mean_deviation_ratio, H2Row, H2Series,
    MeanDeviationSeries, CHAIN_SLACK, H2_SLACK,
};
