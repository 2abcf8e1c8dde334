//! Privacy mechanisms for the two query classes of the inner updater.
//!
//! Refresh queries (large-batch gradient means) and incremental queries
//! (small-batch gradient differences) are clipped, perturbed with Gaussian
//! noise, and composed into a single (epsilon, delta) guarantee.

mod accountant;
mod calibrate;
mod mechanism;

pub use accountant::{
    account, advanced_composition_epsilon, Allocation, BlockReport, BudgetReport, CompositionRule,
    ClassReport, LedgerEntry, PrivacyBudget, QueryClass, QueryKind,
};
pub use calibrate::{
    calibrate_for, calibrate_noise, method_schedule, Calibrated, Calibration, IncrementalSensitivity, MethodKind,
    NoiseScale, PrivacyConfig,
};
pub use mechanism::{clip, clip_in_place, gaussian_mechanism, gaussian_sigma};
