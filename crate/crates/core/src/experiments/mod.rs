//! Monte Carlo experiments: strong-law sweeps, containment and isolation
//! event frequencies against their exact probabilities, packing and covering
//! constructions, the Gumbel fit, and series summability diagnostics.
//!
//! Every experiment is a pure function of its configuration and base seed.
//! Replicates run in parallel on the rayon pool; results are sorted by
//! `(n, replicate)` before any summary is computed.

mod containment;
mod covering;
mod events;
mod gumbel;
mod summability;
mod sweep;

pub use containment::{containment_experiment, ContainmentResult};
pub use covering::{covering_construction, CoveringResult};
pub use events::{en_event_experiment, packing_construction, EnReport, ProbeResult, RegionCovariance};
pub use gumbel::{gumbel_fit_experiment, GumbelReport};
pub use summability::{summability_diagnostics, SeriesKind, SummabilityTable, Verdict};
pub use sweep::{
    envelope_check, strong_law_ratio, strong_law_sweep, EnvelopeRow, ExperimentReport, NSummary,
    ProcessKind, SweepConfig, SweepRecord,
};

/// |observed − expected| ≤ k·se, with se > 0 or an exact match.
pub fn within_se(observed: f64, expected: f64, se: f64, k: f64) -> bool {
    (observed - expected).abs() <= k * se
}
