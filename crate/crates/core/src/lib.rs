//! Adversarial classification and surrogate risks for discrete binary
//! distributions.
//!
//! The crate certifies whether a surrogate loss `φ` is adversarially
//! consistent (`C_φ*(1/2) < φ(0)`), evaluates the standard and adversarial
//! risks of classifiers tabulated on a finite scene, computes ∞-Wasserstein
//! distances between discrete measures, and checks the minimax duality
//! between adversarial risks and their dual objectives by exhaustive search
//! on small instances.

pub mod classifiers;
pub mod duality;
pub mod error;
pub mod ext;
pub mod instance;
pub mod losses;
pub mod measures;
pub mod minimize;
pub mod risks;
pub mod rng;
pub mod transport;

pub use classifiers::{counterexample_classifier, sgn, sup_ball, truncate, Scene, TabulatedClassifier};
pub use error::{Error, Result};
pub use ext::ExtReal;
pub use losses::{ConsistencyCertificate, LossFunction, MarginConstants, OptimalRisk};
pub use measures::{uniform_segment, Atom, DiscreteMeasure, LabeledDistribution, Norm, PosteriorView};
pub use duality::{
    duality_gap, dual_classification_objective, dual_surrogate_objective, maximize_dual, slackness_report, weak_duality_check,
    DualCandidate, DualSolution, GapReport, SlacknessRow,
};
pub use instance::{Instance, Problem, TransportInstance};
pub use risks::{
    adversarial_classification_risk, adversarial_surrogate_risk, brute_force_optimal_risk, classification_risk, default_value_grid,
    optimal_classification_risk, optimal_surrogate_risk, pointwise_surrogate_risk, surrogate_risk, BruteForceResult, RiskKind,
};
pub use rng::SeededRng;
pub use transport::{in_ball, sup_integral_check, winf_distance, Coupling, CouplingEntry, WinfResult};
