//! The experiment layer: harmonic correction, corrected-difference energies
//! and decay fits, numerical verification of the linearization, and the
//! symplectic-perturbation-to-compatible-3-form construction.

mod construct;
mod perturb;
mod correction;
mod endtoend;
mod energy;
mod variation;

pub use construct::{build_compatible_phi, class_ode_solution};
pub use correction::{harmonic_correction, CorrectedPair};
pub use endtoend::{end_to_end_stability, nijenhuis_of_state, EndToEndConfig, StageStatus, Verdict};
pub use energy::{energies, fit_decay, EnergyReport};
pub use perturb::{build_perturbation, perturbed_omega, perturbed_phi_state, PerturbationKind,
    PerturbationTerm};
pub use variation::{constrained_phi_variation, constrained_variation, linearization_check,
    LinearizationReport, VariationPair};
