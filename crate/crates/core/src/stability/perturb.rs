//! Declarative perturbation specs: the bridge between experiment manifests
//! and valid initial data.

use serde::{Deserialize, Serialize};

use super::variation::remove_obstruction;
use crate::error::{Error, Result};
use crate::forms6::{ncomp, omega_standard, phi_standard, AltTensor};
use crate::lattice::calculus::exterior_derivative;
use crate::lattice::{FormField, Grid};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PerturbationKind {
    /// d of a trigonometric potential on the listed (degree-1) multi-index.
    Exact,
    /// A constant-coefficient shift on the listed (degree) multi-index.
    Harmonic,
}

/// One term of a perturbation: (degree, multi-index, frequency vector,
/// amplitude, exact | harmonic).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PerturbationTerm {
    pub degree: usize,
    pub kind: PerturbationKind,
    /// 1-based form indices, of length `degree` for harmonic terms and
    /// `degree - 1` for exact ones (the potential's index).
    pub multi_index: Vec<usize>,
    #[serde(default)]
    pub frequency: [i64; 6],
    pub amplitude: f64,
    #[serde(default)]
    pub phase: f64,
}

fn term_field(grid: Grid, term: &PerturbationTerm) -> Result<FormField> {
    let idx0: Vec<usize> = term.multi_index.iter().map(|&i| i - 1).collect();
    match term.kind {
        PerturbationKind::Harmonic => {
            if idx0.len() != term.degree {
                return Err(Error::DegreeMismatch {
                    expected: term.degree,
                    got: idx0.len(),
                });
            }
            let v = AltTensor::basis(term.degree, &idx0).scaled(term.amplitude);
            Ok(FormField::constant(grid, &v))
        }
        PerturbationKind::Exact => {
            if idx0.len() + 1 != term.degree {
                return Err(Error::DegreeMismatch {
                    expected: term.degree - 1,
                    got: idx0.len(),
                });
            }
            let pdeg = term.degree - 1;
            let _ = ncomp(pdeg);
            let scale = 2.0 * std::f64::consts::PI / grid.length();
            let freq = term.frequency;
            let amp = term.amplitude;
            let phase = term.phase;
            let basis = AltTensor::basis(pdeg, &idx0);
            let pot = FormField::from_fn(grid, pdeg, move |x| {
                let arg: f64 = (0..6).map(|a| scale * freq[a] as f64 * x[a]).sum();
                basis.scaled(amp * (arg + phase).cos())
            });
            Ok(exterior_derivative(&pot))
        }
    }
}

/// Sums the terms of each degree into perturbation fields (dphi, domega).
pub fn build_perturbation(grid: Grid, terms: &[PerturbationTerm]) -> Result<(FormField, FormField)> {
    let mut dphi = FormField::zeros(grid, 3);
    let mut domega = FormField::zeros(grid, 2);
    for t in terms {
        let f = term_field(grid, t)?;
        match t.degree {
            3 => dphi.axpy(1.0, &f),
            2 => domega.axpy(1.0, &f),
            d => {
                return Err(Error::DegreeMismatch {
                    expected: 3,
                    got: d,
                })
            }
        }
    }
    Ok((dphi, domega))
}

/// A valid flow state from degree-3 perturbation terms: the raw closed shift
/// is repaired to be pointwise primitive against the flat background, so
/// (phibar + dphi, omegabar) is exactly a structure at every amplitude.
pub fn perturbed_phi_state(
    grid: Grid,
    terms: &[PerturbationTerm],
) -> Result<(FormField, FormField)> {
    let (dphi0, domega) = build_perturbation(grid, terms)?;
    if domega.max_abs() > 0.0 {
        return Err(Error::TooFar {
            stage: "perturbed_phi_state",
            detail: "degree-2 terms require the compatible-form construction".into(),
        });
    }
    let phibar = phi_standard(1.0);
    let omegabar = omega_standard();
    let dphi = remove_obstruction(&dphi0, &domega, &phibar, &omegabar)?;
    let mut phi = FormField::constant(grid, &phibar);
    phi.axpy(1.0, &dphi);
    Ok((phi, FormField::constant(grid, &omegabar)))
}

/// A perturbed symplectic form from degree-2 terms (for the compatible-form
/// construction and the end-to-end experiment).
pub fn perturbed_omega(grid: Grid, terms: &[PerturbationTerm]) -> Result<FormField> {
    let (dphi, domega) = build_perturbation(grid, terms)?;
    if dphi.max_abs() > 0.0 {
        return Err(Error::TooFar {
            stage: "perturbed_omega",
            detail: "degree-3 terms do not apply to the symplectic form".into(),
        });
    }
    let mut om = FormField::constant(grid, &omega_standard());
    om.axpy(1.0, &domega);
    Ok(om)
}
