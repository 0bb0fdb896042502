//! Harmonic correction: the nearby stationary structure whose difference
//! from the data is orthogonal to the harmonic forms.  On the flat torus the
//! correction is the zero-mode projection.

use crate::error::{Error, Result};
use crate::forms6::{wedge, PointStructure};
use crate::lattice::FormField;

/// A corrected stationary pair: constant coefficients, primitive, positive.
#[derive(Clone, Debug)]
pub struct CorrectedPair {
    pub phi_tilde: FormField,
    pub omega_tilde: FormField,
    pub provenance: String,
}

impl CorrectedPair {
    pub fn structure(&self) -> PointStructure {
        PointStructure::from_pair(self.phi_tilde.at(0), self.omega_tilde.at(0))
            .expect("corrected pair was validated on construction")
    }
}

/// Projects a near-flat structure onto its harmonic (constant) part and
/// validates that the projected pair is again a structure of the same kind.
pub fn harmonic_correction(phi0: &FormField, omega0: &FormField) -> Result<CorrectedPair> {
    let grid = phi0.grid();
    let h3 = phi0.mean();
    let h2 = omega0.mean();
    // The wedge of the projections must vanish: the Hodge decomposition of
    // the 5-form 0 has no room for a harmonic part.
    let w = wedge(&h3, &h2)?;
    let scale = h3.max_abs().max(1e-300) * h2.max_abs().max(1e-300);
    if w.max_abs() > 1e-10 * scale.max(1e-10) {
        return Err(Error::NonPrimitive {
            residual: w.max_abs(),
        });
    }
    // Positivity of the projected pair; failure means the input left the
    // basin the correction is valid in.
    if let Err(e) = PointStructure::from_pair(h3, h2) {
        return Err(Error::TooFar {
            stage: "harmonic_correction",
            detail: format!("projected pair is not a structure: {e}"),
        });
    }
    Ok(CorrectedPair {
        phi_tilde: FormField::constant(grid, &h3),
        omega_tilde: FormField::constant(grid, &h2),
        provenance: "zero-mode projection of (phi0, omega0)".into(),
    })
}
