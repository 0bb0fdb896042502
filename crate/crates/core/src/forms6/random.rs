//! Seeded test-structure generator: pullback by random linear
//! symplectomorphisms of the Darboux form.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::kernel;
use super::mat6::{self, Mat6};
use super::ops::matrix_action;
use super::types::PointStructure;

/// A random element of Sp(6, R): exp(W^{-1} S) with S symmetric, generated
/// deterministically from the seed.
pub fn random_symplectomorphism(seed: u64) -> Mat6 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = [[0.0; 6]; 6];
    for i in 0..6 {
        for j in i..6 {
            let v: f64 = rng.gen_range(-0.3..0.3);
            s[i][j] = v;
            s[j][i] = v;
        }
    }
    let w = kernel::omega_matrix(super::types::omega_standard().components());
    let winv = mat6::invert(&w).unwrap();
    mat6::expm(&mat6::matmul(&winv, &s))
}

/// Pulls (phi, omega) back by a seeded linear symplectomorphism.  The output
/// satisfies every structure invariant; identical seeds give identical output.
pub fn sp6_randomize(ps: &PointStructure, seed: u64) -> PointStructure {
    let t = random_symplectomorphism(seed);
    let phi = matrix_action(&t, &ps.phi);
    let omega = matrix_action(&t, &ps.omega);
    PointStructure::from_pair(phi, omega).expect("symplectic pullback preserves the structure")
}
