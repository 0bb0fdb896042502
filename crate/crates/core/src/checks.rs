//! The invariant suites behind `iia check`: pointwise identities over
//! randomized structures and the spectral-calculus identities on the grid.

use crate::forms6::{
    self, bilinear_residual, hitchin_dual, inner, interior_product, j_action,
    lambda_contraction, metric, norm_squared, sp6_randomize, variation_dual,
    variation_norm_squared, wedge, AltTensor, PointStructure,
};
use crate::lattice::calculus as calc;
use crate::lattice::Grid;

pub struct CheckResult {
    pub name: &'static str,
    pub worst: f64,
    pub tol: f64,
}

impl CheckResult {
    pub fn pass(&self) -> bool {
        self.worst <= self.tol
    }
}

fn rand_vector(seed: u64) -> [f64; 6] {
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0xabcd_1234);
    std::array::from_fn(|_| rng.gen_range(-1.0..1.0))
}

fn rand_tensor(degree: usize, seed: u64) -> AltTensor {
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x5a5a_0f0f);
    let mut t = AltTensor::zero(degree);
    for c in t.components_mut() {
        *c = rng.gen_range(-1.0..1.0);
    }
    t
}

/// Pointwise identity sweep over `n` randomized structures.
pub fn pointwise_suite(n: usize) -> Vec<CheckResult> {
    let base = PointStructure::standard(1.0);
    let mut bilinear = 0.0f64;
    let mut jsq = 0.0f64;
    let mut metric_cross = 0.0f64;
    let mut contraction = 0.0f64;
    let mut decomp = 0.0f64;
    for seed in 0..n as u64 {
        let ps = sp6_randomize(&base, seed);
        bilinear = bilinear.max(bilinear_residual(&ps));
        jsq = jsq.max(ps.j.square_defect());
        // metric from the component formula against omega(., J.)
        let g = metric(&ps.phi, &ps.omega).expect("randomized structure");
        let w = forms6::kernel::omega_matrix(ps.omega.components());
        let gj = forms6::mat6::matmul(&w, &ps.j.matrix);
        metric_cross = metric_cross.max(forms6::mat6::max_abs_diff(&g.entries, &gj));
        // contraction identities for a random vector
        let v = rand_vector(seed);
        let mut vs = [0.0; 6];
        for i in 0..6 {
            for m in 0..6 {
                vs[i] += g.entries[m][i] * v[m];
            }
        }
        let vs1 = AltTensor::from_components(1, &vs);
        let ivphi = interior_product(&v, &ps.phi);
        let r1 = lambda_contraction(&ps.omega, &wedge(&vs1, &ps.phihat).unwrap());
        contraction = contraction.max((ivphi - r1).max_abs());
        let jvs = j_action(&ps.j, &vs1);
        let r2 = lambda_contraction(&ps.omega, &wedge(&jvs, &ps.phi).unwrap());
        contraction = contraction.max((ivphi - r2).max_abs());
        let ivhat = interior_product(&v, &ps.phihat);
        let r3 = lambda_contraction(&ps.omega, &wedge(&vs1, &ps.phi).unwrap());
        contraction = contraction.max((ivhat + r3).max_abs());
        // type decomposition recombines and stays in the right subspaces
        let a = rand_tensor(3, seed);
        let d = forms6::type_decompose(&ps, &a);
        let rec = d.recombine(&ps);
        decomp = decomp.max((rec - a).max_abs());
        if let forms6::TypeDecomposition::Three(s) = d {
            decomp = decomp.max(lambda_contraction(&ps.omega, &s.alpha).max_abs());
            decomp = decomp.max(inner(&ps.metric, &s.alpha, &ps.phi).abs());
            decomp = decomp.max(inner(&ps.metric, &s.alpha, &ps.phihat).abs());
        }
    }
    vec![
        CheckResult {
            name: "bilinear identity residual",
            worst: bilinear,
            tol: 1e-12,
        },
        CheckResult {
            name: "J^2 + I",
            worst: jsq,
            tol: 1e-12,
        },
        CheckResult {
            name: "metric formula vs omega(.,J.)",
            worst: metric_cross,
            tol: 1e-12,
        },
        CheckResult {
            name: "contraction identities",
            worst: contraction,
            tol: 1e-11,
        },
        CheckResult {
            name: "type decomposition recombines",
            worst: decomp,
            tol: 1e-11,
        },
    ]
}

/// Variational formulas against central finite differences.
pub fn variational_suite(n: usize) -> Vec<CheckResult> {
    let base = PointStructure::standard(1.0);
    let eps = 1e-5;
    let mut dual_rel = 0.0f64;
    let mut norm_rel = 0.0f64;
    let mut ratios: Vec<f64> = Vec::new();
    for seed in 0..n as u64 {
        let ps = sp6_randomize(&base, 1000 + seed);
        let dphi = rand_tensor(3, seed);
        let dom = rand_tensor(2, seed.wrapping_add(7));
        // variation of the dual vs FD of hitchin_dual
        let ana = variation_dual(&ps.phi, &dphi).unwrap();
        let fd = |e: f64| {
            let hp = hitchin_dual(&(ps.phi + dphi.scaled(e))).unwrap();
            let hm = hitchin_dual(&(ps.phi - dphi.scaled(e))).unwrap();
            (hp - hm).scaled(0.5 / e)
        };
        let num = fd(eps);
        dual_rel = dual_rel.max((num - ana).max_abs() / ana.max_abs().max(1e-12));
        // observed order of the FD remainder under halving
        let e0 = 1e-4;
        let r1 = (fd(e0) - ana).max_abs();
        let r2 = (fd(e0 / 2.0) - ana).max_abs();
        if r2 > 1e-13 {
            ratios.push(r1 / r2);
        }
        // variation of |phi|^2 vs FD of norm_squared
        let ana = variation_norm_squared(&ps, &dphi, &dom);
        let np = norm_squared(&(ps.phi + dphi.scaled(eps)), &(ps.omega + dom.scaled(eps))).unwrap();
        let nm = norm_squared(&(ps.phi - dphi.scaled(eps)), &(ps.omega - dom.scaled(eps))).unwrap();
        let num = (np - nm) / (2.0 * eps);
        norm_rel = norm_rel.max((num - ana).abs() / ana.abs().max(1e-12));
    }
    ratios.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let med = ratios[ratios.len() / 2];
    vec![
        CheckResult {
            name: "dual variation vs finite difference",
            worst: dual_rel,
            tol: 1e-7,
        },
        CheckResult {
            name: "norm variation vs finite difference",
            worst: norm_rel,
            tol: 1e-7,
        },
        CheckResult {
            name: "FD remainder order (|ratio - 4|)",
            worst: (med - 4.0).abs(),
            tol: 0.5,
        },
    ]
}

/// Spectral-calculus identities on the grid.
pub fn lattice_suite(grid: Grid) -> Vec<CheckResult> {
    let mut dd = 0.0f64;
    let mut adj = 0.0f64;
    let mut box_routes = 0.0f64;
    let mut hodge = 0.0f64;
    let mut green = 0.0f64;
    for seed in 0..3u64 {
        let f2 = calc::random_band_limited(grid, 2, 2, 10 + seed);
        let f3 = calc::random_band_limited(grid, 3, 2, 20 + seed);
        dd = dd.max(
            calc::exterior_derivative(&calc::exterior_derivative(&f2)).max_abs()
                / f2.max_abs().max(1.0),
        );
        dd = dd.max(
            calc::codifferential(&calc::codifferential(&f3)).max_abs() / f3.max_abs().max(1.0),
        );
        let a = calc::l2_inner(&calc::exterior_derivative(&f2), &f3);
        let b = calc::l2_inner(&f2, &calc::codifferential(&f3));
        adj = adj.max((a - b).abs() / a.abs().max(1.0));
        let b1 = calc::hodge_laplacian(&f2);
        let mut b2 = calc::codifferential(&calc::exterior_derivative(&f2));
        b2.axpy(1.0, &calc::exterior_derivative(&calc::codifferential(&f2)));
        b2.axpy(-1.0, &b1);
        box_routes = box_routes.max(b2.max_abs() / f2.max_abs().max(1.0));
        // Hodge decomposition of a closed field
        let pot = calc::random_band_limited(grid, 2, 2, 30 + seed);
        let mut f = calc::exterior_derivative(&pot);
        f.axpy(1.0, &crate::lattice::FormField::constant(grid, &rand_tensor(3, seed)));
        let (hf, rem) = calc::harmonic_projection(&f);
        let gamma = calc::neumann_operator(&rem).expect("exact remainder");
        let mut recon = calc::exterior_derivative(&gamma);
        recon.axpy(1.0, &hf.as_field(grid));
        recon.axpy(-1.0, &f);
        hodge = hodge.max(recon.max_abs() / f.max_abs().max(1.0));
        // Green round trip
        let g = calc::green_inverse(&f3);
        let mut resid = calc::hodge_laplacian(&g);
        let (_, zm) = calc::harmonic_projection(&f3);
        resid.axpy(-1.0, &zm);
        green = green.max(resid.max_abs() / f3.max_abs().max(1.0));
    }
    vec![
        CheckResult {
            name: "d o d and d* o d*",
            worst: dd,
            tol: 1e-13,
        },
        CheckResult {
            name: "codifferential adjointness",
            worst: adj,
            tol: 1e-12,
        },
        CheckResult {
            name: "Laplacian two routes",
            worst: box_routes,
            tol: 1e-12,
        },
        CheckResult {
            name: "Hodge decomposition round trip",
            worst: hodge,
            tol: 1e-10,
        },
        CheckResult {
            name: "Green operator round trip",
            worst: green,
            tol: 1e-11,
        },
    ]
}
