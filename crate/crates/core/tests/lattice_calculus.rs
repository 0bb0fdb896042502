//! Spectral calculus against independent oracles: rustfft, analytic
//! derivatives, adjointness and Hodge-decomposition identities.

#![allow(clippy::needless_range_loop)]
#![allow(clippy::manual_is_multiple_of)]

use iia_core::forms6::{AltTensor, Metric6};
use iia_core::lattice::calculus::*;
use iia_core::lattice::geometry::{christoffel, nijenhuis};
use iia_core::lattice::{fft, AcField, FormField, Grid, MetricField};

const TAU: f64 = 2.0 * std::f64::consts::PI;

fn grid_small() -> Grid {
    Grid::anisotropic([8, 4, 4, 4, 4, 4], TAU).unwrap()
}

#[test]
fn forward_matches_rustfft() {
    let dims = [8usize, 4, 1, 2, 4, 4];
    let grid = Grid::anisotropic(dims, TAU).unwrap();
    let f = random_band_limited(grid, 1, 2, 3);
    let spec = f.spectral();
    // oracle: rustfft axis-by-axis on a scalar component
    let npts = grid.npts();
    let nc = f.ncomp();
    let mut oracle: Vec<rustfft::num_complex::Complex<f64>> = (0..npts)
        .map(|pt| rustfft::num_complex::Complex::new(f.data()[pt * nc], 0.0))
        .collect();
    let mut planner = rustfft::FftPlanner::new();
    // transform axis by axis with explicit gather/scatter
    let strides = grid.strides();
    for axis in 0..6 {
        let n = dims[axis];
        if n == 1 {
            continue;
        }
        let fft_n = planner.plan_fft_forward(n);
        let mut line = vec![rustfft::num_complex::Complex::new(0.0, 0.0); n];
        for base in 0..npts {
            // process each line exactly once: base must have zero index on axis
            if (base / strides[axis]) % n != 0 {
                continue;
            }
            for i in 0..n {
                line[i] = oracle[base + i * strides[axis]];
            }
            fft_n.process(&mut line);
            for i in 0..n {
                oracle[base + i * strides[axis]] = line[i];
            }
        }
    }
    // compare: our slots are bit-reversed per axis; rustfft's are natural
    let modes: Vec<Vec<i64>> = (0..6).map(|a| fft::axis_modes(dims[a])).collect();
    let mode_strides = {
        let mut s = [1usize; 6];
        for a in (0..5).rev() {
            s[a] = s[a + 1] * dims[a + 1];
        }
        s
    };
    for slot in 0..npts {
        let mut rem = slot;
        let mut nat = 0usize;
        for a in 0..6 {
            let s = rem / mode_strides[a];
            rem %= mode_strides[a];
            let k = modes[a][s];
            let knat = if k < 0 { (k + dims[a] as i64) as usize } else { k as usize };
            nat += knat * strides[a];
        }
        let got = spec.data[slot * nc];
        let want = oracle[nat];
        assert!(
            (got.re - want.re).abs() < 1e-9 && (got.im - want.im).abs() < 1e-9,
            "slot {slot}: got ({}, {}), want ({}, {})",
            got.re,
            got.im,
            want.re,
            want.im
        );
    }
}

#[test]
fn derivative_analytic_and_dd_zero() {
    let grid = grid_small();
    // d(sin(x1) e^2) = cos(x1) e^12
    let f = FormField::from_fn(grid, 1, |x| {
        let mut v = AltTensor::zero(1);
        v.components_mut()[1] = x[0].sin();
        v
    });
    let df = exterior_derivative(&f);
    let want = FormField::from_fn(grid, 2, |x| {
        let mut v = AltTensor::zero(2);
        v.components_mut()[0] = x[0].cos();
        v
    });
    let mut diff = df.clone();
    diff.axpy(-1.0, &want);
    assert!(diff.max_abs() < 1e-12, "analytic d failed: {}", diff.max_abs());

    // constant fields are closed
    let c = FormField::constant(grid, &iia_core::forms6::omega_standard());
    assert!(exterior_derivative(&c).max_abs() < 1e-14);

    // d о d = 0 on random band-limited fields
    for seed in 0..3 {
        let f = random_band_limited(grid, 2, 2, seed);
        let ddf = exterior_derivative(&exterior_derivative(&f));
        assert!(ddf.max_abs() < 1e-13 * f.max_abs().max(1.0));
    }
    // d* о d* = 0
    let f = random_band_limited(grid, 3, 2, 9);
    let dsds = codifferential(&codifferential(&f));
    assert!(dsds.max_abs() < 1e-13 * f.max_abs().max(1.0));
}

#[test]
fn codifferential_is_adjoint_and_analytic() {
    let grid = grid_small();
    // d*(dh) = box h for h = sin(x1): equals sin(x1) at unit wavenumber
    let h = FormField::from_fn(grid, 0, |x| AltTensor::scalar(x[0].sin()));
    let lap = codifferential(&exterior_derivative(&h));
    let mut diff = lap.clone();
    diff.axpy(-1.0, &h);
    assert!(diff.max_abs() < 1e-12);

    // <df, g> = <f, d* g>
    for seed in 0..4 {
        let f = random_band_limited(grid, 2, 2, 100 + seed);
        let g = random_band_limited(grid, 3, 2, 200 + seed);
        let a = l2_inner(&exterior_derivative(&f), &g);
        let b = l2_inner(&f, &codifferential(&g));
        assert!(
            (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0),
            "adjointness: {a} vs {b}"
        );
    }
}

#[test]
fn laplacian_two_routes_and_positivity() {
    let grid = grid_small();
    let f = random_band_limited(grid, 2, 2, 17);
    let box1 = hodge_laplacian(&f);
    let mut box2 = codifferential(&exterior_derivative(&f));
    box2.axpy(1.0, &exterior_derivative(&codifferential(&f)));
    let mut diff = box1.clone();
    diff.axpy(-1.0, &box2);
    assert!(diff.max_abs() < 1e-12 * f.max_abs().max(1.0));

    // <box f, f> >= 0 with equality iff harmonic
    let e = l2_inner(&box1, &f);
    assert!(e >= -1e-11);
    let c = FormField::constant(grid, &iia_core::forms6::omega_standard());
    assert!(l2_inner(&hodge_laplacian(&c), &c).abs() < 1e-11);

    // analytic: sin(x1) e^{13} has eigenvalue 1
    let f = FormField::from_fn(grid, 2, |x| {
        let mut v = AltTensor::zero(2);
        v.set_component(&[0, 2], x[0].sin());
        v
    });
    let lf = hodge_laplacian(&f);
    let mut diff = lf.clone();
    diff.axpy(-1.0, &f);
    assert!(diff.max_abs() < 1e-12);
}

#[test]
fn harmonic_projection_green_neumann() {
    let grid = grid_small();
    let constant = FormField::constant(grid, &iia_core::forms6::phi_standard(1.0));
    let (h, rem) = harmonic_projection(&constant);
    assert!((h.constants - iia_core::forms6::phi_standard(1.0)).max_abs() < 1e-14);
    assert!(rem.max_abs() < 1e-14);

    let sine = FormField::from_fn(grid, 2, |x| {
        let mut v = AltTensor::zero(2);
        v.components_mut()[0] = x[0].sin();
        v
    });
    let (h, rem) = harmonic_projection(&sine);
    assert!(h.max_abs() < 1e-14);
    let mut diff = rem.clone();
    diff.axpy(-1.0, &sine);
    assert!(diff.max_abs() < 1e-13);

    // idempotence on a random field
    let f = random_band_limited(grid, 3, 2, 4);
    let (h1, r1) = harmonic_projection(&f);
    let (h2, r2) = harmonic_projection(&r1);
    assert!(h2.max_abs() < 1e-13 * (1.0 + h1.max_abs()));
    let mut diff = r2.clone();
    diff.axpy(-1.0, &r1);
    assert!(diff.max_abs() < 1e-13);

    // green: box(green f) = f - Hf
    let gf = green_inverse(&f);
    let mut resid = hodge_laplacian(&gf);
    resid.axpy(-1.0, &r1);
    assert!(resid.max_abs() < 1e-11 * f.max_abs().max(1.0));
    // eigenvalue-1 mode is fixed by green
    let gs = green_inverse(&sine);
    let mut diff = gs.clone();
    diff.axpy(-1.0, &sine);
    assert!(diff.max_abs() < 1e-12);
    // constants are projected away
    assert!(green_inverse(&constant).max_abs() < 1e-13);

    // neumann: d(neumann(df)) = df for exact input
    let pot = random_band_limited(grid, 1, 2, 21);
    let ex = exterior_derivative(&pot);
    let gamma = neumann_operator(&ex).unwrap();
    let mut resid = exterior_derivative(&gamma);
    resid.axpy(-1.0, &ex);
    assert!(resid.max_abs() < 1e-11 * ex.max_abs().max(1.0));
    // zero input
    assert!(neumann_operator(&FormField::zeros(grid, 2)).unwrap().max_abs() < 1e-15);
    // harmonic part rejected
    assert!(neumann_operator(&constant).is_err());
}

#[test]
fn hodge_decomposition_of_closed_fields() {
    let grid = grid_small();
    for seed in 0..3 {
        let pot = random_band_limited(grid, 2, 2, 300 + seed);
        let mut f = exterior_derivative(&pot);
        let h = iia_core::forms6::phi_standard(0.7);
        f.axpy(1.0, &FormField::constant(grid, &h));
        // f closed: f = Hf + d gamma
        let (hf, rem) = harmonic_projection(&f);
        let gamma = neumann_operator(&rem).unwrap();
        let mut recon = exterior_derivative(&gamma);
        recon.axpy(1.0, &hf.as_field(grid));
        recon.axpy(-1.0, &f);
        assert!(recon.max_abs() < 1e-10 * f.max_abs().max(1.0));
    }
}

#[test]
fn sobolev_norm_properties() {
    let grid = grid_small();
    // constant field: norm = c * vol^{1/2} for every s
    let c = 0.37;
    let f = FormField::from_fn(grid, 0, move |_| AltTensor::scalar(c));
    for s in [0usize, 1, 4, 10] {
        let n = sobolev_norm(&f, s);
        assert!((n - c * grid.volume().sqrt()).abs() < 1e-10);
    }
    // sin(x1) e^1: s = 1 over s = 0 ratio is sqrt(2)
    let f = FormField::from_fn(grid, 1, |x| {
        let mut v = AltTensor::zero(1);
        v.components_mut()[0] = x[0].sin();
        v
    });
    let r = sobolev_norm(&f, 1) / sobolev_norm(&f, 0);
    assert!((r - 2f64.sqrt()).abs() < 1e-12);
    // monotone in s and a norm (homogeneity + triangle)
    let a = random_band_limited(grid, 2, 2, 5);
    let b = random_band_limited(grid, 2, 2, 6);
    let mut sum = a.clone();
    sum.axpy(1.0, &b);
    for s in 0..=10usize {
        let na = sobolev_norm(&a, s);
        let nb = sobolev_norm(&b, s);
        let ns = sobolev_norm(&sum, s);
        assert!(ns <= na + nb + 1e-12 * (na + nb));
        if s > 0 {
            assert!(na >= sobolev_norm(&a, s - 1) - 1e-12);
        }
        let mut scaled = a.clone();
        scaled.scale(-2.5);
        assert!((sobolev_norm(&scaled, s) - 2.5 * na).abs() < 1e-10 * na.max(1.0));
    }
}

#[test]
fn smallest_positive_laplacian_eigenvalue_is_one() {
    let grid = grid_small();
    assert!((grid.lambda_min() - 1.0).abs() < 1e-15);
    let g16 = Grid::anisotropic([16, 4, 4, 4, 4, 4], TAU).unwrap();
    assert!((g16.lambda_min() - 1.0).abs() < 1e-15);
}

#[test]
fn aliasing_warning_threshold() {
    let grid = grid_small();
    // low-mode field: negligible top-third energy
    let f = random_band_limited(grid, 1, 1, 8);
    assert!(aliasing_fraction(&f) < 1e-12);
    // a mode beyond 2n/3 of axis 0 (k = 3 of 8 -> |k| > 8/3)
    let f = FormField::from_fn(grid, 1, |x| {
        let mut v = AltTensor::zero(1);
        v.components_mut()[0] = (3.0 * x[0]).sin();
        v
    });
    assert!(aliasing_fraction(&f) > 0.9);
}

#[test]
fn christoffel_conformal_oracle() {
    let grid = grid_small();
    let eps = 1e-2;
    // g = exp(2u) id with u = eps sin(x1)
    let mut g = MetricField::zeros(grid);
    for pt in 0..grid.npts() {
        let x = grid.coords(pt);
        let e2u = (2.0 * eps * x[0].sin()).exp();
        for i in 0..6 {
            g.data[pt * 21 + iia_core::lattice::sym_idx(i, i)] = e2u;
        }
    }
    let gamma = christoffel(&g).unwrap();
    // oracle: Gamma^k_pq = u_p d^k_q + u_q d^k_p - u^k d_pq, u_1 = eps cos(x1)
    let mut worst = 0.0f64;
    for pt in 0..grid.npts() {
        let x = grid.coords(pt);
        let u1 = eps * x[0].cos();
        for k in 0..6 {
            for p in 0..6 {
                for q in p..6 {
                    let mut want = 0.0;
                    if p == 0 && k == q {
                        want += u1;
                    }
                    if q == 0 && k == p {
                        want += u1;
                    }
                    if k == 0 && p == q {
                        want -= u1;
                    }
                    worst = worst.max((gamma.at(pt, k, p, q) - want).abs());
                }
            }
        }
    }
    // spectral accuracy limited by the sampled exp(2 eps sin) tail
    assert!(worst < 1e-8, "conformal christoffel error {worst}");
    // symmetry is structural: storage is symmetric in (p, q)
    let c = MetricField::constant(grid, &Metric6::identity());
    assert!(christoffel(&c).unwrap().max_abs() < 1e-14);
}

#[test]
fn nijenhuis_cases() {
    let grid = grid_small();
    let jstd = iia_core::forms6::almost_complex(&iia_core::forms6::phi_standard(1.0)).unwrap();
    // constant J: zero
    let mut j = AcField::zeros(grid);
    for pt in 0..grid.npts() {
        j.set(pt, &jstd.matrix);
    }
    assert!(nijenhuis(&j).max_abs() < 1e-12);

    // pullback of the constant J by a resolved diffeomorphism stays
    // integrable: J(x) = A^{-1} J A with A = I + Du, u = eps sin(x1) e2
    let eps = 1e-2;
    let mut jp = AcField::zeros(grid);
    for pt in 0..grid.npts() {
        let x = grid.coords(pt);
        let mut a = iia_core::forms6::mat6::IDENTITY;
        a[1][0] += eps * x[0].cos(); // d u^2 / d x^1
        let ainv = iia_core::forms6::mat6::invert(&a).unwrap();
        let m = iia_core::forms6::mat6::matmul(&ainv, &iia_core::forms6::mat6::matmul(&jstd.matrix, &a));
        jp.set(pt, &m);
    }
    let n = nijenhuis(&jp);
    assert!(n.max_abs() < 1e-8, "integrable pullback: {}", n.max_abs());

    // a non-integrable deformation keeps J^2 = -I but has N = O(eps) > 0
    let mut jn = AcField::zeros(grid);
    for pt in 0..grid.npts() {
        let x = grid.coords(pt);
        // rotate the (e1, e3) planes by a position-dependent angle: conjugate
        // J by a rotation field (a genuine non-holomorphic deformation)
        let t = eps * x[0].sin();
        let mut r = iia_core::forms6::mat6::IDENTITY;
        r[0][0] = t.cos();
        r[0][2] = -t.sin();
        r[2][0] = t.sin();
        r[2][2] = t.cos();
        let rinv = iia_core::forms6::mat6::invert(&r).unwrap();
        let m = iia_core::forms6::mat6::matmul(&rinv, &iia_core::forms6::mat6::matmul(&jstd.matrix, &r));
        jn.set(pt, &m);
    }
    // J^2 = -I is preserved by conjugation
    for pt in [0usize, 17, grid.npts() - 1] {
        let m = jn.at(pt);
        let mm = iia_core::forms6::mat6::matmul(&m, &m);
        for i in 0..6 {
            for c in 0..6 {
                let want = if i == c { -1.0 } else { 0.0 };
                assert!((mm[i][c] - want).abs() < 1e-12);
            }
        }
    }
    let n = nijenhuis(&jn);
    assert!(n.max_abs() > 1e-4 * eps, "deformation should not be integrable");
    assert!(n.max_abs() < 50.0 * eps, "N should be O(eps): {}", n.max_abs());
}

#[test]
fn upsample_reproduces_band_limited_fields() {
    let grid = Grid::anisotropic([8, 4, 1, 1, 1, 1], TAU).unwrap();
    let f = FormField::from_fn(grid, 1, |x| {
        let mut v = AltTensor::zero(1);
        v.components_mut()[0] = (2.0 * x[0]).sin() + 0.3 * x[1].cos();
        v
    });
    let up = upsample(&f, [2, 2, 1, 1, 1, 1]).unwrap();
    let gup = up.grid();
    for pt in 0..gup.npts() {
        let x = gup.coords(pt);
        let want = (2.0 * x[0]).sin() + 0.3 * x[1].cos();
        assert!((up.data()[pt * 6] - want).abs() < 1e-11);
    }
}

#[test]
fn spectral_cache_round_trips() {
    let grid = grid_small();
    let f = random_band_limited(grid, 2, 2, 33);
    let spec = f.spectral();
    let back = (*spec).clone().into_real();
    let mut diff = back;
    diff.axpy(-1.0, &f);
    assert!(diff.max_abs() < 1e-12 * f.max_abs().max(1.0));
}
