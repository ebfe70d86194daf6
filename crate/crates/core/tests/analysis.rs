use larche_core::analysis::*;
use larche_core::grid_fem::build_mesh;
use larche_core::materials::ModelParams;
use larche_core::schemes::Discretization;
use larche_core::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn mean_zero(disc: &Discretization, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = disc.n_nodes();
    let mut q: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let m = disc.integrate(&q);
    q.iter_mut().for_each(|v| *v -= m);
    q
}

/// Generalized eigenvalue of the 1D Q1 pair (K, M) for the mode cos(k pi x).
fn eig_1d(k: usize, h: f64) -> f64 {
    let c = (k as f64 * PI * h).cos();
    6.0 / (h * h) * (1.0 - c) / (2.0 + c)
}

#[test]
fn dual_norm_of_cosine_matches_continuum() {
    let mesh = build_mesh(65).unwrap();
    let s: Vec<f64> = mesh.coords().iter().map(|p| (PI * p[0]).cos()).collect();
    let v = dual_norm(&s, &mesh, 1.0).unwrap();
    let exact = 1.0 / (PI * 2f64.sqrt());
    assert!(((v - exact) / exact).abs() <= 0.01, "{v} vs {exact}");
}

#[test]
fn dual_norm_scales_with_mobility() {
    let mesh = build_mesh(16).unwrap();
    let s: Vec<f64> = mesh.coords().iter().map(|p| (PI * p[1]).cos()).collect();
    let a = dual_norm(&s, &mesh, 1.0).unwrap();
    let b = dual_norm(&s, &mesh, 4.0).unwrap();
    assert!((a / b - 2.0).abs() < 1e-10);
}

#[test]
fn dual_norm_of_zero_and_nonzero_mean() {
    let disc = Discretization::with_n(8).unwrap();
    let d = DualNorm::new(&disc, 1.0).unwrap();
    assert_eq!(d.norm(&vec![0.0; disc.n_nodes()]).unwrap(), 0.0);
    assert!(matches!(d.norm(&vec![1.0; disc.n_nodes()]), Err(Error::InvalidInput(_))));
    assert!(DualNorm::new(&disc, 0.0).is_err());
}

#[test]
fn dual_norm_two_code_paths_agree() {
    let disc = Discretization::with_n(12).unwrap();
    let d = DualNorm::new(&disc, 1.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..20 {
        let s = mean_zero(&disc, &mut rng);
        let a = d.norm(&s).unwrap();
        let b = d.norm_by_pairing(&s).unwrap();
        assert!((a - b).abs() <= 1e-12 * a.max(1e-300), "{a} {b}");
    }
}

#[test]
fn dual_norm_is_a_norm() {
    let disc = Discretization::with_n(10).unwrap();
    let d = DualNorm::new(&disc, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..50 {
        let s = mean_zero(&disc, &mut rng);
        let t = mean_zero(&disc, &mut rng);
        let sum: Vec<f64> = s.iter().zip(&t).map(|(a, b)| a + b).collect();
        let (ns, nt, nsum) = (d.norm(&s).unwrap(), d.norm(&t).unwrap(), d.norm(&sum).unwrap());
        assert!(nsum <= (ns + nt) * (1.0 + 1e-10));
        let twice: Vec<f64> = s.iter().map(|v| 2.0 * v).collect();
        assert!((d.norm(&twice).unwrap() - 2.0 * ns).abs() <= 1e-12 * ns);
    }
}

#[test]
fn neumann_eigenvalues_match_tensor_product_oracle() {
    for n in [4, 8, 16] {
        let mesh = build_mesh(n).unwrap();
        let h = mesh.h();
        let (l1, lmax) = neumann_eigenvalues(&mesh).unwrap();
        let want_1 = eig_1d(1, h);
        let want_max = 2.0 * eig_1d(n, h);
        assert!((l1 - want_1).abs() <= 1e-8 * want_1, "n={n}: {l1} vs {want_1}");
        assert!((lmax - want_max).abs() <= 1e-8 * want_max, "n={n}: {lmax} vs {want_max}");
        assert!((want_max - 24.0 / (h * h)).abs() < 1e-9 * want_max);
    }
}

#[test]
fn poincare_constant_at_fine_resolution() {
    let c = estimate_constants_at(65, &ModelParams::default()).unwrap();
    assert!((c.c_omega * PI - 1.0).abs() <= 0.01, "C_omega = {}", c.c_omega);
}

#[test]
fn inverse_constant_is_mesh_uniform() {
    let p = ModelParams::default();
    let vals: Vec<f64> = [8, 16, 32].iter().map(|&n| estimate_constants_at(n, &p).unwrap().c_inv).collect();
    let (lo, hi) = vals.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    assert!(hi / lo - 1.0 <= 0.1, "{vals:?}");
    assert!((vals[0] - 24f64.sqrt()).abs() < 1e-6);
}

#[test]
fn estimated_constants_are_consistent() {
    let p = ModelParams::default();
    let c = estimate_constants(&build_mesh(65).unwrap(), &p).unwrap();
    assert_eq!(c.n_eig, 32);
    assert!(c.c_c_min > 0.0 && c.c_c_min <= c.c_c_max);
    assert!(c.l_psi_c >= p.well.lipschitz_stated());
    assert!((c.l_psi_c - 48.0).abs() < 0.1);
}

#[test]
fn poincare_and_inverse_inequalities_hold_on_random_vectors() {
    let n = 12;
    let disc = Discretization::with_n(n).unwrap();
    let p = ModelParams::default();
    let c = estimate_constants_at(n, &p).unwrap();
    let d = DualNorm::new(&disc, p.m).unwrap();
    let h = disc.mesh().h();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let s = mean_zero(&disc, &mut rng);
        let l2 = disc.l2_norm(&s);
        let grad = disc.stiffness().bilinear(&s, &s).sqrt();
        assert!(l2 <= c.c_omega * grad * (1.0 + 1e-8));
        assert!(l2 <= c.c_inv / h * d.norm(&s).unwrap() * (1.0 + 1e-8));
    }
}

fn constants() -> NormConstants {
    estimate_constants_at(16, &ModelParams::default()).unwrap()
}

#[test]
fn rate_bound_vanishes_without_coupling() {
    let c = constants();
    let mut p = ModelParams::default();
    p.law.xi = 0.0;
    let b = rate_bound(&c, &p, 1.0 / 65.0, p.tau);
    assert_eq!(b.beta_ch, 1.0);
    assert_eq!(b.contraction, 0.0);
    p.law.xi = 1e-4;
    assert!(rate_bound(&c, &p, 1.0 / 65.0, p.tau).contraction < 1e-5);
}

#[test]
fn rate_bound_decreases_with_surface_tension() {
    let c = constants();
    let mut p = ModelParams::default();
    // beta grows and the product shrinks; L_ch itself grows with gamma
    let mut last = (f64::NEG_INFINITY, 0.0, f64::INFINITY);
    for g in [0.1, 1.0, 5.0, 10.0, 50.0, 100.0, 1000.0] {
        p.gamma = g;
        let b = rate_bound(&c, &p, 1.0 / 65.0, p.tau);
        assert!((0.0..=1.0).contains(&b.beta_ch) && b.l_ch >= 1.0 && (0.0..=1.0).contains(&b.contraction));
        assert!(b.beta_ch >= last.0 && b.l_ch >= last.1 && b.contraction <= last.2, "gamma={g}: {b:?}");
        last = (b.beta_ch, b.l_ch, b.contraction);
    }
}

#[test]
fn rate_bound_forms_differ_only_in_stiffness() {
    let c = constants();
    let p = ModelParams::default();
    let h = 1.0 / 65.0;
    let a = rate_bound_with(&c, &p, h, p.tau, BoundForm::Homogeneous);
    let b = rate_bound_with(&c, &p, h, p.tau, BoundForm::Extremes { identity_contraction: 2.0 });
    assert!(a.contraction > 0.0 && a.contraction < 1.0);
    assert!(b.contraction > 0.0 && b.contraction < 1.0);
    // a stiffer elastic part couples more strongly
    assert!(b.beta_ch <= a.beta_ch || b.contraction >= a.contraction);
}

#[test]
fn observed_rate_examples() {
    let geo: Vec<f64> = (0..8).map(|i| 1.0 + 0.5f64.powi(i)).collect();
    assert!((observed_rate(&geo, 1.0).unwrap() - 0.5).abs() < 1e-12);
    assert_eq!(observed_rate(&[2.0, 1.0], 1.0).unwrap(), 0.0);
    assert!(matches!(observed_rate(&[2.0, 1.5, 1.8, 1.0], 1.0), Err(Error::NonMonotoneGaps { index: 2 })));
    let r = gap_ratios(&geo, 1.0);
    assert!(r.iter().all(|x| (x - 0.5).abs() < 1e-12));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn observed_rate_recovers_geometric_ratios(rho in 0.05f64..0.95, k in 3usize..12, base in -10.0f64..10.0) {
        let pots: Vec<f64> = (0..k).map(|i| base + rho.powi(i as i32)).collect();
        let r = observed_rate(&pots, base).unwrap();
        prop_assert!((r - rho).abs() < 1e-6);
    }

    #[test]
    fn rate_bound_is_in_unit_interval(g in 0.1f64..200.0, xi in 0.0f64..3.0, tau in 1e-7f64..1e-2) {
        let c = NormConstants { c_omega: 1.0 / PI, c_inv: 24f64.sqrt(), c_c_min: 0.9, c_c_max: 200.0, l_psi_c: 48.0, lambda_1: PI * PI, lambda_max: 24.0 * 65.0 * 65.0, n_eig: 65 };
        let mut p = ModelParams::default();
        p.gamma = g;
        p.law.xi = xi;
        let b = rate_bound(&c, &p, 1.0 / 65.0, tau);
        prop_assert!((0.0..=1.0).contains(&b.contraction));
        prop_assert!((0.0..=1.0).contains(&b.beta_ch));
        prop_assert!(b.l_ch >= 1.0);
    }
}
