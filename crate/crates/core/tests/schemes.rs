use larche_core::analysis::DualNorm;
use larche_core::grid_fem::{q1_shape, q1_shape_grad, QuadratureRule};
use larche_core::materials::*;
use larche_core::schemes::*;
use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn random_state(disc: &Discretization, rng: &mut ChaCha8Rng, phi_range: f64) -> State {
    let n = disc.n_nodes();
    let mut s = State::zeros(n);
    for i in 0..n {
        s.phi[i] = rng.random_range(-phi_range..phi_range);
        s.mu[i] = rng.random_range(-50.0..50.0);
    }
    for i in 0..2 * n {
        s.u[i] = rng.random_range(-0.05..0.05);
    }
    for d in disc.u_constraints() {
        s.u[d] = 0.0;
    }
    s
}

fn context(kind: SchemeKind, params: ModelParams, prev: State) -> SchemeContext {
    SchemeContext::new(kind, params, prev).unwrap()
}

fn params_for(kind: SchemeKind) -> ModelParams {
    let mut p = ModelParams::default();
    if kind == SchemeKind::Homogeneous {
        p.law.heterogeneous = false;
    }
    p
}

const KINDS: [SchemeKind; 3] = [SchemeKind::Implicit, SchemeKind::SemiImplicit, SchemeKind::Homogeneous];

fn axpy(x: &State, d: &[f64], eps: f64) -> State {
    let n = x.n_nodes();
    let mut v = x.to_vector();
    for (a, b) in v.iter_mut().zip(d) {
        *a += eps * b;
    }
    State::from_vector(&v, n).unwrap()
}

#[test]
fn jacobian_matches_finite_differences() {
    let disc = Discretization::with_n(4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for kind in KINDS {
        let params = params_for(kind);
        for trial in 0..10 {
            let prev = random_state(&disc, &mut rng, 0.95);
            let x = random_state(&disc, &mut rng, 0.95);
            let ctx = context(kind, params, prev);
            let dir: Vec<f64> = (0..4 * disc.n_nodes()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let jd = jacobian(&disc, &x, &ctx).unwrap().matvec(&dir);
            let r0 = residual(&disc, &x, &ctx).unwrap();
            let scale = norm(&jd);
            let mut best = f64::INFINITY;
            let mut forward = Vec::new();
            for k in 3..=7 {
                let eps = 10f64.powi(-k);
                let rp = residual(&disc, &axpy(&x, &dir, eps), &ctx).unwrap();
                let rm = residual(&disc, &axpy(&x, &dir, -eps), &ctx).unwrap();
                let central: Vec<f64> = rp.iter().zip(&rm).zip(&jd).map(|((a, b), j)| (a - b) / (2.0 * eps) - j).collect();
                best = best.min(norm(&central) / scale);
                let fwd: Vec<f64> = rp.iter().zip(&r0).zip(&jd).map(|((a, b), j)| (a - b) / eps - j).collect();
                forward.push(norm(&fwd) / scale);
            }
            assert!(best <= 1e-5, "{kind:?} trial {trial}: best relative error {best:e}");
            let order = (forward[0] / forward[1]).log10();
            assert!(order >= 0.9, "{kind:?} trial {trial}: forward difference order {order} ({forward:?})");
        }
    }
}

#[test]
fn jacobian_outside_the_interpolation_range() {
    let disc = Discretization::with_n(3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let params = ModelParams::default();
    let mut prev = random_state(&disc, &mut rng, 1.0);
    prev.phi.iter_mut().for_each(|v| *v += 2.6);
    let mut x = random_state(&disc, &mut rng, 0.2);
    x.phi.iter_mut().for_each(|v| *v += 2.5);
    for kind in [SchemeKind::Implicit, SchemeKind::SemiImplicit] {
        let ctx = context(kind, params, prev.clone());
        let dir: Vec<f64> = (0..4 * disc.n_nodes()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let jd = jacobian(&disc, &x, &ctx).unwrap().matvec(&dir);
        let eps = 1e-6;
        let rp = residual(&disc, &axpy(&x, &dir, eps), &ctx).unwrap();
        let rm = residual(&disc, &axpy(&x, &dir, -eps), &ctx).unwrap();
        let err: Vec<f64> = rp.iter().zip(&rm).zip(&jd).map(|((a, b), j)| (a - b) / (2.0 * eps) - j).collect();
        assert!(norm(&err) / norm(&jd) < 1e-6, "{kind:?}");
    }
}

#[test]
fn symmetric_form_is_symmetric_and_maps_back() {
    let disc = Discretization::with_n(3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = disc.n_nodes();
    for kind in KINDS {
        let params = params_for(kind);
        let ctx = context(kind, params, random_state(&disc, &mut rng, 0.9));
        let x = random_state(&disc, &mut rng, 0.9);
        let s = symmetric_jacobian(&disc, &x, &ctx).unwrap();
        assert!(s.is_symmetric(1e-12), "{kind:?}");
        let j = unsymmetrize_rows(&s, n, params.tau);
        let r = residual(&disc, &x, &ctx).unwrap();
        let rs = symmetrize_residual(&r, n, params.tau);
        for i in 0..n {
            assert_eq!(rs[i], -r[n + i]);
            assert!((rs[n + i] + params.tau * r[i]).abs() <= 1e-15 * r[i].abs().max(1.0));
        }
        assert_eq!(j.nrows(), 4 * n);
    }
}

#[test]
fn displacement_coupling_blocks_are_negative_transposes() {
    let disc = Discretization::with_n(4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let n = disc.n_nodes();
    for kind in KINDS {
        let ctx = context(kind, params_for(kind), random_state(&disc, &mut rng, 0.9));
        let x = random_state(&disc, &mut rng, 0.9);
        let j = jacobian(&disc, &x, &ctx).unwrap();
        let fixed: Vec<bool> = (0..2 * n).map(|d| disc.u_constraints().contains(&d)).collect();
        for d in 0..2 * n {
            if fixed[d] {
                continue;
            }
            for k in 0..n {
                let b_u_phi = j.get(2 * n + d, k);
                let b_mu_u = j.get(n + k, 2 * n + d);
                assert!((b_u_phi + b_mu_u).abs() <= 1e-10 * (1.0 + b_u_phi.abs()), "{kind:?} d={d} k={k}");
            }
        }
    }
}

#[test]
fn semi_implicit_displacement_phase_block_is_state_independent() {
    let disc = Discretization::with_n(3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let n = disc.n_nodes();
    let ctx = context(SchemeKind::SemiImplicit, ModelParams::default(), random_state(&disc, &mut rng, 0.9));
    let j1 = jacobian(&disc, &random_state(&disc, &mut rng, 0.9), &ctx).unwrap();
    let j2 = jacobian(&disc, &random_state(&disc, &mut rng, 0.9), &ctx).unwrap();
    for r in 2 * n..4 * n {
        for c in 0..n {
            assert_eq!(j1.get(r, c), j2.get(r, c));
        }
        for c in 2 * n..4 * n {
            assert_eq!(j1.get(r, c), j2.get(r, c));
        }
    }
}

#[test]
fn schemes_coincide_for_a_phase_independent_stiffness() {
    let disc = Discretization::with_n(4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut p = ModelParams::default();
    p.law.heterogeneous = false;
    let prev = random_state(&disc, &mut rng, 1.2);
    let x = random_state(&disc, &mut rng, 1.2);
    let rh = residual(&disc, &x, &context(SchemeKind::Homogeneous, p, prev.clone())).unwrap();
    for kind in [SchemeKind::Implicit, SchemeKind::SemiImplicit] {
        let r = residual(&disc, &x, &context(kind, p, prev.clone())).unwrap();
        let diff: Vec<f64> = r.iter().zip(&rh).map(|(a, b)| a - b).collect();
        assert!(norm(&diff) <= 1e-12 * norm(&rh), "{kind:?}");
    }
}

#[test]
fn homogeneous_scheme_rejects_heterogeneous_law() {
    let disc = Discretization::with_n(2).unwrap();
    assert!(SchemeContext::new(SchemeKind::Homogeneous, ModelParams::default(), State::zeros(disc.n_nodes())).is_err());
}

#[test]
fn constant_state_has_matching_constant_potential() {
    let disc = Discretization::with_n(5).unwrap();
    let n = disc.n_nodes();
    let mut p = ModelParams::default();
    p.law.heterogeneous = false;
    let c: f64 = 0.3;
    let xi = p.law.xi;
    // I : C(-xi c I) = -240 xi c for the phi = -1 stiffness
    let mu_c = p.gamma / p.ell * (4.0 * c.powi(3) - 4.0 * c) + xi * xi * c * 240.0;
    let prev = State::from_phi(vec![c; n]);
    let mut x = prev.clone();
    x.mu = vec![mu_c; n];
    let r = residual(&disc, &x, &context(SchemeKind::Homogeneous, p, prev)).unwrap();
    let scale = mu_c.abs() / n as f64;
    assert!(r[..n].iter().all(|v| v.abs() < 1e-12));
    assert!(r[n..2 * n].iter().all(|v| v.abs() < 1e-10 * scale), "{:?}", &r[n..n + 3]);
    // constant stress is divergence free: interior displacement rows vanish
    let fixed = disc.u_constraints();
    for d in 0..2 * n {
        if !fixed.contains(&d) {
            assert!(r[2 * n + d].abs() < 1e-10);
        }
    }
}

#[test]
fn zero_state_has_zero_phase_and_potential_residual() {
    let disc = Discretization::with_n(3).unwrap();
    let n = disc.n_nodes();
    let ctx = context(SchemeKind::Implicit, ModelParams::default(), State::zeros(n));
    let r = residual(&disc, &State::zeros(n), &ctx).unwrap();
    assert!(r[..2 * n].iter().all(|v| *v == 0.0));
}

#[test]
fn nonfinite_states_are_reported() {
    let disc = Discretization::with_n(2).unwrap();
    let n = disc.n_nodes();
    let ctx = context(SchemeKind::SemiImplicit, ModelParams::default(), State::zeros(n));
    let mut x = State::zeros(n);
    x.phi[3] = f64::NAN;
    assert!(residual(&disc, &x, &ctx).is_err());
    let short = State::zeros(n - 1);
    assert!(residual(&disc, &short, &ctx).is_err());
}

#[test]
fn free_energy_of_pure_phases() {
    let disc = Discretization::with_n(4).unwrap();
    let n = disc.n_nodes();
    let p = ModelParams::default();
    let e = free_energy(&disc, &State::from_phi(vec![1.0; n]), &p).unwrap();
    assert!(e.chemical.abs() < 1e-14 && e.gradient.abs() < 1e-14);
    assert!((e.elastic - 1.1).abs() < 1e-12);
    let e0 = free_energy(&disc, &State::zeros(n), &p).unwrap();
    assert!((e0.chemical - p.gamma / p.ell).abs() < 1e-10);
    assert_eq!(e0.elastic, 0.0);
    assert!((e0.total - (e0.chemical + e0.gradient + e0.elastic)).abs() <= 1e-12 * e0.total);
}

fn midsplit(disc: &Discretization, ell: f64) -> Vec<f64> {
    disc.mesh().coords().iter().map(|p| ((0.5 - p[1]) / (2f64.sqrt() * ell)).tanh()).collect()
}

#[test]
fn free_energy_matches_independent_quadrature() {
    let disc = Discretization::with_n(16).unwrap();
    let p = ModelParams::default();
    let phi = midsplit(&disc, p.ell);
    let mesh = disc.mesh();
    let rule = QuadratureRule::gauss(4).unwrap();
    let h = mesh.h();
    let i = voigt_identity();
    let mut oracle = 0.0;
    for e in 0..mesh.n_elements() {
        let nodes = mesh.element(e);
        for (x, w) in rule.points().iter().zip(rule.weights()) {
            let nv = q1_shape(*x);
            let g = q1_shape_grad(*x);
            let v: f64 = (0..4).map(|a| nv[a] * phi[nodes[a]]).sum();
            let gx: f64 = (0..4).map(|a| g[a][0] * phi[nodes[a]]).sum::<f64>() / h;
            let gy: f64 = (0..4).map(|a| g[a][1] * phi[nodes[a]]).sum::<f64>() / h;
            let psi = (1.0 - v * v).powi(2);
            let strain = -i * (p.law.xi * v);
            let el = 0.5 * strain.dot(&(p.law.tensor(v) * strain));
            oracle += w * h * h * (p.gamma / p.ell * psi + 0.5 * p.gamma * p.ell * (gx * gx + gy * gy) + el);
        }
    }
    let e = free_energy_with_rule(&disc, &State::from_phi(phi.clone()), &p, &rule).unwrap();
    assert!((e.total - oracle).abs() <= 1e-8 * oracle, "{} vs {oracle}", e.total);
    // the working 2 x 2 rule stays close on a resolved profile
    let coarse = free_energy(&disc, &State::from_phi(phi), &p).unwrap();
    assert!((coarse.total - oracle).abs() < 0.05 * oracle);
}

fn coupling_oracle(disc: &Discretization, phi: &[f64], u: &[f64], law: &ElasticLaw) -> Vec<f64> {
    let mesh = disc.mesh();
    let n = disc.n_nodes();
    let h = mesh.h();
    let rule = QuadratureRule::gauss(2).unwrap();
    let id = voigt_identity();
    let mut b = vec![0.0; n];
    for e in 0..mesh.n_elements() {
        let nodes = mesh.element(e);
        for (x, w) in rule.points().iter().zip(rule.weights()) {
            let nv = q1_shape(*x);
            let g = q1_shape_grad(*x);
            let v: f64 = (0..4).map(|a| nv[a] * phi[nodes[a]]).sum();
            let d = |f: usize, c: usize| (0..4).map(|a| g[a][c] * u[f * n + nodes[a]]).sum::<f64>() / h;
            let eps = Vector3::new(d(0, 0), d(1, 1), d(0, 1) + d(1, 0));
            let el = eps - id * (law.xi * v);
            let val = 0.5 * el.dot(&(law.tensor_prime(v) * el)) - law.xi * id.dot(&(law.tensor(v) * el));
            for a in 0..4 {
                b[nodes[a]] += w * h * h * val * nv[a];
            }
        }
    }
    b
}

#[test]
fn coupling_term_is_consistent_with_the_elastic_derivative() {
    let disc = Discretization::with_n(5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let p = ModelParams::default();
    let prev = random_state(&disc, &mut rng, 1.1);
    let ctx = context(SchemeKind::SemiImplicit, p, prev.clone());
    let got = semi_implicit_coupling_term(&disc, &prev, &ctx).unwrap();
    let want = coupling_oracle(&disc, &prev.phi, &prev.u, &p.law);
    for (a, b) in got.iter().zip(&want) {
        assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
    }
}

#[test]
fn coupling_term_explicit_part_vanishes_in_pure_phase() {
    let disc = Discretization::with_n(3).unwrap();
    let n = disc.n_nodes();
    let p = ModelParams::default();
    let prev = State::from_phi(vec![1.0; n]);
    let ctx = context(SchemeKind::SemiImplicit, p, prev);
    // at phi = 1, u = 0 only the implicit part -xi I : C(1) (-xi I) = 2.2 remains
    let x = State::from_phi(vec![1.0; n]);
    let b = semi_implicit_coupling_term(&disc, &x, &ctx).unwrap();
    let total: f64 = b.iter().sum();
    assert!((total - 2.2).abs() < 1e-12);
}

#[test]
fn coupling_term_for_homogeneous_law_is_the_implicit_part() {
    let disc = Discretization::with_n(4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut p = ModelParams::default();
    p.law.heterogeneous = false;
    let prev = random_state(&disc, &mut rng, 1.0);
    let x = random_state(&disc, &mut rng, 1.0);
    let ctx = context(SchemeKind::SemiImplicit, p, prev);
    let got = semi_implicit_coupling_term(&disc, &x, &ctx).unwrap();
    let want = coupling_oracle(&disc, &x.phi, &x.u, &p.law);
    for (a, b) in got.iter().zip(&want) {
        assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
    }
}

#[test]
fn step_potential_at_previous_state() {
    let disc = Discretization::with_n(6).unwrap();
    let n = disc.n_nodes();
    let mut p = ModelParams::default();
    p.law.heterogeneous = false;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let prev = random_state(&disc, &mut rng, 0.9);
    let ctx = context(SchemeKind::Homogeneous, p, prev.clone());
    let dual = DualNorm::new(&disc, p.m).unwrap();
    let f = step_potential(&disc, &prev, &ctx, &dual).unwrap();
    // dual term vanishes; psi_c(s) - psi_e'(s) s = psi(s) - psi_e(s) with psi_e = 2 s^2
    let e = free_energy(&disc, &prev, &p).unwrap();
    let want = e.total - 2.0 * p.gamma / p.ell * disc.mass().bilinear(&prev.phi, &prev.phi);
    assert!((f - want).abs() <= 1e-10 * want.abs().max(1.0), "{f} vs {want}");
    let implicit = context(SchemeKind::Implicit, ModelParams::default(), State::zeros(n));
    assert!(step_potential(&disc, &prev, &implicit, &dual).is_err());
}

fn mean_zero(disc: &Discretization, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = disc.n_nodes();
    let mut q: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let m = disc.integrate(&q);
    q.iter_mut().for_each(|v| *v -= m);
    q
}

#[test]
fn step_potential_gradient_matches_residuals() {
    let disc = Discretization::with_n(6).unwrap();
    let n = disc.n_nodes();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for kind in [SchemeKind::SemiImplicit, SchemeKind::Homogeneous] {
        let p = params_for(kind);
        let prev = random_state(&disc, &mut rng, 0.9);
        let ctx = context(kind, p, prev.clone());
        let dual = DualNorm::new(&disc, p.m).unwrap();
        let mut x = random_state(&disc, &mut rng, 0.1);
        let dphi = mean_zero(&disc, &mut rng);
        for i in 0..n {
            x.phi[i] = prev.phi[i] + 0.05 * dphi[i];
        }
        // choose mu so that the phase equation holds exactly
        let d: Vec<f64> = (0..n).map(|i| x.phi[i] - prev.phi[i]).collect();
        let w = dual.riesz(&d).unwrap();
        x.mu = w.iter().map(|v| -v / p.tau).collect();
        let r = residual(&disc, &x, &ctx).unwrap();
        let rphi_scale = norm(&d) / p.tau * disc.mesh().h().powi(2);
        assert!(norm(&r[..n]) < 1e-8 * rphi_scale, "phase residual {}", norm(&r[..n]));

        let q = mean_zero(&disc, &mut rng);
        let eps = 1e-6;
        let fd = {
            let mut a = x.clone();
            let mut b = x.clone();
            for i in 0..n {
                a.phi[i] += eps * q[i];
                b.phi[i] -= eps * q[i];
            }
            (step_potential(&disc, &a, &ctx, &dual).unwrap() - step_potential(&disc, &b, &ctx, &dual).unwrap()) / (2.0 * eps)
        };
        let want: f64 = -(0..n).map(|i| r[n + i] * q[i]).sum::<f64>();
        assert!((fd - want).abs() <= 1e-6 * want.abs().max(1.0), "{kind:?}: {fd} vs {want}");

        let mut v: Vec<f64> = (0..2 * n).map(|_| rng.random_range(-1.0..1.0)).collect();
        for c in disc.u_constraints() {
            v[c] = 0.0;
        }
        let fdu = {
            let mut a = x.clone();
            let mut b = x.clone();
            for i in 0..2 * n {
                a.u[i] += eps * v[i];
                b.u[i] -= eps * v[i];
            }
            (step_potential(&disc, &a, &ctx, &dual).unwrap() - step_potential(&disc, &b, &ctx, &dual).unwrap()) / (2.0 * eps)
        };
        let wantu: f64 = (0..2 * n).map(|i| r[2 * n + i] * v[i]).sum();
        assert!((fdu - wantu).abs() <= 1e-6 * wantu.abs().max(1.0), "{kind:?}: {fdu} vs {wantu}");
    }
}
