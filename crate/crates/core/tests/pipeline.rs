use num_complex::Complex64;

use shortcut_ring::floquet::{assess_exact, assess_monodromy};
use shortcut_ring::hopf::{hopf_sequence, is_zero_stable, Verdict};
use shortcut_ring::ode::IntegratorOptions;
use shortcut_ring::orbits::{solve_branch, RelativeEquilibrium, DEFAULT_NEWTON_TOL};
use shortcut_ring::simulate::{integrate, measure_orbit};
use shortcut_ring::{RingParams, RingState, System};

fn perturbed(orbit: &RelativeEquilibrium, size: f64) -> RingState {
    let mut st = orbit.state_at(0.0);
    for (j, z) in st.z.iter_mut().enumerate() {
        *z += Complex64::from_polar(size, 1.7 * j as f64);
    }
    st
}

fn orbit(n: usize, ell: usize, s: f64, k: usize, eps: f64) -> RelativeEquilibrium {
    let p = RingParams::new(n, ell, s, 0.0, 2.5).unwrap();
    let ac = hopf_sequence(&p).unwrap().into_iter().find(|b| b.index_k == k).unwrap().alpha_crit;
    solve_branch(&System::Full(p.with_alpha(ac + eps)), k, DEFAULT_NEWTON_TOL).unwrap()
}

#[test]
fn first_onset_changes_zero_stability() {
    let p = RingParams::new(12, 4, 0.3, 0.0, 2.5).unwrap();
    let first = hopf_sequence(&p).unwrap()[0].alpha_crit;
    assert_eq!(is_zero_stable(&p.with_alpha(first - 1e-6)).unwrap().verdict, Verdict::Stable);
    assert_eq!(is_zero_stable(&p.with_alpha(first + 1e-6)).unwrap().verdict, Verdict::Unstable);
}

#[test]
fn near_onset_orbit_frequency_tends_to_onset_value() {
    let p = RingParams::new(12, 4, 0.3, 0.0, 2.5).unwrap();
    for b in hopf_sequence(&p).unwrap().iter().take(4) {
        let sys = System::Full(p.with_alpha(b.alpha_crit + 1e-4));
        let o = solve_branch(&sys, b.index_k, DEFAULT_NEWTON_TOL).unwrap();
        assert!((o.omega - b.omega_onset).abs() < 1e-3, "k = {}", b.index_k);
    }
}

#[test]
fn stable_branch_attracts_perturbed_start() {
    let o = orbit(10, 3, 0.1, 0, 0.3);
    let exact = assess_exact(&o).unwrap();
    assert!(exact.stable);
    assert!(assess_monodromy(&o, &IntegratorOptions::default()).unwrap().stable);

    let t_final = 40.0 / exact.max_nontrivial_re.abs();
    let trace = integrate(&o.system, &perturbed(&o, 1e-3), t_final, 4000, &IntegratorOptions::default()).unwrap();
    let m = measure_orbit(&trace, 0.75 * t_final, 1e-3).unwrap();
    assert!(m.converged);
    assert!(m.deviation_from(&o.profile) < 1e-6, "deviation {}", m.deviation_from(&o.profile));
    assert!((m.frequency - o.omega).abs() < 1e-6);
}

#[test]
fn unstable_branch_departs_from_perturbed_start() {
    let o = orbit(10, 3, 0.0, 5, 0.3);
    let exact = assess_exact(&o).unwrap();
    assert!(!exact.stable);
    assert!(!assess_monodromy(&o, &IntegratorOptions::default()).unwrap().stable);

    let t_final = 30.0 / exact.max_nontrivial_re;
    let trace = integrate(&o.system, &perturbed(&o, 1e-6), t_final, 2000, &IntegratorOptions::default()).unwrap();
    let m = measure_orbit(&trace, 0.9 * t_final, 1e-3).unwrap();
    assert!(m.deviation_from(&o.profile) > 1e-2, "deviation {}", m.deviation_from(&o.profile));
}
