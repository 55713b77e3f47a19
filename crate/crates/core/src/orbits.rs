//! Rotating-wave orbits `z_j(t) = e^{i omega t} v_j`: Newton solver,
//! closed forms, first-order expansions and natural continuation in alpha.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hopf::branch;
use crate::linalg::{null_vector, to_complex};
use crate::ring::{InhomRingParams, RingParams, RingState, System};
use crate::spectral::{power_profile, unit_root};

pub const DEFAULT_NEWTON_TOL: f64 = 1e-11;
const NEWTON_BUDGET: usize = 50;
const MAX_HALVINGS: usize = 8;
const MAX_STEP_HALVINGS: usize = 12;

/// Fixed point `v` of the frame rotating with `omega`; gauge `Im v_1 = 0`,
/// `Re v_1 >= 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelativeEquilibrium {
    pub profile: Vec<Complex64>,
    pub omega: f64,
    pub system: System,
    pub residual: f64,
    pub branch_k: usize,
}

impl RelativeEquilibrium {
    pub fn alpha(&self) -> f64 {
        self.system.alpha()
    }

    /// `|Z|^2 / N`.
    pub fn mean_sq_amplitude(&self) -> f64 {
        self.profile.iter().map(|v| v.norm_sqr()).sum::<f64>() / self.profile.len() as f64
    }

    pub fn period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.omega.abs()
    }

    /// Orbit point at time `t`.
    pub fn state_at(&self, t: f64) -> RingState {
        let rot = Complex64::from_polar(1.0, self.omega * t);
        RingState { z: self.profile.iter().map(|v| rot * v).collect(), t }
    }
}

/// First-order small-s expansion of branch `k`: terms indexed
/// `(00, 10, 01)` in powers of `(eps, s)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmallSExpansion {
    pub k: usize,
    pub omega_terms: [f64; 3],
    pub profile_terms: Vec<[Complex64; 3]>,
    pub scale_factors: [f64; 3],
    pub alpha_terms: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitApprox {
    pub omega: f64,
    /// Unscaled, `v_1 = 1`; the orbit is `sqrt(eps) e^{i omega t} v`.
    pub profile: Vec<Complex64>,
}

/// Leading-order orbit of the inhomogeneous ring for branch `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LargeSProfile {
    pub n: usize,
    pub k: usize,
    pub eps: f64,
    /// `|v_j^0|^2`.
    pub v0_sq: Vec<f64>,
    /// `v_j^0 = lambda_k^(j-1) v_1^0`, `v_1^0 > 0`.
    pub v0: Vec<Complex64>,
    pub omega0: f64,
    pub alpha0: f64,
}

#[derive(Debug, Clone)]
pub struct Continuation {
    pub points: Vec<RelativeEquilibrium>,
    /// Why the march ended early, if it did.
    pub stop: Option<Error>,
}

/// Complex residual of `i omega v = f(v)`, evaluated from the RHS.
pub fn defining_residual(system: &System, profile: &[Complex64], omega: f64) -> Result<Vec<Complex64>> {
    let state = RingState { z: profile.to_vec(), t: 0.0 };
    let f = system.rhs(&state)?;
    Ok(f.iter().zip(profile).map(|(fj, vj)| fj - Complex64::new(0.0, omega) * vj).collect())
}

pub fn residual_norm(system: &System, profile: &[Complex64], omega: f64) -> Result<f64> {
    Ok(defining_residual(system, profile, omega)?.iter().map(|r| r.re.abs().max(r.im.abs())).fold(0.0, f64::max))
}

fn gauge(profile: &mut [Complex64]) {
    if profile[0].re < 0.0 {
        for v in profile.iter_mut() {
            *v = -*v;
        }
    }
}

/// Rotates so that `v_1` is real and nonnegative.
fn rotate_to_gauge(profile: &mut [Complex64]) {
    let n1 = profile[0].norm();
    if n1 > 0.0 {
        let rot = profile[0].conj() / n1;
        for v in profile.iter_mut() {
            *v *= rot;
        }
        profile[0] = Complex64::new(profile[0].re, 0.0);
    }
}

/// Newton on `(Re v, Im v, omega)` with the phase condition `Im v_1 = 0`.
pub fn solve_relative_equilibrium(guess: &RelativeEquilibrium, tol: f64) -> Result<RelativeEquilibrium> {
    let system = guess.system;
    system.validate()?;
    let n = system.dim();
    if guess.profile.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: guess.profile.len() });
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol = {tol} must be positive")));
    }
    if !guess.omega.is_finite() || guess.profile.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(Error::InvalidParameter("Newton guess has non-finite entries".into()));
    }
    let net = system.network();
    let mut v = guess.profile.clone();
    rotate_to_gauge(&mut v);
    let seed_size = v.iter().map(|x| x.norm()).fold(0.0, f64::max);
    if seed_size == 0.0 {
        return Err(Error::TrivialCollapse);
    }
    let mut omega = guess.omega;

    let eval = |v: &[Complex64], omega: f64| -> Result<DVector<f64>> {
        let r = defining_residual(&system, v, omega)?;
        let mut f = DVector::zeros(2 * n + 1);
        for (j, rj) in r.iter().enumerate() {
            f[2 * j] = rj.re;
            f[2 * j + 1] = rj.im;
        }
        f[2 * n] = v[0].im;
        Ok(f)
    };

    let mut f = eval(&v, omega)?;
    let mut fnorm = f.amax();
    for iteration in 0..NEWTON_BUDGET {
        if fnorm <= tol {
            break;
        }
        let mut jac = DMatrix::zeros(2 * n + 1, 2 * n + 1);
        jac.view_mut((0, 0), (2 * n, 2 * n)).copy_from(&net.linearization(&v, omega));
        for (j, vj) in v.iter().enumerate() {
            jac[(2 * j, 2 * n)] = vj.im;
            jac[(2 * j + 1, 2 * n)] = -vj.re;
        }
        jac[(2 * n, 1)] = 1.0;
        let delta = jac.lu().solve(&(-&f)).ok_or(Error::SingularJacobian { iteration })?;
        if delta.iter().any(|d| !d.is_finite()) {
            return Err(Error::SingularJacobian { iteration });
        }
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let trial: Vec<Complex64> = v
                .iter()
                .enumerate()
                .map(|(j, vj)| vj + lambda * Complex64::new(delta[2 * j], delta[2 * j + 1]))
                .collect();
            let trial_omega = omega + lambda * delta[2 * n];
            let ft = eval(&trial, trial_omega)?;
            let fn_t = ft.amax();
            let last_try = accepted.is_none() && lambda < 0.5f64.powi(MAX_HALVINGS as i32 - 1) * 1.5;
            if fn_t < fnorm || last_try {
                accepted = Some((trial, trial_omega, ft, fn_t));
                break;
            }
            lambda *= 0.5;
        }
        let (nv, no, nf, nn) = accepted.expect("last halving is always accepted");
        v = nv;
        omega = no;
        f = nf;
        fnorm = nn;
        if v.iter().map(|x| x.norm()).fold(0.0, f64::max) < 1e-3 * seed_size {
            return Err(Error::TrivialCollapse);
        }
    }
    if !(fnorm <= tol) {
        let mut last: Vec<f64> = v.iter().flat_map(|c| [c.re, c.im]).collect();
        last.push(omega);
        return Err(Error::NewtonNotConverged { iterations: NEWTON_BUDGET, residual: fnorm, last });
    }
    v[0].im = 0.0;
    gauge(&mut v);
    let residual = residual_norm(&system, &v, omega)?;
    Ok(RelativeEquilibrium { profile: v, omega, system, residual, branch_k: guess.branch_k })
}

/// Exact plane wave `v_j = a gamma^(j-1)` of the unperturbed ring.
pub fn plane_wave_s0(p: &RingParams, k: usize) -> Result<RelativeEquilibrium> {
    p.validate()?;
    if p.shortcut_strength != 0.0 {
        return Err(Error::OutOfRegime { op: "plane_wave_s0", regime: "shortcut strength s = 0" });
    }
    let n = p.n_osc;
    if k >= n {
        return Err(Error::InvalidParameter(format!("branch index {k} must be below {n}")));
    }
    let g = unit_root(n, k);
    let a2 = p.alpha + g.re;
    if a2 <= 0.0 {
        return Err(Error::BranchNotBorn { k, alpha: p.alpha, alpha_crit: -g.re });
    }
    let profile: Vec<Complex64> = power_profile(g, n).into_iter().map(|x| a2.sqrt() * x).collect();
    let omega = p.beta + g.im;
    let system = System::Full(*p);
    let residual = residual_norm(&system, &profile, omega)?;
    Ok(RelativeEquilibrium { profile, omega, system, residual, branch_k: k })
}

pub fn small_s_expansion(p: &RingParams, k: usize) -> Result<SmallSExpansion> {
    p.validate()?;
    let n = p.n_osc;
    if k >= n {
        return Err(Error::InvalidParameter(format!("branch index {k} must be below {n}")));
    }
    let nf = n as f64;
    let g = unit_root(n, k);
    let gl = g.powu(p.shortcut_from as u32);
    let glm1 = g.powu(p.shortcut_from as u32 - 1);
    let zero = Complex64::new(0.0, 0.0);
    let profile_terms = (0..n)
        .map(|j| {
            let base = g.powu(j as u32);
            [base, zero, j as f64 / nf * glm1 * base]
        })
        .collect();
    Ok(SmallSExpansion {
        k,
        omega_terms: [p.beta + g.im, 0.0, gl.im / nf],
        profile_terms,
        scale_factors: [1.0, 0.0, 0.0],
        alpha_terms: [-g.re, -gl.re / nf],
    })
}

impl SmallSExpansion {
    pub fn omega(&self, eps: f64, s: f64) -> f64 {
        self.omega_terms[0] + eps * self.omega_terms[1] + s * self.omega_terms[2]
    }

    pub fn profile(&self, eps: f64, s: f64) -> Vec<Complex64> {
        self.profile_terms.iter().map(|t| t[0] + eps * t[1] + s * t[2]).collect()
    }

    pub fn alpha_crit(&self, s: f64) -> f64 {
        self.alpha_terms[0] + s * self.alpha_terms[1]
    }
}

/// First-order small-s frequency and unscaled profile of branch `k`.
pub fn orbit_small_s(p: &RingParams, k: usize, eps: f64) -> Result<OrbitApprox> {
    let e = small_s_expansion(p, k)?;
    let s = p.shortcut_strength;
    Ok(OrbitApprox { omega: e.omega(eps, s), profile: e.profile(eps, s) })
}

/// `n (s^(2/n) - 1) / (s^2 - 1)`, continuous through `s = 1`.
fn first_node_weight(n: usize, s: f64) -> f64 {
    let y = 2.0 * s.ln();
    if y == 0.0 {
        return 1.0;
    }
    n as f64 * (y / n as f64).exp_m1() / y.exp_m1()
}

pub fn orbit_large_s(p: &InhomRingParams, k: usize, eps: f64) -> Result<LargeSProfile> {
    p.validate()?;
    let n = p.n_reduced;
    if k >= n {
        return Err(Error::InvalidParameter(format!("branch index {k} must be below {n}")));
    }
    let s = p.strength;
    let root = s.powf(1.0 / n as f64);
    let lambda = root * unit_root(n, k);
    let w1 = first_node_weight(n, s);
    let v0: Vec<Complex64> = power_profile(lambda, n).into_iter().map(|x| w1.sqrt() * x).collect();
    Ok(LargeSProfile {
        n,
        k,
        eps,
        v0_sq: v0.iter().map(|v| v.norm_sqr()).collect(),
        v0,
        omega0: p.beta + lambda.im,
        alpha0: -lambda.re,
    })
}

/// Coupling-matrix eigenvalue that spawns branch `k` of `system`.
pub fn branch_eigenvalue(system: &System, k: usize) -> Result<Complex64> {
    match system {
        System::Full(p) => Ok(branch(p, k)?.eigenvalue),
        System::Truncated(p) => {
            let tail = p.tail_len();
            if k >= tail {
                return Err(Error::InvalidParameter(format!(
                    "truncated system has {tail} nonzero modes; k = {k}"
                )));
            }
            if p.shortcut_strength == 0.0 {
                return Err(Error::Degenerate("truncated system requires s > 0".into()));
            }
            Ok(p.shortcut_strength.powf(1.0 / tail as f64) * unit_root(tail, k))
        }
        System::Inhom(p) => {
            if k >= p.n_reduced {
                return Err(Error::InvalidParameter(format!("branch index {k} must be below {}", p.n_reduced)));
            }
            Ok(p.strength.powf(1.0 / p.n_reduced as f64) * unit_root(p.n_reduced, k))
        }
    }
}

/// Weakly nonlinear guess near onset from the eigenvector `b` and the left
/// eigenvector `u` of the coupling matrix: amplitude from
/// `Q = sum u_j |b_j|^2 b_j / sum u_j b_j`.
pub fn onset_guess(system: &System, k: usize) -> Result<RelativeEquilibrium> {
    system.validate()?;
    let lambda = branch_eigenvalue(system, k)?;
    let alpha_crit = -lambda.re;
    let eps = system.alpha() - alpha_crit;
    if eps <= 0.0 {
        return Err(Error::BranchNotBorn { k, alpha: system.alpha(), alpha_crit });
    }
    let n = system.dim();
    let b = power_profile(lambda, n);
    let g = system.network().coupling_matrix();
    let shifted = to_complex(&g.transpose()) - DMatrix::<Complex64>::identity(n, n) * lambda;
    let u = null_vector(&shifted)?;
    let num: Complex64 = (0..n).map(|j| u[j] * b[j].norm_sqr() * b[j]).sum();
    let den: Complex64 = (0..n).map(|j| u[j] * b[j]).sum();
    if den.norm() == 0.0 {
        return Err(Error::Degenerate("left and right eigenvectors are orthogonal".into()));
    }
    let q = num / den;
    if q.re <= 0.0 {
        return Err(Error::Degenerate(format!("branch {k} is not supercritical at onset (Re Q = {})", q.re)));
    }
    let amp = (eps / q.re).sqrt();
    let profile: Vec<Complex64> = b.iter().map(|x| amp * x).collect();
    let omega = system.beta() + lambda.im - eps * q.im / q.re;
    let residual = residual_norm(system, &profile, omega)?;
    Ok(RelativeEquilibrium { profile, omega, system: *system, residual, branch_k: k })
}

fn predictor_step(
    prev: &RelativeEquilibrium,
    before: Option<&RelativeEquilibrium>,
    alpha_crit: f64,
    alpha_new: f64,
) -> RelativeEquilibrium {
    let system = prev.system.with_alpha(alpha_new);
    let (profile, omega) = match before {
        Some(b) if (prev.alpha() - b.alpha()).abs() > 0.0 => {
            let r = (alpha_new - prev.alpha()) / (prev.alpha() - b.alpha());
            let profile = prev.profile.iter().zip(&b.profile).map(|(x, y)| x + r * (x - y)).collect();
            (profile, prev.omega + r * (prev.omega - b.omega))
        }
        _ => {
            let e_old = prev.alpha() - alpha_crit;
            let e_new = alpha_new - alpha_crit;
            let f = if e_old > 0.0 && e_new > 0.0 { (e_new / e_old).sqrt() } else { 1.0 };
            (prev.profile.iter().map(|x| f * x).collect(), prev.omega)
        }
    };
    RelativeEquilibrium { profile, omega, system, residual: f64::NAN, branch_k: prev.branch_k }
}

/// Solution of branch `k` at the system's alpha, reached by continuation
/// from just past onset when alpha is far from it.
pub fn solve_branch(system: &System, k: usize, tol: f64) -> Result<RelativeEquilibrium> {
    let alpha_crit = -branch_eigenvalue(system, k)?.re;
    let target = system.alpha();
    let eps = target - alpha_crit;
    if eps <= 0.0 {
        return Err(Error::BranchNotBorn { k, alpha: target, alpha_crit });
    }
    let start_eps = eps.min(0.01);
    if start_eps == eps {
        return solve_relative_equilibrium(&onset_guess(system, k)?, tol);
    }
    let start = system.with_alpha(alpha_crit + start_eps);
    let step = (eps / 40.0).clamp(0.005, 0.05);
    let run = continue_branch(&start, k, (alpha_crit + start_eps, target), step, tol)?;
    match run.stop {
        None => Ok(run.points.into_iter().last().expect("continuation yields at least one point")),
        Some(e) => Err(e),
    }
}

/// Natural-parameter continuation of branch `k` in alpha from
/// `range.0` to `range.1`, seeding each Newton solve from the previous
/// points; halves the step on failure.
pub fn continue_branch(
    system: &System,
    k: usize,
    range: (f64, f64),
    step: f64,
    tol: f64,
) -> Result<Continuation> {
    let (a0, a1) = range;
    if !(a0.is_finite() && a1.is_finite()) {
        return Err(Error::InvalidBracket { lo: a0, hi: a1 });
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidParameter(format!("step = {step} must be positive")));
    }
    let alpha_crit = -branch_eigenvalue(system, k)?.re;
    let first = onset_guess(&system.with_alpha(a0), k)
        .and_then(|g| solve_relative_equilibrium(&g, tol))
        .map_err(|e| Error::Seed(Box::new(e)))?;
    Ok(continue_from(first, alpha_crit, a1, step, tol))
}

/// Continues an already converged orbit to `target` alpha.
pub fn continue_from(
    first: RelativeEquilibrium,
    alpha_crit: f64,
    target: f64,
    step: f64,
    tol: f64,
) -> Continuation {
    let dir = if target >= first.alpha() { 1.0 } else { -1.0 };
    let mut points = vec![first];
    let mut h = step;
    let min_h = step * 0.5f64.powi(MAX_STEP_HALVINGS as i32);
    let mut stop = None;
    while dir * (target - points.last().expect("nonempty").alpha()) > 1e-14 * target.abs().max(1.0) {
        let prev = points.last().expect("nonempty");
        let remaining = (target - prev.alpha()).abs();
        let this_h = h.min(remaining);
        let alpha_new = if this_h == remaining { target } else { prev.alpha() + dir * this_h };
        let before = if points.len() >= 2 { points.get(points.len() - 2) } else { None };
        let guess = predictor_step(prev, before, alpha_crit, alpha_new);
        match solve_relative_equilibrium(&guess, tol) {
            Ok(sol) => {
                points.push(sol);
                h = (h * 1.5).min(step);
            }
            Err(e) => {
                h *= 0.5;
                if h < min_h {
                    stop = Some(e);
                    break;
                }
            }
        }
    }
    Continuation { points, stop }
}
