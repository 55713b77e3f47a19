//! Stability of rotating waves: exact rotating-frame Jacobians, the
//! approximate variational matrices, monodromy cross-checks and the
//! stabilization (Eckhaus) threshold search.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::assign::match_multisets;
use crate::error::{Error, Result};
use crate::hopf::branch;
use crate::linalg::{add_block, eigenvalues, max_abs, mult_block};
use crate::ode::{integrate, IntegratorOptions};
use crate::orbits::{
    branch_eigenvalue, continue_from, orbit_large_s, orbit_small_s, residual_norm, solve_branch,
    solve_relative_equilibrium, RelativeEquilibrium, DEFAULT_NEWTON_TOL,
};
use crate::par;
use crate::ring::{to_real, InhomRingParams, RingParams, System};
use crate::spectral::unit_root;

pub const ZERO_TOL: f64 = 1e-6;
pub const MARGIN_TOL: f64 = 1e-9;
/// Largest orbit residual accepted by [`exact_jacobian`].
pub const STALE_TOL: f64 = 1e-8;
pub const THRESHOLD_TOL: f64 = 1e-8;
/// Default alpha span above onset searched for a threshold.
pub const DEFAULT_SPAN: f64 = 4.0;
const SCAN_STEP: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ApproxSmallS,
    ApproxLargeS,
    ExactJacobian,
    Monodromy,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::ApproxSmallS => "approx-small-s",
            Method::ApproxLargeS => "approx-large-s",
            Method::ExactJacobian => "exact-jacobian",
            Method::Monodromy => "monodromy",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityAssessment {
    /// Sorted by `(Re, Im)`.
    pub exponents: Vec<Complex64>,
    pub trivial_index: usize,
    pub max_nontrivial_re: f64,
    pub stable: bool,
    pub method: Method,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EckhausPoint {
    pub branch_k: usize,
    pub alpha_star: f64,
    /// `|Z|^2 / N` at the threshold.
    pub amplitude_at_star: f64,
    pub omega_at_star: f64,
    pub method: Method,
    /// True when the branch is already stable just past onset; then
    /// `alpha_star` is the onset value.
    pub stable_from_onset: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "outcome")]
pub enum ThresholdOutcome {
    Stabilizes(EckhausPoint),
    NeverStabilizes {
        branch_k: usize,
        method: Method,
        /// Largest alpha at which the branch was assessed.
        alpha_reached: f64,
        /// Smallest `max_nontrivial_re` seen on the scan.
        least_growth: f64,
    },
}

impl ThresholdOutcome {
    pub fn alpha_star(&self) -> Option<f64> {
        match self {
            ThresholdOutcome::Stabilizes(p) => Some(p.alpha_star),
            ThresholdOutcome::NeverStabilizes { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EckhausRow {
    pub branch_k: usize,
    pub alpha_crit: f64,
    pub omega_onset: f64,
    pub outcome: Option<ThresholdOutcome>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonodromyResult {
    pub period: f64,
    pub multipliers: Vec<Complex64>,
    /// `exp(T lambda)` over the exact exponents, matched to `multipliers`.
    pub predicted: Vec<Complex64>,
    /// `max |rho - exp(T lambda)| / max(1, |exp(T lambda)|)`.
    pub max_mismatch: f64,
    pub trivial_index: usize,
}

/// Goldstone vector `(0, 1)` on every node, exact for both approximate
/// matrices.
fn uniform_goldstone(n: usize) -> Vec<f64> {
    (0..2 * n).map(|i| (i % 2) as f64).collect()
}

/// Goldstone vector `i V` in interleaved real form.
fn orbit_goldstone(profile: &[Complex64]) -> Vec<f64> {
    profile.iter().flat_map(|v| [-v.im, v.re]).collect()
}

/// Exponents of `m` with the known kernel direction `e` split off by a
/// Wielandt shift: `m - sigma e x^T` with `x^T e = 1` moves that eigenvalue
/// by `-sigma` and leaves the rest unchanged.
fn assess_with_kernel(m: &DMatrix<f64>, e: &[f64], method: Method) -> Result<StabilityAssessment> {
    let dim = m.nrows();
    let ee: f64 = e.iter().map(|x| x * x).sum();
    if ee == 0.0 {
        return Err(Error::Degenerate("kernel direction is zero".into()));
    }
    let row_sum = (0..dim).map(|i| m.row(i).iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max);
    let sigma = 2.0 * row_sum + 1.0;
    let mut shifted = m.clone();
    for i in 0..dim {
        for j in 0..dim {
            shifted[(i, j)] -= sigma * e[i] * e[j] / ee;
        }
    }
    let mut ev = eigenvalues(&shifted)?;
    let t = (0..dim)
        .min_by(|&a, &b| (ev[a] + sigma).norm().total_cmp(&(ev[b] + sigma).norm()))
        .expect("nonempty");
    let max_nontrivial_re = (0..dim).filter(|&i| i != t).map(|i| ev[i].re).fold(f64::NEG_INFINITY, f64::max);
    ev[t] += sigma;
    finish(ev, t, max_nontrivial_re, method)
}

fn finish(mut ev: Vec<Complex64>, trivial: usize, max_nontrivial_re: f64, method: Method) -> Result<StabilityAssessment> {
    let tv = ev[trivial];
    crate::linalg::sort_complex(&mut ev);
    let trivial_index = ev.iter().position(|&x| x == tv).expect("trivial exponent is kept");
    Ok(StabilityAssessment {
        exponents: ev,
        trivial_index,
        max_nontrivial_re,
        stable: max_nontrivial_re < -MARGIN_TOL,
        method,
    })
}

/// Assessment from a plain exponent list: the smallest `|lambda|` is the
/// trivial one.
pub fn assess_exponents(ev: Vec<Complex64>, method: Method) -> Result<StabilityAssessment> {
    if ev.is_empty() {
        return Err(Error::Degenerate("no exponents".into()));
    }
    let t = (0..ev.len()).min_by(|&a, &b| ev[a].norm().total_cmp(&ev[b].norm())).expect("nonempty");
    let max_re = (0..ev.len()).filter(|&i| i != t).map(|i| ev[i].re).fold(f64::NEG_INFINITY, f64::max);
    finish(ev, t, max_re, method)
}

/// `A(eps, s) = -Id (x) (M_lt + 2 eps diag(1, 0)) + G_0 (x) M_lt
/// + (delta_{N l} - delta_{N 1}) (x) s M_{l0^l}`, with `l0 = gamma_{N,k}`
/// and `lt = l0 + (s/N) l0^l`.
pub fn approx_matrix_small_s(p: &RingParams, k: usize, eps: f64) -> Result<DMatrix<f64>> {
    p.validate()?;
    let n = p.n_osc;
    if k >= n {
        return Err(Error::InvalidParameter(format!("branch index {k} must be below {n}")));
    }
    let s = p.shortcut_strength;
    let l0 = unit_root(n, k);
    let l0l = l0.powu(p.shortcut_from as u32);
    let lt = l0 + s / n as f64 * l0l;
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    let ml = mult_block(lt);
    let diag = [[-ml[0][0] - 2.0 * eps, -ml[0][1]], [-ml[1][0], -ml[1][1]]];
    let shortcut = mult_block(s * l0l);
    let neg_shortcut = mult_block(-s * l0l);
    for j in 0..n {
        add_block(&mut m, j, j, diag);
        add_block(&mut m, j, (j + 1) % n, ml);
    }
    add_block(&mut m, n - 1, p.shortcut_from - 1, shortcut);
    add_block(&mut m, n - 1, 0, neg_shortcut);
    Ok(m)
}

/// Approximate variational matrix of the inhomogeneous ring near onset of
/// branch `k`, built on the leading-order profile.
pub fn approx_matrix_large_s(p: &InhomRingParams, k: usize, eps: f64) -> Result<DMatrix<f64>> {
    let prof = orbit_large_s(p, k, eps)?;
    let n = p.n_reduced;
    let mg = mult_block(p.strength.powf(1.0 / n as f64) * unit_root(n, k));
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for j in 0..n {
        let w = prof.v0_sq[j];
        let d = [
            [-(mg[0][0] + eps * (3.0 * w - 1.0)), -mg[0][1]],
            [-mg[1][0], -(mg[1][1] + eps * (w - 1.0))],
        ];
        add_block(&mut m, j, j, d);
        let off = [[mg[0][0] + eps * (w - 1.0), mg[0][1]], [mg[1][0], mg[1][1] + eps * (w - 1.0)]];
        add_block(&mut m, j, (j + 1) % n, off);
    }
    Ok(m)
}

/// Rotating-frame linearization at a relative equilibrium.
pub fn exact_jacobian(orbit: &RelativeEquilibrium) -> Result<DMatrix<f64>> {
    let residual = residual_norm(&orbit.system, &orbit.profile, orbit.omega)?;
    if !(residual <= STALE_TOL) {
        return Err(Error::StaleOrbit { residual, tol: STALE_TOL });
    }
    Ok(orbit.system.network().linearization(&orbit.profile, orbit.omega))
}

pub fn assess_exact(orbit: &RelativeEquilibrium) -> Result<StabilityAssessment> {
    let j = exact_jacobian(orbit)?;
    assess_with_kernel(&j, &orbit_goldstone(&orbit.profile), Method::ExactJacobian)
}

pub fn assess_approx_small_s(p: &RingParams, k: usize, eps: f64) -> Result<StabilityAssessment> {
    let m = approx_matrix_small_s(p, k, eps)?;
    assess_with_kernel(&m, &uniform_goldstone(p.n_osc), Method::ApproxSmallS)
}

pub fn assess_approx_large_s(p: &InhomRingParams, k: usize, eps: f64) -> Result<StabilityAssessment> {
    let m = approx_matrix_large_s(p, k, eps)?;
    assess_with_kernel(&m, &uniform_goldstone(p.n_reduced), Method::ApproxLargeS)
}

/// Monodromy matrix over one period from the lab-frame variational
/// equation, integrated together with the orbit.
pub fn monodromy_matrix(orbit: &RelativeEquilibrium, opts: &IntegratorOptions) -> Result<DMatrix<f64>> {
    let net = orbit.system.network();
    let d = 2 * net.n;
    let period = orbit.period();
    let mut y0 = to_real(&orbit.profile);
    y0.extend(DMatrix::<f64>::identity(d, d).iter());
    let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| {
        let (x, phi) = y.split_at(d);
        let (dx, dphi) = dy.split_at_mut(d);
        net.rhs_real(x, dx);
        let z: Vec<Complex64> = x.chunks_exact(2).map(|w| Complex64::new(w[0], w[1])).collect();
        let jac = net.linearization(&z, 0.0);
        let phi = DMatrix::from_column_slice(d, d, phi);
        dphi.copy_from_slice((jac * phi).as_slice());
    };
    let (ys, _) = integrate(rhs, 0.0, &y0, &[period], opts)?;
    Ok(DMatrix::from_column_slice(d, d, &ys[0][d..]))
}

/// Floquet multipliers compared with `exp(T lambda)` of the exact
/// exponents.
pub fn monodromy_multipliers(orbit: &RelativeEquilibrium, opts: &IntegratorOptions) -> Result<MonodromyResult> {
    let exact = assess_exact(orbit)?;
    let period = orbit.period();
    let mono = monodromy_matrix(orbit, opts)?;
    let mut multipliers = eigenvalues(&mono)?;
    crate::linalg::sort_complex(&mut multipliers);
    let expo: Vec<Complex64> = exact.exponents.iter().map(|l| (l * period).exp()).collect();
    let m = match_multisets(&multipliers, &expo);
    let predicted: Vec<Complex64> = m.partner.iter().map(|&j| expo[j]).collect();
    let max_mismatch = multipliers
        .iter()
        .zip(&predicted)
        .map(|(r, e)| (r - e).norm() / e.norm().max(1.0))
        .fold(0.0, f64::max);
    let trivial_index = (0..multipliers.len())
        .min_by(|&a, &b| (multipliers[a] - 1.0).norm().total_cmp(&(multipliers[b] - 1.0).norm()))
        .expect("nonempty");
    Ok(MonodromyResult { period, multipliers, predicted, max_mismatch, trivial_index })
}

pub fn assess_monodromy(orbit: &RelativeEquilibrium, opts: &IntegratorOptions) -> Result<StabilityAssessment> {
    let period = orbit.period();
    let mut multipliers = eigenvalues(&monodromy_matrix(orbit, opts)?)?;
    crate::linalg::sort_complex(&mut multipliers);
    let ev: Vec<Complex64> = multipliers.iter().map(|r| r.ln() / period).collect();
    assess_exponents(ev, Method::Monodromy)
}

/// `|Z|^2 / N = 3 alpha / 4 + sqrt(alpha^2 / 16 + 1/2)`: the long-wave
/// stabilization line of the unperturbed ring.
pub fn eckhaus_line_s0(alpha: f64) -> f64 {
    0.75 * alpha + (alpha * alpha / 16.0 + 0.5).sqrt()
}

/// Intersection `(1 - 2 cos^2 theta) / cos theta` of branch `k`'s amplitude
/// `alpha + cos theta` with the long-wave line; `None` if `cos theta <= 0`.
pub fn eckhaus_closed_form(n: usize, k: usize) -> Option<f64> {
    let c = unit_root(n, k).re;
    if c <= 1e-12 {
        return None;
    }
    Some((1.0 - 2.0 * c * c) / c)
}

/// Evaluates the growth rate along one branch, keeping solved orbits so
/// the next solve has a nearby seed.
struct BranchProbe {
    system: System,
    k: usize,
    method: Method,
    alpha_crit: f64,
    omega_onset: f64,
    orbits: Vec<RelativeEquilibrium>,
    opts: IntegratorOptions,
}

struct Sample {
    alpha: f64,
    growth: f64,
    amplitude: f64,
    omega: f64,
}

impl BranchProbe {
    fn new(system: &System, k: usize, method: Method) -> Result<Self> {
        let system = match (method, system) {
            (Method::ApproxLargeS, System::Full(p) | System::Truncated(p)) => {
                System::Inhom(InhomRingParams::from_tail(p)?)
            }
            (Method::ApproxLargeS, s @ System::Inhom(_)) => *s,
            (Method::ApproxSmallS, s @ System::Full(_)) => *s,
            (Method::ApproxSmallS, _) => {
                return Err(Error::OutOfRegime { op: "approx-small-s", regime: "the full shortcut ring" })
            }
            (_, s) => *s,
        };
        let lambda = branch_eigenvalue(&system, k)?;
        Ok(BranchProbe {
            system,
            k,
            method,
            alpha_crit: -lambda.re,
            omega_onset: system.beta() + lambda.im,
            orbits: Vec::new(),
            opts: IntegratorOptions { rtol: 1e-10, atol: 1e-12, ..Default::default() },
        })
    }

    fn with_orbit(&self, orbit: &RelativeEquilibrium) -> Result<Sample> {
        let a = match self.method {
            Method::Monodromy => assess_monodromy(orbit, &self.opts)?,
            _ => assess_exact(orbit)?,
        };
        Ok(Sample { alpha: orbit.alpha(), growth: a.max_nontrivial_re, amplitude: orbit.mean_sq_amplitude(), omega: orbit.omega })
    }

    fn approx(&self, alpha: f64) -> Result<Sample> {
        let eps = alpha - self.alpha_crit;
        match self.system {
            System::Full(p) if self.method == Method::ApproxSmallS => {
                let o = orbit_small_s(&p, self.k, eps)?;
                let a = assess_approx_small_s(&p, self.k, eps)?;
                let amp = eps * o.profile.iter().map(|v| v.norm_sqr()).sum::<f64>() / p.n_osc as f64;
                Ok(Sample { alpha, growth: a.max_nontrivial_re, amplitude: amp, omega: o.omega })
            }
            System::Inhom(q) => {
                let a = assess_approx_large_s(&q, self.k, eps)?;
                Ok(Sample { alpha, growth: a.max_nontrivial_re, amplitude: eps, omega: self.omega_onset })
            }
            _ => Err(Error::OutOfRegime { op: "approximate assessment", regime: "a matching system" }),
        }
    }

    fn is_approx(&self) -> bool {
        matches!(self.method, Method::ApproxSmallS | Method::ApproxLargeS)
    }

    /// Samples on `alpha_grid` (increasing); stops early where the branch
    /// cannot be continued.
    fn scan(&mut self, grid: &[f64]) -> Result<(Vec<Sample>, Option<Error>)> {
        if self.is_approx() {
            return Ok((grid.iter().map(|&a| self.approx(a)).collect::<Result<Vec<_>>>()?, None));
        }
        let first = solve_branch(&self.system.with_alpha(grid[0]), self.k, DEFAULT_NEWTON_TOL)?;
        let step = if grid.len() > 1 { grid[1] - grid[0] } else { SCAN_STEP };
        let mut samples = vec![self.with_orbit(&first)?];
        self.orbits.push(first.clone());
        let mut current = first;
        for &a in &grid[1..] {
            let run = continue_from(current.clone(), self.alpha_crit, a, step, DEFAULT_NEWTON_TOL);
            if let Some(e) = run.stop {
                return Ok((samples, Some(e)));
            }
            current = run.points.into_iter().last().expect("nonempty");
            samples.push(self.with_orbit(&current)?);
            self.orbits.push(current.clone());
        }
        Ok((samples, None))
    }

    /// Sample at `alpha` between two solved orbits.
    fn between(&self, alpha: f64, lo: &RelativeEquilibrium, hi: &RelativeEquilibrium) -> Result<(Sample, RelativeEquilibrium)> {
        let t = (alpha - lo.alpha()) / (hi.alpha() - lo.alpha());
        let profile = lo.profile.iter().zip(&hi.profile).map(|(a, b)| a + t * (b - a)).collect();
        let guess = RelativeEquilibrium {
            profile,
            omega: lo.omega + t * (hi.omega - lo.omega),
            system: self.system.with_alpha(alpha),
            residual: f64::NAN,
            branch_k: self.k,
        };
        let orbit = solve_relative_equilibrium(&guess, DEFAULT_NEWTON_TOL)?;
        Ok((self.with_orbit(&orbit)?, orbit))
    }
}

/// First alpha in `bracket` where branch `k` turns from unstable to stable.
///
/// The bracket is scanned on a grid of spacing at most `0.05` and the sign
/// change refined by bisection to `|max_nontrivial_re| <= 1e-8`.
pub fn stabilization_threshold(
    system: &System,
    k: usize,
    method: Method,
    bracket: (f64, f64),
) -> Result<ThresholdOutcome> {
    system.validate()?;
    let (lo, hi) = bracket;
    let mut probe = BranchProbe::new(system, k, method)?;
    if !(lo.is_finite() && hi.is_finite() && lo < hi && lo > probe.alpha_crit) {
        return Err(Error::InvalidBracket { lo, hi });
    }
    let cells = ((hi - lo) / SCAN_STEP).ceil().max(8.0) as usize;
    let grid: Vec<f64> = (0..=cells).map(|i| lo + (hi - lo) * i as f64 / cells as f64).collect();
    let (samples, _stop) = probe.scan(&grid)?;
    let stable = |x: &Sample| x.growth < -MARGIN_TOL;
    if stable(&samples[0]) {
        let onset = lo - probe.alpha_crit <= 0.05;
        let point = if onset {
            EckhausPoint {
                branch_k: k,
                alpha_star: probe.alpha_crit,
                amplitude_at_star: 0.0,
                omega_at_star: probe.omega_onset,
                method,
                stable_from_onset: true,
            }
        } else {
            EckhausPoint {
                branch_k: k,
                alpha_star: lo,
                amplitude_at_star: samples[0].amplitude,
                omega_at_star: samples[0].omega,
                method,
                stable_from_onset: false,
            }
        };
        return Ok(ThresholdOutcome::Stabilizes(point));
    }
    let Some(i) = (1..samples.len()).find(|&i| stable(&samples[i])) else {
        let least_growth = samples.iter().map(|x| x.growth).fold(f64::INFINITY, f64::min);
        return Ok(ThresholdOutcome::NeverStabilizes {
            branch_k: k,
            method,
            alpha_reached: samples.last().map(|x| x.alpha).unwrap_or(lo),
            least_growth,
        });
    };
    let (mut a, mut b) = (samples[i - 1].alpha, samples[i].alpha);
    let mut best = Sample { ..samples[i].clone_sample() };
    let (mut orb_a, mut orb_b) = if probe.is_approx() {
        (None, None)
    } else {
        (Some(probe.orbits[i - 1].clone()), Some(probe.orbits[i].clone()))
    };
    for _ in 0..100 {
        if best.growth.abs() <= THRESHOLD_TOL || (b - a) <= 1e-14 * b.abs().max(1.0) {
            break;
        }
        let mid = 0.5 * (a + b);
        let (sample, orbit) = match (&orb_a, &orb_b) {
            (Some(oa), Some(ob)) => {
                let (s, o) = probe.between(mid, oa, ob)?;
                (s, Some(o))
            }
            _ => (probe.approx(mid)?, None),
        };
        if stable(&sample) {
            b = mid;
            orb_b = orbit.or(orb_b);
        } else {
            a = mid;
            orb_a = orbit.or(orb_a);
        }
        best = sample;
    }
    Ok(ThresholdOutcome::Stabilizes(EckhausPoint {
        branch_k: k,
        alpha_star: best.alpha,
        amplitude_at_star: best.amplitude,
        omega_at_star: best.omega,
        method,
        stable_from_onset: false,
    }))
}

impl Sample {
    fn clone_sample(&self) -> Sample {
        Sample { alpha: self.alpha, growth: self.growth, amplitude: self.amplitude, omega: self.omega }
    }
}

/// Threshold per branch in `ks` over `(alpha_crit + 1e-3, alpha_crit + span)`;
/// failures are recorded per row.
pub fn modulated_eckhaus_table(system: &System, ks: &[usize], method: Method, span: f64) -> Vec<EckhausRow> {
    par::map(ks, |&k| {
        let onset = BranchProbe::new(system, k, method).map(|p| (p.alpha_crit, p.omega_onset));
        match onset {
            Err(e) => EckhausRow { branch_k: k, alpha_crit: f64::NAN, omega_onset: f64::NAN, outcome: None, error: Some(e.to_string()) },
            Ok((ac, om)) => {
                let r = stabilization_threshold(system, k, method, (ac + 1e-3, ac + span));
                let (outcome, error) = match r {
                    Ok(o) => (Some(o), None),
                    Err(e) => (None, Some(e.to_string())),
                };
                EckhausRow { branch_k: k, alpha_crit: ac, omega_onset: om, outcome, error }
            }
        }
    })
}

/// Convenience for the full ring: branch label lookup plus table.
pub fn eckhaus_table_full(p: &RingParams, method: Method, span: f64) -> Result<Vec<EckhausRow>> {
    p.validate()?;
    let ks: Vec<usize> = (0..p.n_osc).collect();
    let _ = branch(p, 0)?;
    Ok(modulated_eckhaus_table(&System::Full(*p), &ks, method, span))
}

/// Largest dense matrix entry, used in residual checks.
pub fn matrix_scale(m: &DMatrix<f64>) -> f64 {
    max_abs(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orbits::{onset_guess, plane_wave_s0};
    use std::f64::consts::PI;

    fn rp(n: usize, l: usize, s: f64, a: f64, b: f64) -> RingParams {
        RingParams::new(n, l, s, a, b).unwrap()
    }

    #[test]
    fn small_s_matrix_at_zero_is_kronecker() {
        let n = 12;
        let p = rp(n, 4, 0.0, 0.0, 1.0);
        for k in [0, 1, 5] {
            let m = approx_matrix_small_s(&p, k, 0.0).unwrap();
            let ev = eigenvalues(&m).unwrap();
            let g = unit_root(n, k);
            let expect: Vec<Complex64> =
                (0..n).flat_map(|j| [(unit_root(n, j) - 1.0) * g, (unit_root(n, j) - 1.0) * g.conj()]).collect();
            assert!(match_multisets(&ev, &expect).max_distance() < 1e-6);
            assert_eq!(ev.iter().filter(|z| z.norm() < 1e-6).count(), 2);
        }
    }

    #[test]
    fn small_s_matrix_shortcut_blocks_cancel() {
        let p = rp(10, 4, 0.3, 0.0, 1.0);
        let with = approx_matrix_small_s(&p, 2, 0.0).unwrap();
        let row = 2 * 9;
        let sum_l: f64 = (0..2).map(|c| with[(row, 2 * 3 + c)]).sum();
        let sum_1: f64 = (0..2).map(|c| with[(row, c)]).sum();
        // Shortcut contributions: +s M at column l, -s M at column 1.
        let g = unit_root(10, 2).powu(4) * 0.3;
        let m = mult_block(g);
        assert!((sum_l - (m[0][0] + m[0][1])).abs() < 1e-14);
        let lt = unit_root(10, 2) + 0.3 / 10.0 * unit_root(10, 2).powu(4);
        let ml = mult_block(lt);
        assert!((sum_1 - (ml[0][0] + ml[0][1] - m[0][0] - m[0][1])).abs() < 1e-14);
    }

    #[test]
    fn first_branch_stable_from_onset_in_approx() {
        let p = rp(20, 6, 0.0, 0.0, 1.0);
        let a = assess_approx_small_s(&p, 0, 0.02).unwrap();
        assert!(a.stable);
        assert!(a.exponents[a.trivial_index].norm() < 1e-12);
    }

    #[test]
    fn large_s_matrix_at_zero() {
        let q = InhomRingParams::new(9, 3.0, 0.0, 1.0).unwrap();
        let r = 3f64.powf(1.0 / 9.0);
        let g = unit_root(9, 2);
        let ev = eigenvalues(&approx_matrix_large_s(&q, 2, 0.0).unwrap()).unwrap();
        let expect: Vec<Complex64> =
            (0..9).flat_map(|j| [r * (unit_root(9, j) - 1.0) * g, r * (unit_root(9, j) - 1.0) * g.conj()]).collect();
        assert!(match_multisets(&ev, &expect).max_distance() < 1e-6);
        let q1 = InhomRingParams::new(9, 1.0, 0.0, 1.0).unwrap();
        let p9 = RingParams::with_unit_link(9, 1, 0.0, 0.0, 1.0).unwrap();
        let a = approx_matrix_large_s(&q1, 2, 0.0).unwrap();
        let b = approx_matrix_small_s(&p9, 2, 0.0).unwrap();
        assert!((a - b).amax() < 1e-14);
    }

    #[test]
    fn large_s_verdict_matches_exact() {
        let q = InhomRingParams::new(15, 5.0, 0.0, 2.5).unwrap();
        let eps = 0.01;
        let approx = assess_approx_large_s(&q, 0, eps).unwrap();
        let alpha0 = -5f64.powf(1.0 / 15.0);
        let sys = System::Inhom(q.with_alpha(alpha0 + eps));
        let orbit = solve_relative_equilibrium(&onset_guess(&sys, 0).unwrap(), DEFAULT_NEWTON_TOL).unwrap();
        let exact = assess_exact(&orbit).unwrap();
        assert_eq!(approx.stable, exact.stable);
    }

    #[test]
    fn goldstone_mode_is_found() {
        let p = rp(20, 6, 0.6, 0.0, 2.5);
        for k in [0, 3, 7] {
            let b = branch(&p, k).unwrap();
            let sys = System::Full(p.with_alpha(b.alpha_crit + 0.05));
            let orbit = solve_relative_equilibrium(&onset_guess(&sys, k).unwrap(), DEFAULT_NEWTON_TOL).unwrap();
            let j = exact_jacobian(&orbit).unwrap();
            let e = nalgebra::DVector::from_vec(orbit_goldstone(&orbit.profile));
            assert!((&j * &e).amax() < 1e-9);
            let a = assess_exact(&orbit).unwrap();
            assert!(a.exponents[a.trivial_index].norm() < 1e-8);
            let plain = eigenvalues(&j).unwrap();
            assert!(plain.iter().any(|z| z.norm() < 1e-8));
        }
    }

    #[test]
    fn stale_orbit_rejected() {
        let p = rp(10, 3, 0.0, 0.5, 1.0);
        let mut o = plane_wave_s0(&p, 0).unwrap();
        o.omega += 0.1;
        assert!(matches!(exact_jacobian(&o), Err(Error::StaleOrbit { .. })));
    }

    #[test]
    fn plane_wave_k0_stable() {
        let p = rp(20, 6, 0.0, 1.0, 2.5);
        let a = assess_exact(&plane_wave_s0(&p, 0).unwrap()).unwrap();
        assert!(a.stable);
    }

    #[test]
    fn monodromy_matches_exponents() {
        let p = rp(8, 3, 0.0, 0.5, 2.5);
        let o = plane_wave_s0(&p, 0).unwrap();
        let opts = IntegratorOptions { rtol: 1e-11, atol: 1e-13, ..Default::default() };
        let m = monodromy_multipliers(&o, &opts).unwrap();
        assert!((m.multipliers[m.trivial_index] - 1.0).norm() < 1e-6);
        assert!(m.max_mismatch < 1e-5);
        let nontrivial_inside = m.multipliers.iter().enumerate().filter(|&(i, _)| i != m.trivial_index).all(|(_, r)| r.norm() < 1.0);
        assert!(nontrivial_inside);
    }

    #[test]
    fn eckhaus_line_values() {
        assert!((eckhaus_line_s0(1.0) - 1.5).abs() < 1e-15);
        assert!((eckhaus_line_s0(0.0) - 0.5f64.sqrt()).abs() < 1e-15);
        let xs: Vec<f64> = (0..100).map(|i| -3.0 + 0.06 * i as f64).collect();
        assert!(xs.windows(2).all(|w| eckhaus_line_s0(w[1]) > eckhaus_line_s0(w[0])));
        let th = PI / 10.0;
        assert!((eckhaus_closed_form(20, 1).unwrap() - (1.0 - 2.0 * th.cos().powi(2)) / th.cos()).abs() < 1e-15);
        assert!(eckhaus_closed_form(20, 5).is_none());
    }

    #[test]
    fn threshold_never_for_backward_branches() {
        let p = rp(20, 6, 0.0, 0.0, 1.0);
        for k in [5, 6, 10] {
            let ac = -unit_root(20, k).re;
            let out = stabilization_threshold(&System::Full(p), k, Method::ExactJacobian, (ac + 1e-3, ac + 2.0)).unwrap();
            assert!(matches!(out, ThresholdOutcome::NeverStabilizes { .. }), "k = {k}");
        }
    }

    #[test]
    fn threshold_bad_bracket() {
        let p = rp(20, 6, 0.0, 0.0, 1.0);
        let r = stabilization_threshold(&System::Full(p), 1, Method::ExactJacobian, (-2.0, 0.0));
        assert!(matches!(r, Err(Error::InvalidBracket { .. })));
    }
}
