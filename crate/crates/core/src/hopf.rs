//! Stability of the zero equilibrium, the Hopf bifurcation sequence and
//! first Lyapunov coefficients.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{add_block, mult_block, sort_complex};
use crate::spectral::{
    char_poly_eval, coupling_matrix, leading_real_eigenvalue, mode_labels, power_profile, spectrum_exact,
    RootClass, DEFAULT_RESIDUAL_TOL,
};
use crate::ring::RingParams;

/// Relative `|chi|` accepted for a user-supplied eigenvalue.
pub const EIGENVALUE_TOL: f64 = 1e-9;
pub const DEFAULT_ANTIPHASE_WINDOW: f64 = PI / 8.0;
const MARGIN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Stable,
    Marginal,
    Unstable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeroStability {
    /// `-alpha - max Re sigma(G_s)`.
    pub margin: f64,
    pub verdict: Verdict,
}

impl ZeroStability {
    pub fn is_stable(&self) -> bool {
        self.verdict == Verdict::Stable
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResonanceKind {
    Resonant,
    Antiphase,
    Generic,
}

impl ResonanceKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ResonanceKind::Resonant => "resonant",
            ResonanceKind::Antiphase => "antiphase",
            ResonanceKind::Generic => "generic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonanceClass {
    pub kind: ResonanceKind,
    /// Circular distance in `[0, pi]` between the phases of the two inputs
    /// into node N.
    pub phase_mismatch: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HopfBranch {
    pub index_k: usize,
    pub eigenvalue: Complex64,
    pub class: RootClass,
    pub alpha_crit: f64,
    pub omega_onset: f64,
    /// Normalized so the first component is 1.
    pub profile: Vec<Complex64>,
    /// `None` when the onset frequency vanishes.
    pub lyapunov_l1: Option<f64>,
    pub resonance: ResonanceClass,
}

/// Eigenvector pair of the linearization at zero for `mu + lambda`;
/// `<w, v> = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjointPair {
    pub v: Vec<Complex64>,
    pub w: Vec<Complex64>,
    pub kappa: Complex64,
}

/// `sum conj(a_m) b_m`.
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Real `2N x 2N` linearization of the zero equilibrium.
pub fn equilibrium_matrix(p: &RingParams) -> DMatrix<f64> {
    let n = p.n_osc;
    let g = coupling_matrix(p);
    let mut a = DMatrix::zeros(2 * n, 2 * n);
    for j in 0..n {
        add_block(&mut a, j, j, mult_block(p.mu()));
        for m in 0..n {
            if g[(j, m)] != 0.0 {
                add_block(&mut a, j, m, mult_block(Complex64::new(g[(j, m)], 0.0)));
            }
        }
    }
    a
}

/// `{mu + lambda, conj(mu) + lambda}` over the spectrum of `G_s`.
pub fn equilibrium_spectrum(p: &RingParams) -> Result<Vec<Complex64>> {
    let sp = spectrum_exact(p, DEFAULT_RESIDUAL_TOL)?;
    let mu = p.mu();
    let mut out: Vec<Complex64> = sp.eigenvalues.iter().flat_map(|&l| [mu + l, mu.conj() + l]).collect();
    sort_complex(&mut out);
    Ok(out)
}

pub fn is_zero_stable(p: &RingParams) -> Result<ZeroStability> {
    let margin = -p.alpha - leading_real_eigenvalue(p)?;
    let verdict = if margin > MARGIN_TOL {
        Verdict::Stable
    } else if margin < -MARGIN_TOL {
        Verdict::Unstable
    } else {
        Verdict::Marginal
    };
    Ok(ZeroStability { margin, verdict })
}

pub fn resonance_class(n: usize, ell: usize, k: usize) -> ResonanceClass {
    resonance_class_with_window(n, ell, k, DEFAULT_ANTIPHASE_WINDOW)
}

/// `window` is the distance from `pi` still labelled antiphase.
pub fn resonance_class_with_window(n: usize, ell: usize, k: usize, window: f64) -> ResonanceClass {
    let r = (k % n) * (ell.saturating_sub(1) % n) % n;
    let angle = 2.0 * PI * r as f64 / n as f64;
    let phase_mismatch = angle.min(2.0 * PI - angle);
    let kind = if r == 0 {
        ResonanceKind::Resonant
    } else if (PI - phase_mismatch).abs() <= window {
        ResonanceKind::Antiphase
    } else {
        ResonanceKind::Generic
    };
    ResonanceClass { kind, phase_mismatch }
}

fn check_root(lambda: Complex64, p: &RingParams) -> Result<()> {
    p.validate()?;
    let residual = char_poly_eval(lambda, p).norm();
    if !(residual <= EIGENVALUE_TOL * lambda.norm().powi(p.n_osc as i32).max(1.0)) {
        return Err(Error::InvalidEigenvalue { lambda, residual });
    }
    Ok(())
}

/// Eigenvector `(1, lambda, ..., lambda^(N-1))` of `G_s`.
pub fn eigenvector_b(lambda: Complex64, p: &RingParams) -> Result<Vec<Complex64>> {
    check_root(lambda, p)?;
    Ok(power_profile(lambda, p.n_osc))
}

fn kappa(lambda: Complex64, p: &RingParams) -> Complex64 {
    let n = p.n_osc;
    let l = p.shortcut_from;
    2.0 * lambda.powu(l as u32 - 1) * ((l - 1) as f64 + (n - l + 1) as f64 * lambda.powu(n as u32))
}

pub fn adjoint_pair(lambda: Complex64, p: &RingParams) -> Result<AdjointPair> {
    check_root(lambda, p)?;
    let n = p.n_osc;
    let l = p.shortcut_from;
    let kappa = kappa(lambda, p);
    if kappa.norm() <= 1e-12 * lambda.norm().powi(n as i32).max(1.0) {
        return Err(Error::Degenerate(format!("adjoint normalization vanishes at lambda = {lambda}")));
    }
    let i = Complex64::new(0.0, 1.0);
    let one = Complex64::new(1.0, 0.0);
    let lc = lambda.conj();
    let scale = 1.0 / kappa.conj();
    let mut v = Vec::with_capacity(2 * n);
    let mut w = Vec::with_capacity(2 * n);
    for (j, bj) in power_profile(lambda, n).into_iter().enumerate() {
        v.push(i * bj);
        v.push(bj);
        let j1 = j + 1;
        let e = if j1 < l { l - j1 } else { n + l - j1 };
        let wj = scale * lc.powu(e as u32);
        w.push(i * wj);
        w.push(one * wj);
    }
    Ok(AdjointPair { v, w, kappa })
}

fn denominator(lambda: Complex64, p: &RingParams) -> Result<Complex64> {
    let n = p.n_osc;
    let l = p.shortcut_from;
    let d = (l - 1) as f64 + (n - l + 1) as f64 * lambda.powu(n as u32);
    if d.norm() <= 1e-12 * lambda.norm().powi(n as i32).max(1.0) {
        return Err(Error::Degenerate(format!("cubic coefficient denominator vanishes at lambda = {lambda}")));
    }
    Ok(d)
}

/// Closed form of `<w, C(v, v, conj v)>`.
pub fn cubic_inner_product(lambda: Complex64, p: &RingParams) -> Result<Complex64> {
    check_root(lambda, p)?;
    let n = p.n_osc;
    let l = p.shortcut_from;
    let r2 = lambda.norm_sqr();
    let head: f64 = (1..l).map(|j| r2.powi(j as i32 - 1)).sum();
    let tail: f64 = (l..=n).map(|j| r2.powi(j as i32 - 1)).sum();
    let num = head + lambda.powu(n as u32) * tail;
    Ok(-8.0 * num / denominator(lambda, p)?)
}

/// Symmetric trilinear form of the real cubic `-(x^2 + y^2)(x, y)`,
/// extended complex-multilinearly; one node, components `(x, y)`.
fn cubic_form(u: [Complex64; 2], v: [Complex64; 2], w: [Complex64; 2]) -> [Complex64; 2] {
    let c1 = 6.0 * u[0] * v[0] * w[0] + 2.0 * (u[0] * v[1] * w[1] + u[1] * v[0] * w[1] + u[1] * v[1] * w[0]);
    let c2 = 6.0 * u[1] * v[1] * w[1] + 2.0 * (u[1] * v[0] * w[0] + u[0] * v[1] * w[0] + u[0] * v[0] * w[1]);
    [-c1, -c2]
}

/// `<w, C(v, v, conj v)>` by direct node-wise trilinear evaluation.
pub fn cubic_inner_product_direct(lambda: Complex64, p: &RingParams) -> Result<Complex64> {
    let pair = adjoint_pair(lambda, p)?;
    let mut c = Vec::with_capacity(pair.v.len());
    for node in pair.v.chunks_exact(2) {
        let a = [node[0], node[1]];
        let ac = [node[0].conj(), node[1].conj()];
        c.extend(cubic_form(a, a, ac));
    }
    Ok(inner(&pair.w, &c))
}

/// `Re <w, C> / (2 omega_0^2)` with `omega_0 = beta + Im lambda`.
pub fn first_lyapunov(lambda: Complex64, p: &RingParams) -> Result<f64> {
    let omega0 = p.beta + lambda.im;
    if omega0.abs() <= 1e-14 * p.beta.max(1.0) {
        return Err(Error::Degenerate(format!("onset frequency vanishes at lambda = {lambda}")));
    }
    Ok(cubic_inner_product(lambda, p)?.re / (2.0 * omega0 * omega0))
}

/// Cubic coefficient `-8 (1 - (1+s)^2) / (N (1 - (1+s)^(2/N)))` of the ring
/// whose closing link has strength `1 + s`; evaluated through `expm1` so the
/// `s -> 0` limit `-8` is exact.
pub fn inhom_ring_lyapunov(n: usize, s: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("ring length {n} must be at least 2")));
    }
    if !(s.is_finite() && s > 0.0) {
        return Err(Error::InvalidParameter(format!("strength increment s = {s} must be positive")));
    }
    let x = 2.0 * s.ln_1p();
    Ok(-8.0 * x.exp_m1() / (n as f64 * (x / n as f64).exp_m1()))
}

/// One branch per root of `chi`, sorted by `alpha_crit` (ties by `k`).
pub fn hopf_sequence(p: &RingParams) -> Result<Vec<HopfBranch>> {
    let sp = spectrum_exact(p, DEFAULT_RESIDUAL_TOL)?;
    let labels = mode_labels(&sp.eigenvalues);
    let mut out: Vec<HopfBranch> = sp
        .eigenvalues
        .iter()
        .zip(&sp.classes)
        .zip(&labels)
        .map(|((&lambda, &class), &k)| HopfBranch {
            index_k: k,
            eigenvalue: lambda,
            class,
            alpha_crit: -lambda.re,
            omega_onset: p.beta + lambda.im,
            profile: power_profile(lambda, p.n_osc),
            lyapunov_l1: first_lyapunov(lambda, p).ok(),
            resonance: resonance_class(p.n_osc, p.shortcut_from, k),
        })
        .collect();
    out.sort_by(|a, b| a.alpha_crit.total_cmp(&b.alpha_crit).then(a.index_k.cmp(&b.index_k)));
    Ok(out)
}

/// Branch with mode label `k`.
pub fn branch(p: &RingParams, k: usize) -> Result<HopfBranch> {
    hopf_sequence(p)?
        .into_iter()
        .find(|b| b.index_k == k)
        .ok_or_else(|| Error::InvalidParameter(format!("branch index {k} must be below {}", p.n_osc)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assign::match_multisets;
    use crate::linalg::eigenvalues;
    use crate::spectral::unit_root;

    fn rp(n: usize, l: usize, s: f64, a: f64, b: f64) -> RingParams {
        RingParams::new(n, l, s, a, b).unwrap()
    }

    #[test]
    fn equilibrium_spectrum_matches_dense() {
        for s in [0.0, 0.3, 4.0] {
            let p = rp(9, 4, s, -0.2, 1.3);
            let a = equilibrium_spectrum(&p).unwrap();
            let d = eigenvalues(&equilibrium_matrix(&p)).unwrap();
            assert!(match_multisets(&a, &d).max_distance() < 1e-9);
        }
        let p = rp(6, 2, 0.0, 0.0, 1.0);
        let expect: Vec<Complex64> = (0..6)
            .flat_map(|k| [Complex64::new(0.0, 1.0) + unit_root(6, k), Complex64::new(0.0, -1.0) + unit_root(6, k)])
            .collect();
        assert!(match_multisets(&equilibrium_spectrum(&p).unwrap(), &expect).max_distance() < 1e-12);
    }

    #[test]
    fn critical_plastic_ring() {
        let p = rp(3, 2, 1.0, -1.324717957244746, 1.0);
        let max_re = equilibrium_spectrum(&p).unwrap().iter().map(|z| z.re).fold(f64::MIN, f64::max);
        assert!(max_re.abs() < 1e-12);
    }

    #[test]
    fn zero_stability() {
        let z = is_zero_stable(&rp(10, 3, 0.0, -1.1, 1.0)).unwrap();
        assert!(z.is_stable() && (z.margin - 0.1).abs() < 1e-12);
        assert_eq!(is_zero_stable(&rp(10, 3, 0.0, -1.0, 1.0)).unwrap().verdict, Verdict::Marginal);
        assert_eq!(is_zero_stable(&rp(20, 6, 0.1, -1.004, 1.0)).unwrap().verdict, Verdict::Unstable);
    }

    #[test]
    fn s0_sequence() {
        let beta = 2.5;
        let seq = hopf_sequence(&rp(20, 6, 0.0, 0.0, beta)).unwrap();
        assert_eq!(seq.len(), 20);
        assert_eq!(seq[0].index_k, 0);
        assert!((seq[0].alpha_crit + 1.0).abs() < 1e-14 && (seq[0].omega_onset - beta).abs() < 1e-14);
        for b in &seq {
            let th = 2.0 * PI * b.index_k as f64 / 20.0;
            assert!((b.alpha_crit + th.cos()).abs() < 1e-12);
            assert!((b.omega_onset - beta - th.sin()).abs() < 1e-12);
            assert!((b.lyapunov_l1.unwrap() + 8.0 / (2.0 * b.omega_onset.powi(2))).abs() < 1e-10);
        }
        assert!(seq.windows(2).all(|w| w[0].alpha_crit <= w[1].alpha_crit));
        let seq3 = hopf_sequence(&rp(3, 2, 1.0, 0.0, 1.0)).unwrap();
        assert!((seq3[0].alpha_crit + 1.3247179572).abs() < 1e-9);
        assert_eq!(seq3[0].class, RootClass::LeadingReal);
    }

    #[test]
    fn profiles_and_localization() {
        let p = rp(20, 6, 5.0, 0.0, 1.0);
        for b in hopf_sequence(&p).unwrap() {
            assert_eq!(b.profile[0], Complex64::new(1.0, 0.0));
            let g = coupling_matrix(&p).map(|x| Complex64::new(x, 0.0));
            let bv = nalgebra::DVector::from_vec(b.profile.clone());
            let res = (&g * &bv - &bv * b.eigenvalue).camax();
            assert!(res <= 1e-10 * bv.camax());
        }
        let lead = leading_real_eigenvalue(&p).unwrap();
        let b = eigenvector_b(Complex64::new(lead, 0.0), &p).unwrap();
        let ratio = b[19].norm() / b[0].norm();
        assert!((ratio - lead.powi(19)).abs() < 1e-9 * ratio);
        let outer = 5f64.powf(1.0 / 15.0).powi(19);
        assert!((outer - 7.7).abs() < 0.1);
        assert!(eigenvector_b(Complex64::new(1.0, 0.0), &rp(20, 6, 0.0, 0.0, 1.0)).unwrap().iter().all(|x| *x == Complex64::new(1.0, 0.0)));
        assert!(matches!(eigenvector_b(Complex64::new(0.5, 0.0), &p), Err(Error::InvalidEigenvalue { .. })));
    }

    #[test]
    fn resonance_examples() {
        assert_eq!(resonance_class(100, 26, 4).kind, ResonanceKind::Resonant);
        assert_eq!(resonance_class(100, 26, 4).phase_mismatch, 0.0);
        let a = resonance_class(100, 26, 2);
        assert_eq!(a.kind, ResonanceKind::Antiphase);
        assert!((a.phase_mismatch - PI).abs() < 1e-15);
        assert_eq!(resonance_class(20, 6, 0).kind, ResonanceKind::Resonant);
        assert_eq!(resonance_class(20, 6, 1).kind, ResonanceKind::Generic);
        assert_eq!(resonance_class(20, 6, 2).kind, ResonanceKind::Antiphase);
    }

    #[test]
    fn adjoint_normalization_and_residual() {
        for s in [0.1, 5.0] {
            let p = rp(20, 6, s, 0.3, 1.7);
            let a = equilibrium_matrix(&p).map(|x| Complex64::new(x, 0.0));
            for b in hopf_sequence(&p).unwrap() {
                let pair = adjoint_pair(b.eigenvalue, &p).unwrap();
                assert!((inner(&pair.w, &pair.v) - 1.0).norm() < 1e-10);
                let w = nalgebra::DVector::from_vec(pair.w.clone());
                let target = (p.mu() + b.eigenvalue).conj();
                let res = (a.transpose() * &w - &w * target).norm();
                assert!(res <= 1e-9 * w.norm().max(1.0), "residual {res}");
            }
        }
        let p0 = rp(20, 6, 0.0, 0.0, 1.0);
        let pair = adjoint_pair(Complex64::new(1.0, 0.0), &p0).unwrap();
        assert!((pair.kappa - 40.0).norm() < 1e-12);
    }

    #[test]
    fn cubic_coefficient() {
        let p0 = rp(20, 6, 0.0, 0.0, 1.0);
        for k in 0..20 {
            let c = cubic_inner_product(unit_root(20, k), &p0).unwrap();
            assert!((c + 8.0).norm() < 1e-12);
        }
        for s in [0.1, 5.0, 100.0] {
            let p = rp(20, 6, s, 0.0, 1.0);
            for b in hopf_sequence(&p).unwrap() {
                let closed = cubic_inner_product(b.eigenvalue, &p).unwrap();
                let direct = cubic_inner_product_direct(b.eigenvalue, &p).unwrap();
                assert!((closed - direct).norm() <= 1e-9 * closed.norm().max(1.0));
            }
        }
        let p5 = rp(20, 6, 5.0, 0.0, 1.0);
        let lead = Complex64::new(leading_real_eigenvalue(&p5).unwrap(), 0.0);
        assert!(cubic_inner_product(lead, &p5).unwrap().re < -8.0);
    }

    #[test]
    fn lyapunov_values() {
        let p = rp(20, 6, 0.0, 0.0, 2.5);
        assert!((first_lyapunov(Complex64::new(1.0, 0.0), &p).unwrap() + 0.64).abs() < 1e-12);
        let big = rp(20, 6, 0.0, 0.0, 1e6);
        let l = first_lyapunov(Complex64::new(1.0, 0.0), &big).unwrap();
        assert!(l < 0.0 && l > -1e-11);
        let p100 = rp(20, 6, 100.0, 0.0, 1.0);
        for b in hopf_sequence(&p100).unwrap() {
            assert!(b.lyapunov_l1.unwrap() < 0.0);
        }
    }

    #[test]
    fn inhomogeneous_ring_coefficient() {
        let v = inhom_ring_lyapunov(3, 1.0).unwrap();
        assert!((v - 24.0 / (3.0 * (1.0 - 2f64.powf(2.0 / 3.0)))).abs() < 1e-12);
        assert!((v + 13.6193).abs() < 1e-4);
        assert!((inhom_ring_lyapunov(20, 1e-12).unwrap() + 8.0).abs() < 1e-9);
        for n in [3, 20, 100] {
            for s in [0.01, 1.0, 100.0] {
                assert!(inhom_ring_lyapunov(n, s).unwrap() < 0.0);
            }
        }
        assert!(inhom_ring_lyapunov(3, 0.0).is_err());
    }
}
