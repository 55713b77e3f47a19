//! Spectra of the coupling matrix `G_s` and of the reduced matrix `H_s`.
//!
//! Every eigenvalue of `G_s` is a root of the trinomial
//! `chi(lambda) = lambda^N - s lambda^(l-1) - 1`, with eigenvector
//! `(1, lambda, ..., lambda^(N-1))`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::assign::{match_multisets, min_cost_assignment};
use crate::error::{Error, Result};
use crate::linalg::{eigenvalues, sort_complex};
use crate::ring::{RingParams, System};

pub const DEFAULT_RESIDUAL_TOL: f64 = 1e-12;
pub const ORACLE_TOL: f64 = 1e-8;

const ABERTH_MAX_ITER: usize = 2000;
const NEWTON_POLISH_ITER: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RootClass {
    UnitCircleModulated,
    InnerCircle,
    OuterCircle,
    LeadingReal,
}

impl RootClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            RootClass::UnitCircleModulated => "unit-circle-modulated",
            RootClass::InnerCircle => "inner-circle",
            RootClass::OuterCircle => "outer-circle",
            RootClass::LeadingReal => "leading-real",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    /// Sorted by `(Re, Im)`.
    pub eigenvalues: Vec<Complex64>,
    /// `|chi(lambda)|` per root.
    pub residuals: Vec<f64>,
    pub classes: Vec<RootClass>,
    pub eigenvectors: Option<Vec<Vec<Complex64>>>,
}

impl SpectrumResult {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn count(&self, class: RootClass) -> usize {
        self.classes.iter().filter(|&&c| c == class).count()
    }

    pub fn leading_index(&self) -> usize {
        self.classes.iter().position(|&c| c == RootClass::LeadingReal).expect("leading root is always labelled")
    }

    /// Fills `eigenvectors` with the profiles `(1, lambda, ..., lambda^(N-1))`.
    pub fn with_eigenvectors(mut self) -> Self {
        let n = self.len();
        self.eigenvectors = Some(self.eigenvalues.iter().map(|&l| power_profile(l, n)).collect());
        self
    }
}

/// Zero eigenvalue multiplicity and nonzero eigenvalues of `H_s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedSpectrum {
    pub zero_multiplicity: usize,
    pub nonzero_eigenvalues: Vec<Complex64>,
}

/// Leading-order and first-order large-s approximations, indexed by `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LargeSSpectrum {
    pub inner: Vec<Complex64>,
    pub outer: Vec<Complex64>,
    pub inner_leading: Vec<Complex64>,
    pub outer_leading: Vec<Complex64>,
}

impl LargeSSpectrum {
    pub fn labelled(&self) -> Vec<(Complex64, RootClass)> {
        let inner = self.inner.iter().map(|&l| (l, RootClass::InnerCircle));
        let outer = self.outer.iter().map(|&l| (l, RootClass::OuterCircle));
        inner.chain(outer).collect()
    }

    pub fn first_order(&self) -> Vec<Complex64> {
        self.inner.iter().chain(&self.outer).copied().collect()
    }

    pub fn leading_order(&self) -> Vec<Complex64> {
        self.inner_leading.iter().chain(&self.outer_leading).copied().collect()
    }
}

/// `k`-th of the `m`-th roots of unity.
pub fn unit_root(m: usize, k: usize) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * k as f64 / m as f64)
}

/// `(1, lambda, ..., lambda^(n-1))`.
pub fn power_profile(lambda: Complex64, n: usize) -> Vec<Complex64> {
    let mut b = Vec::with_capacity(n);
    let mut x = Complex64::new(1.0, 0.0);
    for _ in 0..n {
        b.push(x);
        x *= lambda;
    }
    b
}

/// `chi(lambda)`; the high power reuses `lambda^(l-1)`.
pub fn char_poly_eval(lambda: Complex64, p: &RingParams) -> Complex64 {
    let low = lambda.powu(p.shortcut_from as u32 - 1);
    let high = low * lambda.powu(p.tail_len() as u32);
    high - p.shortcut_strength * low - 1.0
}

pub fn char_poly_deriv(lambda: Complex64, p: &RingParams) -> Complex64 {
    let n = p.n_osc as f64;
    let l = p.shortcut_from;
    let top = n * lambda.powu(p.n_osc as u32 - 1);
    if l >= 2 {
        top - p.shortcut_strength * (l - 1) as f64 * lambda.powu(l as u32 - 2)
    } else {
        top
    }
}

/// Residual threshold `tol * max(1, |lambda|^N)`.
fn residual_scale(lambda: Complex64, n: usize) -> f64 {
    lambda.norm().powi(n as i32).max(1.0)
}

fn newton_polish(mut lambda: Complex64, p: &RingParams, tol: f64) -> Complex64 {
    let n = p.n_osc;
    let mut best = lambda;
    let mut best_res = char_poly_eval(lambda, p).norm() / residual_scale(lambda, n);
    for _ in 0..NEWTON_POLISH_ITER {
        let d = char_poly_deriv(lambda, p);
        if d.norm() == 0.0 {
            break;
        }
        let step = char_poly_eval(lambda, p) / d;
        lambda -= step;
        let res = char_poly_eval(lambda, p).norm() / residual_scale(lambda, n);
        if res < best_res {
            best = lambda;
            best_res = res;
        }
        if step.norm() <= 4.0 * f64::EPSILON * lambda.norm().max(1e-300) || (res <= tol && step.norm() < 1e-10) {
            break;
        }
    }
    best
}

fn aberth(p: &RingParams) -> Result<Vec<Complex64>> {
    let n = p.n_osc;
    let radius = p.shortcut_strength.powf(1.0 / p.tail_len() as f64).max(1.0);
    let mut z: Vec<Complex64> =
        (0..n).map(|k| Complex64::from_polar(radius, 2.0 * PI * (k as f64 + 0.37) / n as f64 + 0.11)).collect();
    for _ in 0..ABERTH_MAX_ITER {
        let mut max_rel = 0.0f64;
        for i in 0..n {
            let f = char_poly_eval(z[i], p);
            if f.norm() == 0.0 {
                continue;
            }
            let w = f / char_poly_deriv(z[i], p);
            let sum: Complex64 = (0..n).filter(|&j| j != i).map(|j| 1.0 / (z[i] - z[j])).sum();
            let step = w / (1.0 - w * sum);
            if step.re.is_finite() && step.im.is_finite() {
                z[i] -= step;
                max_rel = max_rel.max(step.norm() / z[i].norm().max(1e-300));
            }
        }
        if max_rel < 1e-14 {
            return Ok(z);
        }
    }
    // Hand the best estimates to Newton; the residual check decides.
    Ok(z)
}

/// Replaces each root by the mean of itself and the conjugate of its
/// conjugate-partner, so the multiset is exactly conjugation-closed.
fn symmetrize(roots: &mut [Complex64]) {
    let conj: Vec<Complex64> = roots.iter().map(|z| z.conj()).collect();
    let m = match_multisets(roots, &conj);
    let sym: Vec<Complex64> = (0..roots.len()).map(|i| 0.5 * (roots[i] + conj[m.partner[i]])).collect();
    roots.copy_from_slice(&sym);
}

/// Unique real root `>= 1` of `chi`; the largest real part in the spectrum.
///
/// With `m = N - l + 1` the root lies in `[max(1, s^(1/m)), (1 + s)^(1/m)]`.
pub fn leading_real_eigenvalue(p: &RingParams) -> Result<f64> {
    p.validate()?;
    let s = p.shortcut_strength;
    if s == 0.0 {
        return Ok(1.0);
    }
    let f = |x: f64| char_poly_eval(Complex64::new(x, 0.0), p).re;
    let df = |x: f64| char_poly_deriv(Complex64::new(x, 0.0), p).re;
    let m = p.tail_len() as f64;
    let (mut lo, mut hi) = (s.powf(1.0 / m).max(1.0), (1.0 + s).powf(1.0 / m));
    if f(lo) > 0.0 || f(hi) < 0.0 {
        return Err(Error::InvalidBracket { lo, hi });
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let fx = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - fx / df(x);
        let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if (next - x).abs() <= 2.0 * f64::EPSILON * x || hi - lo <= 2.0 * f64::EPSILON * hi {
            return Ok(next);
        }
        x = next;
    }
    Err(Error::RootNotConverged { estimate: Complex64::new(x, 0.0), residual: f(x).abs() })
}

/// All `N` roots of `chi`.
///
/// Roots are polished until `|chi| <= tol * max(1, |lambda|^N)`; the
/// multiset is conjugation-closed, sorted by `(Re, Im)` and labelled.
pub fn spectrum_exact(p: &RingParams, tol: f64) -> Result<SpectrumResult> {
    p.validate()?;
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol = {tol} must be positive")));
    }
    let n = p.n_osc;
    let mut roots: Vec<Complex64> = aberth(p)?.into_iter().map(|z| newton_polish(z, p, tol)).collect();
    symmetrize(&mut roots);
    let lead = leading_real_eigenvalue(p)?;
    let lead_idx = (0..n)
        .min_by(|&a, &b| (roots[a] - lead).norm().total_cmp(&(roots[b] - lead).norm()))
        .expect("n >= 3");
    roots[lead_idx] = Complex64::new(lead, 0.0);
    sort_complex(&mut roots);
    let mut residuals = Vec::with_capacity(n);
    for &r in &roots {
        let res = char_poly_eval(r, p).norm();
        if !(res <= tol * residual_scale(r, n)) {
            return Err(Error::RootNotConverged { estimate: r, residual: res });
        }
        residuals.push(res);
    }
    let classes = classify(&roots, p, lead);
    Ok(SpectrumResult { eigenvalues: roots, residuals, classes, eigenvectors: None })
}

fn classify(roots: &[Complex64], p: &RingParams, lead: f64) -> Vec<RootClass> {
    let n = roots.len();
    let mut classes = vec![RootClass::UnitCircleModulated; n];
    if p.shortcut_strength > 1.0 {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| roots[a].norm().total_cmp(&roots[b].norm()));
        for (rank, &i) in order.iter().enumerate() {
            classes[i] = if rank + 1 < p.shortcut_from { RootClass::InnerCircle } else { RootClass::OuterCircle };
        }
    }
    let lead_idx = (0..n)
        .min_by(|&a, &b| (roots[a] - lead).norm().total_cmp(&(roots[b] - lead).norm()))
        .expect("nonempty");
    classes[lead_idx] = RootClass::LeadingReal;
    classes
}

/// First-order small-s roots `gamma_k + (s/N) gamma_k^l`, indexed by `k`.
pub fn spectrum_small_s(p: &RingParams) -> Vec<Complex64> {
    let n = p.n_osc;
    (0..n)
        .map(|k| {
            let g = unit_root(n, k);
            g + p.shortcut_strength / n as f64 * g.powu(p.shortcut_from as u32)
        })
        .collect()
}

/// Inner (`l - 1` roots near radius `s^(-1/(l-1))`) and outer (`N - l + 1`
/// roots near radius `s^(1/(N-l+1))`) large-s approximations.
pub fn spectrum_large_s(p: &RingParams) -> Result<LargeSSpectrum> {
    p.validate()?;
    let s = p.shortcut_strength;
    if s <= 1.0 {
        return Err(Error::OutOfRegime { op: "spectrum_large_s", regime: "shortcut strength s > 1" });
    }
    let tau = 1.0 / s;
    let lm1 = p.shortcut_from - 1;
    let tail = p.tail_len();
    let inner_leading: Vec<Complex64> = (0..lm1)
        .map(|k| {
            Complex64::from_polar(tau.powf(1.0 / lm1 as f64), PI / lm1 as f64) * unit_root(lm1, k)
        })
        .collect();
    let inner = inner_leading
        .iter()
        .map(|&l0| l0 + l0.powu(tail as u32 + 1) * tau / lm1 as f64)
        .collect();
    let outer_leading: Vec<Complex64> =
        (0..tail).map(|k| tau.powf(-1.0 / tail as f64) * unit_root(tail, k)).collect();
    let outer = outer_leading.iter().map(|&l0| l0 + 1.0 / char_poly_deriv(l0, p)).collect();
    Ok(LargeSSpectrum { inner, outer, inner_leading, outer_leading })
}

/// Spectrum of `H_s`, the coupling matrix without the link from node 1
/// into node N.
pub fn spectrum_reduced(p: &RingParams) -> Result<ReducedSpectrum> {
    p.validate()?;
    if p.shortcut_strength == 0.0 {
        return Err(Error::Degenerate("reduced spectrum requires s > 0".into()));
    }
    if p.shortcut_from < 2 {
        return Err(Error::Degenerate("reduced spectrum requires shortcut_from >= 2".into()));
    }
    let tail = p.tail_len();
    let r = p.shortcut_strength.powf(1.0 / tail as f64);
    Ok(ReducedSpectrum {
        zero_multiplicity: p.shortcut_from - 1,
        nonzero_eigenvalues: (0..tail).map(|k| r * unit_root(tail, k)).collect(),
    })
}

/// Explicit `G_s`.
pub fn coupling_matrix(p: &RingParams) -> DMatrix<f64> {
    System::Full(*p).network().coupling_matrix()
}

/// Explicit `H_s`.
pub fn reduced_coupling_matrix(p: &RingParams) -> DMatrix<f64> {
    System::Truncated(*p).network().coupling_matrix()
}

/// Eigenvalues of the explicit `G_s` by a dense nonsymmetric solve.
pub fn dense_spectrum(p: &RingParams) -> Result<Vec<Complex64>> {
    p.validate()?;
    let mut ev = eigenvalues(&coupling_matrix(p))?;
    sort_complex(&mut ev);
    Ok(ev)
}

/// Mode label per eigenvalue: the `k` whose root of unity `gamma_{N,k}`
/// best matches `lambda / |lambda|` under an optimal one-to-one assignment.
pub fn mode_labels(eigenvalues: &[Complex64]) -> Vec<usize> {
    let n = eigenvalues.len();
    let cost: Vec<Vec<f64>> = eigenvalues
        .iter()
        .map(|&l| {
            let dir = if l.norm() > 0.0 { l / l.norm() } else { Complex64::new(1.0, 0.0) };
            (0..n).map(|k| (dir - unit_root(n, k)).norm()).collect()
        })
        .collect();
    min_cost_assignment(&cost)
}
