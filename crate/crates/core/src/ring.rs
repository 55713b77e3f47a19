//! Problem instances, states, right-hand sides and the large-s change of
//! variables.
//!
//! Indices are 1-based in documentation and I/O; storage is 0-based, so
//! node `j` lives at `z[j - 1]`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{add_block, mult_block, real_linear_block};

/// Ring of `n_osc` Stuart-Landau oscillators with a shortcut of strength
/// `shortcut_strength` from node `shortcut_from` into node `n_osc`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RingParams {
    pub n_osc: usize,
    pub shortcut_from: usize,
    pub shortcut_strength: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl RingParams {
    /// Validated constructor; `shortcut_from` must lie in `2..=n_osc-1`.
    pub fn new(n_osc: usize, shortcut_from: usize, shortcut_strength: f64, alpha: f64, beta: f64) -> Result<Self> {
        if shortcut_from == 1 {
            return Err(Error::InvalidParameter(
                "shortcut_from = 1 is reserved for the inhomogeneous-ring mode".into(),
            ));
        }
        Self::with_unit_link(n_osc, shortcut_from, shortcut_strength, alpha, beta)
    }

    /// Like [`RingParams::new`] but also admits `shortcut_from = 1`, where
    /// the shortcut merges with the ring link into node `n_osc`.
    pub fn with_unit_link(
        n_osc: usize,
        shortcut_from: usize,
        shortcut_strength: f64,
        alpha: f64,
        beta: f64,
    ) -> Result<Self> {
        let p = RingParams { n_osc, shortcut_from, shortcut_strength, alpha, beta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_osc < 3 {
            return Err(Error::InvalidParameter(format!("n_osc = {} must be at least 3", self.n_osc)));
        }
        if self.shortcut_from < 1 || self.shortcut_from > self.n_osc - 1 {
            return Err(Error::InvalidParameter(format!(
                "shortcut_from = {} must lie in 1..={}",
                self.shortcut_from,
                self.n_osc - 1
            )));
        }
        if !(self.shortcut_strength.is_finite() && self.shortcut_strength >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "shortcut_strength = {} must be finite and nonnegative",
                self.shortcut_strength
            )));
        }
        if !self.alpha.is_finite() {
            return Err(Error::InvalidParameter("alpha must be finite".into()));
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(Error::InvalidParameter(format!("beta = {} must be positive", self.beta)));
        }
        Ok(())
    }

    pub fn mu(&self) -> Complex64 {
        Complex64::new(self.alpha, self.beta)
    }

    /// Number of nodes `N - l + 1` on the cycle closed by the shortcut.
    pub fn tail_len(&self) -> usize {
        self.n_osc - self.shortcut_from + 1
    }

    pub fn with_alpha(&self, alpha: f64) -> Self {
        RingParams { alpha, ..*self }
    }

    pub fn with_strength(&self, s: f64) -> Self {
        RingParams { shortcut_strength: s, ..*self }
    }
}

/// Ring of `n_reduced` oscillators whose closing link has strength
/// `strength` instead of 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InhomRingParams {
    pub n_reduced: usize,
    pub strength: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl InhomRingParams {
    pub fn new(n_reduced: usize, strength: f64, alpha: f64, beta: f64) -> Result<Self> {
        let p = InhomRingParams { n_reduced, strength, alpha, beta };
        p.validate()?;
        Ok(p)
    }

    /// The cycle `l, l+1, ..., N` of a shortcut ring, relabelled `1..=n`.
    pub fn from_tail(p: &RingParams) -> Result<Self> {
        Self::new(p.tail_len(), p.shortcut_strength, p.alpha, p.beta)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_reduced < 2 {
            return Err(Error::InvalidParameter(format!(
                "n_reduced = {} must be at least 2",
                self.n_reduced
            )));
        }
        if !(self.strength.is_finite() && self.strength > 0.0) {
            return Err(Error::InvalidParameter(format!("strength = {} must be positive", self.strength)));
        }
        if !(self.alpha.is_finite() && self.beta.is_finite()) {
            return Err(Error::InvalidParameter("alpha and beta must be finite".into()));
        }
        Ok(())
    }

    pub fn mu(&self) -> Complex64 {
        Complex64::new(self.alpha, self.beta)
    }

    pub fn with_alpha(&self, alpha: f64) -> Self {
        InhomRingParams { alpha, ..*self }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RingState {
    pub z: Vec<Complex64>,
    pub t: f64,
}

impl RingState {
    pub fn new(z: Vec<Complex64>, t: f64) -> Result<Self> {
        if !t.is_finite() || z.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::InvalidParameter("state has non-finite entries".into()));
        }
        Ok(RingState { z, t })
    }

    pub fn zeros(n: usize) -> Self {
        RingState { z: vec![Complex64::new(0.0, 0.0); n], t: 0.0 }
    }

    /// Interleaved `(Re z_1, Im z_1, ..., Re z_N, Im z_N)`.
    pub fn to_real(&self) -> Vec<f64> {
        to_real(&self.z)
    }

    pub fn from_real(x: &[f64], t: f64) -> Result<Self> {
        if !x.len().is_multiple_of(2) {
            return Err(Error::InvalidParameter("real state must have even length".into()));
        }
        Self::new(from_real(x), t)
    }
}

pub fn to_real(z: &[Complex64]) -> Vec<f64> {
    z.iter().flat_map(|c| [c.re, c.im]).collect()
}

pub fn from_real(x: &[f64]) -> Vec<Complex64> {
    x.chunks_exact(2).map(|w| Complex64::new(w[0], w[1])).collect()
}

fn check_len(z: &[Complex64], n: usize) -> Result<()> {
    if z.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: z.len() });
    }
    Ok(())
}

fn local(mu: Complex64, z: Complex64) -> Complex64 {
    (mu - z.norm_sqr()) * z
}

/// Derivative of the full shortcut ring.
pub fn rhs_full(state: &RingState, p: &RingParams) -> Result<Vec<Complex64>> {
    p.validate()?;
    let z = &state.z;
    check_len(z, p.n_osc)?;
    let n = p.n_osc;
    let mu = p.mu();
    let mut dz: Vec<Complex64> = (0..n - 1).map(|j| local(mu, z[j]) + z[j + 1]).collect();
    dz.push(local(mu, z[n - 1]) + z[0] + p.shortcut_strength * z[p.shortcut_from - 1]);
    Ok(dz)
}

/// Derivative of the shortcut ring with the link from node 1 into node N
/// removed.
pub fn rhs_truncated_large_s(state: &RingState, p: &RingParams) -> Result<Vec<Complex64>> {
    p.validate()?;
    let z = &state.z;
    check_len(z, p.n_osc)?;
    let n = p.n_osc;
    let mu = p.mu();
    let mut dz: Vec<Complex64> = (0..n - 1).map(|j| local(mu, z[j]) + z[j + 1]).collect();
    dz.push(local(mu, z[n - 1]) + p.shortcut_strength * z[p.shortcut_from - 1]);
    Ok(dz)
}

/// Derivative of the inhomogeneous ring.
pub fn rhs_inhom(state: &RingState, p: &InhomRingParams) -> Result<Vec<Complex64>> {
    p.validate()?;
    let z = &state.z;
    check_len(z, p.n_reduced)?;
    let n = p.n_reduced;
    let mu = p.mu();
    let mut dz: Vec<Complex64> = (0..n - 1).map(|j| local(mu, z[j]) + z[j + 1]).collect();
    dz.push(local(mu, z[n - 1]) + p.strength * z[0]);
    Ok(dz)
}

/// Scale factor `s^(-1/(N-l+1))` of the large-s change of variables.
pub fn large_s_scale(p: &RingParams) -> Result<f64> {
    p.validate()?;
    if p.shortcut_strength == 0.0 {
        return Err(Error::SingularTransform);
    }
    Ok(p.shortcut_strength.powf(-1.0 / p.tail_len() as f64))
}

/// `y_j = scale^j z_j`.
pub fn large_s_transform(state: &RingState, p: &RingParams) -> Result<RingState> {
    check_len(&state.z, p.n_osc)?;
    let c = large_s_scale(p)?;
    let z = state.z.iter().enumerate().map(|(i, &zj)| zj * c.powi(i as i32 + 1)).collect();
    Ok(RingState { z, t: state.t })
}

/// `z_j = scale^(-j) y_j`.
pub fn large_s_inverse(state: &RingState, p: &RingParams) -> Result<RingState> {
    check_len(&state.z, p.n_osc)?;
    let c = large_s_scale(p)?;
    let z = state.z.iter().enumerate().map(|(i, &yj)| yj / c.powi(i as i32 + 1)).collect();
    Ok(RingState { z, t: state.t })
}

/// Which of the three dynamical systems to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum System {
    Full(RingParams),
    Truncated(RingParams),
    Inhom(InhomRingParams),
}

/// One directed coupling term: node `to` receives `weight * z[from]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    pub to: usize,
    pub from: usize,
    pub weight: f64,
}

/// Generic linear-coupling network of identical Stuart-Landau nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub n: usize,
    pub mu: Complex64,
    pub links: Vec<Link>,
}

impl System {
    pub fn dim(&self) -> usize {
        match self {
            System::Full(p) | System::Truncated(p) => p.n_osc,
            System::Inhom(p) => p.n_reduced,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            System::Full(p) | System::Truncated(p) => p.validate(),
            System::Inhom(p) => p.validate(),
        }
    }

    pub fn rhs(&self, state: &RingState) -> Result<Vec<Complex64>> {
        match self {
            System::Full(p) => rhs_full(state, p),
            System::Truncated(p) => rhs_truncated_large_s(state, p),
            System::Inhom(p) => rhs_inhom(state, p),
        }
    }

    pub fn alpha(&self) -> f64 {
        match self {
            System::Full(p) | System::Truncated(p) => p.alpha,
            System::Inhom(p) => p.alpha,
        }
    }

    pub fn beta(&self) -> f64 {
        match self {
            System::Full(p) | System::Truncated(p) => p.beta,
            System::Inhom(p) => p.beta,
        }
    }

    pub fn with_alpha(&self, alpha: f64) -> System {
        match self {
            System::Full(p) => System::Full(p.with_alpha(alpha)),
            System::Truncated(p) => System::Truncated(p.with_alpha(alpha)),
            System::Inhom(p) => System::Inhom(p.with_alpha(alpha)),
        }
    }

    pub fn network(&self) -> Network {
        let n = self.dim();
        let mut links: Vec<Link> = (0..n - 1).map(|j| Link { to: j, from: j + 1, weight: 1.0 }).collect();
        let mu = match self {
            System::Full(p) => {
                links.push(Link { to: n - 1, from: 0, weight: 1.0 });
                links.push(Link { to: n - 1, from: p.shortcut_from - 1, weight: p.shortcut_strength });
                p.mu()
            }
            System::Truncated(p) => {
                links.push(Link { to: n - 1, from: p.shortcut_from - 1, weight: p.shortcut_strength });
                p.mu()
            }
            System::Inhom(p) => {
                links.push(Link { to: n - 1, from: 0, weight: p.strength });
                p.mu()
            }
        };
        Network { n, mu, links }
    }
}

impl Network {
    /// Real-form derivative on interleaved coordinates, written into `out`.
    pub fn rhs_real(&self, x: &[f64], out: &mut [f64]) {
        let (a, b) = (self.mu.re, self.mu.im);
        for j in 0..self.n {
            let (p, q) = (x[2 * j], x[2 * j + 1]);
            let r2 = p * p + q * q;
            out[2 * j] = (a - r2) * p - b * q;
            out[2 * j + 1] = b * p + (a - r2) * q;
        }
        for l in &self.links {
            out[2 * l.to] += l.weight * x[2 * l.from];
            out[2 * l.to + 1] += l.weight * x[2 * l.from + 1];
        }
    }

    /// The `n x n` coupling matrix (row `to`, column `from`).
    pub fn coupling_matrix(&self) -> DMatrix<f64> {
        let mut g = DMatrix::zeros(self.n, self.n);
        for l in &self.links {
            g[(l.to, l.from)] += l.weight;
        }
        g
    }

    /// Real `2n x 2n` linearization at `z` in a frame rotating with
    /// frequency `omega`: `dz_j -> (mu - i omega - 2|z_j|^2) dz_j - z_j^2 conj(dz_j)`
    /// plus the coupling.
    pub fn linearization(&self, z: &[Complex64], omega: f64) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(2 * self.n, 2 * self.n);
        let shift = self.mu - Complex64::new(0.0, omega);
        for (j, &zj) in z.iter().enumerate() {
            add_block(&mut m, j, j, real_linear_block(shift - 2.0 * zj.norm_sqr(), -zj * zj));
        }
        for l in &self.links {
            add_block(&mut m, l.to, l.from, mult_block(Complex64::new(l.weight, 0.0)));
        }
        m
    }
}
