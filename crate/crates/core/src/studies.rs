//! Convergence studies of the asymptotic approximations against the exact
//! oracles, with fitted orders.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::assign::match_multisets;
use crate::error::{Error, Result};
use crate::floquet::approx_matrix_small_s;
use crate::linalg::eigenvalues;
use crate::orbits::{
    onset_guess, orbit_large_s, small_s_expansion, solve_relative_equilibrium, RelativeEquilibrium,
    DEFAULT_NEWTON_TOL,
};
use crate::par;
use crate::ring::{InhomRingParams, RingParams, System};
use crate::spectral::{spectrum_exact, spectrum_large_s, spectrum_small_s, DEFAULT_RESIDUAL_TOL};

pub const ORDER_THRESHOLD: f64 = 1.9;
pub const CORRECTION_GAIN_THRESHOLD: f64 = 5.0;

pub const SMALL_S_GRID: [f64; 5] = [1e-3, 3e-3, 1e-2, 3e-2, 1e-1];
pub const LARGE_S_GRID: [f64; 5] = [10.0, 30.0, 100.0, 300.0, 1000.0];
/// Largest eps of the first-node weight extrapolation.
pub const INHOM_EPS0: f64 = 2e-4;
pub const JOINT_GRID: [f64; 5] = [0.0025, 0.005, 0.01, 0.02, 0.04];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StudyPoint {
    /// Small parameter of the expansion.
    pub h: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub name: String,
    pub fitted_order: f64,
    pub threshold: f64,
    pub pass: bool,
    pub points: Vec<StudyPoint>,
}

impl StudyReport {
    fn new(name: &str, points: Vec<StudyPoint>, threshold: f64) -> Self {
        let fitted_order = fitted_order(&points);
        StudyReport { name: name.into(), fitted_order, threshold, pass: fitted_order >= threshold, points }
    }
}

/// A single scalar compared against a threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// Least-squares slope of `log error` against `log h`.
pub fn fitted_order(points: &[StudyPoint]) -> f64 {
    let xs: Vec<f64> = points.iter().map(|p| p.h.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.error.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn exact_roots(p: &RingParams) -> Result<Vec<Complex64>> {
    Ok(spectrum_exact(p, DEFAULT_RESIDUAL_TOL)?.eigenvalues)
}

/// Max matched distance between the first-order small-s roots and the
/// exact roots, against `h = s`.
pub fn eigen_small_s(n: usize, ell: usize, grid: &[f64]) -> Result<StudyReport> {
    let points = par::map(grid, |&s| -> Result<StudyPoint> {
        let p = RingParams::new(n, ell, s, 0.0, 1.0)?;
        let error = match_multisets(&spectrum_small_s(&p), &exact_roots(&p)?).max_distance();
        Ok(StudyPoint { h: s, error })
    });
    Ok(StudyReport::new("eigenvalues-small-s", points.into_iter().collect::<Result<_>>()?, ORDER_THRESHOLD))
}

/// Max matched distance between the first-order large-s roots and the
/// exact roots, against `h = 1/s`.
pub fn eigen_large_s(n: usize, ell: usize, grid: &[f64]) -> Result<StudyReport> {
    let points = par::map(grid, |&s| -> Result<StudyPoint> {
        let p = RingParams::new(n, ell, s, 0.0, 1.0)?;
        let approx = spectrum_large_s(&p)?.first_order();
        let error = match_multisets(&approx, &exact_roots(&p)?).max_distance();
        Ok(StudyPoint { h: 1.0 / s, error })
    });
    Ok(StudyReport::new("eigenvalues-large-s", points.into_iter().collect::<Result<_>>()?, ORDER_THRESHOLD))
}

/// Ratio of leading-order to first-order max matching error at strength `s`.
pub fn large_s_correction_gain(n: usize, ell: usize, s: f64) -> Result<CheckReport> {
    let p = RingParams::new(n, ell, s, 0.0, 1.0)?;
    let exact = exact_roots(&p)?;
    let ls = spectrum_large_s(&p)?;
    let lead = match_multisets(&ls.leading_order(), &exact).max_distance();
    let first = match_multisets(&ls.first_order(), &exact).max_distance();
    let value = lead / first;
    Ok(CheckReport {
        name: format!("large-s-correction-gain-s{s}"),
        value,
        threshold: CORRECTION_GAIN_THRESHOLD,
        pass: value >= CORRECTION_GAIN_THRESHOLD,
    })
}

/// Newton orbit at `alpha = alpha_crit(s) + eps` seeded from the expansion.
pub fn newton_small_s(p: &RingParams, k: usize, eps: f64) -> Result<RelativeEquilibrium> {
    let s = p.shortcut_strength;
    let e = small_s_expansion(p, k)?;
    let system = System::Full(p.with_alpha(e.alpha_crit(s) + eps));
    let profile: Vec<Complex64> = e.profile(eps, s).iter().map(|x| eps.sqrt() * x).collect();
    let guess = RelativeEquilibrium { profile, omega: e.omega(eps, s), system, residual: f64::NAN, branch_k: k };
    solve_relative_equilibrium(&guess, DEFAULT_NEWTON_TOL)
}

/// Newton oracle against the first-order small-s orbit expansion along
/// `eps = s = h`: max of the frequency error and the `v_1`-normalized
/// profile error.
pub fn orbit_small_s_study(n: usize, ell: usize, k: usize, grid: &[f64]) -> Result<StudyReport> {
    let points = par::map(grid, |&h| -> Result<StudyPoint> {
        let p = RingParams::new(n, ell, h, 0.0, 2.5)?;
        let e = small_s_expansion(&p, k)?;
        let sol = newton_small_s(&p, k, h)?;
        let v1 = sol.profile[0];
        let prof = e.profile(h, h);
        let dv = sol.profile.iter().zip(&prof).map(|(a, b)| (a / v1 - b).norm()).fold(0.0, f64::max);
        let dw = (sol.omega - e.omega(h, h)).abs();
        Ok(StudyPoint { h, error: dv.max(dw) })
    });
    Ok(StudyReport::new(
        &format!("orbit-small-s-k{k}"),
        points.into_iter().collect::<Result<_>>()?,
        ORDER_THRESHOLD,
    ))
}

/// Approximate variational matrix against the exact rotating-frame
/// Jacobian along `eps = s = h`, after optimal matching of the spectra.
pub fn floquet_small_s_study(n: usize, ell: usize, k: usize, grid: &[f64]) -> Result<StudyReport> {
    let points = par::map(grid, |&h| -> Result<StudyPoint> {
        let p = RingParams::new(n, ell, h, 0.0, 2.5)?;
        let sol = newton_small_s(&p, k, h)?;
        let exact = eigenvalues(&sol.system.network().linearization(&sol.profile, sol.omega))?;
        let approx = eigenvalues(&approx_matrix_small_s(&p, k, h)?)?;
        Ok(StudyPoint { h, error: match_multisets(&approx, &exact).max_distance() })
    });
    Ok(StudyReport::new(
        &format!("floquet-small-s-k{k}"),
        points.into_iter().collect::<Result<_>>()?,
        ORDER_THRESHOLD,
    ))
}

/// Normalized first-node weight `n |v_1|^2 / sum_j |v_j|^2` of the Newton
/// orbit of the inhomogeneous ring near onset of branch `k`, for each `eps`.
/// The ratio cancels the poorly conditioned amplitude direction near onset.
pub fn inhom_first_node_weights(n: usize, s: f64, k: usize, eps: &[f64]) -> Result<Vec<f64>> {
    let base = InhomRingParams::new(n, s, 0.0, 2.5)?;
    let alpha0 = orbit_large_s(&base, k, 0.0)?.alpha0;
    eps.iter()
        .map(|&e| {
            let sys = System::Inhom(base.with_alpha(alpha0 + e));
            let sol = solve_relative_equilibrium(&onset_guess(&sys, k)?, DEFAULT_NEWTON_TOL)?;
            let total: f64 = sol.profile.iter().map(|v| v.norm_sqr()).sum();
            Ok(n as f64 * sol.profile[0].norm_sqr() / total)
        })
        .collect()
}

/// Small-eps limit of the normalized first-node weight by quadratic extrapolation through
/// `eps0, eps0/2, eps0/4`, against the leading-order weight.
pub fn inhom_profile_limit(n: usize, s: f64, eps0: f64) -> Result<CheckReport> {
    let w = inhom_first_node_weights(n, s, 0, &[eps0, eps0 / 2.0, eps0 / 4.0])?;
    // Richardson twice: removes the O(eps) and O(eps^2) terms.
    let r1 = [2.0 * w[1] - w[0], 2.0 * w[2] - w[1]];
    let limit = (4.0 * r1[1] - r1[0]) / 3.0;
    let p = InhomRingParams::new(n, s, 0.0, 2.5)?;
    let formula = orbit_large_s(&p, 0, 0.0)?.v0_sq[0];
    let value = (limit - formula).abs();
    Ok(CheckReport { name: format!("inhom-first-node-n{n}-s{s}"), value, threshold: 1e-10, pass: value <= 1e-10 })
}

/// Every study and check used by the `compare` report, for `n` oscillators
/// with the shortcut from node `ell`.
pub fn standard_report(n: usize, ell: usize) -> Result<(Vec<StudyReport>, Vec<CheckReport>)> {
    if ell < 2 || ell >= n {
        return Err(Error::InvalidParameter(format!("shortcut node {ell} must lie in 2..{n}")));
    }
    // First side-band branch: exercises both frequency and phase errors.
    let k = 1;
    let studies = vec![
        eigen_small_s(n, ell, &SMALL_S_GRID)?,
        eigen_large_s(n, ell, &LARGE_S_GRID)?,
        orbit_small_s_study(n, ell, k, &JOINT_GRID)?,
        floquet_small_s_study(n, ell, k, &JOINT_GRID)?,
    ];
    let mut checks = vec![large_s_correction_gain(n, ell, 50.0)?];
    let tail = n - ell + 1;
    for s in [2.0, 5.0, 10.0] {
        checks.push(inhom_profile_limit(tail, s, INHOM_EPS0)?);
    }
    Ok((studies, checks))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fitted_order_of_exact_power() {
        let pts: Vec<StudyPoint> = [1e-3, 1e-2, 1e-1].iter().map(|&h| StudyPoint { h, error: 7.0 * h * h }).collect();
        assert!((fitted_order(&pts) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn small_s_eigen_order() {
        let r = eigen_small_s(20, 6, &SMALL_S_GRID).unwrap();
        assert!(r.pass, "order {}", r.fitted_order);
    }

    #[test]
    fn large_s_eigen_order_and_gain() {
        let r = eigen_large_s(20, 6, &LARGE_S_GRID).unwrap();
        assert!(r.pass, "order {}", r.fitted_order);
        assert!(large_s_correction_gain(20, 6, 50.0).unwrap().pass);
    }

    #[test]
    fn orbit_and_floquet_orders() {
        let o = orbit_small_s_study(20, 6, 1, &JOINT_GRID).unwrap();
        assert!(o.pass, "{o:?}");
        let f = floquet_small_s_study(20, 6, 1, &JOINT_GRID).unwrap();
        assert!(f.pass, "{f:?}");
    }

    #[test]
    fn inhom_limit_matches_weight() {
        for s in [2.0, 5.0, 10.0] {
            let c = inhom_profile_limit(15, s, INHOM_EPS0).unwrap();
            assert!(c.pass, "{c:?}");
        }
    }
}
