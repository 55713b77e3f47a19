//! Adaptive Dormand-Prince 5(4) integrator with output at prescribed times.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step; `None` picks one from the derivative scale.
    pub h0: Option<f64>,
    pub max_steps: usize,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions { rtol: 1e-9, atol: 1e-12, h0: None, max_steps: 10_000_000 }
    }
}

impl IntegratorOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0 && self.atol > 0.0 && self.rtol.is_finite() && self.atol.is_finite()) {
            return Err(Error::InvalidParameter("integrator tolerances must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct IntegratorStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
    pub rtol: f64,
    pub atol: f64,
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order weights minus fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrates `y' = f(t, y)` from `t0` and returns the state at every time
/// in `t_out` (strictly increasing, all `> t0`). Steps are clipped to land
/// on the output times exactly.
pub fn integrate<F>(mut f: F, t0: f64, y0: &[f64], t_out: &[f64], opts: &IntegratorOptions) -> Result<(Vec<Vec<f64>>, IntegratorStats)>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    opts.validate()?;
    if t_out.windows(2).any(|w| !(w[1] > w[0])) || t_out.first().is_some_and(|&t| !(t > t0)) {
        return Err(Error::InvalidParameter("output times must be strictly increasing and after t0".into()));
    }
    let n = y0.len();
    let mut stats = IntegratorStats { rtol: opts.rtol, atol: opts.atol, ..Default::default() };
    let mut y = y0.to_vec();
    let mut t = t0;
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
    let mut tmp = vec![0.0; n];
    let mut ynew = vec![0.0; n];
    f(t, &y, &mut k[0]);
    stats.rhs_evals += 1;
    let scale = |y: &[f64], i: usize| opts.atol + opts.rtol * y[i].abs();
    let mut h = match opts.h0 {
        Some(h) => h,
        None => {
            let d0 = (0..n).map(|i| (y[i] / scale(&y, i)).powi(2)).sum::<f64>().sqrt();
            let d1 = (0..n).map(|i| (k[0][i] / scale(&y, i)).powi(2)).sum::<f64>().sqrt();
            if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 }
        }
    };
    let mut out = Vec::with_capacity(t_out.len());
    for &target in t_out {
        while t < target {
            if stats.accepted + stats.rejected >= opts.max_steps {
                return Err(Error::Integrator { t, reason: "step budget exhausted".into() });
            }
            let remaining = target - t;
            let landing = h >= remaining;
            let step = if landing { remaining } else { h };
            if step <= 4.0 * f64::EPSILON * t.abs().max(1.0) && !landing {
                return Err(Error::Integrator { t, reason: format!("step size underflow (h = {step:e})") });
            }
            for s in 1..7 {
                for i in 0..n {
                    let mut acc = y[i];
                    for (j, kj) in k.iter().enumerate().take(s) {
                        acc += step * A[s][j] * kj[i];
                    }
                    tmp[i] = acc;
                }
                let (_, tail) = k.split_at_mut(s);
                f(t + C[s] * step, &tmp, &mut tail[0]);
                stats.rhs_evals += 1;
            }
            // Stage 7 is evaluated at the fifth-order solution; on acceptance
            // it becomes stage 1 of the next step.
            ynew.copy_from_slice(&tmp);
            let mut err = 0.0;
            for i in 0..n {
                let e: f64 = (0..7).map(|s| E[s] * k[s][i]).sum::<f64>() * step;
                let sc = opts.atol + opts.rtol * y[i].abs().max(ynew[i].abs());
                err += (e / sc).powi(2);
            }
            let err = (err / n.max(1) as f64).sqrt();
            if !err.is_finite() {
                if ynew.iter().any(|v| !v.is_finite()) && step < 1e-12 {
                    return Err(Error::Integrator { t, reason: "non-finite state".into() });
                }
                h = step * 0.1;
                stats.rejected += 1;
                continue;
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if err <= 1.0 {
                t = if landing { target } else { t + step };
                std::mem::swap(&mut y, &mut ynew);
                let (first, rest) = k.split_at_mut(1);
                first[0].copy_from_slice(&rest[5]);
                stats.accepted += 1;
                if y.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Integrator { t, reason: "non-finite state".into() });
                }
                // A clipped landing step says nothing about the natural step.
                if !landing || factor < 1.0 {
                    h = step * factor;
                }
            } else {
                h = step * factor.min(1.0);
                stats.rejected += 1;
            }
        }
        out.push(y.clone());
    }
    Ok((out, stats))
}
