//! Direct integration of the ring systems and measurement of the attractor
//! that a trajectory settles on.

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{self, IntegratorOptions, IntegratorStats};
use crate::par;
use crate::ring::{from_real, RingState, System};

/// Upper bound on the default transient, in time units.
pub const MAX_TRANSIENT: f64 = 1e5;
/// Relative amplitude deviation that counts as leaving an orbit.
pub const ESCAPE_THRESHOLD: f64 = 0.1;
/// Nodes below this modulus on the whole tail carry no usable phase.
const PHASE_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationTrace {
    /// Strictly increasing; the first entry is the initial time.
    pub times: Vec<f64>,
    pub states: Vec<RingState>,
    pub params: System,
    pub integrator_stats: IntegratorStats,
}

impl SimulationTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> &RingState {
        self.states.last().expect("trace holds at least the initial state")
    }

    /// CSV with header `t,re_z1,im_z1,...,re_zN,im_zN`.
    pub fn to_csv(&self) -> String {
        let n = self.params.dim();
        let mut s = String::from("t");
        for j in 1..=n {
            let _ = write!(s, ",re_z{j},im_z{j}");
        }
        s.push('\n');
        for (t, st) in self.times.iter().zip(&self.states) {
            let _ = write!(s, "{t:.12e}");
            for z in &st.z {
                let _ = write!(s, ",{:.12e},{:.12e}", z.re, z.im);
            }
            s.push('\n');
        }
        s
    }
}

/// Integrates `system` from `state0` to `state0.t + t_final`, sampling
/// `samples` equally spaced states after the initial one.
pub fn integrate(
    system: &System,
    state0: &RingState,
    t_final: f64,
    samples: usize,
    opts: &IntegratorOptions,
) -> Result<SimulationTrace> {
    system.validate()?;
    opts.validate()?;
    if !(t_final > 0.0 && t_final.is_finite()) {
        return Err(Error::InvalidParameter(format!("t_final must be positive, got {t_final}")));
    }
    if samples == 0 {
        return Err(Error::InvalidParameter("at least one output sample is required".into()));
    }
    let n = system.dim();
    if state0.z.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: state0.z.len() });
    }
    let net = system.network();
    let t0 = state0.t;
    let dt = t_final / samples as f64;
    let t_out: Vec<f64> = (1..=samples).map(|i| if i == samples { t0 + t_final } else { t0 + dt * i as f64 }).collect();
    let (ys, stats) = ode::integrate(|_, x, out| net.rhs_real(x, out), t0, &state0.to_real(), &t_out, opts)?;

    let mut times = Vec::with_capacity(samples + 1);
    let mut states = Vec::with_capacity(samples + 1);
    times.push(t0);
    states.push(state0.clone());
    for (t, y) in t_out.into_iter().zip(ys) {
        times.push(t);
        states.push(RingState { z: from_real(&y), t });
    }
    Ok(SimulationTrace { times, states, params: *system, integrator_stats: stats })
}

/// Independent trajectories from several initial states, fanned out over
/// the worker pool. Output order follows `states0`.
pub fn integrate_many(
    system: &System,
    states0: &[RingState],
    t_final: f64,
    samples: usize,
    opts: &IntegratorOptions,
) -> Vec<Result<SimulationTrace>> {
    par::map(states0, |s| integrate(system, s, t_final, samples, opts))
}

/// Transient length from the spectral margin of the attractor: `200/|margin|`,
/// capped at [`MAX_TRANSIENT`].
pub fn default_transient(margin: f64) -> f64 {
    if margin == 0.0 {
        return MAX_TRANSIENT;
    }
    (200.0 / margin.abs()).min(MAX_TRANSIENT)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasuredOrbit {
    /// Mean `|z_j|` over the tail window.
    pub amplitude_profile: Vec<f64>,
    /// Least-squares slope of the unwrapped phase of `phase_node`.
    pub frequency: f64,
    /// Zero-based node whose phase was tracked.
    pub phase_node: usize,
    pub transient_discarded: f64,
    /// Relative drift between the mean profiles of the two tail halves.
    pub drift: f64,
    pub converged: bool,
}

impl MeasuredOrbit {
    /// Largest deviation from `reference`, relative to its largest modulus.
    pub fn deviation_from(&self, reference: &[Complex64]) -> f64 {
        profile_deviation(&self.amplitude_profile, reference)
    }
}

/// `max_j | a_j - |v_j| | / max_j |v_j|`.
pub fn profile_deviation(amplitudes: &[f64], reference: &[Complex64]) -> f64 {
    let scale = reference.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let d = amplitudes.iter().zip(reference).map(|(a, v)| (a - v.norm()).abs()).fold(0.0, f64::max);
    if scale > 0.0 { d / scale } else { d }
}

/// Measures amplitude profile and rotation frequency on the part of the
/// trace after `transient` (relative to the first sample). Samples must be
/// dense enough that the tracked phase advances by less than pi between
/// consecutive samples.
pub fn measure_orbit(trace: &SimulationTrace, transient: f64, rel_tol: f64) -> Result<MeasuredOrbit> {
    if !(transient >= 0.0) || !(rel_tol > 0.0) {
        return Err(Error::InvalidParameter("transient must be >= 0 and rel_tol > 0".into()));
    }
    let t_start = trace.times[0] + transient;
    let first = trace.times.partition_point(|&t| t < t_start);
    let tail = &trace.states[first..];
    if tail.len() < 4 {
        return Err(Error::InvalidParameter(format!(
            "only {} samples after the transient; need at least 4",
            tail.len()
        )));
    }
    let n = trace.params.dim();
    let mean_profile = |w: &[RingState]| -> Vec<f64> {
        let mut acc = vec![0.0; n];
        for s in w {
            for (a, z) in acc.iter_mut().zip(&s.z) {
                *a += z.norm();
            }
        }
        acc.iter().map(|a| a / w.len() as f64).collect()
    };
    let profile = mean_profile(tail);
    let half = tail.len() / 2;
    let (p1, p2) = (mean_profile(&tail[..half]), mean_profile(&tail[half..]));
    let scale = p2.iter().cloned().fold(0.0, f64::max);
    let diff = p1.iter().zip(&p2).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let drift = if scale > 0.0 { diff / scale } else { diff };

    let usable = |j: usize| tail.iter().all(|s| s.z[j].norm() > PHASE_FLOOR);
    let node = if usable(0) {
        0
    } else {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| profile[b].total_cmp(&profile[a]));
        *order.iter().find(|&&j| usable(j)).ok_or(Error::PhaseUndefined)?
    };

    let times: Vec<f64> = trace.times[first..].to_vec();
    let mut phase = Vec::with_capacity(tail.len());
    let mut prev = tail[0].z[node].arg();
    let mut acc = prev;
    phase.push(acc);
    for s in &tail[1..] {
        let a = s.z[node].arg();
        let mut d = a - prev;
        d -= std::f64::consts::TAU * (d / std::f64::consts::TAU).round();
        acc += d;
        phase.push(acc);
        prev = a;
    }
    let frequency = ls_slope(&times, &phase);

    Ok(MeasuredOrbit {
        amplitude_profile: profile,
        frequency,
        phase_node: node,
        transient_discarded: transient,
        drift,
        converged: drift <= rel_tol,
    })
}

/// Least-squares slope of `y` against `x`.
fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Euclidean norm of a complex state.
pub fn state_norm(z: &[Complex64]) -> f64 {
    z.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}
