use std::fs;
use std::io::Write;
use std::path::PathBuf;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use shortcut_ring::floquet::{modulated_eckhaus_table, EckhausRow, Method, ThresholdOutcome};
use shortcut_ring::hopf::hopf_sequence;
use shortcut_ring::ode::{IntegratorOptions, IntegratorStats};
use shortcut_ring::orbits::{branch_eigenvalue, onset_guess, solve_relative_equilibrium, DEFAULT_NEWTON_TOL};
use shortcut_ring::simulate::{integrate, measure_orbit, MeasuredOrbit};
use shortcut_ring::spectral::{mode_labels, spectrum_exact, DEFAULT_RESIDUAL_TOL};
use shortcut_ring::studies::{standard_report, CheckReport, StudyReport};
use shortcut_ring::{InhomRingParams, RingParams, RingState, System};

use crate::args::{BranchesArgs, CompareArgs, EckhausArgs, Format, MethodArg, SimulateArgs, SpectrumArgs, SystemKind};
use crate::error::CliError;
use crate::presets::RingValues;

/// Where command output goes: a file under the output directory, or stdout.
pub struct Sink {
    dir: Option<PathBuf>,
}

impl Sink {
    pub fn new(dir: Option<PathBuf>) -> Self {
        Sink { dir }
    }

    fn has_dir(&self) -> bool {
        self.dir.is_some()
    }

    fn emit(&self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        match &self.dir {
            Some(d) => {
                fs::create_dir_all(d)?;
                let path = d.join(name);
                fs::write(&path, bytes)?;
                eprintln!("wrote {}", path.display());
            }
            None => std::io::stdout().lock().write_all(bytes)?,
        }
        Ok(())
    }
}

fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.into_error()))
}

fn json_bytes<T: Serialize + ?Sized>(v: &T) -> Result<Vec<u8>, CliError> {
    let mut b = serde_json::to_vec_pretty(v)?;
    b.push(b'\n');
    Ok(b)
}

fn ring_params(v: &RingValues) -> Result<RingParams, CliError> {
    Ok(RingParams::new(v.n, v.ell, v.s, v.alpha, v.beta)?)
}

fn build_system(kind: SystemKind, v: &RingValues) -> Result<System, CliError> {
    Ok(match kind {
        SystemKind::Full => System::Full(ring_params(v)?),
        SystemKind::Truncated => System::Truncated(ring_params(v)?),
        SystemKind::Inhom => System::Inhom(InhomRingParams::new(v.n, v.s, v.alpha, v.beta)?),
    })
}

#[derive(Serialize)]
struct SpectrumRow {
    k: usize,
    re: f64,
    im: f64,
    modulus: f64,
    class: &'static str,
    residual: f64,
}

pub fn spectrum(args: &SpectrumArgs, sink: &Sink) -> Result<(), CliError> {
    let p = ring_params(&args.ring.resolve()?)?;
    let sp = spectrum_exact(&p, DEFAULT_RESIDUAL_TOL)?;
    let labels = mode_labels(&sp.eigenvalues);
    let mut rows: Vec<SpectrumRow> = (0..sp.len())
        .map(|i| {
            let l = sp.eigenvalues[i];
            SpectrumRow { k: labels[i], re: l.re, im: l.im, modulus: l.norm(), class: sp.classes[i].as_str(), residual: sp.residuals[i] }
        })
        .collect();
    rows.sort_by_key(|r| r.k);
    match args.format {
        Format::Csv => sink.emit("spectrum.csv", &csv_bytes(&rows)?),
        Format::Json => sink.emit("spectrum.json", &json_bytes(&rows)?),
    }
}

#[derive(Serialize)]
struct BranchRow {
    k: usize,
    alpha_crit: f64,
    omega_onset: f64,
    l1: Option<f64>,
    resonance_kind: &'static str,
    phase_mismatch: f64,
}

pub fn branches(args: &BranchesArgs, sink: &Sink) -> Result<(), CliError> {
    let p = ring_params(&args.ring.resolve()?)?;
    let rows: Vec<BranchRow> = hopf_sequence(&p)?
        .into_iter()
        .map(|b| BranchRow {
            k: b.index_k,
            // `+ 0.0` prints a negative zero as `0.0`.
            alpha_crit: b.alpha_crit + 0.0,
            omega_onset: b.omega_onset,
            l1: b.lyapunov_l1,
            resonance_kind: b.resonance.kind.as_str(),
            phase_mismatch: b.resonance.phase_mismatch,
        })
        .collect();
    sink.emit("branches.csv", &csv_bytes(&rows)?)
}

#[derive(Serialize)]
struct EckhausCsvRow {
    k: usize,
    omega_onset: f64,
    alpha_crit: f64,
    alpha_star: Option<f64>,
    method: &'static str,
    status: String,
}

fn eckhaus_row(row: &EckhausRow, method: Method) -> EckhausCsvRow {
    let (alpha_star, status) = match (&row.outcome, &row.error) {
        (Some(ThresholdOutcome::Stabilizes(pt)), _) if pt.stable_from_onset => (Some(pt.alpha_star), "stable-from-onset".into()),
        (Some(ThresholdOutcome::Stabilizes(pt)), _) => (Some(pt.alpha_star), "stabilizes".into()),
        (Some(ThresholdOutcome::NeverStabilizes { .. }), _) => (None, "never-stabilizes".into()),
        (None, Some(e)) => (None, format!("error: {e}")),
        (None, None) => (None, "error".into()),
    };
    // `+ 0.0` prints a negative zero as `0.0`.
    EckhausCsvRow { k: row.branch_k, omega_onset: row.omega_onset, alpha_crit: row.alpha_crit + 0.0, alpha_star, method: method.as_str(), status }
}

pub fn eckhaus(args: &EckhausArgs, sink: &Sink) -> Result<(), CliError> {
    let values = args.ring.resolve()?;
    let system = build_system(args.system, &values)?;
    system.validate()?;
    if !(args.span > 0.0) {
        return Err(CliError::Usage(format!("--span must be positive, got {}", args.span)));
    }
    let method = match args.method.or(args.ring.preset_method()).unwrap_or(MethodArg::Exact) {
        MethodArg::Approx => Method::ApproxSmallS,
        MethodArg::ApproxLargeS => Method::ApproxLargeS,
        MethodArg::Exact => Method::ExactJacobian,
        MethodArg::Monodromy => Method::Monodromy,
    };
    let modes = match (method, system) {
        (Method::ApproxLargeS, System::Full(p) | System::Truncated(p)) => p.tail_len(),
        _ => system.dim(),
    };
    let ks: Vec<usize> = match &args.ks {
        Some(ks) => {
            if let Some(&bad) = ks.iter().find(|&&k| k >= modes) {
                return Err(CliError::Usage(format!("branch index {bad} must be below {modes}")));
            }
            ks.clone()
        }
        None => (0..modes).collect(),
    };
    let table = modulated_eckhaus_table(&system, &ks, method, args.span);
    for r in &table {
        if let Some(e) = &r.error {
            eprintln!("branch {}: {e}", r.branch_k);
        }
    }
    let mut rows: Vec<EckhausCsvRow> = table.iter().map(|r| eckhaus_row(r, method)).collect();
    rows.sort_by_key(|r| r.k);
    sink.emit("eckhaus.csv", &csv_bytes(&rows)?)
}

enum Init {
    Zero,
    Random,
    Branch(usize),
}

fn parse_init(s: &str) -> Result<Init, CliError> {
    match s {
        "zero" => Ok(Init::Zero),
        "random" => Ok(Init::Random),
        _ => s
            .strip_prefix("branch:k=")
            .and_then(|k| k.parse().ok())
            .map(Init::Branch)
            .ok_or_else(|| CliError::Usage(format!("--init must be zero, random or branch:k=K, got {s:?}"))),
    }
}

#[derive(Serialize)]
struct SimulationSummary {
    system: System,
    init: String,
    seed: Option<u64>,
    t_final: f64,
    samples: usize,
    integrator_stats: IntegratorStats,
    /// Newton oracle frequency of the seeded branch.
    predicted_frequency: Option<f64>,
    measured: Option<MeasuredOrbit>,
}

pub fn simulate(args: &SimulateArgs, sink: &Sink) -> Result<(), CliError> {
    let mut values = args.ring.resolve()?;
    let init = parse_init(&args.init)?;
    if !(args.t_final > 0.0 && args.t_final.is_finite()) {
        return Err(CliError::Usage(format!("--t-final must be positive, got {}", args.t_final)));
    }
    let needs_seed = matches!(init, Init::Random) || args.noise != 0.0;
    if needs_seed && args.seed.is_none() {
        return Err(CliError::Usage("random initial states and --noise require --seed".into()));
    }
    if !(args.noise >= 0.0) || !(args.amplitude > 0.0) {
        return Err(CliError::Usage("--noise must be >= 0 and --amplitude > 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed.unwrap_or(0));

    let mut predicted = None;
    let (system, z0) = match init {
        Init::Branch(k) => {
            let probe = build_system(args.system, &values)?;
            if let Some(eps) = args.eps {
                if !(eps > 0.0) {
                    return Err(CliError::Usage(format!("--eps must be positive, got {eps}")));
                }
                values.alpha = -branch_eigenvalue(&probe, k)?.re + eps;
            }
            let system = build_system(args.system, &values)?;
            let guess = onset_guess(&system, k)?;
            predicted = Some(solve_relative_equilibrium(&guess, DEFAULT_NEWTON_TOL)?.omega);
            (system, guess.profile)
        }
        Init::Zero => {
            let system = build_system(args.system, &values)?;
            (system, vec![Complex64::new(0.0, 0.0); system.dim()])
        }
        Init::Random => {
            let system = build_system(args.system, &values)?;
            let z = (0..system.dim())
                .map(|_| Complex64::from_polar(args.amplitude, rng.gen_range(0.0..std::f64::consts::TAU)))
                .collect();
            (system, z)
        }
    };
    let z0: Vec<Complex64> = if args.noise > 0.0 {
        z0.into_iter()
            .map(|z| z * (1.0 + args.noise * Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))))
            .collect()
    } else {
        z0
    };
    let opts = IntegratorOptions { rtol: args.rtol, atol: args.atol, ..Default::default() };
    let trace = integrate(&system, &RingState::new(z0, 0.0)?, args.t_final, args.samples, &opts)?;
    let measured = if args.measure {
        let transient = args.transient.unwrap_or(0.5 * args.t_final);
        Some(measure_orbit(&trace, transient, args.rel_tol)?)
    } else {
        None
    };
    let summary = SimulationSummary {
        system,
        init: args.init.clone(),
        seed: args.seed,
        t_final: args.t_final,
        samples: args.samples,
        integrator_stats: trace.integrator_stats,
        predicted_frequency: predicted,
        measured,
    };
    if sink.has_dir() {
        sink.emit("trace.csv", trace.to_csv().as_bytes())?;
        sink.emit("summary.json", &json_bytes(&summary)?)
    } else if args.measure {
        sink.emit("summary.json", &json_bytes(&summary)?)
    } else {
        sink.emit("trace.csv", trace.to_csv().as_bytes())
    }
}

#[derive(Serialize)]
struct CompareReport {
    n: usize,
    ell: usize,
    studies: Vec<StudyReport>,
    checks: Vec<CheckReport>,
    pass: bool,
}

pub fn compare(args: &CompareArgs, sink: &Sink) -> Result<(), CliError> {
    let (studies, checks) = standard_report(args.n, args.ell)?;
    for s in &studies {
        eprintln!("{} {}: order {:.3} (threshold {})", if s.pass { "PASS" } else { "FAIL" }, s.name, s.fitted_order, s.threshold);
    }
    for c in &checks {
        eprintln!("{} {}: {:.3e} (threshold {})", if c.pass { "PASS" } else { "FAIL" }, c.name, c.value, c.threshold);
    }
    let pass = studies.iter().all(|s| s.pass) && checks.iter().all(|c| c.pass);
    sink.emit("compare.json", &json_bytes(&CompareReport { n: args.n, ell: args.ell, studies, checks, pass })?)
}
