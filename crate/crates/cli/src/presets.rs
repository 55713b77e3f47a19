use serde::Serialize;

use crate::args::{MethodArg, Preset, RingArgs};
use crate::error::CliError;

/// Ring parameters after merging a preset with explicit flags.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RingValues {
    pub n: usize,
    pub ell: usize,
    pub s: f64,
    pub alpha: f64,
    pub beta: f64,
}

struct PresetValues {
    n: usize,
    ell: usize,
    s: f64,
    beta: f64,
    method: MethodArg,
}

fn preset_values(p: Preset) -> PresetValues {
    let fig2 = |s| PresetValues { n: 20, ell: 6, s, beta: 2.5, method: MethodArg::Exact };
    let fig4 = |s, method| PresetValues { n: 100, ell: 26, s, beta: 2.5, method };
    match p {
        Preset::Fig2a => fig2(0.1),
        Preset::Fig2b => fig2(0.6),
        Preset::Fig2c => fig2(1.0),
        Preset::Fig2d => fig2(5.0),
        Preset::Fig4a => fig4(0.05, MethodArg::Approx),
        Preset::Fig4b => fig4(0.1, MethodArg::Approx),
        Preset::Fig4c => fig4(0.2, MethodArg::Approx),
        Preset::Fig4d => fig4(0.05, MethodArg::Exact),
        Preset::Fig4e => fig4(0.1, MethodArg::Exact),
        Preset::Fig4f => fig4(0.2, MethodArg::Exact),
        Preset::Fig5 => fig4(5.0, MethodArg::Exact),
    }
}

impl RingArgs {
    pub fn resolve(&self) -> Result<RingValues, CliError> {
        let base = self.preset.map(preset_values);
        let pick = |flag: Option<usize>, from: Option<usize>, name: &str| {
            flag.or(from).ok_or_else(|| CliError::Usage(format!("--{name} is required without a preset")))
        };
        let n = pick(self.n, base.as_ref().map(|b| b.n), "n")?;
        let ell = pick(self.ell, base.as_ref().map(|b| b.ell), "ell")?;
        let s = self
            .s
            .or(base.as_ref().map(|b| b.s))
            .ok_or_else(|| CliError::Usage("--s is required without a preset".into()))?;
        let beta = self.beta.or(base.as_ref().map(|b| b.beta)).unwrap_or(2.5);
        Ok(RingValues { n, ell, s, alpha: self.alpha.unwrap_or(0.0), beta })
    }

    pub fn preset_method(&self) -> Option<MethodArg> {
        self.preset.map(|p| preset_values(p).method)
    }
}
