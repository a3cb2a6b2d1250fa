//! Scenario files (TOML) and their resolution into runnable scenarios.
//!
//! ```toml
//! [system]
//! n_spins = 3
//! larmor_mhz = [400.0, 200.0, 100.0]
//! j1_mhz = 25.0
//! j2_mhz = 1.0
//! rabi_mhz = 0.1
//!
//! [bath]
//! temperature_k = 0.0
//! preset = "hi"          # or gamma_mhz = 0.1
//!
//! [sequence]
//! trailing_pi_pulses = 2.5
//! horizon_us = 50.0      # default: end of sequence + 30 us
//!
//! [integrator]
//! dt_us = 2.857e-5       # default: fastest period / 50
//! sample_stride = 1000
//! monitor_stride = 1000
//! frame = "interaction"  # or "lab"
//!
//! [run]
//! mode = "quasi"         # or "markov"
//! seed = 7
//! out_dir = "out"
//! plot = true
//! ```
//!
//! Frequencies are cyclic (MHz) in the file and angular (rad/us) once
//! resolved. Every key is optional; unknown keys are rejected.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::algebra::ComplexMatrix;
use crate::dissipator::DissipatorMode;
use crate::error::{Error, Result};
use crate::integrator::{run, IntegratorConfig, TrajectoryRecord};
use crate::model::{build_rate_table, mhz, BathParams, RateTable, SystemParams};
use crate::pulse::{cnot_sequence, Sequence};
use crate::state::basis_state;

/// Environment variable that overrides `run.out_dir`.
pub const OUT_DIR_ENV: &str = "SPINCHAIN_OUT_DIR";

/// Free evolution appended after the sequence when no horizon is given.
pub const DEFAULT_TAIL_US: f64 = 30.0;

/// Named dissipation strengths, J' x 1e-3 and J' x 1e-1 for the default J'.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GammaPreset {
    Lo,
    Hi,
}

impl GammaPreset {
    pub fn mhz(self) -> f64 {
        match self {
            GammaPreset::Lo => 0.001,
            GammaPreset::Hi => 0.1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            GammaPreset::Lo => "lo",
            GammaPreset::Hi => "hi",
        }
    }
}

impl fmt::Display for GammaPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GammaPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lo" => Ok(GammaPreset::Lo),
            "hi" => Ok(GammaPreset::Hi),
            other => Err(Error::Config(format!(
                "unknown preset '{other}', expected lo or hi"
            ))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemSection {
    pub n_spins: Option<usize>,
    pub larmor_mhz: Option<Vec<f64>>,
    pub j1_mhz: Option<f64>,
    pub j2_mhz: Option<f64>,
    pub rabi_mhz: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BathSection {
    pub temperature_k: Option<f64>,
    pub gamma_mhz: Option<f64>,
    pub preset: Option<GammaPreset>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SequenceSection {
    pub trailing_pi_pulses: Option<f64>,
    pub horizon_us: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorSection {
    pub dt_us: Option<f64>,
    pub sample_stride: Option<usize>,
    pub monitor_stride: Option<usize>,
    /// "interaction" (default) or "lab".
    pub frame: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub mode: Option<String>,
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub plot: Option<bool>,
}

/// The file as written; everything optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub system: SystemSection,
    pub bath: BathSection,
    pub sequence: SequenceSection,
    pub integrator: IntegratorSection,
    pub run: RunSection,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Sets an explicit rate, dropping any preset.
    pub fn set_gamma_mhz(&mut self, gamma: f64) {
        self.bath.gamma_mhz = Some(gamma);
        self.bath.preset = None;
    }

    /// Selects a preset, dropping any explicit rate.
    pub fn set_preset(&mut self, preset: GammaPreset) {
        self.bath.preset = Some(preset);
        self.bath.gamma_mhz = None;
    }

    /// Fills defaults and validates everything. All failures are
    /// [`Error::Config`].
    pub fn resolve(&self) -> Result<Scenario> {
        self.resolve_inner().map_err(|e| match e {
            Error::Config(_) => e,
            other => Error::Config(other.to_string()),
        })
    }

    fn resolve_inner(&self) -> Result<Scenario> {
        let seed = self.run.seed.unwrap_or(7);
        if i64::try_from(seed).is_err() {
            // TOML integers are signed 64-bit
            return Err(Error::Config(format!(
                "run.seed = {seed} exceeds {}",
                i64::MAX
            )));
        }
        let defaults = SystemParams::default();
        let s = &self.system;
        let n_spins = s.n_spins.unwrap_or(defaults.n_spins);
        let omega = match &s.larmor_mhz {
            Some(v) => v.iter().map(|&f| mhz(f)).collect(),
            None if n_spins == defaults.n_spins => defaults.omega.clone(),
            None => {
                return Err(Error::Config(format!(
                    "system.larmor_mhz is required for n_spins = {n_spins}"
                )))
            }
        };
        let system = SystemParams {
            n_spins,
            omega,
            j1: s.j1_mhz.map(mhz).unwrap_or(defaults.j1),
            j2: s.j2_mhz.map(mhz).unwrap_or(defaults.j2),
            rabi: s.rabi_mhz.map(mhz).unwrap_or(defaults.rabi),
        };
        system.validate()?;

        let gamma_mhz = match (self.bath.gamma_mhz, self.bath.preset) {
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "bath.gamma_mhz and bath.preset are mutually exclusive".into(),
                ))
            }
            (Some(g), None) => g,
            (None, Some(p)) => p.mhz(),
            (None, None) => GammaPreset::Hi.mhz(),
        };
        let bath = BathParams::new(self.bath.temperature_k.unwrap_or(0.0), mhz(gamma_mhz));
        bath.validate()?;

        let trailing = self.sequence.trailing_pi_pulses.unwrap_or(2.5);
        let sequence = cnot_sequence(&system, trailing)?;
        let horizon = self
            .sequence
            .horizon_us
            .unwrap_or(sequence.total_duration() + DEFAULT_TAIL_US);
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::Config(format!(
                "sequence.horizon_us = {horizon} must be positive"
            )));
        }

        let base = IntegratorConfig::for_system(&system);
        let integrator = IntegratorConfig {
            dt: self.integrator.dt_us.unwrap_or(base.dt),
            sample_stride: self.integrator.sample_stride.unwrap_or(base.sample_stride),
            monitor_stride: self
                .integrator
                .monitor_stride
                .unwrap_or(base.monitor_stride),
            frame: match &self.integrator.frame {
                Some(f) => f.parse()?,
                None => base.frame,
            },
        };
        integrator.validate(&system)?;

        let mode = match &self.run.mode {
            Some(m) => m.parse::<DissipatorMode>()?,
            None => DissipatorMode::QuasiNonMarkovian,
        };

        Ok(Scenario {
            system,
            bath,
            mode,
            trailing_pi_pulses: trailing,
            sequence,
            horizon,
            integrator,
            seed,
            out_dir: self
                .run
                .out_dir
                .clone()
                .unwrap_or_else(|| PathBuf::from("out")),
            plot: self.run.plot.unwrap_or(true),
        })
    }
}

/// A fully validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub system: SystemParams,
    pub bath: BathParams,
    pub mode: DissipatorMode,
    pub trailing_pi_pulses: f64,
    pub sequence: Sequence,
    /// us
    pub horizon: f64,
    pub integrator: IntegratorConfig,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub plot: bool,
}

impl Default for Scenario {
    fn default() -> Self {
        ScenarioConfig::default()
            .resolve()
            .expect("built-in defaults are valid")
    }
}

impl Scenario {
    pub fn with_mode(&self, mode: DissipatorMode) -> Self {
        Self {
            mode,
            ..self.clone()
        }
    }

    pub fn rates(&self) -> Result<RateTable> {
        build_rate_table(&self.system, &self.bath)
    }

    /// The register starts in |000>.
    pub fn initial_state(&self) -> ComplexMatrix {
        basis_state(self.system.dim(), 0)
    }

    pub fn run(&self) -> Result<TrajectoryRecord> {
        let rates = self.rates()?;
        run(
            &self.initial_state(),
            &self.sequence,
            self.horizon,
            self.mode,
            &self.integrator,
            &self.system,
            &rates,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let s = Scenario::default();
        assert_eq!(s.system, SystemParams::default());
        assert_eq!(s.mode, DissipatorMode::QuasiNonMarkovian);
        assert!((s.horizon - 50.0).abs() < 1e-12);
        assert!((s.bath.gamma_target - mhz(0.1)).abs() < 1e-15);
        assert_eq!(s.bath.temperature, 0.0);
        assert_eq!(s.sequence.len(), 5);
    }

    #[test]
    fn parses_full_file() {
        let text = r#"
[system]
n_spins = 3
larmor_mhz = [400.0, 200.0, 100.0]
j1_mhz = 25.0
j2_mhz = 1.0
rabi_mhz = 0.2

[bath]
temperature_k = 300.0
preset = "lo"

[sequence]
trailing_pi_pulses = 0.0
horizon_us = 12.0

[integrator]
sample_stride = 10
monitor_stride = 20

[run]
mode = "markov"
seed = 3
out_dir = "results"
plot = false
"#;
        let s = ScenarioConfig::from_toml(text).unwrap().resolve().unwrap();
        assert_eq!(s.mode, DissipatorMode::Markovian);
        assert!((s.system.rabi - mhz(0.2)).abs() < 1e-15);
        assert!((s.bath.gamma_target - mhz(0.001)).abs() < 1e-15);
        assert_eq!(s.bath.temperature, 300.0);
        assert_eq!(s.sequence.len(), 2);
        assert_eq!(s.horizon, 12.0);
        assert_eq!(s.integrator.sample_stride, 10);
        assert_eq!(s.seed, 3);
        assert_eq!(s.out_dir, PathBuf::from("results"));
        assert!(!s.plot);
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(matches!(
            ScenarioConfig::from_toml("[system]\nlarmor = 1.0\n"),
            Err(Error::Config(_))
        ));
        assert!(ScenarioConfig::from_toml("[bogus]\n").is_err());
        assert!(ScenarioConfig::from_toml("[bath]\npreset = \"mid\"\n").is_err());
    }

    #[test]
    fn rejects_invalid_values() {
        for text in [
            "[bath]\ngamma_mhz = 0.1\npreset = \"hi\"\n",
            "[bath]\ntemperature_k = -1.0\n",
            "[integrator]\ndt_us = 0.01\n",
            "[sequence]\nhorizon_us = -2.0\n",
            "[run]\nmode = \"lindblad\"\n",
            "[system]\nn_spins = 2\n",
        ] {
            let err = ScenarioConfig::from_toml(text)
                .unwrap()
                .resolve()
                .unwrap_err();
            assert!(matches!(err, Error::Config(_)), "{text}: {err}");
        }
    }

    #[test]
    fn overrides_and_round_trip() {
        let mut c = ScenarioConfig::default();
        c.set_preset(GammaPreset::Lo);
        c.set_gamma_mhz(0.05);
        let s = c.resolve().unwrap();
        assert!((s.bath.gamma_target - mhz(0.05)).abs() < 1e-15);
        let text = c.to_toml().unwrap();
        assert_eq!(ScenarioConfig::from_toml(&text).unwrap(), c);
    }
}
