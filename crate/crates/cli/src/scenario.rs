//! Scenario files: masses, one initial-condition source, solver settings and
//! command parameters.

use std::path::Path;

use serde::{Deserialize, Serialize};
use syzygy_core::events::{DetectorConfig, Which};
use syzygy_core::integrator::IntegratorConfig;
use syzygy_core::lab::{MinFConfig, RigidityConfig};
use syzygy_core::orbits::{euler_circular, figure_eight, lagrange_circular, random_ic, InitialCondition, SamplerSpec};
use syzygy_core::{BodyState, Masses};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    pub masses: Masses,
    pub initial_condition: IcSource,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub detector: DetectorConfig,
    #[serde(default)]
    pub params: Params,
}

/// Exactly one of `fixture`, `state` or `sampler`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum IcSource {
    Fixture(Fixture),
    State(ExplicitState),
    Sampler(SamplerSource),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum Fixture {
    /// Equal unit masses only.
    FigureEight,
    Lagrange {
        #[serde(default = "unit")]
        side: f64,
    },
    Euler {
        middle: usize,
        #[serde(default = "unit")]
        spacing: f64,
    },
}

fn unit() -> f64 {
    1.0
}

/// Positions and velocities as given; the state is moved to the barycentric
/// frame on load.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitState {
    pub positions: [[f64; 2]; 3],
    pub velocities: [[f64; 2]; 3],
    /// Known period, used by `verify-thm2`.
    #[serde(default)]
    pub period: Option<f64>,
}

/// Seeded random states. IC `i` uses seed `seed + i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplerSource {
    pub seed: u64,
    pub count: usize,
    pub negative_energy: bool,
    pub zero_momentum: bool,
    pub antisymmetric: bool,
    pub free_fall: bool,
    pub min_separation: f64,
    pub box_half: f64,
    pub speed: f64,
    pub max_attempts: usize,
}

impl Default for SamplerSource {
    fn default() -> Self {
        let s = SamplerSpec::default();
        Self {
            seed: 0,
            count: 1,
            negative_energy: s.negative_energy,
            zero_momentum: s.zero_momentum,
            antisymmetric: s.antisymmetric,
            free_fall: s.free_fall,
            min_separation: s.min_separation,
            box_half: s.box_half,
            speed: s.speed,
            max_attempts: s.max_attempts,
        }
    }
}

impl SamplerSource {
    fn spec(&self, masses: Masses) -> SamplerSpec {
        SamplerSpec {
            masses,
            negative_energy: self.negative_energy,
            zero_momentum: self.zero_momentum,
            antisymmetric: self.antisymmetric,
            free_fall: self.free_fall,
            min_separation: self.min_separation,
            box_half: self.box_half,
            speed: self.speed,
            max_attempts: self.max_attempts,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepTheorem {
    Theorem1,
    Theorem3,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    /// End time for `simulate` and `events`; defaults to the fixture period,
    /// or 10 when there is none.
    pub t_end: Option<f64>,
    /// Uniform rows in the trajectory CSV.
    pub samples: usize,
    pub which: Which,
    /// Rigidity weights for `verify-thm2`; searched for when absent.
    pub theta: Option<[f64; 3]>,
    /// Period for `verify-thm2`; defaults to the fixture period.
    pub period: Option<f64>,
    pub momentum_tol: f64,
    pub theorem: SweepTheorem,
    pub rigidity: RigidityConfig,
    /// Constraint level `s` of the minimisation oracle.
    pub minf_level: f64,
    pub minf: MinFConfig,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            t_end: None,
            samples: 1001,
            which: Which::Both,
            theta: None,
            period: None,
            momentum_tol: 1e-10,
            theorem: SweepTheorem::Theorem1,
            rigidity: RigidityConfig::default(),
            minf_level: 1.0,
            minf: MinFConfig::default(),
        }
    }
}

fn invalid(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Scenario(format!("{field}: {msg}"))
}

fn positive(field: &str, v: Option<f64>) -> Result<(), CliError> {
    match v {
        Some(x) if !(x > 0.0 && x.is_finite()) => Err(invalid(field, format!("must be positive, got {x}"))),
        _ => Ok(()),
    }
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let s: Scenario = serde_json::from_str(text).map_err(|e| CliError::Scenario(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_owned(), source })?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Scenario(msg) => CliError::Scenario(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Pretty JSON with every default filled in.
    pub fn canonical_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("scenario serialises");
        out.push('\n');
        out
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(invalid("schema_version", format!("expected {SCHEMA_VERSION}, got {}", self.schema_version)));
        }
        self.integrator.validate().map_err(|e| invalid("integrator", e))?;
        let d = &self.detector;
        if !(d.tol_event > 0.0 && d.tol_graze >= d.tol_event && d.simultaneous_dt >= 0.0 && d.samples_per_step > 0) {
            return Err(invalid("detector", "need 0 < tol_event <= tol_graze, simultaneous_dt >= 0, samples_per_step > 0"));
        }
        let p = &self.params;
        positive("params.t_end", p.t_end)?;
        positive("params.period", p.period)?;
        positive("params.momentum_tol", Some(p.momentum_tol))?;
        positive("params.minf_level", Some(p.minf_level))?;
        if p.samples < 2 {
            return Err(invalid("params.samples", "need at least 2"));
        }
        if p.minf.samples == 0 {
            return Err(invalid("params.minf.samples", "must be positive"));
        }
        match &self.initial_condition {
            IcSource::Fixture(Fixture::FigureEight) if self.masses != Masses::equal(1.0).expect("unit masses") => {
                Err(invalid("initial_condition.fixture", "figure_eight needs masses [1.0, 1.0, 1.0]"))
            }
            IcSource::Fixture(Fixture::Lagrange { side }) => positive("initial_condition.fixture.side", Some(*side)),
            IcSource::Fixture(Fixture::Euler { middle, spacing }) => {
                if *middle > 2 {
                    return Err(invalid("initial_condition.fixture.middle", "must be 0, 1 or 2"));
                }
                positive("initial_condition.fixture.spacing", Some(*spacing))
            }
            IcSource::State(s) => positive("initial_condition.state.period", s.period),
            IcSource::Sampler(s) if s.count == 0 => Err(invalid("initial_condition.sampler.count", "must be positive")),
            _ => Ok(()),
        }
    }

    /// Replaces every seed in the scenario.
    pub fn with_seed(mut self, seed: u64) -> Self {
        if let IcSource::Sampler(s) = &mut self.initial_condition {
            s.seed = seed;
        }
        self.params.minf.seed = seed;
        self
    }

    /// Number of initial conditions the source yields.
    pub fn ic_count(&self) -> usize {
        match &self.initial_condition {
            IcSource::Sampler(s) => s.count,
            _ => 1,
        }
    }

    /// Initial condition with identifier `id` (`0..ic_count()`).
    pub fn initial_condition(&self, id: usize) -> Result<InitialCondition, CliError> {
        let m = self.masses;
        let ic = match &self.initial_condition {
            IcSource::Fixture(Fixture::FigureEight) => figure_eight()?,
            IcSource::Fixture(Fixture::Lagrange { side }) => lagrange_circular(&m, *side)?,
            IcSource::Fixture(Fixture::Euler { middle, spacing }) => euler_circular(&m, *middle, *spacing)?,
            IcSource::State(s) => {
                InitialCondition::new(m, BodyState::from_arrays(0.0, s.positions, s.velocities), "explicit", s.period)?
            }
            IcSource::Sampler(s) => random_ic(s.seed.wrapping_add(id as u64), &s.spec(m))?,
        };
        Ok(ic)
    }
}
