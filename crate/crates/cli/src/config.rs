//! Experiment configuration: one TOML file per experiment.
//!
//! ```toml
//! kind = "reconstruct"        # simulate | reconstruct | stability | verify
//! alpha = 0.7                 # simulate, reconstruct
//! alphas = [0.3, 0.7]         # stability
//! output = "runs/example"
//! threads = 4                 # optional; else FRACORBIT_THREADS, else all cores
//! deterministic = true        # single worker thread
//!
//! [profile]
//! delta = 0.45                # support radius δ
//! amplitude = 1.0             # C
//! dim = 1
//!
//! [domain]
//! kind = "bounded"            # or "free"
//! lengths = [4.0]
//! modes = [288]               # optional, default from δ
//!
//! [orbit]
//! kind = "sine"               # stationary | linear | sine | sine_sum | circle | file
//! amplitude = [0.05]
//! omega = 6.283185307179586
//! speed_bound = 1.0
//!
//! [observation]
//! points = [[0.15]]           # or construct = true
//!
//! [grid]
//! t_end = 1.0
//! n_steps = 64
//! refine = 4                  # forward grid refinement for synthetic data
//!
//! [noise]
//! level = 0.01
//! seed = 7
//! ```
//!
//! Further blocks: `[forward]` (solver options), `[reconstruction]` (mode,
//! ε, K, data file) with `[reconstruction.solver]`, `[stability]` and
//! `[verify]`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use fracorbit::forward::ForwardOptions;
use fracorbit::inverse::ReconstructionConfig;
use fracorbit::model::{
    BoxDomain, DomainSpec, FreeSpace, FrequencyGrid, Orbit, OrbitShape, SineTerm, SourceProfile,
    DEFAULT_OBSERVABILITY_SAMPLES,
};
use fracorbit::FracOrder;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Simulate,
    Reconstruct,
    Stability,
    Verify,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Kind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub alphas: Vec<f64>,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default)]
    pub deterministic: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<ProfileBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<DomainBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orbit: Option<OrbitBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observation: Option<ObservationBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridBlock>,
    #[serde(default)]
    pub noise: NoiseBlock,
    #[serde(default)]
    pub forward: ForwardOptions,
    #[serde(default)]
    pub reconstruction: ReconstructionBlock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stability: Option<StabilityBlock>,
    #[serde(default)]
    pub verify: VerifyBlock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot: Option<SnapshotBlock>,
}

fn default_output() -> PathBuf {
    PathBuf::from("fracorbit-out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileBlock {
    pub delta: f64,
    #[serde(default = "one")]
    pub amplitude: f64,
    #[serde(default = "one_usize")]
    pub dim: usize,
}

fn one() -> f64 {
    1.0
}

fn one_usize() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainBlock {
    Bounded {
        lengths: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        modes: Option<Vec<usize>>,
    },
    Free {
        /// Ξ; default from the profile's transform decay
        #[serde(default, skip_serializing_if = "Option::is_none")]
        half_width: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        points: Option<usize>,
        /// shortest spatial period the grid must represent
        #[serde(default = "default_min_period")]
        min_period: f64,
        #[serde(default = "default_rel_tol")]
        rel_tol: f64,
        /// A; default identity
        #[serde(default, skip_serializing_if = "Option::is_none")]
        diffusion: Option<Vec<Vec<f64>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        drift: Option<Vec<f64>>,
        #[serde(default)]
        reaction: f64,
    },
}

fn default_min_period() -> f64 {
    20.0
}

fn default_rel_tol() -> f64 {
    1e-12
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrbitKind {
    Stationary,
    Linear,
    Sine,
    SineSum,
    Circle,
    File,
}

/// Orbit description; which fields are required depends on `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrbitBlock {
    pub kind: OrbitKind,
    /// velocity bound K
    pub speed_bound: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub velocity: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terms: Option<Vec<SineTerm<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    /// CSV with columns t, gamma_1..d on a uniform grid
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservationBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<Vec<f64>>>,
    /// use the one-dimensional construction from δ, K and T
    #[serde(default)]
    pub construct: bool,
    /// allow the axis-wise heuristic for d > 1
    #[serde(default)]
    pub allow_heuristic: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    #[serde(default = "one")]
    pub t_end: f64,
    pub n_steps: usize,
    #[serde(default = "default_refine")]
    pub refine: usize,
}

fn default_refine() -> usize {
    4
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseBlock {
    #[serde(default)]
    pub level: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Local,
    Global,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReconstructionBlock {
    #[serde(default)]
    pub mode: Mode,
    /// ball radius ε of the global scheme; default δ/9
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    /// K of the global scheme; default the orbit's speed bound
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speed_bound: Option<f64>,
    #[serde(default = "default_samples")]
    pub observability_samples: usize,
    #[serde(default)]
    pub observability_seed: u64,
    /// reconstruct from a trace CSV instead of synthetic data
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data_file: Option<PathBuf>,
    #[serde(default)]
    pub solver: ReconstructionConfig,
}

impl Default for ReconstructionBlock {
    fn default() -> Self {
        Self {
            mode: Mode::Local,
            epsilon: None,
            speed_bound: None,
            observability_samples: DEFAULT_OBSERVABILITY_SAMPLES,
            observability_seed: 0,
            data_file: None,
            solver: ReconstructionConfig::default(),
        }
    }
}

fn default_samples() -> usize {
    DEFAULT_OBSERVABILITY_SAMPLES
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilityBlock {
    #[serde(default = "default_pairs")]
    pub pairs: usize,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "one")]
    pub speed_bound: f64,
    #[serde(default)]
    pub seed: u64,
    /// noise sweep on the `[orbit]` reconstruction; empty: skipped
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub noise_levels: Vec<f64>,
    /// data steps of the noise sweep; default `grid.n_steps`
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep_steps: Option<usize>,
}

fn default_pairs() -> usize {
    10
}

fn default_epsilon() -> f64 {
    0.05
}

/// Field values u(x, T) written by `simulate` to `field.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotBlock {
    pub points: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyBlock {
    /// steps of the Duhamel comparison
    #[serde(default = "default_verify_steps")]
    pub n_steps: usize,
}

impl Default for VerifyBlock {
    fn default() -> Self {
        Self {
            n_steps: default_verify_steps(),
        }
    }
}

fn default_verify_steps() -> usize {
    1024
}

fn missing(key: &str, kind: Kind) -> CliError {
    CliError::config(key, format!("missing [{key}] block for kind = {kind:?}"))
}

fn core(key: &str, e: fracorbit::Error) -> CliError {
    CliError::config(key, e.to_string())
}

pub fn check_alpha(a: f64) -> Result<FracOrder<f64>, CliError> {
    FracOrder::supported(a).map_err(|_| CliError::config("alpha", "alpha out of range (0.1, 2]"))
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| {
            let key = e
                .message()
                .split('`')
                .nth(1)
                .map(str::to_string)
                .unwrap_or_else(|| "config".into());
            CliError::Config {
                key,
                message: e.to_string(),
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config("config", format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// The built-in configuration of `fracorbit verify`.
    pub fn verify_default() -> Self {
        Self::from_toml("kind = \"verify\"\noutput = \"fracorbit-verify\"\n").expect("valid built-in config")
    }

    /// Fully resolved TOML (defaults filled in).
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Checks that every block the kind needs is present and well-formed.
    pub fn validate(&self) -> Result<(), CliError> {
        if let Some(a) = self.alpha {
            check_alpha(a)?;
        }
        for &a in &self.alphas {
            check_alpha(a)?;
        }
        if self.threads == Some(0) {
            return Err(CliError::config("threads", "threads must be >= 1"));
        }
        if !(self.noise.level >= 0.0 && self.noise.level.is_finite()) {
            return Err(CliError::config("noise.level", "noise level must be finite and >= 0"));
        }
        self.reconstruction
            .solver
            .validate()
            .map_err(|e| core("reconstruction.solver", e))?;
        match self.kind {
            Kind::Verify => Ok(()),
            Kind::Simulate | Kind::Reconstruct => {
                if self.alpha.is_none() {
                    return Err(CliError::config(
                        "alpha",
                        format!("alpha is required for kind = {:?}", self.kind),
                    ));
                }
                self.profile()?;
                self.domain()?;
                let from_file = self.kind == Kind::Reconstruct && self.reconstruction.data_file.is_some();
                if !from_file {
                    self.grid()?;
                    self.orbit()?;
                    self.points()?;
                } else if self.orbit.is_some() {
                    self.grid()?;
                    self.orbit()?;
                }
                if let Some(s) = &self.snapshot {
                    let dim = self.profile()?.dim();
                    if s.points.is_empty() || s.points.iter().any(|p| p.len() != dim) {
                        return Err(CliError::config(
                            "snapshot.points",
                            format!("points must be non-empty {dim}-vectors"),
                        ));
                    }
                }
                Ok(())
            }
            Kind::Stability => {
                if self.alphas.is_empty() {
                    return Err(CliError::config("alphas", "alphas is required for kind = Stability"));
                }
                self.profile()?;
                self.domain()?;
                self.grid()?;
                self.points()?;
                let st = self.stability.as_ref().ok_or_else(|| missing("stability", self.kind))?;
                if st.pairs == 0 {
                    return Err(CliError::config("stability.pairs", "pairs must be >= 1"));
                }
                if !st.noise_levels.is_empty() {
                    self.orbit()?;
                    if self.alpha.is_none() {
                        return Err(CliError::config("alpha", "the noise sweep needs alpha"));
                    }
                }
                Ok(())
            }
        }
    }

    pub fn profile(&self) -> Result<SourceProfile<f64>, CliError> {
        let p = self.profile.as_ref().ok_or_else(|| missing("profile", self.kind))?;
        SourceProfile::new(p.delta, p.amplitude, p.dim).map_err(|e| core("profile", e))
    }

    pub fn grid(&self) -> Result<fracorbit::fracops::TimeGrid<f64>, CliError> {
        let g = self.grid.as_ref().ok_or_else(|| missing("grid", self.kind))?;
        if g.refine == 0 {
            return Err(CliError::config("grid.refine", "refine must be >= 1"));
        }
        fracorbit::fracops::TimeGrid::new(g.t_end, g.n_steps).map_err(|e| core("grid", e))
    }

    pub fn refine(&self) -> usize {
        self.grid.as_ref().map_or(1, |g| g.refine)
    }

    pub fn domain(&self) -> Result<DomainSpec<f64>, CliError> {
        let g = self.profile()?;
        let d = self.domain.as_ref().ok_or_else(|| missing("domain", self.kind))?;
        match d {
            DomainBlock::Bounded { lengths, modes } => {
                let b = match modes {
                    Some(m) => BoxDomain::new(lengths.clone(), m.clone()),
                    None => BoxDomain::with_default_modes(lengths.clone(), &g),
                }
                .map_err(|e| core("domain", e))?;
                if b.dim() != g.dim() {
                    return Err(CliError::config("domain.lengths", "dimension differs from profile.dim"));
                }
                Ok(DomainSpec::Bounded(b))
            }
            DomainBlock::Free {
                half_width,
                points,
                min_period,
                rel_tol,
                diffusion,
                drift,
                reaction,
            } => {
                let dim = g.dim();
                let grid = match (half_width, points) {
                    (Some(xi), Some(n)) => FrequencyGrid::new(*xi, *n, dim),
                    (None, None) => FrequencyGrid::for_profile(&g, *min_period, *rel_tol),
                    _ => {
                        return Err(CliError::config(
                            "domain.half_width",
                            "give both half_width and points, or neither",
                        ))
                    }
                }
                .map_err(|e| core("domain", e))?;
                let a = diffusion.clone().unwrap_or_else(|| {
                    (0..dim)
                        .map(|i| (0..dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                        .collect()
                });
                let b = drift.clone().unwrap_or_else(|| vec![0.0; dim]);
                let space = FreeSpace::new(a, b, *reaction, grid).map_err(|e| core("domain", e))?;
                Ok(DomainSpec::Free(space))
            }
        }
    }

    pub fn orbit(&self) -> Result<Orbit<f64>, CliError> {
        let o = self.orbit.as_ref().ok_or_else(|| missing("orbit", self.kind))?;
        let dim = self.profile()?.dim();
        let t_end = self.grid()?.t_end();
        let need = |v: &Option<Vec<f64>>, key: &'static str| {
            v.clone()
                .ok_or_else(|| CliError::config(key, format!("{key} is required for orbit kind {:?}", o.kind)))
        };
        let shape = match o.kind {
            OrbitKind::Stationary => OrbitShape::Stationary,
            OrbitKind::Linear => OrbitShape::Linear {
                velocity: need(&o.velocity, "orbit.velocity")?,
            },
            OrbitKind::Sine => OrbitShape::SineSum {
                terms: vec![SineTerm {
                    amplitude: need(&o.amplitude, "orbit.amplitude")?,
                    omega: o
                        .omega
                        .ok_or_else(|| CliError::config("orbit.omega", "orbit.omega is required for a sine orbit"))?,
                    phase: 0.0,
                }],
            },
            OrbitKind::SineSum => OrbitShape::SineSum {
                terms: o
                    .terms
                    .clone()
                    .ok_or_else(|| CliError::config("orbit.terms", "orbit.terms is required for sine_sum"))?,
            },
            OrbitKind::Circle => OrbitShape::Circle {
                radius: o
                    .radius
                    .ok_or_else(|| CliError::config("orbit.radius", "orbit.radius is required for circle"))?,
                omega: o
                    .omega
                    .ok_or_else(|| CliError::config("orbit.omega", "orbit.omega is required for circle"))?,
            },
            OrbitKind::File => {
                let path = o
                    .path
                    .as_ref()
                    .ok_or_else(|| CliError::config("orbit.path", "orbit.path is required for kind = file"))?;
                let (grid, points) = crate::io::read_orbit_csv(path)?;
                return Orbit::sampled(grid, points, o.speed_bound).map_err(|e| core("orbit", e));
            }
        };
        Orbit::new(dim, t_end, o.speed_bound, shape).map_err(|e| core("orbit", e))
    }

    pub fn points(&self) -> Result<Vec<Vec<f64>>, CliError> {
        let obs = self
            .observation
            .as_ref()
            .ok_or_else(|| missing("observation", self.kind))?;
        let dim = self.profile()?.dim();
        let pts = match (&obs.points, obs.construct) {
            (Some(p), false) => p.clone(),
            (None, true) => {
                let g = self.profile()?;
                let k = self
                    .orbit
                    .as_ref()
                    .map(|o| o.speed_bound)
                    .or(self.stability.as_ref().map(|s| s.speed_bound))
                    .ok_or_else(|| CliError::config("observation.construct", "construction needs a speed bound"))?;
                fracorbit::model::select_observation_points(&g, k, self.grid()?.t_end(), obs.allow_heuristic)
                    .map_err(|e| core("observation", e))?
                    .points
            }
            _ => {
                return Err(CliError::config(
                    "observation.points",
                    "give either observation.points or observation.construct = true",
                ))
            }
        };
        if pts.is_empty() || pts.iter().any(|p| p.len() != dim) {
            return Err(CliError::config(
                "observation.points",
                format!("points must be non-empty {dim}-vectors"),
            ));
        }
        Ok(pts)
    }
}
