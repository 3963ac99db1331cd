use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::SolverError;
use crate::discretization::{Grid, PhaseSpace, PhaseState};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DomainMode {
    Torus,
    /// Free space, realized as a periodic box too large for any
    /// characteristic to wrap around before `t_end`.
    WholeSpace,
}

fn one() -> f64 {
    1.0
}

fn first_mode() -> usize {
    1
}

/// Named initial data. Cosine modes run along the first axis:
/// `rho(x) = background + amplitude cos(2 pi mode x_1 / L)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialCondition {
    /// `rho(x) F`.
    EquilibriumPerturbation {
        #[serde(default = "one")]
        background: f64,
        amplitude: f64,
        #[serde(default = "first_mode")]
        mode: usize,
    },
    /// All particles in one species (1-based), with its own Maxwellian.
    SpeciesImbalance {
        species: usize,
        #[serde(default = "one")]
        background: f64,
        #[serde(default)]
        amplitude: f64,
        #[serde(default = "first_mode")]
        mode: usize,
    },
    /// `M prod_a G_sigma(x_a - L/2) F` with `sigma = width`.
    GaussianBump {
        #[serde(default = "one")]
        mass: f64,
        width: f64,
    },
    /// `rho(x) F`, except that light species `species` (1-based) carries a
    /// Maxwellian shifted by `shift` along the first axis.
    MaxwellianOffset {
        species: usize,
        shift: f64,
        #[serde(default = "one")]
        background: f64,
        #[serde(default)]
        amplitude: f64,
        #[serde(default = "first_mode")]
        mode: usize,
    },
}

impl InitialCondition {
    /// Width of the region carrying particles, if compactly supported.
    pub fn support_width(&self) -> Option<f64> {
        match self {
            InitialCondition::GaussianBump { width, .. } => Some(10.0 * width),
            _ => None,
        }
    }

    fn validate(&self, n_species: usize, n_light: usize) -> Result<(), SolverError> {
        let bad = |msg: String| Err(SolverError::Config(msg));
        match *self {
            InitialCondition::GaussianBump { mass, width } => {
                if !(mass > 0.0 && width > 0.0) {
                    return bad(format!("gaussian-bump needs positive mass and width, got {mass}, {width}"));
                }
            }
            InitialCondition::SpeciesImbalance { species, .. } => {
                if species == 0 || species > n_species {
                    return bad(format!("species {species} is out of range 1..={n_species}"));
                }
            }
            InitialCondition::MaxwellianOffset { species, .. } => {
                if species == 0 || species > n_light {
                    return bad(format!("maxwellian-offset needs a light species in 1..={n_light}, got {species}"));
                }
            }
            InitialCondition::EquilibriumPerturbation { .. } => {}
        }
        Ok(())
    }

    /// Discretizes the initial data on `space`.
    pub fn build(&self, space: &PhaseSpace) -> PhaseState {
        let grid = space.grid();
        let box_size = grid.box_size();
        let cosine = |background: f64, amplitude: f64, mode: usize| {
            move |x: [f64; 2]| background + amplitude * (2.0 * PI * mode as f64 * x[0] / box_size).cos()
        };
        match *self {
            InitialCondition::EquilibriumPerturbation { background, amplitude, mode } => {
                space.local_equilibrium(cosine(background, amplitude, mode))
            }
            InitialCondition::GaussianBump { mass, width } => {
                let dim = grid.dim();
                let norm = (2.0 * PI * width * width).powf(-0.5 * dim as f64);
                space.local_equilibrium(|x| {
                    let r2: f64 = x[..dim].iter().map(|xa| (xa - 0.5 * box_size).powi(2)).sum();
                    mass * norm * (-0.5 * r2 / (width * width)).exp()
                })
            }
            InitialCondition::SpeciesImbalance { species, background, amplitude, mode } => {
                let rho = cosine(background, amplitude, mode);
                let s = species - 1;
                let mut state = space.zeros();
                for c in 0..grid.n_cells() {
                    let r = rho(grid.position(c));
                    if s < space.n_light() {
                        for q in 0..grid.n_vel() {
                            state.set(c, space.light_entry(s, q), r / space.eta()[s]);
                        }
                    } else {
                        state.set(c, space.heavy_entry(s), r);
                    }
                }
                state
            }
            InitialCondition::MaxwellianOffset { species, shift, background, amplitude, mode } => {
                let mut state = space.local_equilibrium(cosine(background, amplitude, mode));
                let s = species - 1;
                let theta = grid.theta(s);
                // U = rho M_s(v - u) / M_s(v).
                let ratio: Vec<f64> = (0..grid.n_vel())
                    .map(|q| ((grid.velocity(s, q)[0] * shift - 0.5 * shift * shift) / theta).exp())
                    .collect();
                for c in 0..grid.n_cells() {
                    for (q, r) in ratio.iter().enumerate() {
                        let e = space.light_entry(s, q);
                        state.set(c, e, state.get(c, e) * r);
                    }
                }
                state
            }
        }
    }
}

fn default_epsilon() -> f64 {
    1.0
}

fn default_output_every() -> usize {
    1
}

/// Everything needed to reproduce a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    /// Network file; relative paths are resolved against the config file.
    pub network: PathBuf,
    pub dim: usize,
    pub box_size: f64,
    pub n_x: usize,
    pub quad_order: usize,
    pub dt: f64,
    pub t_end: f64,
    pub domain: DomainMode,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    pub initial: InitialCondition,
    /// Record diagnostics every this many steps (and at `t_end`).
    #[serde(default = "default_output_every")]
    pub output_every: usize,
    /// Overrides the default Nash constant of the whole-space certificate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nash_constant: Option<f64>,
    /// Epsilon values of a sweep, largest first.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_list: Option<Vec<f64>>,
}

impl SolverConfig {
    pub fn from_json(text: &str) -> Result<Self, SolverError> {
        serde_json::from_str(text).map_err(|e| SolverError::Parse(e.to_string()))
    }

    /// Reads a config file and resolves its network path.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, SolverError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| SolverError::Io(format!("{}: {e}", path.display())))?;
        let mut config = Self::from_json(&text)?;
        if config.network.is_relative() {
            if let Some(dir) = path.parent() {
                config.network = dir.join(&config.network);
            }
        }
        Ok(config)
    }

    /// Number of uniform steps and the step size that lands exactly on `t_end`.
    pub fn steps(&self) -> (usize, f64) {
        let n = (self.t_end / self.dt - 1e-9).ceil().max(1.0) as usize;
        (n, self.t_end / n as f64)
    }

    /// Smallest admissible box for a whole-space run on `grid`.
    pub fn minimum_box(&self, v_max: f64) -> Option<f64> {
        self.initial.support_width().map(|w| 2.0 * v_max * self.t_end + w)
    }

    /// Checks everything that does not need the network.
    pub fn validate_basic(&self) -> Result<(), SolverError> {
        let bad = |msg: String| Err(SolverError::Config(msg));
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return bad(format!("t_end must be positive, got {}", self.t_end));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if self.output_every == 0 {
            return bad("output_every must be at least 1".into());
        }
        if let Some(list) = &self.eps_list {
            if let Some(e) = list.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
                return bad(format!("eps_list entries must be positive, got {e}"));
            }
        }
        Ok(())
    }

    /// Full validation against the network shape and the velocity grid.
    pub(crate) fn validate(&self, n_species: usize, n_light: usize, grid: &Grid) -> Result<(), SolverError> {
        self.validate_basic()?;
        self.initial.validate(n_species, n_light)?;
        if self.domain == DomainMode::WholeSpace {
            let Some(min_box) = self.minimum_box(grid.v_max()) else {
                return Err(SolverError::Config(
                    "whole-space runs need compactly supported initial data (gaussian-bump)".into(),
                ));
            };
            if self.box_size < min_box {
                return Err(SolverError::Config(format!(
                    "box_size {} is below the wrap-around guard 2 v_max t_end + support = {min_box:.6} \
                     (v_max = {:.6}); enlarge the box or shorten t_end",
                    self.box_size,
                    grid.v_max()
                )));
            }
        }
        Ok(())
    }
}
