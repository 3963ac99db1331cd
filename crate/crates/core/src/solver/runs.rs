use rayon::prelude::*;

use super::{DomainMode, HeatReference, SolverConfig, SolverError, Stepper};
use crate::certificates::{whole_space_delta, CertificateInput, CertificateReport, WholeSpaceEnvelope};
use crate::diagnostics::{config_hash, DiagnosticsSeries, Sample, SweepRow, SweepTable};
use crate::discretization::{Grid, PhaseSpace, PhaseState};
use crate::network::{compute_equilibrium, shortest_paths, ReactionNetwork};

/// A configured experiment: network, discretization, initial data and the
/// certificate for the same geometry and mass.
#[derive(Clone, Debug)]
pub struct Simulation {
    config: SolverConfig,
    space: PhaseSpace,
    report: CertificateReport,
    initial: PhaseState,
    config_hash: String,
    track_dissipation: bool,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub series: DiagnosticsSeries,
    pub report: CertificateReport,
    pub envelope: Option<WholeSpaceEnvelope>,
    pub final_state: PhaseState,
}

impl Simulation {
    pub fn new(net: &ReactionNetwork, config: SolverConfig) -> Result<Self, SolverError> {
        config.validate_basic()?;
        net.ensure_valid()?;
        let eq = compute_equilibrium(net)?;
        let paths = shortest_paths(net, &eq)?;
        let grid = Grid::new(config.dim, config.box_size, config.n_x, config.quad_order, net.thetas())?;
        config.validate(net.n_species(), net.n_light(), &grid)?;
        let space = PhaseSpace::new(net, &eq, grid)?;
        let initial = config.initial.build(&space);
        let input = CertificateInput {
            dim: config.dim,
            box_size: config.box_size,
            total_mass: space.mass(&initial),
            nash_constant: config.nash_constant,
        };
        let report = CertificateReport::new(net, &eq, &paths, &input)?;
        let config_json = serde_json::to_vec(&config).expect("config serializes");
        let net_json = serde_json::to_vec(&net.to_file_repr()).expect("network serializes");
        let config_hash = config_hash(&[&config_json, &net_json]);
        Ok(Self { config, space, report, initial, config_hash, track_dissipation: false })
    }

    /// Also accumulate `int -<L f, f> dt` step by step (trapezoidal rule).
    pub fn with_dissipation_tracking(mut self, on: bool) -> Self {
        self.track_dissipation = on;
        self
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn space(&self) -> &PhaseSpace {
        &self.space
    }

    pub fn report(&self) -> &CertificateReport {
        &self.report
    }

    pub fn initial_state(&self) -> &PhaseState {
        &self.initial
    }

    pub fn config_hash(&self) -> &str {
        &self.config_hash
    }

    /// Runs the experiment selected by the config's domain.
    pub fn run(&self) -> Result<RunOutput, SolverError> {
        match self.config.domain {
            DomainMode::Torus => self.run_torus(),
            DomainMode::WholeSpace => self.run_whole_space(),
        }
    }

    /// Integrates from the initial state, calling `observe` at `t = 0`, every
    /// `every` steps and at the end with the accumulated dissipation, if
    /// tracked.
    fn integrate<T>(
        &self,
        epsilon: f64,
        dt: f64,
        n_steps: usize,
        every: usize,
        mut observe: impl FnMut(f64, &PhaseState, Option<f64>) -> T,
    ) -> Result<(Vec<T>, PhaseState), SolverError> {
        let space = &self.space;
        let stepper = Stepper::new(space, dt, epsilon);
        let rate = |f: &PhaseState| -space.inner(&space.apply_l(f), f);
        let mut f = self.initial.clone();
        let mut dissipated = self.track_dissipation.then_some(0.0);
        let mut last_rate = if self.track_dissipation { rate(&f) } else { 0.0 };
        let mut out = vec![observe(0.0, &f, dissipated)];
        for k in 1..=n_steps {
            f = stepper.step(space, &f);
            if let Some(total) = dissipated.as_mut() {
                let r = rate(&f);
                *total += 0.5 * dt * (last_rate + r);
                last_rate = r;
            }
            if k % every == 0 || k == n_steps {
                let t = k as f64 * dt;
                if !f.is_finite() {
                    return Err(SolverError::NonFinite { t });
                }
                out.push(observe(t, &f, dissipated));
            }
        }
        Ok((out, f))
    }

    fn sample(&self, t: f64, f: &PhaseState, deviation: &PhaseState, delta: f64, dissipated: Option<f64>) -> Sample {
        let space = &self.space;
        Sample {
            t,
            mass: space.mass(f),
            norm2_dev: space.norm2(deviation),
            entropy_h: space.modified_entropy(deviation, self.report.dbar, delta),
            dissipation: space.dissipation(f),
            micro_norm2: space.norm2(&space.micro_part(f)),
            envelope_z: None,
            dissipated,
        }
    }

    fn series(&self, samples: Vec<(Sample, f64)>) -> DiagnosticsSeries {
        let min_relative_density = samples.iter().map(|(_, m)| *m).fold(0.0, f64::min);
        DiagnosticsSeries {
            samples: samples.into_iter().map(|(s, _)| s).collect(),
            config_hash: self.config_hash.clone(),
            min_relative_density,
        }
    }

    /// Torus run: deviations are measured from `f_inf = (M / L^d) F`.
    pub fn run_torus(&self) -> Result<RunOutput, SolverError> {
        let space = &self.space;
        let volume = self.config.box_size.powi(self.config.dim as i32);
        let f_inf = space.uniform_equilibrium(space.mass(&self.initial) / volume);
        let (n_steps, dt) = self.config.steps();
        let delta = self.report.delta_used;
        let (samples, final_state) =
            self.integrate(self.config.epsilon, dt, n_steps, self.config.output_every, |t, f, dissipated| {
                let deviation = f.difference(&f_inf);
                (self.sample(t, f, &deviation, delta, dissipated), space.min_relative_density(f))
            })?;
        Ok(RunOutput { series: self.series(samples), report: self.report.clone(), envelope: None, final_state })
    }

    /// Whole-space run on the guarded box, with the certified envelope on
    /// `||f||^2` attached to every sample.
    pub fn run_whole_space(&self) -> Result<RunOutput, SolverError> {
        let space = &self.space;
        let r = &self.report;
        let delta = whole_space_delta(r.lambda_m, r.c1, r.c2, r.dimension);
        let h0 = space.modified_entropy(&self.initial, r.dbar, delta);
        let envelope = self.report.whole_space_envelope(h0)?;
        let (n_steps, dt) = self.config.steps();
        let (samples, final_state) =
            self.integrate(self.config.epsilon, dt, n_steps, self.config.output_every, |t, f, dissipated| {
                (self.sample(t, f, f, envelope.delta, dissipated), space.min_relative_density(f))
            })?;
        let mut series = self.series(samples);
        let bounds = envelope.norm_bound(&series.times());
        for (s, z) in series.samples.iter_mut().zip(bounds) {
            s.envelope_z = Some(z);
        }
        Ok(RunOutput { series, report: self.report.clone(), envelope: Some(envelope), final_state })
    }

    /// Diffusively scaled runs compared with the heat equation. Each run uses
    /// `dt eps^2` and the same output times.
    pub fn run_epsilon_sweep(&self, eps_list: &[f64]) -> Result<SweepTable, SolverError> {
        if eps_list.is_empty() {
            return Err(SolverError::Config("eps_list is empty".into()));
        }
        if let Some(e) = eps_list.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
            return Err(SolverError::Config(format!("epsilon must be positive, got {e}")));
        }
        let space = &self.space;
        let grid = space.grid();
        let heat = HeatReference::new(grid, &space.total_density(&self.initial), self.report.diffusion);
        let l2 = |a: &[f64], b: &[f64]| -> f64 {
            (a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() * grid.cell_volume()).sqrt()
        };
        let rows = eps_list
            .par_iter()
            .map(|&eps| {
                let (base_steps, base_dt) = self.config.steps();
                let refine = (1.0 / (eps * eps)).round().max(1.0) as usize;
                let n_steps = base_steps * refine;
                let dt = self.config.t_end / n_steps as f64;
                let every = self.config.output_every * refine;
                debug_assert!((dt * refine as f64 - base_dt).abs() <= 1e-12 * base_dt);
                let (points, _) = self.integrate(eps, dt, n_steps, every, |t, f, _| {
                    let rho = space.total_density(f);
                    let rho0 = heat.at(t);
                    let micro = space.norm2(&space.micro_part(f)).sqrt() / eps;
                    (l2(&rho, &rho0), micro, rho, rho0)
                })?;
                let err_heat = points.iter().map(|p| p.0).fold(0.0, f64::max);
                let sup_micro = points.iter().map(|p| p.1).fold(0.0, f64::max);
                let (_, _, rho, rho0) = points.last().expect("at least the initial output");
                let mean = heat.mass() / grid.cell_volume() / grid.n_cells() as f64;
                let mean_field = vec![mean; rho0.len()];
                let rel_err_final = l2(rho, rho0) / l2(rho0, &mean_field);
                Ok(SweepRow { epsilon: eps, err_heat, rel_err_final, sup_micro_over_eps: sup_micro })
            })
            .collect::<Result<Vec<_>, SolverError>>()?;
        Ok(SweepTable { rows, config_hash: self.config_hash.clone() })
    }
}

pub fn run_torus(net: &ReactionNetwork, config: &SolverConfig) -> Result<RunOutput, SolverError> {
    Simulation::new(net, config.clone())?.run_torus()
}

pub fn run_whole_space(net: &ReactionNetwork, config: &SolverConfig) -> Result<RunOutput, SolverError> {
    Simulation::new(net, config.clone())?.run_whole_space()
}

pub fn run_epsilon_sweep(
    net: &ReactionNetwork,
    config: &SolverConfig,
    eps_list: &[f64],
) -> Result<SweepTable, SolverError> {
    Simulation::new(net, config.clone())?.run_epsilon_sweep(eps_list)
}
