//! Explicit decay constants: microscopic coercivity, the auxiliary constants
//! of the modified entropy, the torus rate and the whole-space envelope.

use std::f64::consts::PI;

use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::network::{EquilibriumProfile, PathTable, ReactionNetwork};

/// Relative tolerance of the golden-section search over `delta`.
const DELTA_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum CertificateError {
    #[error("dimension {0} is not supported (use 1, 2 or 3)")]
    UnsupportedDimension(usize),
    #[error("{name} must be positive and finite, got {value}")]
    NonPositive { name: &'static str, value: f64 },
}

fn positive(name: &'static str, value: f64) -> Result<f64, CertificateError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(CertificateError::NonPositive { name, value })
    }
}

/// `min_i sum_j (k_ij eta_j^2 + k_ji eta_i^2) / (2 eta_i eta_j)`.
pub fn gamma1(net: &ReactionNetwork, eq: &EquilibriumProfile) -> f64 {
    let n = net.n_species();
    let eta = &eq.eta;
    (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| j != i)
                .map(|j| {
                    (net.rate(i, j) * eta[j] * eta[j] + net.rate(j, i) * eta[i] * eta[i]) / (2.0 * eta[i] * eta[j])
                })
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min)
}

fn inverse_gamma2(eq: &EquilibriumProfile, paths: &PathTable) -> f64 {
    let eta = &eq.eta;
    let mut s = 0.0;
    for i in 0..eta.len() {
        for j in (0..eta.len()).filter(|&j| j != i) {
            s += eta[i] * eta[j] * paths.length(i, j) as f64 / paths.mu(i, j);
        }
    }
    s
}

/// `1 / gamma2 = sum_{i != j} eta_i eta_j P_ij / mu_ij`.
pub fn gamma2(eq: &EquilibriumProfile, paths: &PathTable) -> f64 {
    1.0 / inverse_gamma2(eq, paths)
}

/// `gamma2` with the diagonal pairs of light species restored: each adds
/// `eta_i^2 P / mu` of a shortest reaction cycle through `i`.
///
/// Velocity relaxation of a light species can be slower than any exchange
/// between species, and dropping the diagonal loses that mode; this variant
/// is a lower bound of the discrete gap on every network we have tested.
pub fn gamma2_cycles(net: &ReactionNetwork, eq: &EquilibriumProfile, paths: &PathTable) -> f64 {
    let diag: f64 = (0..net.n_light())
        .map(|i| {
            let cycle = paths.cycle(i);
            eq.eta[i] * eq.eta[i] * cycle.len() as f64 / cycle.mu
        })
        .sum();
    1.0 / (inverse_gamma2(eq, paths) + diag)
}

/// Certified microscopic coercivity constant: the better of the two proofs,
/// which is always `gamma2`.
pub fn lambda_m(eq: &EquilibriumProfile, paths: &PathTable) -> f64 {
    gamma2(eq, paths)
}

/// `min_{i light} K_i`, the decay rate of a pure velocity perturbation of one
/// light species. No coercivity constant can exceed it.
pub fn velocity_relaxation_rate(net: &ReactionNetwork) -> f64 {
    (0..net.n_light()).map(|i| net.outflow(i)).fold(f64::INFINITY, f64::min)
}

/// `(Dbar, D)` with `Dbar = sum eta_i theta_i` and `D = sum eta_i theta_i / K_i`
/// over light species.
pub fn diffusion_coefficients(net: &ReactionNetwork, eq: &EquilibriumProfile) -> (f64, f64) {
    let mut dbar = 0.0;
    let mut d = 0.0;
    for (i, theta) in net.thetas().iter().enumerate() {
        dbar += eq.eta[i] * theta;
        d += eq.eta[i] * theta / eq.outflow[i];
    }
    (dbar, d)
}

/// `C1 = (1 / Dbar) sqrt(d (d + 2) sum eta_i theta_i^2)`.
pub fn c1(net: &ReactionNetwork, eq: &EquilibriumProfile, dim: usize) -> f64 {
    let (dbar, _) = diffusion_coefficients(net, eq);
    let fourth: f64 = net.thetas().iter().enumerate().map(|(i, t)| eq.eta[i] * t * t).sum();
    ((dim * (dim + 2)) as f64 * fourth).sqrt() / dbar
}

/// `C2 = sqrt(2N max_j sum_i k_ij^2 / eta_i + 2 max_i K_i^2)`.
pub fn c2(net: &ReactionNetwork, eq: &EquilibriumProfile) -> f64 {
    let n = net.n_species();
    let gain = (0..n).map(|j| (0..n).map(|i| net.rate(i, j).powi(2) / eq.eta[i]).sum::<f64>()).fold(0.0, f64::max);
    let loss = (0..n).map(|i| net.outflow(i).powi(2)).fold(0.0, f64::max);
    (2.0 * n as f64 * gain + 2.0 * loss).sqrt()
}

/// Upper bound `4 lambda_m / (4 + (C1 + C2)^2)` on admissible `delta`.
pub fn delta_max(lambda_m: f64, c1: f64, c2: f64) -> f64 {
    4.0 * lambda_m / (4.0 + (c1 + c2).powi(2))
}

/// Entropy dissipation rate `lambda_delta` for a given `delta`.
pub fn lambda_delta(lambda_m: f64, c1: f64, c2: f64, delta: f64) -> f64 {
    let c = (c1 + c2).powi(2);
    let disc = lambda_m * lambda_m - delta * (4.0 * lambda_m - 4.0 * delta - delta * c);
    0.5 * (lambda_m - disc.max(0.0).sqrt())
}

/// Sharp Poincaré constant on `[0, L]^d` times `Dbar`.
pub fn macroscopic_coercivity(dbar: f64, box_size: f64) -> f64 {
    dbar * (2.0 * PI / box_size).powi(2)
}

/// Final torus rate `2 lambda_delta lambda_M / ((1 + 2 lambda_M)(1 + delta))`.
pub fn torus_rate_at(lambda_m: f64, c1: f64, c2: f64, lambda_macro: f64, delta: f64) -> f64 {
    2.0 * lambda_delta(lambda_m, c1, c2, delta) * lambda_macro / ((1.0 + 2.0 * lambda_macro) * (1.0 + delta))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TorusRate {
    pub delta_max: f64,
    pub delta_used: f64,
    pub lambda_delta: f64,
    pub lambda_macro: f64,
    pub lambda: f64,
    pub prefactor: f64,
}

/// Maximizes `f` on `(0, hi)` by golden-section search.
fn golden_section_max(f: impl Fn(f64) -> f64, hi: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (0.0, hi);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a) > DELTA_TOLERANCE * 0.5 * (a + b) {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Torus certificate with `delta` chosen to maximize the final rate.
pub fn torus_rate(lambda_m: f64, c1: f64, c2: f64, lambda_macro: f64) -> Result<TorusRate, CertificateError> {
    positive("lambda_m", lambda_m)?;
    positive("lambda_M", lambda_macro)?;
    let delta_max = delta_max(lambda_m, c1, c2);
    let delta = golden_section_max(|d| torus_rate_at(lambda_m, c1, c2, lambda_macro, d), delta_max.min(1.0));
    Ok(TorusRate {
        delta_max,
        delta_used: delta,
        lambda_delta: lambda_delta(lambda_m, c1, c2, delta),
        lambda_macro,
        lambda: torus_rate_at(lambda_m, c1, c2, lambda_macro, delta),
        prefactor: (1.0 + delta) / (1.0 - delta),
    })
}

/// Volume of the unit ball in dimension 1, 2 or 3.
fn unit_ball_volume(dim: usize) -> Result<f64, CertificateError> {
    match dim {
        1 => Ok(2.0),
        2 => Ok(PI),
        3 => Ok(4.0 * PI / 3.0),
        _ => Err(CertificateError::UnsupportedDimension(dim)),
    }
}

/// Admissible Nash constant `(2 / (d omega_d^{2/d})) (d + 2)^{(d+2)/d}`.
pub fn default_nash_constant(dim: usize) -> Result<f64, CertificateError> {
    let omega = unit_ball_volume(dim)?;
    let d = dim as f64;
    Ok(2.0 / (d * omega.powf(2.0 / d)) * (d + 2.0).powf((d + 2.0) / d))
}

/// `delta` maximizing `kappa = lambda_delta kappa_M (1 + delta)^{-(d+2)/d}`,
/// the power-law rate of the whole-space envelope.
pub fn whole_space_delta(lambda_m: f64, c1: f64, c2: f64, dim: usize) -> f64 {
    let d = dim as f64;
    golden_section_max(
        |delta| lambda_delta(lambda_m, c1, c2, delta) * (1.0 + delta).powf(-(d + 2.0) / d),
        delta_max(lambda_m, c1, c2).min(1.0),
    )
}

/// Decay predictor on the whole space.
///
/// `H(t)` is dominated by the solution `z` of
/// `z' = -lambda_delta Phi^{-1}(2 z / (1 + delta))`, `z(0) = H0`, and
/// `||f||^2 <= 2 H / (1 - delta)`. Past the crossover `t0` the closed form
/// `(H0^{-2/d} + 2 kappa t / d)^{-d/2}` takes over.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WholeSpaceEnvelope {
    pub dim: usize,
    pub delta: f64,
    pub lambda_delta: f64,
    pub kappa_macro: f64,
    pub kappa: f64,
    pub nash_constant: f64,
    pub initial_entropy: f64,
    /// Entropy level below which the power-law regime holds.
    pub crossover_entropy: f64,
    pub t0: f64,
}

impl WholeSpaceEnvelope {
    /// `delta` is [`whole_space_delta`].
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        lambda_m: f64,
        c1: f64,
        c2: f64,
        dbar: f64,
        dim: usize,
        total_mass: f64,
        nash_constant: f64,
        initial_entropy: f64,
    ) -> Result<Self, CertificateError> {
        unit_ball_volume(dim)?;
        positive("lambda_m", lambda_m)?;
        positive("total mass", total_mass)?;
        positive("Nash constant", nash_constant)?;
        positive("initial entropy", initial_entropy)?;
        let d = dim as f64;
        let kappa_macro = dbar / (nash_constant * total_mass.powf(4.0 / d));
        let kappa_of =
            |delta: f64| lambda_delta(lambda_m, c1, c2, delta) * kappa_macro * (1.0 + delta).powf(-(d + 2.0) / d);
        let delta = whole_space_delta(lambda_m, c1, c2, dim);
        let mut env = Self {
            dim,
            delta,
            lambda_delta: lambda_delta(lambda_m, c1, c2, delta),
            kappa_macro,
            kappa: kappa_of(delta),
            nash_constant,
            initial_entropy,
            crossover_entropy: 0.0,
            t0: 0.0,
        };
        // Phi's two terms balance at s*: (s*/kappa_M)^{d/(d+2)} = 2 s*.
        let s_star = 2f64.powf(-(d + 2.0) / 2.0) * kappa_macro.powf(-d / 2.0);
        env.crossover_entropy = 0.5 * (1.0 + delta) * env.phi(s_star);
        env.t0 = env.crossover_time();
        Ok(env)
    }

    /// `Phi(s) = kappa_M^{-d/(d+2)} s^{d/(d+2)} + 2 s`.
    pub fn phi(&self, s: f64) -> f64 {
        let p = self.dim as f64 / (self.dim as f64 + 2.0);
        self.kappa_macro.powf(-p) * s.powf(p) + 2.0 * s
    }

    /// Inverse of the strictly increasing `Phi`, by bisection.
    pub fn phi_inverse(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        // Phi(s) >= 2 s, so the root lies in [0, y / 2].
        let (mut lo, mut hi) = (0.0, 0.5 * y);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.phi(mid) < y {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    /// `(H0^{-2/d} + 2 kappa t / d)^{-d/2}`.
    pub fn closed_form(&self, t: f64) -> f64 {
        let d = self.dim as f64;
        (self.initial_entropy.powf(-2.0 / d) + 2.0 * self.kappa * t / d).powf(-d / 2.0)
    }

    fn crossover_time(&self) -> f64 {
        if self.initial_entropy <= self.crossover_entropy {
            return 0.0;
        }
        let mut hi = 1.0;
        while self.closed_form(hi) > self.crossover_entropy {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.closed_form(mid) > self.crossover_entropy {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-12 * hi {
                break;
            }
        }
        hi
    }

    fn rhs(&self, z: f64) -> f64 {
        -self.lambda_delta * self.phi_inverse(2.0 * z / (1.0 + self.delta))
    }

    /// Comparison solution `z(t)` at ascending `times` (RK4, step a hundredth
    /// of the local decay time `z / |z'|`).
    pub fn entropy_bound(&self, times: &[f64]) -> Vec<f64> {
        let mut z = self.initial_entropy;
        let mut t = 0.0;
        times
            .iter()
            .map(|&target| {
                while t < target {
                    let k1 = self.rhs(z);
                    let h = if k1 < 0.0 { (0.01 * z / -k1).min(target - t) } else { target - t };
                    let k2 = self.rhs(z + 0.5 * h * k1);
                    let k3 = self.rhs(z + 0.5 * h * k2);
                    let k4 = self.rhs(z + h * k3);
                    z += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
                    t = if target - t <= h { target } else { t + h };
                }
                z
            })
            .collect()
    }

    /// Bound on `||f(t)||^2` at ascending `times`: `2 z(t) / (1 - delta)`.
    pub fn norm_bound(&self, times: &[f64]) -> Vec<f64> {
        self.entropy_bound(times).into_iter().map(|z| 2.0 * z / (1.0 - self.delta)).collect()
    }
}

/// Geometry and normalization entering the constants.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CertificateInput {
    pub dim: usize,
    pub box_size: f64,
    pub total_mass: f64,
    /// `None` selects [`default_nash_constant`].
    pub nash_constant: Option<f64>,
}

impl Default for CertificateInput {
    fn default() -> Self {
        Self { dim: 1, box_size: 2.0 * PI, total_mass: 1.0, nash_constant: None }
    }
}

/// Which proof of microscopic coercivity gives the larger constant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WinningProof {
    First,
    Second,
    Tie,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CertificateReport {
    pub gamma1: f64,
    pub gamma2: f64,
    pub lambda_m: f64,
    pub winning_proof: WinningProof,
    pub gamma2_cycles: f64,
    pub velocity_relaxation_rate: f64,
    /// `lambda_m` exceeds `min K_i` over light species and cannot be a valid
    /// coercivity constant.
    pub lambda_m_exceeds_relaxation: bool,
    #[serde(rename = "C1")]
    pub c1: f64,
    #[serde(rename = "C2")]
    pub c2: f64,
    pub delta_max: f64,
    pub delta_used: f64,
    pub lambda_delta: f64,
    #[serde(rename = "lambda_M")]
    pub lambda_macro: f64,
    pub lambda_torus: f64,
    #[serde(rename = "C_prefactor")]
    pub prefactor: f64,
    #[serde(rename = "Dbar")]
    pub dbar: f64,
    #[serde(rename = "D_diffusion")]
    pub diffusion: f64,
    #[serde(rename = "kappa_M")]
    pub kappa_macro: f64,
    pub nash_constant_used: f64,
    pub dimension: usize,
    #[serde(rename = "box_size_L")]
    pub box_size: f64,
    #[serde(rename = "total_mass_M")]
    pub total_mass: f64,
}

impl CertificateReport {
    pub fn new(
        net: &ReactionNetwork,
        eq: &EquilibriumProfile,
        paths: &PathTable,
        input: &CertificateInput,
    ) -> Result<Self, CertificateError> {
        let nash = match input.nash_constant {
            Some(c) => positive("Nash constant", c)?,
            None => default_nash_constant(input.dim)?,
        };
        positive("box size", input.box_size)?;
        positive("total mass", input.total_mass)?;
        let g1 = gamma1(net, eq);
        let g2 = gamma2(eq, paths);
        let lm = lambda_m(eq, paths);
        let (dbar, diffusion) = diffusion_coefficients(net, eq);
        let c1 = c1(net, eq, input.dim);
        let c2 = c2(net, eq);
        let torus = torus_rate(lm, c1, c2, macroscopic_coercivity(dbar, input.box_size))?;
        let relax = velocity_relaxation_rate(net);
        let winning_proof = if g1 > g2 {
            WinningProof::First
        } else if g2 > g1 {
            WinningProof::Second
        } else {
            WinningProof::Tie
        };
        Ok(Self {
            gamma1: g1,
            gamma2: g2,
            lambda_m: lm,
            winning_proof,
            gamma2_cycles: gamma2_cycles(net, eq, paths),
            velocity_relaxation_rate: relax,
            lambda_m_exceeds_relaxation: lm > relax * (1.0 + 1e-12),
            c1,
            c2,
            delta_max: torus.delta_max,
            delta_used: torus.delta_used,
            lambda_delta: torus.lambda_delta,
            lambda_macro: torus.lambda_macro,
            lambda_torus: torus.lambda,
            prefactor: torus.prefactor,
            dbar,
            diffusion,
            kappa_macro: dbar / (nash * input.total_mass.powf(4.0 / input.dim as f64)),
            nash_constant_used: nash,
            dimension: input.dim,
            box_size: input.box_size,
            total_mass: input.total_mass,
        })
    }

    /// Whole-space envelope for initial modified entropy `h0`.
    pub fn whole_space_envelope(&self, h0: f64) -> Result<WholeSpaceEnvelope, CertificateError> {
        WholeSpaceEnvelope::new(
            self.lambda_m,
            self.c1,
            self.c2,
            self.dbar,
            self.dimension,
            self.total_mass,
            self.nash_constant_used,
            h0,
        )
    }

    /// Every constant as `{ "value", "formula" }`.
    pub fn annotated(&self) -> Value {
        let entry = |value: Value, formula: &str| json!({ "value": value, "formula": formula });
        json!({
            "gamma1": entry(json!(self.gamma1), "min_i sum_j (k_ij eta_j^2 + k_ji eta_i^2) / (2 eta_i eta_j)"),
            "gamma2": entry(json!(self.gamma2), "1/gamma2 = sum_{i!=j} eta_i eta_j P_ij / mu_ij"),
            "lambda_m": entry(json!(self.lambda_m), "max(min(gamma1, gamma2), gamma2) = gamma2"),
            "winning_proof": entry(json!(self.winning_proof), "larger of gamma1 (first proof) and gamma2 (second proof)"),
            "gamma2_cycles": entry(json!(self.gamma2_cycles), "1/g = 1/gamma2 + sum_{i light} eta_i^2 P_ii / mu_ii over a shortest cycle through i"),
            "velocity_relaxation_rate": entry(json!(self.velocity_relaxation_rate), "min_{i light} K_i, K_i = sum_j k_ji"),
            "lambda_m_exceeds_relaxation": entry(json!(self.lambda_m_exceeds_relaxation), "lambda_m > min_{i light} K_i"),
            "C1": entry(json!(self.c1), "(1/Dbar) (d(d+2) sum_{i light} eta_i theta_i^2)^{1/2}"),
            "C2": entry(json!(self.c2), "(2N max_j sum_i k_ij^2/eta_i + 2 max_i (sum_j k_ji)^2)^{1/2}"),
            "delta_max": entry(json!(self.delta_max), "4 lambda_m / (4 + (C1 + C2)^2)"),
            "delta_used": entry(json!(self.delta_used), "argmax of lambda(delta) over (0, min(1, delta_max))"),
            "lambda_delta": entry(json!(self.lambda_delta), "(lambda_m - sqrt(lambda_m^2 - delta(4 lambda_m - 4 delta - delta (C1 + C2)^2))) / 2"),
            "lambda_M": entry(json!(self.lambda_macro), "Dbar (2 pi / L)^2"),
            "lambda_torus": entry(json!(self.lambda_torus), "2 lambda_delta lambda_M / ((1 + 2 lambda_M)(1 + delta))"),
            "C_prefactor": entry(json!(self.prefactor), "(1 + delta) / (1 - delta)"),
            "Dbar": entry(json!(self.dbar), "sum_{i light} eta_i theta_i"),
            "D_diffusion": entry(json!(self.diffusion), "sum_{i light} eta_i theta_i / K_i"),
            "kappa_M": entry(json!(self.kappa_macro), "Dbar / (C_Nash M^{4/d})"),
            "nash_constant_used": entry(json!(self.nash_constant_used), "(2 / (d omega_d^{2/d})) (d + 2)^{(d+2)/d} unless overridden"),
            "dimension": entry(json!(self.dimension), "d"),
            "box_size_L": entry(json!(self.box_size), "L"),
            "total_mass_M": entry(json!(self.total_mass), "M = int rho dx"),
        })
    }
}
