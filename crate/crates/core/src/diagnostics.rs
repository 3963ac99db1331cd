//! Time series produced by the solver, rate fits and the pass/fail verdict.

use std::fmt::Write as _;
use std::io::{self, Write};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::certificates::CertificateReport;

/// Values below this are treated as floating-point noise by the fits.
pub const FIT_FLOOR: f64 = 1e-12;

/// Fits with a worse coefficient of determination cannot confirm a bound.
pub const MIN_R_SQUARED: f64 = 0.98;

/// Reconstructed densities below `-NEGATIVITY_TOLERANCE * max |f|` are reported.
pub const NEGATIVITY_TOLERANCE: f64 = 1e-10;

/// One output time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Sample {
    pub t: f64,
    pub mass: f64,
    /// `||f - f_inf||^2` on the torus, `||f||^2` on the whole space.
    pub norm2_dev: f64,
    pub entropy_h: f64,
    pub dissipation: f64,
    pub micro_norm2: f64,
    /// Bound on `norm2_dev` from the whole-space certificate.
    pub envelope_z: Option<f64>,
    /// `int_0^t -<L f, f> ds`, when tracked step by step.
    pub dissipated: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct DiagnosticsSeries {
    pub samples: Vec<Sample>,
    pub config_hash: String,
    /// Most negative reconstructed `f_i` over the run, relative to `max |f|`.
    pub min_relative_density: f64,
}

impl DiagnosticsSeries {
    /// Message when splitting error pushed some `f_i` noticeably below zero.
    pub fn negativity_warning(&self) -> Option<String> {
        (self.min_relative_density < -NEGATIVITY_TOLERANCE).then(|| {
            format!("reconstructed density reached {:.3e} of max |f| (splitting error)", self.min_relative_density)
        })
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn column(&self, pick: impl Fn(&Sample) -> f64) -> Vec<f64> {
        self.samples.iter().map(pick).collect()
    }

    pub fn has_envelope(&self) -> bool {
        self.samples.first().is_some_and(|s| s.envelope_z.is_some())
    }

    pub fn write_csv(&self, mut out: impl Write) -> io::Result<()> {
        let envelope = self.has_envelope();
        write!(out, "t,mass,norm2_dev,entropy_H,dissipation,micro_norm2")?;
        writeln!(out, "{}", if envelope { ",envelope_z" } else { "" })?;
        for s in &self.samples {
            write!(
                out,
                "{:e},{:e},{:e},{:e},{:e},{:e}",
                s.t, s.mass, s.norm2_dev, s.entropy_h, s.dissipation, s.micro_norm2
            )?;
            match s.envelope_z.filter(|_| envelope) {
                Some(z) => writeln!(out, ",{z:e}")?,
                None => writeln!(out)?,
            }
        }
        Ok(())
    }
}

/// SHA-256 over the given byte strings, hex-encoded.
pub fn config_hash(parts: &[&[u8]]) -> String {
    let mut hasher = Sha256::new();
    for part in parts {
        hasher.update((part.len() as u64).to_le_bytes());
        hasher.update(part);
    }
    hasher.finalize().iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Portion of a series used by a fit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FitWindow {
    /// `t >= t_last / 2`.
    LastHalf,
    /// `t >= t_last / 10`.
    LastDecade,
    /// `t_min <= t <= t_max`.
    Range(f64, f64),
}

impl FitWindow {
    fn contains(&self, t: f64, t_last: f64) -> bool {
        match *self {
            FitWindow::LastHalf => t >= 0.5 * t_last,
            FitWindow::LastDecade => t >= 0.1 * t_last,
            FitWindow::Range(a, b) => t >= a && t <= b,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Fit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Ordinary least squares of `y` on `x`. `None` with fewer than two points.
pub fn least_squares(x: &[f64], y: &[f64]) -> Option<Fit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 {
        return None;
    }
    if y.iter().all(|v| *v == y[0]) {
        return Some(Fit { slope: 0.0, intercept: y[0], r_squared: 1.0, points: n });
    }
    let slope = sxy / sxx;
    let residual: f64 = x.iter().zip(y).map(|(a, b)| (b - my - slope * (a - mx)).powi(2)).sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - residual / syy };
    Some(Fit { slope, intercept: my - slope * mx, r_squared, points: n })
}

fn windowed(times: &[f64], values: &[f64], window: FitWindow) -> (Vec<f64>, Vec<f64>) {
    let t_last = times.last().copied().unwrap_or(0.0);
    times
        .iter()
        .zip(values)
        .filter(|(t, v)| window.contains(**t, t_last) && **v > FIT_FLOOR)
        .map(|(t, v)| (*t, v.ln()))
        .unzip()
}

/// Decay rate `-d log(y) / dt` over the window; values at or below
/// [`FIT_FLOOR`] are skipped.
pub fn fit_exponential_rate(times: &[f64], values: &[f64], window: FitWindow) -> Option<Fit> {
    let (t, logs) = windowed(times, values, window);
    least_squares(&t, &logs).map(|f| Fit { slope: -f.slope, ..f })
}

/// Exponent `d log(y) / d log(1 + t)` over the window.
pub fn fit_algebraic_rate(times: &[f64], values: &[f64], window: FitWindow) -> Option<Fit> {
    let (t, logs) = windowed(times, values, window);
    let lt: Vec<f64> = t.iter().map(|t| t.ln_1p()).collect();
    least_squares(&lt, &logs)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    pub observed: Option<f64>,
    pub bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl Check {
    fn new(name: &str, status: Status, observed: Option<f64>, bound: Option<f64>) -> Self {
        Self { name: name.to_string(), status, observed, bound, reason: None }
    }

    fn because(mut self, reason: &str) -> Self {
        self.reason = Some(reason.to_string());
        self
    }

    fn passed_if(name: &str, ok: bool, observed: f64, bound: f64) -> Self {
        Self::new(name, if ok { Status::Pass } else { Status::Fail }, Some(observed), Some(bound))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub checks: Vec<Check>,
    pub config_hash: String,
}

impl Verdict {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != Status::Fail)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn mass_check(series: &DiagnosticsSeries) -> Check {
    let m0 = series.samples.first().map_or(0.0, |s| s.mass);
    let drift = series.samples.iter().map(|s| (s.mass - m0).abs()).fold(0.0, f64::max);
    let bound = 1e-12 * m0.abs().max(1.0);
    Check::passed_if("mass_conservation", drift <= bound, drift, bound)
}

fn entropy_check(series: &DiagnosticsSeries) -> Check {
    let h0 = series.samples.first().map_or(0.0, |s| s.entropy_h.abs());
    let tol = 1e-12 * h0.max(FIT_FLOOR);
    let increase = series.samples.windows(2).map(|w| w[1].entropy_h - w[0].entropy_h).fold(f64::NEG_INFINITY, f64::max);
    let increase = if increase.is_finite() { increase } else { 0.0 };
    let check = Check::passed_if("entropy_monotone", increase <= tol, increase, tol);
    if check.status == Status::Fail {
        check.because("entropy_increase")
    } else {
        check
    }
}

fn gated(check: Check, fit: &Fit) -> Check {
    if check.status == Status::Pass && fit.r_squared < MIN_R_SQUARED {
        Check { status: Status::Inconclusive, ..check }.because("poor_fit")
    } else {
        check
    }
}

/// Checks for a torus run: mass, entropy monotonicity and observed
/// exponential rate against the certified one.
pub fn torus_verdict(series: &DiagnosticsSeries, report: &CertificateReport) -> Verdict {
    let mut checks = vec![mass_check(series), entropy_check(series)];
    let fit = fit_exponential_rate(&series.times(), &series.column(|s| s.norm2_dev), FitWindow::LastHalf);
    checks.push(match fit {
        Some(fit) => gated(
            Check::passed_if("decay_rate", fit.slope >= report.lambda_torus, fit.slope, report.lambda_torus),
            &fit,
        ),
        None => {
            let peak = series.samples.iter().map(|s| s.norm2_dev).fold(0.0, f64::max);
            if peak <= FIT_FLOOR {
                Check::new("decay_rate", Status::Pass, None, Some(report.lambda_torus)).because("at_equilibrium")
            } else {
                Check::new("decay_rate", Status::Inconclusive, None, Some(report.lambda_torus))
                    .because("too_few_points")
            }
        }
    });
    Verdict { checks, config_hash: series.config_hash.clone() }
}

/// Checks for a whole-space run: mass, entropy monotonicity, envelope
/// domination and the algebraic exponent `-d/2 +- tolerance`.
pub fn whole_space_verdict(series: &DiagnosticsSeries, dim: usize, exponent_tolerance: f64) -> Verdict {
    let mut checks = vec![mass_check(series), entropy_check(series)];
    let ratio = series.samples.iter().filter_map(|s| s.envelope_z.map(|z| s.norm2_dev / z)).fold(0.0, f64::max);
    checks.push(Check::passed_if("envelope", ratio <= 1.0, ratio, 1.0));
    let target = -(dim as f64) / 2.0;
    let fit = fit_algebraic_rate(&series.times(), &series.column(|s| s.norm2_dev), FitWindow::LastDecade);
    checks.push(match fit {
        Some(fit) => gated(
            Check::passed_if("algebraic_exponent", (fit.slope - target).abs() <= exponent_tolerance, fit.slope, target),
            &fit,
        ),
        None => Check::new("algebraic_exponent", Status::Inconclusive, None, Some(target)).because("too_few_points"),
    });
    Verdict { checks, config_hash: series.config_hash.clone() }
}

/// One row of an epsilon sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub epsilon: f64,
    /// `max_t ||rho_eps - rho_0||_{L^2}`.
    pub err_heat: f64,
    /// `||rho_eps(T) - rho_0(T)|| / ||rho_0(T) - mean||`.
    pub rel_err_final: f64,
    /// `sup_t ||(1 - Pi) f_eps|| / eps`.
    pub sup_micro_over_eps: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub config_hash: String,
}

impl SweepTable {
    pub fn write_csv(&self, mut out: impl Write) -> io::Result<()> {
        writeln!(out, "epsilon,err_heat,sup_micro_over_eps")?;
        for r in &self.rows {
            writeln!(out, "{:e},{:e},{:e}", r.epsilon, r.err_heat, r.sup_micro_over_eps)?;
        }
        Ok(())
    }
}

/// Errors strictly decrease along the sweep (ordered by decreasing epsilon),
/// and the scaled micro norm stays within a factor 2 of its value at the
/// largest epsilon.
pub fn sweep_verdict(table: &SweepTable) -> Verdict {
    let mut rows = table.rows.clone();
    rows.sort_by(|a, b| b.epsilon.total_cmp(&a.epsilon));
    let mut checks = Vec::new();
    if rows.len() > 1 {
        let worst = rows.windows(2).map(|w| w[1].err_heat / w[0].err_heat).fold(0.0, f64::max);
        checks.push(Check::passed_if("error_monotone", worst < 1.0, worst, 1.0));
    }
    if let Some(first) = rows.first() {
        let spread = rows.iter().map(|r| r.sup_micro_over_eps / first.sup_micro_over_eps).fold(0.0, f64::max);
        checks.push(Check::passed_if("micro_bounded", spread < 2.0, spread, 2.0));
    }
    Verdict { checks, config_hash: table.config_hash.clone() }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(times: &[f64], f: impl Fn(f64) -> f64) -> DiagnosticsSeries {
        let samples = times
            .iter()
            .map(|&t| Sample {
                t,
                mass: 1.0,
                norm2_dev: f(t),
                entropy_h: 0.5 * f(t),
                dissipation: 0.0,
                micro_norm2: 0.0,
                envelope_z: None,
                dissipated: None,
            })
            .collect();
        DiagnosticsSeries { samples, config_hash: "x".into(), min_relative_density: 0.0 }
    }

    fn grid(n: usize, t_end: f64) -> Vec<f64> {
        (0..=n).map(|k| t_end * k as f64 / n as f64).collect()
    }

    #[test]
    fn exponential_fits() {
        let t = grid(200, 10.0);
        let y: Vec<f64> = t.iter().map(|t| (-3.0 * t).exp()).collect();
        let fit = fit_exponential_rate(&t, &y, FitWindow::LastHalf).unwrap();
        assert!((fit.slope - 3.0).abs() < 1e-10 && (fit.r_squared - 1.0).abs() < 1e-12);

        let y: Vec<f64> = t.iter().map(|t| (-3.0 * t).exp() * (2.0 + t.cos())).collect();
        let fit = fit_exponential_rate(&t, &y, FitWindow::Range(0.0, 10.0)).unwrap();
        assert!(fit.slope > 2.8 && fit.slope < 3.2, "{}", fit.slope);

        let fit = fit_exponential_rate(&t, &vec![0.7; t.len()], FitWindow::LastHalf).unwrap();
        assert_eq!(fit.slope, 0.0);
    }

    #[test]
    fn scaling_changes_only_the_intercept() {
        let t = grid(50, 4.0);
        let y: Vec<f64> = t.iter().map(|t| (-0.7 * t).exp() * (1.5 + (3.0 * t).sin())).collect();
        let scaled: Vec<f64> = y.iter().map(|v| 8.0 * v).collect();
        let a = fit_exponential_rate(&t, &y, FitWindow::LastDecade).unwrap();
        let b = fit_exponential_rate(&t, &scaled, FitWindow::LastDecade).unwrap();
        assert!((a.slope - b.slope).abs() < 1e-12);
        assert!((b.intercept - a.intercept - 8f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn floor_values_are_skipped() {
        let t = grid(20, 20.0);
        let y: Vec<f64> = t.iter().map(|t| if *t < 15.0 { (-t).exp() } else { 1e-13 }).collect();
        let fit = fit_exponential_rate(&t, &y, FitWindow::Range(0.0, 20.0)).unwrap();
        assert_eq!(fit.points, 15);
        assert!((fit.slope - 1.0).abs() < 1e-10);
    }

    #[test]
    fn algebraic_fits() {
        let t = grid(400, 100.0);
        let y: Vec<f64> = t.iter().map(|t| (1.0 + t).powf(-0.5)).collect();
        let fit = fit_algebraic_rate(&t, &y, FitWindow::LastDecade).unwrap();
        assert!((fit.slope + 0.5).abs() < 1e-10);

        // Deterministic 10% multiplicative noise.
        let noisy: Vec<f64> = y
            .iter()
            .enumerate()
            .map(|(k, v)| v * (1.0 + 0.1 * ((k as f64 * 12.9898).sin() * 43758.5453).fract()))
            .collect();
        let fit = fit_algebraic_rate(&t, &noisy, FitWindow::LastDecade).unwrap();
        assert!((fit.slope + 0.5).abs() < 0.1, "{}", fit.slope);

        let fit = fit_algebraic_rate(&t, &vec![2.0; t.len()], FitWindow::LastDecade).unwrap();
        assert_eq!(fit.slope, 0.0);
    }

    fn report(lambda: f64) -> CertificateReport {
        use crate::certificates::CertificateInput;
        use crate::network::{compute_equilibrium, shortest_paths, ReactionNetwork};
        let net = ReactionNetwork::new(2, vec![vec![0.0, 1.0], vec![1.0, 0.0]], vec![1.0, 1.0]).unwrap();
        let eq = compute_equilibrium(&net).unwrap();
        let paths = shortest_paths(&net, &eq).unwrap();
        let mut r = CertificateReport::new(&net, &eq, &paths, &CertificateInput::default()).unwrap();
        r.lambda_torus = lambda;
        r
    }

    #[test]
    fn torus_verdicts() {
        let t = grid(100, 10.0);
        let ok = torus_verdict(&series(&t, |t| (-t).exp()), &report(0.5));
        assert!(ok.passed() && ok.checks.iter().all(|c| c.status == Status::Pass));

        let flat = torus_verdict(&series(&t, |_| 0.0), &report(0.5));
        assert!(flat.checks.iter().all(|c| c.status == Status::Pass));

        let slow = torus_verdict(&series(&t, |t| (-0.1 * t).exp()), &report(0.5));
        assert_eq!(slow.check("decay_rate").unwrap().status, Status::Fail);

        let growing = torus_verdict(&series(&t, |t| 1.0 + 0.01 * t), &report(0.0));
        let c = growing.check("entropy_monotone").unwrap();
        assert_eq!(c.status, Status::Fail);
        assert_eq!(c.reason.as_deref(), Some("entropy_increase"));
        assert!(!growing.passed());

        let wobbly = torus_verdict(&series(&t, |t| (-t).exp() * (1.0 + 0.9 * (5.0 * t).sin())), &report(0.1));
        assert_eq!(wobbly.check("decay_rate").unwrap().status, Status::Inconclusive);
    }

    #[test]
    fn whole_space_verdicts() {
        let t = grid(100, 100.0);
        let mut s = series(&t, |t| (1.0 + t).powf(-0.5));
        for x in &mut s.samples {
            x.envelope_z = Some(2.0 * x.norm2_dev);
        }
        let v = whole_space_verdict(&s, 1, 0.15);
        assert!(v.checks.iter().all(|c| c.status == Status::Pass), "{v:?}");
        s.samples[50].envelope_z = Some(0.5 * s.samples[50].norm2_dev);
        assert_eq!(whole_space_verdict(&s, 1, 0.15).check("envelope").unwrap().status, Status::Fail);
    }

    #[test]
    fn sweep_verdicts() {
        let row =
            |epsilon, err_heat, micro| SweepRow { epsilon, err_heat, rel_err_final: 0.0, sup_micro_over_eps: micro };
        let table = SweepTable {
            rows: vec![row(1.0, 0.3, 1.0), row(0.5, 0.1, 1.2), row(0.25, 0.05, 1.1)],
            config_hash: String::new(),
        };
        assert!(sweep_verdict(&table).passed());
        let single = SweepTable { rows: vec![row(1.0, 0.3, 1.0)], config_hash: String::new() };
        let v = sweep_verdict(&single);
        assert!(v.check("error_monotone").is_none() && v.passed());
        let bad = SweepTable { rows: vec![row(1.0, 0.3, 1.0), row(0.5, 0.4, 3.0)], config_hash: String::new() };
        let v = sweep_verdict(&bad);
        assert_eq!(v.check("error_monotone").unwrap().status, Status::Fail);
        assert_eq!(v.check("micro_bounded").unwrap().status, Status::Fail);
    }

    #[test]
    fn csv_headers() {
        let mut buf = Vec::new();
        series(&[0.0, 1.0], |_| 1.0).write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), "t,mass,norm2_dev,entropy_H,dissipation,micro_norm2");
        assert_eq!(text.lines().count(), 3);
        let mut buf = Vec::new();
        SweepTable::default().write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().trim(), "epsilon,err_heat,sup_micro_over_eps");
    }

    #[test]
    fn hash_is_stable_and_length_prefixed() {
        let a = config_hash(&[b"ab", b"c"]);
        assert_eq!(a.len(), 64);
        assert_eq!(a, config_hash(&[b"ab", b"c"]));
        assert_ne!(a, config_hash(&[b"a", b"bc"]));
    }

    #[test]
    fn negativity_is_reported_past_the_tolerance() {
        let mut s = series(&[0.0, 1.0], |_| 1.0);
        s.min_relative_density = -1e-12;
        assert!(s.negativity_warning().is_none());
        s.min_relative_density = -1e-6;
        assert!(s.negativity_warning().unwrap().contains("-1.000e-6"));
    }
}
