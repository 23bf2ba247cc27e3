//! Named scenarios, parameter sweeps and the comparison of master-equation
//! results against the rate theory.

pub mod check;
pub mod config;
pub mod output;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{
    choose_cutoff, dark_thermal_state, eigenvalue_near, evolve, fit_exponential, fock_tail,
    liouvillian_for, mean_phonon, steady_state, CoolingTrajectory, FitResult, CUTOFF_CAP,
    STEADY_DIM_CAP, TRUNCATION_TOL,
};
use crate::error::{Error, Result};
use crate::model::{IonParams, RecoilOrder};
use crate::rates::{
    nss_analytic, optimal_delta_g, rates_resolvent, w_closed_form, w_max, Source,
};
use crate::spectra::{
    absorption_at, absorption_spectrum, default_grid, fig2_params, locate_features_exact,
    Features, Spectrum, ZERO_TOL,
};

pub use check::{self_check, self_check_from_config, CheckOptions, CheckReport, CheckStatus};
pub use config::{load_params, parse_params};

/// Worker count for sweeps.
pub const ENV_THREADS: &str = "DARKCOOL_THREADS";
/// Directory for CSV and JSON-lines output.
pub const ENV_OUT_DIR: &str = "DARKCOOL_OUT_DIR";

/// Relative tolerance on the fitted cooling rate.
pub const W_TOL: f64 = 0.2;
/// Relative tolerance on the fitted final occupation.
pub const NSS_TOL: f64 = 0.3;
/// Evolution time per horizon unit when no cooling rate is available, in 1/ν.
pub const FALLBACK_TIME_UNIT: f64 = 100.0;
pub const BUILTINS: [&str; 6] = ["fig2", "fig3", "fig4", "fig5", "fig6", "fig7"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepAxis {
    pub param: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Outputs {
    pub trajectory: bool,
    pub fit: bool,
    pub rates: bool,
    pub spectrum: bool,
}

impl Default for Outputs {
    fn default() -> Self {
        Self { trajectory: true, fit: true, rates: true, spectrum: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub name: String,
    pub params: IonParams,
    pub sweep: Option<SweepAxis>,
    /// Re-derive Δ_g at every sweep point.
    pub optimal_delta_g: bool,
    /// Evolution length in units of 1/W.
    pub evolve_horizon: f64,
    pub samples: usize,
    /// Fock cutoff for steady-state solves in sweeps.
    pub sweep_cutoff: usize,
    pub spectrum_grid: Option<Vec<f64>>,
    /// Overrides the worker count from the environment.
    pub threads: Option<usize>,
    pub outputs: Outputs,
}

impl Scenario {
    pub fn new(name: &str, params: IonParams) -> Self {
        Self {
            name: name.to_string(),
            params,
            sweep: None,
            optimal_delta_g: false,
            evolve_horizon: 6.0,
            samples: 121,
            sweep_cutoff: 8,
            spectrum_grid: None,
            threads: None,
            outputs: Outputs::default(),
        }
    }

    pub fn with_sweep(mut self, param: &str, values: Vec<f64>) -> Self {
        self.sweep = Some(SweepAxis { param: param.to_string(), values });
        self.outputs = Outputs { trajectory: false, fit: false, rates: true, spectrum: false };
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if let Some(axis) = &self.sweep {
            if axis.param == "fock_cutoff" || !config::KEYS.contains(&axis.param.as_str()) {
                return Err(Error::Config(format!("unknown sweep axis `{}`", axis.param)));
            }
            if axis.values.is_empty() {
                return Err(Error::Config("sweep grid is empty".into()));
            }
            if axis.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::Config("sweep grid has non-finite values".into()));
            }
        }
        if !(self.evolve_horizon > 0.0 && self.evolve_horizon.is_finite()) {
            return Err(Error::Config(format!("evolve horizon {} must be positive", self.evolve_horizon)));
        }
        if self.samples < crate::dynamics::fit::MIN_SAMPLES {
            return Err(Error::Config(format!("at least {} samples required", crate::dynamics::fit::MIN_SAMPLES)));
        }
        if self.sweep_cutoff < 2 {
            return Err(Error::Config("sweep cutoff must be at least 2".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("thread count must be positive".into()));
        }
        Ok(())
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
}

/// Builtin scenarios `fig2` … `fig7`.
pub fn builtin(name: &str) -> Result<Scenario> {
    let fig3 = IonParams::fig3();
    Ok(match name {
        "fig2" => {
            let mut s = Scenario::new(name, fig2_params());
            s.outputs = Outputs { trajectory: false, fit: false, rates: false, spectrum: true };
            s
        }
        "fig3" => {
            // A colder start and twelve decay times let the tail resolve n_ss.
            let mut s = Scenario::new(name, IonParams { nbar0: 0.25, ..fig3 });
            s.evolve_horizon = 12.0;
            s.samples = 241;
            s
        }
        "fig4" => {
            let mut s = Scenario::new(name, fig3).with_sweep("omega_g", vec![5.0, 7.5, 10.0, 12.5, 15.0]);
            s.optimal_delta_g = true;
            s
        }
        "fig5" => {
            let mut s = Scenario::new(name, fig3).with_sweep("omega_r", vec![0.5, 1.0, 1.5, 2.0, 2.5, 3.0]);
            s.optimal_delta_g = true;
            s
        }
        "fig6" | "fig7" => robustness_scenario(name, RobustnessWindow::default_for(name)?)?,
        _ => {
            return Err(Error::Config(format!(
                "unknown scenario `{name}`; builtins are {}",
                BUILTINS.join(", ")
            )))
        }
    })
}

/// Cooling rate used to set the evolution horizon: resolvent W, else the
/// closed-form maximum.
pub fn reference_rate(p: &IonParams) -> Option<(f64, Source)> {
    let ok = |w: f64| w > 0.0 && w.is_finite();
    match rates_resolvent(p) {
        Ok(r) if ok(r.w) => Some((r.w, Source::Resolvent)),
        _ => w_max(p).ok().filter(|&w| ok(w)).map(|w| (w, Source::ClosedForm)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub w_fit: Option<f64>,
    pub w_max: Option<f64>,
    pub w_resolvent: Option<f64>,
    /// (fit − w_max) / w_max.
    pub w_deviation: Option<f64>,
    /// (fit − resolvent) / resolvent.
    pub w_resolvent_deviation: Option<f64>,
    pub nss_fit: Option<f64>,
    pub nss_analytic: f64,
    pub nss_deviation: Option<f64>,
    pub w_ok: bool,
    pub nss_ok: bool,
}

#[derive(Debug, Clone)]
pub struct CoolingRun {
    /// Parameters as evolved, with the cutoff possibly raised.
    pub params: IonParams,
    pub cutoff_capped: bool,
    pub t_end: f64,
    pub trajectory: CoolingTrajectory,
    pub fit: std::result::Result<FitResult, Error>,
    pub comparison: Comparison,
}

fn rel_dev(a: f64, b: f64) -> Option<f64> {
    (b != 0.0 && a.is_finite() && b.is_finite()).then(|| (a - b) / b)
}

/// Evolves |D⟩⟨D| ⊗ thermal(n̄₀) for `evolve_horizon / W` and fits the decay.
/// Fit failures are recorded in the result rather than returned.
pub fn run_cooling_dynamics(s: &Scenario) -> Result<CoolingRun> {
    if s.sweep.is_some() {
        return Err(Error::Config(format!("scenario `{}` has a sweep axis", s.name)));
    }
    s.validate()?;
    let mut p = s.params.clone();
    let choice = choose_cutoff(p.nbar0, p.fock_cutoff, CUTOFF_CAP.max(p.fock_cutoff), TRUNCATION_TOL)?;
    if choice.cutoff != p.fock_cutoff {
        log::info!("fock cutoff raised from {} to {}", p.fock_cutoff, choice.cutoff);
    }
    p.fock_cutoff = choice.cutoff;

    let t_end = match reference_rate(&p) {
        Some((w, _)) => s.evolve_horizon / w,
        None => s.evolve_horizon * FALLBACK_TIME_UNIT / p.nu,
    };
    let grid = linspace(0.0, t_end, s.samples);
    let l = liouvillian_for(&p, RecoilOrder::First)?;
    let ev = evolve(&l, &dark_thermal_state(&p)?, &grid)?;
    let fit = fit_exponential(&ev.trajectory);

    let wm = w_max(&p).ok();
    let wr = rates_resolvent(&p).ok().map(|r| r.w);
    let na = nss_analytic(&p);
    let f = fit.as_ref().ok();
    let w_fit = f.map(|f| f.w);
    let nss_fit = f.map(|f| f.nss);
    let w_deviation = w_fit.zip(wm).and_then(|(a, b)| rel_dev(a, b));
    let nss_deviation = nss_fit.and_then(|a| rel_dev(a, na));
    let comparison = Comparison {
        w_fit,
        w_max: wm,
        w_resolvent: wr,
        w_deviation,
        w_resolvent_deviation: w_fit.zip(wr).and_then(|(a, b)| rel_dev(a, b)),
        nss_fit,
        nss_analytic: na,
        nss_deviation,
        w_ok: w_deviation.is_some_and(|d| d.abs() <= W_TOL),
        nss_ok: nss_deviation.is_some_and(|d| d.abs() <= NSS_TOL),
    };
    if !(comparison.w_ok && comparison.nss_ok) {
        log::warn!("scenario `{}`: fit disagrees with the rate theory: {comparison:?}", s.name);
    }
    Ok(CoolingRun {
        params: p,
        cutoff_capped: choice.capped,
        t_end,
        trajectory: ev.trajectory,
        fit,
        comparison,
    })
}

/// One sweep row. Numeric and analytic values are always both present as
/// columns; a failed numeric value stays empty and `status` says why.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub axis_value: f64,
    pub delta_g: f64,
    pub nss_numeric: Option<f64>,
    pub nss_analytic: f64,
    pub w_numeric: Option<f64>,
    pub w_resolvent: Option<f64>,
    pub w_closed_form: Option<f64>,
    pub tail: Option<f64>,
    pub status: String,
    pub provenance: String,
}

impl SweepPoint {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub scenario: String,
    pub axis: String,
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    pub fn nss_numeric(&self) -> Vec<Option<f64>> {
        self.points.iter().map(|p| p.nss_numeric).collect()
    }

    fn ok_values(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.points.iter().filter_map(|p| p.nss_numeric.map(|n| (p.axis_value, n)))
    }

    pub fn max_nss(&self) -> Option<f64> {
        self.ok_values().map(|v| v.1).reduce(f64::max)
    }

    pub fn min_nss(&self) -> Option<f64> {
        self.ok_values().map(|v| v.1).reduce(f64::min)
    }

    pub fn spread(&self) -> Option<f64> {
        Some(self.max_nss()? - self.min_nss()?)
    }

    /// Axis value with the smallest numeric n_ss.
    pub fn argmin(&self) -> Option<f64> {
        self.ok_values().min_by(|a, b| a.1.total_cmp(&b.1)).map(|v| v.0)
    }

    pub fn max_tail(&self) -> Option<f64> {
        self.points.iter().filter_map(|p| p.tail).reduce(f64::max)
    }
}

/// Worker count: scenario override, then the environment, then the
/// available parallelism.
pub fn thread_count(s: &Scenario) -> Result<usize> {
    if let Some(n) = s.threads {
        return Ok(n);
    }
    match std::env::var(ENV_THREADS) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(Error::Config(format!("{ENV_THREADS} = `{v}` is not a positive integer"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

/// Runs every sweep point on a worker pool and returns the rows in grid
/// order. Point failures become error rows.
pub fn run_sweep(s: &Scenario) -> Result<SweepResult> {
    s.validate()?;
    let axis = s
        .sweep
        .as_ref()
        .ok_or_else(|| Error::Config(format!("scenario `{}` has no sweep axis", s.name)))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count(s)?)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let points = pool.install(|| {
        axis.values
            .par_iter()
            .map(|&v| sweep_point(s, &axis.param, v))
            .collect::<Vec<_>>()
    });
    Ok(SweepResult { scenario: s.name.clone(), axis: axis.param.clone(), points })
}

fn point_params(s: &Scenario, axis: &str, value: f64) -> Result<IonParams> {
    let mut p = s.params.clone();
    config::set_param(&mut p, axis, value)?;
    if s.optimal_delta_g {
        p.delta_g = optimal_delta_g(&p);
    }
    p.fock_cutoff = s.sweep_cutoff;
    Ok(p)
}

fn sweep_point(s: &Scenario, axis: &str, value: f64) -> SweepPoint {
    let mut row = SweepPoint {
        axis_value: value,
        delta_g: f64::NAN,
        nss_numeric: None,
        nss_analytic: f64::NAN,
        w_numeric: None,
        w_resolvent: None,
        w_closed_form: None,
        tail: None,
        status: "ok".into(),
        provenance: String::new(),
    };
    let p = match point_params(s, axis, value) {
        Ok(p) => p,
        Err(e) => {
            row.status = format!("error: {e}");
            return row;
        }
    };
    row.delta_g = p.delta_g;
    row.nss_analytic = nss_analytic(&p);
    row.w_resolvent = rates_resolvent(&p).ok().map(|r| r.w);
    row.w_closed_form = w_closed_form(&p).ok();
    let mut nss_src = "none";
    let mut w_src = "none";
    match numeric_point(s, &p, row.w_resolvent) {
        Ok(n) => {
            row.nss_numeric = Some(n.nss);
            row.w_numeric = n.w;
            row.tail = Some(n.tail);
            nss_src = n.nss_source;
            if n.w.is_some() {
                w_src = n.w_source;
            }
        }
        Err(e) => {
            log::warn!("sweep `{}` {axis} = {value}: {e}", s.name);
            row.status = format!("error: {e}");
        }
    }
    let me = Source::MasterEquation.as_str();
    row.provenance = format!(
        "nss_numeric={me}:{nss_src};w_numeric={me}:{w_src};nss_analytic={};w_resolvent={};w_closed_form={}",
        Source::ClosedForm.as_str(),
        Source::Resolvent.as_str(),
        Source::ClosedForm.as_str(),
    );
    row
}

struct NumericPoint {
    nss: f64,
    w: Option<f64>,
    tail: f64,
    nss_source: &'static str,
    w_source: &'static str,
}

/// Steady state of the full generator below the dimension cap, otherwise a
/// long-horizon evolution and fit.
fn numeric_point(s: &Scenario, p: &IonParams, w_guess: Option<f64>) -> Result<NumericPoint> {
    p.validate()?;
    let l = liouvillian_for(p, RecoilOrder::First)?;
    let w_guess = w_guess.or_else(|| w_max(p).ok()).filter(|w| *w > 0.0 && w.is_finite());
    if l.dim() <= STEADY_DIM_CAP {
        let rho = steady_state(&l)?;
        let nss = mean_phonon(&rho, p.fock_cutoff)?;
        let w = w_guess.and_then(|g| {
            let lam = eigenvalue_near(&l, C64::new(-g, 0.0), STEADY_DIM_CAP).ok()?;
            (lam.im.abs() <= 1e-6 * g).then_some(-lam.re)
        });
        Ok(NumericPoint {
            nss,
            w,
            tail: fock_tail(&rho, p.fock_cutoff),
            nss_source: "steady_state",
            w_source: "eigenvalue",
        })
    } else {
        let w = w_guess.ok_or_else(|| Error::InvalidArgument("no cooling rate to set the horizon".into()))?;
        let grid = linspace(0.0, s.evolve_horizon / w, s.samples);
        let ev = evolve(&l, &dark_thermal_state(p)?, &grid)?;
        let fit = fit_exponential(&ev.trajectory)?;
        Ok(NumericPoint {
            nss: fit.nss,
            w: Some(fit.w),
            tail: ev.trajectory.diagnostics.max_tail,
            nss_source: "fit",
            w_source: "fit",
        })
    }
}

/// Window of a robustness scan around its centre value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RobustnessWindow {
    pub center: f64,
    /// Half width as a fraction of |center|.
    pub half_width: f64,
    pub points: usize,
}

impl RobustnessWindow {
    /// ±20% around Ω_MW = −ν/2 (fig6) or Ω_g = 10ν (fig7), nine points.
    pub fn default_for(name: &str) -> Result<Self> {
        let center = match name {
            "fig6" => -0.5,
            "fig7" => 10.0,
            _ => return Err(Error::Config(format!("no robustness scan named `{name}`"))),
        };
        Ok(Self { center, half_width: 0.2, points: 9 })
    }

    pub fn values(&self) -> Vec<f64> {
        let h = self.half_width * self.center.abs();
        if h == 0.0 {
            return vec![self.center];
        }
        linspace(self.center - h, self.center + h, self.points)
    }
}

fn robustness_scenario(name: &str, window: RobustnessWindow) -> Result<Scenario> {
    let axis = match name {
        "fig6" => "omega_mw",
        "fig7" => "omega_g",
        _ => return Err(Error::Config(format!("no robustness scan named `{name}`"))),
    };
    if !(window.half_width >= 0.0) || window.points == 0 {
        return Err(Error::Config("robustness window needs a non-negative width and points".into()));
    }
    Ok(Scenario::new(name, IonParams::fig3()).with_sweep(axis, window.values()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RobustnessResult {
    pub sweep: SweepResult,
    pub max_nss: Option<f64>,
    pub min_nss: Option<f64>,
    pub spread: Option<f64>,
    pub argmin: Option<f64>,
}

/// Sweeps Ω_MW (fig6) or Ω_g (fig7) across `window` with Δ_g held at the
/// reference value.
pub fn run_robustness(name: &str, window: Option<RobustnessWindow>) -> Result<RobustnessResult> {
    let window = match window {
        Some(w) => w,
        None => RobustnessWindow::default_for(name)?,
    };
    let sweep = run_sweep(&robustness_scenario(name, window)?)?;
    Ok(RobustnessResult {
        max_nss: sweep.max_nss(),
        min_nss: sweep.min_nss(),
        spread: sweep.spread(),
        argmin: sweep.argmin(),
        sweep,
    })
}

#[derive(Debug, Clone)]
pub struct SpectrumRun {
    pub spectrum: Spectrum,
    pub features: std::result::Result<Features, Error>,
}

pub fn run_spectrum(s: &Scenario) -> Result<SpectrumRun> {
    s.validate()?;
    let p = &s.params;
    let grid = s.spectrum_grid.clone().unwrap_or_else(|| default_grid(p));
    let spectrum = absorption_spectrum(p, &grid)?;
    let features = locate_features_exact(&spectrum, ZERO_TOL, &|d| {
        absorption_at(p, d).unwrap_or(f64::NAN)
    });
    Ok(SpectrumRun { spectrum, features })
}

#[derive(Debug, Clone)]
pub enum ScenarioOutput {
    Spectrum(SpectrumRun),
    Dynamics(CoolingRun),
    Sweep(SweepResult),
}

pub fn run_scenario(s: &Scenario) -> Result<ScenarioOutput> {
    if s.outputs.spectrum {
        run_spectrum(s).map(ScenarioOutput::Spectrum)
    } else if s.sweep.is_some() {
        run_sweep(s).map(ScenarioOutput::Sweep)
    } else {
        run_cooling_dynamics(s).map(ScenarioOutput::Dynamics)
    }
}

/// Process exit code: 1 for configuration errors, 2 for numerical failures.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_config() || matches!(e, Error::Io(_)) {
        1
    } else {
        2
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_resolve_and_validate() {
        for name in BUILTINS {
            builtin(name).unwrap().validate().unwrap();
        }
        assert!(builtin("fig9").unwrap_err().is_config());
    }

    #[test]
    fn bad_axis_is_a_config_error() {
        let s = Scenario::new("x", IonParams::fig3()).with_sweep("omega_q", vec![1.0]);
        assert!(matches!(run_sweep(&s), Err(Error::Config(_))));
        let s = Scenario::new("x", IonParams::fig3()).with_sweep("omega_g", vec![]);
        assert!(matches!(run_sweep(&s), Err(Error::Config(_))));
    }

    #[test]
    fn dynamics_rejects_sweep_scenarios() {
        assert!(run_cooling_dynamics(&builtin("fig4").unwrap()).is_err());
    }

    #[test]
    fn sweep_rows_include_failures() {
        let mut s = Scenario::new("x", IonParams::fig3()).with_sweep("nu", vec![1.0, -1.0]);
        s.sweep_cutoff = 3;
        s.threads = Some(2);
        let r = run_sweep(&s).unwrap();
        assert_eq!(r.points.len(), 2);
        assert!(r.points[0].is_ok());
        assert!(r.points[0].nss_numeric.is_some() && r.points[0].w_numeric.is_some());
        assert!(!r.points[1].is_ok());
        assert!(r.points[1].nss_numeric.is_none());
        assert!(r.points[1].provenance.contains("nss_numeric=master_equation:none"));
    }

    #[test]
    fn window_values() {
        let w = RobustnessWindow { center: -0.5, half_width: 0.2, points: 5 };
        let v = w.values();
        assert_eq!(v.len(), 5);
        assert!((v[0] + 0.6).abs() < 1e-15 && (v[4] + 0.4).abs() < 1e-15);
        let zero = RobustnessWindow { half_width: 0.0, ..w };
        assert_eq!(zero.values(), vec![-0.5]);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Config("x".into())), 1);
        assert_eq!(exit_code(&Error::ToleranceFailure { t: 0.0, h: 0.0 }), 2);
    }
}
