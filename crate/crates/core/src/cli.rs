//! Command-line front end.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::dynamics::{liouvillian_for, mean_phonon, steady_state, STEADY_DIM_CAP};
use crate::error::{Error, Result};
use crate::harness::{self, output, CheckOptions, CheckStatus, RobustnessWindow, Scenario, ScenarioOutput};
use crate::model::{magic_condition, IonParams, RecoilOrder};
use crate::rates;
use crate::spectra::{fig2_params, ZERO_TOL};

#[derive(Debug, Parser)]
#[command(name = "darkcool", version, about = "Double-dark-state cooling of a trapped ion")]
pub struct Cli {
    /// Also write JSON-lines files next to the CSV output.
    #[arg(long, global = true)]
    pub jsonl: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct ParamArgs {
    /// Parameter file (`key = value` lines); defaults to the reference point.
    #[arg(long, short)]
    pub config: Option<PathBuf>,
}

impl ParamArgs {
    fn load(&self) -> Result<IonParams> {
        match &self.config {
            Some(path) => harness::load_params(path),
            None => Ok(IonParams::fig3()),
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evolve the master equation and fit the cooling curve.
    Evolve {
        #[command(flatten)]
        params: ParamArgs,
        /// Length of the run in units of 1/W.
        #[arg(long, default_value_t = 6.0)]
        horizon: f64,
        #[arg(long, default_value_t = 121)]
        samples: usize,
    },
    /// Steady-state phonon number of the full generator.
    Steady {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value_t = 8)]
        cutoff: usize,
    },
    /// Heating and cooling rates from every available route.
    Rates {
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Absorption spectrum against Δ_r.
    Spectrum {
        #[command(flatten)]
        params: ParamArgs,
        /// Use the spectrum-figure parameter set instead of the file.
        #[arg(long, conflicts_with = "config")]
        fig2: bool,
        #[arg(long, allow_hyphen_values = true)]
        from: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        to: Option<f64>,
        /// Grid size; 601 when unset.
        #[arg(long)]
        points: Option<usize>,
    },
    /// Sweep one parameter and compare numeric and analytic results.
    Sweep {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        axis: String,
        /// Comma-separated grid values.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        values: Vec<f64>,
        /// Re-derive the optimal Δ_g at every point.
        #[arg(long)]
        optimal: bool,
        #[arg(long, default_value_t = 8)]
        cutoff: usize,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Optimal Δ_g and the maximal cooling rate for the given Rabi frequencies.
    Optimize {
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Run the invariant suite.
    Check {
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Run a builtin scenario (fig2 … fig7).
    Scenario {
        name: String,
        /// Half width of the fig6/fig7 window as a fraction of its centre.
        #[arg(long)]
        width: Option<f64>,
        /// Centre of the fig6/fig7 window.
        #[arg(long, allow_hyphen_values = true)]
        center: Option<f64>,
    },
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let mut out = std::io::stdout().lock();
    match run(&cli, &mut out) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            harness::exit_code(&e)
        }
    }
}

fn save<R: serde::Serialize>(out: &mut dyn Write, stem: &str, rows: &[R], jsonl: bool) -> Result<()> {
    for p in output::save(stem, rows, jsonl)? {
        writeln!(out, "wrote {}", p.display())?;
    }
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), |v| format!("{v:.6e}"))
}

/// Runs a parsed command, writing the summary to `out`. Returns the exit
/// code for completed runs; errors map through [`harness::exit_code`].
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<i32> {
    let jsonl = cli.jsonl;
    match &cli.command {
        Command::Evolve { params, horizon, samples } => {
            let mut s = Scenario::new("evolve", params.load()?);
            s.evolve_horizon = *horizon;
            s.samples = *samples;
            report_dynamics(out, &harness::run_cooling_dynamics(&s)?, "evolve", jsonl)?;
        }
        Command::Steady { params, cutoff } => {
            let p = params.load()?.with_cutoff(*cutoff);
            if p.joint_dim() > STEADY_DIM_CAP {
                return Err(Error::DimensionCap { dim: p.joint_dim(), cap: STEADY_DIM_CAP });
            }
            let rho = steady_state(&liouvillian_for(&p, RecoilOrder::First)?)?;
            writeln!(out, "cutoff        {cutoff}")?;
            writeln!(out, "nss_numeric   {:.6e}", mean_phonon(&rho, *cutoff)?)?;
            writeln!(out, "nss_analytic  {:.6e}", rates::nss_analytic(&p))?;
        }
        Command::Rates { params } => {
            let p = params.load()?;
            let m = magic_condition(&p);
            writeln!(out, "dark_state    {} (residual {:.3e})", m.dark_state, m.dark_state_residual)?;
            writeln!(out, "blue_eit      {} (residual {:.3e})", m.blue_eit, m.blue_eit_residual)?;
            let res = rates::rates_resolvent(&p)?;
            writeln!(out, "resolvent     A+ {:.6e}  A- {:.6e}  W {:.6e}  nss {:.6e}", res.a_plus, res.a_minus, res.w, res.nss)?;
            match rates::rates_closed_form(&p) {
                Ok(c) => writeln!(out, "printed cubic A+ {:.6e}  A- {:.6e}  W {:.6e}", c.a_plus, c.a_minus, c.w)?,
                Err(e) => writeln!(out, "printed cubic unavailable: {e}")?,
            }
            writeln!(out, "w_closed_form {}", opt(rates::w_closed_form(&p).ok()))?;
            writeln!(out, "w_max         {}", opt(rates::w_max(&p).ok()))?;
            writeln!(out, "nss_analytic  {:.6e}", rates::nss_analytic(&p))?;
            if let Ok(d) = rates::discrepancy_report(&p) {
                writeln!(
                    out,
                    "printed vs simplified A-: relative gap {:.3e}{}",
                    d.printed_vs_simplified,
                    if d.printed_consistent { "" } else { " (known-inconsistent, oracle substituted)" }
                )?;
            }
        }
        Command::Spectrum { params, fig2, from, to, points } => {
            let p = if *fig2 { fig2_params() } else { params.load()? };
            let mut s = Scenario::new("spectrum", p);
            s.outputs.spectrum = true;
            if from.is_some() || to.is_some() || points.is_some() {
                let g = s.params.gamma();
                let (a, b, n) = (from.unwrap_or(-3.0 * g), to.unwrap_or(3.0 * g), points.unwrap_or(601));
                if !(b > a) || n < 3 {
                    return Err(Error::Config("spectrum range needs from < to and at least 3 points".into()));
                }
                s.spectrum_grid = Some((0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect());
            }
            report_spectrum(out, &harness::run_spectrum(&s)?, "spectrum", jsonl)?;
        }
        Command::Sweep { params, axis, values, optimal, cutoff, threads } => {
            let mut s = Scenario::new("sweep", params.load()?).with_sweep(axis, values.clone());
            s.optimal_delta_g = *optimal;
            s.sweep_cutoff = *cutoff;
            s.threads = *threads;
            return report_sweep(out, &harness::run_sweep(&s)?, "sweep", jsonl);
        }
        Command::Optimize { params } => {
            let p = rates::with_optimal_delta_g(&params.load()?);
            writeln!(out, "delta_g_opt   {:.12}", p.delta_g)?;
            writeln!(out, "w_max         {:.6e}", rates::w_max(&p)?)?;
            writeln!(out, "nss_analytic  {:.6e}", rates::nss_analytic(&p))?;
        }
        Command::Check { params } => {
            let report = harness::self_check(&params.load()?, CheckOptions::default());
            for c in &report.checks {
                let tag = match c.status {
                    CheckStatus::Pass => "PASS",
                    CheckStatus::Fail => "FAIL",
                    CheckStatus::KnownInconsistent => "KNOWN",
                };
                writeln!(out, "{tag:5} {:32} residual {:.3e} (tol {:.1e})  {}", c.name, c.residual, c.tolerance, c.detail)?;
            }
            return Ok(if report.passed() { 0 } else { 2 });
        }
        Command::Scenario { name, width, center } => {
            let mut s = harness::builtin(name)?;
            if width.is_some() || center.is_some() {
                let mut w = RobustnessWindow::default_for(name)?;
                w.half_width = width.unwrap_or(w.half_width);
                w.center = center.unwrap_or(w.center);
                let r = harness::run_robustness(name, Some(w))?;
                return report_sweep(out, &r.sweep, name, jsonl);
            }
            s.name = name.clone();
            match harness::run_scenario(&s)? {
                ScenarioOutput::Spectrum(r) => report_spectrum(out, &r, name, jsonl)?,
                ScenarioOutput::Dynamics(r) => report_dynamics(out, &r, name, jsonl)?,
                ScenarioOutput::Sweep(r) => return report_sweep(out, &r, name, jsonl),
            }
        }
    }
    Ok(0)
}

fn report_dynamics(out: &mut dyn Write, r: &harness::CoolingRun, stem: &str, jsonl: bool) -> Result<()> {
    save(out, stem, &output::trajectory_rows(&r.trajectory), jsonl)?;
    let c = &r.comparison;
    writeln!(out, "cutoff        {}{}", r.params.fock_cutoff, if r.cutoff_capped { " (capped)" } else { "" })?;
    writeln!(out, "t_end         {:.6e}", r.t_end)?;
    match &r.fit {
        Ok(f) => writeln!(out, "fit           n0 {:.6e}  nss {:.6e}  W {:.6e}{}", f.n0, f.nss, f.w, if f.insufficient_decay { "  (insufficient decay)" } else { "" })?,
        Err(e) => writeln!(out, "fit failed    {e}")?,
    }
    writeln!(out, "nss_analytic  {:.6e}  deviation {}", c.nss_analytic, opt(c.nss_deviation))?;
    writeln!(out, "w_max         {}  deviation {}", opt(c.w_max), opt(c.w_deviation))?;
    writeln!(out, "w_resolvent   {}  deviation {}", opt(c.w_resolvent), opt(c.w_resolvent_deviation))?;
    let d = &r.trajectory.diagnostics;
    writeln!(out, "diagnostics   trace {:.2e}  hermiticity {:.2e}  min eig {:.2e}  tail {:.2e}", d.max_trace_drift, d.max_hermiticity_defect, d.min_eigenvalue, d.max_tail)?;
    Ok(())
}

fn report_spectrum(out: &mut dyn Write, r: &harness::SpectrumRun, stem: &str, jsonl: bool) -> Result<()> {
    save(out, stem, &output::spectrum_rows(&r.spectrum), jsonl)?;
    match &r.features {
        Ok(f) => {
            writeln!(out, "zeros         {:?} (threshold {ZERO_TOL:.0e} of peak)", f.zeros)?;
            writeln!(out, "peak          {:.6e} at {:.6}", f.peak.value, f.peak.detuning)?;
            if let Some(ip) = f.interior_peak {
                writeln!(out, "interior peak {:.6e} at {:.6}", ip.value, ip.detuning)?;
            }
            writeln!(out, "separation    {}  within 2% of expected: {:?}", opt(f.separation), f.separation_ok)?;
        }
        Err(e) => writeln!(out, "features      {e}")?,
    }
    Ok(())
}

fn report_sweep(out: &mut dyn Write, r: &harness::SweepResult, stem: &str, jsonl: bool) -> Result<i32> {
    save(out, stem, &output::sweep_rows(r), jsonl)?;
    writeln!(out, "{:>12} {:>14} {:>14} {:>14} {:>14}  status", r.axis, "nss_numeric", "nss_analytic", "w_numeric", "w_resolvent")?;
    for p in &r.points {
        writeln!(out, "{:>12.6} {:>14} {:>14.6e} {:>14} {:>14}  {}", p.axis_value, opt(p.nss_numeric), p.nss_analytic, opt(p.w_numeric), opt(p.w_resolvent), p.status)?;
    }
    if let (Some(max), Some(spread)) = (r.max_nss(), r.spread()) {
        writeln!(out, "max nss {max:.6e}  spread {spread:.6e}  argmin {}", opt(r.argmin()))?;
    }
    Ok(if r.points.iter().all(|p| p.is_ok()) { 0 } else { 2 })
}
