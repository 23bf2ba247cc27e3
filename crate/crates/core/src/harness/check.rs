//! Invariant suite run by the `check` command.

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::dynamics::{build_liouvillian, dark_thermal_state, evolve_with, liouvillian_for, EvolveOptions};
use crate::error::Result;
use crate::linalg::{fock_lowering, DensityMatrix, Operator};
use crate::model::{
    build_h_at, build_internal_jump_operators, dressed_frame, internal_ket, IonParams, Level,
    RecoilOrder, INTERNAL_DIM,
};
use crate::rates::{discrepancy_report, optimality_residual, rates_closed_form, with_optimal_delta_g};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    /// A documented inconsistency, reported but not counted as a failure.
    KnownInconsistent,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub status: CheckStatus,
    pub residual: f64,
    pub tolerance: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub checks: Vec<Check>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != CheckStatus::Fail)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| c.status == CheckStatus::Fail)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Faults that can be injected to confirm the suite detects them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Build the decay channels with half the configured rates.
    HalveGamma,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CheckOptions {
    pub fault: Option<Fault>,
}

pub const NOTE_KNOWN_INCONSISTENT: &str = "known-inconsistent, oracle substituted";

fn check(name: &str, residual: f64, tolerance: f64, detail: String) -> Check {
    let status = if residual <= tolerance { CheckStatus::Pass } else { CheckStatus::Fail };
    Check { name: name.into(), status, residual, tolerance, detail }
}

fn failed(name: &str, e: impl std::fmt::Display) -> Check {
    Check {
        name: name.into(),
        status: CheckStatus::Fail,
        residual: f64::NAN,
        tolerance: 0.0,
        detail: e.to_string(),
    }
}

/// Parses a parameter file and runs the suite on it. Configuration errors
/// are returned before any check runs.
pub fn self_check_from_config(text: &str, opts: CheckOptions) -> Result<CheckReport> {
    let p = super::parse_params(text)?;
    Ok(self_check(&p, opts))
}

pub fn self_check(p: &IonParams, opts: CheckOptions) -> CheckReport {
    let checks = vec![
        algebra_kron_adjoint(),
        algebra_ladder(),
        dark_state(p),
        pure_decay(p, opts),
        short_evolution(p),
        blue_eit(p),
        optimality(p),
    ]
    .into_iter()
    .chain(discrepancy(p))
    .collect();
    CheckReport { checks }
}

fn test_matrix(n: usize, seed: f64) -> Operator {
    Operator::from_fn(n, |i, j| {
        let x = seed + 1.7 * i as f64 + 0.61 * j as f64;
        C64::new(x.sin(), (1.3 * x).cos())
    })
}

fn algebra_kron_adjoint() -> Check {
    let (a, b, c, d) = (test_matrix(3, 0.1), test_matrix(2, 0.7), test_matrix(3, 1.9), test_matrix(2, 2.3));
    let adj = a.kron(&b).dagger().max_abs_diff(&a.dagger().kron(&b.dagger()));
    let mixed = a.kron(&b).matmul(&c.kron(&d)).max_abs_diff(&a.matmul(&c).kron(&b.matmul(&d)));
    check("algebra.kron_identities", adj.max(mixed), 1e-12, "(A⊗B)† and mixed product".into())
}

fn algebra_ladder() -> Check {
    let cutoff = 6;
    let b = match fock_lowering(cutoff) {
        Ok(b) => b,
        Err(e) => return failed("algebra.ladder_commutator", e),
    };
    let comm = &b.matmul(&b.dagger()) - &b.dagger().matmul(&b);
    // [b, b†] = 1 except in the top Fock level.
    let residual = (0..cutoff + 1)
        .flat_map(|i| (0..cutoff + 1).map(move |j| (i, j)))
        .filter(|&(i, j)| i < cutoff && j < cutoff)
        .map(|(i, j)| (comm[(i, j)] - C64::new(if i == j { 1.0 } else { 0.0 }, 0.0)).norm())
        .fold(0.0, f64::max);
    check("algebra.ladder_commutator", residual, 1e-12, format!("cutoff {cutoff}"))
}

fn dark_state(p: &IonParams) -> Check {
    let name = "model.dark_state";
    let f = match dressed_frame(p) {
        Ok(f) => f,
        Err(e) => return failed(name, e),
    };
    let h = build_h_at(p);
    let hd = h.apply(&f.state_d).expect("internal dimensions");
    let residual = (0..INTERNAL_DIM)
        .map(|i| (hd[i] + f.state_d[i] * p.delta_gr).norm())
        .fold(0.0, f64::max);
    check(name, residual, 1e-12, "H_at|D⟩ = −Δ_gr|D⟩".into())
}

fn pure_decay(p: &IonParams, opts: CheckOptions) -> Check {
    let name = "dynamics.pure_decay";
    let mut q = p.without_motion();
    if opts.fault == Some(Fault::HalveGamma) {
        q.gamma_g *= 0.5;
        q.gamma_r *= 0.5;
        q.gamma_d *= 0.5;
    }
    let jumps = build_internal_jump_operators(&q);
    let l = match build_liouvillian(&Operator::zeros(INTERNAL_DIM), &jumps) {
        Ok(l) => l,
        Err(e) => return failed(name, e),
    };
    let g = p.gamma();
    let t = 0.5 / g;
    let rho0 = DensityMatrix::pure(&internal_ket(Level::E));
    match evolve_with(&l, &rho0, &[0.0, t], EvolveOptions::default()) {
        Ok(ev) => {
            let pe = ev.final_state.population(Level::E.index());
            let expected = (-2.0 * g * t).exp();
            check(name, (pe - expected).abs(), 1e-7, format!("ρ_ee = {pe:.6e}, expected {expected:.6e}"))
        }
        Err(e) => failed(name, e),
    }
}

fn short_evolution(p: &IonParams) -> Check {
    let name = "dynamics.short_evolution";
    let q = IonParams { fock_cutoff: 5, nbar0: 0.02, ..p.clone() };
    let run = || -> Result<_> {
        let l = liouvillian_for(&q, RecoilOrder::First)?;
        let grid: Vec<f64> = (0..=10).map(|k| 2.0 * k as f64).collect();
        let opts = EvolveOptions { check_positivity: true, ..Default::default() };
        Ok(evolve_with(&l, &dark_thermal_state(&q)?, &grid, opts)?.trajectory.diagnostics)
    };
    match run() {
        Ok(d) => {
            let residual = (d.max_trace_drift / 1e-7)
                .max(d.max_hermiticity_defect / 1e-8)
                .max(-d.min_eigenvalue / 1e-7);
            check(
                name,
                residual,
                1.0,
                format!(
                    "trace drift {:.2e}, hermiticity {:.2e}, min eigenvalue {:.2e} (residual in units of tolerance)",
                    d.max_trace_drift, d.max_hermiticity_defect, d.min_eigenvalue
                ),
            )
        }
        Err(e) => failed(name, e),
    }
}

fn blue_eit(p: &IonParams) -> Check {
    let name = "rates.blue_eit";
    let q = IonParams { delta_gr: -0.5 * p.nu, omega_mw: -0.5 * p.nu, ..p.clone() };
    match rates_closed_form(&q) {
        Ok(r) => check(name, r.a_plus.abs(), 0.0, "closed-form A₊ at Δ_gr = −ν/2".into()),
        Err(e) => failed(name, e),
    }
}

fn optimality(p: &IonParams) -> Check {
    let name = "rates.optimality_identity";
    match optimality_residual(&with_optimal_delta_g(p)) {
        Ok(r) => check(name, r.abs(), 1e-12, "residual at the optimal Δ_g".into()),
        Err(e) => failed(name, e),
    }
}

fn discrepancy(p: &IonParams) -> Vec<Check> {
    let q = IonParams {
        delta_gr: -0.5 * p.nu,
        omega_mw: -0.5 * p.nu,
        fock_cutoff: p.fock_cutoff.max(4),
        ..p.clone()
    };
    let r = match discrepancy_report(&q) {
        Ok(r) => r,
        Err(e) => return vec![failed("rates.printed_cubic", e)],
    };
    let printed = if r.printed_consistent {
        check("rates.printed_cubic", r.printed_vs_simplified, crate::rates::CONSISTENCY_TOL, "printed cubic agrees".into())
    } else {
        Check {
            name: "rates.printed_cubic".into(),
            status: CheckStatus::KnownInconsistent,
            residual: r.printed_vs_simplified,
            tolerance: crate::rates::CONSISTENCY_TOL,
            detail: format!(
                "{NOTE_KNOWN_INCONSISTENT}: printed A₋ = {:.4e}, simplified {:.4e}, resolvent {:.4e}",
                r.printed_a_minus, r.simplified_a_minus, r.resolvent_a_minus
            ),
        }
    };
    vec![
        printed,
        check(
            "rates.simplified_vs_resolvent",
            r.simplified_vs_resolvent,
            1e-6,
            "relative gap between simplified and resolvent A₋".into(),
        ),
        check(
            "rates.optimum_chain",
            r.optimum_chain_residual,
            1e-12,
            "simplified A₋ at the optimal Δ_g against w_max".into(),
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fig3_passes_with_known_inconsistency() {
        let r = self_check(&IonParams::fig3(), CheckOptions::default());
        assert!(r.passed(), "{:?}", r.failures().collect::<Vec<_>>());
        let printed = r.get("rates.printed_cubic").unwrap();
        assert_eq!(printed.status, CheckStatus::KnownInconsistent);
        assert!(printed.detail.starts_with(NOTE_KNOWN_INCONSISTENT));
        assert!(r.get("rates.optimum_chain").unwrap().residual < 1e-12);
    }

    #[test]
    fn halved_gamma_fails_pure_decay() {
        let opts = CheckOptions { fault: Some(Fault::HalveGamma) };
        let r = self_check(&IonParams::fig3(), opts);
        let c = r.get("dynamics.pure_decay").unwrap();
        assert_eq!(c.status, CheckStatus::Fail);
        assert!(c.residual > 0.1, "{}", c.residual);
        assert_eq!(r.failures().count(), 1);
    }

    #[test]
    fn empty_config_is_rejected_before_checks() {
        let e = self_check_from_config("", CheckOptions::default()).unwrap_err();
        assert!(matches!(e, crate::Error::Config(_)));
    }
}
