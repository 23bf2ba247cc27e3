//! Adiabatic-elimination rate theory for the motional populations.
//!
//! Two independent routes are provided: closed-form expressions in the
//! dressed-frame quantities, and a numeric resolvent that evaluates the
//! second-order scattering amplitude on the truncated joint space.

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{kron, solve, Operator, I};
use crate::model::{
    build_h0, build_v, dressed_frame, excited_projector, internal_ket, joint_ket, magic_condition, IonParams,
    Level,
};

/// Where a rate value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    ClosedForm,
    Resolvent,
    MasterEquation,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::ClosedForm => "closed_form",
            Source::Resolvent => "resolvent",
            Source::MasterEquation => "master_equation",
        }
    }
}

/// Heating and cooling rates with the derived cooling rate and final
/// occupation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateResult {
    pub a_plus: f64,
    pub a_minus: f64,
    pub w: f64,
    /// `a_plus / (a_minus - a_plus)`, infinite when there is no net cooling.
    pub nss: f64,
    pub source: Source,
}

impl RateResult {
    pub fn new(a_plus: f64, a_minus: f64, source: Source) -> Self {
        let w = a_minus - a_plus;
        let nss = if w > 0.0 { a_plus / w } else { f64::INFINITY };
        Self { a_plus, a_minus, w, nss, source }
    }
}

/// Cubic f(x) = x³ + c₂x² + c₁x + c₀ + iγ(x − 2Δ_gr)x with the
/// coefficients in their printed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicF {
    pub c2: f64,
    pub c1: f64,
    pub c0: f64,
    pub gamma: f64,
    pub delta_gr: f64,
}

impl CubicF {
    pub fn printed(p: &IonParams) -> Result<Self> {
        let f = dressed_frame(p)?;
        let (ob2, op2) = (f.omega_big_b.powi(2), f.omega_plus.powi(2));
        let (dg, dgr) = (p.delta_g, p.delta_gr);
        Ok(Self {
            c2: dg - dgr,
            c1: ob2 + op2 + 2.0 * dg * dgr + 2.0 * dgr * dgr,
            c0: 2.0 * ob2 * dgr,
            gamma: p.gamma(),
            delta_gr: dgr,
        })
    }

    pub fn eval(&self, x: f64) -> C64 {
        let re = x * x * x + self.c2 * x * x + self.c1 * x + self.c0;
        let im = self.gamma * (x - 2.0 * self.delta_gr) * x;
        C64::new(re, im)
    }
}

/// f(x) exactly as printed.
pub fn f_eval(p: &IonParams, x: f64) -> Result<C64> {
    Ok(CubicF::printed(p)?.eval(x))
}

/// Smallest |f(∓ν)| accepted before declaring a pole.
pub const POLE_TOL: f64 = 1e-12;

/// Closed-form rates A_± = 2γΩ_D²η_D²ν²(∓ν − 2Δ_gr)² / |f(∓ν)|², with the
/// printed cubic.
pub fn rates_closed_form(p: &IonParams) -> Result<RateResult> {
    let frame = dressed_frame(p)?;
    let cubic = CubicF::printed(p)?;
    let nu = p.nu;
    let prefactor = 2.0 * p.gamma() * frame.omega_d.powi(2) * frame.eta_d.powi(2) * nu * nu;
    let rate = |x: f64| -> Result<f64> {
        let fx = cubic.eval(x);
        if fx.norm() < POLE_TOL {
            return Err(Error::ResonantPole { x, magnitude: fx.norm() });
        }
        Ok(prefactor * (x - 2.0 * p.delta_gr).powi(2) / fx.norm_sqr())
    };
    Ok(RateResult::new(rate(-nu)?, rate(nu)?, Source::ClosedForm))
}

/// Cooling rate at the blue-sideband EIT point in its simplified form
/// A₋ = 8γΩ_D²η_D²ν² / ((3ν² + 2νΔ_g − 2Ω_B² − Ω_+²)² + 4γ²ν²).
pub fn a_minus_simplified(p: &IonParams) -> Result<f64> {
    let f = dressed_frame(p)?;
    let nu = p.nu;
    let g = p.gamma();
    let detuning = optimality_residual(p)?;
    Ok(8.0 * g * f.omega_d.powi(2) * f.eta_d.powi(2) * nu * nu
        / (detuning * detuning + 4.0 * g * g * nu * nu))
}

/// 3ν² + 2νΔ_g − 2Ω_B² − Ω_+², which vanishes at the optimal detuning.
pub fn optimality_residual(p: &IonParams) -> Result<f64> {
    let f = dressed_frame(p)?;
    let nu = p.nu;
    Ok(3.0 * nu * nu + 2.0 * nu * p.delta_g - 2.0 * f.omega_big_b.powi(2) - f.omega_plus.powi(2))
}

/// Final occupation 2η_D²Ω_g²Ω_r² / (Ω_g⁴ + 2(η_D² + 1)Ω_g²Ω_r²).
pub fn nss_analytic(p: &IonParams) -> f64 {
    let (g2, r2, e2) = (p.omega_g.powi(2), p.omega_r.powi(2), p.eta_d().powi(2));
    let denom = g2 * g2 + 2.0 * (e2 + 1.0) * g2 * r2;
    if denom == 0.0 {
        return 0.0;
    }
    2.0 * e2 * g2 * r2 / denom
}

/// Δ_g = (2Ω_B² + Ω_+² − 3ν²) / (2ν), evaluated from the squared Rabi
/// frequencies so that rational inputs give exact results.
pub fn optimal_delta_g(p: &IonParams) -> f64 {
    let (g2, r2) = (p.omega_g.powi(2), p.omega_r.powi(2));
    // 2Ω_B² = 2Ω_r² + Ω_g², Ω_+² = Ω_g²/2.
    (2.0 * r2 + g2 + 0.5 * g2 - 3.0 * p.nu * p.nu) / (2.0 * p.nu)
}

/// Closed-form net cooling rate. Valid when the dark state exists and the
/// blue sideband is cancelled, where A₊ = 0 and W is the simplified A₋.
pub fn w_closed_form(p: &IonParams) -> Result<f64> {
    let m = magic_condition(p);
    if !m.both() {
        return Err(Error::InvalidArgument(format!(
            "closed-form W needs omega_mw = delta_gr = -nu/2, got omega_mw = {}, delta_gr = {}",
            p.omega_mw, p.delta_gr
        )));
    }
    a_minus_simplified(p)
}

/// Copy of `p` with Δ_g set to [`optimal_delta_g`].
pub fn with_optimal_delta_g(p: &IonParams) -> IonParams {
    IonParams { delta_g: optimal_delta_g(p), ..p.clone() }
}

/// Maximal cooling rate 2Ω_D²η_D²/γ.
pub fn w_max(p: &IonParams) -> Result<f64> {
    let f = dressed_frame(p)?;
    Ok(2.0 * f.omega_d.powi(2) * f.eta_d.powi(2) / p.gamma())
}

/// Largest condition number accepted by the resolvent solve.
pub const RESOLVENT_COND_MAX: f64 = 1e12;

/// Numeric scattering rates from |D⟩|n⟩ into |D⟩|n ∓ 1⟩.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResolventRates {
    pub n: usize,
    pub rate_down: f64,
    pub rate_up: f64,
    /// rate_down / n.
    pub a_minus: f64,
    /// rate_up / (n + 1).
    pub a_plus: f64,
    pub condition: f64,
}

/// Scattering rates Γ_{n→n∓1} = 2γ|⟨e, n∓1|G(E_n) V|D, n⟩|².
///
/// The propagator is G(z) = (z − H₀ + iγ|e⟩⟨e|)⁻¹ where H₀ is the
/// Hamiltonian without the sideband term, so the amplitude is second order in
/// η. E_n = ⟨D,n|H_LD|D,n⟩. When |D,n⟩ is an exact eigenvector of H₀ its
/// direction is removed from the pole by adding |D,n⟩⟨D,n|; V never maps
/// |D,n⟩ back onto itself, so the amplitude is unaffected.
pub fn gamma_resolvent(p: &IonParams, n: usize) -> Result<ResolventRates> {
    let cutoff = p.fock_cutoff;
    if n < 1 || n + 2 > cutoff {
        return Err(Error::InvalidArgument(format!(
            "resolvent needs 1 <= n <= cutoff - 2, got n = {n} at cutoff {cutoff}"
        )));
    }
    let frame = dressed_frame(p)?;
    let dn = joint_ket(&frame.state_d, n, cutoff);
    let h0 = build_h0(p);
    let v = build_v(p)?;
    let gamma = p.gamma();
    let dim = p.joint_dim();

    let h_ld = &h0 + &v;
    let energy = dn.inner(&h_ld.apply(&dn)?).re;

    let decay = kron(&excited_projector(), &Operator::identity(p.fock_dim())).scale(I * gamma);
    let mut a = &(&Operator::identity(dim).scale_real(energy) - &h0) + &decay;
    let h0_dn = h0.apply(&dn)?;
    let leak = (0..dim)
        .map(|k| (h0_dn[k] - dn[k] * energy).norm_sqr())
        .sum::<f64>()
        .sqrt();
    if leak <= 1e-12 * (1.0 + h0.max_abs()) {
        a = &a + &dn.projector();
    }
    let sol = solve(&a, &v.apply(&dn)?)?;
    if !(sol.condition <= RESOLVENT_COND_MAX) {
        return Err(Error::SingularResolvent { condition: sol.condition });
    }
    let e = internal_ket(Level::E);
    let amp = |m: usize| joint_ket(&e, m, cutoff).inner(&sol.x);
    let rate_down = 2.0 * gamma * amp(n - 1).norm_sqr();
    let rate_up = 2.0 * gamma * amp(n + 1).norm_sqr();
    Ok(ResolventRates {
        n,
        rate_down,
        rate_up,
        a_minus: rate_down / n as f64,
        a_plus: rate_up / (n + 1) as f64,
        condition: sol.condition,
    })
}

/// Resolvent rates at n = 1 packaged as a [`RateResult`].
pub fn rates_resolvent(p: &IonParams) -> Result<RateResult> {
    let r = gamma_resolvent(p, 1)?;
    Ok(RateResult::new(r.a_plus, r.a_minus, Source::Resolvent))
}

/// Off-resonant scattering rate (2/3)(Ω_g / gap)² · 2γ.
pub fn offres_scatter_estimate(omega_g: f64, gap: f64, two_gamma: f64) -> Result<f64> {
    if !(gap > 0.0) {
        return Err(Error::InvalidArgument(format!("gap = {gap} must be positive")));
    }
    Ok(2.0 / 3.0 * (omega_g / gap).powi(2) * two_gamma)
}

/// Conversion from trap-frequency units to hertz, anchored on a measured
/// linewidth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalUnits {
    /// Value of ν in Hz.
    pub nu_hz: f64,
}

impl PhysicalUnits {
    /// ¹⁷¹Yb⁺ 2P1/2 linewidth 2γ = 19.7 MHz.
    pub const YB171_TWO_GAMMA_HZ: f64 = 19.7e6;
    /// Hyperfine gap to the 2P1/2 F = 1 manifold.
    pub const YB171_GAP_HZ: f64 = 2.1e9;

    /// Picks ν so that the model linewidth `2γ` equals `two_gamma_hz`.
    pub fn from_linewidth(p: &IonParams, two_gamma_hz: f64) -> Self {
        Self { nu_hz: two_gamma_hz / (2.0 * p.gamma()) * p.nu }
    }

    pub fn to_hz(&self, value_in_nu: f64) -> f64 {
        value_in_nu * self.nu_hz
    }
}

/// Cross-check between the printed cubic, the simplified cooling rate and
/// the resolvent.
#[derive(Debug, Clone, Serialize)]
pub struct DiscrepancyReport {
    pub printed_a_minus: f64,
    pub simplified_a_minus: f64,
    pub resolvent_a_minus: f64,
    /// |printed − simplified| / simplified.
    pub printed_vs_simplified: f64,
    /// |simplified − resolvent| / resolvent.
    pub simplified_vs_resolvent: f64,
    /// |simplified(Δ_g*) − w_max| / w_max with Δ_g* the optimal detuning.
    pub optimum_chain_residual: f64,
    pub printed_consistent: bool,
}

/// Relative gap above which two rate values count as inconsistent.
pub const CONSISTENCY_TOL: f64 = 0.01;

pub fn discrepancy_report(p: &IonParams) -> Result<DiscrepancyReport> {
    let printed = rates_closed_form(p)?.a_minus;
    let simplified = a_minus_simplified(p)?;
    let resolvent = gamma_resolvent(p, 1)?.a_minus;
    let opt = with_optimal_delta_g(p);
    let wm = w_max(&opt)?;
    let chain = (a_minus_simplified(&opt)? - wm).abs() / wm;
    let printed_vs_simplified = (printed - simplified).abs() / simplified;
    Ok(DiscrepancyReport {
        printed_a_minus: printed,
        simplified_a_minus: simplified,
        resolvent_a_minus: resolvent,
        printed_vs_simplified,
        simplified_vs_resolvent: (simplified - resolvent).abs() / resolvent,
        optimum_chain_residual: chain,
        printed_consistent: printed_vs_simplified < CONSISTENCY_TOL,
    })
}
