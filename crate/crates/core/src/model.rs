//! Four-level ion coupled to one motional mode in the Lamb-Dicke regime.
//!
//! Internal levels are ordered `[g, d, r, e]`. In joint space the phonon
//! number is the fast index: `joint = internal * (cutoff + 1) + n`.
//! Every frequency is expressed in units of the trap frequency.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{fock_number, fock_position, kron, Operator, StateVector, I, ONE};

pub const INTERNAL_DIM: usize = 4;

/// Internal level labels, in basis order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Level {
    G = 0,
    D = 1,
    R = 2,
    E = 3,
}

impl Level {
    pub const ALL: [Level; 4] = [Level::G, Level::D, Level::R, Level::E];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Level::G => "g",
            Level::D => "d",
            Level::R => "r",
            Level::E => "e",
        }
    }
}

/// |a⟩⟨b| on the internal space.
pub fn internal_projector(a: Level, b: Level) -> Operator {
    Operator::projector(INTERNAL_DIM, a.index(), b.index())
}

pub fn internal_ket(level: Level) -> StateVector {
    StateVector::basis(INTERNAL_DIM, level.index())
}

/// Largest |η| accepted without a Lamb-Dicke validity warning.
pub const LD_WARN: f64 = 0.3;
/// Largest |η| accepted at all.
pub const LD_REJECT: f64 = 1.0;

/// Physical parameter set, frequencies in units of `nu`.
///
/// `gamma_j` are half decay rates: the excited state decays into `|j⟩` at
/// rate `2 gamma_j` and its total linewidth is `2 (gamma_g + gamma_r + gamma_d)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IonParams {
    pub nu: f64,
    pub omega_g: f64,
    pub omega_r: f64,
    pub omega_mw: f64,
    pub delta_g: f64,
    /// Two-photon detuning `delta_g - delta_r`.
    pub delta_gr: f64,
    pub gamma_g: f64,
    pub gamma_r: f64,
    pub gamma_d: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub eta_decay_g: f64,
    pub eta_decay_r: f64,
    pub eta_decay_d: f64,
    /// Second moment of the emission angular distribution.
    pub recoil_moment: f64,
    pub fock_cutoff: usize,
    pub nbar0: f64,
}

impl Default for IonParams {
    fn default() -> Self {
        Self::fig3()
    }
}

impl IonParams {
    /// Dipole emission pattern W(s) = 3/8 (1 + s²) has ∫ s² W ds = 2/5.
    pub const DIPOLE_RECOIL_MOMENT: f64 = 0.4;

    /// Reference cooling point: η_g = −η_r = 0.05, 2γ = 20ν with equal
    /// branching, Ω_g = 10ν, Ω_r = ν, Ω_MW = Δ_gr = −ν/2, Δ_g = 74.5ν.
    pub fn fig3() -> Self {
        let eta1 = 0.05;
        Self {
            nu: 1.0,
            omega_g: 10.0,
            omega_r: 1.0,
            omega_mw: -0.5,
            delta_g: 74.5,
            delta_gr: -0.5,
            gamma_g: 10.0 / 3.0,
            gamma_r: 10.0 / 3.0,
            gamma_d: 10.0 / 3.0,
            eta1,
            eta2: -eta1,
            eta_decay_g: eta1,
            eta_decay_r: eta1,
            eta_decay_d: eta1,
            recoil_moment: Self::DIPOLE_RECOIL_MOMENT,
            fock_cutoff: 10,
            nbar0: 1.0,
        }
    }

    /// Half linewidth γ = γ_g + γ_r + γ_d.
    pub fn gamma(&self) -> f64 {
        self.gamma_g + self.gamma_r + self.gamma_d
    }

    /// Δ_r = Δ_g − Δ_gr.
    pub fn delta_r(&self) -> f64 {
        self.delta_g - self.delta_gr
    }

    /// Sets Δ_r by moving Δ_gr with Δ_g held fixed.
    pub fn set_delta_r(&mut self, delta_r: f64) {
        self.delta_gr = self.delta_g - delta_r;
    }

    /// η_D = η₁ − η₂.
    pub fn eta_d(&self) -> f64 {
        self.eta1 - self.eta2
    }

    pub fn fock_dim(&self) -> usize {
        self.fock_cutoff + 1
    }

    pub fn joint_dim(&self) -> usize {
        INTERNAL_DIM * self.fock_dim()
    }

    pub fn with_cutoff(&self, cutoff: usize) -> Self {
        Self { fock_cutoff: cutoff, ..self.clone() }
    }

    /// Copy with both laser Lamb-Dicke parameters set to zero (internal
    /// dynamics only).
    pub fn without_motion(&self) -> Self {
        Self { eta1: 0.0, eta2: 0.0, ..self.clone() }
    }

    /// Checks the parameter invariants. Returns the list of soft warnings
    /// (Lamb-Dicke validity) on success.
    pub fn validate(&self) -> Result<Vec<String>> {
        let finite = [
            self.nu,
            self.omega_g,
            self.omega_r,
            self.omega_mw,
            self.delta_g,
            self.delta_gr,
            self.gamma_g,
            self.gamma_r,
            self.gamma_d,
            self.eta1,
            self.eta2,
            self.eta_decay_g,
            self.eta_decay_r,
            self.eta_decay_d,
            self.recoil_moment,
            self.nbar0,
        ];
        if finite.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParams("non-finite parameter".into()));
        }
        if self.nu <= 0.0 {
            return Err(Error::InvalidParams(format!("nu = {} must be positive", self.nu)));
        }
        if [self.gamma_g, self.gamma_r, self.gamma_d].iter().any(|&g| g < 0.0) {
            return Err(Error::InvalidParams("decay rates must be non-negative".into()));
        }
        if self.gamma() <= 0.0 {
            return Err(Error::InvalidParams("total decay rate must be positive".into()));
        }
        if self.fock_cutoff < 2 {
            return Err(Error::InvalidParams(format!(
                "fock_cutoff = {} must be at least 2",
                self.fock_cutoff
            )));
        }
        if !(0.0..=1.0).contains(&self.recoil_moment) {
            return Err(Error::InvalidParams(format!(
                "recoil_moment = {} outside [0, 1]",
                self.recoil_moment
            )));
        }
        if self.nbar0 < 0.0 {
            return Err(Error::InvalidParams("nbar0 must be non-negative".into()));
        }
        let mut warnings = Vec::new();
        for (name, eta) in [("eta1", self.eta1), ("eta2", self.eta2)] {
            if eta.abs() > LD_REJECT {
                return Err(Error::InvalidParams(format!(
                    "|{name}| = {} exceeds {LD_REJECT}",
                    eta.abs()
                )));
            }
            if eta.abs() > LD_WARN {
                warnings.push(format!("|{name}| = {} outside the Lamb-Dicke regime", eta.abs()));
            }
        }
        for w in &warnings {
            log::warn!("{w}");
        }
        Ok(warnings)
    }
}

/// Atomic Hamiltonian on the 4-dim internal space.
pub fn build_h_at(p: &IonParams) -> Operator {
    use Level::*;
    let mut h = Operator::zeros(INTERNAL_DIM);
    h[(E.index(), E.index())] = C64::new(-p.delta_g, 0.0);
    h[(R.index(), R.index())] = C64::new(-p.delta_gr, 0.0);
    for (a, b, w) in [(E, G, p.omega_g), (E, R, p.omega_r), (G, D, p.omega_mw)] {
        h[(a.index(), b.index())] = C64::new(w, 0.0);
        h[(b.index(), a.index())] = C64::new(w, 0.0);
    }
    h
}

/// Sideband coupling iη₁Ω_g|e⟩⟨g|(b+b†) + iη₂Ω_r|e⟩⟨r|(b+b†) + h.c.
pub fn build_v(p: &IonParams) -> Result<Operator> {
    let x = fock_position(p.fock_cutoff)?;
    let up = &internal_projector(Level::E, Level::G).scale(I * p.eta1 * p.omega_g)
        + &internal_projector(Level::E, Level::R).scale(I * p.eta2 * p.omega_r);
    let v = kron(&up, &x);
    Ok(&v + &v.dagger())
}

/// Free motional Hamiltonian ν b†b lifted to joint space.
pub fn build_h_m(p: &IonParams) -> Operator {
    kron(
        &Operator::identity(INTERNAL_DIM),
        &fock_number(p.fock_cutoff).scale_real(p.nu),
    )
}

/// H_at ⊗ I + I ⊗ ν b†b without the sideband term.
pub fn build_h0(p: &IonParams) -> Operator {
    let h_at = kron(&build_h_at(p), &Operator::identity(p.fock_dim()));
    &h_at + &build_h_m(p)
}

/// Lamb-Dicke Hamiltonian H_at ⊗ I + I ⊗ ν b†b + V.
pub fn build_h_ld(p: &IonParams) -> Result<Operator> {
    Ok(&build_h0(p) + &build_v(p)?)
}

/// Dressed-frame quantities derived from the laser and microwave drives.
#[derive(Debug, Clone)]
pub struct DressedFrame {
    pub omega_big_b: f64,
    pub omega_plus: f64,
    pub omega_d: f64,
    pub eta_b: f64,
    pub eta_d: f64,
    pub delta_minus: f64,
    pub delta_plus: f64,
    pub state_d: StateVector,
    pub state_b: StateVector,
    pub state_plus: StateVector,
    pub state_minus: StateVector,
}

impl DressedFrame {
    /// Orthonormal basis {|D⟩, |B⟩, |+⟩, |e⟩}.
    pub fn basis(&self) -> [StateVector; 4] {
        [
            self.state_d.clone(),
            self.state_b.clone(),
            self.state_plus.clone(),
            internal_ket(Level::E),
        ]
    }

    /// Unitary whose columns are [`DressedFrame::basis`].
    pub fn basis_change(&self) -> Operator {
        let basis = self.basis();
        Operator::from_fn(INTERNAL_DIM, |i, j| basis[j][i])
    }
}

/// Dressed representation of the internal Hamiltonian.
///
/// `delta_plus` is `Δ_r + 2Δ_gr`, which is the detuning of |+⟩ from |e⟩
/// implied by the microwave splitting (it equals `Δ_r − ν` at Δ_gr = −ν/2).
pub fn dressed_frame(p: &IonParams) -> Result<DressedFrame> {
    let (og, or) = (p.omega_g, p.omega_r);
    let s = 2.0 * or * or + og * og;
    if s <= 0.0 {
        return Err(Error::DegenerateDressing);
    }
    let root = s.sqrt();
    let r2 = std::f64::consts::SQRT_2;
    let g = internal_ket(Level::G);
    let d = internal_ket(Level::D);
    let r = internal_ket(Level::R);
    let plus = g.add(&d).scale(C64::new(1.0 / r2, 0.0));
    let minus = g.add(&d.scale(-ONE)).scale(C64::new(1.0 / r2, 0.0));
    let state_b = minus
        .scale(C64::new(og / root, 0.0))
        .add(&r.scale(C64::new(r2 * or / root, 0.0)));
    let state_d = minus
        .scale(C64::new(r2 * or / root, 0.0))
        .add(&r.scale(C64::new(-og / root, 0.0)));
    Ok(DressedFrame {
        omega_big_b: root / r2,
        omega_plus: og / r2,
        omega_d: og * or / root,
        eta_b: (og * og * p.eta1 + 2.0 * or * or * p.eta2) / s,
        eta_d: p.eta1 - p.eta2,
        delta_minus: p.delta_r(),
        delta_plus: p.delta_r() + 2.0 * p.delta_gr,
        state_d,
        state_b,
        state_plus: plus,
        state_minus: minus,
    })
}

/// Outcome of checking the two resonance conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MagicDiagnostics {
    /// Ω_MW = Δ_gr: the dark state exists.
    pub dark_state: bool,
    pub dark_state_residual: f64,
    /// Δ_gr = −ν/2: the blue sideband is cancelled.
    pub blue_eit: bool,
    pub blue_eit_residual: f64,
}

impl MagicDiagnostics {
    pub fn both(&self) -> bool {
        self.dark_state && self.blue_eit
    }
}

pub const MAGIC_TOL: f64 = 1e-9;

pub fn magic_condition(p: &IonParams) -> MagicDiagnostics {
    magic_condition_with_tol(p, MAGIC_TOL)
}

/// Checks both conditions with tolerance `tol·ν`.
pub fn magic_condition_with_tol(p: &IonParams, tol: f64) -> MagicDiagnostics {
    let dark = (p.omega_mw - p.delta_gr).abs();
    let blue = (p.delta_gr + 0.5 * p.nu).abs();
    MagicDiagnostics {
        dark_state: dark <= tol * p.nu,
        dark_state_residual: dark,
        blue_eit: blue <= tol * p.nu,
        blue_eit_residual: blue,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RecoilOrder {
    /// Plain spontaneous emission, no momentum kick.
    Zeroth,
    /// Adds the second-moment recoil channels.
    First,
}

/// Decay channels `[g, r, d]` with their rates and recoil LD parameters.
fn decay_channels(p: &IonParams) -> [(Level, f64, f64); 3] {
    [
        (Level::G, p.gamma_g, p.eta_decay_g),
        (Level::R, p.gamma_r, p.eta_decay_r),
        (Level::D, p.gamma_d, p.eta_decay_d),
    ]
}

/// Lindblad operators for spontaneous emission on the joint space.
///
/// The first three are √(2γ_j)|j⟩⟨e| ⊗ I for j = g, r, d. At first recoil
/// order three more follow, √(2γ_j α)·η_j·|j⟩⟨e| ⊗ (b + b†), which carry the
/// second moment α of the emission pattern.
pub fn build_jump_operators(p: &IonParams, order: RecoilOrder) -> Result<Vec<Operator>> {
    let fock_id = Operator::identity(p.fock_dim());
    let mut ops: Vec<Operator> = decay_channels(p)
        .iter()
        .map(|&(j, g, _)| kron(&internal_projector(j, Level::E).scale_real((2.0 * g).sqrt()), &fock_id))
        .collect();
    if order == RecoilOrder::First {
        let x = fock_position(p.fock_cutoff)?;
        for (j, g, eta) in decay_channels(p) {
            let amp = (2.0 * g * p.recoil_moment).sqrt() * eta;
            ops.push(kron(&internal_projector(j, Level::E).scale_real(amp), &x));
        }
    }
    Ok(ops)
}

/// Jump operators on the internal space alone.
pub fn build_internal_jump_operators(p: &IonParams) -> Vec<Operator> {
    decay_channels(p)
        .iter()
        .map(|&(j, g, _)| internal_projector(j, Level::E).scale_real((2.0 * g).sqrt()))
        .collect()
}

/// |e⟩⟨e| on the internal space.
pub fn excited_projector() -> Operator {
    internal_projector(Level::E, Level::E)
}

/// Internal basis vector tensored with Fock state |n⟩.
pub fn joint_ket(internal: &StateVector, n: usize, cutoff: usize) -> StateVector {
    internal.kron(&StateVector::basis(cutoff + 1, n))
}
