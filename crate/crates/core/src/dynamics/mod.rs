//! Lindblad master equation: generator, time evolution, steady states and
//! phonon observables.
//!
//! The generator is dρ/dt = −i(Kρ − ρK†) + Σ_k C_k ρ C_k† with the
//! non-Hermitian K = H − (i/2) Σ_k C_k†C_k. A lone C = √(2γ)|g⟩⟨e| therefore
//! empties |e⟩ at rate 2γ.

pub mod fit;
pub mod ode;

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    expectation, fock_number, kron, null_vector, DensityMatrix, Operator, I, ZERO,
};
use crate::model::{
    build_h_ld, build_internal_jump_operators, build_h_at, build_jump_operators, dressed_frame,
    IonParams, RecoilOrder, INTERNAL_DIM,
};

pub use fit::{fit_exponential, fit_exponential_series, FitResult};
pub use ode::{OdeStats, Tolerances};

/// Factorization of the Hilbert space as internal ⊗ Fock, phonon index fast.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Layout {
    pub internal: usize,
    pub fock: usize,
}

impl Layout {
    /// Four internal levels when the dimension allows it, otherwise a purely
    /// internal system.
    pub fn infer(dim: usize) -> Self {
        if dim % INTERNAL_DIM == 0 {
            Self { internal: INTERNAL_DIM, fock: dim / INTERNAL_DIM }
        } else {
            Self { internal: dim, fock: 1 }
        }
    }

    pub fn dim(&self) -> usize {
        self.internal * self.fock
    }
}

/// Row-sorted list of nonzero matrix entries.
#[derive(Debug, Clone)]
struct Sparse {
    entries: Vec<(usize, usize, C64)>,
}

impl Sparse {
    fn from_dense(op: &Operator) -> Self {
        let n = op.dim();
        let mut entries = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let v = op[(i, j)];
                if v != ZERO {
                    entries.push((i, j, v));
                }
            }
        }
        Self { entries }
    }
}

/// Master-equation generator with matrix-free application.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    dim: usize,
    layout: Layout,
    h: Operator,
    jumps: Vec<Operator>,
    /// −iK, with K the non-Hermitian effective Hamiltonian.
    minus_i_k: Sparse,
    /// Σ_k C_k ρ C_k† as merged terms out[a,b] += coef·ρ[i,j].
    feed: Vec<FeedTerm>,
}

#[derive(Debug, Clone, Copy)]
struct FeedTerm {
    out: usize,
    src: usize,
    coef: C64,
}

fn feed_terms(jumps: &[Operator], n: usize) -> Vec<FeedTerm> {
    let mut merged: std::collections::BTreeMap<(usize, usize), C64> = Default::default();
    for c in jumps {
        let sp = Sparse::from_dense(c);
        for &(a, i, c1) in &sp.entries {
            for &(b, j, c2) in &sp.entries {
                *merged.entry((a * n + b, i * n + j)).or_insert(ZERO) += c1 * c2.conj();
            }
        }
    }
    merged
        .into_iter()
        .filter(|(_, c)| *c != ZERO)
        .map(|((out, src), coef)| FeedTerm { out, src, coef })
        .collect()
}

/// Builds the generator for Hamiltonian `h` and jump operators `jumps`.
pub fn build_liouvillian(h: &Operator, jumps: &[Operator]) -> Result<Liouvillian> {
    let dim = h.dim();
    let mut k = h.clone();
    for c in jumps {
        if c.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: c.dim() });
        }
        let loss = c.dagger().matmul(c).scale(I * -0.5);
        k = &k + &loss;
    }
    Ok(Liouvillian {
        dim,
        layout: Layout::infer(dim),
        h: h.clone(),
        jumps: jumps.to_vec(),
        minus_i_k: Sparse::from_dense(&k.scale(-I)),
        feed: feed_terms(jumps, dim),
    })
}

/// Generator of the full ion-phonon system.
pub fn liouvillian_for(p: &IonParams, order: RecoilOrder) -> Result<Liouvillian> {
    let l = build_liouvillian(&build_h_ld(p)?, &build_jump_operators(p, order)?)?;
    l.with_layout(Layout { internal: INTERNAL_DIM, fock: p.fock_dim() })
}

/// Generator of the internal levels alone (no motion).
pub fn internal_liouvillian(p: &IonParams) -> Result<Liouvillian> {
    let l = build_liouvillian(&build_h_at(p), &build_internal_jump_operators(p))?;
    l.with_layout(Layout { internal: INTERNAL_DIM, fock: 1 })
}

impl Liouvillian {
    pub fn with_layout(mut self, layout: Layout) -> Result<Self> {
        if layout.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: layout.dim() });
        }
        self.layout = layout;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn hamiltonian(&self) -> &Operator {
        &self.h
    }

    pub fn jumps(&self) -> &[Operator] {
        &self.jumps
    }

    /// L(ρ) for an arbitrary (not necessarily Hermitian) operator.
    pub fn apply(&self, rho: &Operator) -> Result<Operator> {
        if rho.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: rho.dim() });
        }
        let n = self.dim;
        let r = rho.as_slice();
        let mut out = vec![ZERO; n * n];
        for &(a, i, coef) in &self.minus_i_k.entries {
            for b in 0..n {
                out[a * n + b] += coef * r[i * n + b];
            }
        }
        for &(b, j, coef) in &self.minus_i_k.entries {
            let coef = coef.conj();
            for a in 0..n {
                out[a * n + b] += coef * r[a * n + j];
            }
        }
        self.add_jumps(r, &mut out);
        Operator::from_vec(out)
    }

    /// L(ρ) for Hermitian ρ, written into `out`. Uses ρK† = (Kρ)†, so the
    /// result is exactly Hermitian.
    pub fn apply_hermitian_into(&self, rho: &[C64], out: &mut [C64]) {
        let n = self.dim;
        out.fill(ZERO);
        for &(a, i, coef) in &self.minus_i_k.entries {
            let (src, dst) = (&rho[i * n..(i + 1) * n], &mut out[a * n..(a + 1) * n]);
            for (o, x) in dst.iter_mut().zip(src) {
                *o += coef * x;
            }
        }
        for a in 0..n {
            for b in a..n {
                let m = out[a * n + b] + out[b * n + a].conj();
                out[a * n + b] = m;
                out[b * n + a] = m.conj();
            }
        }
        self.add_jumps(rho, out);
    }

    fn add_jumps(&self, rho: &[C64], out: &mut [C64]) {
        for t in &self.feed {
            out[t.out] += t.coef * rho[t.src];
        }
    }

    /// Superoperator acting on row-major vec(ρ), of dimension dim².
    pub fn materialize(&self) -> Operator {
        let n = self.dim;
        let mut m = Operator::zeros(n * n);
        for &(a, i, coef) in &self.minus_i_k.entries {
            for b in 0..n {
                m[(a * n + b, i * n + b)] += coef;
            }
        }
        for &(b, j, coef) in &self.minus_i_k.entries {
            for a in 0..n {
                m[(a * n + b, a * n + j)] += coef.conj();
            }
        }
        for t in &self.feed {
            m[(t.out, t.src)] += t.coef;
        }
        m
    }
}

/// Per-sample observables of an evolution.
#[derive(Debug, Clone, Default, Serialize)]
pub struct CoolingTrajectory {
    pub times: Vec<f64>,
    pub nbar: Vec<f64>,
    /// `pops[level][sample]`.
    pub pops: Vec<Vec<f64>>,
    /// Population of the two highest Fock levels.
    pub truncation_tail: Vec<f64>,
    pub diagnostics: TrajectoryDiagnostics,
}

/// Worst-case solver health indicators over all samples.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct TrajectoryDiagnostics {
    pub max_trace_drift: f64,
    pub max_hermiticity_defect: f64,
    pub min_eigenvalue: f64,
    pub max_tail: f64,
    pub truncation_breach: bool,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl CoolingTrajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Population of the top two Fock levels above which a run is flagged.
pub const TRUNCATION_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    pub tol: Tolerances,
    /// Compute the minimum eigenvalue of ρ at every sample.
    pub check_positivity: bool,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self { tol: Tolerances::default(), check_positivity: true }
    }
}

#[derive(Debug, Clone)]
pub struct Evolution {
    pub trajectory: CoolingTrajectory,
    pub final_state: DensityMatrix,
}

pub fn evolve(l: &Liouvillian, rho0: &DensityMatrix, t_grid: &[f64]) -> Result<Evolution> {
    evolve_with(l, rho0, t_grid, EvolveOptions::default())
}

/// Integrates the master equation and samples the trajectory on `t_grid`.
///
/// The trace is never renormalized; its drift is reported in the diagnostics.
/// ρ₀ is replaced by its Hermitian part before integration.
pub fn evolve_with(
    l: &Liouvillian,
    rho0: &DensityMatrix,
    t_grid: &[f64],
    opts: EvolveOptions,
) -> Result<Evolution> {
    if rho0.dim() != l.dim {
        return Err(Error::DimensionMismatch { expected: l.dim, found: rho0.dim() });
    }
    if t_grid.first() != Some(&0.0) {
        return Err(Error::InvalidArgument("time grid must start at 0".into()));
    }
    if t_grid.windows(2).any(|w| !(w[1] > w[0])) || t_grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidArgument("time grid must be strictly increasing".into()));
    }
    let n = l.dim;
    let layout = l.layout;
    let r0 = rho0.as_operator();
    let y0: Vec<C64> = Operator::from_fn(n, |i, j| (r0[(i, j)] + r0[(j, i)].conj()) * 0.5).into_vec();

    let mut traj = CoolingTrajectory {
        pops: vec![Vec::with_capacity(t_grid.len()); layout.internal],
        diagnostics: TrajectoryDiagnostics { min_eigenvalue: f64::INFINITY, ..Default::default() },
        ..Default::default()
    };
    let (y, stats) = ode::integrate(
        |rho, out| l.apply_hermitian_into(rho, out),
        &y0,
        t_grid,
        opts.tol,
        |_, t, rho| {
            record_sample(&mut traj, layout, t, rho, opts.check_positivity);
            Ok(())
        },
    )?;
    traj.diagnostics.accepted_steps = stats.accepted;
    traj.diagnostics.rejected_steps = stats.rejected;
    if !opts.check_positivity {
        traj.diagnostics.min_eigenvalue = f64::NAN;
    }
    if traj.diagnostics.truncation_breach {
        log::warn!(
            "truncation breach: top-two Fock population reached {:.3e} (limit {TRUNCATION_TOL:.0e})",
            traj.diagnostics.max_tail
        );
    }
    let final_state = DensityMatrix::new_unchecked(Operator::from_vec(y)?);
    Ok(Evolution { trajectory: traj, final_state })
}

fn record_sample(traj: &mut CoolingTrajectory, layout: Layout, t: f64, rho: &[C64], eig: bool) {
    let n = layout.dim();
    let f = layout.fock;
    let mut trace = ZERO;
    let mut nbar = 0.0;
    let mut tail = 0.0;
    for a in 0..layout.internal {
        let mut pop = 0.0;
        for m in 0..f {
            let idx = a * f + m;
            let p = rho[idx * n + idx];
            trace += p;
            pop += p.re;
            nbar += m as f64 * p.re;
            if f > 2 && m + 2 >= f {
                tail += p.re;
            }
        }
        traj.pops[a].push(pop);
    }
    let mut herm: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            herm = herm.max((rho[i * n + j] - rho[j * n + i].conj()).norm());
        }
    }
    traj.times.push(t);
    traj.nbar.push(nbar);
    traj.truncation_tail.push(tail);
    let d = &mut traj.diagnostics;
    d.max_trace_drift = d.max_trace_drift.max((trace - 1.0).norm());
    d.max_hermiticity_defect = d.max_hermiticity_defect.max(herm);
    d.max_tail = d.max_tail.max(tail);
    d.truncation_breach |= tail > TRUNCATION_TOL;
    if eig {
        let op = Operator::from_vec(rho.to_vec()).expect("square state");
        let min = op.hermitian_eigenvalues().first().copied().unwrap_or(0.0);
        d.min_eigenvalue = d.min_eigenvalue.min(min);
    }
}

/// Largest joint dimension for which a steady state is solved directly.
pub const STEADY_DIM_CAP: usize = 64;
/// Relative pivot threshold used to identify the kernel of the generator.
pub const STEADY_TOL: f64 = 1e-11;

pub fn steady_state(l: &Liouvillian) -> Result<DensityMatrix> {
    steady_state_with(l, STEADY_DIM_CAP, STEADY_TOL)
}

/// Kernel of the materialized generator, normalized to unit trace.
pub fn steady_state_with(l: &Liouvillian, cap: usize, tol: f64) -> Result<DensityMatrix> {
    if l.dim > cap {
        return Err(Error::DimensionCap { dim: l.dim, cap });
    }
    let nv = null_vector(&l.materialize(), tol)?;
    if nv.multiplicity > 1 {
        return Err(Error::DegenerateSteadyManifold { dim: nv.multiplicity });
    }
    let raw = Operator::from_vec(nv.vector.as_slice().to_vec())?;
    let tr = raw.trace();
    if tr.norm() < 1e-14 {
        return Err(Error::InvalidDensityMatrix("kernel vector is traceless".into()));
    }
    let rho = raw.scale(tr.inv());
    let rho = Operator::from_fn(l.dim, |i, j| (rho[(i, j)] + rho[(j, i)].conj()) * 0.5);
    DensityMatrix::new(rho)
}

/// Eigenvalue of the generator closest to `shift`, by shift-invert
/// iteration on the materialized superoperator.
///
/// With a real shift near −W this isolates the relaxation mode of the
/// phonon populations, whose eigenvalue is −W in the rate-equation limit.
pub fn eigenvalue_near(l: &Liouvillian, shift: C64, cap: usize) -> Result<C64> {
    use faer::linalg::solvers::Solve;
    if l.dim > cap {
        return Err(Error::DimensionCap { dim: l.dim, cap });
    }
    let n = l.dim * l.dim;
    let mut m = l.materialize().to_faer();
    for k in 0..n {
        m[(k, k)] -= shift;
    }
    let lu = m.partial_piv_lu();
    // Deterministic start with weight on every component.
    let mut x = faer::Mat::<C64>::from_fn(n, 1, |i, _| C64::new(1.0 + (i as f64).sin(), (i as f64).cos()));
    let mut lambda = shift;
    for _ in 0..200 {
        let y = lu.solve(&x);
        let xx: f64 = (0..n).map(|i| x[(i, 0)].norm_sqr()).sum();
        let xy: C64 = (0..n).map(|i| x[(i, 0)].conj() * y[(i, 0)]).sum();
        if !(xy.norm() > 0.0) || !xy.is_finite() {
            return Err(Error::SingularResolvent { condition: f64::INFINITY });
        }
        let next = shift + xx / xy;
        let ny: f64 = (0..n).map(|i| y[(i, 0)].norm_sqr()).sum::<f64>().sqrt();
        x = faer::Mat::from_fn(n, 1, |i, _| y[(i, 0)] / ny);
        let done = (next - lambda).norm() <= 1e-12 * (1.0 + next.norm());
        lambda = next;
        if done {
            return Ok(lambda);
        }
    }
    Err(Error::InvalidArgument(format!(
        "inverse iteration near {shift} did not converge"
    )))
}

/// Truncated thermal phonon distribution.
#[derive(Debug, Clone)]
pub struct ThermalState {
    pub state: DensityMatrix,
    /// Mean phonon number after truncation and renormalization.
    pub truncated_mean: f64,
    /// Population of the top two Fock levels.
    pub tail: f64,
}

/// Diagonal state with p_n ∝ (n̄/(1+n̄))ⁿ on |0⟩…|cutoff⟩.
pub fn thermal_state(nbar: f64, cutoff: usize) -> Result<ThermalState> {
    if !(nbar >= 0.0) || !nbar.is_finite() {
        return Err(Error::InvalidArgument(format!("nbar = {nbar} must be non-negative")));
    }
    let q = nbar / (1.0 + nbar);
    let weights: Vec<f64> = (0..=cutoff).map(|n| q.powi(n as i32)).collect();
    let z: f64 = weights.iter().sum();
    let probs: Vec<f64> = weights.iter().map(|w| w / z).collect();
    let truncated_mean = probs.iter().enumerate().map(|(n, p)| n as f64 * p).sum();
    let tail = probs.iter().rev().take(2.min(cutoff)).sum();
    let diag: Vec<C64> = probs.iter().map(|&p| C64::new(p, 0.0)).collect();
    Ok(ThermalState {
        state: DensityMatrix::new_unchecked(Operator::diagonal(&diag)),
        truncated_mean,
        tail,
    })
}

/// Cutoff choice for a thermal initial state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffChoice {
    pub cutoff: usize,
    pub tail: f64,
    /// The cap was reached with the tail still above tolerance.
    pub capped: bool,
}

pub const CUTOFF_CAP: usize = 20;

/// Raises `start` until the initial thermal tail drops below `tol`, up to
/// `cap`.
pub fn choose_cutoff(nbar0: f64, start: usize, cap: usize, tol: f64) -> Result<CutoffChoice> {
    let mut cutoff = start;
    loop {
        let tail = thermal_state(nbar0, cutoff)?.tail;
        if tail < tol {
            return Ok(CutoffChoice { cutoff, tail, capped: false });
        }
        if cutoff >= cap {
            log::warn!("fock cutoff capped at {cap}: initial tail {tail:.3e} exceeds {tol:.0e}");
            return Ok(CutoffChoice { cutoff, tail, capped: true });
        }
        cutoff += 1;
    }
}

/// |D⟩⟨D| ⊗ thermal(n̄₀) at the parameters' cutoff.
pub fn dark_thermal_state(p: &IonParams) -> Result<DensityMatrix> {
    let d = DensityMatrix::pure(&dressed_frame(p)?.state_d);
    let th = thermal_state(p.nbar0, p.fock_cutoff)?;
    Ok(d.kron(&th.state))
}

/// Population of the two highest Fock levels of a joint state.
pub fn fock_tail(rho: &DensityMatrix, cutoff: usize) -> f64 {
    let f = cutoff + 1;
    (0..rho.dim())
        .filter(|i| f > 2 && i % f + 2 >= f)
        .map(|i| rho.population(i))
        .sum()
}

/// ⟨I ⊗ b†b⟩ on the joint space with the given cutoff.
pub fn mean_phonon(rho: &DensityMatrix, cutoff: usize) -> Result<f64> {
    let fock = cutoff + 1;
    if rho.dim() % fock != 0 {
        return Err(Error::DimensionMismatch { expected: INTERNAL_DIM * fock, found: rho.dim() });
    }
    let n_op = kron(&Operator::identity(rho.dim() / fock), &fock_number(cutoff));
    let v = expectation(rho, &n_op)?;
    if v.im.abs() >= 1e-10 {
        return Err(Error::InvalidDensityMatrix(format!(
            "mean phonon has imaginary part {:.3e}",
            v.im
        )));
    }
    Ok(v.re)
}
