//! Dense complex linear algebra used by every physics module.
//!
//! Matrices are square, row-major and double precision. Heavy factorizations
//! (LU with full pivoting, Hermitian eigenvalues) are delegated to `faer`;
//! everything else is written out directly.

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use faer::Mat;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Tolerance used by [`Operator::is_hermitian`] for stored Hamiltonians.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Dense square complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    dim: usize,
    data: Vec<C64>,
}

impl Operator {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![ZERO; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut op = Self::zeros(dim);
        for i in 0..dim {
            op[(i, i)] = ONE;
        }
        op
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    /// Builds an operator from row-major entries; `entries.len()` must be a
    /// perfect square.
    pub fn from_vec(entries: Vec<C64>) -> Result<Self> {
        let dim = (entries.len() as f64).sqrt().round() as usize;
        if dim == 0 || dim * dim != entries.len() {
            return Err(Error::InvalidArgument(format!(
                "{} entries do not form a square matrix",
                entries.len()
            )));
        }
        Ok(Self { dim, data: entries })
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::InvalidArgument("rows are not square".into()));
        }
        Ok(Self::from_fn(dim, |i, j| C64::new(rows[i][j], 0.0)))
    }

    pub fn diagonal(diag: &[C64]) -> Self {
        let mut op = Self::zeros(diag.len());
        for (i, d) in diag.iter().enumerate() {
            op[(i, i)] = *d;
        }
        op
    }

    /// Matrix unit |i⟩⟨j|.
    pub fn projector(dim: usize, i: usize, j: usize) -> Self {
        let mut op = Self::zeros(dim);
        op[(i, j)] = ONE;
        op
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|x| x * s).collect() }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn dagger(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn kron(&self, other: &Operator) -> Self {
        kron(self, other)
    }

    /// Matrix product; panics on dimension mismatch (use [`Operator::try_mul`]
    /// for a checked variant).
    pub fn matmul(&self, other: &Operator) -> Self {
        self.try_mul(other).expect("operator dimensions must match")
    }

    pub fn try_mul(&self, other: &Operator) -> Result<Self> {
        check_dim(self.dim, other.dim)?;
        let n = self.dim;
        let mut out = vec![ZERO; n * n];
        for i in 0..n {
            let row = &mut out[i * n..(i + 1) * n];
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == ZERO {
                    continue;
                }
                let other_row = &other.data[k * n..(k + 1) * n];
                for (o, b) in row.iter_mut().zip(other_row) {
                    *o += a * b;
                }
            }
        }
        Ok(Self { dim: n, data: out })
    }

    pub fn commutator(&self, other: &Operator) -> Self {
        &self.matmul(other) - &other.matmul(self)
    }

    pub fn apply(&self, v: &StateVector) -> Result<StateVector> {
        check_dim(self.dim, v.dim())?;
        let n = self.dim;
        let data = (0..n)
            .map(|i| {
                self.data[i * n..(i + 1) * n]
                    .iter()
                    .zip(v.as_slice())
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect();
        Ok(StateVector::new(data))
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    /// max |A - A†|.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() < tol
    }

    /// Fails unless the operator is Hermitian within [`HERMITIAN_TOL`].
    pub fn validate_hamiltonian(&self) -> Result<()> {
        let defect = self.hermiticity_defect();
        if defect < HERMITIAN_TOL {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "Hamiltonian is not Hermitian: max|A - A†| = {defect:.3e}"
            )))
        }
    }

    /// Eigenvalues of the Hermitian part (A + A†)/2, ascending.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let n = self.dim;
        let m = Mat::<C64>::from_fn(n, n, |i, j| (self[(i, j)] + self[(j, i)].conj()) * 0.5);
        m.self_adjoint_eigenvalues(faer::Side::Lower)
            .expect("self-adjoint eigensolver converges on finite input")
    }

    pub fn to_faer(&self) -> Mat<C64> {
        let n = self.dim;
        Mat::from_fn(n, n, |i, j| self.data[i * n + j])
    }

    pub fn from_faer(m: faer::MatRef<'_, C64>) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "faer matrix must be square");
        Self::from_fn(m.nrows(), |i, j| m[(i, j)])
    }

    /// Largest entry-wise distance to `other`.
    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl Index<(usize, usize)> for Operator {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for Operator {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.dim + j]
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim, rhs.dim, "operator dimensions must match");
        Operator {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim, rhs.dim, "operator dimensions must match");
        Operator {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        self.matmul(rhs)
    }
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// Dense complex vector.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    data: Vec<C64>,
}

impl StateVector {
    pub fn new(data: Vec<C64>) -> Self {
        Self { data }
    }

    pub fn from_real(data: &[f64]) -> Self {
        Self::new(data.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    /// Computational basis vector |i⟩.
    pub fn basis(dim: usize, i: usize) -> Self {
        let mut data = vec![ZERO; dim];
        data[i] = ONE;
        Self { data }
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        Self::new(self.data.iter().map(|x| x / n).collect())
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm() - 1.0).abs() < 1e-12
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &StateVector) -> C64 {
        assert_eq!(self.dim(), other.dim());
        self.data.iter().zip(&other.data).map(|(a, b)| a.conj() * b).sum()
    }

    /// |self⟩⟨other|.
    pub fn outer(&self, other: &StateVector) -> Operator {
        Operator::from_fn(self.dim(), |i, j| self.data[i] * other.data[j].conj())
    }

    pub fn projector(&self) -> Operator {
        self.outer(self)
    }

    pub fn kron(&self, other: &StateVector) -> Self {
        let mut data = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.data {
            for b in &other.data {
                data.push(a * b);
            }
        }
        Self { data }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::new(self.data.iter().map(|x| x * s).collect())
    }

    pub fn add(&self, other: &StateVector) -> Self {
        Self::new(self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect())
    }
}

impl Index<usize> for StateVector {
    type Output = C64;
    fn index(&self, i: usize) -> &C64 {
        &self.data[i]
    }
}

/// Hermitian, unit-trace, positive semidefinite operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    op: Operator,
}

impl DensityMatrix {
    pub const HERMITIAN_TOL: f64 = 1e-10;
    pub const TRACE_TOL: f64 = 1e-10;
    pub const POSITIVITY_TOL: f64 = 1e-8;

    /// Validates the density-matrix invariants before wrapping.
    pub fn new(op: Operator) -> Result<Self> {
        let rho = Self { op };
        rho.validate()?;
        Ok(rho)
    }

    /// Wraps without validation (intermediate integrator states).
    pub fn new_unchecked(op: Operator) -> Self {
        Self { op }
    }

    pub fn pure(psi: &StateVector) -> Self {
        Self { op: psi.normalized().projector() }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self { op: Operator::identity(dim).scale_real(1.0 / dim as f64) }
    }

    pub fn validate(&self) -> Result<()> {
        let herm = self.op.hermiticity_defect();
        if herm >= Self::HERMITIAN_TOL {
            return Err(Error::InvalidDensityMatrix(format!(
                "hermiticity defect {herm:.3e}"
            )));
        }
        let tr = self.op.trace();
        if (tr - ONE).norm() >= Self::TRACE_TOL {
            return Err(Error::InvalidDensityMatrix(format!("trace {tr}")));
        }
        let min_eig = self.min_eigenvalue();
        if min_eig <= -Self::POSITIVITY_TOL {
            return Err(Error::InvalidDensityMatrix(format!(
                "minimum eigenvalue {min_eig:.3e}"
            )));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn as_operator(&self) -> &Operator {
        &self.op
    }

    pub fn into_operator(self) -> Operator {
        self.op
    }

    pub fn trace(&self) -> C64 {
        self.op.trace()
    }

    pub fn purity(&self) -> f64 {
        self.op.matmul(&self.op).trace().re
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.op.hermitian_eigenvalues().first().copied().unwrap_or(0.0)
    }

    /// ½‖ρ − σ‖₁ computed from the eigenvalues of the Hermitian difference.
    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        check_dim(self.dim(), other.dim())?;
        let diff = &self.op - &other.op;
        Ok(0.5 * diff.hermitian_eigenvalues().iter().map(|x| x.abs()).sum::<f64>())
    }

    pub fn kron(&self, other: &DensityMatrix) -> Self {
        Self { op: kron(&self.op, &other.op) }
    }

    /// Diagonal entry ⟨i|ρ|i⟩ (real part).
    pub fn population(&self, i: usize) -> f64 {
        self.op[(i, i)].re
    }
}

/// Tensor product with the second factor as the fast index.
pub fn kron(a: &Operator, b: &Operator) -> Operator {
    let (na, nb) = (a.dim(), b.dim());
    let n = na * nb;
    let mut out = Operator::zeros(n);
    for i in 0..na {
        for j in 0..na {
            let aij = a[(i, j)];
            if aij == ZERO {
                continue;
            }
            for k in 0..nb {
                for l in 0..nb {
                    out[(i * nb + k, j * nb + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Conjugate transpose.
pub fn dagger(a: &Operator) -> Operator {
    a.dagger()
}

/// Annihilation operator on the Fock states |0⟩…|cutoff⟩.
pub fn fock_lowering(cutoff: usize) -> Result<Operator> {
    if cutoff < 1 {
        return Err(Error::InvalidArgument(format!("fock cutoff {cutoff} < 1")));
    }
    let mut b = Operator::zeros(cutoff + 1);
    for n in 1..=cutoff {
        b[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    Ok(b)
}

/// Number operator b†b on |0⟩…|cutoff⟩.
pub fn fock_number(cutoff: usize) -> Operator {
    let diag: Vec<C64> = (0..=cutoff).map(|n| C64::new(n as f64, 0.0)).collect();
    Operator::diagonal(&diag)
}

/// Position quadrature b + b†.
pub fn fock_position(cutoff: usize) -> Result<Operator> {
    let b = fock_lowering(cutoff)?;
    Ok(&b + &b.dagger())
}

/// tr(obs · ρ).
pub fn expectation(rho: &DensityMatrix, obs: &Operator) -> Result<C64> {
    check_dim(rho.dim(), obs.dim())?;
    let n = obs.dim();
    let r = rho.as_operator();
    let mut acc = ZERO;
    for i in 0..n {
        for k in 0..n {
            acc += obs[(i, k)] * r[(k, i)];
        }
    }
    Ok(acc)
}

/// Kernel direction of a square matrix.
#[derive(Debug, Clone)]
pub struct NullVector {
    pub vector: StateVector,
    /// Number of pivots below the threshold (estimated kernel dimension).
    pub multiplicity: usize,
    /// ‖a·v‖ / ‖a‖.
    pub relative_residual: f64,
}

/// Unit vector spanning (part of) the kernel of `a`.
///
/// Uses LU with full pivoting as a rank-revealing factorization: pivots below
/// `tol·‖a‖` are counted as null directions, and the vector is recovered by
/// back substitution with the trailing free coordinate set to one.
pub fn null_vector(a: &Operator, tol: f64) -> Result<NullVector> {
    let n = a.dim();
    let scale = a.frobenius_norm();
    if scale == 0.0 {
        return Ok(NullVector {
            vector: StateVector::basis(n, 0),
            multiplicity: n,
            relative_residual: 0.0,
        });
    }
    let lu = a.to_faer().full_piv_lu();
    let u = lu.U();
    let threshold = tol * scale;
    let pivots: Vec<f64> = (0..n).map(|k| u[(k, k)].norm()).collect();
    let rank = pivots.iter().take_while(|&&p| p >= threshold).count();
    if rank == n {
        return Err(Error::NoNullVector { smallest: pivots[n - 1], threshold });
    }
    let multiplicity = n - rank;

    // Solve U[..rank, ..rank] y = -U[..rank, rank] with y[rank] = 1, rest zero.
    let mut y = vec![ZERO; n];
    y[rank] = ONE;
    for i in (0..rank).rev() {
        let mut acc = u[(i, rank)];
        for j in i + 1..rank {
            acc += u[(i, j)] * y[j];
        }
        y[i] = -acc / u[(i, i)];
    }
    let (col_fwd, _) = lu.Q().arrays();
    let mut x = vec![ZERO; n];
    for (k, &col) in col_fwd.iter().enumerate() {
        x[col] = y[k];
    }
    let vector = StateVector::new(x).normalized();
    let residual = a.apply(&vector)?.norm() / scale;
    if residual >= tol {
        return Err(Error::NoNullVector { smallest: residual * scale, threshold });
    }
    Ok(NullVector { vector, multiplicity, relative_residual: residual })
}

/// Solution of a square linear system with its 1-norm condition number.
#[derive(Debug, Clone)]
pub struct LinearSolution {
    pub x: StateVector,
    pub condition: f64,
}

fn one_norm(m: faer::MatRef<'_, C64>) -> f64 {
    (0..m.ncols())
        .map(|j| (0..m.nrows()).map(|i| m[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Solves `a x = b` by partial-pivot LU and reports κ₁(a) = ‖a‖₁‖a⁻¹‖₁.
pub fn solve(a: &Operator, b: &StateVector) -> Result<LinearSolution> {
    use faer::linalg::solvers::{DenseSolveCore, Solve};
    let n = a.dim();
    if b.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: b.dim() });
    }
    let m = a.to_faer();
    let lu = m.partial_piv_lu();
    let inv = lu.inverse();
    let condition = one_norm(m.as_ref()) * one_norm(inv.as_ref());
    let rhs = Mat::<C64>::from_fn(n, 1, |i, _| b[i]);
    let sol = lu.solve(&rhs);
    let x: Vec<C64> = (0..n).map(|i| sol[(i, 0)]).collect();
    let condition = if x.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
        condition
    } else {
        f64::INFINITY
    };
    Ok(LinearSolution { x: StateVector::new(x), condition })
}

#[cfg(test)]
pub(crate) mod test_util {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    pub fn random_operator(rng: &mut impl Rng, dim: usize) -> Operator {
        Operator::from_fn(dim, |_, _| {
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    }

    pub fn random_density(rng: &mut impl Rng, dim: usize) -> DensityMatrix {
        let a = random_operator(rng, dim);
        let m = a.matmul(&a.dagger());
        let tr = m.trace().re;
        DensityMatrix::new(m.scale_real(1.0 / tr)).unwrap()
    }
}
