//! Dense complex linear algebra for small Hilbert spaces.
//!
//! Everything here works on `nalgebra` dynamic matrices of `Complex64`. The
//! dimensions in this crate are tiny (2, 3, 4, 9 and the sideband model's
//! 3·(n_max+1)), so dense storage and direct algorithms are used throughout.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type ComplexMatrix = DMatrix<Complex64>;
pub type ComplexVector = DVector<Complex64>;

/// Largest matrix dimension accepted by [`matrix_exponential`].
pub const MAX_DIM: usize = 64;

/// Unitarity tolerance for propagators that went through numerical integration.
pub const UNITARITY_ACCEPT: f64 = 1e-9;
/// Unitarity tolerance for matrices built in closed form.
pub const UNITARITY_EXACT: f64 = 1e-12;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

pub fn pauli_i() -> ComplexMatrix {
    identity(2)
}

pub fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)])
}

pub fn pauli_y() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)])
}

pub fn pauli_z() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)])
}

/// The operator basis (I, σx, σy, σz), unnormalized.
pub fn pauli_basis() -> [ComplexMatrix; 4] {
    [pauli_i(), pauli_x(), pauli_y(), pauli_z()]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// R_k(angle) = exp(−i·angle·σ_k/2).
pub fn rotation(axis: Axis, angle: f64) -> ComplexMatrix {
    let sigma = match axis {
        Axis::X => pauli_x(),
        Axis::Y => pauli_y(),
        Axis::Z => pauli_z(),
    };
    let (s, co) = (angle / 2.0).sin_cos();
    identity(2) * c(co, 0.0) - sigma * c(0.0, s)
}

pub fn commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a * b - b * a
}

pub fn one_norm(m: &ComplexMatrix) -> f64 {
    m.column_iter()
        .map(|col| col.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Largest entrywise modulus of `a − b`.
pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn unitarity_deviation(m: &ComplexMatrix) -> f64 {
    let n = m.nrows();
    max_abs_diff(&(m.adjoint() * m), &identity(n))
}

pub fn hermiticity_deviation(m: &ComplexMatrix) -> f64 {
    max_abs_diff(m, &m.adjoint())
}

pub fn check_square(m: &ComplexMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::NonSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(m.nrows())
}

pub fn check_unitary(m: &ComplexMatrix, tol: f64, what: &'static str) -> Result<()> {
    check_square(m)?;
    if !m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    let deviation = unitarity_deviation(m);
    if deviation > tol {
        return Err(Error::NotUnitary { what, deviation });
    }
    Ok(())
}

// Padé coefficients and thresholds from Higham, "The scaling and squaring
// method for the matrix exponential revisited" (2005).
const PADE3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const PADE9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA: [(usize, f64); 4] = [
    (3, 1.495585217958292e-2),
    (5, 2.53939833006323e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068e0),
];
const THETA13: f64 = 5.371920351148152;

/// exp(scale·M) by scaling and squaring with a diagonal Padé approximant.
pub fn matrix_exponential(m: &ComplexMatrix, scale: C64) -> Result<ComplexMatrix> {
    let n = check_square(m)?;
    if n > MAX_DIM {
        return Err(Error::DimensionTooLarge(n));
    }
    if !m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
        || !(scale.re.is_finite() && scale.im.is_finite())
    {
        return Err(Error::NonFinite);
    }
    let a = m * scale;
    let norm = one_norm(&a);
    if norm == 0.0 {
        return Ok(identity(n));
    }
    for &(degree, theta) in &THETA {
        if norm <= theta {
            return pade_low(&a, degree);
        }
    }
    let squarings = (norm / THETA13).log2().ceil().max(0.0) as i32;
    let scaled = &a * c(0.5f64.powi(squarings), 0.0);
    let mut r = pade13(&scaled)?;
    for _ in 0..squarings {
        r = &r * &r;
    }
    Ok(r)
}

fn scaled(m: &ComplexMatrix, s: f64) -> ComplexMatrix {
    m * c(s, 0.0)
}

fn pade_low(a: &ComplexMatrix, degree: usize) -> Result<ComplexMatrix> {
    let b: &[f64] = match degree {
        3 => &PADE3,
        5 => &PADE5,
        7 => &PADE7,
        _ => &PADE9,
    };
    let n = a.nrows();
    let a2 = a * a;
    let mut even_power = identity(n);
    let mut u_sum = ComplexMatrix::zeros(n, n);
    let mut v = ComplexMatrix::zeros(n, n);
    for k in 0..=degree / 2 {
        u_sum += scaled(&even_power, b[2 * k + 1]);
        v += scaled(&even_power, b[2 * k]);
        even_power = &even_power * &a2;
    }
    let u = a * u_sum;
    pade_solve(u, v)
}

fn pade13(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let b = &PADE13;
    let n = a.nrows();
    let id = identity(n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let inner_u = scaled(&a6, b[13]) + scaled(&a4, b[11]) + scaled(&a2, b[9]);
    let u = a
        * (&a6 * inner_u
            + scaled(&a6, b[7])
            + scaled(&a4, b[5])
            + scaled(&a2, b[3])
            + scaled(&id, b[1]));
    let inner_v = scaled(&a6, b[12]) + scaled(&a4, b[10]) + scaled(&a2, b[8]);
    let v = &a6 * inner_v
        + scaled(&a6, b[6])
        + scaled(&a4, b[4])
        + scaled(&a2, b[2])
        + scaled(&id, b[0]);
    pade_solve(u, v)
}

fn pade_solve(u: ComplexMatrix, v: ComplexMatrix) -> Result<ComplexMatrix> {
    let p = &v + &u;
    let q = v - u;
    q.lu()
        .solve(&p)
        .ok_or_else(|| Error::InvalidState("singular Padé denominator".into()))
}

/// Upper-left 2×2 block: the propagator restricted to the qubit subspace {|0⟩, |1⟩}.
pub fn qubit_block(u: &ComplexMatrix) -> ComplexMatrix {
    u.view((0, 0), (2, 2)).into_owned()
}

/// Embed a 2×2 operator as V ⊕ 1 on the three-level space.
pub fn embed_qubit(v: &ComplexMatrix) -> ComplexMatrix {
    let mut out = identity(3);
    out.view_mut((0, 0), (2, 2)).copy_from(v);
    out
}

fn check_qutrit_qubit_pair(u: &ComplexMatrix, v: &ComplexMatrix) -> Result<()> {
    if u.nrows() != 3 || u.ncols() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            got: u.nrows(),
        });
    }
    if v.nrows() != 2 || v.ncols() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: v.nrows(),
        });
    }
    check_unitary(u, UNITARITY_ACCEPT, "propagator")?;
    check_unitary(v, UNITARITY_EXACT, "target")
}

/// |Tr(P U† P V)| / 2 for a 3×3 propagator U and a 2×2 target V.
pub fn fidelity_qubit_subspace(u: &ComplexMatrix, v: &ComplexMatrix) -> Result<f64> {
    check_qutrit_qubit_pair(u, v)?;
    let block = qubit_block(u);
    Ok((block.adjoint() * v).trace().norm() / 2.0)
}

/// Largest population transferred to |a⟩ from either qubit basis state.
pub fn leakage(u: &ComplexMatrix) -> Result<f64> {
    if u.nrows() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            got: u.nrows(),
        });
    }
    check_unitary(u, UNITARITY_ACCEPT, "propagator")?;
    Ok((0..2).map(|j| u[(2, j)].norm_sqr()).fold(0.0, f64::max))
}

/// Average gate fidelity of a (possibly non-unitary, leaky) subspace block `m`
/// against the unitary target `v`: (|Tr(V†M)|² + Tr(M†M)) / (d(d+1)).
pub fn average_gate_fidelity(m: &ComplexMatrix, v: &ComplexMatrix) -> f64 {
    let d = v.nrows() as f64;
    let overlap = (v.adjoint() * m).trace().norm_sqr();
    let norm = (m.adjoint() * m).trace().re;
    (overlap + norm) / (d * (d + 1.0))
}

/// Divide out the phase of the first entry (column-major scan) with modulus above 1e-12.
pub fn canonical_phase(m: &ComplexMatrix) -> ComplexMatrix {
    match m.iter().find(|z| z.norm() > 1e-12) {
        Some(z) => m * (z.conj() / z.norm()),
        None => m.clone(),
    }
}

/// min over φ of ‖A − e^{iφ}B‖_F.
pub fn phase_distance(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    let overlap = (b.adjoint() * a).trace();
    let phase = if overlap.norm() > 0.0 {
        overlap / overlap.norm()
    } else {
        c(1.0, 0.0)
    };
    (a - b * phase).norm()
}

/// Eigen-decomposition of a Hermitian matrix; eigenvalues ascending.
pub fn hermitian_eigen(m: &ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    let sym = (m + m.adjoint()) * c(0.5, 0.0);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let n = m.nrows();
    let mut vecs = ComplexMatrix::zeros(n, n);
    let mut vals = Vec::with_capacity(n);
    for (k, &i) in order.iter().enumerate() {
        vals.push(eig.eigenvalues[i]);
        vecs.set_column(k, &eig.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// Apply a real function to the spectrum of a Hermitian matrix.
pub fn hermitian_map(m: &ComplexMatrix, f: impl Fn(f64) -> f64) -> ComplexMatrix {
    let (vals, vecs) = hermitian_eigen(m);
    let diag = ComplexMatrix::from_diagonal(&ComplexVector::from_iterator(
        vals.len(),
        vals.iter().map(|&x| c(f(x), 0.0)),
    ));
    &vecs * diag * vecs.adjoint()
}

/// Kronecker product.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

/// A normalized pure state.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    amplitudes: ComplexVector,
}

impl QuantumState {
    pub const NORM_TOL: f64 = 1e-12;

    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        Self::from_vector(ComplexVector::from_vec(amplitudes))
    }

    pub fn from_vector(amplitudes: ComplexVector) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::InvalidArgument("empty state".into()));
        }
        if !amplitudes
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
        {
            return Err(Error::NonFinite);
        }
        let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>();
        if (norm - 1.0).abs() > Self::NORM_TOL {
            return Err(Error::InvalidState(format!(
                "state norm² = {norm} is not 1"
            )));
        }
        Ok(Self { amplitudes })
    }

    /// Normalize an arbitrary nonzero vector.
    pub fn normalized(amplitudes: ComplexVector) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidState("cannot normalize zero vector".into()));
        }
        Self::from_vector(amplitudes / c(norm, 0.0))
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = ComplexVector::zeros(dim);
        v[index] = c(1.0, 0.0);
        Self { amplitudes: v }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &ComplexVector {
        &self.amplitudes
    }

    pub fn inner(&self, other: &Self) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    /// Apply a unitary, renormalizing away rounding.
    pub fn evolve(&self, u: &ComplexMatrix) -> Result<Self> {
        if u.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: u.ncols(),
            });
        }
        Self::normalized(u * &self.amplitudes)
    }

    /// Multiply by the phase that makes the first nonzero amplitude real positive.
    pub fn canonical_phase(&self) -> Self {
        let phase = self
            .amplitudes
            .iter()
            .find(|z| z.norm() > 1e-12)
            .map(|z| z.conj() / z.norm())
            .unwrap_or(c(1.0, 0.0));
        Self {
            amplitudes: &self.amplitudes * phase,
        }
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix {
            entries: &self.amplitudes * self.amplitudes.adjoint(),
        }
    }
}

/// A validated density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: ComplexMatrix,
}

impl DensityMatrix {
    pub const HERMITIAN_TOL: f64 = 1e-12;
    pub const TRACE_TOL: f64 = 1e-10;
    pub const POSITIVITY_TOL: f64 = 1e-10;

    pub fn new(entries: ComplexMatrix) -> Result<Self> {
        Self::with_tolerances(entries, Self::HERMITIAN_TOL, Self::POSITIVITY_TOL)
    }

    /// Validate with looser tolerances, then symmetrize.
    pub fn with_tolerances(
        entries: ComplexMatrix,
        hermitian_tol: f64,
        positivity_tol: f64,
    ) -> Result<Self> {
        check_square(&entries)?;
        if !entries.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        let h = hermiticity_deviation(&entries);
        if h > hermitian_tol {
            return Err(Error::InvalidState(format!("not Hermitian ({h:.3e})")));
        }
        let tr = entries.trace();
        if (tr.re - 1.0).abs() > Self::TRACE_TOL.max(hermitian_tol) || tr.im.abs() > hermitian_tol {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        let entries = (&entries + entries.adjoint()) * c(0.5, 0.0);
        let (vals, _) = hermitian_eigen(&entries);
        if vals[0] < -positivity_tol {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {:.3e}",
                vals[0]
            )));
        }
        Ok(Self { entries })
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            entries: identity(dim) * c(1.0 / dim as f64, 0.0),
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &ComplexMatrix {
        &self.entries
    }

    pub fn into_entries(self) -> ComplexMatrix {
        self.entries
    }

    pub fn population(&self, index: usize) -> f64 {
        self.entries[(index, index)].re
    }

    pub fn purity(&self) -> f64 {
        (&self.entries * &self.entries).trace().re
    }

    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_eigen(&self.entries).0[0]
    }
}
