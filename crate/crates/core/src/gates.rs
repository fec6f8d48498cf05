//! Single-qubit gate targets, axis–angle decomposition and the Clifford group.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::linalg::{
    c, canonical_phase, check_square, check_unitary, identity, pauli_x, pauli_y, pauli_z,
    phase_distance, ComplexMatrix, UNITARITY_ACCEPT,
};
use crate::paths::Scheme;
use crate::pulses::GateSpec;

const AXIS_TOL: f64 = 1e-12;
/// Two unitaries closer than this (phase-invariant Frobenius distance) are equal.
pub const PHASE_EQUIVALENCE_TOL: f64 = 1e-9;

/// Rotation by γ about n = (sinθcosφ, sinθsinφ, cosθ), up to the global phase e^{iγ/2}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation {
    pub theta: f64,
    pub phi: f64,
    pub gamma: f64,
}

impl Rotation {
    pub const IDENTITY: Rotation = Rotation {
        theta: 0.0,
        phi: 0.0,
        gamma: 0.0,
    };

    pub fn new(theta: f64, phi: f64, gamma: f64) -> Self {
        Self { theta, phi, gamma }
    }

    pub fn unitary(&self) -> ComplexMatrix {
        rotation_unitary(self.theta, self.phi, self.gamma)
    }

    pub fn holonomic(&self, eta: f64) -> Result<GateSpec> {
        GateSpec::holonomic(self.theta, self.phi, self.gamma, eta)
    }

    /// Dynamical realization: γ_D = −2πη_D must equal γ modulo 2π, so
    /// η_D = 1 − γ/2π for γ ∈ (0, π] and η_D = 0 for the identity.
    pub fn dynamical(&self) -> Result<GateSpec> {
        let eta = if self.gamma == 0.0 {
            0.0
        } else {
            1.0 - self.gamma / (2.0 * PI)
        };
        GateSpec::dynamical(self.theta, self.phi, eta)
    }

    pub fn spec(&self, scheme: Scheme, eta: f64) -> Result<GateSpec> {
        match scheme {
            Scheme::Holonomic => self.holonomic(eta),
            Scheme::Dynamical => self.dynamical(),
        }
    }
}

/// e^{iγ/2}(cos(γ/2)·I − i·sin(γ/2)·n·σ).
pub fn rotation_unitary(theta: f64, phi: f64, gamma: f64) -> ComplexMatrix {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    let (sg, cg) = (0.5 * gamma).sin_cos();
    let n_sigma =
        pauli_x() * c(st * cp, 0.0) + pauli_y() * c(st * sp, 0.0) + pauli_z() * c(ct, 0.0);
    let core = identity(2) * c(cg, 0.0) + n_sigma * c(0.0, -sg);
    core * c(0.0, 0.5 * gamma).exp()
}

/// Target of a gate specification. Dynamical specs carry γ = γ_D.
pub fn target_unitary(spec: &GateSpec) -> ComplexMatrix {
    rotation_unitary(spec.theta, spec.phi, spec.gamma)
}

/// Decompose a qubit unitary as a rotation with γ ∈ [0, π].
pub fn axis_angle(u: &ComplexMatrix) -> Result<Rotation> {
    if check_square(u)? != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: u.nrows(),
        });
    }
    check_unitary(u, UNITARITY_ACCEPT, "qubit gate")?;
    // Project to SU(2): W = a₀I − i(a·σ).
    let det = u[(0, 0)] * u[(1, 1)] - u[(0, 1)] * u[(1, 0)];
    let w = u * det.sqrt().inv();
    let a0 = 0.5 * w.trace().re;
    let mut v = [
        -0.5 * (&w * pauli_x()).trace().im,
        -0.5 * (&w * pauli_y()).trace().im,
        -0.5 * (&w * pauli_z()).trace().im,
    ];
    let mut a0 = a0;
    if a0 < 0.0 {
        // −W is the same gate; choose the sign giving γ ≤ π.
        a0 = -a0;
        v.iter_mut().for_each(|x| *x = -*x);
    }
    let s = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    if s < AXIS_TOL {
        return Ok(Rotation::IDENTITY);
    }
    let gamma = 2.0 * s.atan2(a0);
    let mut n = v.map(|x| x / s);
    if a0 < AXIS_TOL {
        // Half turn: ±n describe the same gate.
        if let Some(&first) = n.iter().find(|x| x.abs() > AXIS_TOL) {
            if first < 0.0 {
                n.iter_mut().for_each(|x| *x = -*x);
            }
        }
    }
    let theta = n[2].clamp(-1.0, 1.0).acos();
    let phi = if theta.sin() < AXIS_TOL {
        0.0
    } else {
        let p = n[1].atan2(n[0]);
        if p >= PI {
            p - 2.0 * PI
        } else {
            p
        }
    };
    Ok(Rotation { theta, phi, gamma })
}

/// Gates named in the experiment's benchmarking runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NamedGate {
    X,
    H,
    T,
    S,
}

impl NamedGate {
    pub const ALL: [NamedGate; 4] = [NamedGate::X, NamedGate::H, NamedGate::T, NamedGate::S];

    pub fn rotation(self) -> Rotation {
        match self {
            NamedGate::X => Rotation::new(PI / 2.0, 0.0, PI),
            NamedGate::H => Rotation::new(PI / 4.0, 0.0, PI),
            NamedGate::T => Rotation::new(0.0, 0.0, PI / 4.0),
            NamedGate::S => Rotation::new(0.0, 0.0, PI / 2.0),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            NamedGate::X => "x",
            NamedGate::H => "h",
            NamedGate::T => "t",
            NamedGate::S => "s",
        }
    }
}

impl std::str::FromStr for NamedGate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "x" => Ok(NamedGate::X),
            "h" => Ok(NamedGate::H),
            "t" => Ok(NamedGate::T),
            "s" => Ok(NamedGate::S),
            other => Err(Error::InvalidArgument(format!("unknown gate `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliffordElement {
    pub index: usize,
    pub rotation: Rotation,
    /// Target matrix with its first nonzero entry real and positive.
    pub matrix: ComplexMatrix,
}

fn axis_rotation(axis: [f64; 3], angle: f64) -> ComplexMatrix {
    let norm = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
    let n_sigma = pauli_x() * c(axis[0] / norm, 0.0)
        + pauli_y() * c(axis[1] / norm, 0.0)
        + pauli_z() * c(axis[2] / norm, 0.0);
    let (s, co) = (0.5 * angle).sin_cos();
    identity(2) * c(co, 0.0) + n_sigma * c(0.0, -s)
}

fn build_clifford_table() -> Vec<CliffordElement> {
    let mut generators: Vec<([f64; 3], f64)> = vec![([0.0, 0.0, 1.0], 0.0)];
    for axis in [
        [1.0, 0.0, 0.0],
        [-1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, -1.0, 0.0],
        [0.0, 0.0, 1.0],
        [0.0, 0.0, -1.0],
    ] {
        generators.push((axis, PI / 2.0));
    }
    for axis in [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]] {
        generators.push((axis, PI));
    }
    for axis in [
        [1.0, 1.0, 0.0],
        [1.0, -1.0, 0.0],
        [0.0, 1.0, 1.0],
        [0.0, 1.0, -1.0],
        [1.0, 0.0, 1.0],
        [1.0, 0.0, -1.0],
    ] {
        generators.push((axis, PI));
    }
    for axis in [
        [1.0, 1.0, 1.0],
        [1.0, 1.0, -1.0],
        [1.0, -1.0, 1.0],
        [-1.0, 1.0, 1.0],
    ] {
        generators.push((axis, 2.0 * PI / 3.0));
        generators.push((axis, -2.0 * PI / 3.0));
    }
    generators
        .into_iter()
        .enumerate()
        .map(|(index, (axis, angle))| {
            let rotation =
                axis_angle(&axis_rotation(axis, angle)).expect("unitary by construction");
            CliffordElement {
                index,
                rotation,
                matrix: canonical_phase(&rotation.unitary()),
            }
        })
        .collect()
}

/// The 24 single-qubit Cliffords, built once.
pub fn clifford_table() -> &'static [CliffordElement] {
    static TABLE: OnceLock<Vec<CliffordElement>> = OnceLock::new();
    TABLE.get_or_init(build_clifford_table)
}

/// Index of the Clifford phase-equivalent to `u`, if any.
pub fn find_clifford(u: &ComplexMatrix) -> Option<usize> {
    clifford_table()
        .iter()
        .position(|e| phase_distance(u, &e.matrix) < PHASE_EQUIVALENCE_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs_diff, phase_distance, unitarity_deviation};
    use proptest::prelude::*;

    fn m(entries: [[(f64, f64); 2]; 2]) -> ComplexMatrix {
        ComplexMatrix::from_fn(2, 2, |i, j| c(entries[i][j].0, entries[i][j].1))
    }

    #[test]
    fn named_gates_are_standard_matrices() {
        let r = 0.5f64.sqrt();
        let q = (PI / 4.0).cos();
        let cases = [
            (
                NamedGate::X,
                m([[(0.0, 0.0), (1.0, 0.0)], [(1.0, 0.0), (0.0, 0.0)]]),
            ),
            (
                NamedGate::H,
                m([[(r, 0.0), (r, 0.0)], [(r, 0.0), (-r, 0.0)]]),
            ),
            (
                NamedGate::T,
                m([[(1.0, 0.0), (0.0, 0.0)], [(0.0, 0.0), (q, q)]]),
            ),
            (
                NamedGate::S,
                m([[(1.0, 0.0), (0.0, 0.0)], [(0.0, 0.0), (0.0, 1.0)]]),
            ),
        ];
        for (gate, expected) in cases {
            assert!(
                max_abs_diff(&gate.rotation().unitary(), &expected) < 1e-12,
                "{gate:?}"
            );
        }
    }

    #[test]
    fn opposite_angles_cancel() {
        for &(t, p, g) in &[(0.3, 1.1, 2.0), (PI / 2.0, -3.0, PI), (PI, 0.0, 0.1)] {
            let prod = rotation_unitary(t, p, g) * rotation_unitary(t, p, -g);
            assert!(max_abs_diff(&prod, &identity(2)) < 1e-15);
        }
    }

    #[test]
    fn dynamical_and_holonomic_targets_coincide() {
        let d = GateSpec::dynamical(0.4, 0.9, 0.5).unwrap();
        let h = GateSpec::holonomic(0.4, 0.9, -PI, 0.3).unwrap();
        assert!(max_abs_diff(&target_unitary(&d), &target_unitary(&h)) < 1e-15);
    }

    #[test]
    fn axis_angle_known_cases() {
        let x = axis_angle(&pauli_x()).unwrap();
        assert!((x.theta - PI / 2.0).abs() < 1e-12 && x.phi == 0.0 && (x.gamma - PI).abs() < 1e-12);
        assert_eq!(axis_angle(&identity(2)).unwrap(), Rotation::IDENTITY);
        let phased = identity(2) * c(0.0, 1.0);
        assert_eq!(axis_angle(&phased).unwrap(), Rotation::IDENTITY);
    }

    #[test]
    fn half_turn_axis_tie_break() {
        // −X about −x is the same gate as X; both must decompose identically.
        let minus = axis_rotation([-1.0, 0.0, 0.0], PI);
        let r = axis_angle(&minus).unwrap();
        assert!((r.theta - PI / 2.0).abs() < 1e-12 && r.phi == 0.0);
        let y_minus = axis_angle(&axis_rotation([0.0, -1.0, 0.0], PI)).unwrap();
        assert!((y_minus.phi - PI / 2.0).abs() < 1e-12);
        let z = axis_angle(&axis_rotation([0.0, 0.0, -1.0], PI)).unwrap();
        assert!(z.theta.abs() < 1e-12);
    }

    #[test]
    fn axis_angle_rejects_bad_input() {
        assert!(axis_angle(&(pauli_x() * c(1.1, 0.0))).is_err());
        assert!(axis_angle(&identity(3)).is_err());
    }

    #[test]
    fn clifford_table_has_24_distinct_elements() {
        let table = clifford_table();
        assert_eq!(table.len(), 24);
        for (i, a) in table.iter().enumerate() {
            assert_eq!(a.index, i);
            assert!(unitarity_deviation(&a.matrix) < 1e-12);
            assert!(max_abs_diff(&a.matrix, &canonical_phase(&a.rotation.unitary())) < 1e-12);
            assert!((0.0..=PI).contains(&a.rotation.gamma));
            for b in &table[i + 1..] {
                assert!(
                    phase_distance(&a.matrix, &b.matrix) > 0.1,
                    "{i} vs {}",
                    b.index
                );
            }
        }
        assert!(find_clifford(&pauli_x()).is_some());
        assert_eq!(find_clifford(&identity(2)), Some(0));
    }

    #[test]
    fn clifford_table_is_closed() {
        let table = clifford_table();
        for a in table {
            for b in table {
                let prod = &a.matrix * &b.matrix;
                assert!(find_clifford(&prod).is_some(), "{} * {}", a.index, b.index);
            }
        }
    }

    #[test]
    fn clifford_elements_map_paulis_to_paulis() {
        let paulis = [pauli_x(), pauli_y(), pauli_z()];
        for e in clifford_table() {
            for p in &paulis {
                let conj = &e.matrix * p * e.matrix.adjoint();
                let hits = paulis
                    .iter()
                    .filter(|q| phase_distance(&conj, q) < 1e-9)
                    .count();
                assert_eq!(hits, 1);
            }
        }
    }

    #[test]
    fn dynamical_realizations_of_cliffords() {
        for e in clifford_table() {
            let spec = e.rotation.dynamical().unwrap();
            assert!(
                phase_distance(&target_unitary(&spec), &e.matrix) < 1e-12,
                "{}",
                e.index
            );
            assert!((0.0..=1.0).contains(&spec.eta));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn axis_angle_round_trip(
            q in prop::array::uniform4(-1.0f64..1.0),
            phase in -PI..PI,
        ) {
            let norm = q.iter().map(|x| x * x).sum::<f64>().sqrt();
            prop_assume!(norm > 1e-3);
            let [a, b, cc, d] = q.map(|x| x / norm);
            let su2 = ComplexMatrix::from_row_slice(2, 2, &[
                c(a, -d), c(-cc, -b),
                c(cc, -b), c(a, d),
            ]);
            let u = su2 * c(0.0, phase).exp();
            let r = axis_angle(&u).unwrap();
            prop_assert!((0.0..=PI).contains(&r.gamma));
            prop_assert!((0.0..=PI).contains(&r.theta));
            prop_assert!((-PI..PI).contains(&r.phi));
            prop_assert!(phase_distance(&r.unitary(), &u) < 1e-10);
        }
    }
}
