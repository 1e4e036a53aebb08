//! Two-qubit states, spin observables and their statistics.
//!
//! Basis order is `HH, HV, VH, VV` (Alice first). `H` is the `+1` eigenstate
//! of `sigma_z`, `V` the `-1` eigenstate, so a measurement along the Bloch
//! vector `a` is the observable `a . sigma` with outcomes `+1` / `-1`.

use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::functionals::CorrelationMatrix;
use crate::{Error, Result};

/// Distance from unit norm tolerated by [`BlochVector::new`].
pub const NORM_TOL: f64 = 1e-9;
/// Tolerance for Hermiticity, trace and eigenvalue checks on density matrices.
pub const STATE_TOL: f64 = 1e-10;
/// Variances below this are treated as a deterministic marginal.
pub const VARIANCE_FLOOR: f64 = 1e-12;

pub type Matrix4c = Matrix4<Complex64>;
pub type Matrix2c = Matrix2<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// A unit vector on the Bloch (Poincaré) sphere naming a projective
/// `+1/-1` measurement.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct BlochVector {
    x: f64,
    y: f64,
    z: f64,
}

impl BlochVector {
    pub const X: BlochVector = BlochVector { x: 1.0, y: 0.0, z: 0.0 };
    pub const Y: BlochVector = BlochVector { x: 0.0, y: 1.0, z: 0.0 };
    pub const Z: BlochVector = BlochVector { x: 0.0, y: 0.0, z: 1.0 };

    /// Accepts vectors within [`NORM_TOL`] of unit norm and renormalizes
    /// them exactly. Anything farther off is rejected.
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        Self::with_tolerance([x, y, z], NORM_TOL)
    }

    pub fn with_tolerance(v: [f64; 3], tol: f64) -> Result<Self> {
        let norm = norm3(v);
        if !norm.is_finite() || (norm - 1.0).abs() > tol {
            return Err(Error::domain(format!(
                "Bloch vector ({}, {}, {}) has norm {norm}, expected 1 within {tol:e}",
                v[0], v[1], v[2]
            )));
        }
        Ok(Self::scaled(v, norm))
    }

    /// Normalizes an arbitrary nonzero direction.
    pub fn from_direction(v: [f64; 3]) -> Result<Self> {
        let norm = norm3(v);
        if !norm.is_finite() || norm < 1e-300 {
            return Err(Error::domain("cannot normalize a zero direction"));
        }
        Ok(Self::scaled(v, norm))
    }

    /// Polar angle `theta` from `+z`, azimuth `phi` from `+x`, in radians.
    pub fn from_spherical(theta: f64, phi: f64) -> Self {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        BlochVector {
            x: st * cp,
            y: st * sp,
            z: ct,
        }
    }

    fn scaled(v: [f64; 3], norm: f64) -> Self {
        BlochVector {
            x: v[0] / norm,
            y: v[1] / norm,
            z: v[2] / norm,
        }
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn dot(&self, other: &BlochVector) -> f64 {
        dot3(self.to_array(), other.to_array())
    }

    pub fn cross(&self, other: &BlochVector) -> [f64; 3] {
        cross3(self.to_array(), other.to_array())
    }

    pub fn neg(&self) -> BlochVector {
        BlochVector {
            x: -self.x,
            y: -self.y,
            z: -self.z,
        }
    }

    /// Applies a rotation matrix (row-major). The result is renormalized to
    /// absorb rounding.
    pub fn rotated(&self, r: &[[f64; 3]; 3]) -> BlochVector {
        let v = self.to_array();
        let w = [dot3(r[0], v), dot3(r[1], v), dot3(r[2], v)];
        Self::scaled(w, norm3(w))
    }

    /// Azimuth about `z`, in radians.
    pub fn azimuth(&self) -> f64 {
        self.y.atan2(self.x)
    }

    /// Polar angle from `+z`, in radians.
    pub fn polar(&self) -> f64 {
        self.z.clamp(-1.0, 1.0).acos()
    }

    /// The observable `a . sigma`.
    pub fn observable(&self) -> Matrix2c {
        let (x, y, z) = (self.x, self.y, self.z);
        Matrix2c::new(
            Complex64::new(z, 0.0),
            Complex64::new(x, -y),
            Complex64::new(x, y),
            Complex64::new(-z, 0.0),
        )
    }
}

impl TryFrom<[f64; 3]> for BlochVector {
    type Error = Error;

    fn try_from(v: [f64; 3]) -> Result<Self> {
        BlochVector::with_tolerance(v, NORM_TOL)
    }
}

impl From<BlochVector> for [f64; 3] {
    fn from(v: BlochVector) -> Self {
        v.to_array()
    }
}

pub(crate) fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn norm3(a: [f64; 3]) -> f64 {
    dot3(a, a).sqrt()
}

pub fn pauli() -> [Matrix2c; 3] {
    [
        Matrix2c::new(ZERO, ONE, ONE, ZERO),
        Matrix2c::new(ZERO, -I, I, ZERO),
        Matrix2c::new(ONE, ZERO, ZERO, -ONE),
    ]
}

pub fn kron(a: &Matrix2c, b: &Matrix2c) -> Matrix4c {
    Matrix4c::from_fn(|r, c| a[(r / 2, c / 2)] * b[(r % 2, c % 2)])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Party {
    Alice,
    Bob,
}

/// A validated two-qubit density matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoQubitState {
    rho: Matrix4c,
}

impl TwoQubitState {
    /// Validates Hermiticity, unit trace and positivity. Eigenvalues in
    /// `[-STATE_TOL, 0)` are clipped to zero and the matrix rebuilt.
    pub fn from_density(rho: Matrix4c) -> Result<Self> {
        if rho.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidState("non-finite entry".into()));
        }
        let herm_err = (rho - rho.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm_err > STATE_TOL {
            return Err(Error::InvalidState(format!(
                "not Hermitian (max deviation {herm_err:e})"
            )));
        }
        let tr = rho.trace();
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        let rho = (rho + rho.adjoint()) * Complex64::new(0.5, 0.0);
        let eig = rho.symmetric_eigen();
        let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        if min < -STATE_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        if min >= 0.0 {
            return Ok(TwoQubitState { rho });
        }
        let clipped = eig.eigenvalues.map(|l| Complex64::new(l.max(0.0), 0.0));
        let v = &eig.eigenvectors;
        let mut rebuilt = v * Matrix4c::from_diagonal(&clipped) * v.adjoint();
        rebuilt = (rebuilt + rebuilt.adjoint()) * Complex64::new(0.5, 0.0);
        let tr = rebuilt.trace().re;
        Ok(TwoQubitState {
            rho: rebuilt / Complex64::new(tr, 0.0),
        })
    }

    /// `|psi><psi|` for a nonzero amplitude vector (normalized here).
    pub fn from_pure(psi: [Complex64; 4]) -> Result<Self> {
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !norm.is_finite() || norm < 1e-300 {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        let psi = psi.map(|z| z / norm);
        let rho = Matrix4c::from_fn(|r, c| psi[r] * psi[c].conj());
        Self::from_density(rho)
    }

    /// `(|HV> - |VH>) / sqrt(2)`.
    pub fn singlet() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let psi = [ZERO, Complex64::new(h, 0.0), Complex64::new(-h, 0.0), ZERO];
        let rho = Matrix4c::from_fn(|r, c| psi[r] * psi[c].conj());
        TwoQubitState { rho }
    }

    pub fn maximally_mixed() -> Self {
        TwoQubitState {
            rho: Matrix4c::identity() * Complex64::new(0.25, 0.0),
        }
    }

    /// `p |singlet><singlet| + (1 - p) I/4`.
    pub fn werner(p: f64) -> Result<Self> {
        Self::singlet().depolarized(p)
    }

    /// Mixes the state with white noise, keeping weight `p` on `self`.
    pub fn depolarized(&self, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::domain(format!("visibility {p} outside [0, 1]")));
        }
        let mixed = Matrix4c::identity() * Complex64::new((1.0 - p) / 4.0, 0.0);
        Ok(TwoQubitState {
            rho: self.rho * Complex64::new(p, 0.0) + mixed,
        })
    }

    /// Product of two pure single-qubit states pointing along `a` and `b`.
    pub fn product(a: &BlochVector, b: &BlochVector) -> Self {
        let half = Matrix2c::identity() * Complex64::new(0.5, 0.0);
        let ra = half + a.observable() * Complex64::new(0.5, 0.0);
        let rb = half + b.observable() * Complex64::new(0.5, 0.0);
        TwoQubitState { rho: kron(&ra, &rb) }
    }

    pub fn density(&self) -> &Matrix4c {
        &self.rho
    }

    pub fn purity(&self) -> f64 {
        (self.rho * self.rho).trace().re
    }

    /// `tr(rho O)` for a 4x4 operator.
    pub fn expectation(&self, op: &Matrix4c) -> Complex64 {
        (self.rho * op).trace()
    }

    /// Single-party reduced density matrix.
    pub fn reduced(&self, party: Party) -> Matrix2c {
        Matrix2c::from_fn(|i, k| {
            (0..2)
                .map(|j| match party {
                    Party::Alice => self.rho[(2 * i + j, 2 * k + j)],
                    Party::Bob => self.rho[(2 * j + i, 2 * j + k)],
                })
                .sum()
        })
    }

    /// Bloch vector of one party's reduced state.
    pub fn local_bloch(&self, party: Party) -> [f64; 3] {
        let r = self.reduced(party);
        let p = pauli();
        [0, 1, 2].map(|k| (r * p[k]).trace().re)
    }

    /// `T[k][l] = tr(rho sigma_k (x) sigma_l)`; every correlator equals
    /// `a^T T b`.
    pub fn correlation_tensor(&self) -> [[f64; 3]; 3] {
        let p = pauli();
        let mut t = [[0.0; 3]; 3];
        for (k, row) in t.iter_mut().enumerate() {
            for (l, entry) in row.iter_mut().enumerate() {
                *entry = self.expectation(&kron(&p[k], &p[l])).re;
            }
        }
        t
    }

    /// `tr(rho (a . sigma) (x) (b . sigma))`, clamped to `[-1, 1]`.
    pub fn correlator(&self, a: &BlochVector, b: &BlochVector) -> f64 {
        let op = kron(&a.observable(), &b.observable());
        self.expectation(&op).re.clamp(-1.0, 1.0)
    }

    pub fn mean(&self, party: Party, v: &BlochVector) -> f64 {
        dot3(self.local_bloch(party), v.to_array()).clamp(-1.0, 1.0)
    }

    /// Means, variances and the local correlation `eta` of two observables
    /// of the same party.
    pub fn local_stats(&self, a0: &BlochVector, a1: &BlochVector, party: Party) -> Result<LocalStats> {
        let r = self.local_bloch(party);
        let mean_a0 = dot3(r, a0.to_array()).clamp(-1.0, 1.0);
        let mean_a1 = dot3(r, a1.to_array()).clamp(-1.0, 1.0);
        let var_a0 = (1.0 - mean_a0 * mean_a0).max(0.0);
        let var_a1 = (1.0 - mean_a1 * mean_a1).max(0.0);
        for (label, var) in [("0", var_a0), ("1", var_a1)] {
            if var < VARIANCE_FLOOR {
                return Err(Error::Degenerate(format!(
                    "{party:?} setting {label} has a deterministic outcome (variance {var:e})"
                )));
            }
        }
        // (a0.s)(a1.s) = (a0.a1) I + i (a0 x a1).s
        let d = a0.dot(a1);
        let commutator = dot3(a0.cross(a1), r);
        let second = Complex64::new(d, commutator);
        let eta = (second - mean_a0 * mean_a1) / (var_a0 * var_a1).sqrt();
        Ok(LocalStats {
            mean_a0,
            mean_a1,
            var_a0,
            var_a1,
            d,
            eta,
        })
    }

    /// Pearson correlations `rho_ij` between Alice's setting `i` and Bob's
    /// setting `j`.
    pub fn pearson_matrix(&self, alice: &[BlochVector], bob: &[BlochVector]) -> Result<CorrelationMatrix> {
        if alice.len() != bob.len() || alice.is_empty() {
            return Err(Error::domain("Alice and Bob need the same nonzero number of settings"));
        }
        let spread = |party: Party, settings: &[BlochVector]| -> Result<Vec<(f64, f64)>> {
            settings
                .iter()
                .enumerate()
                .map(|(k, v)| {
                    let m = self.mean(party, v);
                    let var = 1.0 - m * m;
                    if var < VARIANCE_FLOOR {
                        Err(Error::Degenerate(format!(
                            "{party:?} setting {} ({:.6}, {:.6}, {:.6}) has zero variance",
                            k + 1,
                            v.x,
                            v.y,
                            v.z
                        )))
                    } else {
                        Ok((m, var.sqrt()))
                    }
                })
                .collect()
        };
        let sa = spread(Party::Alice, alice)?;
        let sb = spread(Party::Bob, bob)?;
        let n = alice.len();
        CorrelationMatrix::from_fn(n, |i, j| {
            let c = self.correlator(&alice[i], &bob[j]);
            ((c - sa[i].0 * sb[j].0) / (sa[i].1 * sb[j].1)).clamp(-1.0, 1.0)
        })
    }

    /// `<psi|rho|psi>` for a pure target `|psi><psi|`.
    pub fn fidelity(&self, target: &TwoQubitState) -> Result<f64> {
        let purity = target.purity();
        if (purity - 1.0).abs() > 1e-9 {
            return Err(Error::Unsupported(format!(
                "fidelity needs a pure target (purity {purity})"
            )));
        }
        Ok((self.rho * target.rho).trace().re.clamp(0.0, 1.0))
    }
}

/// Single-party statistics of two `+1/-1` observables.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LocalStats {
    pub mean_a0: f64,
    pub mean_a1: f64,
    pub var_a0: f64,
    pub var_a1: f64,
    /// `<{A0, A1}>/2`.
    pub d: f64,
    /// `(<A0 A1> - <A0><A1>) / (sigma0 sigma1)`; the imaginary part comes from
    /// the commutator.
    #[serde(serialize_with = "ser_complex")]
    pub eta: Complex64,
}

pub(crate) fn ser_complex<S: serde::Serializer>(z: &Complex64, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeTuple;
    let mut t = s.serialize_tuple(2)?;
    t.serialize_element(&z.re)?;
    t.serialize_element(&z.im)?;
    t.end()
}

/// Rotation by `angle` about a unit `axis` (Rodrigues).
pub fn rotation_matrix(axis: &BlochVector, angle: f64) -> [[f64; 3]; 3] {
    let [x, y, z] = axis.to_array();
    let (s, c) = angle.sin_cos();
    let t = 1.0 - c;
    [
        [t * x * x + c, t * x * y - s * z, t * x * z + s * y],
        [t * x * y + s * z, t * y * y + c, t * y * z - s * x],
        [t * x * z - s * y, t * y * z + s * x, t * z * z + c],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_unit(rng: &mut impl Rng) -> BlochVector {
        let v: [f64; 3] = [
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        ];
        BlochVector::from_direction(v).unwrap()
    }

    #[test]
    fn singlet_entries() {
        let s = TwoQubitState::singlet();
        let rho = s.density();
        for r in 0..4 {
            for c in 0..4 {
                let expected = match (r, c) {
                    (1, 1) | (2, 2) => 0.5,
                    (1, 2) | (2, 1) => -0.5,
                    _ => 0.0,
                };
                assert_abs_diff_eq!(rho[(r, c)].re, expected, epsilon = 1e-15);
                assert_abs_diff_eq!(rho[(r, c)].im, 0.0, epsilon = 1e-15);
            }
        }
        assert_abs_diff_eq!(s.purity(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s.fidelity(&s).unwrap(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn singlet_correlator_is_minus_dot() {
        let s = TwoQubitState::singlet();
        assert_abs_diff_eq!(s.correlator(&BlochVector::Z, &BlochVector::Z), -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.correlator(&BlochVector::Z, &BlochVector::X), 0.0, epsilon = 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let a = random_unit(&mut rng);
            let b = random_unit(&mut rng);
            assert_abs_diff_eq!(s.correlator(&a, &b), -a.dot(&b), epsilon = 1e-12);
        }
    }

    #[test]
    fn werner_edges() {
        assert_eq!(TwoQubitState::werner(1.0).unwrap(), TwoQubitState::singlet());
        let mixed = TwoQubitState::werner(0.0).unwrap();
        assert_abs_diff_eq!(mixed.correlator(&BlochVector::X, &BlochVector::X), 0.0, epsilon = 1e-15);
        assert!(matches!(TwoQubitState::werner(1.2), Err(Error::Domain(_))));
        assert!(matches!(TwoQubitState::werner(-0.1), Err(Error::Domain(_))));
        let w = TwoQubitState::werner(0.97).unwrap();
        assert_abs_diff_eq!(w.correlator(&BlochVector::Z, &BlochVector::Z), -0.97, epsilon = 1e-12);
    }

    #[test]
    fn werner_fidelity_matches_source() {
        // F = (1 + 3p)/4
        let w = TwoQubitState::werner(0.9693).unwrap();
        let f = w.fidelity(&TwoQubitState::singlet()).unwrap();
        assert_abs_diff_eq!(f, (1.0 + 3.0 * 0.9693) / 4.0, epsilon = 1e-12);
        assert!((f - 0.977).abs() < 1e-3);
        let mixed = TwoQubitState::maximally_mixed();
        assert_abs_diff_eq!(
            mixed.fidelity(&TwoQubitState::singlet()).unwrap(),
            0.25,
            epsilon = 1e-15
        );
        assert!(matches!(
            TwoQubitState::singlet().fidelity(&mixed),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn bloch_vector_validation() {
        assert!(BlochVector::new(1.0, 0.0, 1e-10).is_ok());
        assert!(matches!(BlochVector::new(1.0, 0.0, 1e-3), Err(Error::Domain(_))));
        assert!(BlochVector::from_direction([0.0; 3]).is_err());
        let v = BlochVector::new(0.6, 0.8, 0.0).unwrap();
        assert_abs_diff_eq!(norm3(v.to_array()), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn density_validation() {
        let mut bad = *TwoQubitState::singlet().density();
        bad[(0, 1)] = Complex64::new(0.1, 0.0);
        assert!(matches!(TwoQubitState::from_density(bad), Err(Error::InvalidState(_))));
        let mut neg = Matrix4c::zeros();
        neg[(0, 0)] = Complex64::new(1.5, 0.0);
        neg[(1, 1)] = Complex64::new(-0.5, 0.0);
        assert!(matches!(TwoQubitState::from_density(neg), Err(Error::InvalidState(_))));
        // a tiny negative eigenvalue is clipped
        let mut tiny = Matrix4c::zeros();
        tiny[(0, 0)] = Complex64::new(1.0 + 5e-11, 0.0);
        tiny[(3, 3)] = Complex64::new(-5e-11, 0.0);
        let s = TwoQubitState::from_density(tiny).unwrap();
        assert!(s.density()[(3, 3)].re >= 0.0);
        assert_abs_diff_eq!(s.density().trace().re, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn local_stats_eta() {
        let s = TwoQubitState::singlet();
        let st = s.local_stats(&BlochVector::Z, &BlochVector::Z, Party::Alice).unwrap();
        assert_abs_diff_eq!(st.eta.re, 1.0, epsilon = 1e-15);
        let st = s.local_stats(&BlochVector::Z, &BlochVector::X, Party::Bob).unwrap();
        assert_abs_diff_eq!(st.eta.re, 0.0, epsilon = 1e-15);
        let a1 = BlochVector::new(0.7, (1.0f64 - 0.49).sqrt(), 0.0).unwrap();
        let st = s.local_stats(&BlochVector::X, &a1, Party::Alice).unwrap();
        assert_abs_diff_eq!(st.eta.re, 0.7, epsilon = 1e-12);
        assert_abs_diff_eq!(st.eta.im, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(st.d, 0.7, epsilon = 1e-12);
    }

    #[test]
    fn local_stats_matches_direct_traces() {
        // Brute-force <A0 A1> from the reduced matrix, including the
        // commutator part, on a random biased pure state.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let psi: [Complex64; 4] =
                std::array::from_fn(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
            let s = TwoQubitState::from_pure(psi).unwrap();
            let a0 = random_unit(&mut rng);
            let a1 = random_unit(&mut rng);
            for party in [Party::Alice, Party::Bob] {
                let red = s.reduced(party);
                let m0 = (red * a0.observable()).trace().re;
                let m1 = (red * a1.observable()).trace().re;
                let second = (red * a0.observable() * a1.observable()).trace();
                let expected = (second - m0 * m1) / ((1.0 - m0 * m0) * (1.0 - m1 * m1)).sqrt();
                let st = s.local_stats(&a0, &a1, party).unwrap();
                assert_abs_diff_eq!(st.eta.re, expected.re, epsilon = 1e-10);
                assert_abs_diff_eq!(st.eta.im, expected.im, epsilon = 1e-10);
                assert!(st.eta.norm() <= 1.0 + 1e-9);
            }
        }
    }

    #[test]
    fn degenerate_marginal() {
        let h = TwoQubitState::product(&BlochVector::Z, &BlochVector::Z);
        assert!(matches!(
            h.local_stats(&BlochVector::Z, &BlochVector::X, Party::Alice),
            Err(Error::Degenerate(_))
        ));
        let err = h.pearson_matrix(&[BlochVector::Z], &[BlochVector::Z]).unwrap_err();
        assert!(matches!(err, Error::Degenerate(ref m) if m.contains("setting 1")));
    }

    #[test]
    fn pearson_for_unbiased_marginals() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let alice: Vec<_> = (0..3).map(|_| random_unit(&mut rng)).collect();
        let bob: Vec<_> = (0..3).map(|_| random_unit(&mut rng)).collect();
        let s = TwoQubitState::singlet();
        let rho = s.pearson_matrix(&alice, &bob).unwrap();
        let w = TwoQubitState::werner(0.5).unwrap();
        let rho_w = w.pearson_matrix(&alice, &bob).unwrap();
        for (i, a) in alice.iter().enumerate() {
            for (j, b) in bob.iter().enumerate() {
                assert_abs_diff_eq!(rho.get(i, j), s.correlator(a, b), epsilon = 1e-10);
                assert_abs_diff_eq!(rho_w.get(i, j), -0.5 * a.dot(b), epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn correlation_tensor_reproduces_correlator() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let psi: [Complex64; 4] =
            std::array::from_fn(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
        let s = TwoQubitState::from_pure(psi).unwrap();
        let t = s.correlation_tensor();
        for _ in 0..20 {
            let a = random_unit(&mut rng);
            let b = random_unit(&mut rng);
            let tb = [
                dot3(t[0], b.to_array()),
                dot3(t[1], b.to_array()),
                dot3(t[2], b.to_array()),
            ];
            assert_abs_diff_eq!(s.correlator(&a, &b), dot3(a.to_array(), tb), epsilon = 1e-12);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn unit() -> impl Strategy<Value = BlochVector> {
            (0.0..std::f64::consts::PI, 0.0..std::f64::consts::TAU).prop_map(|(t, p)| BlochVector::from_spherical(t, p))
        }

        proptest! {
            #[test]
            fn correlator_bounded(a in unit(), b in unit(), p in 0.0..=1.0f64) {
                let w = TwoQubitState::werner(p).unwrap();
                prop_assert!(w.correlator(&a, &b).abs() <= 1.0);
            }

            #[test]
            fn correlator_linear_in_visibility(a in unit(), b in unit(), p in 0.0..=1.0f64) {
                let w = TwoQubitState::werner(p).unwrap();
                let s = TwoQubitState::singlet();
                prop_assert!((w.correlator(&a, &b) - p * s.correlator(&a, &b)).abs() < 1e-12);
            }

            #[test]
            fn singlet_rotation_invariant(a in unit(), b in unit(), axis in unit(), angle in 0.0..std::f64::consts::TAU) {
                let r = rotation_matrix(&axis, angle);
                let s = TwoQubitState::singlet();
                let rotated = s.correlator(&a.rotated(&r), &b.rotated(&r));
                prop_assert!((rotated - s.correlator(&a, &b)).abs() < 1e-10);
            }

            #[test]
            fn eta_within_schrodinger_bound(
                amps in proptest::array::uniform8(-1.0..1.0f64),
                a0 in unit(),
                a1 in unit(),
            ) {
                let psi: [Complex64; 4] = std::array::from_fn(|k| Complex64::new(amps[2 * k], amps[2 * k + 1]));
                prop_assume!(psi.iter().map(|z| z.norm_sqr()).sum::<f64>() > 1e-3);
                let s = TwoQubitState::from_pure(psi).unwrap();
                if let Ok(st) = s.local_stats(&a0, &a1, Party::Alice) {
                    prop_assert!(st.eta.norm() <= 1.0 + 1e-9);
                    prop_assert!(st.var_a0 >= 0.0 && st.var_a1 >= 0.0);
                }
            }
        }
    }
}
