//! Dense complex operators and state vectors.

use std::ops::{Index, IndexMut};

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::C64;
use crate::{Error, Result};

const STRUCTURE_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct DenseOperator {
    m: DMatrix<C64>,
}

impl DenseOperator {
    pub fn zeros(dim: usize) -> Self {
        Self {
            m: DMatrix::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            m: DMatrix::identity(dim, dim),
        }
    }

    pub fn from_matrix(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch(m.nrows(), m.ncols()));
        }
        if m.nrows() == 0 {
            return Err(Error::DimensionMismatch(0, 1));
        }
        Ok(Self { m })
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        Self {
            m: DMatrix::from_diagonal(&DVector::from_column_slice(diag)),
        }
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn max_abs(&self) -> f64 {
        self.m.iter().fold(0.0, |a, z| a.max(z.norm()))
    }

    pub fn dagger(&self) -> Self {
        Self { m: self.m.adjoint() }
    }

    pub fn scaled(&self, s: C64) -> Self {
        Self { m: &self.m * s }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_dim(other)?;
        Ok(Self { m: &self.m + &other.m })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_dim(other)?;
        Ok(Self { m: &self.m - &other.m })
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.same_dim(other)?;
        Ok(Self { m: &self.m * &other.m })
    }

    pub fn is_zero(&self) -> bool {
        self.m.iter().all(|z| *z == C64::new(0.0, 0.0))
    }

    fn same_dim(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch(self.dim(), other.dim()));
        }
        Ok(())
    }

    /// `max|A - A^dag|`.
    pub fn hermitian_defect(&self) -> f64 {
        let d = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in i..d {
                worst = worst.max((self.m[(i, j)] - self.m[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// `max|A + A^dag|`.
    pub fn skew_defect(&self) -> f64 {
        let d = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in i..d {
                worst = worst.max((self.m[(i, j)] + self.m[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian_defect() <= STRUCTURE_TOL * self.max_abs()
    }

    pub fn is_skew_hermitian(&self) -> bool {
        self.skew_defect() <= STRUCTURE_TOL * self.max_abs()
    }

    pub fn check_hermitian(&self) -> Result<()> {
        if self.is_hermitian() {
            Ok(())
        } else {
            Err(Error::NotHermitian(self.hermitian_defect()))
        }
    }

    pub fn check_skew_hermitian(&self) -> Result<()> {
        if self.is_skew_hermitian() {
            Ok(())
        } else {
            Err(Error::NotSkewHermitian(self.skew_defect()))
        }
    }

    /// `max|U^dag U - I|`.
    pub fn unitarity_defect(&self) -> f64 {
        let p = self.m.adjoint() * &self.m;
        let d = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((p[(i, j)] - target).norm());
            }
        }
        worst
    }

    pub fn check_unitary(&self, tol: f64) -> Result<()> {
        let e = self.unitarity_defect();
        if e <= tol {
            Ok(())
        } else {
            Err(Error::NotUnitary(e))
        }
    }

    /// Matrix is diagonal up to exact zeros.
    pub fn diagonal(&self) -> Option<Vec<C64>> {
        let d = self.dim();
        for i in 0..d {
            for j in 0..d {
                if i != j && self.m[(i, j)] != C64::new(0.0, 0.0) {
                    return None;
                }
            }
        }
        Some((0..d).map(|i| self.m[(i, i)]).collect())
    }

    pub fn apply(&self, v: &StateVector) -> Result<StateVector> {
        if self.dim() != v.dim() {
            return Err(Error::DimensionMismatch(self.dim(), v.dim()));
        }
        let out = &self.m * DVector::from_column_slice(v.amplitudes());
        Ok(StateVector::from_vec_unchecked(out.as_slice().to_vec()))
    }

    pub fn trace(&self) -> C64 {
        self.m.trace()
    }
}

impl Index<(usize, usize)> for DenseOperator {
    type Output = C64;

    fn index(&self, idx: (usize, usize)) -> &C64 {
        &self.m[idx]
    }
}

impl IndexMut<(usize, usize)> for DenseOperator {
    fn index_mut(&mut self, idx: (usize, usize)) -> &mut C64 {
        &mut self.m[idx]
    }
}

impl Serialize for DenseOperator {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> = (0..self.dim())
            .map(|i| (0..self.dim()).map(|j| [self.m[(i, j)].re, self.m[(i, j)].im]).collect())
            .collect();
        rows.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for DenseOperator {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let rows = Vec::<Vec<[f64; 2]>>::deserialize(deserializer)?;
        let d = rows.len();
        if d == 0 || rows.iter().any(|r| r.len() != d) {
            return Err(D::Error::custom("operator matrix must be square and nonempty"));
        }
        let m = DMatrix::from_fn(d, d, |i, j| C64::new(rows[i][j][0], rows[i][j][1]));
        Ok(Self { m })
    }
}

/// `AB - BA`.
pub fn commutator(a: &DenseOperator, b: &DenseOperator) -> Result<DenseOperator> {
    a.same_dim(b)?;
    Ok(DenseOperator {
        m: &a.m * &b.m - &b.m * &a.m,
    })
}

/// `Tr(A^dag B)`, required to be real.
pub fn hs_inner(a: &DenseOperator, b: &DenseOperator) -> Result<f64> {
    a.same_dim(b)?;
    let z: C64 = a.m.iter().zip(b.m.iter()).map(|(x, y)| x.conj() * y).sum();
    if z.im.abs() > 1e-10 * z.norm().max(1.0) {
        return Err(Error::NonReal(z.im));
    }
    Ok(z.re)
}

pub fn hs_norm(a: &DenseOperator) -> f64 {
    a.m.iter().fold(0.0, |s, z| s + z.norm_sqr()).sqrt()
}

/// Eigenvalues in descending order with the matching eigenvector columns.
pub fn hermitian_eig(a: &DenseOperator) -> Result<(Vec<f64>, DMatrix<C64>)> {
    a.check_hermitian()?;
    let eig = SymmetricEigen::new(a.m.clone());
    let mut order: Vec<usize> = (0..a.dim()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(a.dim(), a.dim(), |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

/// Descending eigenvalues of a real symmetric matrix.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// Descending eigenpairs of a real symmetric matrix.
pub fn symmetric_eig(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m.clone());
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Thin SVD `A = U diag(σ) Vᵀ` by one-sided Jacobi rotations, descending `σ`.
///
/// Used where singular vectors of rank-deficient matrices with repeated
/// columns are needed; nalgebra's bidiagonal SVD can lose accuracy there.
/// Columns of `U` belonging to zero singular values are zero.
pub fn jacobi_svd(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>, DMatrix<f64>) {
    let cols = a.ncols();
    let mut w = a.clone();
    let mut v = DMatrix::<f64>::identity(cols, cols);
    for _sweep in 0..100 {
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let alpha = w.column(p).norm_squared();
                let beta = w.column(q).norm_squared();
                let gamma = w.column(p).dot(&w.column(q));
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for m in [&mut w, &mut v] {
                    for r in 0..m.nrows() {
                        let (x, y) = (m[(r, p)], m[(r, q)]);
                        m[(r, p)] = c * x - s * y;
                        m[(r, q)] = s * x + c * y;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let sigma: Vec<f64> = (0..cols).map(|j| w.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&i, &j| sigma[j].total_cmp(&sigma[i]));
    let u = DMatrix::from_fn(a.nrows(), cols, |r, c| {
        let j = order[c];
        if sigma[j] > 0.0 {
            w[(r, j)] / sigma[j]
        } else {
            0.0
        }
    });
    let vs = DMatrix::from_fn(cols, cols, |r, c| v[(r, order[c])]);
    (order.iter().map(|&j| sigma[j]).collect(), u, vs)
}

/// `exp(tX)` for skew-Hermitian `X`, through the eigendecomposition of `iX`.
pub fn expm_skew(x: &DenseOperator, t: f64) -> Result<DenseOperator> {
    x.check_skew_hermitian()?;
    let h = x.scaled(C64::new(0.0, 1.0));
    let (lambda, v) = hermitian_eig_unchecked(&h);
    // X = -i H, exp(tX) = V diag(e^{-i t λ}) V^dag
    let mut vd = v.clone();
    for (c, l) in lambda.iter().enumerate() {
        let p = C64::from_polar(1.0, -t * l);
        for r in 0..vd.nrows() {
            vd[(r, c)] *= p;
        }
    }
    Ok(DenseOperator { m: vd * v.adjoint() })
}

fn hermitian_eig_unchecked(h: &DenseOperator) -> (Vec<f64>, DMatrix<C64>) {
    // symmetrize away the last bits of roundoff before the solver sees it
    let m = (&h.m + h.m.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(m);
    (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
}

/// Largest singular value.
pub fn op_norm(a: &DenseOperator) -> f64 {
    if a.is_zero() {
        return 0.0;
    }
    let svd = SVD::new(a.m.clone(), false, false);
    svd.singular_values.iter().fold(0.0, |m, s| m.max(*s))
}

/// A pure state; evolution routines keep it normalized.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amps: Vec<C64>,
}

impl StateVector {
    /// `|0...0>` on `n` qubits.
    pub fn zero_state(n_qubits: usize) -> Self {
        Self::basis(1 << n_qubits, 0)
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        amps[index] = C64::new(1.0, 0.0);
        Self { amps }
    }

    pub fn new(amps: Vec<C64>) -> Result<Self> {
        if amps.is_empty() || !amps.len().is_power_of_two() {
            return Err(Error::DimensionMismatch(amps.len(), amps.len().next_power_of_two().max(2)));
        }
        Ok(Self { amps })
    }

    pub(crate) fn from_vec_unchecked(amps: Vec<C64>) -> Self {
        Self { amps }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn n_qubits(&self) -> usize {
        self.amps.len().trailing_zeros() as usize
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> C64 {
        inner(&self.amps, &other.amps)
    }

    pub fn scaled(&self, s: C64) -> StateVector {
        Self {
            amps: self.amps.iter().map(|a| a * s).collect(),
        }
    }

    pub fn distance(&self, other: &StateVector) -> f64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

/// `<a|b>` of raw amplitude slices.
#[inline]
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

impl Serialize for StateVector {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let v: Vec<[f64; 2]> = self.amps.iter().map(|a| [a.re, a.im]).collect();
        v.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for StateVector {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let v = Vec::<[f64; 2]>::deserialize(deserializer)?;
        StateVector::new(v.into_iter().map(|[re, im]| C64::new(re, im)).collect()).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{PauliString, PauliSum};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, SQRT_2};

    fn pauli(label: &str) -> DenseOperator {
        PauliString::from_label(label).unwrap().dense()
    }

    fn close(a: &DenseOperator, b: &DenseOperator, tol: f64) -> bool {
        a.sub(b).unwrap().max_abs() <= tol
    }

    #[test]
    fn su2_commutator() {
        let c = commutator(&pauli("X"), &pauli("Y")).unwrap();
        assert!(close(&c, &pauli("Z").scaled(C64::new(0.0, 2.0)), 1e-15));
    }

    #[test]
    fn two_qubit_commutator_matches_pauli_products() {
        let c = commutator(&pauli("XX"), &pauli("ZI")).unwrap();
        assert!(close(&c, &pauli("YX").scaled(C64::new(0.0, -2.0)), 1e-15));
        let a = pauli("XX");
        assert!(commutator(&a, &a).unwrap().is_zero());
        assert!(commutator(&a, &pauli("X")).is_err());
    }

    #[test]
    fn hs_inner_of_paulis() {
        assert_eq!(hs_inner(&pauli("XYZ"), &pauli("XYZ")).unwrap(), 8.0);
        assert_eq!(hs_inner(&pauli("X"), &pauli("Z")).unwrap(), 0.0);
        assert_eq!(hs_inner(&DenseOperator::zeros(2), &pauli("Z")).unwrap(), 0.0);
        let ix = pauli("X").scaled(C64::new(0.0, 1.0));
        assert!(matches!(hs_inner(&ix, &pauli("X")), Err(Error::NonReal(_))));
    }

    #[test]
    fn eig_examples() {
        let (l, _) = hermitian_eig(&pauli("Z")).unwrap();
        assert_eq!(l, vec![1.0, -1.0]);
        let (l, _) = hermitian_eig(&DenseOperator::identity(4)).unwrap();
        assert_eq!(l, vec![1.0; 4]);
        let h: PauliSum = "XX + ZI".parse().unwrap();
        let (l, v) = hermitian_eig(&h.dense()).unwrap();
        let want = [SQRT_2, SQRT_2, -SQRT_2, -SQRT_2];
        for (a, b) in l.iter().zip(want) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
        let d = DMatrix::from_diagonal(&DVector::from_iterator(4, l.iter().map(|x| C64::new(*x, 0.0))));
        let rec = &v * d * v.adjoint();
        assert!((rec - h.dense().matrix()).norm() <= 1e-12);
        assert!(hermitian_eig(&pauli("X").scaled(C64::new(0.0, 1.0))).is_err());
    }

    #[test]
    fn expm_examples() {
        let minus_i_x = pauli("X").scaled(C64::new(0.0, -1.0));
        let u = expm_skew(&minus_i_x, FRAC_PI_2).unwrap();
        let psi = u.apply(&StateVector::zero_state(1)).unwrap();
        assert_abs_diff_eq!(psi.amplitudes()[0].norm(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(psi.amplitudes()[1].im, -1.0, epsilon = 1e-14);

        let e = expm_skew(&DenseOperator::zeros(4), 1.0).unwrap();
        assert!(close(&e, &DenseOperator::identity(4), 1e-15));

        let minus_i_zz = pauli("ZZ").scaled(C64::new(0.0, -1.0));
        let psi = expm_skew(&minus_i_zz, FRAC_PI_3).unwrap().apply(&StateVector::zero_state(2)).unwrap();
        let want = C64::from_polar(1.0, -FRAC_PI_3);
        assert_abs_diff_eq!((psi.amplitudes()[0] - want).norm(), 0.0, epsilon = 1e-12);

        assert!(expm_skew(&pauli("X"), 1.0).is_err());
    }

    #[test]
    fn jacobi_svd_repeated_columns() {
        let a = DMatrix::from_row_slice(
            4,
            5,
            &[
                -0.6430, 0.2533, 0.2533, -0.0977, -0.3856, 0.1730, 0.4874, 0.4874, 0.6586, 0.6387, 0.3856, 0.7641,
                0.7641, -0.5900, 0.6430, -0.6387, 0.3384, 0.3384, 0.4567, -0.1730,
            ],
        );
        let (s, u, v) = jacobi_svd(&a);
        assert!(s.windows(2).all(|w| w[0] >= w[1]));
        let back = &u * DMatrix::from_diagonal(&DVector::from_vec(s.clone())) * v.transpose();
        assert!((back - &a).abs().max() < 1e-13);
        assert!((v.transpose() * &v - DMatrix::<f64>::identity(5, 5)).abs().max() < 1e-13);
        assert!(s[4] < 1e-13);
    }

    #[test]
    fn op_norm_examples() {
        assert_abs_diff_eq!(op_norm(&pauli("XZ")), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(op_norm(&DenseOperator::identity(4).scaled(C64::new(3.0, 0.0))), 3.0, epsilon = 1e-12);
        let xz = pauli("X").add(&pauli("Z")).unwrap();
        assert_abs_diff_eq!(op_norm(&xz), SQRT_2, epsilon = 1e-12);
    }

    #[test]
    fn json_round_trip() {
        let op = pauli("XY");
        let back: DenseOperator = serde_json::from_str(&serde_json::to_string(&op).unwrap()).unwrap();
        assert_eq!(back, op);
        let s = StateVector::zero_state(2);
        let back: StateVector = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
        assert!(serde_json::from_str::<StateVector>("[[1,0],[0,0],[0,0]]").is_err());
    }
}
