//! Dense complex linear algebra kernel.
//!
//! [`CMat`] is a row-major dense complex matrix. Spectral routines are backed
//! by `nalgebra`'s Hermitian eigensolver and SVD; everything else (Kronecker
//! products, Hilbert-Schmidt geometry, PSD projection, matrix powers) lives
//! here so that the rest of the crate never touches `nalgebra` types.

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Relative tolerance for accepting a matrix as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Singular values below this fraction of the largest are reported as zero.
pub const SVD_ZERO_CUTOFF: f64 = 1e-12;

/// Dense complex matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct CMat {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMat {
    /// Builds a matrix from row-major entries, rejecting non-finite values.
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidInput("matrix dimensions must be positive".into()));
        }
        if data.len() != rows * cols {
            return Err(Error::dims(rows * cols, data.len()));
        }
        if let Some(pos) = data.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite entry at ({}, {})",
                pos / cols,
                pos % cols
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_diag(diag: &[C64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &z) in diag.iter().enumerate() {
            m[(i, i)] = z;
        }
        m
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let d: Vec<C64> = diag.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::from_diag(&d)
    }

    /// Builds a matrix from a slice of equally long rows.
    ///
    /// Panics on ragged input; intended for literals and tests.
    pub fn from_rows(rows: &[Vec<C64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self {
            rows: r,
            cols: c,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Self {
        let rows: Vec<Vec<C64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| C64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    /// Column vector with the given entries.
    pub fn column_vector(v: &[C64]) -> Self {
        Self {
            rows: v.len(),
            cols: 1,
            data: v.to_vec(),
        }
    }

    /// Rank-one matrix |u⟩⟨v|.
    pub fn outer(u: &[C64], v: &[C64]) -> Self {
        Self::from_fn(u.len(), v.len(), |i, j| u[i] * v[j].conj())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: C64) -> Self {
        self.map(|z| z * s)
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.map(|z| z * s)
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|z| *z == ZERO)
    }

    /// ‖A − A†‖_F.
    pub fn asymmetry(&self) -> f64 {
        assert!(self.is_square());
        let n = self.rows;
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += (self[(i, j)] - self[(j, i)].conj()).norm_sqr();
            }
        }
        s.sqrt()
    }

    /// True when ‖A − A†‖_F ≤ tol · max(1, ‖A‖_F).
    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.is_square() && self.asymmetry() <= tol * self.frobenius_norm().max(1.0)
    }

    /// (A + A†) / 2.
    pub fn hermitian_part(&self) -> Self {
        assert!(self.is_square());
        Self::from_fn(self.rows, self.cols, |i, j| {
            (self[(i, j)] + self[(j, i)].conj()) * 0.5
        })
    }

    /// (A − A†) / 2i, so that A = hermitian_part + i · skew_part.
    pub fn skew_part(&self) -> Self {
        assert!(self.is_square());
        Self::from_fn(self.rows, self.cols, |i, j| {
            (self[(i, j)] - self[(j, i)].conj()) * C64::new(0.0, -0.5)
        })
    }

    pub fn matmul(&self, other: &CMat) -> CMat {
        assert_eq!(
            self.cols, other.rows,
            "matmul: {}x{} times {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let mut out = CMat::zeros(self.rows, other.cols);
        let oc = other.cols;
        for i in 0..self.rows {
            let out_row = &mut out.data[i * oc..(i + 1) * oc];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let b_row = &other.data[k * oc..(k + 1) * oc];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn mat_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// ⟨v|A|v⟩.
    pub fn quadratic_form(&self, v: &[C64]) -> C64 {
        inner(v, &self.mat_vec(v))
    }

    pub(crate) fn to_nalgebra(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }
}

impl Index<(usize, usize)> for CMat {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for CMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMat {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for z in self.row(i) {
                write!(f, "{:>9.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Add<&CMat> for &CMat {
    type Output = CMat;
    fn add(self, rhs: &CMat) -> CMat {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Sub<&CMat> for &CMat {
    type Output = CMat;
    fn sub(self, rhs: &CMat) -> CMat {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl AddAssign<&CMat> for CMat {
    fn add_assign(&mut self, rhs: &CMat) {
        assert_eq!(self.shape(), rhs.shape());
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
    }
}

impl SubAssign<&CMat> for CMat {
    fn sub_assign(&mut self, rhs: &CMat) {
        assert_eq!(self.shape(), rhs.shape());
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a -= b;
        }
    }
}

impl Mul<&CMat> for &CMat {
    type Output = CMat;
    fn mul(self, rhs: &CMat) -> CMat {
        self.matmul(rhs)
    }
}

impl Neg for &CMat {
    type Output = CMat;
    fn neg(self) -> CMat {
        self.map(|z| -z)
    }
}

impl CMat {
    /// self += s · other.
    pub fn axpy(&mut self, s: C64, other: &CMat) {
        assert_eq!(self.shape(), other.shape());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }
}

/// Kronecker product a ⊗ b.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = CMat::zeros(ar * br, ac * bc);
    let oc = ac * bc;
    for i in 0..ar {
        for j in 0..ac {
            let s = a[(i, j)];
            if s == ZERO {
                continue;
            }
            for k in 0..br {
                let base = (i * br + k) * oc + j * bc;
                for l in 0..bc {
                    out.data[base + l] = s * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Kronecker product of a list of matrices, left to right.
pub fn kron_all<'a>(mats: impl IntoIterator<Item = &'a CMat>) -> Option<CMat> {
    let mut it = mats.into_iter();
    let first = it.next()?.clone();
    Some(it.fold(first, |acc, m| kron(&acc, m)))
}

/// Kronecker product of vectors.
pub fn kron_vec(a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for &x in a {
        out.extend(b.iter().map(|&y| x * y));
    }
    out
}

/// ⟨u|v⟩ = Σ conj(u_i) v_i.
pub fn inner(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

pub fn vec_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn normalize(v: &mut [C64]) -> f64 {
    let n = vec_norm(v);
    if n > 0.0 {
        for z in v.iter_mut() {
            *z /= n;
        }
    }
    n
}

/// Hilbert-Schmidt inner product tr(A†B).
pub fn hs_inner(a: &CMat, b: &CMat) -> Result<C64> {
    if a.shape() != b.shape() {
        return Err(Error::dims(
            format!("{}x{}", a.rows, a.cols),
            format!("{}x{}", b.rows, b.cols),
        ));
    }
    Ok(hs(a, b))
}

/// tr(A†B) without the shape check; callers guarantee equal shapes.
pub(crate) fn hs(a: &CMat, b: &CMat) -> C64 {
    debug_assert_eq!(a.shape(), b.shape());
    a.data.iter().zip(&b.data).map(|(x, y)| x.conj() * y).sum()
}

/// Real part of tr(A†B); for Hermitian A, B this is the full inner product.
pub(crate) fn hs_re(a: &CMat, b: &CMat) -> f64 {
    debug_assert_eq!(a.shape(), b.shape());
    a.data
        .iter()
        .zip(&b.data)
        .map(|(x, y)| x.re * y.re + x.im * y.im)
        .sum()
}

/// Spectral decomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct EigDecomposition {
    pub eigenvalues: Vec<f64>,
    /// Columns are the orthonormal eigenvectors, in eigenvalue order.
    pub eigenvectors: CMat,
}

impl EigDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max(&self) -> f64 {
        *self.eigenvalues.last().expect("empty spectrum")
    }

    pub fn vector(&self, k: usize) -> Vec<C64> {
        self.eigenvectors.column(k)
    }

    /// V diag(f(λ)) V†.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> CMat {
        let n = self.dim();
        let v = &self.eigenvectors;
        let weights: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        let mut out = CMat::zeros(n, n);
        for (k, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for i in 0..n {
                let vik = v[(i, k)] * w;
                if vik == ZERO {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += vik * v[(j, k)].conj();
                }
            }
        }
        out
    }

    pub fn reconstruct(&self) -> CMat {
        self.reconstruct_with(|l| l)
    }
}

fn check_hermitian(a: &CMat) -> Result<()> {
    if !a.is_square() {
        return Err(Error::dims("square matrix", format!("{}x{}", a.rows, a.cols)));
    }
    let asym = a.asymmetry();
    if asym > HERMITIAN_TOL * a.frobenius_norm().max(1.0) {
        return Err(Error::NotHermitian { asymmetry: asym });
    }
    Ok(())
}

/// Full spectral decomposition of a Hermitian matrix.
///
/// Inputs within the Hermitian tolerance are symmetrized before decomposition.
pub fn eigh(a: &CMat) -> Result<EigDecomposition> {
    check_hermitian(a)?;
    Ok(eigh_unchecked(&a.hermitian_part()))
}

pub(crate) fn eigh_unchecked(a: &CMat) -> EigDecomposition {
    let n = a.rows;
    if n == 1 {
        return EigDecomposition {
            eigenvalues: vec![a[(0, 0)].re],
            eigenvectors: CMat::identity(1),
        };
    }
    let eig = nalgebra::SymmetricEigen::new(a.to_nalgebra());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let eigenvectors = CMat::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    EigDecomposition {
        eigenvalues,
        eigenvectors,
    }
}

/// λ_min of a Hermitian matrix together with a unit eigenvector.
pub(crate) fn min_eigenpair(a: &CMat) -> (f64, Vec<C64>) {
    let e = eigh_unchecked(a);
    (e.min(), e.vector(0))
}

/// Singular value decomposition `a = U diag(sigma) V†`.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: CMat,
    /// Descending; entries below `SVD_ZERO_CUTOFF · sigma_max` are exactly zero.
    pub sigma: Vec<f64>,
    pub v: CMat,
}

impl Svd {
    pub fn reconstruct(&self) -> CMat {
        let k = self.sigma.len();
        let us = CMat::from_fn(self.u.rows, k, |i, j| self.u[(i, j)] * self.sigma[j]);
        us.matmul(&self.v.adjoint())
    }
}

/// Thin SVD with min(rows, cols) singular values, zeros included.
pub fn svd(a: &CMat) -> Svd {
    let k = a.rows.min(a.cols);
    let dec = nalgebra::SVD::new(a.to_nalgebra(), true, true);
    let u = dec.u.expect("left singular vectors requested");
    let v_t = dec.v_t.expect("right singular vectors requested");
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| dec.singular_values[j].total_cmp(&dec.singular_values[i]));
    let smax = order.first().map_or(0.0, |&i| dec.singular_values[i]);
    let sigma = order
        .iter()
        .map(|&i| {
            let s = dec.singular_values[i];
            if s < SVD_ZERO_CUTOFF * smax {
                0.0
            } else {
                s
            }
        })
        .collect();
    let u = CMat::from_fn(a.rows, k, |i, j| u[(i, order[j])]);
    let v = CMat::from_fn(a.cols, k, |i, j| v_t[(order[j], i)].conj());
    Svd { u, sigma, v }
}

/// Largest singular value.
pub fn spectral_norm(a: &CMat) -> f64 {
    svd(a).sigma.first().copied().unwrap_or(0.0)
}

/// Nearest positive semidefinite matrix in Frobenius norm.
pub fn psd_project(a: &CMat) -> Result<CMat> {
    check_hermitian(a)?;
    Ok(psd_project_unchecked(&a.hermitian_part()))
}

pub(crate) fn psd_project_unchecked(a: &CMat) -> CMat {
    let e = eigh_unchecked(a);
    if e.min() >= 0.0 {
        return a.clone();
    }
    e.reconstruct_with(|l| l.max(0.0)).hermitian_part()
}

/// A^p for Hermitian positive definite A.
pub fn pd_power(a: &CMat, p: f64) -> Result<CMat> {
    check_hermitian(a)?;
    let e = eigh_unchecked(&a.hermitian_part());
    let (lo, hi) = (e.min(), e.max());
    if hi <= 0.0 || lo <= 1e-12 * hi {
        return Err(Error::NotPositiveDefinite { lambda_min: lo });
    }
    Ok(e.reconstruct_with(|l| l.powf(p)).hermitian_part())
}


#[cfg(test)]
mod tests {
    use super::testutil::*;
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: &CMat, b: &CMat, tol: f64) -> bool {
        a.shape() == b.shape() && (a - b).frobenius_norm() <= tol
    }

    #[test]
    fn kron_examples() {
        let i2 = CMat::identity(2);
        assert_eq!(kron(&i2, &i2), CMat::identity(4));

        let d = CMat::from_diag(&[ONE, I]);
        let expected = CMat::from_diag(&[ONE, I, I, -ONE]);
        assert!(close(&kron(&d, &d), &expected, 0.0));

        let e1 = CMat::outer(&[ONE, ZERO], &[ONE, ZERO]);
        let e2 = CMat::outer(&[ZERO, ONE], &[ZERO, ONE]);
        let k = kron(&e1, &e2);
        let mut expected = CMat::zeros(4, 4);
        expected[(1, 1)] = ONE;
        assert_eq!(k, expected);
    }

    #[test]
    fn kron_rectangular_shape() {
        let a = CMat::zeros(2, 3);
        let b = CMat::zeros(4, 1);
        assert_eq!(kron(&a, &b).shape(), (8, 3));
    }

    #[test]
    fn eigh_examples() {
        let e = eigh(&CMat::from_real_diag(&[3.0, 1.0])).unwrap();
        assert_eq!(e.eigenvalues.len(), 2);
        assert!((e.eigenvalues[0] - 1.0).abs() < 1e-14);
        assert!((e.eigenvalues[1] - 3.0).abs() < 1e-14);

        let e = eigh(&pauli_x()).unwrap();
        assert!((e.eigenvalues[0] + 1.0).abs() < 1e-14);
        assert!((e.eigenvalues[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn eigh_reconstructs_random_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in [1, 2, 6, 17, 40] {
            let a = random_hermitian(&mut rng, n);
            let e = eigh(&a).unwrap();
            let resid = (&e.reconstruct() - &a).frobenius_norm();
            assert!(resid <= 1e-10 * a.frobenius_norm(), "n={n} resid={resid}");
            assert!(e.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
            let v = &e.eigenvectors;
            assert!(close(&v.adjoint().matmul(v), &CMat::identity(n), 1e-10));
        }
    }

    #[test]
    fn eigh_rejects_non_hermitian() {
        let a = CMat::from_rows(&[vec![ONE, ONE], vec![ZERO, ONE]]);
        assert!(matches!(eigh(&a), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn eigh_symmetrizes_within_tolerance() {
        let mut a = pauli_x();
        a[(0, 1)] += C64::new(1e-12, 0.0);
        let e = eigh(&a).unwrap();
        assert!((e.eigenvalues[1] - 1.0).abs() < 1e-11);
    }

    #[test]
    fn svd_examples() {
        let s = svd(&CMat::from_real_diag(&[2.0, 1.0]));
        assert_eq!(s.sigma, vec![2.0, 1.0]);

        let s = svd(&CMat::from_real_diag(&[1.0, 0.0]));
        assert_eq!(s.sigma.len(), 2);
        assert!((s.sigma[0] - 1.0).abs() < 1e-15);
        assert_eq!(s.sigma[1], 0.0);
        assert!(close(&s.u.adjoint().matmul(&s.u), &CMat::identity(2), 1e-12));
        assert!(close(&s.v.adjoint().matmul(&s.v), &CMat::identity(2), 1e-12));
    }

    #[test]
    fn svd_reconstructs_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for (r, c) in [(4, 4), (3, 5), (6, 2)] {
            let a = random_matrix(&mut rng, r, c);
            let s = svd(&a);
            assert_eq!(s.sigma.len(), r.min(c));
            assert!(s.sigma.windows(2).all(|w| w[0] >= w[1]));
            assert!((&s.reconstruct() - &a).frobenius_norm() <= 1e-10);
        }
    }

    #[test]
    fn psd_project_examples() {
        let p = psd_project(&CMat::from_real_diag(&[2.0, -1.0])).unwrap();
        assert!(close(&p, &CMat::from_real_diag(&[2.0, 0.0]), 1e-14));

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_pd(&mut rng, 4);
        assert!(close(&psd_project(&a).unwrap(), &a, 1e-12));

        let m = CMat::identity(3).scale_real(-1.0);
        assert!(psd_project(&m).unwrap().frobenius_norm() <= 1e-14);
    }

    #[test]
    fn hs_inner_examples() {
        let i2 = CMat::identity(2);
        assert_eq!(hs_inner(&i2, &i2).unwrap(), C64::new(2.0, 0.0));
        let a = CMat::from_real_diag(&[1.0, 0.0]);
        let b = CMat::from_real_diag(&[0.0, 1.0]);
        assert_eq!(hs_inner(&a, &b).unwrap(), ZERO);
        assert!(matches!(
            hs_inner(&i2, &CMat::identity(3)),
            Err(Error::DimensionMismatch { .. })
        ));

        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = random_matrix(&mut rng, 3, 3);
        let b = random_matrix(&mut rng, 3, 3);
        let ab = hs_inner(&a, &b).unwrap();
        let ba = hs_inner(&b, &a).unwrap();
        assert!((ab - ba.conj()).norm() < 1e-14);
        // tr(A†B) computed the long way
        assert!((ab - a.adjoint().matmul(&b).trace()).norm() < 1e-13);
    }

    #[test]
    fn pd_power_examples() {
        let r = pd_power(&CMat::from_real_diag(&[4.0, 9.0]), 0.5).unwrap();
        assert!(close(&r, &CMat::from_real_diag(&[2.0, 3.0]), 1e-14));
        for p in [-0.5, 0.5, 3.0] {
            assert!(close(&pd_power(&CMat::identity(3), p).unwrap(), &CMat::identity(3), 1e-14));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_pd(&mut rng, 5);
        let h = pd_power(&a, 0.5).unwrap();
        assert!((&h.matmul(&h) - &a).frobenius_norm() <= 1e-10 * a.frobenius_norm());
        let hinv = pd_power(&a, -0.5).unwrap();
        assert!(close(&h.matmul(&hinv), &CMat::identity(5), 1e-10));
    }

    #[test]
    fn pd_power_rejects_singular() {
        let a = CMat::from_real_diag(&[1.0, 0.0]);
        assert!(matches!(pd_power(&a, 0.5), Err(Error::NotPositiveDefinite { .. })));
    }

    #[test]
    fn constructor_rejects_nan() {
        let r = CMat::new(1, 2, vec![ONE, C64::new(f64::NAN, 0.0)]);
        assert!(r.is_err());
        assert!(CMat::new(2, 2, vec![ONE]).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn mat(n: usize, m: usize) -> impl Strategy<Value = CMat> {
            proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n * m).prop_map(move |v| {
                CMat::new(n, m, v.into_iter().map(|(a, b)| C64::new(a, b)).collect()).unwrap()
            })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            #[test]
            fn kron_associative_and_bilinear(
                a in mat(2, 2), b in mat(2, 3), c in mat(3, 2), a2 in mat(2, 2),
                s in (-2.0f64..2.0, -2.0f64..2.0)
            ) {
                let l = kron(&kron(&a, &b), &c);
                let r = kron(&a, &kron(&b, &c));
                prop_assert!((&l - &r).frobenius_norm() <= 1e-12);
                let s = C64::new(s.0, s.1);
                let mut comb = a.clone();
                comb.axpy(s, &a2);
                let mut expect = kron(&a, &b);
                expect.axpy(s, &kron(&a2, &b));
                prop_assert!((&kron(&comb, &b) - &expect).frobenius_norm() <= 1e-12);
            }

            #[test]
            fn kron_spectrum_is_pairwise_products(a in mat(3, 3), b in mat(2, 2)) {
                let (a, b) = (a.hermitian_part(), b.hermitian_part());
                let ea = eigh(&a).unwrap().eigenvalues;
                let eb = eigh(&b).unwrap().eigenvalues;
                let mut prods: Vec<f64> = ea.iter().flat_map(|x| eb.iter().map(move |y| x * y)).collect();
                prods.sort_by(f64::total_cmp);
                let ek = eigh(&kron(&a, &b)).unwrap().eigenvalues;
                for (p, e) in prods.iter().zip(&ek) {
                    prop_assert!((p - e).abs() <= 1e-9);
                }
            }

            #[test]
            fn hs_self_inner_is_squared_norm(a in mat(3, 4)) {
                let z = hs_inner(&a, &a).unwrap();
                prop_assert!(z.im.abs() <= 1e-14);
                prop_assert!(z.re >= 0.0);
                prop_assert!((z.re - a.frobenius_norm().powi(2)).abs() <= 1e-12);
            }

            #[test]
            fn psd_projection_is_nearest(a in mat(3, 3), seed in any::<u64>()) {
                let a = a.hermitian_part();
                let p = psd_project(&a).unwrap();
                prop_assert!(eigh(&p).unwrap().min() >= -1e-12);
                let dist = (&p - &a).frobenius_norm();
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                for _ in 0..100 {
                    let g = random_matrix(&mut rng, 3, 3);
                    let q = g.matmul(&g.adjoint());
                    prop_assert!(dist <= (&q - &a).frobenius_norm() + 1e-12);
                }
            }
        }
    }
}
