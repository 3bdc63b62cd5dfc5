//! Small dense complex linear algebra.
//!
//! Matrices here are tiny (at most a few dozen rows), so everything is
//! straightforward row-major storage with cubic algorithms.

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex;
use rand::Rng;

use crate::error::{ensure, Result};
use crate::rng::complex_gaussian;
use crate::scalar::Real;

/// Dense complex matrix stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> CMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Complex::new(T::zero(), T::zero()); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex::new(T::one(), T::zero());
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from row-major entries.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<Complex<T>>) -> Result<Self> {
        ensure!(data.len() == rows * cols, "expected {} entries for {rows}x{cols}, got {}", rows * cols, data.len());
        Ok(Self { rows, cols, data })
    }

    pub fn from_real_diag(diag: &[T]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = Complex::new(d, T::zero());
        }
        m
    }

    /// Column vector.
    pub fn column(v: &[Complex<T>]) -> Self {
        Self { rows: v.len(), cols: 1, data: v.to_vec() }
    }

    /// Random matrix with i.i.d. unit-variance circularly symmetric Gaussian entries.
    pub fn random_gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Self {
        Self::from_fn(rows, cols, |_, _| complex_gaussian(rng))
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex<T>] {
        &mut self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn scale(&self, s: T) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        ensure!(self.cols == rhs.rows, "matmul shape mismatch {}x{} * {}x{}", self.rows, self.cols, rhs.rows, rhs.cols);
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.re == T::zero() && a.im == T::zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    let prod = a * rhs[(k, j)];
                    out[(i, j)] += prod;
                }
            }
        }
        Ok(out)
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, v: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        ensure!(self.cols == v.len(), "matvec shape mismatch {}x{} * {}", self.rows, self.cols, v.len());
        Ok((0..self.rows)
            .map(|r| {
                let row = &self.data[r * self.cols..(r + 1) * self.cols];
                row.iter().zip(v).fold(Complex::new(T::zero(), T::zero()), |acc, (a, b)| acc + a * b)
            })
            .collect())
    }

    /// `A · A†`.
    pub fn gram(&self) -> Self {
        let mut out = Self::zeros(self.rows, self.rows);
        for i in 0..self.rows {
            for j in i..self.rows {
                let mut acc = Complex::new(T::zero(), T::zero());
                for k in 0..self.cols {
                    acc += self[(i, k)] * self[(j, k)].conj();
                }
                out[(i, j)] = acc;
                out[(j, i)] = acc.conj();
            }
        }
        out
    }

    pub fn trace(&self) -> Complex<T> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).fold(Complex::new(T::zero(), T::zero()), |a, b| a + b)
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().map(|z| z.norm()).fold(T::zero(), T::max)
    }

    /// True when `A = A†` within `tol` relative to the largest entry.
    pub fn is_hermitian(&self, tol: T) -> bool {
        if !self.is_square() {
            return false;
        }
        let scale = self.max_abs().max(T::one());
        for i in 0..self.rows {
            for j in i..self.cols {
                if (self[(i, j)] - self[(j, i)].conj()).norm() > tol * scale {
                    return false;
                }
            }
        }
        true
    }

    /// Reads a column-major vector into an `rows x cols` matrix.
    pub fn from_col_major(rows: usize, cols: usize, v: &[Complex<T>]) -> Result<Self> {
        ensure!(v.len() == rows * cols, "cannot format {} entries as {rows}x{cols}", v.len());
        Ok(Self::from_fn(rows, cols, |r, c| v[c * rows + r]))
    }

    /// Column-major vectorization.
    pub fn vec_col_major(&self) -> Vec<Complex<T>> {
        let mut out = Vec::with_capacity(self.data.len());
        for c in 0..self.cols {
            for r in 0..self.rows {
                out.push(self[(r, c)]);
            }
        }
        out
    }

    /// Copies `block` into `self` with its top-left corner at `(r0, c0)`.
    pub fn set_block(&mut self, r0: usize, c0: usize, block: &Self) {
        for r in 0..block.rows {
            let dst = (r0 + r) * self.cols + c0;
            self.data[dst..dst + block.cols].copy_from_slice(&block.data[r * block.cols..(r + 1) * block.cols]);
        }
    }

    /// Extracts the `rows x cols` sub-matrix starting at `(r0, c0)`.
    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |r, c| self[(r0 + r, c0 + c)])
    }
}

impl<T> Index<(usize, usize)> for CMatrix<T> {
    type Output = Complex<T>;
    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &Complex<T> {
        &self.data[r * self.cols + c]
    }
}

impl<T> IndexMut<(usize, usize)> for CMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[r * self.cols + c]
    }
}

impl<T: Real> Add for &CMatrix<T> {
    type Output = CMatrix<T>;
    fn add(self, rhs: Self) -> CMatrix<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "add shape mismatch");
        CMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect() }
    }
}

impl<T: Real> Sub for &CMatrix<T> {
    type Output = CMatrix<T>;
    fn sub(self, rhs: Self) -> CMatrix<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "sub shape mismatch");
        CMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect() }
    }
}

impl<T: Real> Mul for &CMatrix<T> {
    type Output = CMatrix<T>;
    fn mul(self, rhs: Self) -> CMatrix<T> {
        self.matmul(rhs).expect("mul shape mismatch")
    }
}

/// Sum of squared magnitudes of all entries.
pub fn frobenius_norm_sq<T: Real>(a: &CMatrix<T>) -> T {
    a.as_slice().iter().map(|z| z.norm_sqr()).sum()
}

/// Squared Euclidean norm of a complex vector.
pub fn norm_sq<T: Real>(v: &[Complex<T>]) -> T {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// Block-diagonal assembly.
pub fn block_diag<T: Real>(blocks: &[CMatrix<T>]) -> Result<CMatrix<T>> {
    ensure!(!blocks.is_empty(), "block_diag needs at least one block");
    let rows = blocks.iter().map(CMatrix::rows).sum();
    let cols = blocks.iter().map(CMatrix::cols).sum();
    let mut out = CMatrix::zeros(rows, cols);
    let (mut r0, mut c0) = (0, 0);
    for b in blocks {
        out.set_block(r0, c0, b);
        r0 += b.rows();
        c0 += b.cols();
    }
    Ok(out)
}

/// Eigenvalues of a Hermitian matrix in ascending order.
///
/// The `n x n` Hermitian matrix `A = X + iY` is embedded in the real
/// symmetric `2n x 2n` matrix `[[X, -Y], [Y, X]]`, whose spectrum is that of
/// `A` with every eigenvalue doubled. Cyclic Jacobi rotations diagonalize the
/// embedding.
pub fn hermitian_eigenvalues<T: Real>(a: &CMatrix<T>) -> Result<Vec<T>> {
    ensure!(a.is_square(), "eigenvalues of non-square {}x{} matrix", a.rows(), a.cols());
    ensure!(a.is_hermitian(T::symmetry_tol()), "matrix is not Hermitian");
    let n = a.rows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let m = 2 * n;
    let mut s = vec![T::zero(); m * m];
    for i in 0..n {
        for j in 0..n {
            // symmetrize to wash out the permitted asymmetry
            let z = (a[(i, j)] + a[(j, i)].conj()) * T::lit(0.5);
            s[i * m + j] = z.re;
            s[(i + n) * m + (j + n)] = z.re;
            s[i * m + (j + n)] = -z.im;
            s[(i + n) * m + j] = z.im;
        }
    }
    let mut eig = jacobi_symmetric(&mut s, m);
    eig.sort_by(|x, y| x.partial_cmp(y).expect("finite eigenvalues"));
    Ok(eig.chunks(2).map(|p| (p[0] + p[1]) * T::lit(0.5)).collect())
}

fn jacobi_symmetric<T: Real>(s: &mut [T], n: usize) -> Vec<T> {
    let two = T::lit(2.0);
    for _sweep in 0..100 {
        let mut off = T::zero();
        let mut diag = T::zero();
        for i in 0..n {
            diag += s[i * n + i] * s[i * n + i];
            for j in i + 1..n {
                off += s[i * n + j] * s[i * n + j];
            }
        }
        if off <= T::epsilon() * T::epsilon() * diag.max(T::min_positive_value()) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = s[p * n + q];
                if apq == T::zero() {
                    continue;
                }
                let app = s[p * n + p];
                let aqq = s[q * n + q];
                let theta = (aqq - app) / (two * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let skp = s[k * n + p];
                    let skq = s[k * n + q];
                    s[k * n + p] = c * skp - sn * skq;
                    s[k * n + q] = sn * skp + c * skq;
                }
                for k in 0..n {
                    let spk = s[p * n + k];
                    let sqk = s[q * n + k];
                    s[p * n + k] = c * spk - sn * sqk;
                    s[q * n + k] = sn * spk + c * sqk;
                }
            }
        }
    }
    (0..n).map(|i| s[i * n + i]).collect()
}

/// Cholesky factor `L` with `A = L L†` for a Hermitian positive definite matrix.
pub fn cholesky<T: Real>(a: &CMatrix<T>) -> Result<CMatrix<T>> {
    ensure!(a.is_square(), "cholesky of non-square matrix");
    let n = a.rows();
    let mut l = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        ensure!(d > T::zero(), "matrix is not positive definite");
        let djj = d.sqrt();
        l[(j, j)] = Complex::new(djj, T::zero());
        for i in j + 1..n {
            let mut acc = a[(i, j)];
            for k in 0..j {
                acc -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = acc / djj;
        }
    }
    Ok(l)
}

/// `log2 det(I + (rho/nt) G G†)` in bits.
///
/// Evaluated through a Cholesky factorization of the (positive definite)
/// argument; the eigenvalue form is kept as an independent cross-check.
pub fn log_det_capacity_term<T: Real>(g: &CMatrix<T>, rho: T, nt: usize) -> Result<T> {
    ensure!(rho >= T::zero(), "negative SNR {rho}");
    ensure!(nt >= 1, "nt must be positive");
    let snr = rho / T::count(nt);
    // det(I + c G G†) = det(I + c G† G); factor the smaller one
    let gram = if g.rows() <= g.cols() { g.gram() } else { g.adjoint().gram() };
    let mut a = gram.scale(snr);
    for i in 0..a.rows() {
        a[(i, i)] += Complex::new(T::one(), T::zero());
    }
    let l = cholesky(&a)?;
    let ln_det: T = (0..l.rows()).map(|i| l[(i, i)].re.ln()).sum::<T>() * T::lit(2.0);
    Ok((ln_det / T::LN_2()).max(T::zero()))
}

/// Haar-distributed random unitary matrix (Gram-Schmidt on a Gaussian matrix).
pub fn haar_unitary<T: Real, R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix<T> {
    loop {
        let z = CMatrix::<T>::random_gaussian(n, n, rng);
        if let Some(q) = gram_schmidt_columns(&z) {
            return q;
        }
    }
}

fn gram_schmidt_columns<T: Real>(z: &CMatrix<T>) -> Option<CMatrix<T>> {
    let n = z.rows();
    let mut cols: Vec<Vec<Complex<T>>> = (0..z.cols()).map(|c| (0..n).map(|r| z[(r, c)]).collect()).collect();
    for j in 0..cols.len() {
        for k in 0..j {
            let proj = cols[k].iter().zip(&cols[j]).fold(Complex::new(T::zero(), T::zero()), |acc, (q, v)| acc + q.conj() * v);
            let qk = cols[k].clone();
            for (v, q) in cols[j].iter_mut().zip(&qk) {
                *v -= q * proj;
            }
        }
        let nrm = norm_sq(&cols[j]).sqrt();
        if nrm <= T::lit(1e-6) {
            return None;
        }
        for v in cols[j].iter_mut() {
            *v /= nrm;
        }
    }
    Some(CMatrix::from_fn(n, cols.len(), |r, c| cols[c][r]))
}

/// Maximum deviation of `U U†` from the identity.
pub fn unitarity_error<T: Real>(u: &CMatrix<T>) -> T {
    let g = u.gram();
    let id = CMatrix::identity(u.rows());
    (&g - &id).max_abs()
}

/// Numerical rank from the eigenvalues of `A A†`.
pub fn numerical_rank<T: Real>(a: &CMatrix<T>) -> usize {
    let eig = match hermitian_eigenvalues(&a.gram()) {
        Ok(e) => e,
        Err(_) => return 0,
    };
    let top = eig.iter().copied().fold(T::zero(), T::max);
    if top <= T::zero() {
        return 0;
    }
    let tol = top * T::lit(1e-9).max(T::epsilon() * T::lit(1e3));
    eig.iter().filter(|&&l| l > tol).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    /// Determinant by cofactor expansion, used as an oracle.
    fn det_oracle(a: &CMatrix<f64>) -> Complex<f64> {
        let n = a.rows();
        if n == 1 {
            return a[(0, 0)];
        }
        let mut acc = c(0.0, 0.0);
        for j in 0..n {
            let minor = CMatrix::from_fn(n - 1, n - 1, |r, cc| a[(r + 1, if cc < j { cc } else { cc + 1 })]);
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            acc += a[(0, j)] * det_oracle(&minor) * sign;
        }
        acc
    }

    #[test]
    fn identity_eigenvalues() {
        let e = hermitian_eigenvalues(&CMatrix::<f64>::identity(3)).unwrap();
        for v in e {
            assert_relative_eq!(v, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn diagonal_eigenvalues_sorted() {
        let e = hermitian_eigenvalues(&CMatrix::<f64>::from_real_diag(&[5.0, 2.0])).unwrap();
        assert_relative_eq!(e[0], 2.0, epsilon = 1e-12);
        assert_relative_eq!(e[1], 5.0, epsilon = 1e-12);
    }

    #[test]
    fn eigen_trace_and_det_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=8 {
            let g = CMatrix::<f64>::random_gaussian(n, n, &mut rng);
            let a = g.gram();
            let e = hermitian_eigenvalues(&a).unwrap();
            let sum: f64 = e.iter().sum();
            let prod: f64 = e.iter().product();
            assert_relative_eq!(sum, a.trace().re, max_relative = 1e-8);
            assert_relative_eq!(prod, det_oracle(&a).re, max_relative = 1e-8);
            assert!(e.iter().all(|&v| v >= -1e-10));
            assert!(e.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn eigenvalues_reject_bad_input() {
        assert!(hermitian_eigenvalues(&CMatrix::<f64>::zeros(2, 3)).is_err());
        let mut a = CMatrix::<f64>::identity(2);
        a[(0, 1)] = c(1.0, 0.0);
        assert!(hermitian_eigenvalues(&a).is_err());
    }

    #[test]
    fn log_det_closed_forms() {
        let z = CMatrix::<f64>::zeros(2, 2);
        assert_eq!(log_det_capacity_term(&z, 7.0, 2).unwrap(), 0.0);
        let one = CMatrix::<f64>::identity(1);
        assert_relative_eq!(log_det_capacity_term(&one, 3.0, 1).unwrap(), 2.0, epsilon = 1e-12);
        let i2 = CMatrix::<f64>::identity(2);
        assert_relative_eq!(log_det_capacity_term(&i2, 2.0, 2).unwrap(), 2.0, epsilon = 1e-12);
        assert!(log_det_capacity_term(&i2, -1.0, 2).is_err());
    }

    #[test]
    fn log_det_matches_eigen_route() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for &(nr, nt) in &[(1, 1), (2, 2), (3, 2), (2, 4), (4, 4)] {
            let g = CMatrix::<f64>::random_gaussian(nr, nt, &mut rng);
            for &rho in &[0.0, 0.5, 10.0, 1e4] {
                let direct = log_det_capacity_term(&g, rho, nt).unwrap();
                let via_eig: f64 = hermitian_eigenvalues(&g.gram()).unwrap().iter().map(|l| (1.0 + rho / nt as f64 * l.max(0.0)).log2()).sum();
                assert_relative_eq!(direct, via_eig, epsilon = 1e-8, max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn block_diag_shapes_and_spectrum() {
        assert!(block_diag::<f64>(&[]).is_err());
        let a = CMatrix::from_row_major(1, 1, vec![c(2.0, 0.0)]).unwrap();
        assert_eq!(block_diag(std::slice::from_ref(&a)).unwrap(), a);
        let b = CMatrix::from_row_major(1, 1, vec![c(0.0, 3.0)]).unwrap();
        let d = block_diag(&[a, b]).unwrap();
        assert_eq!(d[(0, 0)], c(2.0, 0.0));
        assert_eq!(d[(1, 1)], c(0.0, 3.0));
        assert_eq!(d[(0, 1)], c(0.0, 0.0));
        assert_eq!(d[(1, 0)], c(0.0, 0.0));

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let blocks: Vec<_> = (0..3).map(|_| CMatrix::<f64>::random_gaussian(2, 2, &mut rng).gram()).collect();
        let mut expected: Vec<f64> = blocks.iter().flat_map(|b| hermitian_eigenvalues(b).unwrap()).collect();
        expected.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let got = hermitian_eigenvalues(&block_diag(&blocks).unwrap()).unwrap();
        for (g, e) in got.iter().zip(&expected) {
            assert_relative_eq!(g, e, epsilon = 1e-8, max_relative = 1e-8);
        }
    }

    #[test]
    fn frobenius_norm_cases() {
        assert_eq!(frobenius_norm_sq(&CMatrix::<f64>::zeros(3, 2)), 0.0);
        assert_relative_eq!(frobenius_norm_sq(&CMatrix::<f64>::identity(4)), 4.0);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = CMatrix::<f64>::random_gaussian(3, 2, &mut rng);
        let mut oracle = 0.0;
        for r in 0..3 {
            for cc in 0..2 {
                let z = a[(r, cc)];
                oracle += z.re * z.re + z.im * z.im;
            }
        }
        assert_relative_eq!(frobenius_norm_sq(&a), oracle, epsilon = 1e-12);
    }

    #[test]
    fn haar_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in 1..6 {
            let u = haar_unitary::<f64, _>(n, &mut rng);
            assert!(unitarity_error(&u) < 1e-12);
        }
    }

    #[test]
    fn rank_of_outer_product_is_one() {
        let u = CMatrix::column(&[c(1.0, 0.0), c(0.0, 2.0)]);
        let v = CMatrix::from_row_major(1, 3, vec![c(1.0, 1.0), c(2.0, 0.0), c(0.0, -1.0)]).unwrap();
        assert_eq!(numerical_rank(&u.matmul(&v).unwrap()), 1);
        assert_eq!(numerical_rank(&CMatrix::<f64>::identity(3)), 3);
        assert_eq!(numerical_rank(&CMatrix::<f64>::zeros(2, 2)), 0);
    }

    #[test]
    fn works_in_single_precision() {
        let e = hermitian_eigenvalues(&CMatrix::<f32>::from_real_diag(&[3.0, 1.0])).unwrap();
        assert!((e[0] - 1.0).abs() < 1e-5 && (e[1] - 3.0).abs() < 1e-5);
    }
}
