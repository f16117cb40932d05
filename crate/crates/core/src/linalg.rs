//! Small dense symmetric-matrix algebra.
//!
//! Everything here targets the toolkit's regime of `n <= 16`: matrices are
//! dense, eigenpairs come from cyclic Jacobi rotations with a fixed sweep
//! order, so results are bit-reproducible for a given input.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::{Error, Result};

/// Relative tolerance used when checking that a user-supplied dense matrix
/// is symmetric.
const SYMMETRY_TOL: f64 = 1e-12;

/// Dense row-major rectangular matrix. Used for eigenvector bases and
/// subspace frames; symmetric data lives in [`SymMat`].
#[derive(Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    /// Largest absolute entry of `selfᵀ self − I`.
    pub fn orthonormality_defect(&self) -> f64 {
        let g = self.transpose().matmul(self);
        let mut worst: f64 = 0.0;
        for i in 0..g.rows {
            for j in 0..g.cols {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[(i, j)] - target).abs());
            }
        }
        worst
    }
}

impl std::ops::Index<(usize, usize)> for Mat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Mat {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<f64> = (0..self.cols).map(|j| self[(i, j)]).collect();
            writeln!(f, "  {row:?}")?;
        }
        write!(f, "]")
    }
}

/// Dense symmetric `n x n` matrix with packed upper-triangle storage, so
/// symmetry holds by construction.
#[derive(Clone, PartialEq)]
pub struct SymMat {
    n: usize,
    upper: Vec<f64>,
}

impl SymMat {
    #[inline]
    fn slot(n: usize, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        i * n - i * (i + 1) / 2 + j
    }

    pub fn zeros(n: usize) -> Self {
        assert!(n >= 1, "dimension must be at least 1");
        Self {
            n,
            upper: vec![0.0; n * (n + 1) / 2],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::scalar(n, 1.0)
    }

    pub fn scalar(n: usize, c: f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, c);
        }
        m
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    /// Builds a matrix from `f(i, j)` evaluated on the upper triangle `i <= j`.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in i..n {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Parses dense rows, rejecting non-square, non-finite or asymmetric input.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::Input("empty matrix".into()));
        }
        for (i, r) in rows.iter().enumerate() {
            if r.len() != n {
                return Err(Error::Input(format!(
                    "row {i} has {} entries, expected {n}",
                    r.len()
                )));
            }
            if let Some(j) = r.iter().position(|v| !v.is_finite()) {
                return Err(Error::Input(format!("entry ({i}, {j}) is not finite")));
            }
        }
        let scale = rows
            .iter()
            .flatten()
            .fold(1.0_f64, |acc, v| acc.max(v.abs()));
        for i in 0..n {
            for j in (i + 1)..n {
                if (rows[i][j] - rows[j][i]).abs() > SYMMETRY_TOL * scale {
                    return Err(Error::Input(format!(
                        "matrix is not symmetric at ({i}, {j}): {} vs {}",
                        rows[i][j], rows[j][i]
                    )));
                }
            }
        }
        Ok(Self::from_fn(n, |i, j| rows[i][j]))
    }

    /// Symmetric part `(A + Aᵀ)/2` of a square dense matrix.
    pub fn sym_part(a: &Mat) -> Self {
        assert_eq!(a.rows(), a.cols());
        Self::from_fn(a.rows(), |i, j| 0.5 * (a[(i, j)] + a[(j, i)]))
    }

    /// `B D Bᵀ` for a dense `B` (n x k) and diagonal `D` (length k).
    pub fn congruence_diag(b: &Mat, d: &[f64]) -> Self {
        assert_eq!(b.cols(), d.len());
        Self::from_fn(b.rows(), |i, j| {
            (0..d.len()).map(|k| b[(i, k)] * d[k] * b[(j, k)]).sum()
        })
    }

    /// `Bᵀ X B` for a dense `B` (n x k); the result is `k x k`.
    pub fn congruence_t(&self, b: &Mat) -> Self {
        assert_eq!(b.rows(), self.n, "dimension mismatch");
        let xb = self.to_dense().matmul(b);
        let k = b.cols();
        Self::from_fn(k, |i, j| (0..self.n).map(|r| b[(r, i)] * xb[(r, j)]).sum())
    }

    /// `B Y Bᵀ` for a dense `B` (n x k) and `Y` of size `k`.
    pub fn congruence(&self, b: &Mat) -> Self {
        assert_eq!(b.cols(), self.n, "dimension mismatch");
        let by = b.matmul(&self.to_dense());
        Self::from_fn(b.rows(), |i, j| {
            (0..self.n).map(|k| by[(i, k)] * b[(j, k)]).sum()
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.upper[Self::slot(self.n, i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let s = Self::slot(self.n, i, j);
        self.upper[s] = v;
    }

    pub fn to_dense(&self) -> Mat {
        Mat::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j)).collect())
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.upper.iter().all(|v| v.is_finite())
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.upper.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// `vᵀ X v`.
    pub fn quad_form(&self, v: &[f64]) -> f64 {
        assert_eq!(v.len(), self.n);
        let mut s = 0.0;
        for i in 0..self.n {
            s += self.get(i, i) * v[i] * v[i];
            for j in (i + 1)..self.n {
                s += 2.0 * self.get(i, j) * v[i] * v[j];
            }
        }
        s
    }

    /// Matrix product of two symmetric matrices (not symmetric in general).
    pub fn product(&self, other: &SymMat) -> Mat {
        assert_eq!(self.n, other.n);
        self.to_dense().matmul(&other.to_dense())
    }

    /// `Tr(self * other)` without forming the product.
    pub fn trace_product(&self, other: &SymMat) -> f64 {
        assert_eq!(self.n, other.n);
        let mut s = 0.0;
        for i in 0..self.n {
            s += self.get(i, i) * other.get(i, i);
            for j in (i + 1)..self.n {
                s += 2.0 * self.get(i, j) * other.get(i, j);
            }
        }
        s
    }

    fn zip_with(&self, other: &SymMat, f: impl Fn(f64, f64) -> f64) -> SymMat {
        assert_eq!(self.n, other.n, "dimension mismatch");
        SymMat {
            n: self.n,
            upper: self
                .upper
                .iter()
                .zip(&other.upper)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn scale(&self, c: f64) -> SymMat {
        SymMat {
            n: self.n,
            upper: self.upper.iter().map(|v| c * v).collect(),
        }
    }
}

impl fmt::Debug for SymMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SymMat{:?}", self.to_rows())
    }
}

impl Add for &SymMat {
    type Output = SymMat;
    fn add(self, rhs: &SymMat) -> SymMat {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &SymMat {
    type Output = SymMat;
    fn sub(self, rhs: &SymMat) -> SymMat {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Neg for &SymMat {
    type Output = SymMat;
    fn neg(self) -> SymMat {
        SymMat {
            n: self.n,
            upper: self.upper.iter().map(|v| -v).collect(),
        }
    }
}

impl Mul<&SymMat> for f64 {
    type Output = SymMat;
    fn mul(self, rhs: &SymMat) -> SymMat {
        rhs.scale(self)
    }
}

/// Eigen-decomposition with eigenvalues in ascending order; column `i` of
/// `vectors` pairs with `values[i]`.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub vectors: Mat,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `Q diag(e) Qᵀ`.
    pub fn reconstruct(&self) -> SymMat {
        SymMat::congruence_diag(&self.vectors, &self.values)
    }

    /// Rebuilds the matrix after mapping every eigenvalue through `f`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> SymMat {
        let d: Vec<f64> = self.values.iter().map(|&e| f(e)).collect();
        SymMat::congruence_diag(&self.vectors, &d)
    }
}

const MAX_SWEEPS: usize = 64;

/// Eigenvalues (ascending) and orthonormal eigenvectors by cyclic Jacobi.
///
/// The sweep order is fixed row by row and ties in the final ordering are
/// broken by the column index the rotations left them in, so the output is a
/// deterministic function of the input bits.
pub fn eigen_sorted(x: &SymMat) -> Result<Spectrum> {
    if !x.is_finite() {
        return Err(Error::Input("matrix has non-finite entries".into()));
    }
    let n = x.dim();
    let mut a = x.to_dense();
    let mut v = Mat::identity(n);

    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        let mut total = 0.0;
        for i in 0..n {
            total += a[(i, i)] * a[(i, i)];
            for j in (i + 1)..n {
                off += 2.0 * a[(i, j)] * a[(i, j)];
            }
        }
        total += off;
        if off == 0.0 || off <= (f64::EPSILON * f64::EPSILON) * total * 1e-4 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                // Negligible coupling relative to both diagonals: drop it.
                if apq.abs() <= 1e-3 * f64::EPSILON * app.abs().min(aqq.abs()) {
                    a[(p, q)] = 0.0;
                    a[(q, p)] = 0.0;
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = Mat::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(Spectrum { values, vectors })
}

/// Spectral norm `max |e_i(X)|`.
pub fn spectral_norm(x: &SymMat) -> Result<f64> {
    let s = eigen_sorted(x)?;
    Ok(s.values.iter().fold(0.0, |acc, e| acc.max(e.abs())))
}

/// Orthonormal basis of a `p`-dimensional subspace of `R^n`, stored as the
/// columns of an `n x p` matrix.
#[derive(Clone, Debug)]
pub struct Frame {
    basis: Mat,
}

/// Columns whose norm drops below this after projection are treated as
/// linearly dependent.
const RANK_TOL: f64 = 1e-10;
const FRAME_TOL: f64 = 1e-12;

impl Frame {
    /// Wraps columns that are already orthonormal to within `1e-12`.
    pub fn from_orthonormal(basis: Mat) -> Result<Self> {
        Self::check_shape(&basis)?;
        let defect = basis.orthonormality_defect();
        if defect > FRAME_TOL {
            return Err(Error::Input(format!(
                "frame columns are not orthonormal (defect {defect:e})"
            )));
        }
        Ok(Self { basis })
    }

    /// Orthonormalizes arbitrary columns by modified Gram–Schmidt with one
    /// re-orthogonalization pass.
    pub fn orthonormalize(cols: &Mat) -> Result<Self> {
        Self::check_shape(cols)?;
        let (n, p) = (cols.rows(), cols.cols());
        let mut q = cols.clone();
        for j in 0..p {
            for _pass in 0..2 {
                for k in 0..j {
                    let dot: f64 = (0..n).map(|i| q[(i, k)] * q[(i, j)]).sum();
                    for i in 0..n {
                        q[(i, j)] -= dot * q[(i, k)];
                    }
                }
            }
            let norm = (0..n).map(|i| q[(i, j)] * q[(i, j)]).sum::<f64>().sqrt();
            if norm < RANK_TOL {
                return Err(Error::Input(format!("column {j} is linearly dependent")));
            }
            for i in 0..n {
                q[(i, j)] /= norm;
            }
        }
        Ok(Self { basis: q })
    }

    /// Frame spanned by the standard basis vectors with the given indices.
    pub fn axes(n: usize, indices: &[usize]) -> Result<Self> {
        if indices.iter().any(|&i| i >= n) {
            return Err(Error::Dimension(format!("axis index out of range for n = {n}")));
        }
        let basis = Mat::from_fn(n, indices.len(), |i, j| if indices[j] == i { 1.0 } else { 0.0 });
        Self::from_orthonormal(basis)
    }

    /// Gaussian `n x p` matrix orthonormalized; rotation-invariant on the
    /// Grassmannian.
    pub fn random<R: Rng + ?Sized>(n: usize, p: usize, rng: &mut R) -> Result<Self> {
        loop {
            let g = Mat::from_fn(n, p, |_, _| rng.sample(StandardNormal));
            match Self::orthonormalize(&g) {
                Ok(f) => return Ok(f),
                // Probability zero; retry rather than fail.
                Err(Error::Input(_)) => continue,
                Err(e) => return Err(e),
            }
        }
    }

    fn check_shape(m: &Mat) -> Result<()> {
        if m.cols() == 0 || m.cols() > m.rows() {
            return Err(Error::Dimension(format!(
                "frame must have 1 <= p <= n, got n = {}, p = {}",
                m.rows(),
                m.cols()
            )));
        }
        Ok(())
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.rows()
    }

    pub fn dim(&self) -> usize {
        self.basis.cols()
    }

    pub fn basis(&self) -> &Mat {
        &self.basis
    }

    /// Orthogonal projector `P_W = B Bᵀ`.
    pub fn projector(&self) -> SymMat {
        SymMat::identity(self.dim()).congruence(&self.basis)
    }

    /// `Bᵀ X B`, the quadratic form of `X` restricted to `W` in frame
    /// coordinates (`p x p`).
    pub fn restrict(&self, x: &SymMat) -> Result<SymMat> {
        if x.dim() != self.ambient_dim() {
            return Err(Error::Dimension(format!(
                "matrix is {0}x{0} but frame lives in R^{1}",
                x.dim(),
                self.ambient_dim()
            )));
        }
        Ok(x.congruence_t(&self.basis))
    }

    /// Lifts a `p x p` frame-coordinate matrix back to `B Y Bᵀ` in `R^n`.
    pub fn lift(&self, y: &SymMat) -> SymMat {
        y.congruence(&self.basis)
    }
}

/// Random symmetric matrix with independent `N(0,1)` upper-triangle entries.
pub fn random_symmetric<R: Rng + ?Sized>(n: usize, rng: &mut R) -> SymMat {
    SymMat::from_fn(n, |_, _| rng.sample(StandardNormal))
}

/// Random positive semidefinite matrix `G Gᵀ` of the given rank.
pub fn random_psd<R: Rng + ?Sized>(n: usize, rank: usize, rng: &mut R) -> SymMat {
    let g = Mat::from_fn(n, rank, |_, _| rng.sample(StandardNormal));
    SymMat::identity(rank).congruence(&g)
}
