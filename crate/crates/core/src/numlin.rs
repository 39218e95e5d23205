//! Small dense linear algebra.
//!
//! Everything here works on row-major `f64` storage and targets the
//! dimensions the experiments use (a handful up to a few dozen). The
//! allocation-free [`solve_in_place`] is the kernel the Monte Carlo trial
//! loops call millions of times.

use std::fmt;
use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Relative threshold below which a pivot counts as zero.
pub const PIVOT_TOLERANCE: f64 = 1e-12;

/// Relative tolerance for the symmetry check of a [`GramMatrix`].
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

/// Dense row-major matrix with finite entries.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|x| !x.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite matrix entry {bad}"
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::DimensionMismatch(format!(
                    "row {i} has length {} but row 0 has length {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Matrix::from_row_major(rows.len(), cols, data)
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns<C: AsRef<[f64]>>(columns: &[C]) -> Result<Self> {
        Ok(Matrix::from_rows(columns)?.transpose())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
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
        Ok(out)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} for a matrix with {} columns",
                x.len(),
                self.cols
            )));
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), x)).collect())
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Largest absolute entrywise difference to `other` (same shape).
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Maximum absolute column sum.
    pub fn norm_1(&self) -> f64 {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

/// Symmetric matrix of pairwise inner products.
///
/// Positive definiteness is not enforced on construction; operations that
/// need it ([`cholesky`], [`inverse`]) report [`Error::NotPositiveDefinite`].
#[derive(Clone, PartialEq)]
pub struct GramMatrix(Matrix);

impl GramMatrix {
    /// Validates squareness and symmetry (relative to the largest entry),
    /// then symmetrises exactly by averaging mirrored entries.
    pub fn new(m: Matrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "Gram matrix must be square, got {}x{}",
                m.rows, m.cols
            )));
        }
        if m.rows == 0 {
            return Err(Error::InvalidInput("empty Gram matrix".into()));
        }
        let scale = m.max_abs();
        let mut m = m;
        let n = m.rows;
        for i in 0..n {
            for j in (i + 1)..n {
                let (a, b) = (m[(i, j)], m[(j, i)]);
                if (a - b).abs() > SYMMETRY_TOLERANCE * scale {
                    return Err(Error::InvalidInput(format!(
                        "Gram matrix not symmetric at ({i},{j}): {a} vs {b}"
                    )));
                }
                let avg = 0.5 * (a + b);
                m[(i, j)] = avg;
                m[(j, i)] = avg;
            }
        }
        Ok(GramMatrix(m))
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        GramMatrix::new(Matrix::from_rows(rows)?)
    }

    /// Unit diagonal with every off-diagonal entry equal to `rho`.
    pub fn equicorrelated(dim: usize, rho: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("dimension must be at least 1".into()));
        }
        let mut m = Matrix::identity(dim);
        for i in 0..dim {
            for j in 0..dim {
                if i != j {
                    m[(i, j)] = rho;
                }
            }
        }
        GramMatrix::new(m)
    }

    pub fn identity(dim: usize) -> Self {
        GramMatrix(Matrix::identity(dim))
    }

    pub fn dim(&self) -> usize {
        self.0.rows
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.0.to_rows()
    }

    /// Off-diagonal entries (i < j) in row order.
    pub fn off_diagonal(&self) -> Vec<f64> {
        let n = self.dim();
        let mut out = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                out.push(self.get(i, j));
            }
        }
        out
    }
}

impl fmt::Debug for GramMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Gram{:?}", self.0)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Gram matrix of a family of vectors sharing one dimension.
pub fn gram<V: AsRef<[f64]>>(vectors: &[V]) -> Result<GramMatrix> {
    let first = vectors
        .first()
        .ok_or_else(|| Error::InvalidInput("empty vector list".into()))?
        .as_ref();
    let m = first.len();
    if m == 0 {
        return Err(Error::InvalidInput(
            "vectors must have dimension at least 1".into(),
        ));
    }
    for (i, v) in vectors.iter().enumerate() {
        let v = v.as_ref();
        if v.len() != m {
            return Err(Error::DimensionMismatch(format!(
                "vector {i} has dimension {} but vector 0 has dimension {m}",
                v.len()
            )));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "vector {i} has a non-finite entry"
            )));
        }
    }
    let n = vectors.len();
    let mut g = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let d = dot(vectors[i].as_ref(), vectors[j].as_ref());
            g[(i, j)] = d;
            g[(j, i)] = d;
        }
    }
    Ok(GramMatrix(g))
}

/// Lower-triangular `L` with `L Lᵀ = g`.
pub fn cholesky(g: &GramMatrix) -> Result<Matrix> {
    let a = g.as_matrix();
    let n = a.rows;
    let max_diag = (0..n).map(|i| a[(i, i)]).fold(f64::NEG_INFINITY, f64::max);
    let threshold = PIVOT_TOLERANCE * max_diag.max(0.0);
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut pivot = a[(j, j)];
        for k in 0..j {
            pivot -= l[(j, k)] * l[(j, k)];
        }
        if pivot.is_nan() || pivot <= threshold {
            return Err(Error::NotPositiveDefinite { index: j, pivot });
        }
        let root = pivot.sqrt();
        l[(j, j)] = root;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / root;
        }
    }
    Ok(l)
}

/// LU factorisation with partial pivoting, `P A = L U` packed in one matrix.
#[derive(Debug, Clone)]
pub struct Lu {
    packed: Matrix,
    perm: Vec<usize>,
    sign: f64,
    singular: bool,
}

impl Lu {
    pub fn new(a: &Matrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "LU needs a square matrix, got {}x{}",
                a.rows, a.cols
            )));
        }
        let n = a.rows;
        let threshold = PIVOT_TOLERANCE * a.max_abs();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        let mut singular = false;
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| lu[(i, k)].abs().total_cmp(&lu[(j, k)].abs()))
                .unwrap_or(k);
            if p != k {
                for j in 0..n {
                    lu.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let pivot = lu[(k, k)];
            if pivot.abs() <= threshold {
                singular = true;
                continue;
            }
            for i in (k + 1)..n {
                let factor = lu[(i, k)] / pivot;
                lu[(i, k)] = factor;
                for j in (k + 1)..n {
                    lu[(i, j)] -= factor * lu[(k, j)];
                }
            }
        }
        Ok(Lu {
            packed: lu,
            perm,
            sign,
            singular,
        })
    }

    pub fn is_singular(&self) -> bool {
        self.singular
    }

    pub fn determinant(&self) -> f64 {
        let n = self.packed.rows;
        (0..n).fold(self.sign, |d, i| d * self.packed[(i, i)])
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.packed.rows;
        if b.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "right-hand side of length {} for a {n}x{n} system",
                b.len()
            )));
        }
        if self.singular {
            return Err(Error::Singular);
        }
        let lu = &self.packed;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for k in 0..i {
                x[i] -= lu[(i, k)] * x[k];
            }
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                x[i] -= lu[(i, k)] * x[k];
            }
            x[i] /= lu[(i, i)];
        }
        Ok(x)
    }

    pub fn inverse(&self) -> Result<Matrix> {
        let n = self.packed.rows;
        let mut inv = Matrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|x| *x = 0.0);
            e[j] = 1.0;
            let col = self.solve(&e)?;
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        Ok(inv)
    }
}

/// Solves `a λ = b` for square `a`.
pub fn solve(a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    Lu::new(a)?.solve(b)
}

/// Determinant via LU; zero (or a rounding-level value) for singular input.
pub fn determinant(a: &Matrix) -> Result<f64> {
    let lu = Lu::new(a)?;
    Ok(lu.determinant())
}

/// General square inverse.
pub fn invert(a: &Matrix) -> Result<Matrix> {
    Lu::new(a)?.inverse()
}

/// Inverse of a positive-definite Gram matrix, exactly symmetric.
pub fn inverse(g: &GramMatrix) -> Result<GramMatrix> {
    let l = cholesky(g)?;
    let n = g.dim();
    // Invert L by forward substitution, then form L⁻ᵀ L⁻¹.
    let mut linv = Matrix::zeros(n, n);
    for j in 0..n {
        linv[(j, j)] = 1.0 / l[(j, j)];
        for i in (j + 1)..n {
            let mut s = 0.0;
            for k in j..i {
                s -= l[(i, k)] * linv[(k, j)];
            }
            linv[(i, j)] = s / l[(i, i)];
        }
    }
    let mut out = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let start = j.max(i);
            let s: f64 = (start..n).map(|k| linv[(k, i)] * linv[(k, j)]).sum();
            out[(i, j)] = s;
            out[(j, i)] = s;
        }
    }
    Ok(GramMatrix(out))
}

/// Rescales to unit diagonal: entry (i,j) becomes g(i,j) / sqrt(g(i,i) g(j,j)).
pub fn correlation(g: &GramMatrix) -> Result<GramMatrix> {
    let n = g.dim();
    let scale: Vec<f64> = (0..n)
        .map(|i| {
            let d = g.get(i, i);
            if d > 0.0 && d.is_finite() {
                Ok(d.sqrt())
            } else {
                Err(Error::InvalidInput(format!(
                    "non-positive diagonal entry {d} at {i}"
                )))
            }
        })
        .collect::<Result<_>>()?;
    let mut out = Matrix::identity(n);
    for i in 0..n {
        for j in (i + 1)..n {
            let r = g.get(i, j) / (scale[i] * scale[j]);
            out[(i, j)] = r;
            out[(j, i)] = r;
        }
    }
    Ok(GramMatrix(out))
}

/// 1-norm condition number of a positive-definite Gram matrix.
pub fn condition_number(g: &GramMatrix) -> Result<f64> {
    let inv = inverse(g)?;
    Ok(g.as_matrix().norm_1() * inv.as_matrix().norm_1())
}

/// Basis of the numerical null space of `a` (columns treated as unknowns).
///
/// Uses Gauss-Jordan elimination with partial pivoting; entries below
/// `PIVOT_TOLERANCE` times the largest entry count as zero.
pub fn null_space(a: &Matrix) -> Vec<Vec<f64>> {
    let (rows, cols) = (a.rows, a.cols);
    let threshold = PIVOT_TOLERANCE * a.max_abs();
    let mut m = a.clone();
    let mut pivot_cols = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let p = (r..rows)
            .max_by(|&i, &j| m[(i, c)].abs().total_cmp(&m[(j, c)].abs()))
            .unwrap();
        if m[(p, c)].abs() <= threshold {
            continue;
        }
        for j in 0..cols {
            m.data.swap(r * cols + j, p * cols + j);
        }
        let pivot = m[(r, c)];
        for j in 0..cols {
            m[(r, j)] /= pivot;
        }
        for i in 0..rows {
            if i != r {
                let f = m[(i, c)];
                if f != 0.0 {
                    for j in 0..cols {
                        m[(i, j)] -= f * m[(r, j)];
                    }
                }
            }
        }
        pivot_cols.push(c);
        r += 1;
    }
    let free: Vec<usize> = (0..cols).filter(|c| !pivot_cols.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![0.0; cols];
            v[f] = 1.0;
            for (row, &pc) in pivot_cols.iter().enumerate() {
                v[pc] = -m[(row, f)];
            }
            v
        })
        .collect()
}

/// Solves the `n`x`n` row-major system in `a` with right-hand side `b`,
/// overwriting `b` with the solution. Both buffers are clobbered.
///
/// Returns `false` when a pivot falls below `PIVOT_TOLERANCE` times the
/// largest entry of `a`. Allocation-free; meant for hot loops.
pub fn solve_in_place(a: &mut [f64], b: &mut [f64], n: usize) -> bool {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n);
    let threshold = PIVOT_TOLERANCE * a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    for k in 0..n {
        let mut p = k;
        let mut best = a[k * n + k].abs();
        for i in (k + 1)..n {
            let v = a[i * n + k].abs();
            if v > best {
                best = v;
                p = i;
            }
        }
        if best.is_nan() || best <= threshold {
            return false;
        }
        if p != k {
            for j in k..n {
                a.swap(k * n + j, p * n + j);
            }
            b.swap(k, p);
        }
        let pivot = a[k * n + k];
        for i in (k + 1)..n {
            let f = a[i * n + k] / pivot;
            if f != 0.0 {
                for j in (k + 1)..n {
                    a[i * n + j] -= f * a[k * n + j];
                }
                b[i] -= f * b[k];
            }
        }
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for j in (i + 1)..n {
            s -= a[i * n + j] * b[j];
        }
        b[i] = s / a[i * n + i];
    }
    true
}
