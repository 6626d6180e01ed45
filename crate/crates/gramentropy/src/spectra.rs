//! Symmetric-matrix linear algebra: eigendecomposition, primary matrix
//! functions, Hadamard and Kronecker products, definiteness checks, and
//! majorization.
//!
//! Everything in this crate runs on dense real symmetric matrices of desk
//! scale (n up to a few thousand). Eigendecomposition is backed by
//! `nalgebra`'s symmetric eigensolver; eigenvalues are always reported in
//! descending order and eigenvector signs are fixed so repeated calls on
//! the same matrix give identical output within a run.

use ndarray::Array2;

use crate::error::{Error, Result};

/// Relative tolerance for the symmetry check on construction.
const SYMMETRY_TOL: f64 = 1e-12;

/// Unit-trace tolerance for [`DensityLikeMatrix`].
const UNIT_TRACE_TOL: f64 = 1e-10;

/// Absolute floor on eigenvalues of a [`DensityLikeMatrix`].
const DENSITY_PSD_TOL: f64 = 1e-10;

/// Eigenvalues in `(-clamp_tol(max), 0)` are treated as roundoff and
/// clamped to zero; anything below is a hard not-PSD error.
pub(crate) fn clamp_tol(lambda_max: f64) -> f64 {
    1e-10 * lambda_max.max(1.0)
}

/// Dense real symmetric matrix, the universal carrier of the crate.
///
/// Construction enforces squareness, finiteness, and symmetry up to
/// `1e-12 * max(1, max|a_ij|)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    data: Array2<f64>,
}

impl SymmetricMatrix {
    /// Validates and wraps a dense matrix.
    pub fn new(data: Array2<f64>) -> Result<Self> {
        let (r, c) = data.dim();
        if r != c {
            return Err(Error::InvalidInput(format!(
                "matrix must be square, got {r}x{c}"
            )));
        }
        if r == 0 {
            return Err(Error::InvalidInput("matrix must be nonempty".into()));
        }
        let mut max_abs = 0.0f64;
        for &v in &data {
            if !v.is_finite() {
                return Err(Error::InvalidInput("matrix has non-finite entries".into()));
            }
            max_abs = max_abs.max(v.abs());
        }
        let tol = SYMMETRY_TOL * max_abs.max(1.0);
        for i in 0..r {
            for j in (i + 1)..r {
                let d = (data[[i, j]] - data[[j, i]]).abs();
                if d > tol {
                    return Err(Error::InvalidInput(format!(
                        "matrix is not symmetric at ({i},{j}): |{} - {}| = {d:.3e}",
                        data[[i, j]],
                        data[[j, i]]
                    )));
                }
            }
        }
        Ok(Self { data })
    }

    /// Builds from row vectors.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut data = Array2::zeros((n, n));
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidInput(format!(
                    "row {i} has length {}, expected {n}",
                    row.len()
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                data[[i, j]] = v;
            }
        }
        Self::new(data)
    }

    /// Identity matrix.
    pub fn identity(n: usize) -> Self {
        Self {
            data: Array2::eye(n),
        }
    }

    /// All-ones matrix.
    pub fn ones(n: usize) -> Self {
        Self {
            data: Array2::ones((n, n)),
        }
    }

    /// Wraps a matrix that is symmetric by construction.
    pub(crate) fn unchecked(data: Array2<f64>) -> Self {
        debug_assert_eq!(data.nrows(), data.ncols());
        Self { data }
    }

    /// Wraps `(m + m^T)/2`; for products like `U f(L) U^T` whose asymmetry
    /// is pure roundoff.
    pub(crate) fn symmetrized(m: Array2<f64>) -> Self {
        let mut data = m;
        let n = data.nrows();
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = 0.5 * (data[[i, j]] + data[[j, i]]);
                data[[i, j]] = avg;
                data[[j, i]] = avg;
            }
        }
        Self { data }
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[[i, j]]
    }

    pub fn trace(&self) -> f64 {
        self.data.diag().sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, &v| m.max(v.abs()))
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn into_array(self) -> Array2<f64> {
        self.data
    }
}

/// Unit-trace positive semidefinite matrix (up to stated tolerances).
#[derive(Debug, Clone)]
pub struct DensityLikeMatrix {
    base: SymmetricMatrix,
}

impl DensityLikeMatrix {
    /// Validates `|trace - 1| <= 1e-10` and smallest eigenvalue `>= -1e-10`.
    pub fn new(base: SymmetricMatrix) -> Result<Self> {
        let tr = base.trace();
        if (tr - 1.0).abs() > UNIT_TRACE_TOL {
            return Err(Error::InvalidInput(format!(
                "trace must be 1, got {tr:.12}"
            )));
        }
        let min = eigenvalues_sym(&base).last().copied().unwrap_or(0.0);
        if min < -DENSITY_PSD_TOL {
            return Err(Error::NotPsd {
                min_eigenvalue: min,
            });
        }
        Ok(Self { base })
    }

    /// For matrices PSD and unit-trace by construction (Gram matrices,
    /// normalized Hadamard products, Kronecker products of density-like
    /// factors).
    pub(crate) fn unchecked(base: SymmetricMatrix) -> Self {
        Self { base }
    }

    pub fn base(&self) -> &SymmetricMatrix {
        &self.base
    }

    pub fn n(&self) -> usize {
        self.base.n()
    }

    pub fn as_array(&self) -> &Array2<f64> {
        self.base.as_array()
    }

    pub fn into_base(self) -> SymmetricMatrix {
        self.base
    }
}

/// Eigendecomposition of a symmetric matrix: descending eigenvalues and the
/// matching orthonormal eigenvector columns.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    eigenvalues: Vec<f64>,
    eigenvectors: Array2<f64>,
}

impl EigenSystem {
    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Eigenvalues sorted in descending order.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Column k pairs with eigenvalue k.
    pub fn eigenvectors(&self) -> &Array2<f64> {
        &self.eigenvectors
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues[self.n() - 1]
    }

    /// Applies a scalar function on the spectrum: `U f(L) U^T`.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> SymmetricMatrix {
        self.apply_leading(f, self.n())
    }

    /// Same as [`EigenSystem::apply`], retaining only the `m` leading
    /// eigenpairs of the outer-product sum.
    pub fn apply_leading(&self, f: impl Fn(f64) -> f64, m: usize) -> SymmetricMatrix {
        let n = self.n();
        let m = m.min(n);
        let mut out = Array2::zeros((n, n));
        for k in 0..m {
            let fk = f(self.eigenvalues[k]);
            if fk == 0.0 {
                continue;
            }
            let col = self.eigenvectors.column(k);
            for i in 0..n {
                let ci = fk * col[i];
                for j in 0..n {
                    out[[i, j]] += ci * col[j];
                }
            }
        }
        SymmetricMatrix::symmetrized(out)
    }

    /// `U diag(lambda) U^T`.
    pub fn reconstruct(&self) -> SymmetricMatrix {
        self.apply(|x| x)
    }
}

/// Eigendecomposition of a symmetric matrix.
///
/// Eigenvalues come back non-increasing; each eigenvector column has its
/// largest-magnitude component made positive so the output is deterministic
/// within a run. Finiteness is guaranteed by the input type.
pub fn eig_sym(a: &SymmetricMatrix) -> EigenSystem {
    let n = a.n();
    let m = nalgebra::DMatrix::from_fn(n, n, |i, j| a.get(i, j));
    let se = m.symmetric_eigen();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| se.eigenvalues[j].total_cmp(&se.eigenvalues[i]));

    let mut eigenvalues = Vec::with_capacity(n);
    let mut eigenvectors = Array2::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        eigenvalues.push(se.eigenvalues[src]);
        let col = se.eigenvectors.column(src);
        // sign convention: largest-|entry| component positive
        let mut pivot = 0;
        let mut best = 0.0f64;
        for i in 0..n {
            if col[i].abs() > best {
                best = col[i].abs();
                pivot = i;
            }
        }
        let sign = if col[pivot] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            eigenvectors[[i, dst]] = sign * col[i];
        }
    }
    EigenSystem {
        eigenvalues,
        eigenvectors,
    }
}

/// Eigenvalues only (descending), skipping the eigenvector computation.
pub fn eigenvalues_sym(a: &SymmetricMatrix) -> Vec<f64> {
    let n = a.n();
    let m = nalgebra::DMatrix::from_fn(n, n, |i, j| a.get(i, j));
    let ev = m.symmetric_eigenvalues();
    let mut out: Vec<f64> = ev.iter().copied().collect();
    out.sort_by(|x, y| y.total_cmp(x));
    out
}

/// `A^r = U diag(lambda_i^r) U^T` for PSD `A` and `r > 0`.
///
/// Eigenvalues in `(-clamp_tol, 0)` are clamped to zero before powering and
/// `0^r` is defined as 0; an eigenvalue below `-clamp_tol` is an error.
pub fn matrix_power(a: &SymmetricMatrix, r: f64) -> Result<SymmetricMatrix> {
    if !r.is_finite() || r <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "power must be a positive real, got {r}"
        )));
    }
    let es = eig_sym(a);
    let tol = clamp_tol(es.max_eigenvalue());
    if es.min_eigenvalue() < -tol {
        return Err(Error::NotPsd {
            min_eigenvalue: es.min_eigenvalue(),
        });
    }
    Ok(es.apply(|l| if l <= 0.0 { 0.0 } else { l.powf(r) }))
}

/// Elementwise product. PSD inputs give a PSD output (Schur product theorem).
pub fn hadamard(a: &SymmetricMatrix, b: &SymmetricMatrix) -> Result<SymmetricMatrix> {
    if a.n() != b.n() {
        return Err(Error::DimensionMismatch {
            expected: a.n(),
            found: b.n(),
        });
    }
    Ok(SymmetricMatrix::unchecked(a.as_array() * b.as_array()))
}

/// Elementwise power `a_ij^r` for strictly positive entries and `r >= 0`.
pub fn hadamard_power(a: &SymmetricMatrix, r: f64) -> Result<SymmetricMatrix> {
    if !r.is_finite() || r < 0.0 {
        return Err(Error::InvalidInput(format!(
            "hadamard power must be a nonnegative real, got {r}"
        )));
    }
    require_positive_entries(a)?;
    Ok(SymmetricMatrix::unchecked(
        a.as_array().mapv(|v| v.powf(r)),
    ))
}

pub(crate) fn require_positive_entries(a: &SymmetricMatrix) -> Result<()> {
    let arr = a.as_array();
    for i in 0..a.n() {
        for j in 0..a.n() {
            if arr[[i, j]] <= 0.0 {
                return Err(Error::NonPositiveEntry {
                    row: i,
                    col: j,
                    value: arr[[i, j]],
                });
            }
        }
    }
    Ok(())
}

/// Kronecker product; `trace(A (x) B) = trace(A) trace(B)`.
pub fn kron(a: &SymmetricMatrix, b: &SymmetricMatrix) -> SymmetricMatrix {
    let (na, nb) = (a.n(), b.n());
    let mut out = Array2::zeros((na * nb, na * nb));
    for i in 0..na {
        for j in 0..na {
            let aij = a.get(i, j);
            if aij == 0.0 {
                continue;
            }
            for k in 0..nb {
                for l in 0..nb {
                    out[[i * nb + k, j * nb + l]] = aij * b.get(k, l);
                }
            }
        }
    }
    SymmetricMatrix::unchecked(out)
}

/// Whether `q` majorizes `p`: equal totals and all partial sums of the
/// descending rearrangement of `q` dominate those of `p`.
///
/// Partial-sum dominance is checked with slack `1e-10`; a total-sum mismatch
/// beyond `1e-8` is an input error.
pub fn majorizes(q: &[f64], p: &[f64]) -> Result<bool> {
    if q.len() != p.len() {
        return Err(Error::DimensionMismatch {
            expected: q.len(),
            found: p.len(),
        });
    }
    let sum_q: f64 = q.iter().sum();
    let sum_p: f64 = p.iter().sum();
    if (sum_q - sum_p).abs() > 1e-8 {
        return Err(Error::InvalidInput(format!(
            "vector sums differ: {sum_q} vs {sum_p}"
        )));
    }
    let mut qs = q.to_vec();
    let mut ps = p.to_vec();
    qs.sort_by(|a, b| b.total_cmp(a));
    ps.sort_by(|a, b| b.total_cmp(a));
    let mut acc_q = 0.0;
    let mut acc_p = 0.0;
    for k in 0..qs.len() {
        acc_q += qs[k];
        acc_p += ps[k];
        if acc_q < acc_p - 1e-10 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Whether the smallest eigenvalue is at least `-tol * max(1, lambda_max)`.
pub fn psd_check(a: &SymmetricMatrix, tol: f64) -> bool {
    let ev = eigenvalues_sym(a);
    let lambda_max = ev.first().copied().unwrap_or(0.0);
    let min = ev.last().copied().unwrap_or(0.0);
    min >= -tol * lambda_max.max(1.0)
}

/// Whether `J B J <= tol` on the spectrum, `J = I - (1/n) 11^T`.
///
/// This tests `sum a_i a_j B_ij <= 0` over all coefficient vectors with
/// `sum a_i = 0`.
pub fn centered_negdef_check(b: &SymmetricMatrix, tol: f64) -> bool {
    let c = double_centered(b);
    let ev = eigenvalues_sym(&c);
    ev.first().map(|&top| top <= tol).unwrap_or(true)
}

/// `J B J` computed as `B_ij - r_i - r_j + g` with row means `r` and grand
/// mean `g`.
pub(crate) fn double_centered(b: &SymmetricMatrix) -> SymmetricMatrix {
    let n = b.n();
    let arr = b.as_array();
    let row_means: Vec<f64> = (0..n).map(|i| arr.row(i).sum() / n as f64).collect();
    let grand = row_means.iter().sum::<f64>() / n as f64;
    let mut out = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            out[[i, j]] = arr[[i, j]] - row_means[i] - row_means[j] + grand;
        }
    }
    SymmetricMatrix::symmetrized(out)
}
