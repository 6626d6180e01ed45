//! Matrix-based Renyi alpha-entropy on unit-trace PSD matrices, joint and
//! conditional entropies built from Hadamard products, and spectral
//! gradients.
//!
//! Entropy values are reported in bits. The spectral gradient
//! [`entropy_gradient`] is the classical closed form
//! `alpha/((1-alpha) tr(A^alpha)) U L^(alpha-1) U^T`, which is the exact
//! Frechet gradient of the natural-log entropy `(1/(1-alpha)) ln tr(A^alpha)`;
//! derivatives of the bits-valued functions carry an extra `1/ln 2`.



use crate::error::{Error, Result};
use crate::spectra::{
    clamp_tol, eig_sym, eigenvalues_sym, hadamard, hadamard_power, DensityLikeMatrix,
    EigenSystem, SymmetricMatrix,
};

/// Orders closer to 1 than this are rejected; the formula is singular there.
const ALPHA_ONE_GAP: f64 = 1e-6;

/// Below this, `tr(A^alpha)` is treated as degenerate.
const DEGENERATE_TRACE: f64 = 1e-14;

/// For `alpha < 1`, eigenvalues below this floor make `L^(alpha-1)` blow up
/// and are rejected rather than regularized.
const GRAD_FLOOR: f64 = 1e-12;

/// Diagonal entries must match `1/n` within this tolerance where an
/// operation requires a uniform diagonal.
const UNIFORM_DIAG_TOL: f64 = 1e-8;

/// Entropy order `alpha > 0`, `alpha != 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyOrder {
    alpha: f64,
}

impl EntropyOrder {
    pub fn new(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() || alpha <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "entropy order must be a positive real, got {alpha}"
            )));
        }
        if (alpha - 1.0).abs() < ALPHA_ONE_GAP {
            return Err(Error::InvalidInput(format!(
                "entropy order must stay away from 1 (|alpha - 1| >= {ALPHA_ONE_GAP}), got {alpha}"
            )));
        }
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

/// Entropy measured in bits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyValue {
    bits: f64,
}

impl EntropyValue {
    pub(crate) fn new(bits: f64) -> Self {
        Self { bits }
    }

    pub fn bits(&self) -> f64 {
        self.bits
    }
}

/// `(1/(1-alpha)) log2 sum lambda_i^alpha` over eigenvalues clamped at zero.
pub(crate) fn renyi_from_eigenvalues(eigs: &[f64], alpha: f64) -> f64 {
    let total: f64 = eigs
        .iter()
        .map(|&l| if l > 0.0 { l.powf(alpha) } else { 0.0 })
        .sum();
    total.log2() / (1.0 - alpha)
}

/// Renyi alpha-entropy `S_alpha(A) = (1/(1-alpha)) log2 tr(A^alpha)` in bits.
///
/// The result lies in `[0, log2 n]` for an `n x n` unit-trace PSD input.
pub fn renyi_entropy(a: &DensityLikeMatrix, order: EntropyOrder) -> EntropyValue {
    let eigs = eigenvalues_sym(a.base());
    let bits = renyi_from_eigenvalues(&eigs, order.alpha()).max(0.0);
    EntropyValue::new(bits)
}

/// The same spectral functional without the unit-trace requirement.
///
/// Accepts any PSD matrix (up to the clamping tolerance); used for
/// sub-unit-trace scalings and as the reference function for
/// finite-difference checks of [`entropy_gradient`].
pub fn renyi_entropy_raw(a: &SymmetricMatrix, order: EntropyOrder) -> Result<f64> {
    let eigs = eigenvalues_sym(a);
    let top = eigs.first().copied().unwrap_or(0.0);
    let min = eigs.last().copied().unwrap_or(0.0);
    if min < -clamp_tol(top) {
        return Err(Error::NotPsd {
            min_eigenvalue: min,
        });
    }
    let total: f64 = eigs
        .iter()
        .map(|&l| if l > 0.0 { l.powf(order.alpha()) } else { 0.0 })
        .sum();
    if total <= DEGENERATE_TRACE {
        return Err(Error::Degenerate(format!(
            "tr(A^alpha) = {total:.3e} is numerically zero"
        )));
    }
    Ok(total.log2() / (1.0 - order.alpha()))
}

/// Joint entropy `S_alpha((A o B) / tr(A o B))`.
pub fn joint_entropy(
    a: &DensityLikeMatrix,
    b: &DensityLikeMatrix,
    order: EntropyOrder,
) -> Result<EntropyValue> {
    let prod = hadamard(a.base(), b.base())?;
    let tr = prod.trace();
    if tr <= DEGENERATE_TRACE {
        return Err(Error::Degenerate(format!(
            "tr(A o B) = {tr:.3e}; joint representation is degenerate"
        )));
    }
    let normalized = SymmetricMatrix::unchecked(prod.as_array() / tr);
    Ok(renyi_entropy(
        &DensityLikeMatrix::unchecked(normalized),
        order,
    ))
}

/// Conditional entropy `S_alpha(A|B) = S_alpha((A o B)/tr(A o B)) - S_alpha(B)`.
///
/// Requires `A_ii = 1/n` and nonnegative entries in both arguments; under
/// those conditions the result is nonnegative up to roundoff.
pub fn conditional_entropy(
    a: &DensityLikeMatrix,
    b: &DensityLikeMatrix,
    order: EntropyOrder,
) -> Result<EntropyValue> {
    if a.n() != b.n() {
        return Err(Error::DimensionMismatch {
            expected: a.n(),
            found: b.n(),
        });
    }
    let n = a.n();
    let uniform = 1.0 / n as f64;
    for i in 0..n {
        let d = a.base().get(i, i);
        if (d - uniform).abs() > UNIFORM_DIAG_TOL {
            return Err(Error::Precondition(format!(
                "first argument must have diagonal 1/n = {uniform:.6e}, entry ({i},{i}) is {d:.6e}"
            )));
        }
    }
    require_nonnegative_entries(a.base(), "first argument")?;
    require_nonnegative_entries(b.base(), "second argument")?;
    let joint = joint_entropy(a, b, order)?;
    let marginal = renyi_entropy(b, order);
    Ok(EntropyValue::new(joint.bits() - marginal.bits()))
}

fn require_nonnegative_entries(m: &SymmetricMatrix, what: &str) -> Result<()> {
    for i in 0..m.n() {
        for j in 0..m.n() {
            if m.get(i, j) < -1e-12 {
                return Err(Error::Precondition(format!(
                    "{what} must have nonnegative entries, ({i},{j}) is {:.3e}",
                    m.get(i, j)
                )));
            }
        }
    }
    Ok(())
}

/// Weighted geometric average `A^(o r) o B^(o (1-r))` for `r` in `[0, 1]`.
///
/// Both inputs must have strictly positive entries, unit trace and matching
/// diagonals, so the average again has unit trace. Positive
/// semidefiniteness of the result is guaranteed only when both inputs are
/// infinitely divisible.
pub fn hadamard_geometric_average(
    a: &SymmetricMatrix,
    b: &SymmetricMatrix,
    r: f64,
) -> Result<SymmetricMatrix> {
    if a.n() != b.n() {
        return Err(Error::DimensionMismatch {
            expected: a.n(),
            found: b.n(),
        });
    }
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::InvalidInput(format!(
            "geometric-average weight must lie in [0, 1], got {r}"
        )));
    }
    if (a.trace() - 1.0).abs() > UNIFORM_DIAG_TOL || (b.trace() - 1.0).abs() > UNIFORM_DIAG_TOL {
        return Err(Error::Precondition(
            "both inputs must have unit trace".into(),
        ));
    }
    for i in 0..a.n() {
        if (a.get(i, i) - b.get(i, i)).abs() > UNIFORM_DIAG_TOL {
            return Err(Error::Precondition(format!(
                "diagonals must match for the average to stay normalized, entry {i} differs"
            )));
        }
    }
    let left = hadamard_power(a, r)?;
    let right = hadamard_power(b, 1.0 - r)?;
    hadamard(&left, &right)
}

/// Spectral gradient `alpha/((1-alpha) tr(A^alpha)) U L^(alpha-1) U^T`.
///
/// `A` must be PSD up to the clamping tolerance. For `alpha > 1` zero
/// eigenvalues simply contribute nothing; for `alpha < 1` the power
/// `L^(alpha-1)` diverges at zero, so any eigenvalue below `1e-12` is an
/// error.
pub fn entropy_gradient(a: &SymmetricMatrix, order: EntropyOrder) -> Result<SymmetricMatrix> {
    let es = eig_sym(a);
    gradient_from_eigensystem(&es, order, None)
}

/// Same as [`entropy_gradient`] but keeping only the `m` leading eigenpairs
/// of the outer product; for `alpha > 1` this is the Frobenius-optimal
/// rank-`m` approximation of the full gradient.
pub fn entropy_gradient_truncated(
    a: &SymmetricMatrix,
    order: EntropyOrder,
    m: usize,
) -> Result<SymmetricMatrix> {
    if m == 0 || m > a.n() {
        return Err(Error::InvalidInput(format!(
            "truncation rank must satisfy 1 <= m <= n = {}, got {m}",
            a.n()
        )));
    }
    let es = eig_sym(a);
    gradient_from_eigensystem(&es, order, Some(m))
}

/// Shared gradient core; `m = None` keeps the full spectrum. The
/// normalizing trace always uses the full spectrum.
pub(crate) fn gradient_from_eigensystem(
    es: &EigenSystem,
    order: EntropyOrder,
    m: Option<usize>,
) -> Result<SymmetricMatrix> {
    let alpha = order.alpha();
    let tol = clamp_tol(es.max_eigenvalue());
    if es.min_eigenvalue() < -tol {
        return Err(Error::NotPsd {
            min_eigenvalue: es.min_eigenvalue(),
        });
    }
    let clamped: Vec<f64> = es
        .eigenvalues()
        .iter()
        .map(|&l| if l < 0.0 { 0.0 } else { l })
        .collect();
    if alpha < 1.0 {
        if let Some(&min) = clamped.iter().find(|l| **l < GRAD_FLOOR) {
            return Err(Error::Precondition(format!(
                "alpha < 1 requires eigenvalues >= {GRAD_FLOOR:.0e}, found {min:.3e}"
            )));
        }
    }
    let total: f64 = clamped.iter().map(|&l| l.powf(alpha)).sum();
    if total <= DEGENERATE_TRACE {
        return Err(Error::Degenerate(format!(
            "tr(A^alpha) = {total:.3e} is numerically zero"
        )));
    }
    let scale = alpha / ((1.0 - alpha) * total);
    let keep = m.unwrap_or(es.n());
    let powered = es.apply_leading(
        |l| {
            let l = if l < 0.0 { 0.0 } else { l };
            if l == 0.0 {
                0.0
            } else {
                l.powf(alpha - 1.0)
            }
        },
        keep,
    );
    Ok(SymmetricMatrix::unchecked(powered.as_array() * scale))
}

/// Second-order entropy through the trace identity: `-log2 tr(K K)`.
///
/// Agrees with [`renyi_entropy`] at order 2 up to roundoff, without an
/// eigendecomposition.
pub fn second_order_entropy_trace(k: &DensityLikeMatrix) -> EntropyValue {
    let frob_sq: f64 = k.as_array().iter().map(|&v| v * v).sum();
    EntropyValue::new((-frob_sq.log2()).max(0.0))
}
