//! Unit-trace Gaussian Gram matrices, infinite-divisibility diagnostics,
//! diagonal normalization, and Hilbertian-metric embeddings.
//!
//! A nonnegative matrix is infinitely divisible when every fractional
//! Hadamard power of it stays PSD. For positive-entry matrices this is
//! equivalent to `-log A` being negative definite on the centered subspace,
//! which is the finite, exact test used here; sampling fractional powers is
//! kept as a secondary falsification route.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::spectra::{
    centered_negdef_check, clamp_tol, double_centered, eig_sym, eigenvalues_sym, hadamard_power,
    psd_check, require_positive_entries, DensityLikeMatrix, SymmetricMatrix,
};

/// Fractional powers sampled by the secondary divisibility route.
pub const DIVISIBILITY_POWERS: [f64; 4] = [0.1, 0.25, 0.5, 0.75];

/// Gaussian kernel bandwidth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelConfig {
    sigma: f64,
}

impl KernelConfig {
    pub fn new(sigma: f64) -> Result<Self> {
        if !sigma.is_finite() || sigma <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "bandwidth must be a positive real, got {sigma}"
            )));
        }
        Ok(Self { sigma })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

/// Symmetric nonnegative matrix with zero diagonal, carrying squared
/// Hilbertian distances.
#[derive(Debug, Clone)]
pub struct DistanceMatrix {
    data: Array2<f64>,
}

impl DistanceMatrix {
    /// Validates symmetry, a zero diagonal, and nonnegative entries, all up
    /// to roundoff scale; roundoff-size violations are cleaned in place.
    pub fn new(data: Array2<f64>) -> Result<Self> {
        let sym = SymmetricMatrix::new(data)?;
        let n = sym.n();
        let tol = 1e-12 * sym.max_abs().max(1.0);
        let mut data = sym.into_array();
        for i in 0..n {
            if data[[i, i]].abs() > tol {
                return Err(Error::InvalidInput(format!(
                    "distance matrix must have a zero diagonal, ({i},{i}) = {:.3e}",
                    data[[i, i]]
                )));
            }
            data[[i, i]] = 0.0;
        }
        for i in 0..n {
            for j in 0..n {
                if data[[i, j]] < -tol {
                    return Err(Error::InvalidInput(format!(
                        "distance matrix must be nonnegative, ({i},{j}) = {:.3e}",
                        data[[i, j]]
                    )));
                }
                if data[[i, j]] < 0.0 {
                    data[[i, j]] = 0.0;
                }
            }
        }
        Ok(Self { data })
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[[i, j]]
    }
}

/// Unit-trace Gaussian Gram matrix `K_ij = (1/n) exp(-|x_i - x_j|^2 / (2 s^2))`.
///
/// The diagonal is exactly `1/n`, so the matrix is unit trace by
/// construction; it is PSD and, up to the `1/n` scale, infinitely divisible.
pub fn gaussian_gram(x: &Array2<f64>, config: &KernelConfig) -> Result<DensityLikeMatrix> {
    let n = x.nrows();
    if n == 0 {
        return Err(Error::InvalidInput("feature matrix has no rows".into()));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(
            "feature matrix has non-finite entries".into(),
        ));
    }
    let denom = 2.0 * config.sigma() * config.sigma();
    let inv_n = 1.0 / n as f64;
    let mut k = Array2::zeros((n, n));
    for i in 0..n {
        k[[i, i]] = inv_n;
        for j in (i + 1)..n {
            let d2: f64 = x
                .row(i)
                .iter()
                .zip(x.row(j).iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            let v = inv_n * (-d2 / denom).exp();
            k[[i, j]] = v;
            k[[j, i]] = v;
        }
    }
    Ok(DensityLikeMatrix::unchecked(SymmetricMatrix::unchecked(k)))
}

/// Diagonal normalization `A_ij / sqrt(A_ii A_jj)`; the result has a unit
/// diagonal and inherits infinite divisibility.
pub fn normalize_id(a: &SymmetricMatrix) -> Result<SymmetricMatrix> {
    let n = a.n();
    for i in 0..n {
        if a.get(i, i) <= 0.0 {
            return Err(Error::NonPositiveEntry {
                row: i,
                col: i,
                value: a.get(i, i),
            });
        }
    }
    let inv_sqrt: Vec<f64> = (0..n).map(|i| 1.0 / a.get(i, i).sqrt()).collect();
    let mut out = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            out[[i, j]] = a.get(i, j) * inv_sqrt[i] * inv_sqrt[j];
        }
    }
    for i in 0..n {
        out[[i, i]] = 1.0;
    }
    Ok(SymmetricMatrix::symmetrized(out))
}

/// Elementwise `-ln A_ij`; requires strictly positive entries.
pub fn neg_log(a: &SymmetricMatrix) -> Result<SymmetricMatrix> {
    require_positive_entries(a)?;
    Ok(SymmetricMatrix::unchecked(a.as_array().mapv(|v| -v.ln())))
}

/// Infinite-divisibility test through the elementwise negative logarithm.
///
/// Returns true iff `-log A` passes [`centered_negdef_check`] at `tol`.
/// Nonpositive entries are a domain error, not `false`.
pub fn is_infinitely_divisible(a: &SymmetricMatrix, tol: f64) -> Result<bool> {
    let b = neg_log(a)?;
    Ok(centered_negdef_check(&b, tol))
}

/// Secondary divisibility route: samples the fractional Hadamard powers in
/// [`DIVISIBILITY_POWERS`] and reports the worst `(power, min eigenvalue)`
/// pair failing `psd_check` at `tol`, or `None` when all pass.
pub fn fractional_power_witness(a: &SymmetricMatrix, tol: f64) -> Result<Option<(f64, f64)>> {
    let mut worst: Option<(f64, f64)> = None;
    for &r in DIVISIBILITY_POWERS.iter() {
        let powered = hadamard_power(a, r)?;
        if !psd_check(&powered, tol) {
            let min = eigenvalues_sym(&powered).last().copied().unwrap_or(0.0);
            if worst.map(|(_, w)| min < w).unwrap_or(true) {
                worst = Some((r, min));
            }
        }
    }
    Ok(worst)
}

fn default_check_tol(b: &SymmetricMatrix) -> f64 {
    1e-8 * b.max_abs().max(1.0)
}

/// Squared Hilbertian distances `D_ij = B_ij - (B_ii + B_jj)/2` from a
/// centered-negative-definite matrix.
pub fn negdef_to_distances(b: &SymmetricMatrix) -> Result<DistanceMatrix> {
    if !centered_negdef_check(b, default_check_tol(b)) {
        return Err(Error::Precondition(
            "matrix is not negative definite on the centered subspace".into(),
        ));
    }
    let n = b.n();
    let mut d = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            if i != j {
                d[[i, j]] = (b.get(i, j) - 0.5 * (b.get(i, i) + b.get(j, j))).max(0.0);
            }
        }
    }
    DistanceMatrix::new(d)
}

/// Squared Hilbertian distances `D_ij = -A_ij + (A_ii + A_jj)/2` from a PSD
/// Gram matrix.
pub fn posdef_to_distances(a: &SymmetricMatrix) -> DistanceMatrix {
    let n = a.n();
    let mut d = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            if i != j {
                d[[i, j]] = (0.5 * (a.get(i, i) + a.get(j, j)) - a.get(i, j)).max(0.0);
            }
        }
    }
    DistanceMatrix {
        data: SymmetricMatrix::symmetrized(d).into_array(),
    }
}

/// Classical double-centering embedding.
///
/// Builds `G = -(1/2) J D J`, checks it is PSD up to the clamping
/// tolerance, and returns `n x k` coordinates whose pairwise squared
/// Euclidean distances reproduce `D` whenever `k` is at least the rank of
/// `G`. With `k = None` the numerical rank at threshold
/// `1e-9 * lambda_max` is used.
pub fn embed_from_distances(d: &DistanceMatrix, k: Option<usize>) -> Result<Array2<f64>> {
    let n = d.n();
    let centered = double_centered(&SymmetricMatrix::unchecked(d.as_array().clone()));
    let gram = SymmetricMatrix::unchecked(centered.as_array() * -0.5);
    let es = eig_sym(&gram);
    let lambda_max = es.max_eigenvalue().max(0.0);
    if es.min_eigenvalue() < -clamp_tol(lambda_max) {
        return Err(Error::NotHilbertian {
            min_eigenvalue: es.min_eigenvalue(),
        });
    }
    let rank = es
        .eigenvalues()
        .iter()
        .filter(|&&l| l > 1e-9 * lambda_max.max(1e-300))
        .count();
    let k = match k {
        Some(k) if k > n => {
            return Err(Error::InvalidInput(format!(
                "embedding dimension {k} exceeds the number of points {n}"
            )));
        }
        Some(k) if k >= 1 => k,
        Some(_) => {
            return Err(Error::InvalidInput(
                "embedding dimension must be at least 1".into(),
            ));
        }
        None => rank.max(1),
    };
    let mut coords = Array2::zeros((n, k));
    for c in 0..k {
        let l = es.eigenvalues()[c].max(0.0);
        let scale = l.sqrt();
        for i in 0..n {
            coords[[i, c]] = scale * es.eigenvectors()[[i, c]];
        }
    }
    Ok(coords)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    use crate::entropy::{hadamard_geometric_average, renyi_entropy, EntropyOrder};

    /// PSD with positive entries, yet not infinitely divisible: the
    /// centered negative-log test fails and so do the sampled fractional
    /// powers.
    pub(crate) fn non_id_witness() -> SymmetricMatrix {
        SymmetricMatrix::new(array![
            [8.70, 4.59, 2.95],
            [4.59, 3.15, 0.26],
            [2.95, 0.26, 3.33]
        ])
        .unwrap()
    }

    fn random_points(n: usize, d: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
        let mut x = Array2::zeros((n, d));
        for v in x.iter_mut() {
            *v = rng.sample::<f64, _>(StandardNormal);
        }
        x
    }

    #[test]
    fn gram_reference_values() {
        // identical points: rank-one all-ones over n, zero entropy
        let x = Array2::zeros((4, 2));
        let k = gaussian_gram(&x, &KernelConfig::new(1.0).unwrap()).unwrap();
        for v in k.as_array() {
            assert_abs_diff_eq!(*v, 0.25, epsilon = 1e-15);
        }
        let s = renyi_entropy(&k, EntropyOrder::new(2.0).unwrap());
        assert_abs_diff_eq!(s.bits(), 0.0, epsilon = 1e-10);

        // two points at distance 1, sigma 1: closed form
        let x = array![[0.0], [1.0]];
        let k = gaussian_gram(&x, &KernelConfig::new(1.0).unwrap()).unwrap();
        let rho = (-0.5f64).exp();
        assert_abs_diff_eq!(k.as_array()[[0, 1]], 0.5 * rho, epsilon = 1e-15);
        let eigs = eigenvalues_sym(k.base());
        assert_abs_diff_eq!(eigs[0], 0.5 * (1.0 + rho), epsilon = 1e-12);
        assert_abs_diff_eq!(eigs[1], 0.5 * (1.0 - rho), epsilon = 1e-12);

        // vanishing bandwidth pushes the Gram to I/n and the entropy to log2 n
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let x = random_points(8, 3, &mut rng);
        let k = gaussian_gram(&x, &KernelConfig::new(1e-3).unwrap()).unwrap();
        let s = renyi_entropy(&k, EntropyOrder::new(1.01).unwrap());
        assert_abs_diff_eq!(s.bits(), 3.0, epsilon = 1e-6);

        assert!(KernelConfig::new(0.0).is_err());
        assert!(KernelConfig::new(-1.0).is_err());
    }

    #[test]
    fn normalize_cases() {
        let unit = SymmetricMatrix::new(array![[1.0, 0.3], [0.3, 1.0]]).unwrap();
        let out = normalize_id(&unit).unwrap();
        assert_abs_diff_eq!(out.get(0, 1), 0.3, epsilon = 1e-15);

        let a = SymmetricMatrix::new(array![[4.0, 3.0], [3.0, 9.0]]).unwrap();
        let out = normalize_id(&a).unwrap();
        assert_abs_diff_eq!(out.get(0, 0), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(out.get(1, 1), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(out.get(0, 1), 0.5, epsilon = 1e-15);

        // n * gaussian gram already has a unit diagonal
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let x = random_points(5, 2, &mut rng);
        let k = gaussian_gram(&x, &KernelConfig::new(0.8).unwrap()).unwrap();
        let scaled = SymmetricMatrix::unchecked(k.as_array() * 5.0);
        let out = normalize_id(&scaled).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                assert!((out.get(i, j) - scaled.get(i, j)).abs() <= 1e-14);
            }
        }

        let bad = SymmetricMatrix::new(array![[0.0, 0.0], [0.0, 1.0]]).unwrap();
        assert!(normalize_id(&bad).is_err());
    }

    #[test]
    fn normalize_is_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..10 {
            let x = random_points(6, 2, &mut rng);
            let k = gaussian_gram(&x, &KernelConfig::new(1.3).unwrap()).unwrap();
            // scale rows/cols to give a non-unit diagonal
            let mut m = k.as_array().clone();
            let scales: Vec<f64> = (0..6).map(|_| rng.random_range(0.5..2.0)).collect();
            for i in 0..6 {
                for j in 0..6 {
                    m[[i, j]] *= scales[i] * scales[j];
                }
            }
            let a = SymmetricMatrix::symmetrized(m);
            let once = normalize_id(&a).unwrap();
            let twice = normalize_id(&once).unwrap();
            for i in 0..6 {
                for j in 0..6 {
                    assert!((once.get(i, j) - twice.get(i, j)).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn divisibility_cases() {
        // all-ones: -log is the zero matrix
        assert!(is_infinitely_divisible(&SymmetricMatrix::ones(4), 1e-10).unwrap());

        // gaussian grams are infinitely divisible at any bandwidth; data is
        // scaled so the smallest kernel entries stay above underflow
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for sigma in [0.1, 1.0, 10.0] {
            let x = random_points(7, 3, &mut rng) * 0.3;
            let k = gaussian_gram(&x, &KernelConfig::new(sigma).unwrap()).unwrap();
            assert!(is_infinitely_divisible(k.base(), 1e-8).unwrap());
            assert!(fractional_power_witness(k.base(), 1e-8).unwrap().is_none());
        }

        // witness: PSD, positive entries, fails the log test and at least
        // one sampled power
        let w = non_id_witness();
        assert!(psd_check(&w, 1e-10));
        assert!(!is_infinitely_divisible(&w, 1e-8).unwrap());
        let (r, min_eig) = fractional_power_witness(&w, 1e-8).unwrap().unwrap();
        assert!(DIVISIBILITY_POWERS.contains(&r));
        assert!(min_eig < -1e-8);

        // nonpositive entries are a domain error, not false
        let zeroed = SymmetricMatrix::new(array![[1.0, 0.0], [0.0, 1.0]]).unwrap();
        assert!(matches!(
            is_infinitely_divisible(&zeroed, 1e-8),
            Err(Error::NonPositiveEntry { .. })
        ));
    }

    #[test]
    fn exp_neg_log_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let x = random_points(6, 2, &mut rng);
        let k = gaussian_gram(&x, &KernelConfig::new(1.1).unwrap()).unwrap();
        let a = normalize_id(&SymmetricMatrix::unchecked(k.as_array() * 6.0)).unwrap();
        let b = neg_log(&a).unwrap();
        let back = b.as_array().mapv(|v| (-v).exp());
        for i in 0..6 {
            for j in 0..6 {
                assert!((back[[i, j]] - a.get(i, j)).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn distances_from_negdef() {
        let zeros = SymmetricMatrix::unchecked(Array2::zeros((3, 3)));
        let d = negdef_to_distances(&zeros).unwrap();
        assert!(d.as_array().iter().all(|&v| v == 0.0));

        // squared euclidean distances pass through unchanged
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        let x = random_points(6, 3, &mut rng);
        let mut b = Array2::zeros((6, 6));
        for i in 0..6 {
            for j in 0..6 {
                b[[i, j]] = x
                    .row(i)
                    .iter()
                    .zip(x.row(j).iter())
                    .map(|(a, c)| (a - c) * (a - c))
                    .sum();
            }
        }
        let b = SymmetricMatrix::symmetrized(b);
        let d = negdef_to_distances(&b).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                assert!((d.get(i, j) - b.get(i, j)).abs() <= 1e-12);
            }
        }

        // -log of a normalized gaussian gram recovers scaled squared distances
        let sigma = 1.7;
        let k = gaussian_gram(&x, &KernelConfig::new(sigma).unwrap()).unwrap();
        let a = normalize_id(&SymmetricMatrix::unchecked(k.as_array() * 6.0)).unwrap();
        let d = negdef_to_distances(&neg_log(&a).unwrap()).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let want = b.get(i, j) / (2.0 * sigma * sigma);
                assert!((d.get(i, j) - want).abs() <= 1e-10);
            }
        }

        // one positive off-diagonal pair: J B J has a positive eigenvalue
        let mut arr = Array2::zeros((3, 3));
        arr[[0, 1]] = 1.0;
        arr[[1, 0]] = 1.0;
        assert!(negdef_to_distances(&SymmetricMatrix::unchecked(arr)).is_err());
    }

    #[test]
    fn distances_from_posdef() {
        let d = posdef_to_distances(&SymmetricMatrix::identity(3));
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 0.0 } else { 1.0 };
                assert_abs_diff_eq!(d.get(i, j), want, epsilon = 1e-15);
            }
        }
        let d = posdef_to_distances(&SymmetricMatrix::ones(3));
        assert!(d.as_array().iter().all(|&v| v == 0.0));

        // centered negative definiteness of the induced distances
        let mut rng = ChaCha8Rng::seed_from_u64(26);
        for _ in 0..10 {
            let mut w = Array2::zeros((5, 5));
            for v in w.iter_mut() {
                *v = rng.sample::<f64, _>(StandardNormal);
            }
            let a = SymmetricMatrix::symmetrized(w.dot(&w.t()));
            let d = posdef_to_distances(&a);
            assert!(centered_negdef_check(
                &SymmetricMatrix::unchecked(d.as_array().clone()),
                1e-8 * a.max_abs().max(1.0)
            ));
        }
    }

    #[test]
    fn embedding_round_trips() {
        // two points at squared distance 4 embed at distance 2
        let d = DistanceMatrix::new(array![[0.0, 4.0], [4.0, 0.0]]).unwrap();
        let y = embed_from_distances(&d, None).unwrap();
        let dist: f64 = y
            .row(0)
            .iter()
            .zip(y.row(1).iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        assert_abs_diff_eq!(dist, 2.0, epsilon = 1e-10);

        // all-zero distances collapse to one point
        let d = DistanceMatrix::new(Array2::zeros((4, 4))).unwrap();
        let y = embed_from_distances(&d, None).unwrap();
        for r in 1..4 {
            for c in 0..y.ncols() {
                assert!((y[[r, c]] - y[[0, c]]).abs() <= 1e-12);
            }
        }

        // gaussian-gram distances round trip within 1e-6
        let mut rng = ChaCha8Rng::seed_from_u64(27);
        for _ in 0..5 {
            let x = random_points(7, 3, &mut rng);
            let k = gaussian_gram(&x, &KernelConfig::new(1.4).unwrap()).unwrap();
            let a = normalize_id(&SymmetricMatrix::unchecked(k.as_array() * 7.0)).unwrap();
            let d = negdef_to_distances(&neg_log(&a).unwrap()).unwrap();
            let y = embed_from_distances(&d, None).unwrap();
            for i in 0..7 {
                for j in 0..7 {
                    let got: f64 = y
                        .row(i)
                        .iter()
                        .zip(y.row(j).iter())
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum();
                    assert!((got - d.get(i, j)).abs() <= 1e-6);
                }
            }
        }

        assert!(embed_from_distances(&d, Some(9)).is_err());
        assert!(embed_from_distances(&d, Some(0)).is_err());
    }

    #[test]
    fn equal_normalizations_give_equal_embeddings() {
        // two constructions differing by a diagonal congruence share the
        // normalization, hence distances and centered Grams
        let mut rng = ChaCha8Rng::seed_from_u64(28);
        let x = random_points(6, 2, &mut rng);
        let k = gaussian_gram(&x, &KernelConfig::new(1.2).unwrap()).unwrap();
        let a1 = SymmetricMatrix::unchecked(k.as_array() * 6.0);
        let scales: Vec<f64> = (0..6).map(|_| rng.random_range(0.5..2.0)).collect();
        let mut m = a1.as_array().clone();
        for i in 0..6 {
            for j in 0..6 {
                m[[i, j]] *= scales[i] * scales[j];
            }
        }
        let a2 = SymmetricMatrix::symmetrized(m);

        let n1 = normalize_id(&a1).unwrap();
        let n2 = normalize_id(&a2).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                assert!((n1.get(i, j) - n2.get(i, j)).abs() <= 1e-12);
            }
        }

        let d1 = negdef_to_distances(&neg_log(&n1).unwrap()).unwrap();
        let d2 = negdef_to_distances(&neg_log(&n2).unwrap()).unwrap();
        let g1 = double_centered(&SymmetricMatrix::unchecked(d1.as_array().clone()));
        let g2 = double_centered(&SymmetricMatrix::unchecked(d2.as_array().clone()));
        for i in 0..6 {
            for j in 0..6 {
                assert!((g1.get(i, j) - g2.get(i, j)).abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn geometric_average_of_divisible_pairs_stays_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..5 {
            let x = random_points(6, 2, &mut rng);
            let y = random_points(6, 3, &mut rng);
            let a = gaussian_gram(&x, &KernelConfig::new(0.9).unwrap()).unwrap();
            let b = gaussian_gram(&y, &KernelConfig::new(2.0).unwrap()).unwrap();
            assert!(is_infinitely_divisible(a.base(), 1e-8).unwrap());
            assert!(is_infinitely_divisible(b.base(), 1e-8).unwrap());
            for r in [0.0, 0.25, 0.5, 0.75, 1.0] {
                let avg = hadamard_geometric_average(a.base(), b.base(), r).unwrap();
                assert!(psd_check(&avg, 1e-8), "r={r}");
            }
        }
    }
}
