//! Experiment harness: kNN classification, stratified two-fold
//! cross-validation with repeated runs, Euclidean and inverse-covariance
//! baselines, feature standardization, the bimodal synthetic generator, and
//! the entropy-order study.
//!
//! All randomness flows from a single seed; each run derives an independent
//! stream from `(seed, run index)` so parallel and serial execution give
//! identical results.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::ceml::{train, Dataset, MetricModel, TrainConfig};
use crate::error::{Error, Result};
use crate::spectra::{eig_sym, SymmetricMatrix};

/// Cross-validation outcome.
#[derive(Debug, Clone, Serialize)]
pub struct CVResult {
    pub mean_error: f64,
    pub per_run_errors: Vec<f64>,
    pub runs: usize,
    pub folds: usize,
}

impl CVResult {
    fn from_errors(per_run_errors: Vec<f64>, folds: usize) -> Self {
        let runs = per_run_errors.len();
        let mean_error = per_run_errors.iter().sum::<f64>() / runs.max(1) as f64;
        Self {
            mean_error,
            per_run_errors,
            runs,
            folds,
        }
    }
}

/// Metric under which kNN distances are computed.
#[derive(Debug, Clone, Copy)]
pub enum KnnMetric<'a> {
    /// Plain Euclidean distance on the raw features.
    Identity,
    /// Euclidean distance after projecting through `A` (columns = output
    /// dimensions), i.e. the Mahalanobis distance under `A A^T`.
    Projection(&'a Array2<f64>),
}

impl<'a> From<&'a MetricModel> for KnnMetric<'a> {
    fn from(model: &'a MetricModel) -> Self {
        KnnMetric::Projection(model.projection())
    }
}

/// Majority-vote k-nearest-neighbor classification.
///
/// Ties are broken by the smaller summed distance of the tied label's
/// neighbors, then by the lower label id; neighbor order itself is fixed by
/// (distance, training index).
pub fn knn_classify(
    train_x: &Array2<f64>,
    train_labels: &[usize],
    test_x: &Array2<f64>,
    k: usize,
    metric: KnnMetric,
) -> Result<Vec<usize>> {
    let n = train_x.nrows();
    if n == 0 {
        return Err(Error::InvalidInput("training set is empty".into()));
    }
    if n != train_labels.len() {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: train_labels.len(),
        });
    }
    if k == 0 || k > n {
        return Err(Error::InvalidInput(format!(
            "k must satisfy 1 <= k <= {n}, got {k}"
        )));
    }
    let (tr, te) = match metric {
        KnnMetric::Identity => {
            if train_x.ncols() != test_x.ncols() {
                return Err(Error::DimensionMismatch {
                    expected: train_x.ncols(),
                    found: test_x.ncols(),
                });
            }
            (train_x.to_owned(), test_x.to_owned())
        }
        KnnMetric::Projection(a) => {
            if train_x.ncols() != a.nrows() || test_x.ncols() != a.nrows() {
                return Err(Error::DimensionMismatch {
                    expected: a.nrows(),
                    found: train_x.ncols(),
                });
            }
            (train_x.dot(a), test_x.dot(a))
        }
    };

    let mut out = Vec::with_capacity(te.nrows());
    let mut order: Vec<usize> = Vec::with_capacity(n);
    for q in 0..te.nrows() {
        let query = te.row(q);
        let dists: Vec<f64> = (0..n)
            .map(|i| {
                tr.row(i)
                    .iter()
                    .zip(query.iter())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum()
            })
            .collect();
        order.clear();
        order.extend(0..n);
        order.sort_by(|&i, &j| dists[i].total_cmp(&dists[j]).then(i.cmp(&j)));

        // (count, summed distance) per candidate label among the k nearest
        let mut votes: Vec<(usize, usize, f64)> = Vec::new();
        for &i in order.iter().take(k) {
            let label = train_labels[i];
            match votes.iter_mut().find(|(l, _, _)| *l == label) {
                Some(entry) => {
                    entry.1 += 1;
                    entry.2 += dists[i];
                }
                None => votes.push((label, 1, dists[i])),
            }
        }
        votes.sort_by(|a, b| {
            b.1.cmp(&a.1)
                .then(a.2.total_cmp(&b.2))
                .then(a.0.cmp(&b.0))
        });
        out.push(votes[0].0);
    }
    Ok(out)
}

/// Centers every feature and scales it to unit variance; zero-variance
/// features are dropped and their indices reported.
pub fn standardize(data: &Dataset) -> Result<(Dataset, Vec<usize>)> {
    let n = data.n() as f64;
    let x = data.features();
    let mut keep = Vec::new();
    let mut dropped = Vec::new();
    let mut stats = Vec::new();
    for j in 0..data.dim() {
        let col = x.column(j);
        let mean = col.sum() / n;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        if var <= 1e-12 * (1.0 + mean * mean) {
            dropped.push(j);
        } else {
            keep.push(j);
            stats.push((mean, var.sqrt()));
        }
    }
    if keep.is_empty() {
        return Err(Error::InvalidInput(
            "all features have zero variance".into(),
        ));
    }
    let mut out = Array2::zeros((data.n(), keep.len()));
    for (c, (&j, &(mean, sd))) in keep.iter().zip(stats.iter()).enumerate() {
        for i in 0..data.n() {
            out[[i, c]] = (x[[i, j]] - mean) / sd;
        }
    }
    Ok((Dataset::new(out, data.labels().to_vec())?, dropped))
}

/// splitmix64; derives child seeds for (run, fold) substreams.
fn mix_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9e3779b97f4a7c15);
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

fn derived_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Shuffles each class and deals round-robin, preserving class proportions
/// within one sample per fold.
fn stratified_folds(labels: &[usize], folds: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Vec<usize>>> {
    let mut classes: Vec<usize> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let mut out = vec![Vec::new(); folds];
    for c in classes {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        if members.len() < folds {
            return Err(Error::InvalidInput(format!(
                "class {c} has {} members, needs at least {folds} for stratified {folds}-fold splits",
                members.len()
            )));
        }
        members.shuffle(rng);
        for (pos, i) in members.into_iter().enumerate() {
            out[pos % folds].push(i);
        }
    }
    for f in out.iter_mut() {
        f.sort_unstable();
    }
    Ok(out)
}

/// Shared CV protocol: per run, split stratified; for each fold, fit the
/// metric on that fold alone and test on the complement; the run error is
/// the mean over folds. Standardization happens once up front.
fn cross_validate_with<F>(
    data: &Dataset,
    folds: usize,
    runs: usize,
    k: usize,
    seed: u64,
    fit: F,
) -> Result<CVResult>
where
    F: Fn(&Dataset, u64) -> Result<Option<Array2<f64>>> + Sync,
{
    if folds < 2 {
        return Err(Error::InvalidConfig("folds must be at least 2".into()));
    }
    if runs == 0 {
        return Err(Error::InvalidConfig("runs must be at least 1".into()));
    }
    let (data, _) = standardize(data)?;

    let mut results: Vec<(usize, Result<f64>)> = (0..runs)
        .into_par_iter()
        .map(|run| {
            let run_result = (|| {
                let mut rng = derived_rng(seed, run as u64);
                let fold_idx = stratified_folds(data.labels(), folds, &mut rng)?;
                let mut fold_errors = Vec::with_capacity(folds);
                for (f, trn_idx) in fold_idx.iter().enumerate() {
                    let tst_idx: Vec<usize> = (0..data.n())
                        .filter(|i| !trn_idx.contains(i))
                        .collect();
                    let trn = data.subset(trn_idx)?;
                    let tst = data.subset(&tst_idx)?;
                    let projection = fit(&trn, mix_seed(seed, (run * folds + f) as u64))?;
                    let metric = match &projection {
                        Some(a) => KnnMetric::Projection(a),
                        None => KnnMetric::Identity,
                    };
                    let predicted =
                        knn_classify(trn.features(), trn.labels(), tst.features(), k, metric)?;
                    let wrong = predicted
                        .iter()
                        .zip(tst.labels())
                        .filter(|(p, t)| p != t)
                        .count();
                    fold_errors.push(wrong as f64 / tst.n() as f64);
                }
                Ok(fold_errors.iter().sum::<f64>() / folds as f64)
            })();
            (run, run_result)
        })
        .collect();

    results.sort_by_key(|(run, _)| *run);
    let mut per_run = Vec::with_capacity(runs);
    for (_, r) in results {
        per_run.push(r?);
    }
    Ok(CVResult::from_errors(per_run, folds))
}

/// Cross-validated CEML: the metric is trained on each training fold with
/// a fold-specific derived seed.
pub fn cross_validate(
    data: &Dataset,
    config: &TrainConfig,
    folds: usize,
    runs: usize,
    k: usize,
) -> Result<CVResult> {
    config.validate()?;
    cross_validate_with(data, folds, runs, k, config.seed, |trn, fold_seed| {
        let mut cfg = config.clone();
        cfg.seed = fold_seed;
        let (model, _) = train(trn, &cfg)?;
        Ok(Some(model.projection().clone()))
    })
}

/// Plain Euclidean distance on standardized features.
pub fn baseline_euclidean(
    data: &Dataset,
    folds: usize,
    runs: usize,
    k: usize,
    seed: u64,
) -> Result<CVResult> {
    cross_validate_with(data, folds, runs, k, seed, |_, _| Ok(None))
}

/// Mahalanobis distance under the inverse covariance computed on each
/// training fold; a ridge of `1e-6 tr(S)/d` is added whenever the
/// covariance is numerically singular.
pub fn baseline_inverse_covariance(
    data: &Dataset,
    folds: usize,
    runs: usize,
    k: usize,
    seed: u64,
) -> Result<CVResult> {
    cross_validate_with(data, folds, runs, k, seed, |trn, _| {
        Ok(Some(inverse_sqrt_covariance(trn.features())))
    })
}

/// `S^(-1/2)` through the eigendecomposition of the population covariance.
fn inverse_sqrt_covariance(x: &Array2<f64>) -> Array2<f64> {
    let n = x.nrows() as f64;
    let d = x.ncols();
    let means: Vec<f64> = (0..d).map(|j| x.column(j).sum() / n).collect();
    let mut cov = Array2::zeros((d, d));
    for i in 0..d {
        for j in i..d {
            let mut acc = 0.0;
            for r in 0..x.nrows() {
                acc += (x[[r, i]] - means[i]) * (x[[r, j]] - means[j]);
            }
            let v = acc / n;
            cov[[i, j]] = v;
            cov[[j, i]] = v;
        }
    }
    let sym = SymmetricMatrix::symmetrized(cov);
    let mut es = eig_sym(&sym);
    let mut ridge = 1e-6 * sym.trace().max(1e-12) / d as f64;
    let floor = 1e-12 * es.max_eigenvalue().max(1e-12);
    while es.min_eigenvalue() <= floor {
        let bumped = SymmetricMatrix::unchecked(sym.as_array() + &(Array2::<f64>::eye(d) * ridge));
        es = eig_sym(&bumped);
        ridge *= 10.0;
    }
    es.apply(|l| 1.0 / l.sqrt()).into_array()
}

/// Parameters of the two-class bimodal generator.
///
/// Horizontally, every class puts `mode_count` modes on a shared grid with
/// spacing `mode_separation`, slots alternating between the classes, so
/// nearest modes always belong to opposite classes; the horizontal scatter
/// within a mode is `horizontal_jitter`. Vertically the classes are unit
/// variance Gaussians with means `class_gap` apart. Noise is standardized
/// per mode and per class so the realized moments match the nominal ones
/// exactly.
#[derive(Debug, Clone, Serialize)]
pub struct SyntheticSpec {
    pub n_per_class: usize,
    pub mode_count: usize,
    pub mode_separation: f64,
    pub class_gap: f64,
    pub horizontal_jitter: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n_per_class: 40,
            mode_count: 2,
            mode_separation: 2.0,
            class_gap: 1.2,
            horizontal_jitter: 0.3,
            seed: 12345,
        }
    }
}

impl SyntheticSpec {
    fn validate(&self) -> Result<()> {
        if self.mode_count == 0 {
            return Err(Error::InvalidConfig("mode_count must be at least 1".into()));
        }
        if self.n_per_class < 2 * self.mode_count {
            return Err(Error::InvalidConfig(format!(
                "n_per_class must be at least 2 * mode_count = {}",
                2 * self.mode_count
            )));
        }
        if !self.mode_separation.is_finite() || self.mode_separation <= 0.0 {
            return Err(Error::InvalidConfig(
                "mode_separation must be positive".into(),
            ));
        }
        if !self.class_gap.is_finite() || self.class_gap < 0.0 {
            return Err(Error::InvalidConfig("class_gap must be nonnegative".into()));
        }
        if !self.horizontal_jitter.is_finite() || self.horizontal_jitter < 0.0 {
            return Err(Error::InvalidConfig(
                "horizontal_jitter must be nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// Draws standard normals and rescales them to zero mean, unit variance.
fn standardized_noise(len: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut v: Vec<f64> = (0..len).map(|_| StandardNormal.sample(rng)).collect();
    let mean = v.iter().sum::<f64>() / len as f64;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / len as f64;
    let sd = var.sqrt().max(1e-300);
    v.iter_mut().for_each(|x| *x = (*x - mean) / sd);
    v
}

/// Two-class 2-D dataset: classes well separated but multimodal along the
/// horizontal axis, unimodal but overlapping along the vertical axis.
pub fn synth_bimodal(spec: &SyntheticSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n_total = 2 * spec.n_per_class;
    let mut features = Array2::zeros((n_total, 2));
    let mut labels = Vec::with_capacity(n_total);

    // shared mode grid: slot s at mode_separation * (s - (slots-1)/2),
    // class 0 on even slots, class 1 on odd
    let slots = 2 * spec.mode_count;
    let center = (slots - 1) as f64 / 2.0;
    for class in 0..2usize {
        let offset = class * spec.n_per_class;
        let vertical_mean = (class as f64 - 0.5) * spec.class_gap;
        let vertical = standardized_noise(spec.n_per_class, &mut rng);

        // round-robin assignment of samples to the class's modes
        for mode in 0..spec.mode_count {
            let members: Vec<usize> = (0..spec.n_per_class)
                .filter(|i| i % spec.mode_count == mode)
                .collect();
            let slot = 2 * mode + class;
            let position = spec.mode_separation * (slot as f64 - center);
            let jitter = standardized_noise(members.len(), &mut rng);
            for (j, &i) in members.iter().enumerate() {
                features[[offset + i, 0]] = position + spec.horizontal_jitter * jitter[j];
            }
        }
        for i in 0..spec.n_per_class {
            features[[offset + i, 1]] = vertical_mean + vertical[i];
        }
        labels.extend(std::iter::repeat(class).take(spec.n_per_class));
    }
    Dataset::new(features, labels)
}

/// Angle of a 2-D direction against the horizontal axis, in `[0, 90]`
/// degrees.
pub fn direction_angle(a: &Array2<f64>) -> Result<f64> {
    if a.nrows() != 2 || a.ncols() != 1 {
        return Err(Error::InvalidInput(format!(
            "direction angle needs a 2x1 projection, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let (x, y) = (a[[0, 0]], a[[1, 0]]);
    if x == 0.0 && y == 0.0 {
        return Err(Error::Degenerate("zero direction vector".into()));
    }
    Ok(y.abs().atan2(x.abs()).to_degrees())
}

/// A direction counts as vertical from 45 degrees on.
pub fn is_vertical(angle_degrees: f64) -> bool {
    angle_degrees >= 45.0
}

/// One row of the entropy-order study.
#[derive(Debug, Clone, Serialize)]
pub struct AlphaStudyRow {
    pub alpha: f64,
    pub horizontal: usize,
    pub vertical: usize,
    pub angles: Vec<f64>,
}

/// Repeated 1-D metric learning on a fixed dataset, counting whether the
/// learned direction lands nearer the horizontal or the vertical axis.
///
/// Run `r` of every order uses the derived seed `mix(base.seed, r)`, so the
/// initializations are shared across orders and runs may execute in
/// parallel.
pub fn alpha_study(
    data: &Dataset,
    alphas: &[f64],
    repeats: usize,
    base: &TrainConfig,
) -> Result<Vec<AlphaStudyRow>> {
    if repeats == 0 {
        return Err(Error::InvalidConfig("repeats must be at least 1".into()));
    }
    let mut rows = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        let mut results: Vec<(usize, Result<f64>)> = (0..repeats)
            .into_par_iter()
            .map(|r| {
                let run = (|| {
                    let mut cfg = base.clone();
                    cfg.alpha = alpha;
                    cfg.p = 1;
                    cfg.seed = mix_seed(base.seed, r as u64);
                    let (model, _) = train(data, &cfg)?;
                    direction_angle(model.projection())
                })();
                (r, run)
            })
            .collect();
        results.sort_by_key(|(r, _)| *r);
        let mut angles = Vec::with_capacity(repeats);
        for (_, r) in results {
            angles.push(r?);
        }
        let vertical = angles.iter().filter(|&&a| is_vertical(a)).count();
        rows.push(AlphaStudyRow {
            alpha,
            horizontal: repeats - vertical,
            vertical,
            angles,
        });
    }
    Ok(rows)
}

/// Defaults for the entropy-order study; these pair with
/// [`SyntheticSpec::default`].
pub fn study_train_config(seed: u64) -> TrainConfig {
    let mut cfg = TrainConfig::new(1.01, 2.6, 1);
    cfg.step_size = 4.0;
    cfg.max_iters = 300;
    cfg.tol = 1e-7;
    cfg.seed = seed;
    cfg
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use rand::Rng;

    fn blob_dataset(n: usize, gap: f64, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = Array2::zeros((2 * n, 2));
        let mut labels = Vec::new();
        for i in 0..2 * n {
            let c = i / n;
            x[[i, 0]] = gap * c as f64 + rng.sample::<f64, _>(StandardNormal);
            x[[i, 1]] = rng.sample::<f64, _>(StandardNormal);
            labels.push(c);
        }
        Dataset::new(x, labels).unwrap()
    }

    #[test]
    fn knn_basic_cases() {
        // single training point always wins
        let train_x = array![[0.0, 0.0]];
        let test_x = array![[5.0, 5.0], [-3.0, 2.0]];
        let got = knn_classify(&train_x, &[7], &test_x, 1, KnnMetric::Identity).unwrap();
        assert_eq!(got, vec![7, 7]);

        // exact match at k=1 returns its label
        let train_x = array![[0.0], [1.0], [2.0]];
        let got = knn_classify(&train_x, &[0, 1, 2], &array![[1.0]], 1, KnnMetric::Identity)
            .unwrap();
        assert_eq!(got, vec![1]);

        // k = n with self-inclusion: plain-mode training error 0 at k=1
        let labels = [0, 1, 0];
        let got = knn_classify(&train_x, &labels, &train_x, 1, KnnMetric::Identity).unwrap();
        assert_eq!(got.as_slice(), labels.as_slice());

        assert!(knn_classify(&train_x, &[0, 1, 0], &test_x, 4, KnnMetric::Identity).is_err());
        let empty = Array2::zeros((0, 1));
        assert!(knn_classify(&empty, &[], &test_x, 1, KnnMetric::Identity).is_err());
    }

    #[test]
    fn knn_separated_blobs() {
        let data = blob_dataset(20, 12.0, 50);
        let test = blob_dataset(10, 12.0, 51);
        let got = knn_classify(
            data.features(),
            data.labels(),
            test.features(),
            4,
            KnnMetric::Identity,
        )
        .unwrap();
        let wrong = got
            .iter()
            .zip(test.labels())
            .filter(|(p, t)| p != t)
            .count();
        assert_eq!(wrong, 0);
    }

    #[test]
    fn standardize_cases() {
        let data = blob_dataset(30, 3.0, 52);
        let (std1, dropped) = standardize(&data).unwrap();
        assert!(dropped.is_empty());
        for j in 0..std1.dim() {
            let col = std1.features().column(j);
            let mean = col.sum() / col.len() as f64;
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
                / col.len() as f64;
            assert_abs_diff_eq!(mean, 0.0, epsilon = 1e-10);
            assert_abs_diff_eq!(var, 1.0, epsilon = 1e-10);
        }
        // idempotent
        let (std2, _) = standardize(&std1).unwrap();
        for (a, b) in std1.features().iter().zip(std2.features().iter()) {
            assert!((a - b).abs() <= 1e-12);
        }

        // constant feature dropped
        let mut x = data.features().clone();
        let mut with_const = Array2::zeros((x.nrows(), 3));
        with_const.column_mut(0).assign(&x.column(0));
        with_const.column_mut(1).fill(4.25);
        with_const.column_mut(2).assign(&x.column(1));
        x = with_const;
        let data2 = Dataset::new(x, data.labels().to_vec()).unwrap();
        let (std3, dropped) = standardize(&data2).unwrap();
        assert_eq!(dropped, vec![1]);
        assert_eq!(std3.dim(), 2);
    }

    #[test]
    fn stratified_split_preserves_proportions() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let labels: Vec<usize> = (0..31).map(|i| i % 3).collect();
        let folds = stratified_folds(&labels, 2, &mut rng).unwrap();
        for c in 0..3 {
            let total = labels.iter().filter(|&&l| l == c).count();
            let in_0 = folds[0].iter().filter(|&&i| labels[i] == c).count();
            let in_1 = folds[1].iter().filter(|&&i| labels[i] == c).count();
            assert_eq!(in_0 + in_1, total);
            assert!(in_0.abs_diff(in_1) <= 1);
        }
        // a class smaller than the fold count cannot be stratified
        let tiny = vec![0, 0, 1];
        assert!(stratified_folds(&tiny, 2, &mut rng).is_err());
    }

    #[test]
    fn euclidean_baseline_behaviour() {
        // separable blobs: near zero error
        let data = blob_dataset(20, 14.0, 54);
        let res = baseline_euclidean(&data, 2, 5, 4, 7).unwrap();
        assert!(res.mean_error <= 0.02, "error {}", res.mean_error);
        assert_abs_diff_eq!(
            res.mean_error,
            res.per_run_errors.iter().sum::<f64>() / res.per_run_errors.len() as f64,
            epsilon = 1e-12
        );

        // chance level on random labels
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        let mut x = Array2::zeros((80, 3));
        for v in x.iter_mut() {
            *v = rng.sample::<f64, _>(StandardNormal);
        }
        let labels: Vec<usize> = (0..80).map(|_| rng.random_range(0..2)).collect();
        let noise = Dataset::new(x, labels).unwrap();
        let res = baseline_euclidean(&noise, 2, 10, 4, 8).unwrap();
        assert!((res.mean_error - 0.5).abs() <= 0.1, "error {}", res.mean_error);

        // deterministic given the seed
        let again = baseline_euclidean(&noise, 2, 10, 4, 8).unwrap();
        assert_eq!(res.per_run_errors, again.per_run_errors);
    }

    #[test]
    fn inverse_covariance_baseline_behaviour() {
        // anisotropic correlated blobs: inverse covariance at least as good
        let mut rng = ChaCha8Rng::seed_from_u64(56);
        let n = 30;
        let mut x = Array2::zeros((2 * n, 2));
        let mut labels = Vec::new();
        for i in 0..2 * n {
            let c = i / n;
            let t: f64 = rng.sample(StandardNormal);
            let noise: f64 = rng.sample(StandardNormal);
            // strong common direction, discriminative direction is small
            x[[i, 0]] = 8.0 * t + 1.5 * c as f64;
            x[[i, 1]] = 8.0 * t + noise * 0.5 - 1.5 * c as f64;
            labels.push(c);
        }
        let data = Dataset::new(x, labels).unwrap();
        let eu = baseline_euclidean(&data, 2, 5, 4, 9).unwrap();
        let ic = baseline_inverse_covariance(&data, 2, 5, 4, 9).unwrap();
        assert!(
            ic.mean_error <= eu.mean_error + 1e-12,
            "ic {} vs eu {}",
            ic.mean_error,
            eu.mean_error
        );

        // singular covariance (d > n) takes the ridge path and stays finite
        let mut x = Array2::zeros((6, 10));
        for v in x.iter_mut() {
            *v = rng.sample::<f64, _>(StandardNormal);
        }
        let wide = Dataset::new(x, vec![0, 0, 0, 1, 1, 1]).unwrap();
        let res = baseline_inverse_covariance(&wide, 2, 2, 1, 10).unwrap();
        assert!(res.mean_error.is_finite());
    }

    #[test]
    fn synthetic_generator_targets() {
        let spec = SyntheticSpec::default();
        let data = synth_bimodal(&spec).unwrap();
        assert_eq!(data.n(), 80);
        assert_eq!(data.dim(), 2);

        // deterministic
        let again = synth_bimodal(&spec).unwrap();
        assert_eq!(data.features(), again.features());

        // horizontal projection separates well; vertical overlaps
        let horizontal = project_errors(&data, [1.0, 0.0]);
        assert!(horizontal <= 0.05, "horizontal error {horizontal}");
        let vertical = project_errors(&data, [0.0, 1.0]);
        assert!(
            (0.10..=0.40).contains(&vertical),
            "vertical error {vertical}"
        );
    }

    fn project_errors(data: &Dataset, dir: [f64; 2]) -> f64 {
        // leave-one-out 1-nn on the 1-d projection
        let proj: Vec<f64> = (0..data.n())
            .map(|i| data.features()[[i, 0]] * dir[0] + data.features()[[i, 1]] * dir[1])
            .collect();
        let mut wrong = 0;
        for i in 0..data.n() {
            let mut best = (f64::INFINITY, 0usize);
            for j in 0..data.n() {
                if j == i {
                    continue;
                }
                let d = (proj[i] - proj[j]).abs();
                if d < best.0 {
                    best = (d, j);
                }
            }
            if data.labels()[best.1] != data.labels()[i] {
                wrong += 1;
            }
        }
        wrong as f64 / data.n() as f64
    }

    #[test]
    fn direction_angle_cases() {
        assert_abs_diff_eq!(
            direction_angle(&array![[1.0], [0.0]]).unwrap(),
            0.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            direction_angle(&array![[0.0], [1.0]]).unwrap(),
            90.0,
            epsilon = 1e-12
        );
        let diag = direction_angle(&array![[0.5f64.sqrt()], [0.5f64.sqrt()]]).unwrap();
        assert_abs_diff_eq!(diag, 45.0, epsilon = 1e-10);
        assert!(is_vertical(diag));
        assert!(!is_vertical(44.9));
        assert!(direction_angle(&array![[0.0], [0.0]]).is_err());
        assert!(direction_angle(&array![[1.0, 0.0], [0.0, 1.0]]).is_err());
    }

    #[test]
    fn cv_is_deterministic_and_parallel_safe() {
        let data = blob_dataset(12, 8.0, 57);
        let mut cfg = TrainConfig::new(1.01, 1.5, 1);
        cfg.max_iters = 30;
        cfg.seed = 3;
        let r1 = cross_validate(&data, &cfg, 2, 6, 4).unwrap();
        let r2 = cross_validate(&data, &cfg, 2, 6, 4).unwrap();
        assert_eq!(r1.per_run_errors, r2.per_run_errors);
        assert!(r1.mean_error <= 0.05);
    }
}
