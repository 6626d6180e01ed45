//! Conditional-entropy metric learning.
//!
//! Learns a trace-constrained linear projection `A` (d x p) minimizing the
//! matrix conditional entropy of the class labels given the projected
//! samples, `S_alpha(n K o L) - S_alpha(K)`, where `K` is the unit-trace
//! Gaussian Gram matrix of the projected data and `L` the class
//! co-occurrence matrix. Optimization is projected gradient descent with
//! backtracking on the step size.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::entropy::{
    gradient_from_eigensystem, renyi_from_eigenvalues, EntropyOrder, EntropyValue,
};
use crate::error::{Error, Result};
use crate::idkernels::{gaussian_gram, KernelConfig};
use crate::spectra::{eig_sym, eigenvalues_sym, DensityLikeMatrix, SymmetricMatrix};

const LN_2: f64 = std::f64::consts::LN_2;

/// Accept a step when the objective does not increase beyond this slack.
const ACCEPT_SLACK: f64 = 1e-12;

/// Maximum number of step halvings per iteration.
const MAX_BACKTRACKS: usize = 30;

/// Labeled feature matrix: `n x d` features with one class label per row.
#[derive(Debug, Clone)]
pub struct Dataset {
    features: Array2<f64>,
    labels: Vec<usize>,
}

impl Dataset {
    pub fn new(features: Array2<f64>, labels: Vec<usize>) -> Result<Self> {
        let n = features.nrows();
        if n != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: labels.len(),
            });
        }
        if n < 2 {
            return Err(Error::InvalidInput(
                "dataset needs at least two samples".into(),
            ));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(
                "features contain non-finite values".into(),
            ));
        }
        Ok(Self { features, labels })
    }

    pub fn n(&self) -> usize {
        self.features.nrows()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Distinct labels in ascending order.
    pub fn classes(&self) -> Vec<usize> {
        let mut c = self.labels.clone();
        c.sort_unstable();
        c.dedup();
        c
    }

    /// Rows selected by index, in the given order.
    pub fn subset(&self, idx: &[usize]) -> Result<Dataset> {
        let mut features = Array2::zeros((idx.len(), self.dim()));
        let mut labels = Vec::with_capacity(idx.len());
        for (r, &i) in idx.iter().enumerate() {
            features.row_mut(r).assign(&self.features.row(i));
            labels.push(self.labels[i]);
        }
        Dataset::new(features, labels)
    }
}

/// Learned Mahalanobis metric: `d(x, y) = (x-y)^T A A^T (x-y)` through the
/// projection `A`.
#[derive(Debug, Clone)]
pub struct MetricModel {
    projection: Array2<f64>,
    alpha: EntropyOrder,
    sigma: f64,
}

impl MetricModel {
    /// Requires `|tr(A^T A) - p| <= 1e-8` and a positive bandwidth.
    pub fn new(projection: Array2<f64>, alpha: EntropyOrder, sigma: f64) -> Result<Self> {
        if !sigma.is_finite() || sigma <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "bandwidth must be positive, got {sigma}"
            )));
        }
        let p = projection.ncols();
        if p == 0 || projection.nrows() == 0 {
            return Err(Error::InvalidInput("projection must be nonempty".into()));
        }
        let tr: f64 = projection.iter().map(|v| v * v).sum();
        if (tr - p as f64).abs() > 1e-8 {
            return Err(Error::Precondition(format!(
                "projection must satisfy tr(A^T A) = p = {p}, got {tr:.12}"
            )));
        }
        Ok(Self {
            projection,
            alpha,
            sigma,
        })
    }

    pub fn projection(&self) -> &Array2<f64> {
        &self.projection
    }

    pub fn alpha(&self) -> EntropyOrder {
        self.alpha
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn dim(&self) -> usize {
        self.projection.nrows()
    }

    pub fn p(&self) -> usize {
        self.projection.ncols()
    }

    /// Plain-text persistence: `d p`, alpha, sigma, then the projection
    /// row-major, all with 17 significant digits. Load is value-exact.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        let _ = writeln!(out, "gramentropy-model 1");
        let _ = writeln!(out, "{} {}", self.dim(), self.p());
        let _ = writeln!(out, "{:.16e}", self.alpha.alpha());
        let _ = writeln!(out, "{:.16e}", self.sigma);
        for i in 0..self.dim() {
            let row: Vec<String> = (0..self.p())
                .map(|j| format!("{:.16e}", self.projection[[i, j]]))
                .collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
        std::fs::write(path, out)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::InvalidInput("empty model file".into()))?;
        if header.trim() != "gramentropy-model 1" {
            return Err(Error::InvalidInput(format!(
                "unrecognized model header: {header:?}"
            )));
        }
        let dims = lines
            .next()
            .ok_or_else(|| Error::InvalidInput("missing dimension line".into()))?;
        let mut it = dims.split_whitespace();
        let d: usize = parse_field(it.next(), "d")?;
        let p: usize = parse_field(it.next(), "p")?;
        let alpha: f64 = parse_field(lines.next().map(str::trim), "alpha")?;
        let sigma: f64 = parse_field(lines.next().map(str::trim), "sigma")?;
        let mut projection = Array2::zeros((d, p));
        for i in 0..d {
            let line = lines
                .next()
                .ok_or_else(|| Error::InvalidInput(format!("missing projection row {i}")))?;
            let vals: Vec<&str> = line.split_whitespace().collect();
            if vals.len() != p {
                return Err(Error::InvalidInput(format!(
                    "projection row {i} has {} entries, expected {p}",
                    vals.len()
                )));
            }
            for (j, v) in vals.iter().enumerate() {
                projection[[i, j]] = parse_field(Some(v), "projection entry")?;
            }
        }
        MetricModel::new(projection, EntropyOrder::new(alpha)?, sigma)
    }
}

fn parse_field<T: std::str::FromStr>(field: Option<&str>, what: &str) -> Result<T> {
    field
        .ok_or_else(|| Error::InvalidInput(format!("missing {what}")))?
        .parse::<T>()
        .map_err(|_| Error::InvalidInput(format!("cannot parse {what}")))
}

/// Training hyperparameters.
///
/// `alpha`, `sigma` and `p` come from the problem; the optimizer settings
/// default to step 0.5, 300 iterations and an objective-change stop of
/// 1e-6 bits.
#[derive(Debug, Clone, Serialize)]
pub struct TrainConfig {
    pub alpha: f64,
    pub sigma: f64,
    pub p: usize,
    pub step_size: f64,
    pub max_iters: usize,
    pub seed: u64,
    pub tol: f64,
    pub truncation: Option<usize>,
}

impl TrainConfig {
    pub fn new(alpha: f64, sigma: f64, p: usize) -> Self {
        Self {
            alpha,
            sigma,
            p,
            step_size: 0.5,
            max_iters: 300,
            seed: 0,
            tol: 1e-6,
            truncation: None,
        }
    }

    pub fn validate(&self) -> Result<EntropyOrder> {
        let order = EntropyOrder::new(self.alpha)?;
        if !self.sigma.is_finite() || self.sigma <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "sigma must be positive, got {}",
                self.sigma
            )));
        }
        if self.p == 0 {
            return Err(Error::InvalidConfig("p must be at least 1".into()));
        }
        if !self.step_size.is_finite() || self.step_size <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "step size must be positive, got {}",
                self.step_size
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be at least 1".into()));
        }
        if !self.tol.is_finite() || self.tol <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        if let Some(m) = self.truncation {
            if m == 0 {
                return Err(Error::InvalidConfig(
                    "truncation rank must be at least 1".into(),
                ));
            }
        }
        Ok(order)
    }
}

/// Outcome of a training run.
#[derive(Debug, Clone, Serialize)]
pub struct TrainReport {
    /// Objective in bits at the initial point and after each accepted step.
    pub objective_trace: Vec<f64>,
    pub iterations_run: usize,
    pub final_objective: f64,
    pub converged: bool,
}

/// Class co-occurrence matrix: `L_ij = 1/n` when labels agree, else 0.
///
/// Block structure of rank-one blocks makes it PSD; the diagonal is exactly
/// `1/n`, so the trace is 1.
pub fn label_gram(labels: &[usize]) -> Result<DensityLikeMatrix> {
    let n = labels.len();
    if n == 0 {
        return Err(Error::InvalidInput("labels must be nonempty".into()));
    }
    let inv_n = 1.0 / n as f64;
    let mut l = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            if labels[i] == labels[j] {
                l[[i, j]] = inv_n;
            }
        }
    }
    Ok(DensityLikeMatrix::unchecked(SymmetricMatrix::unchecked(l)))
}

/// The two Gram matrices of the objective at projection `a`: the kernel
/// matrix `K` of the projected samples and the masked joint `n K o L`.
fn grams(a: &Array2<f64>, data: &Dataset, sigma: f64) -> Result<(Array2<f64>, Array2<f64>)> {
    let projected = data.features().dot(a);
    let k = gaussian_gram(&projected, &KernelConfig::new(sigma)?)?;
    let k = k.into_base().into_array();
    let n = data.n();
    let mut masked = Array2::zeros((n, n));
    let labels = data.labels();
    for i in 0..n {
        for j in 0..n {
            if labels[i] == labels[j] {
                masked[[i, j]] = k[[i, j]]; // n * K_ij * (1/n)
            }
        }
    }
    Ok((k, masked))
}

fn objective_from_grams(k: &Array2<f64>, masked: &Array2<f64>, alpha: f64) -> f64 {
    let joint = renyi_from_eigenvalues(
        &eigenvalues_sym(&SymmetricMatrix::unchecked(masked.clone())),
        alpha,
    );
    let marginal = renyi_from_eigenvalues(
        &eigenvalues_sym(&SymmetricMatrix::unchecked(k.clone())),
        alpha,
    );
    joint - marginal
}

/// Conditional entropy of the labels given the projection of the data
/// through `a`: `S_alpha(n K o L) - S_alpha(K)` in bits.
pub fn ceml_objective(
    a: &Array2<f64>,
    data: &Dataset,
    order: EntropyOrder,
    sigma: f64,
) -> Result<EntropyValue> {
    if a.nrows() != data.dim() {
        return Err(Error::DimensionMismatch {
            expected: data.dim(),
            found: a.nrows(),
        });
    }
    let (k, masked) = grams(a, data, sigma)?;
    Ok(EntropyValue::new(objective_from_grams(
        &k,
        &masked,
        order.alpha(),
    )))
}

/// Exact gradient of [`ceml_objective`] with respect to `a`.
///
/// Evaluates `c X^T (P - diag(P 1)) X A` with
/// `P = (n L o G(n K o L) - G(K)) o K`, `G` the spectral entropy gradient,
/// and `c = 2 / (sigma^2 ln 2)` so the result matches finite differences of
/// the bits-valued objective in both direction and scale.
pub fn ceml_gradient(
    a: &Array2<f64>,
    data: &Dataset,
    order: EntropyOrder,
    sigma: f64,
) -> Result<Array2<f64>> {
    if a.nrows() != data.dim() {
        return Err(Error::DimensionMismatch {
            expected: data.dim(),
            found: a.nrows(),
        });
    }
    gradient_impl(a, data, order, sigma, None)
}

fn gradient_impl(
    a: &Array2<f64>,
    data: &Dataset,
    order: EntropyOrder,
    sigma: f64,
    truncation: Option<usize>,
) -> Result<Array2<f64>> {
    let n = data.n();
    let labels = data.labels();
    let (k, masked) = grams(a, data, sigma)?;

    let g_joint = gradient_from_eigensystem(
        &eig_sym(&SymmetricMatrix::unchecked(masked)),
        order,
        truncation,
    )?;
    let g_marginal = gradient_from_eigensystem(
        &eig_sym(&SymmetricMatrix::unchecked(k.clone())),
        order,
        truncation,
    )?;

    // P = (n L o G_joint - G_marginal) o K, with n L o G = same-class mask of G
    let mut p = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            let masked_grad = if labels[i] == labels[j] {
                g_joint.get(i, j)
            } else {
                0.0
            };
            p[[i, j]] = (masked_grad - g_marginal.get(i, j)) * k[[i, j]];
        }
    }

    // M = P - diag(P 1)
    let row_sums: Vec<f64> = (0..n).map(|i| p.row(i).sum()).collect();
    for i in 0..n {
        p[[i, i]] -= row_sums[i];
    }

    let scale = 2.0 / (sigma * sigma * LN_2);
    let xtpx = data.features().t().dot(&p).dot(data.features());
    Ok(xtpx.dot(a) * scale)
}

/// Rescales `a` onto the constraint surface `tr(A^T A) = p`.
pub fn project_trace(a: &Array2<f64>, p: usize) -> Result<Array2<f64>> {
    if p == 0 {
        return Err(Error::InvalidConfig("p must be at least 1".into()));
    }
    let tr: f64 = a.iter().map(|v| v * v).sum();
    if tr <= 0.0 || !tr.is_finite() {
        return Err(Error::Degenerate(
            "cannot project a zero or non-finite matrix onto the trace sphere".into(),
        ));
    }
    Ok(a * (p as f64 / tr).sqrt())
}

/// Projected gradient descent on the conditional entropy.
///
/// The projection is initialized from a seeded standard normal and rescaled
/// onto the trace sphere. Each iteration takes a step against the gradient,
/// reprojects, and halves the step (up to 30 times) while the objective
/// increases. Stops when the objective change falls below `tol`, when no
/// decrease is possible, or at `max_iters`.
pub fn train(data: &Dataset, config: &TrainConfig) -> Result<(MetricModel, TrainReport)> {
    let order = config.validate()?;
    let d = data.dim();
    if d < config.p {
        return Err(Error::InvalidConfig(format!(
            "projection dimension p = {} exceeds feature dimension d = {d}",
            config.p
        )));
    }
    if let Some(m) = config.truncation {
        if m > data.n() {
            return Err(Error::InvalidConfig(format!(
                "truncation rank {m} exceeds the number of samples {}",
                data.n()
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut init = Array2::zeros((d, config.p));
    for v in init.iter_mut() {
        *v = StandardNormal.sample(&mut rng);
    }
    let mut a = project_trace(&init, config.p)?;
    let mut f = ceml_objective(&a, data, order, config.sigma)?.bits();

    let mut report = TrainReport {
        objective_trace: vec![f],
        iterations_run: 0,
        final_objective: f,
        converged: false,
    };
    if !f.is_finite() {
        return Err(Error::Divergence {
            report: Box::new(report),
        });
    }

    for iter in 1..=config.max_iters {
        report.iterations_run = iter;
        let grad = gradient_impl(&a, data, order, config.sigma, config.truncation)?;
        if grad.iter().any(|v| !v.is_finite()) {
            report.final_objective = f;
            return Err(Error::Divergence {
                report: Box::new(report),
            });
        }

        let mut eta = config.step_size;
        let mut accepted = None;
        for _ in 0..=MAX_BACKTRACKS {
            let candidate = &a - &(&grad * eta);
            let candidate = match project_trace(&candidate, config.p) {
                Ok(c) => c,
                Err(_) => {
                    // stepped exactly onto the origin; shorten and retry
                    eta *= 0.5;
                    continue;
                }
            };
            let f_new = ceml_objective(&candidate, data, order, config.sigma)?.bits();
            if f_new.is_finite() && f_new <= f + ACCEPT_SLACK {
                accepted = Some((candidate, f_new));
                break;
            }
            eta *= 0.5;
        }

        let Some((next, f_new)) = accepted else {
            // no decrease possible at numeric precision
            report.converged = true;
            break;
        };
        let delta = (f - f_new).abs();
        a = next;
        f = f_new;
        report.objective_trace.push(f);
        if delta < config.tol {
            report.converged = true;
            break;
        }
    }

    report.final_objective = f;
    let model = MetricModel::new(a, order, config.sigma)?;
    Ok((model, report))
}

/// Projects rows of `x` through the learned metric: `Y = X A`.
pub fn transform(model: &MetricModel, x: &Array2<f64>) -> Result<Array2<f64>> {
    if x.ncols() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            found: x.ncols(),
        });
    }
    Ok(x.dot(model.projection()))
}
