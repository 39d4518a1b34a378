//! Gaussian mixture density fitted by expectation-maximization.
//!
//! Identical samples are merged into weighted points before fitting; EM on the
//! weighted set has exactly the same fixed points and likelihood trace as EM on
//! the raw batch, and grid-maze batches collapse to a few hundred points.
//!
//! The covariance M-step maximizes the likelihood under the constraint that
//! every eigenvalue is at least [`EIGEN_FLOOR`] (eigenvalues of the weighted
//! scatter matrix are clamped), so each iteration is still an ascent step.

use std::cmp::Ordering;
use std::fmt::Write as _;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng as _;

use crate::error::{invalid, Result};
use crate::rng;

pub const EIGEN_FLOOR: f64 = 1e-6;
pub const TOLERANCE: f64 = 1e-6;
pub const MAX_ITERATIONS: usize = 200;

#[derive(Clone, Debug, PartialEq)]
pub struct GaussianMixture {
    dim: usize,
    weights: Vec<f64>,
    means: Vec<Vec<f64>>,
    /// Row-major `dim × dim` matrices.
    covariances: Vec<Vec<f64>>,
    precisions: Vec<Vec<f64>>,
    log_normalizers: Vec<f64>,
    trace: Vec<f64>,
}

impl GaussianMixture {
    fn new(dim: usize, weights: Vec<f64>, means: Vec<Vec<f64>>, covariances: Vec<Vec<f64>>) -> Self {
        let mut gmm = Self {
            dim,
            weights,
            means,
            covariances,
            precisions: Vec::new(),
            log_normalizers: Vec::new(),
            trace: Vec::new(),
        };
        gmm.refresh();
        gmm
    }

    fn refresh(&mut self) {
        let d = self.dim;
        self.precisions.clear();
        self.log_normalizers.clear();
        for cov in &self.covariances {
            let m = DMatrix::from_row_slice(d, d, cov);
            let eig = SymmetricEigen::new(m);
            let log_det: f64 = eig.eigenvalues.iter().map(|l| l.ln()).sum();
            let inv_vals = eig.eigenvalues.map(|l| 1.0 / l);
            let precision = &eig.eigenvectors * DMatrix::from_diagonal(&inv_vals) * eig.eigenvectors.transpose();
            let mut row_major = Vec::with_capacity(d * d);
            for i in 0..d {
                for j in 0..d {
                    row_major.push(0.5 * (precision[(i, j)] + precision[(j, i)]));
                }
            }
            self.precisions.push(row_major);
            self.log_normalizers
                .push(-0.5 * (d as f64 * (2.0 * std::f64::consts::PI).ln() + log_det));
        }
    }

    pub fn components(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn means(&self) -> &[Vec<f64>] {
        &self.means
    }

    pub fn covariances(&self) -> &[Vec<f64>] {
        &self.covariances
    }

    /// Mean log-likelihood per (weighted) sample after each E-step.
    pub fn log_likelihood_trace(&self) -> &[f64] {
        &self.trace
    }

    fn component_log_density(&self, k: usize, x: &[f64]) -> f64 {
        let d = self.dim;
        let mu = &self.means[k];
        let p = &self.precisions[k];
        let mut quad = 0.0;
        for i in 0..d {
            let di = x[i] - mu[i];
            let mut row = 0.0;
            for j in 0..d {
                row += p[i * d + j] * (x[j] - mu[j]);
            }
            quad += di * row;
        }
        self.log_normalizers[k] - 0.5 * quad
    }

    pub fn log_density(&self, x: &[f64]) -> f64 {
        let terms: Vec<f64> = (0..self.components())
            .map(|k| self.weights[k].ln() + self.component_log_density(k, x))
            .collect();
        log_sum_exp(&terms)
    }

    pub fn density(&self, x: &[f64]) -> f64 {
        self.log_density(x).exp()
    }

    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "gmm components={} dim={}", self.components(), self.dim);
        for k in 0..self.components() {
            let _ = writeln!(
                out,
                "weight {:?} mean {:?} cov {:?}",
                self.weights[k], self.means[k], self.covariances[k]
            );
        }
        out
    }
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

/// Fits `components` Gaussians to raw samples.
pub fn fit_gmm(samples: &[Vec<f64>], components: usize, seed: u64) -> Result<GaussianMixture> {
    if components == 0 {
        return Err(invalid("mixture needs at least one component"));
    }
    if samples.len() < components {
        return Err(invalid(format!(
            "{} samples cannot support {components} components",
            samples.len()
        )));
    }
    let (points, weights) = merge_duplicates(samples)?;
    fit_gmm_weighted(&points, &weights, components, seed)
}

fn merge_duplicates(samples: &[Vec<f64>]) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let dim = samples[0].len();
    if dim == 0 || samples.iter().any(|s| s.len() != dim || s.iter().any(|x| !x.is_finite())) {
        return Err(invalid("samples must be finite vectors of one common dimension"));
    }
    let mut sorted: Vec<&Vec<f64>> = samples.iter().collect();
    sorted.sort_by(|a, b| lexicographic(a, b));
    let mut points: Vec<Vec<f64>> = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    for s in sorted {
        if points.last().is_some_and(|p| p == s) {
            *weights.last_mut().expect("paired with points") += 1.0;
        } else {
            points.push(s.clone());
            weights.push(1.0);
        }
    }
    Ok((points, weights))
}

fn lexicographic(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Fits a mixture to distinct weighted points. At most one component per
/// distinct point is used.
pub fn fit_gmm_weighted(
    points: &[Vec<f64>],
    weights: &[f64],
    components: usize,
    seed: u64,
) -> Result<GaussianMixture> {
    if points.is_empty() || points.len() != weights.len() {
        return Err(invalid("weighted fit needs one positive weight per point"));
    }
    if weights.iter().any(|w| !(*w > 0.0)) {
        return Err(invalid("weights must be positive"));
    }
    let d = points[0].len();
    let total: f64 = weights.iter().sum();
    let mut rng = rng::stream(seed, rng::TAG_GMM);
    let centers = seed_centers(points, weights, components.min(points.len()), &mut rng);
    let m = centers.len();

    let global_mean = weighted_mean(points, weights.iter().copied(), total);
    let global_cov = clamp_eigen(&scatter(points, weights.iter().copied(), &global_mean, total), d);
    let mut gmm = GaussianMixture::new(
        d,
        vec![1.0 / m as f64; m],
        centers.into_iter().map(|i| points[i].clone()).collect(),
        vec![global_cov; m],
    );

    let mut resp = vec![0.0; points.len() * m];
    let mut trace = Vec::new();
    let mut log_terms = vec![0.0; m];
    for iteration in 0..=MAX_ITERATIONS {
        // E-step
        let mut ll = 0.0;
        for (i, x) in points.iter().enumerate() {
            for (k, t) in log_terms.iter_mut().enumerate() {
                *t = gmm.weights[k].ln() + gmm.component_log_density(k, x);
            }
            let lse = log_sum_exp(&log_terms);
            for k in 0..m {
                resp[i * m + k] = (log_terms[k] - lse).exp();
            }
            ll += weights[i] * lse;
        }
        let ll = ll / total;
        let converged = trace.last().is_some_and(|prev: &f64| ll - prev < TOLERANCE);
        trace.push(ll);
        if converged || iteration == MAX_ITERATIONS {
            break;
        }
        // M-step
        for k in 0..m {
            let mass: f64 = (0..points.len()).map(|i| weights[i] * resp[i * m + k]).sum();
            if mass <= f64::MIN_POSITIVE {
                gmm.weights[k] = 0.0;
                continue;
            }
            let col = || (0..points.len()).map(|i| weights[i] * resp[i * m + k]);
            let mean = weighted_mean(points, col(), mass);
            gmm.covariances[k] = clamp_eigen(&scatter(points, col(), &mean, mass), d);
            gmm.means[k] = mean;
            gmm.weights[k] = mass / total;
        }
        gmm.refresh();
    }
    gmm.trace = trace;
    Ok(gmm)
}

/// k-means++ seeding with sampling mass `w_i · D(x_i)²`.
fn seed_centers(points: &[Vec<f64>], weights: &[f64], count: usize, rng: &mut rng::Rng) -> Vec<usize> {
    let pick = |scores: &[f64], rng: &mut rng::Rng| -> Option<usize> {
        let total: f64 = scores.iter().sum();
        if !(total > 0.0) {
            return None;
        }
        let u = rng.gen::<f64>() * total;
        let mut acc = 0.0;
        for (i, s) in scores.iter().enumerate() {
            acc += s;
            if u < acc && *s > 0.0 {
                return Some(i);
            }
        }
        scores.iter().rposition(|s| *s > 0.0)
    };
    let mut centers = Vec::with_capacity(count);
    let Some(first) = pick(weights, rng) else {
        return centers;
    };
    centers.push(first);
    let mut nearest: Vec<f64> = points.iter().map(|p| sq_dist(p, &points[first])).collect();
    while centers.len() < count {
        let scores: Vec<f64> = nearest.iter().zip(weights).map(|(d, w)| d * w).collect();
        let Some(next) = pick(&scores, rng) else {
            break;
        };
        centers.push(next);
        for (n, p) in nearest.iter_mut().zip(points) {
            *n = n.min(sq_dist(p, &points[next]));
        }
    }
    centers
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

fn weighted_mean(points: &[Vec<f64>], w: impl Iterator<Item = f64>, total: f64) -> Vec<f64> {
    let mut mean = vec![0.0; points[0].len()];
    for (p, wi) in points.iter().zip(w) {
        for (m, x) in mean.iter_mut().zip(p) {
            *m += wi * x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= total);
    mean
}

fn scatter(points: &[Vec<f64>], w: impl Iterator<Item = f64>, mean: &[f64], total: f64) -> Vec<f64> {
    let d = mean.len();
    let mut s = vec![0.0; d * d];
    for (p, wi) in points.iter().zip(w) {
        for i in 0..d {
            for j in 0..d {
                s[i * d + j] += wi * (p[i] - mean[i]) * (p[j] - mean[j]);
            }
        }
    }
    s.iter_mut().for_each(|v| *v /= total);
    s
}

/// Constrained covariance: eigenvalues raised to at least [`EIGEN_FLOOR`].
fn clamp_eigen(cov: &[f64], d: usize) -> Vec<f64> {
    let eig = SymmetricEigen::new(DMatrix::from_row_slice(d, d, cov));
    let vals = eig.eigenvalues.map(|l| l.max(EIGEN_FLOOR));
    let m = &eig.eigenvectors * DMatrix::from_diagonal(&vals) * eig.eigenvectors.transpose();
    let mut out = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            out.push(0.5 * (m[(i, j)] + m[(j, i)]));
        }
    }
    out
}
