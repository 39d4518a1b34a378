//! Policy-evaluation systems `(I − γP) x = b` for a substochastic `P`.
//!
//! The factorization follows the Grassmann–Taksar–Heyman idea: every row keeps
//! its slack `A_ii − Σ_{j≠i} |A_ij|` (initially `1 − γ Σ_j P_ij`), and pivots
//! are rebuilt as slack plus off-diagonal magnitudes instead of by
//! subtraction. With a nonnegative right-hand side every solve is then
//! subtraction-free, so tiny values (e.g. the return of a policy that almost
//! never reaches the reward) keep full relative precision.

use crate::error::{Error, Result};

pub(crate) struct ChainFactor {
    n: usize,
    /// `b_kj ≥ 0` for `j > k` (upper factor is `d_k` on the diagonal and
    /// `−b_kj` off it).
    upper: Vec<f64>,
    /// Multipliers `m_ik ≥ 0` for `i > k` (lower factor has `−m_ik`).
    lower: Vec<f64>,
    pivots: Vec<f64>,
}

impl ChainFactor {
    /// Factors `I − γP`; `transition` is row-major `n × n` and nonnegative.
    pub(crate) fn new(transition: &[f64], n: usize, gamma: f64) -> Result<Self> {
        let mut upper: Vec<f64> = transition.iter().map(|p| gamma * p).collect();
        let mut slack: Vec<f64> = (0..n)
            .map(|i| 1.0 - gamma * transition[i * n..(i + 1) * n].iter().sum::<f64>())
            .collect();
        for i in 0..n {
            upper[i * n + i] = 0.0;
        }
        let mut lower = vec![0.0; n * n];
        let mut pivots = vec![0.0; n];
        let mut row: Vec<(usize, f64)> = Vec::new();
        for k in 0..n {
            row.clear();
            row.extend((k + 1..n).map(|j| (j, upper[k * n + j])).filter(|(_, b)| *b > 0.0));
            let d = slack[k].max(0.0) + row.iter().map(|(_, b)| b).sum::<f64>();
            if !(d > 0.0) {
                return Err(Error::Internal("singular policy-evaluation system".into()));
            }
            pivots[k] = d;
            for i in k + 1..n {
                let b_ik = upper[i * n + k];
                if b_ik == 0.0 {
                    continue;
                }
                let m = b_ik / d;
                upper[i * n + k] = 0.0;
                lower[i * n + k] = m;
                slack[i] += m * slack[k].max(0.0);
                for &(j, b_kj) in &row {
                    if j != i {
                        upper[i * n + j] += m * b_kj;
                    }
                }
            }
        }
        Ok(Self {
            n,
            upper,
            lower,
            pivots,
        })
    }

    /// `x` with `(I − γP) x = rhs`.
    pub(crate) fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = rhs.to_vec();
        for i in 0..n {
            let acc: f64 = (0..i).map(|k| self.lower[i * n + k] * y[k]).sum();
            y[i] += acc;
        }
        let mut x = vec![0.0; n];
        for k in (0..n).rev() {
            let acc: f64 = (k + 1..n).map(|j| self.upper[k * n + j] * x[j]).sum();
            x[k] = (y[k] + acc) / self.pivots[k];
        }
        x
    }

    /// `x` with `(I − γP)ᵀ x = rhs`.
    pub(crate) fn solve_transposed(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut z = vec![0.0; n];
        for i in 0..n {
            let acc: f64 = (0..i).map(|k| self.upper[k * n + i] * z[k]).sum();
            z[i] = (rhs[i] + acc) / self.pivots[i];
        }
        let mut x = z;
        for k in (0..n).rev() {
            let acc: f64 = (k + 1..n).map(|i| self.lower[i * n + k] * x[i]).sum();
            x[k] += acc;
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dense_residual(p: &[f64], n: usize, gamma: f64, x: &[f64], b: &[f64], transposed: bool) -> f64 {
        (0..n)
            .map(|i| {
                let ax: f64 = (0..n)
                    .map(|j| {
                        let pij = if transposed { p[j * n + i] } else { p[i * n + j] };
                        (if i == j { 1.0 } else { 0.0 } - gamma * pij) * x[j]
                    })
                    .sum();
                (ax - b[i]).abs()
            })
            .fold(0.0, f64::max)
    }

    proptest! {
        #[test]
        fn solves_random_stochastic_systems(
            n in 1usize..8,
            raw in prop::collection::vec(0.0f64..1.0, 64),
            rhs in prop::collection::vec(-5.0f64..5.0, 8),
            gamma in 0.1f64..0.999,
        ) {
            let mut p = vec![0.0; n * n];
            for i in 0..n {
                let row: f64 = (0..n).map(|j| raw[i * 8 + j]).sum::<f64>() + 1e-9;
                for j in 0..n {
                    p[i * n + j] = raw[i * 8 + j] / row;
                }
            }
            let f = ChainFactor::new(&p, n, gamma).unwrap();
            let b = &rhs[..n];
            let scale = 1.0 / (1.0 - gamma);
            prop_assert!(dense_residual(&p, n, gamma, &f.solve(b), b, false) < 1e-9 * scale);
            prop_assert!(dense_residual(&p, n, gamma, &f.solve_transposed(b), b, true) < 1e-9 * scale);
        }
    }

    #[test]
    fn keeps_relative_precision_of_tiny_values() {
        // Walk that moves right with probability 1e-3 and otherwise back to 0;
        // reaching state 9 from 0 has probability about 1e-27.
        let n = 10;
        let q = 1e-3;
        let mut p = vec![0.0; n * n];
        for i in 0..n - 1 {
            p[i * n + i + 1] = q;
            p[i * n] += 1.0 - q;
        }
        p[(n - 1) * n + n - 1] = 1.0;
        let mut r = vec![0.0; n];
        r[n - 1] = 1.0;
        let gamma = 0.9;
        let x = ChainFactor::new(&p, n, gamma).unwrap().solve(&r);
        assert!(x.iter().all(|v| *v > 0.0));
        // x_i = γ q x_{i+1} + γ (1 − q) x_0 holds to relative precision
        for i in 0..n - 1 {
            let rhs = gamma * q * x[i + 1] + gamma * (1.0 - q) * x[0];
            assert!((x[i] - rhs).abs() <= 1e-12 * x[i], "row {i}: {} vs {rhs}", x[i]);
        }
    }
}
