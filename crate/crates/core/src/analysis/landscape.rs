use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::mdp::Estimate;
use crate::num::num;
use crate::rng;
use crate::shaping::ObjectiveEstimate;

/// Default significance margin, in combined standard errors.
pub const DEFAULT_MARGIN: f64 = 2.0;

/// Evenly spaced parameter values, endpoints included.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl Axis {
    pub fn new(name: impl Into<String>, lo: f64, hi: f64, points: usize) -> Self {
        Self {
            name: name.into(),
            lo,
            hi,
            points,
        }
    }

    pub fn value(&self, i: usize) -> f64 {
        if self.points <= 1 {
            self.lo
        } else {
            self.lo + (self.hi - self.lo) * i as f64 / (self.points - 1) as f64
        }
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.points).map(|i| self.value(i)).collect()
    }
}

fn check_axes(axes: &[Axis]) -> Result<()> {
    if axes.is_empty() || axes.len() > 2 {
        return Err(invalid("landscape scans take one or two axes"));
    }
    for a in axes {
        if a.points == 0 {
            return Err(invalid(format!("axis `{}` is empty", a.name)));
        }
        if !a.lo.is_finite() || !a.hi.is_finite() {
            return Err(invalid(format!("axis `{}` has a non-finite range", a.name)));
        }
    }
    Ok(())
}

/// Cell `c` of a grid stored with axis 0 varying slowest.
fn coords(axes: &[Axis], cell: usize) -> Vec<usize> {
    match axes.len() {
        1 => vec![cell],
        _ => vec![cell / axes[1].points, cell % axes[1].points],
    }
}

fn cell_count(axes: &[Axis]) -> usize {
    axes.iter().map(|a| a.points).product()
}

/// Objective estimates over a parameter grid with detected extrema.
#[derive(Clone, Debug, PartialEq)]
pub struct LandscapeGrid {
    pub axes: Vec<Axis>,
    pub cells: Vec<Estimate>,
    /// Cells exceeding every neighbor by more than `margin` combined standard
    /// errors, plus the global maximum whenever it strictly exceeds all of its
    /// neighbors. Sorted by cell index.
    pub local_maxima: Vec<usize>,
    /// Cell with the largest mean (first one on ties).
    pub global_max: usize,
    pub margin: f64,
}

impl LandscapeGrid {
    pub fn from_estimates(axes: Vec<Axis>, cells: Vec<Estimate>, margin: f64) -> Result<Self> {
        check_axes(&axes)?;
        if cells.len() != cell_count(&axes) {
            return Err(invalid("cell count does not match the axes"));
        }
        let mut grid = Self {
            axes,
            cells,
            local_maxima: Vec::new(),
            global_max: 0,
            margin,
        };
        grid.global_max = (0..grid.cells.len()).fold(0, |best, c| {
            if grid.cells[c].mean > grid.cells[best].mean {
                c
            } else {
                best
            }
        });
        let global = grid.global_max;
        let strict = grid.exceeds_neighbors(global, 0.0) && grid.cells.len() > 1;
        grid.local_maxima = (0..grid.cells.len())
            .filter(|&c| grid.exceeds_neighbors(c, margin) || (c == global && strict))
            .collect();
        Ok(grid)
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn theta(&self, cell: usize) -> Vec<f64> {
        coords(&self.axes, cell)
            .into_iter()
            .zip(&self.axes)
            .map(|(i, a)| a.value(i))
            .collect()
    }

    /// 8-neighborhood in 2-D, left/right in 1-D.
    pub fn neighbors(&self, cell: usize) -> Vec<usize> {
        let c = coords(&self.axes, cell);
        let mut out = Vec::new();
        match self.axes.len() {
            1 => {
                if c[0] > 0 {
                    out.push(c[0] - 1);
                }
                if c[0] + 1 < self.axes[0].points {
                    out.push(c[0] + 1);
                }
            }
            _ => {
                let (n0, n1) = (self.axes[0].points as i64, self.axes[1].points as i64);
                for d0 in -1..=1i64 {
                    for d1 in -1..=1i64 {
                        let (i, j) = (c[0] as i64 + d0, c[1] as i64 + d1);
                        if (d0, d1) != (0, 0) && (0..n0).contains(&i) && (0..n1).contains(&j) {
                            out.push((i * n1 + j) as usize);
                        }
                    }
                }
            }
        }
        out
    }

    fn exceeds_neighbors(&self, cell: usize, margin: f64) -> bool {
        let me = self.cells[cell];
        let neighbors = self.neighbors(cell);
        !neighbors.is_empty()
            && neighbors.iter().all(|&n| {
                let other = self.cells[n];
                let se = (me.stderr.powi(2) + other.stderr.powi(2)).sqrt();
                me.mean - other.mean > margin * se
            })
    }

    pub fn max_value(&self) -> f64 {
        self.cells[self.global_max].mean
    }

    /// `Ω(ε) = {cells : Ĵ_max − Ĵ_cell ≤ ε}`
    pub fn omega(&self, epsilon: f64) -> Vec<bool> {
        let best = self.max_value();
        self.cells.iter().map(|c| best - c.mean <= epsilon).collect()
    }

    pub fn write_csv<W: Write>(&self, mut out: W, epsilon: f64) -> Result<()> {
        writeln!(out, "axis0,axis1,value,stderr,n,is_local_max,is_global_max,in_omega")?;
        let omega = self.omega(epsilon);
        for (c, est) in self.cells.iter().enumerate() {
            let theta = self.theta(c);
            let axis1 = theta.get(1).map(|v| num(*v)).unwrap_or_default();
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                num(theta[0]),
                axis1,
                num(est.mean),
                num(est.stderr),
                est.n,
                self.local_maxima.contains(&c),
                c == self.global_max,
                omega[c]
            )?;
        }
        Ok(())
    }
}

/// Per-cell seed: one shared seed (common random numbers) or one per cell.
pub fn cell_seed(seed: u64, cell: usize, shared: bool) -> u64 {
    if shared {
        seed
    } else {
        rng::derive(seed, cell as u64)
    }
}

/// Evaluates `evaluate(θ, seed)` on every grid cell.
pub fn scan_landscape<F>(axes: Vec<Axis>, seed: u64, shared_seed: bool, margin: f64, evaluate: F) -> Result<LandscapeGrid>
where
    F: Fn(&[f64], u64) -> Result<Estimate> + Sync,
{
    check_axes(&axes)?;
    let probe = LandscapeGrid {
        axes: axes.clone(),
        cells: Vec::new(),
        local_maxima: Vec::new(),
        global_max: 0,
        margin,
    };
    let cells = (0..cell_count(&axes))
        .into_par_iter()
        .map(|c| evaluate(&probe.theta(c), cell_seed(seed, c, shared_seed)))
        .collect::<Result<Vec<_>>>()?;
    LandscapeGrid::from_estimates(axes, cells, margin)
}

/// A scan that keeps every reward component, so landscapes of `J`, of each
/// `J_k` and of any weighting `J + Σ λ_k J_k` come from one set of batches.
#[derive(Clone, Debug)]
pub struct ComponentScan {
    pub axes: Vec<Axis>,
    pub cells: Vec<ObjectiveEstimate>,
}

impl ComponentScan {
    pub fn run<F>(axes: Vec<Axis>, seed: u64, shared_seed: bool, evaluate: F) -> Result<Self>
    where
        F: Fn(&[f64], u64) -> Result<ObjectiveEstimate> + Sync,
    {
        check_axes(&axes)?;
        let probe = LandscapeGrid {
            axes: axes.clone(),
            cells: Vec::new(),
            local_maxima: Vec::new(),
            global_max: 0,
            margin: 0.0,
        };
        let cells = (0..cell_count(&axes))
            .into_par_iter()
            .map(|c| evaluate(&probe.theta(c), cell_seed(seed, c, shared_seed)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { axes, cells })
    }

    /// Landscape of `J + Σ_k w_k J_k`.
    pub fn combined(&self, weights: &[f64], margin: f64) -> Result<LandscapeGrid> {
        let cells = self.cells.iter().map(|c| c.combination(weights)).collect();
        LandscapeGrid::from_estimates(self.axes.clone(), cells, margin)
    }

    pub fn extrinsic(&self, margin: f64) -> Result<LandscapeGrid> {
        let cells = self.cells.iter().map(|c| c.j()).collect();
        LandscapeGrid::from_estimates(self.axes.clone(), cells, margin)
    }

    pub fn intrinsic(&self, bonus: usize, margin: f64) -> Result<LandscapeGrid> {
        let cells = self.cells.iter().map(|c| c.intrinsic(bonus)).collect();
        LandscapeGrid::from_estimates(self.axes.clone(), cells, margin)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_peak() {
        let axes = vec![Axis::new("theta", 0.0, 1.0, 11)];
        let grid = scan_landscape(axes, 0, true, 2.0, |t, _| Ok(Estimate::exact(-(t[0] - 0.3).powi(2)))).unwrap();
        assert_eq!(grid.local_maxima, vec![3]);
        assert_eq!(grid.global_max, 3);
    }

    #[test]
    fn constant_objective_has_no_maxima_and_full_omega() {
        let axes = vec![Axis::new("a", 0.0, 1.0, 5), Axis::new("b", 0.0, 1.0, 4)];
        let grid = scan_landscape(axes, 0, false, 2.0, |_, _| Ok(Estimate::exact(0.0))).unwrap();
        assert!(grid.local_maxima.is_empty());
        assert!(grid.omega(0.0).into_iter().all(|b| b));
    }

    #[test]
    fn corner_neighbors() {
        let axes = vec![Axis::new("a", 0.0, 1.0, 3), Axis::new("b", 0.0, 1.0, 3)];
        let grid = LandscapeGrid::from_estimates(axes, vec![Estimate::exact(0.0); 9], 2.0).unwrap();
        assert_eq!(grid.neighbors(0), vec![1, 3, 4]);
        assert_eq!(grid.neighbors(4).len(), 8);
    }

    #[test]
    fn noisy_bump_is_not_significant() {
        let axes = vec![Axis::new("a", 0.0, 1.0, 3)];
        let cells = vec![
            Estimate { mean: 0.0, stderr: 1.0, n: 10 },
            Estimate { mean: 1.0, stderr: 1.0, n: 10 },
            Estimate { mean: 0.0, stderr: 1.0, n: 10 },
        ];
        let grid = LandscapeGrid::from_estimates(axes, cells, 2.0).unwrap();
        // only the global maximum survives
        assert_eq!(grid.local_maxima, vec![1]);
        assert_eq!(grid.global_max, 1);
    }

    #[test]
    fn noisy_secondary_bump_is_dropped() {
        let axes = vec![Axis::new("a", 0.0, 1.0, 5)];
        let cells = [0.0, 1.0, 0.0, 5.0, 0.0]
            .iter()
            .map(|&mean| Estimate { mean, stderr: 0.5, n: 10 })
            .collect();
        let grid = LandscapeGrid::from_estimates(axes, cells, 2.0).unwrap();
        assert_eq!(grid.local_maxima, vec![3]);
    }

    #[test]
    fn empty_axis_is_rejected() {
        assert!(scan_landscape(vec![Axis::new("a", 0.0, 1.0, 0)], 0, true, 2.0, |_, _| Ok(Estimate::exact(0.0))).is_err());
    }
}
