use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::mdp::{Feature, Trajectory};

/// How the first feature coordinate is mapped to histogram bins.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Binning {
    /// Integer feature values `lo, lo + 1, ..., lo + count − 1`.
    Discrete { lo: i64, count: usize },
    /// `bins` equal-width bins over `[lo, hi]`; values outside are clamped.
    Uniform { lo: f64, hi: f64, bins: usize },
}

impl Binning {
    pub fn len(&self) -> usize {
        match self {
            Self::Discrete { count, .. } => *count,
            Self::Uniform { bins, .. } => *bins,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn bin(&self, value: f64) -> usize {
        let last = self.len().saturating_sub(1) as f64;
        let raw = match self {
            Self::Discrete { lo, .. } => value.round() - *lo as f64,
            Self::Uniform { lo, hi, bins } => ((value - lo) / (hi - lo) * *bins as f64).floor(),
        };
        raw.clamp(0.0, last) as usize
    }
}

/// Discounted visitation histogram with a Laplace floor.
#[derive(Clone, Debug, PartialEq)]
pub struct Histogram {
    binning: Binning,
    masses: Vec<f64>,
    floor: f64,
}

/// Floor mass added to every bin before normalization, divided by the bin count.
pub const FLOOR_NUMERATOR: f64 = 1e-4;

impl Histogram {
    pub fn binning(&self) -> &Binning {
        &self.binning
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    pub fn mass(&self, feature: &[f64]) -> f64 {
        self.masses[self.binning.bin(feature[0])]
    }

    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "histogram bins={} floor={:?}", self.masses.len(), self.floor);
        match &self.binning {
            Binning::Discrete { lo, .. } => {
                for (i, m) in self.masses.iter().enumerate() {
                    let _ = writeln!(out, "{} {m:?}", lo + i as i64);
                }
            }
            Binning::Uniform { lo, hi, bins } => {
                let width = (hi - lo) / *bins as f64;
                for (i, m) in self.masses.iter().enumerate() {
                    let _ = writeln!(out, "{:?} {m:?}", lo + width * i as f64);
                }
            }
        }
        out
    }
}

/// Mass of bin `z` ∝ `Σ_traj Σ_{t<T} γ^t 1[φ(s_t) = z]`, floored and normalized.
pub fn fit_visitation_histogram<S, A>(
    trajectories: &[Trajectory<S, A>],
    discount: f64,
    feature: impl Fn(&S) -> Feature,
    binning: Binning,
) -> Result<Histogram> {
    if trajectories.is_empty() {
        return Err(invalid("histogram needs at least one trajectory"));
    }
    if binning.is_empty() {
        return Err(invalid("histogram needs at least one bin"));
    }
    let bins = binning.len();
    let mut masses = vec![0.0; bins];
    let mut total = 0.0;
    for traj in trajectories {
        let mut w = 1.0;
        for s in &traj.states[..traj.horizon()] {
            masses[binning.bin(feature(s)[0])] += w;
            total += w;
            w *= discount;
        }
    }
    let floor = FLOOR_NUMERATOR / bins as f64;
    let norm = 1.0 + floor * bins as f64;
    for m in &mut masses {
        *m = (*m / total + floor) / norm;
    }
    Ok(Histogram {
        binning,
        masses,
        floor,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn traj(states: Vec<usize>) -> Trajectory<usize, usize> {
        let n = states.len() - 1;
        Trajectory {
            states,
            actions: vec![0; n],
            rewards: vec![0.0; n],
            intrinsic: vec![],
            seed: 0,
        }
    }

    fn tile(s: &usize) -> Feature {
        [*s as f64, 0.0]
    }

    #[test]
    fn stuck_trajectory_is_a_point_mass() {
        let h = fit_visitation_histogram(&[traj(vec![1; 11])], 0.99, tile, Binning::Discrete { lo: 1, count: 15 })
            .unwrap();
        assert!((h.masses()[0] - 1.0).abs() < 1e-4);
        assert!((h.masses().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(h.masses()[5] > 0.0);
    }

    #[test]
    fn symmetric_pair_splits_evenly() {
        let h = fit_visitation_histogram(
            &[traj(vec![2, 2]), traj(vec![5, 5])],
            0.9,
            tile,
            Binning::Discrete { lo: 1, count: 15 },
        )
        .unwrap();
        assert!((h.masses()[1] - h.masses()[4]).abs() < 1e-15);
        assert!((h.masses()[1] - 0.5).abs() < 1e-4);
    }

    #[test]
    fn empty_input_is_rejected() {
        let empty: Vec<Trajectory<usize, usize>> = vec![];
        assert!(fit_visitation_histogram(&empty, 0.9, tile, Binning::Discrete { lo: 0, count: 3 }).is_err());
    }

    #[test]
    fn uniform_bins_clamp() {
        let b = Binning::Uniform { lo: -6.0, hi: 6.0, bins: 64 };
        assert_eq!(b.bin(-100.0), 0);
        assert_eq!(b.bin(6.0), 63);
        assert_eq!(b.bin(0.0), 32);
    }
}
