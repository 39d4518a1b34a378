//! Textual parameter snapshots.
//!
//! ```text
//! pgx-params 1
//! family mlp
//! shape 6 64 64 64 4
//! seed 42
//! count 8964
//! <one value per line, shortest round-trip decimal>
//! ```
//!
//! `shape` is the layer-size list for networks and the parameter count for
//! the closed-form families. Values round-trip bit-exactly.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{invalid, Result};

const MAGIC: &str = "pgx-params 1";

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub family: String,
    pub shape: Vec<usize>,
    pub seed: u64,
    pub params: Vec<f64>,
}

impl Snapshot {
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(24 * self.params.len() + 64);
        let shape: Vec<String> = self.shape.iter().map(ToString::to_string).collect();
        let _ = writeln!(out, "{MAGIC}");
        let _ = writeln!(out, "family {}", self.family);
        let _ = writeln!(out, "shape {}", shape.join(" "));
        let _ = writeln!(out, "seed {}", self.seed);
        let _ = writeln!(out, "count {}", self.params.len());
        for p in &self.params {
            let _ = writeln!(out, "{p:?}");
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next() != Some(MAGIC) {
            return Err(invalid("not a parameter snapshot (bad header)"));
        }
        let mut field = |name: &str| -> Result<String> {
            let line = lines.next().ok_or_else(|| invalid(format!("missing `{name}` line")))?;
            line.strip_prefix(name)
                .map(|rest| rest.trim().to_string())
                .ok_or_else(|| invalid(format!("expected `{name}`, found `{line}`")))
        };
        let family = field("family")?;
        let shape = field("shape")?
            .split_whitespace()
            .map(|s| s.parse::<usize>().map_err(|e| invalid(format!("shape: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        let seed = field("seed")?.parse::<u64>().map_err(|e| invalid(format!("seed: {e}")))?;
        let count = field("count")?.parse::<usize>().map_err(|e| invalid(format!("count: {e}")))?;
        let params = lines
            .filter(|l| !l.is_empty())
            .map(|l| l.trim().parse::<f64>().map_err(|e| invalid(format!("value `{l}`: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        if params.len() != count {
            return Err(invalid(format!("expected {count} values, found {}", params.len())));
        }
        Ok(Self {
            family,
            shape,
            seed,
            params,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn text_round_trip_is_bit_exact(
            params in prop::collection::vec(any::<f64>().prop_filter("finite", |x| x.is_finite()), 0..64),
            seed in any::<u64>(),
        ) {
            let snap = Snapshot { family: "mlp".into(), shape: vec![6, 64, 4], seed, params };
            let back = Snapshot::parse(&snap.to_text()).unwrap();
            prop_assert_eq!(back.params.len(), snap.params.len());
            for (a, b) in back.params.iter().zip(&snap.params) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
            prop_assert_eq!(back.seed, seed);
        }
    }

    #[test]
    fn rejects_truncated_body() {
        let snap = Snapshot { family: "bernoulli".into(), shape: vec![1], seed: 0, params: vec![0.5] };
        let text = snap.to_text().replace("count 1", "count 2");
        assert!(Snapshot::parse(&text).is_err());
    }
}
