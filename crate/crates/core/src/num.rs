//! Number formatting shared by every CSV writer.

/// Shortest round-trip decimal, in scientific notation for very small or
/// large magnitudes; negative zero prints as `0.0`.
pub(crate) fn num(v: f64) -> String {
    if v == 0.0 {
        "0.0".into()
    } else {
        format!("{v:?}")
    }
}

#[cfg(test)]
mod tests {
    use super::num;

    #[test]
    fn formats() {
        assert_eq!(num(-0.0), "0.0");
        assert_eq!(num(62.5), "62.5");
        assert_eq!(num(2.5e-25), "2.5e-25");
        assert_eq!(num(2.5e-25).parse::<f64>().unwrap(), 2.5e-25);
    }
}
