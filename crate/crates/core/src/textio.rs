//! Text formatting for data files.

/// Format an f64 with 17 significant digits in scientific notation, the
/// shortest width guaranteed to round-trip any finite double exactly.
pub fn float17(x: f64) -> String {
    format!("{x:.16e}")
}
