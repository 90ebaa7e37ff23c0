//! Number formatting for text outputs.

/// 17 significant digits in scientific notation; round-trips every `f64` and
/// keeps text outputs byte-stable across runs.
pub fn sci(x: f64) -> String {
    format!("{x:.16e}")
}
