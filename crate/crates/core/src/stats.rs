//! Small order-statistics helpers shared by the fitter and the pattern module.

/// Quantile of ascending `sorted` at probability `p` with linear interpolation
/// between order statistics (`h = (n - 1) p`).
pub(crate) fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}
