//! Significant-digit float formatting for exports and reports.

/// Format with `digits` significant digits, switching to scientific
/// notation outside the positional-friendly exponent range (like `%g`,
/// but keeping trailing zeros so widths stay stable).
pub(crate) fn fmt_sig(value: f64, digits: usize) -> String {
    debug_assert!(digits >= 1);
    if value == 0.0 {
        return "0".to_string();
    }
    if !value.is_finite() {
        return value.to_string();
    }
    let exp = value.abs().log10().floor() as i32;
    if exp < -4 || exp >= digits as i32 {
        format!("{:.*e}", digits - 1, value)
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        format!("{:.*}", decimals, value)
    }
}
