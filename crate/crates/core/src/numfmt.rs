//! Canonical number rendering shared by the verbalizer and the chain parser.
//!
//! Clinical values are quantized to three decimals before they are scored,
//! so that the rendered text and the scored value are the same number.

/// Rounds to three decimals. The result is `k / 1000` for an integer `k`,
/// which is the closest `f64` to the decimal string [`format_value`] emits.
pub fn quantize(x: f64) -> f64 {
    let q = (x * 1000.0).round() / 1000.0;
    if q == 0.0 {
        0.0
    } else {
        q
    }
}

/// Renders a value in its shortest round-tripping decimal form with at least
/// one fractional digit (`1095.0`, `55.333`, `0.5`).
pub fn format_value(x: f64) -> String {
    let q = quantize(x);
    let s = format!("{q}");
    if s.contains('.') || s.contains("inf") || s.contains("NaN") {
        s
    } else {
        format!("{s}.0")
    }
}

/// Renders an observation time with two decimals (`-22.37`).
pub fn format_time(t: f64) -> String {
    let s = format!("{t:.2}");
    if s == "-0.00" {
        "0.00".to_string()
    } else {
        s
    }
}

/// Parses a decimal number as written by [`format_value`] or by a model.
/// Accepts an optional sign, digits and an optional fraction; rejects
/// exponents, `inf` and `NaN`.
pub fn parse_number(s: &str) -> Option<f64> {
    let body = s.strip_prefix('-').or_else(|| s.strip_prefix('+')).unwrap_or(s);
    let (int, frac) = match body.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (body, None),
    };
    let digits = |p: &str| !p.is_empty() && p.bytes().all(|b| b.is_ascii_digit());
    if !digits(int) || frac.is_some_and(|f| !digits(f)) {
        return None;
    }
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn renders_chain_style_values() {
        assert_eq!(format_value(1095.0), "1095.0");
        assert_eq!(format_value(166.0 / 3.0), "55.333");
        assert_eq!(format_value(0.5), "0.5");
        assert_eq!(format_value(62.8), "62.8");
        assert_eq!(format_value(-0.0), "0.0");
        assert_eq!(format_value(-1.25), "-1.25");
    }

    #[test]
    fn renders_times_with_two_decimals() {
        assert_eq!(format_time(-22.37), "-22.37");
        assert_eq!(format_time(-0.001), "0.00");
        assert_eq!(format_time(5.0), "5.00");
    }

    #[test]
    fn parse_rejects_non_decimal_forms() {
        assert_eq!(parse_number("11.0"), Some(11.0));
        assert_eq!(parse_number("-1"), Some(-1.0));
        assert_eq!(parse_number("1e3"), None);
        assert_eq!(parse_number("inf"), None);
        assert_eq!(parse_number("."), None);
        assert_eq!(parse_number("1."), None);
        assert_eq!(parse_number(""), None);
    }

    proptest! {
        #[test]
        fn formatted_values_parse_back_to_the_quantized_value(x in -1.0e7f64..1.0e7) {
            let text = format_value(x);
            prop_assert_eq!(parse_number(&text), Some(quantize(x)));
        }

        #[test]
        fn quantize_is_idempotent(x in -1.0e7f64..1.0e7) {
            prop_assert_eq!(quantize(quantize(x)), quantize(x));
        }
    }
}
