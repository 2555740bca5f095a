//! Locale-independent number formatting for CSV and stdout.

const SIGNIFICANT: usize = 15;

/// Formats like C's `%.15g`: 15 significant digits, trailing zeros
/// removed, scientific notation outside `[1e-5, 1e15)`.
pub fn format_number(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", SIGNIFICANT - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= SIGNIFICANT as i32 {
        return format!("{}e{}{:02}", trim(mantissa), if exp < 0 { '-' } else { '+' }, exp.abs());
    }
    let decimals = (SIGNIFICANT as i32 - 1 - exp).max(0) as usize;
    trim(&format!("{x:.decimals$}")).to_string()
}

fn trim(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::format_number;

    #[test]
    fn matches_percent_g() {
        assert_eq!(format_number(0.0), "0");
        assert_eq!(format_number(-0.0), "0");
        assert_eq!(format_number(1.0), "1");
        assert_eq!(format_number(0.925), "0.925");
        assert_eq!(format_number(0.1), "0.1");
        assert_eq!(format_number(1.0 - 0.75 * 0.1), "0.925");
        assert_eq!(format_number(0.952573750000000_3), "0.95257375");
        assert_eq!(format_number(4.0 / 3.0), "1.33333333333333");
        assert_eq!(format_number(-2.5), "-2.5");
        assert_eq!(format_number(1.5e-7), "1.5e-07");
        assert_eq!(format_number(123456.0), "123456");
        assert_eq!(format_number(1e20), "1e+20");
    }
}
