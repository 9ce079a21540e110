//! Exact rational helpers.
//!
//! Every probability in the engine is a [`Q`]; floating-point values only
//! appear at the edges (CLI output, simulation, tolerance-mode checks).

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact rational scalar used throughout the engine.
pub type Q = BigRational;

pub fn int(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn ratio(numer: i64, denom: i64) -> Q {
    Q::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn half() -> Q {
    ratio(1, 2)
}

/// `1 - x`.
pub fn bar(x: &Q) -> Q {
    Q::one() - x
}

pub fn pow(x: &Q, e: u32) -> Q {
    let mut acc = Q::one();
    for _ in 0..e {
        acc *= x;
    }
    acc
}

pub fn to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

pub fn is_unit_interval(x: &Q) -> bool {
    !x.is_negative() && *x <= Q::one()
}

/// Parses a decimal literal (`0.8`, `-1.25e-3`, `7`) or a fraction (`3/4`)
/// into the exact rational it denotes.
pub fn parse_decimal(text: &str) -> Option<Q> {
    let s = text.trim();
    if s.is_empty() {
        return None;
    }
    if let Some((n, d)) = s.split_once('/') {
        let n = parse_decimal(n)?;
        let d = parse_decimal(d)?;
        if d.is_zero() {
            return None;
        }
        return Some(n / d);
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => (&s[..pos], s[pos + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let all: String = format!("{int_part}{frac_part}");
    let numer: BigInt = if all.is_empty() { BigInt::zero() } else { all.parse().ok()? };
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let mut value = Q::from_integer(numer);
    if scale >= 0 {
        value *= Q::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        value /= Q::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Some(if negative { -value } else { value })
}

/// The rational named by the shortest decimal that round-trips `x`,
/// so `0.8_f64` maps to `4/5` rather than its binary expansion.
pub fn from_f64_decimal(x: f64) -> Option<Q> {
    if !x.is_finite() {
        return None;
    }
    parse_decimal(&format!("{x}"))
}

/// Formats `x` rounded to `digits` significant digits in plain decimal
/// notation, trimming trailing zeros.
pub fn format_sig(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x.is_nan() { String::new() } else { "0".to_owned() };
    }
    let rounded: f64 = format!("{:.*e}", digits.saturating_sub(1), x)
        .parse()
        .unwrap_or(x);
    let s = format!("{rounded}");
    if s == "-0" {
        "0".to_owned()
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_decimals_exactly() {
        assert_eq!(parse_decimal("0.8"), Some(ratio(4, 5)));
        assert_eq!(parse_decimal("1"), Some(int(1)));
        assert_eq!(parse_decimal(".25"), Some(ratio(1, 4)));
        assert_eq!(parse_decimal("-1.5e-1"), Some(ratio(-3, 20)));
        assert_eq!(parse_decimal("3/4"), Some(ratio(3, 4)));
        assert_eq!(parse_decimal("2.5E2"), Some(int(250)));
        assert_eq!(parse_decimal("abc"), None);
        assert_eq!(parse_decimal("1/0"), None);
        assert_eq!(parse_decimal(""), None);
        assert_eq!(parse_decimal("."), None);
    }

    #[test]
    fn float_conversion_uses_shortest_decimal() {
        assert_eq!(from_f64_decimal(0.8), Some(ratio(4, 5)));
        assert_eq!(from_f64_decimal(0.05), Some(ratio(1, 20)));
        assert_eq!(from_f64_decimal(f64::NAN), None);
    }

    #[test]
    fn significant_digit_formatting() {
        assert_eq!(format_sig(0.2, 12), "0.2");
        assert_eq!(format_sig(1.0 / 3.0, 12), "0.333333333333");
        assert_eq!(format_sig(0.0, 12), "0");
        assert_eq!(format_sig(-0.16, 12), "-0.16");
        assert_eq!(format_sig(1.4 / 5.8, 12), "0.241379310345");
    }

    #[test]
    fn pow_and_bar() {
        assert_eq!(pow(&ratio(1, 5), 3), ratio(1, 125));
        assert_eq!(pow(&ratio(1, 5), 0), int(1));
        assert_eq!(bar(&ratio(4, 5)), ratio(1, 5));
    }
}
