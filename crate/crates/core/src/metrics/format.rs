//! Number rendering. All rounding in the crate happens here, at output
//! time, half away from zero on the decimal representation.

use serde::{Deserialize, Deserializer, Serializer};

const NAN: &str = "nan";

/// `x` rounded to `decimals` places, half away from zero. Non-finite values
/// render as `nan`.
///
/// The value is first printed with 12 decimals, so binary artifacts such as
/// 86.925 being stored as 86.92499999... do not flip the rounding.
pub fn format_rounded(x: f64, decimals: usize) -> String {
    assert!(decimals < 12, "at most 11 decimals");
    if !x.is_finite() {
        return NAN.to_string();
    }
    let printed = format!("{:.12}", x.abs());
    let (int, frac) = printed.split_once('.').expect("fixed notation has a point");
    let mut digits: Vec<u8> = int.bytes().chain(frac.bytes()).map(|b| b - b'0').collect();
    let keep = int.len() + decimals;
    let round_up = digits[keep] >= 5;
    digits.truncate(keep);
    let mut int_len = int.len();
    if round_up {
        let mut i = keep;
        loop {
            if i == 0 {
                digits.insert(0, 1);
                int_len += 1;
                break;
            }
            i -= 1;
            if digits[i] == 9 {
                digits[i] = 0;
            } else {
                digits[i] += 1;
                break;
            }
        }
    }
    let mut out = String::new();
    if x < 0.0 && digits.iter().any(|&d| d != 0) {
        out.push('-');
    }
    out.extend(digits[..int_len].iter().map(|d| char::from(b'0' + d)));
    if decimals > 0 {
        out.push('.');
        out.extend(digits[int_len..].iter().map(|d| char::from(b'0' + d)));
    }
    out
}

/// Two-decimal rendering; `None` is `nan`.
pub fn fixed2(x: Option<f64>) -> String {
    x.map_or_else(|| NAN.to_string(), |v| format_rounded(v, 2))
}

/// Two-decimal rounding with trailing zeros dropped, keeping at least one
/// decimal: 100 → `100.0`, 43.5 → `43.5`, 98.333 → `98.33`.
pub fn short2(x: Option<f64>) -> String {
    let s = fixed2(x);
    if s == NAN {
        return s;
    }
    let trimmed = s.trim_end_matches('0');
    if trimmed.ends_with('.') {
        format!("{trimmed}0")
    } else {
        trimmed.to_string()
    }
}

/// `x` rounded to two decimals as a number.
pub fn round2(x: f64) -> f64 {
    format_rounded(x, 2).parse().unwrap_or(f64::NAN)
}

pub(crate) fn ser_round<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    if x.is_finite() {
        s.serialize_f64(round2(*x))
    } else {
        s.serialize_str(NAN)
    }
}

pub(crate) fn ser_round_opt<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match x {
        Some(v) => ser_round(v, s),
        None => s.serialize_str(NAN),
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum NumOrNan {
    Num(f64),
    Text(String),
}

pub(crate) fn de_opt<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
    match NumOrNan::deserialize(d)? {
        NumOrNan::Num(v) => Ok(Some(v)),
        NumOrNan::Text(t) if t.eq_ignore_ascii_case(NAN) => Ok(None),
        NumOrNan::Text(t) => Err(serde::de::Error::custom(format!("expected a number or \"nan\", got {t:?}"))),
    }
}

pub(crate) fn de_num<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    Ok(de_opt(d)?.unwrap_or(f64::NAN))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_away_from_zero() {
        assert_eq!(format_rounded(86.925, 2), "86.93");
        assert_eq!(format_rounded((72.0 + 80.5 + 95.2 + 100.0) / 4.0, 2), "86.93");
        assert_eq!(format_rounded(0.125, 2), "0.13");
        assert_eq!(format_rounded(-0.125, 2), "-0.13");
        assert_eq!(format_rounded(2.675, 2), "2.68");
        assert_eq!(format_rounded(99.995, 2), "100.00");
        assert_eq!(format_rounded(9.5, 0), "10");
        assert_eq!(format_rounded(-0.001, 2), "0.00");
        assert_eq!(format_rounded(f64::NAN, 2), "nan");
    }

    #[test]
    fn short_form() {
        assert_eq!(short2(Some(100.0)), "100.0");
        assert_eq!(short2(Some(43.5)), "43.5");
        assert_eq!(short2(Some(98.3333)), "98.33");
        assert_eq!(short2(Some(0.0)), "0.0");
        assert_eq!(short2(None), "nan");
    }
}
