//! Experiment drivers, configuration and CSV/image output.

use std::path::Path;

use crate::error::Result;

pub mod config;
pub mod experiments;
pub mod image;
pub mod imaging;
pub mod scan;
pub mod tables;

/// Writes a header row and records as comma-separated text.
pub fn write_csv_file<I, R>(path: &Path, header: &[&str], records: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut out = csv::Writer::from_path(path)?;
    out.write_record(header)?;
    for r in records {
        out.write_record(r)?;
    }
    out.flush()?;
    Ok(())
}

/// `%.12g`-style formatting: 12 significant digits, trailing zeros dropped,
/// scientific notation for very large or small magnitudes.
pub fn fmt_sig(v: f64) -> String {
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !v.is_finite() {
        return if v.is_nan() {
            "nan".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{v:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(&format!("{v:.decimals$}"))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::fmt_sig;

    #[test]
    fn matches_printf_g() {
        let cases = [
            (1.0, "1"),
            (0.1, "0.1"),
            (-2.5e-7, "-2.5e-07"),
            (123456789012.0, "123456789012"),
            (1234567890123.0, "1.23456789012e+12"),
            (1.0 / 3.0, "0.333333333333"),
            (0.00012345, "0.00012345"),
            (8.8155, "8.8155"),
            (9.99999999999e-5, "9.99999999999e-05"),
        ];
        for (v, want) in cases {
            assert_eq!(fmt_sig(v), want, "{v}");
        }
        assert_eq!(fmt_sig(0.0), "0");
    }

    #[test]
    fn round_trips_to_twelve_digits() {
        for v in [std::f64::consts::PI, -1e-300, 6.02214076e23, 0.19] {
            let back: f64 = fmt_sig(v).parse().unwrap();
            assert!(((back - v) / v).abs() < 1e-11);
        }
    }
}
