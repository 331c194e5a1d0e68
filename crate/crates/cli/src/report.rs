//! CSV output helpers.

use std::io::Write;

/// Version plus `git describe` of the build, recorded in every CSV row.
pub const BUILD_ID: &str = env!("GEOCLIQUE_BUILD_ID");

/// Formats `x` with 9 significant digits.
pub fn sig9(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    if x == 0.0 {
        return "0".into();
    }
    let mut exp = x.abs().log10().floor() as i32;
    // Rounding can carry into a new leading digit; one retry settles it.
    for _ in 0..2 {
        if !(-4..9).contains(&exp) {
            break;
        }
        let decimals = (8 - exp) as usize;
        let s = format!("{x:.decimals$}");
        let digits = s
            .trim_start_matches('-')
            .replace('.', "")
            .trim_start_matches('0')
            .len();
        if digits <= 9 {
            return s;
        }
        exp += 1;
    }
    format!("{x:.8e}")
}

/// Writes a header and rows with the `csv` crate.
pub fn write_csv<W: Write>(out: W, header: &[&str], rows: &[Vec<String>]) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(sig9(1.0), "1.00000000");
        assert_eq!(sig9(-0.5), "-0.500000000");
        assert_eq!(sig9(123.456), "123.456000");
        assert_eq!(sig9(17.7049), "17.7049000");
        assert_eq!(sig9(1e-7), "1.00000000e-7");
        assert_eq!(sig9(2.5e12), "2.50000000e12");
        assert_eq!(sig9(0.0), "0");
        assert_eq!(sig9(f64::INFINITY), "inf");
        assert_eq!(sig9(999_999_999.6), "1.00000000e9");
    }
}
