//! Number formatting for reports.

/// Energy with 9 significant digits; scientific with a two-digit exponent
/// (`-9.54380000e-02`) when |E| < 0.1, fixed-point otherwise.
pub fn fmt_energy(e: f64) -> String {
    if !e.is_finite() {
        return format!("{e}");
    }
    if e == 0.0 {
        return "0.00000000".into();
    }
    if e.abs() < 0.1 {
        fmt_sci(e, 8)
    } else {
        let mag = e.abs().log10().floor() as i32;
        let decimals = (8 - mag).max(0) as usize;
        let s = format!("{e:.decimals$}");
        // rounding can carry into a new digit (e.g. 9.99999999995)
        let digits = s.trim_start_matches('-').replace('.', "").trim_start_matches('0').len();
        if digits > 9 && decimals > 0 {
            let d = decimals - 1;
            format!("{e:.d$}")
        } else {
            s
        }
    }
}

/// Scientific notation with `decimals` mantissa digits and an exponent of
/// at least two digits.
pub fn fmt_sci(x: f64, decimals: usize) -> String {
    let s = format!("{x:.decimals$e}");
    match s.split_once('e') {
        Some((mant, exp)) => {
            let (sign, digits) = match exp.strip_prefix('-') {
                Some(d) => ('-', d),
                None => ('+', exp),
            };
            format!("{mant}e{sign}{digits:0>2}")
        }
        None => s,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_style() {
        assert_eq!(fmt_energy(-9.5438e-2), "-9.54380000e-02");
        assert_eq!(fmt_energy(-4.1916e-11), "-4.19160000e-11");
        assert_eq!(fmt_energy(-1.7887), "-1.78870000");
        assert_eq!(fmt_energy(-229.42916775), "-229.429168");
        assert_eq!(fmt_energy(-0.86087), "-0.860870000");
        assert_eq!(fmt_energy(-9.999999999), "-10.0000000");
        assert_eq!(fmt_sci(1.5e120, 3), "1.500e+120");
    }

    #[test]
    fn round_trips_nine_digits() {
        for &e in &[-1.234567891e-7, -0.123456789, -12345.6789, -0.0999999999] {
            let back: f64 = fmt_energy(e).parse().unwrap();
            assert!(((back - e) / e).abs() < 1e-8, "{e}");
        }
    }
}
