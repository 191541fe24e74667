//! Number formatting shared by the CSV artifacts: decimal point, 17
//! significant digits, no locale dependence.

/// Full-precision scientific notation; 17 significant digits round-trip
/// every finite double.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.16e}")
    }
}

pub fn parse_f64(s: &str) -> Option<f64> {
    match s {
        "nan" => Some(f64::NAN),
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        other => other.parse().ok(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrips_exactly() {
        for x in [
            0.1,
            1.5,
            -2.375e-11,
            9.869604401089358,
            f64::MIN_POSITIVE,
            1.7976931348623157e308,
        ] {
            let s = fmt_f64(x);
            assert!(s.contains('e'));
            assert_eq!(parse_f64(&s).unwrap().to_bits(), x.to_bits(), "{s}");
        }
        assert!(parse_f64(&fmt_f64(f64::NAN)).unwrap().is_nan());
        assert_eq!(parse_f64("inf"), Some(f64::INFINITY));
        assert_eq!(parse_f64("junk"), None);
    }
}
