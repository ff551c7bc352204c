//! Serialization of reals and a few float helpers shared across modules.
//!
//! Reals are written as decimal strings (Rust's shortest round-trip
//! representation) so that transcripts and records compare byte-for-byte
//! across languages. Plain numbers are still accepted on input.

use serde_with::{DisplayFromStr, PickFirst, Same};

/// `serde_as` adapter: serialize as a decimal string, accept string or number.
pub type Real = PickFirst<(DisplayFromStr, Same)>;

/// Arithmetic mean; `0.0` for an empty slice.
pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n - 1 denominator); `0.0` below two samples.
pub fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    libm::sqrt(ss / (xs.len() - 1) as f64)
}

/// Standard error of the mean.
pub fn std_error(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    sample_std(xs) / libm::sqrt(xs.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::{Deserialize, Serialize};
    use serde_with::serde_as;

    #[serde_as]
    #[derive(Serialize, Deserialize, Debug, PartialEq)]
    struct Holder {
        #[serde_as(as = "Real")]
        x: f64,
        #[serde_as(as = "Vec<Real>")]
        v: Vec<f64>,
    }

    #[test]
    fn reals_round_trip_as_strings() {
        let h = Holder { x: 0.1, v: vec![f64::INFINITY, -2.5] };
        let s = serde_json::to_string(&h).unwrap();
        assert_eq!(s, r#"{"x":"0.1","v":["inf","-2.5"]}"#);
        assert_eq!(serde_json::from_str::<Holder>(&s).unwrap(), h);
        let plain: Holder = serde_json::from_str(r#"{"x":0.25,"v":[1]}"#).unwrap();
        assert_eq!(plain, Holder { x: 0.25, v: vec![1.0] });
    }

    #[test]
    fn moments() {
        assert_eq!(mean(&[]), 0.0);
        assert!((sample_std(&[1.0, 2.0, 3.0]) - 1.0).abs() < 1e-15);
    }
}
