//! Special functions.
//!
//! `std_normal_cdf` is built on `libm::erfc`, a port of the FreeBSD msun
//! routine with sub-ulp error, well inside the 1e-7 absolute error budget
//! the choice-probability oracles rely on. The inverse CDF is Wichura's
//! AS241 (PPND16), accurate to about 1e-16.

use core::f64::consts::FRAC_1_SQRT_2;

/// ln(sqrt(2 pi)).
pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Standard normal CDF.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Natural log of the standard normal CDF, stable in the lower tail.
pub fn ln_std_normal_cdf(x: f64) -> f64 {
    if x > -30.0 {
        libm::log(std_normal_cdf(x))
    } else {
        // Mills-ratio asymptote: Phi(x) ~ phi(x)/|x| (1 - 1/x^2 + 3/x^4).
        let x2 = x * x;
        -0.5 * x2 - LN_SQRT_2PI - libm::log(-x) + libm::log1p(-1.0 / x2 + 3.0 / (x2 * x2))
    }
}

/// Standard normal log density.
pub fn ln_std_normal_pdf(x: f64) -> f64 {
    -0.5 * x * x - LN_SQRT_2PI
}

/// Standard normal density.
pub fn std_normal_pdf(x: f64) -> f64 {
    libm::exp(ln_std_normal_pdf(x))
}

/// Inverse standard normal CDF (AS241). `p` outside (0, 1) maps to +-inf.
pub fn std_normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let q = p - 0.5;
    if libm::fabs(q) <= 0.425 {
        let r = 0.180625 - q * q;
        return q
            * (((((((r * 2509.080_928_730_122_7 + 33430.575_583_588_128) * r
                + 67265.770_927_008_700)
                * r
                + 45921.953_931_549_871)
                * r
                + 13731.693_765_509_461)
                * r
                + 1971.590_950_306_551_3)
                * r
                + 133.141_667_891_784_38)
                * r
                + 3.387_132_872_796_366_5)
            / (((((((r * 5226.495_278_852_545_5 + 28729.085_735_721_943) * r
                + 39307.895_800_092_710)
                * r
                + 21213.794_301_586_596)
                * r
                + 5394.196_021_424_751_1)
                * r
                + 687.187_007_492_057_91)
                * r
                + 42.313_330_701_600_911)
                * r
                + 1.0);
    }
    let tail = if q < 0.0 { p } else { 1.0 - p };
    let mut r = libm::sqrt(-libm::log(tail));
    let val = if r <= 5.0 {
        r -= 1.6;
        (((((((r * 7.745_450_142_783_414_1e-4 + 0.022_723_844_989_269_184) * r
            + 0.241_780_725_177_450_61)
            * r
            + 1.270_458_252_452_368_4)
            * r
            + 3.647_848_324_763_204_5)
            * r
            + 5.769_497_221_460_691_4)
            * r
            + 4.630_337_846_156_545_3)
            * r
            + 1.423_437_110_749_683_5)
            / (((((((r * 1.050_750_071_644_416_9e-9 + 5.475_938_084_995_344_9e-4) * r
                + 0.015_198_666_563_616_457)
                * r
                + 0.148_103_976_427_480_07)
                * r
                + 0.689_767_334_985_100_0)
                * r
                + 1.676_384_830_183_803_8)
                * r
                + 2.053_191_626_637_758_8)
                * r
                + 1.0)
    } else {
        r -= 5.0;
        (((((((r * 2.010_334_399_292_288_1e-7 + 2.711_555_568_743_487_6e-5) * r
            + 0.001_242_660_947_388_078_4)
            * r
            + 0.026_532_189_526_576_123)
            * r
            + 0.296_560_571_828_504_89)
            * r
            + 1.784_826_539_917_291_3)
            * r
            + 5.463_784_911_164_114_4)
            * r
            + 6.657_904_643_501_103_8)
            / (((((((r * 2.044_263_103_389_939_7e-15 + 1.421_511_758_316_446e-7) * r
                + 1.846_318_317_510_054_8e-5)
                * r
                + 7.868_691_311_456_132_6e-4)
                * r
                + 0.014_875_361_290_850_615)
                * r
                + 0.136_929_880_922_735_81)
                * r
                + 0.599_832_206_555_887_9)
                * r
                + 1.0)
    };
    if q < 0.0 {
        -val
    } else {
        val
    }
}

/// Logistic sigmoid, evaluated without overflow for large |x|.
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

/// ln Gamma(x) for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// ln(sum(exp(xs))). Returns -inf for an empty slice or all -inf entries.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let s: f64 = xs.iter().map(|x| libm::exp(x - max)).sum();
    max + libm::log(s)
}

/// Shannon entropy (nats) of a probability vector; zero entries contribute 0.
pub fn entropy(ps: &[f64]) -> f64 {
    ps.iter()
        .filter(|p| **p > 0.0)
        .map(|p| -p * libm::log(*p))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent route to Phi: Maclaurin series of erf,
    /// erf(z) = 2/sqrt(pi) * sum_n (-1)^n z^(2n+1) / (n! (2n+1)).
    fn phi_series(x: f64) -> f64 {
        let z = x / core::f64::consts::SQRT_2;
        let mut term = z;
        let mut sum = z;
        for n in 1..200 {
            term *= -z * z / n as f64;
            sum += term / (2 * n + 1) as f64;
        }
        0.5 + sum / core::f64::consts::PI.sqrt()
    }

    #[test]
    fn cdf_matches_series_oracle() {
        for i in -40..=40 {
            let x = i as f64 * 0.1;
            assert!((std_normal_cdf(x) - phi_series(x)).abs() < 1e-7, "x={x}");
        }
        assert_eq!(std_normal_cdf(0.0), 0.5);
        assert!((std_normal_cdf(1.959964) - 0.975).abs() < 1e-6);
        assert!((phi_series(1.959964) - 0.975).abs() < 1e-6);
    }

    #[test]
    fn cdf_reflection() {
        for i in 0..100 {
            let x = i as f64 * 0.07;
            assert!((std_normal_cdf(-x) - (1.0 - std_normal_cdf(x))).abs() < 1e-15);
        }
    }

    #[test]
    fn quantile_inverts_cdf() {
        for i in 1..1000 {
            let p = i as f64 / 1000.0;
            let x = std_normal_quantile(p);
            assert!((std_normal_cdf(x) - p).abs() < 1e-14, "p={p}");
        }
        assert!((std_normal_quantile(1e-300) + 37.0471).abs() < 1e-3);
    }

    #[test]
    fn ln_cdf_tail_is_continuous() {
        let a = ln_std_normal_cdf(-29.999);
        let b = ln_std_normal_cdf(-30.001);
        assert!((a - b).abs() < 0.1, "{a} {b}");
        assert!(ln_std_normal_cdf(-40.0).is_finite());
    }

    #[test]
    fn logistic_and_lse() {
        assert_eq!(logistic(0.0), 0.5);
        assert!(logistic(-800.0) >= 0.0);
        assert_eq!(logistic(800.0), 1.0);
        let v = log_sum_exp(&[0.0, 0.0]);
        assert!((v - 2f64.ln()).abs() < 1e-15);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY]), f64::NEG_INFINITY);
        assert!((entropy(&[0.5, 0.5]) - 2f64.ln()).abs() < 1e-15);
    }
}
