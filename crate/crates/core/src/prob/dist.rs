//! Elementary one-dimensional distributions.
//!
//! Every continuous draw and every discrete draw consumes exactly one
//! uniform from the stream (inverse-CDF sampling throughout), so replaying
//! a stream reproduces samples one-for-one.

use core::f64::consts::LN_2;

use serde::{Deserialize, Serialize};
use serde_with::serde_as;
use thiserror::Error;

use super::rng::RngState;
use super::special::{
    ln_gamma, ln_std_normal_cdf, ln_std_normal_pdf, std_normal_cdf, std_normal_quantile,
};
use crate::num::Real;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProbError {
    #[error("invalid distribution parameters: {0}")]
    InvalidParams(&'static str),
}

/// A tagged 1-D distribution; the unit of every prior and likelihood.
#[serde_as]
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistributionSpec {
    Normal {
        #[serde_as(as = "Real")]
        mean: f64,
        #[serde_as(as = "Real")]
        sigma: f64,
    },
    /// Normal restricted to `[low, high]`; `high` may be `+inf`.
    TruncatedNormal {
        #[serde_as(as = "Real")]
        mean: f64,
        #[serde_as(as = "Real")]
        sigma: f64,
        #[serde_as(as = "Real")]
        low: f64,
        #[serde_as(as = "Real")]
        high: f64,
    },
    /// |N(0, scale)|.
    HalfNormal {
        #[serde_as(as = "Real")]
        scale: f64,
    },
    Uniform {
        #[serde_as(as = "Real")]
        low: f64,
        #[serde_as(as = "Real")]
        high: f64,
    },
    /// Integers `low..=high`, equally likely.
    DiscreteUniform { low: i64, high: i64 },
    Bernoulli {
        #[serde_as(as = "Real")]
        p: f64,
    },
    Binomial {
        n: u64,
        #[serde_as(as = "Real")]
        p: f64,
    },
    Poisson {
        #[serde_as(as = "Real")]
        rate: f64,
    },
}

impl DistributionSpec {
    pub fn validate(&self) -> Result<(), ProbError> {
        use DistributionSpec::*;
        let ok = |c: bool, msg| if c { Ok(()) } else { Err(ProbError::InvalidParams(msg)) };
        match *self {
            Normal { mean, sigma } => {
                ok(mean.is_finite(), "normal mean must be finite")?;
                ok(sigma > 0.0 && sigma.is_finite(), "sigma must be > 0")
            }
            TruncatedNormal { mean, sigma, low, high } => {
                ok(mean.is_finite(), "truncated_normal mean must be finite")?;
                ok(sigma > 0.0 && sigma.is_finite(), "sigma must be > 0")?;
                ok(!low.is_nan() && !high.is_nan() && low < high, "low must be < high")
            }
            HalfNormal { scale } => ok(scale > 0.0 && scale.is_finite(), "scale must be > 0"),
            Uniform { low, high } => {
                ok(low.is_finite() && high.is_finite() && low < high, "low must be < high")
            }
            DiscreteUniform { low, high } => ok(low <= high, "low must be <= high"),
            Bernoulli { p } => ok((0.0..=1.0).contains(&p), "p must lie in [0, 1]"),
            Binomial { p, .. } => ok((0.0..=1.0).contains(&p), "p must lie in [0, 1]"),
            Poisson { rate } => ok(rate > 0.0 && rate.is_finite(), "rate must be > 0"),
        }
    }

    /// True for distributions over integers.
    pub fn is_discrete(&self) -> bool {
        matches!(
            self,
            DistributionSpec::DiscreteUniform { .. }
                | DistributionSpec::Bernoulli { .. }
                | DistributionSpec::Binomial { .. }
                | DistributionSpec::Poisson { .. }
        )
    }

    /// One sample; integer-valued kinds return whole numbers.
    pub fn draw(&self, rng: &mut RngState) -> Result<f64, ProbError> {
        self.validate()?;
        let u = rng.uniform();
        Ok(self.quantile_unchecked(u))
    }

    /// Inverse CDF at `u` in (0, 1).
    pub fn quantile(&self, u: f64) -> Result<f64, ProbError> {
        self.validate()?;
        if !(u > 0.0 && u < 1.0) {
            return Err(ProbError::InvalidParams("quantile level must lie in (0, 1)"));
        }
        Ok(self.quantile_unchecked(u))
    }

    /// Inverse CDF at `u` in (0, 1). Parameters are assumed valid.
    fn quantile_unchecked(&self, u: f64) -> f64 {
        use DistributionSpec::*;
        match *self {
            Normal { mean, sigma } => mean + sigma * std_normal_quantile(u),
            TruncatedNormal { mean, sigma, low, high } => {
                truncated_normal_quantile(mean, sigma, low, high, u)
            }
            // upper tail through the lower-tail quantile keeps full precision
            HalfNormal { scale } => -scale * std_normal_quantile(0.5 * u),
            Uniform { low, high } => low + (high - low) * u,
            DiscreteUniform { low, high } => {
                let span = (high - low + 1) as f64;
                let k = libm::floor(u * span) as i64;
                (low + k.min(high - low)) as f64
            }
            Bernoulli { p } => {
                if u < p {
                    1.0
                } else {
                    0.0
                }
            }
            Binomial { n, p } => binomial_quantile(n, p, u) as f64,
            Poisson { rate } => poisson_quantile(rate, u) as f64,
        }
    }

    /// Natural-log density or mass at `x`; `-inf` outside the support.
    pub fn log_prob(&self, x: f64) -> f64 {
        use DistributionSpec::*;
        if x.is_nan() {
            return f64::NEG_INFINITY;
        }
        match *self {
            Normal { mean, sigma } => ln_std_normal_pdf((x - mean) / sigma) - libm::log(sigma),
            TruncatedNormal { mean, sigma, low, high } => {
                if x < low || x > high {
                    return f64::NEG_INFINITY;
                }
                ln_std_normal_pdf((x - mean) / sigma)
                    - libm::log(sigma)
                    - ln_normal_mass((low - mean) / sigma, (high - mean) / sigma)
            }
            HalfNormal { scale } => {
                if x < 0.0 {
                    return f64::NEG_INFINITY;
                }
                LN_2 + ln_std_normal_pdf(x / scale) - libm::log(scale)
            }
            Uniform { low, high } => {
                if x < low || x > high {
                    f64::NEG_INFINITY
                } else {
                    -libm::log(high - low)
                }
            }
            DiscreteUniform { low, high } => {
                if !is_whole(x) || x < low as f64 || x > high as f64 {
                    f64::NEG_INFINITY
                } else {
                    -libm::log((high - low + 1) as f64)
                }
            }
            Bernoulli { p } => {
                if x == 1.0 {
                    libm::log(p)
                } else if x == 0.0 {
                    libm::log1p(-p)
                } else {
                    f64::NEG_INFINITY
                }
            }
            Binomial { n, p } => {
                if !is_whole(x) || x < 0.0 || x > n as f64 {
                    return f64::NEG_INFINITY;
                }
                binomial_ln_pmf(n, p, x as u64)
            }
            Poisson { rate } => {
                if !is_whole(x) || x < 0.0 {
                    return f64::NEG_INFINITY;
                }
                x * libm::log(rate) - rate - ln_gamma(x + 1.0)
            }
        }
    }
}

fn is_whole(x: f64) -> bool {
    x.is_finite() && libm::floor(x) == x
}

/// ln(Phi(b) - Phi(a)) for standardized bounds, accurate in either tail.
pub(crate) fn ln_normal_mass(a: f64, b: f64) -> f64 {
    if a > 0.0 {
        // mirror into the lower tail
        return ln_normal_mass(-b, -a);
    }
    let lb = ln_std_normal_cdf(b);
    let la = ln_std_normal_cdf(a);
    if la == f64::NEG_INFINITY {
        return lb;
    }
    lb + libm::log1p(-libm::exp(la - lb))
}

fn truncated_normal_quantile(mean: f64, sigma: f64, low: f64, high: f64, u: f64) -> f64 {
    let a = (low - mean) / sigma;
    let b = (high - mean) / sigma;
    let z = if a > 0.0 {
        // work in the mirrored lower tail for precision
        let (fa, fb) = (std_normal_cdf(-b), std_normal_cdf(-a));
        -std_normal_quantile(fb - u * (fb - fa))
    } else {
        let (fa, fb) = (std_normal_cdf(a), std_normal_cdf(b));
        std_normal_quantile(fa + u * (fb - fa))
    };
    (mean + sigma * z).clamp(low, high)
}

fn binomial_ln_pmf(n: u64, p: f64, k: u64) -> f64 {
    if p == 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if p == 1.0 {
        return if k == n { 0.0 } else { f64::NEG_INFINITY };
    }
    let (nf, kf) = (n as f64, k as f64);
    ln_gamma(nf + 1.0) - ln_gamma(kf + 1.0) - ln_gamma(nf - kf + 1.0)
        + kf * libm::log(p)
        + (nf - kf) * libm::log1p(-p)
}

/// Inverse-CDF search for integer distributions, started at the mode so the
/// cost is O(spread) rather than O(value). `up(k)` is pmf(k+1)/pmf(k) and
/// `down(k)` is pmf(k-1)/pmf(k).
fn discrete_quantile(
    u: f64,
    mode: u64,
    ln_pmf_mode: f64,
    max: u64,
    up: impl Fn(u64) -> f64,
    down: impl Fn(u64) -> f64,
) -> u64 {
    let pmf_mode = libm::exp(ln_pmf_mode);
    // mass strictly below the mode
    let mut below = 0.0;
    let mut pk = pmf_mode;
    let mut k = mode;
    while k > 0 {
        pk *= down(k);
        k -= 1;
        below += pk;
        if pk <= 1e-18 * (below + pmf_mode) {
            break;
        }
    }
    let mut cdf = below + pmf_mode;
    let mut k = mode;
    let mut pk = pmf_mode;
    if u <= cdf {
        while k > 0 {
            let lower_cdf = cdf - pk;
            if u > lower_cdf {
                break;
            }
            cdf = lower_cdf;
            pk *= down(k);
            k -= 1;
        }
        k
    } else {
        while u > cdf && k < max {
            pk *= up(k);
            k += 1;
            if pk == 0.0 {
                break;
            }
            cdf += pk;
        }
        k
    }
}

fn binomial_quantile(n: u64, p: f64, u: f64) -> u64 {
    if p <= 0.0 || n == 0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    let q = 1.0 - p;
    let mode = (libm::floor((n as f64 + 1.0) * p) as u64).min(n);
    let odds = p / q;
    discrete_quantile(
        u,
        mode,
        binomial_ln_pmf(n, p, mode),
        n,
        |k| (n - k) as f64 / (k + 1) as f64 * odds,
        |k| k as f64 / (n - k + 1) as f64 / odds,
    )
}

fn poisson_quantile(rate: f64, u: f64) -> u64 {
    let mode = libm::floor(rate) as u64;
    let ln_pmf = mode as f64 * libm::log(rate) - rate - ln_gamma(mode as f64 + 1.0);
    discrete_quantile(
        u,
        mode,
        ln_pmf,
        u64::MAX,
        |k| rate / (k + 1) as f64,
        |k| k as f64 / rate,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;
    use DistributionSpec::*;

    fn draws(d: &DistributionSpec, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = RngState::new(seed);
        (0..n).map(|_| d.draw(&mut rng).unwrap()).collect()
    }

    #[test]
    fn degenerate_bernoulli() {
        assert!(draws(&Bernoulli { p: 0.0 }, 1000, 1).iter().all(|x| *x == 0.0));
        assert!(draws(&Bernoulli { p: 1.0 }, 1000, 1).iter().all(|x| *x == 1.0));
    }

    #[test]
    fn binomial_sample_mean() {
        // mean 50, sd 5; 1e4 draws give s.e. 0.05, 3 s.e. = 0.15 (<< 1.5)
        let xs = draws(&Binomial { n: 100, p: 0.5 }, 10_000, 2);
        let m = crate::num::mean(&xs);
        assert!((m - 50.0).abs() < 1.5, "mean {m}");
    }

    #[test]
    fn half_normal_sample_mean() {
        let xs = draws(&HalfNormal { scale: 2.0 }, 10_000, 3);
        let expect = 2.0 * (2.0 / core::f64::consts::PI).sqrt();
        let sd = 2.0 * (1.0 - 2.0 / core::f64::consts::PI).sqrt();
        let m = crate::num::mean(&xs);
        assert!((m - expect).abs() < 3.0 * sd / 100.0, "mean {m} vs {expect}");
        assert!(xs.iter().all(|x| *x >= 0.0));
    }

    #[test]
    fn log_prob_examples() {
        assert!((Bernoulli { p: 0.5 }.log_prob(1.0) - 0.5f64.ln()).abs() < 1e-15);
        assert!((Poisson { rate: 1.0 }.log_prob(0.0) + 1.0).abs() < 1e-15);
        let tn = TruncatedNormal { mean: 1.0, sigma: 1.0, low: 0.0, high: f64::INFINITY };
        let expect = ln_std_normal_pdf(0.0) - std_normal_cdf(1.0).ln();
        assert!((tn.log_prob(1.0) - expect).abs() < 1e-14);
        assert_eq!(tn.log_prob(-0.1), f64::NEG_INFINITY);
        assert_eq!(Binomial { n: 3, p: 0.5 }.log_prob(4.0), f64::NEG_INFINITY);
        assert_eq!(Poisson { rate: 2.0 }.log_prob(1.5), f64::NEG_INFINITY);
    }

    #[test]
    fn truncated_normal_density_integrates_to_one() {
        // trapezoid quadrature of exp(log_prob) over the support
        let tn = TruncatedNormal { mean: 1.0, sigma: 1.0, low: 0.0, high: f64::INFINITY };
        let h = 1e-3;
        let mut total = 0.0;
        let mut x = 0.0;
        while x < 12.0 {
            total += 0.5 * h * (tn.log_prob(x).exp() + tn.log_prob(x + h).exp());
            x += h;
        }
        assert!((total - 1.0).abs() < 1e-6, "{total}");
    }

    #[test]
    fn truncated_normal_upper_tail_window() {
        let tn = TruncatedNormal { mean: 0.0, sigma: 1.0, low: 6.0, high: 7.0 };
        for x in draws(&tn, 1000, 5) {
            assert!((6.0..=7.0).contains(&x));
        }
    }

    #[test]
    fn discrete_masses_sum_to_one() {
        for d in [Binomial { n: 40, p: 0.3 }, Binomial { n: 7, p: 0.99 }] {
            let n = if let Binomial { n, .. } = d { n } else { 0 };
            let s: f64 = (0..=n).map(|k| d.log_prob(k as f64).exp()).sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
        for rate in [0.3, 4.0, 60.0] {
            let d = Poisson { rate };
            let s: f64 = (0..2000).map(|k| d.log_prob(k as f64).exp()).sum();
            assert!((s - 1.0).abs() < 1e-12, "rate {rate}: {s}");
        }
        let b = Bernoulli { p: 0.3 };
        assert!((b.log_prob(0.0).exp() + b.log_prob(1.0).exp() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn discrete_quantile_matches_cdf_walk() {
        // brute-force inverse CDF from zero as the oracle
        let cases = [(Poisson { rate: 3.5 }, 200u64), (Poisson { rate: 250.0 }, 800), (Binomial { n: 60, p: 0.35 }, 60)];
        for (d, max) in cases {
            for i in 1..200 {
                let u = i as f64 / 200.0;
                let mut cdf = 0.0;
                let mut expect = max;
                for k in 0..=max {
                    cdf += d.log_prob(k as f64).exp();
                    if u <= cdf {
                        expect = k;
                        break;
                    }
                }
                let got = d.quantile_unchecked(u) as u64;
                assert!(got.abs_diff(expect) <= 1, "{d:?} u={u}: {got} vs {expect}");
            }
        }
    }

    #[test]
    fn huge_poisson_rate_is_fast_and_centered() {
        let rate = 20f64.exp();
        let xs = draws(&Poisson { rate }, 200, 9);
        let m = crate::num::mean(&xs);
        assert!((m - rate).abs() < 5.0 * rate.sqrt() / (200f64).sqrt() + 1.0);
    }

    #[test]
    fn invalid_params_rejected() {
        let mut rng = RngState::new(0);
        assert!(Normal { mean: 0.0, sigma: 0.0 }.draw(&mut rng).is_err());
        assert!(Bernoulli { p: 1.5 }.draw(&mut rng).is_err());
        assert!(Uniform { low: 1.0, high: 1.0 }.draw(&mut rng).is_err());
        assert!(Poisson { rate: -1.0 }.draw(&mut rng).is_err());
        assert!(TruncatedNormal { mean: 0.0, sigma: 1.0, low: 2.0, high: 1.0 }.validate().is_err());
    }

    #[test]
    fn serde_infinite_bound() {
        let tn = TruncatedNormal { mean: 1.0, sigma: 1.0, low: 0.0, high: f64::INFINITY };
        let s = serde_json::to_string(&tn).unwrap();
        assert_eq!(s, r#"{"kind":"truncated_normal","mean":"1","sigma":"1","low":"0","high":"inf"}"#);
        assert_eq!(serde_json::from_str::<DistributionSpec>(&s).unwrap(), tn);
    }
}
