//! Emotions a gambling outcome evokes, rated on a 1 to 9 scale.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use serde_with::serde_as;

use super::{
    check_prior, lookup, ConfigError, Design, EnvDescription, EnvId, Environment, FieldSpec,
    Framing, GoalId, Latents, Outcome, QueryInput, Rejection, Value,
};
use crate::num::Real;
use crate::prob::ln_normal_mass;
use crate::prob::{DistributionSpec, RngState};

pub const EMOTIONS: [&str; 8] = [
    "happiness",
    "sadness",
    "anger",
    "surprise",
    "fear",
    "disgust",
    "contentment",
    "disappointment",
];

const LIKERT_MIN: u8 = 1;
const LIKERT_MAX: u8 = 9;

#[serde_as]
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmotionCoefficients {
    #[serde_as(as = "Real")]
    pub alpha: f64,
    #[serde_as(as = "Real")]
    pub beta_win: f64,
    #[serde_as(as = "Real")]
    pub beta_pe: f64,
    #[serde_as(as = "Real")]
    pub beta_abs_pe: f64,
}

/// Per-emotion regression means. `outcome` is 1-based.
pub fn emotion_means(coeffs: &[EmotionCoefficients], prizes: [f64; 3], probs: [f64; 3], outcome: u8) -> Vec<f64> {
    let win = prizes[outcome as usize - 1];
    let ev: f64 = prizes.iter().zip(probs).map(|(v, p)| v * p).sum();
    let pe = win - ev;
    coeffs
        .iter()
        .map(|c| c.alpha + c.beta_win * win + c.beta_pe * pe + c.beta_abs_pe * libm::fabs(pe))
        .collect()
}

/// Mass of each rating 1..=9 when a N(mean, sigma) draw is clamped to
/// `[1, 9]` and rounded.
pub fn likert_pmf(mean: f64, sigma: f64) -> [f64; 9] {
    let mut out = [0.0; 9];
    for (i, slot) in out.iter_mut().enumerate() {
        let (lo, hi) = likert_cell(i as u8 + LIKERT_MIN);
        *slot = libm::exp(ln_normal_mass((lo - mean) / sigma, (hi - mean) / sigma));
    }
    out
}

fn likert_cell(k: u8) -> (f64, f64) {
    let lo = if k == LIKERT_MIN { f64::NEG_INFINITY } else { k as f64 - 0.5 };
    let hi = if k == LIKERT_MAX { f64::INFINITY } else { k as f64 + 0.5 };
    (lo, hi)
}

fn to_likert(x: f64) -> u8 {
    libm::round(x.clamp(LIKERT_MIN as f64, LIKERT_MAX as f64)) as u8
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmotionPriors {
    pub alpha: DistributionSpec,
    pub beta_win: DistributionSpec,
    pub beta_pe: DistributionSpec,
    pub beta_abs_pe: DistributionSpec,
}

#[serde_as]
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmotionConfig {
    #[serde_as(as = "Real")]
    pub noise_sigma: f64,
    #[serde_as(as = "Real")]
    pub max_prize: f64,
    pub priors: EmotionPriors,
}

impl Default for EmotionConfig {
    fn default() -> Self {
        EmotionConfig {
            noise_sigma: 0.75,
            max_prize: 100.0,
            priors: EmotionPriors {
                alpha: DistributionSpec::Normal { mean: 5.0, sigma: 1.0 },
                beta_win: DistributionSpec::Normal { mean: 0.0, sigma: 0.05 },
                beta_pe: DistributionSpec::Normal { mean: 0.0, sigma: 0.05 },
                beta_abs_pe: DistributionSpec::Normal { mean: 0.0, sigma: 0.05 },
            },
        }
    }
}

/// One coefficient block per entry of [`EMOTIONS`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmotionLatents {
    pub coefficients: Vec<EmotionCoefficients>,
}

fn lat(l: &Latents) -> &EmotionLatents {
    match l {
        Latents::Emotions(x) => x,
        other => panic!("emotions given latents for another environment: {other:?}"),
    }
}

fn parts(d: &Design) -> ([f64; 3], [f64; 3], u8) {
    match d {
        Design::Emotions { prizes, probs, outcome } => (*prizes, *probs, *outcome),
        other => panic!("emotions given design for `{}`", other.env()),
    }
}

impl EmotionConfig {
    pub fn means(&self, latents: &Latents, design: &Design) -> Vec<f64> {
        let (prizes, probs, outcome) = parts(design);
        emotion_means(&lat(latents).coefficients, prizes, probs, outcome)
    }

    /// Expected rating under clamping and rounding.
    pub fn expected_rating(&self, mean: f64) -> f64 {
        likert_pmf(mean, self.noise_sigma).iter().enumerate().map(|(i, p)| (i + 1) as f64 * p).sum()
    }
}

impl Environment for EmotionConfig {
    fn id(&self) -> EnvId {
        EnvId::Emotions
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if !(self.noise_sigma > 0.0 && self.noise_sigma.is_finite()) {
            return Err(ConfigError::invalid("noise_sigma", "must be > 0"));
        }
        if !(self.max_prize > 0.0 && self.max_prize.is_finite()) {
            return Err(ConfigError::invalid("max_prize", "must be > 0"));
        }
        for (name, p) in self.priors() {
            check_prior(name, p)?;
        }
        Ok(())
    }

    fn priors(&self) -> Vec<(&'static str, &DistributionSpec)> {
        vec![
            ("alpha", &self.priors.alpha),
            ("beta_win", &self.priors.beta_win),
            ("beta_pe", &self.priors.beta_pe),
            ("beta_abs_pe", &self.priors.beta_abs_pe),
        ]
    }

    fn sample_latents(&self, rng: &mut RngState) -> Latents {
        let coefficients = EMOTIONS
            .iter()
            .map(|_| {
                let mut d = |s: &DistributionSpec| s.draw(rng).expect("validated prior");
                EmotionCoefficients {
                    alpha: d(&self.priors.alpha),
                    beta_win: d(&self.priors.beta_win),
                    beta_pe: d(&self.priors.beta_pe),
                    beta_abs_pe: d(&self.priors.beta_abs_pe),
                }
            })
            .collect();
        Latents::Emotions(EmotionLatents { coefficients })
    }

    fn check_design(&self, design: &Design) -> Result<(), Rejection> {
        let Design::Emotions { prizes, probs, outcome } = *design else {
            return Err(Rejection::wrong_env(self.id(), design));
        };
        for (i, v) in prizes.iter().enumerate() {
            super::check_range(&format!("v{}", i + 1), *v, 0.0, self.max_prize)?;
        }
        for (i, p) in probs.iter().enumerate() {
            super::check_range(&format!("p{}", i + 1), *p, 0.0, 1.0)?;
        }
        let total: f64 = probs.iter().sum();
        if libm::fabs(total - 1.0) > 1e-9 {
            return Err(Rejection::new("probabilities", format!("probabilities must sum to 1, got {total}")));
        }
        if !(1..=3).contains(&outcome) {
            return Err(Rejection::new("out_of_range", format!("outcome must be 1, 2 or 3, got {outcome}")));
        }
        if probs[outcome as usize - 1] <= 0.0 {
            return Err(Rejection::new("impossible_outcome", "the outcome must have positive probability"));
        }
        Ok(())
    }

    fn random_design(&self, rng: &mut RngState) -> Design {
        let prizes = [0; 3].map(|_| rng.uniform_range(0.0, self.max_prize));
        let (a, b) = (rng.uniform(), rng.uniform());
        let (lo, hi) = (a.min(b), a.max(b));
        let probs = [lo, hi - lo, 1.0 - hi];
        let u = rng.uniform();
        let outcome = if u < probs[0] {
            1
        } else if u < probs[0] + probs[1] {
            2
        } else {
            3
        };
        Design::Emotions { prizes, probs, outcome }
    }

    fn default_design(&self) -> Design {
        let m = self.max_prize;
        Design::Emotions { prizes: [0.5 * m, 0.2 * m, 0.1 * m], probs: [0.1, 0.4, 0.5], outcome: 1 }
    }

    fn simulate(&self, latents: &Latents, design: &Design, rng: &mut RngState) -> Outcome {
        let mut out = [0u8; 8];
        for (slot, mean) in out.iter_mut().zip(self.means(latents, design)) {
            let x = DistributionSpec::Normal { mean, sigma: self.noise_sigma }.draw(rng).expect("finite mean");
            *slot = to_likert(x);
        }
        Outcome::Likert(out)
    }

    fn log_likelihood(&self, latents: &Latents, design: &Design, outcome: &Outcome) -> f64 {
        let Outcome::Likert(v) = outcome else { return f64::NEG_INFINITY };
        let mut total = 0.0;
        for (k, mean) in v.iter().zip(self.means(latents, design)) {
            if !(LIKERT_MIN..=LIKERT_MAX).contains(k) {
                return f64::NEG_INFINITY;
            }
            let (lo, hi) = likert_cell(*k);
            total += ln_normal_mass((lo - mean) / self.noise_sigma, (hi - mean) / self.noise_sigma);
        }
        total
    }

    fn mean_outcome(&self, latents: &Latents, design: &Design) -> Vec<f64> {
        self.means(latents, design).into_iter().map(|m| self.expected_rating(m)).collect()
    }

    fn target(&self, _goal: GoalId, latents: &Latents, input: &QueryInput) -> Value {
        match input {
            QueryInput::Design(d) => Value::Vector(self.mean_outcome(latents, d)),
            _ => panic!("emotions cannot answer {input:?}"),
        }
    }

    fn sample_target(&self, _goal: GoalId, latents: &Latents, input: &QueryInput, rng: &mut RngState) -> Value {
        match input {
            QueryInput::Design(d) => Value::Vector(self.simulate(latents, d, rng).values()),
            _ => panic!("emotions cannot answer {input:?}"),
        }
    }

    fn summarize(&self, latents: &Latents) -> Vec<(String, f64)> {
        let mut out = Vec::new();
        for (name, c) in EMOTIONS.iter().zip(&lat(latents).coefficients) {
            out.push((format!("{name}_alpha"), c.alpha));
            out.push((format!("{name}_beta_win"), c.beta_win));
            out.push((format!("{name}_beta_pe"), c.beta_pe));
            out.push((format!("{name}_beta_abs_pe"), c.beta_abs_pe));
        }
        out
    }

    fn from_summary(&self, values: &[(String, f64)], _template: &Latents) -> Option<Latents> {
        let coefficients = EMOTIONS
            .iter()
            .map(|name| {
                Some(EmotionCoefficients {
                    alpha: lookup(values, &format!("{name}_alpha"))?,
                    beta_win: lookup(values, &format!("{name}_beta_win"))?,
                    beta_pe: lookup(values, &format!("{name}_beta_pe"))?,
                    beta_abs_pe: lookup(values, &format!("{name}_beta_abs_pe"))?,
                })
            })
            .collect::<Option<Vec<_>>>()?;
        Some(Latents::Emotions(EmotionLatents { coefficients }))
    }

    fn describe(&self, framing: Framing) -> EnvDescription {
        let m = self.max_prize;
        let text = match framing {
            Framing::Prior => format!(
                "A player spins a wheel with three possible prizes. You design the game: the three prize \
                 values v1, v2, v3 (in dollars, between 0 and {m}), their probabilities p1, p2, p3 \
                 (summing to 1), and which prize the wheel lands on (1, 2 or 3). A participant who watched \
                 the game then describes how the player is feeling. Predictions are ratings from 1 to 9 \
                 for happiness, sadness, anger, surprise, fear, disgust, contentment and disappointment."
            ),
            Framing::NoPrior => format!(
                "You choose three values v1, v2, v3 between 0 and {m}, three weights p1, p2, p3 that sum to \
                 1, and an index (1, 2 or 3). The system returns a text response. Predictions are eight \
                 integers from 1 to 9."
            ),
        };
        let units = if framing == Framing::Prior { "dollars" } else { "" };
        let mut fields: Vec<FieldSpec> =
            ["v1", "v2", "v3"].iter().map(|n| FieldSpec::real(n, 0.0, m, units)).collect();
        fields.extend(["p1", "p2", "p3"].iter().map(|n| FieldSpec::real(n, 0.0, 1.0, "")));
        fields.push(FieldSpec::integer("outcome", 1.0, 3.0));
        EnvDescription {
            env: self.id(),
            framing,
            text,
            design_fields: fields,
            observation: String::from("free-text description of the player's feelings"),
            observation_units: String::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coeffs(a: f64, w: f64, pe: f64, ape: f64) -> Vec<EmotionCoefficients> {
        vec![EmotionCoefficients { alpha: a, beta_win: w, beta_pe: pe, beta_abs_pe: ape }]
    }

    #[test]
    fn kernel_examples() {
        // the outcome equals the expected value: prediction errors vanish
        let m = emotion_means(&coeffs(5.0, 0.1, 0.3, 0.7), [20.0, 20.0, 20.0], [0.2, 0.3, 0.5], 2);
        assert!((m[0] - (5.0 + 0.1 * 20.0)).abs() < 1e-12);
        // EV 18, PE 32
        let m = emotion_means(&coeffs(0.0, 0.0, 1.0, 0.0), [50.0, 20.0, 10.0], [0.1, 0.4, 0.5], 1);
        assert!((m[0] - 32.0).abs() < 1e-12);
        let m = emotion_means(&coeffs(0.0, 0.0, 0.0, 1.0), [50.0, 20.0, 10.0], [0.1, 0.4, 0.5], 1);
        assert!((m[0] - 32.0).abs() < 1e-12);
        // negative PE with equal slopes cancels
        let m = emotion_means(&coeffs(4.0, 0.02, 0.3, 0.3), [50.0, 20.0, 10.0], [0.1, 0.4, 0.5], 3);
        assert!((m[0] - (4.0 + 0.02 * 10.0)).abs() < 1e-12);
    }

    #[test]
    fn pmf_sums_to_one() {
        for mean in [-3.0, 1.0, 4.7, 9.0, 14.0] {
            let s: f64 = likert_pmf(mean, 0.75).iter().sum();
            assert!((s - 1.0).abs() < 1e-12, "{mean}: {s}");
        }
    }

    #[test]
    fn rejects_bad_probabilities() {
        let c = EmotionConfig::default();
        let d = Design::Emotions { prizes: [1.0, 2.0, 3.0], probs: [0.5, 0.5, 0.1], outcome: 1 };
        assert_eq!(c.check_design(&d).unwrap_err().code, "probabilities");
        let d = Design::Emotions { prizes: [1.0, 2.0, 3.0], probs: [0.5, 0.5, 0.0], outcome: 4 };
        assert!(c.check_design(&d).is_err());
        let mut rng = RngState::new(9);
        for _ in 0..500 {
            assert!(c.check_design(&c.random_design(&mut rng)).is_ok());
        }
    }
}
