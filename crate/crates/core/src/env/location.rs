//! Sources emitting a signal that decays with squared distance.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use serde_with::serde_as;

use super::{
    check_prior, check_range, lookup, ConfigError, Design, EnvDescription, EnvId, Environment,
    FieldSpec, Framing, GoalId, Latents, Outcome, QueryInput, Rejection, Value,
};
use crate::num::Real;
use crate::prob::special::ln_std_normal_pdf;
use crate::prob::{DistributionSpec, RngState};

/// `b + Σ α_k / (m + ‖θ_k − ξ‖²)`.
pub fn loc_signal_mean(sources: &[Vec<f64>], alphas: &[f64], point: &[f64], b: f64, m: f64) -> f64 {
    let mut total = b;
    for (src, alpha) in sources.iter().zip(alphas) {
        let d2: f64 = src.iter().zip(point).map(|(s, x)| (s - x) * (s - x)).sum();
        total += alpha / (m + d2);
    }
    total
}

#[serde_as]
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocationPriors {
    /// Shared by every coordinate of every source.
    pub source_coordinate: DistributionSpec,
}

#[serde_as]
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocationConfig {
    pub num_sources: usize,
    pub dims: usize,
    #[serde_as(as = "Real")]
    pub base_signal: f64,
    #[serde_as(as = "Real")]
    pub max_signal: f64,
    #[serde_as(as = "Real")]
    pub noise_sigma: f64,
    #[serde_as(as = "Real")]
    pub source_strength: f64,
    #[serde_as(as = "Real")]
    pub design_low: f64,
    #[serde_as(as = "Real")]
    pub design_high: f64,
    pub priors: LocationPriors,
}

impl Default for LocationConfig {
    fn default() -> Self {
        LocationConfig {
            num_sources: 3,
            dims: 2,
            base_signal: 0.1,
            max_signal: 1e-4,
            noise_sigma: 0.5,
            source_strength: 1.0,
            design_low: 0.0,
            design_high: 1.0,
            priors: LocationPriors {
                source_coordinate: DistributionSpec::Uniform { low: 0.0, high: 1.0 },
            },
        }
    }
}

#[serde_as]
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocationLatents {
    #[serde_as(as = "Vec<Vec<Real>>")]
    pub sources: Vec<Vec<f64>>,
}

fn lat(l: &Latents) -> &LocationLatents {
    match l {
        Latents::LocationFinding(x) => x,
        other => panic!("location_finding given latents for another environment: {other:?}"),
    }
}

fn point(d: &Design) -> &[f64] {
    match d {
        Design::LocationFinding { point } => point,
        other => panic!("location_finding given design for `{}`", other.env()),
    }
}

impl LocationConfig {
    fn alphas(&self) -> Vec<f64> {
        vec![self.source_strength; self.num_sources]
    }

    pub fn mean_at(&self, latents: &LocationLatents, point: &[f64]) -> f64 {
        loc_signal_mean(&latents.sources, &self.alphas(), point, self.base_signal, self.max_signal)
    }

    /// Sources sorted lexicographically and flattened.
    pub fn sorted_sources(latents: &LocationLatents) -> Vec<f64> {
        let mut s = latents.sources.clone();
        s.sort_by(|a, b| {
            a.iter()
                .zip(b)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(core::cmp::Ordering::Equal)
        });
        s.into_iter().flatten().collect()
    }
}

impl Environment for LocationConfig {
    fn id(&self) -> EnvId {
        EnvId::LocationFinding
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if self.num_sources == 0 {
            return Err(ConfigError::invalid("num_sources", "must be at least 1"));
        }
        if self.dims == 0 {
            return Err(ConfigError::invalid("dims", "must be at least 1"));
        }
        if !(self.max_signal > 0.0 && self.max_signal.is_finite()) {
            return Err(ConfigError::invalid("max_signal", "must be > 0"));
        }
        if !(self.noise_sigma > 0.0 && self.noise_sigma.is_finite()) {
            return Err(ConfigError::invalid("noise_sigma", "must be > 0"));
        }
        if !self.base_signal.is_finite() || !self.source_strength.is_finite() {
            return Err(ConfigError::invalid("base_signal", "must be finite"));
        }
        if !(self.design_low.is_finite() && self.design_high.is_finite() && self.design_low < self.design_high) {
            return Err(ConfigError::invalid("design_low", "design bounds must be finite with low < high"));
        }
        check_prior("source_coordinate", &self.priors.source_coordinate)
    }

    fn priors(&self) -> Vec<(&'static str, &DistributionSpec)> {
        vec![("source_coordinate", &self.priors.source_coordinate)]
    }

    fn sample_latents(&self, rng: &mut RngState) -> Latents {
        let sources = (0..self.num_sources)
            .map(|_| {
                (0..self.dims)
                    .map(|_| self.priors.source_coordinate.draw(rng).expect("validated prior"))
                    .collect()
            })
            .collect();
        Latents::LocationFinding(LocationLatents { sources })
    }

    fn check_design(&self, design: &Design) -> Result<(), Rejection> {
        let Design::LocationFinding { point } = design else {
            return Err(Rejection::wrong_env(self.id(), design));
        };
        if point.len() != self.dims {
            return Err(Rejection::new(
                "wrong_arity",
                format!("point must have {} coordinates, got {}", self.dims, point.len()),
            ));
        }
        for (i, x) in point.iter().enumerate() {
            check_range(&format!("coordinate {i}"), *x, self.design_low, self.design_high)?;
        }
        Ok(())
    }

    fn random_design(&self, rng: &mut RngState) -> Design {
        let point = (0..self.dims).map(|_| rng.uniform_range(self.design_low, self.design_high)).collect();
        Design::LocationFinding { point }
    }

    fn default_design(&self) -> Design {
        Design::LocationFinding { point: vec![0.5 * (self.design_low + self.design_high); self.dims] }
    }

    fn simulate(&self, latents: &Latents, design: &Design, rng: &mut RngState) -> Outcome {
        let mu = self.mean_at(lat(latents), point(design));
        let dist = DistributionSpec::Normal { mean: mu, sigma: self.noise_sigma };
        Outcome::Real(dist.draw(rng).expect("finite mean"))
    }

    fn log_likelihood(&self, latents: &Latents, design: &Design, outcome: &Outcome) -> f64 {
        let Outcome::Real(y) = outcome else { return f64::NEG_INFINITY };
        let mu = self.mean_at(lat(latents), point(design));
        ln_std_normal_pdf((y - mu) / self.noise_sigma) - libm::log(self.noise_sigma)
    }

    fn mean_outcome(&self, latents: &Latents, design: &Design) -> Vec<f64> {
        vec![self.mean_at(lat(latents), point(design))]
    }

    fn target(&self, goal: GoalId, latents: &Latents, input: &QueryInput) -> Value {
        match (goal, input) {
            (GoalId::SourceLocation, _) => Value::Vector(Self::sorted_sources(lat(latents))),
            (_, QueryInput::Design(d)) => Value::Scalar(self.mean_at(lat(latents), point(d))),
            _ => panic!("location_finding cannot answer {input:?}"),
        }
    }

    fn sample_target(&self, goal: GoalId, latents: &Latents, input: &QueryInput, rng: &mut RngState) -> Value {
        match (goal, input) {
            (GoalId::Signal, QueryInput::Design(d)) => {
                Value::Scalar(self.simulate(latents, d, rng).values()[0])
            }
            _ => self.target(goal, latents, input),
        }
    }

    fn summarize(&self, latents: &Latents) -> Vec<(String, f64)> {
        let mut out = Vec::new();
        for (k, src) in lat(latents).sources.iter().enumerate() {
            for (i, x) in src.iter().enumerate() {
                out.push((format!("theta_{k}_{i}"), *x));
            }
        }
        out
    }

    fn from_summary(&self, values: &[(String, f64)], _template: &Latents) -> Option<Latents> {
        let mut sources = Vec::new();
        for k in 0..self.num_sources {
            let mut src = Vec::new();
            for i in 0..self.dims {
                src.push(lookup(values, &format!("theta_{k}_{i}"))?);
            }
            sources.push(src);
        }
        Some(Latents::LocationFinding(LocationLatents { sources }))
    }

    fn describe(&self, framing: Framing) -> EnvDescription {
        let k = self.num_sources;
        let d = self.dims;
        let text = match framing {
            Framing::Prior => format!(
                "There are {k} signal sources hidden somewhere in a {d}-dimensional space. \
                 Each source emits a signal whose intensity falls off with the squared distance \
                 from the source, and the measured signal at a point is the noisy sum of all \
                 sources plus a small background level. You choose points at which to measure \
                 the signal. Coordinates range from {} to {}.",
                self.design_low, self.design_high
            ),
            Framing::NoPrior => format!(
                "You can query a black-box function at {d}-dimensional inputs whose coordinates \
                 range from {} to {}. Each query returns a noisy real number. The function has \
                 {k} hidden {d}-dimensional parameters.",
                self.design_low, self.design_high
            ),
        };
        let names: Vec<String> = (0..d).map(|i| format!("x{i}")).collect();
        EnvDescription {
            env: self.id(),
            framing,
            text,
            design_fields: names
                .iter()
                .map(|n| FieldSpec::real(n, self.design_low, self.design_high, ""))
                .collect(),
            observation: String::from("real-valued signal measurement"),
            observation_units: String::new(),
        }
    }
}
