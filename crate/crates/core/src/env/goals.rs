//! Prediction targets, their error functions and evaluation queries.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use serde_with::serde_as;

use super::{ConfigError, Design, EnvConfig, EnvId, Environment, Framing, GoalId, Latents, ModelConfig};
use crate::num::Real;
use crate::prob::RngState;

/// A goal-shaped number.
#[serde_as]
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Scalar(#[serde_as(as = "Real")] f64),
    Vector(#[serde_as(as = "Vec<Real>")] Vec<f64>),
}

impl Value {
    pub fn as_slice(&self) -> &[f64] {
        match self {
            Value::Scalar(x) => core::slice::from_ref(x),
            Value::Vector(v) => v,
        }
    }

    pub fn from_vec(v: Vec<f64>, vector: bool) -> Value {
        if vector || v.len() != 1 {
            Value::Vector(v)
        } else {
            Value::Scalar(v[0])
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorFn {
    SquaredError,
    /// Misclassification after rounding with `ceil(x − 0.5)`.
    ZeroOne,
    VectorMse,
}

/// Rounds to the nearest integer, halves going down.
pub fn class_of(x: f64) -> f64 {
    libm::ceil(x - 0.5)
}

impl ErrorFn {
    /// `None` when the shapes differ.
    pub fn apply(self, pred: &[f64], truth: &[f64]) -> Option<f64> {
        if pred.len() != truth.len() || pred.is_empty() {
            return None;
        }
        Some(match self {
            ErrorFn::SquaredError => {
                let d = pred[0] - truth[0];
                d * d
            }
            ErrorFn::ZeroOne => {
                if class_of(pred[0]) == truth[0] {
                    0.0
                } else {
                    1.0
                }
            }
            ErrorFn::VectorMse => {
                pred.iter().zip(truth).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / pred.len() as f64
            }
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    /// Outcome at a sampled design.
    Design,
    /// A latent quantity; one query per checkpoint.
    Latent,
    /// Outcome for a freshly drawn patient.
    NewPatient,
}

/// Inputs of one evaluation query.
#[serde_as]
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QueryInput {
    Design(Design),
    Patient {
        #[serde_as(as = "Real")]
        time: f64,
        metastasized: bool,
    },
    Latent,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Query {
    pub input: QueryInput,
    pub truth: Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoalSpec {
    pub env: EnvId,
    pub goal: GoalId,
    pub error_fn: ErrorFn,
    pub target: TargetKind,
    /// Length of every prediction.
    pub arity: usize,
    /// Predictions are split into points of this size and sorted before scoring.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sort_points: Option<usize>,
}

impl GoalSpec {
    pub fn new(config: &EnvConfig, goal: GoalId) -> Result<GoalSpec, ConfigError> {
        let env = config.id();
        if !env.goals().contains(&goal) {
            return Err(ConfigError::UnknownGoal(format!("{env}/{goal}")));
        }
        use ErrorFn::*;
        use GoalId::*;
        let (error_fn, target, arity, sort_points) = match (&config.model, goal) {
            (ModelConfig::LocationFinding(c), SourceLocation) => {
                (VectorMse, TargetKind::Latent, c.num_sources * c.dims, Some(c.dims))
            }
            (_, Signal | NumInfected | Length) => (SquaredError, TargetKind::Design, 1, None),
            (_, DiscountFactor | InfectionRate) => (SquaredError, TargetKind::Latent, 1, None),
            (_, Choice | Correctness | MoralJudgement) => (ZeroOne, TargetKind::Design, 1, None),
            (_, Survival) => (ZeroOne, TargetKind::NewPatient, 1, None),
            (ModelConfig::PredatorPrey(_), Population) => (VectorMse, TargetKind::Design, 2, None),
            (_, Population) => (SquaredError, TargetKind::Design, 1, None),
            (_, EmotionLikert) => (VectorMse, TargetKind::Design, 8, None),
            (_, SourceLocation) => unreachable!("source_location belongs to location_finding"),
        };
        Ok(GoalSpec { env, goal, error_fn, target, arity, sort_points })
    }

    pub fn key(&self) -> String {
        format!("{}/{}", self.env, self.goal)
    }

    pub fn is_vector(&self) -> bool {
        self.error_fn == ErrorFn::VectorMse
    }

    /// Checks arity and finiteness and applies point sorting.
    pub fn normalize(&self, pred: &Value) -> Result<Vec<f64>, String> {
        let v = pred.as_slice();
        if v.len() != self.arity {
            return Err(format!("prediction must have {} value(s), got {}", self.arity, v.len()));
        }
        if let Some(i) = v.iter().position(|x| !x.is_finite()) {
            return Err(format!("prediction value {i} is not finite"));
        }
        let mut out = v.to_vec();
        if let Some(d) = self.sort_points {
            let mut points: Vec<&[f64]> = v.chunks(d).collect();
            points.sort_by(|a, b| {
                a.iter().zip(*b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(core::cmp::Ordering::Equal)
            });
            out = points.concat();
        }
        Ok(out)
    }

    /// Error of a prediction against a query's truth.
    pub fn error(&self, pred: &Value, truth: &Value) -> Result<f64, String> {
        let p = self.normalize(pred)?;
        self.error_fn
            .apply(&p, truth.as_slice())
            .ok_or_else(|| String::from("prediction and truth shapes differ"))
    }

    /// What agents are asked to predict.
    pub fn prompt(&self, framing: Framing) -> String {
        use GoalId::*;
        let prior = framing == Framing::Prior;
        String::from(match (self.goal, prior) {
            (Signal, true) => "Predict the signal intensity measured at the given point.",
            (SourceLocation, true) => "Predict the coordinates of every signal source, as one flat list of numbers.",
            (Choice, true) => "Predict whether the participant picks the delayed reward (1) or the immediate reward (0).",
            (DiscountFactor, true) => "Predict the participant's discount factor k.",
            (NumInfected, true) => "Predict the number of infected individuals at the given time.",
            (InfectionRate, true) => "Predict the infection rate.",
            (Correctness, true) => "Predict whether the student answers the question correctly (1) or not (0).",
            (Length, true) => "Predict the length of a dugong of the given age.",
            (Population, true) if self.env == EnvId::PredatorPrey => {
                "Predict the prey and predator populations at the given time, as [prey, predators]."
            }
            (Population, true) => "Predict the falcon population at the given time.",
            (Survival, true) => "Predict whether a patient with the given time since surgery and metastasis status died (1) or not (0).",
            (EmotionLikert, true) => "Predict the player's rating (1 to 9) for each of the eight emotions, in order.",
            (MoralJudgement, true) => "Predict which group (1 or 2) the participant chooses to save.",
            (SourceLocation, false) => "Predict the hidden parameters, as one flat list of numbers.",
            (DiscountFactor | InfectionRate, false) => "Predict the hidden parameter.",
            (Choice | Correctness | Survival, false) => "Predict the binary response (0 or 1) for the given input.",
            (MoralJudgement, false) => "Predict which list (1 or 2) the response names for the given input.",
            (EmotionLikert, false) => "Predict the eight integers (1 to 9) for the given input.",
            (Population, false) if self.env == EnvId::PredatorPrey => "Predict the pair of integers for the given input.",
            (_, false) => "Predict the output for the given input.",
        })
    }
}

/// `count` queries with ground truth; latent goals always get exactly one.
pub fn goal_queries(
    env: &dyn Environment,
    goal: &GoalSpec,
    latents: &Latents,
    count: usize,
    rng: &mut RngState,
) -> Vec<Query> {
    match goal.target {
        TargetKind::Latent => {
            let input = QueryInput::Latent;
            let truth = env.target(goal.goal, latents, &input);
            alloc::vec![Query { input, truth }]
        }
        _ => (0..count.max(1))
            .map(|_| {
                let input = env.query_input(goal.goal, latents, rng);
                let truth = env.target(goal.goal, latents, &input);
                Query { input, truth }
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_one_rounds_ties_down() {
        assert_eq!(class_of(0.5), 0.0);
        assert_eq!(class_of(0.51), 1.0);
        assert_eq!(class_of(1.5), 1.0);
        assert_eq!(ErrorFn::ZeroOne.apply(&[0.5], &[1.0]), Some(1.0));
        assert_eq!(ErrorFn::ZeroOne.apply(&[0.9], &[1.0]), Some(0.0));
        assert_eq!(ErrorFn::VectorMse.apply(&[1.0, 3.0], &[0.0, 0.0]), Some(5.0));
        assert_eq!(ErrorFn::VectorMse.apply(&[1.0], &[0.0, 0.0]), None);
    }

    #[test]
    fn source_predictions_are_sorted() {
        let c = EnvConfig::default_for(EnvId::LocationFinding);
        let g = GoalSpec::new(&c, GoalId::SourceLocation).unwrap();
        assert_eq!(g.arity, 6);
        let p = Value::Vector(alloc::vec![0.9, 0.1, 0.2, 0.5, 0.2, 0.4]);
        assert_eq!(g.normalize(&p).unwrap(), alloc::vec![0.2, 0.4, 0.2, 0.5, 0.9, 0.1]);
        assert!(g.normalize(&Value::Scalar(1.0)).is_err());
    }

    #[test]
    fn latent_goal_single_query() {
        let c = EnvConfig::default_for(EnvId::DeathProcess);
        let g = GoalSpec::new(&c, GoalId::InfectionRate).unwrap();
        let mut rng = RngState::new(1);
        let l = c.env().sample_latents(&mut rng);
        let q = goal_queries(c.env(), &g, &l, 10, &mut rng);
        assert_eq!(q.len(), 1);
        let Latents::DeathProcess(d) = &l else { unreachable!() };
        assert_eq!(q[0].truth, Value::Scalar(d.theta));
    }

    #[test]
    fn value_wire_forms() {
        let s = serde_json::to_string(&Value::Scalar(0.25)).unwrap();
        assert_eq!(s, "\"0.25\"");
        let v: Value = serde_json::from_str("[1, \"2.5\"]").unwrap();
        assert_eq!(v, Value::Vector(alloc::vec![1.0, 2.5]));
        let n: Value = serde_json::from_str("3").unwrap();
        assert_eq!(n, Value::Scalar(3.0));
    }
}
