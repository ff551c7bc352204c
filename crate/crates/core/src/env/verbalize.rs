//! Turning structured outcomes into participant-style sentences.
//!
//! The template verbalizer is deterministic: the same payload always yields
//! the same text. External verbalizers live outside this crate and fall
//! back to [`template`] when unavailable.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

use super::{lookup, Design, Outcome, EMOTIONS};

/// Bumped whenever template wording changes.
pub const TEMPLATE_VERSION: u32 = 1;

pub struct VerbalizeRequest<'a> {
    pub design: &'a Design,
    pub outcome: &'a Outcome,
    /// Named logit terms (moral machines only).
    pub context: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerbalizeError {
    #[error("verbalizer unavailable: {0}")]
    Unavailable(String),
}

pub trait Verbalizer {
    fn verbalize(&self, req: &VerbalizeRequest<'_>) -> Result<String, VerbalizeError>;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct TemplateVerbalizer;

impl Verbalizer for TemplateVerbalizer {
    fn verbalize(&self, req: &VerbalizeRequest<'_>) -> Result<String, VerbalizeError> {
        Ok(template(req))
    }
}

pub fn template(req: &VerbalizeRequest<'_>) -> String {
    match (req.design, req.outcome) {
        (Design::Emotions { prizes, probs, outcome }, Outcome::Likert(v)) => {
            emotions_text(*prizes, *probs, *outcome, v)
        }
        (Design::MoralMachines { .. }, Outcome::Choice(g)) => moral_text(*g, &req.context),
        (_, o) => o.render(),
    }
}

fn money(x: f64) -> String {
    let cents = libm::round(x * 100.0);
    if cents % 100.0 == 0.0 {
        format!("${}", cents / 100.0)
    } else {
        format!("${:.2}", cents / 100.0)
    }
}

/// Emotions at least this far from the scale midpoint are mentioned.
const SALIENCE: u8 = 2;

fn emotions_text(prizes: [f64; 3], probs: [f64; 3], outcome: u8, v: &[u8; 8]) -> String {
    let mut salient: Vec<(usize, u8)> = v
        .iter()
        .enumerate()
        .map(|(i, x)| (i, x.abs_diff(5)))
        .filter(|(_, d)| *d >= SALIENCE)
        .collect();
    // stable: ties keep the fixed emotion order
    salient.sort_by(|a, b| b.1.cmp(&a.1));
    salient.truncate(2);
    let feelings: Vec<String> = salient
        .iter()
        .map(|(i, _)| {
            let level = if v[*i] > 5 { "a lot of" } else { "very little" };
            format!("{level} {} ({}/9)", EMOTIONS[*i], v[*i])
        })
        .collect();
    let win = prizes[(outcome.clamp(1, 3) - 1) as usize];
    let ev: f64 = prizes.iter().zip(probs).map(|(a, p)| a * p).sum();
    let reason = if win > ev {
        format!("they won {}, more than the {} they could expect", money(win), money(ev))
    } else if win < ev {
        format!("they won {}, less than the {} they could expect", money(win), money(ev))
    } else {
        format!("they won {}, exactly what they could expect", money(win))
    };
    if feelings.is_empty() {
        format!("The player might be feeling fairly neutral because {reason}.")
    } else {
        format!("The player might be feeling {} because {reason}.", feelings.join(" and "))
    }
}

fn moral_reason(term: &str, chosen_delta: f64, chosen: u8) -> &'static str {
    let more = chosen_delta > 0.0;
    match term {
        "group" if chosen == 1 => "I want to protect the passengers",
        "group" => "I want to protect the pedestrians",
        "intervention" if chosen == 1 => "swerving to save them is worth it",
        "intervention" => "the car should not change course",
        "gender" if more => "they include more women",
        "gender" => "they include more men",
        "age" if more => "they are younger and have more of their lives ahead of them",
        "age" => "they are older and deserve respect",
        "social_status" if more => "they contribute more to society",
        "social_status" => "they are more vulnerable in society",
        "fitness" if more => "they are fitter",
        "fitness" => "they are less fit",
        "human_count" if more => "more people would be saved",
        "human_count" => "fewer lives are at stake but they matter",
        "species" if more => "human lives come first",
        "species" => "the animals deserve protection too",
        _ => "it felt like the better option",
    }
}

fn moral_text(chosen: u8, context: &[(String, f64)]) -> String {
    let sign = if chosen == 1 { 1.0 } else { -1.0 };
    let mut best: Option<(&str, f64)> = None;
    for (name, v) in context.iter().filter(|(n, _)| !n.starts_with("delta_")) {
        let favour = sign * v;
        if favour > 1e-12 && best.is_none_or(|(_, b)| favour > b) {
            best = Some((name.as_str(), favour));
        }
    }
    let reason = match best {
        Some((term, _)) => {
            let delta = lookup(context, &format!("delta_{term}")).unwrap_or(0.0) * sign;
            moral_reason(term, delta, chosen)
        }
        None => "it is a close call and I lean slightly toward them",
    };
    format!("I choose to save group {chosen} because {reason}.")
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn emo(v: [u8; 8]) -> String {
        let d = Design::Emotions { prizes: [50.0, 20.0, 10.0], probs: [0.1, 0.4, 0.5], outcome: 1 };
        template(&VerbalizeRequest { design: &d, outcome: &Outcome::Likert(v), context: vec![] })
    }

    #[test]
    fn emotions_salience() {
        let t = emo([9, 5, 5, 6, 5, 4, 5, 1]);
        assert!(t.starts_with("The player might be feeling"));
        assert!(t.contains("happiness") && t.contains("disappointment"));
        assert!(!t.contains("surprise") && !t.contains("disgust"));
        assert!(t.contains("$50") && t.contains("$18"));
        assert_eq!(t, emo([9, 5, 5, 6, 5, 4, 5, 1]));
        assert!(emo([5; 8]).contains("neutral"));
    }

    #[test]
    fn moral_prefix() {
        let d = Design::MoralMachines {
            group1: vec!["boy".to_string()],
            group2: vec!["old_man".to_string()],
            intervention: crate::env::Intervention::Swerve,
        };
        let ctx = vec![("age".to_string(), 1.5), ("delta_age".to_string(), 2.0), ("group".to_string(), -0.2)];
        let t = template(&VerbalizeRequest { design: &d, outcome: &Outcome::Choice(1), context: ctx.clone() });
        assert!(t.starts_with("I choose to save group 1 because"));
        assert!(t.contains("younger"));
        let t2 = template(&VerbalizeRequest { design: &d, outcome: &Outcome::Choice(2), context: ctx });
        assert!(t2.starts_with("I choose to save group 2 because I want to protect the pedestrians"));
    }
}
