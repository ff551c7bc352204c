//! TOML configuration. Every key is optional; `discobench config` prints
//! the full default document.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use discobench_core::env::{ConfigError, EnvConfig, EnvId, Framing, ModelConfig};
use discobench_core::eval::EigParams;
use discobench_core::harness::{
    Conditioning, EigSettings, TrialSettings, DEFAULT_CHECKPOINTS, DEFAULT_EXPLANATION_BUDGET, DEFAULT_QUERIES,
    DEFAULT_RETRY_LIMIT, DEFAULT_TIMEOUT_MS,
};
use serde::{Deserialize, Serialize};

pub const CONFIG_ENV_VAR: &str = "DISCOBENCH_CONFIG";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    /// `env` or `env/goal`.
    pub env: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub goal: Option<String>,
    pub seed: u64,
    pub runs: u64,
    pub framing: Framing,
    pub agent: String,
    pub novice: String,
    /// Posterior particles for in-process baselines.
    pub particles: usize,
    pub out: PathBuf,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            env: "death_process".into(),
            goal: None,
            seed: 0,
            runs: 5,
            framing: Framing::Prior,
            agent: "random".into(),
            novice: "parametric".into(),
            particles: 10_000,
            out: PathBuf::from("results"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrialSection {
    pub checkpoints: Vec<usize>,
    pub queries_per_checkpoint: usize,
    pub prior_samples: usize,
    pub explanation_budget: usize,
    pub timeout_ms: u64,
    pub retry_limit: u32,
}

impl Default for TrialSection {
    fn default() -> Self {
        TrialSection {
            checkpoints: DEFAULT_CHECKPOINTS.to_vec(),
            queries_per_checkpoint: DEFAULT_QUERIES,
            prior_samples: 10_000,
            explanation_budget: DEFAULT_EXPLANATION_BUDGET,
            timeout_ms: DEFAULT_TIMEOUT_MS,
            retry_limit: DEFAULT_RETRY_LIMIT,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditioningKind {
    Prior,
    Posterior,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EigSection {
    pub enabled: bool,
    pub n_outer: usize,
    pub m_inner: usize,
    pub n_random: usize,
    pub conditioning: ConditioningKind,
    /// Used with posterior conditioning.
    pub particles: usize,
}

impl Default for EigSection {
    fn default() -> Self {
        let p = EigParams::default();
        EigSection {
            enabled: true,
            n_outer: p.n_outer,
            m_inner: p.m_inner,
            n_random: 100,
            conditioning: ConditioningKind::Prior,
            particles: 10_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerbalizerSection {
    /// External verbalizer endpoint; the template is used when unset or unreachable.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub url: Option<String>,
    pub timeout_ms: u64,
}

impl Default for VerbalizerSection {
    fn default() -> Self {
        VerbalizerSection { url: None, timeout_ms: 5000 }
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Config {
    pub run: RunSection,
    pub trial: TrialSection,
    pub eig: EigSection,
    pub verbalizer: VerbalizerSection,
    /// Environments that differ from the built-in defaults.
    pub envs: BTreeMap<EnvId, ModelConfig>,
    pub source: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigFileError {
    pub file: String,
    pub line: Option<usize>,
    pub field: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigFileError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.file)?;
        if let Some(l) = self.line {
            write!(f, ":{l}")?;
        }
        if let Some(field) = &self.field {
            write!(f, ": {field}")?;
        }
        write!(f, ": {}", self.message)
    }
}

impl std::error::Error for ConfigFileError {}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    run: RunSection,
    #[serde(default)]
    trial: TrialSection,
    #[serde(default)]
    eig: EigSection,
    #[serde(default)]
    verbalizer: VerbalizerSection,
    #[serde(default)]
    envs: BTreeMap<toml::Spanned<String>, toml::Spanned<toml::Table>>,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Line of `key = ...` inside the byte range, else the range's first line.
fn key_line(text: &str, range: std::ops::Range<usize>, key: &str) -> usize {
    let start = range.start.min(text.len());
    let end = range.end.min(text.len());
    let mut offset = start;
    for line in text[start..end].split_inclusive('\n') {
        let t = line.trim_start();
        if t.strip_prefix(key).is_some_and(|rest| rest.trim_start().starts_with('=')) {
            return line_of(text, offset);
        }
        offset += line.len();
    }
    line_of(text, start)
}

fn merge(base: &mut toml::Value, over: &toml::Value, path: &str) -> Result<(), (String, String)> {
    match (base, over) {
        (toml::Value::Table(b), toml::Value::Table(o)) => {
            for (k, v) in o {
                let p = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                match b.get_mut(k) {
                    Some(slot) => merge(slot, v, &p)?,
                    None => return Err((p, format!("unknown field `{k}`"))),
                }
            }
            Ok(())
        }
        (slot, v) => {
            *slot = v.clone();
            Ok(())
        }
    }
}

/// Default model config as a TOML table without the `env` tag.
pub fn model_table(model: &ModelConfig) -> toml::Table {
    let v = toml::Value::try_from(model).expect("model configs serialize");
    let toml::Value::Table(mut t) = numbers_from_strings(v) else { unreachable!("model configs are tables") };
    t.remove("env");
    t
}

/// Reals are decimal strings on the wire; TOML has native floats.
fn numbers_from_strings(v: toml::Value) -> toml::Value {
    match v {
        toml::Value::String(s) => match s.parse::<f64>() {
            Ok(x) if x.fract() == 0.0 && x.abs() < 1e15 && !s.contains(['e', 'E', '.']) => toml::Value::Float(x),
            Ok(x) => toml::Value::Float(x),
            Err(_) => toml::Value::String(s),
        },
        toml::Value::Table(t) => toml::Value::Table(t.into_iter().map(|(k, v)| (k, numbers_from_strings(v))).collect()),
        toml::Value::Array(a) => toml::Value::Array(a.into_iter().map(numbers_from_strings).collect()),
        other => other,
    }
}

impl Config {
    /// `path`, else `$DISCOBENCH_CONFIG`, else built-in defaults.
    pub fn load(path: Option<&Path>) -> Result<Config, ConfigFileError> {
        let from_env = std::env::var_os(CONFIG_ENV_VAR).map(PathBuf::from);
        match path.map(Path::to_path_buf).or(from_env) {
            Some(p) => {
                let text = std::fs::read_to_string(&p).map_err(|e| ConfigFileError {
                    file: p.display().to_string(),
                    line: None,
                    field: None,
                    message: e.to_string(),
                })?;
                let mut c = Config::parse(&text, &p.display().to_string())?;
                c.source = Some(p);
                Ok(c)
            }
            None => Ok(Config::default()),
        }
    }

    pub fn parse(text: &str, file: &str) -> Result<Config, ConfigFileError> {
        let err = |line: Option<usize>, field: Option<String>, message: String| ConfigFileError {
            file: file.to_string(),
            line,
            field,
            message,
        };
        let raw: RawConfig = toml::from_str(text).map_err(|e| {
            err(e.span().map(|s| line_of(text, s.start)), None, e.message().trim().to_string())
        })?;
        let mut envs = BTreeMap::new();
        for (name, table) in raw.envs {
            let span = table.span();
            let id: EnvId = name.get_ref().parse().map_err(|e: ConfigError| {
                err(Some(line_of(text, name.span().start)), Some(format!("envs.{}", name.get_ref())), e.to_string())
            })?;
            let default = EnvConfig::default_for(id).model;
            let base = toml::Value::try_from(&default).expect("model configs serialize");
            let user = table.into_inner();
            let mut merged = base.clone();
            merge(&mut merged, &toml::Value::Table(user.clone()), "").map_err(|(p, m)| {
                let key = p.rsplit('.').next().unwrap_or(&p).to_string();
                err(Some(key_line(text, span.clone(), &key)), Some(format!("envs.{id}.{p}")), m)
            })?;
            let model: ModelConfig = serde_path_to_error::deserialize(merged).map_err(|e| {
                let mut p = e.path().to_string();
                if p.split('.').any(str::is_empty) {
                    // tagged enums hide the path; find the offending key by trying them one at a time
                    p = user
                        .iter()
                        .find(|(k, v)| {
                            let mut one = base.clone();
                            let mut t = toml::Table::new();
                            t.insert((*k).clone(), (*v).clone());
                            merge(&mut one, &toml::Value::Table(t), "").is_ok()
                                && serde_path_to_error::deserialize::<_, ModelConfig>(one).is_err()
                        })
                        .map(|(k, _)| k.clone())
                        .unwrap_or_default();
                }
                let key = p.rsplit('.').next().unwrap_or(&p).to_string();
                let field = if p.is_empty() { format!("envs.{id}") } else { format!("envs.{id}.{p}") };
                err(Some(key_line(text, span.clone(), &key)), Some(field), e.inner().to_string())
            })?;
            let cfg = EnvConfig { framing: raw.run.framing, model };
            if let Err(e) = cfg.validate() {
                let (field, message) = match &e {
                    ConfigError::Invalid { field, reason } => (format!("envs.{id}.{field}"), reason.to_string()),
                    other => (format!("envs.{id}"), other.to_string()),
                };
                let key = field.rsplit('.').next().unwrap_or_default().to_string();
                return Err(err(Some(key_line(text, span.clone(), &key)), Some(field), message));
            }
            envs.insert(id, cfg.model);
        }
        let c = Config {
            run: raw.run,
            trial: raw.trial,
            eig: raw.eig,
            verbalizer: raw.verbalizer,
            envs,
            source: None,
        };
        c.trial_settings().validate().map_err(|e| err(None, Some("trial".into()), e.to_string()))?;
        Ok(c)
    }

    pub fn env_config(&self, id: EnvId, framing: Framing) -> EnvConfig {
        let model = self.envs.get(&id).cloned().unwrap_or_else(|| EnvConfig::default_for(id).model);
        EnvConfig { framing, model }
    }

    pub fn trial_settings(&self) -> TrialSettings {
        let t = &self.trial;
        TrialSettings {
            checkpoints: t.checkpoints.clone(),
            queries_per_checkpoint: t.queries_per_checkpoint,
            prior_samples: t.prior_samples,
            explanation_budget: t.explanation_budget,
            timeout_ms: t.timeout_ms,
            eig: self.eig.enabled.then(|| EigSettings {
                params: EigParams { n_outer: self.eig.n_outer, m_inner: self.eig.m_inner },
                n_random: self.eig.n_random,
                conditioning: match self.eig.conditioning {
                    ConditioningKind::Prior => Conditioning::Prior,
                    ConditioningKind::Posterior => Conditioning::Posterior { particles: self.eig.particles },
                },
            }),
        }
    }

    /// The whole configuration as TOML, including every environment.
    pub fn to_toml(&self) -> String {
        #[derive(Serialize)]
        struct Doc<'a> {
            run: &'a RunSection,
            trial: &'a TrialSection,
            eig: &'a EigSection,
            verbalizer: &'a VerbalizerSection,
            envs: BTreeMap<String, toml::Table>,
        }
        let envs = EnvId::ALL
            .into_iter()
            .map(|id| (id.to_string(), model_table(&self.env_config(id, self.run.framing).model)))
            .collect();
        let doc = Doc { run: &self.run, trial: &self.trial, eig: &self.eig, verbalizer: &self.verbalizer, envs };
        toml::to_string(&doc).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_document_round_trips() {
        let text = Config::default().to_toml();
        let c = Config::parse(&text, "defaults.toml").unwrap();
        for id in EnvId::ALL {
            assert_eq!(c.env_config(id, Framing::Prior), EnvConfig::default_for(id), "{id}");
        }
        assert_eq!(c.trial_settings(), TrialSettings::default());
        assert!(text.contains("[envs.death_process.priors.theta]"));
    }

    #[test]
    fn partial_override() {
        let c = Config::parse("[envs.death_process]\npopulation = 20\n", "x.toml").unwrap();
        let ModelConfig::DeathProcess(d) = &c.envs[&EnvId::DeathProcess] else { panic!() };
        assert_eq!(d.population, 20);
        assert_eq!(d.max_time, 10.0);
    }

    #[test]
    fn diagnostics_name_line_and_field() {
        let e = Config::parse("[run]\nseed = 1\nbogus = 2\n", "a.toml").unwrap_err();
        assert_eq!(e.line, Some(3));
        assert!(e.message.contains("bogus"), "{e}");

        let text = "[trial]\nqueries_per_checkpoint = 10\n\n[envs.dugongs]\nnoise_sigma = \"loud\"\n";
        let e = Config::parse(text, "b.toml").unwrap_err();
        assert_eq!((e.line, e.field.as_deref()), (Some(5), Some("envs.dugongs.noise_sigma")), "{e}");

        let e = Config::parse("[envs.dugongs]\nnoise = 1.0\n", "c.toml").unwrap_err();
        assert_eq!((e.line, e.field.as_deref()), (Some(2), Some("envs.dugongs.noise")), "{e}");

        let e = Config::parse("[envs.death_process]\n\npopulation = 0\n", "d.toml").unwrap_err();
        assert_eq!(e.line, Some(3), "{e}");
        assert!(e.to_string().starts_with("d.toml:3: envs.death_process.population"), "{e}");

        let e = Config::parse("[envs.unicorns]\nx = 1\n", "e.toml").unwrap_err();
        assert_eq!(e.line, Some(1));

        let e = Config::parse("[trial]\ncheckpoints = [3, 1]\n", "f.toml").unwrap_err();
        assert!(e.message.contains("increasing"), "{e}");
    }
}
