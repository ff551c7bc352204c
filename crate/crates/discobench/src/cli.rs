//! Command-line entry points.

use std::io::{BufReader, Write};
use std::net::SocketAddr;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use discobench_core::env::{parse_registry_key, Design, EnvConfig, EnvId, Framing, GoalId, GoalSpec};
use discobench_core::eval::{design_eig, ei_regret, EigParams, LatentSource};
use discobench_core::harness::{
    aggregate, baseline_agent, baseline_novice, drive, replay, BaselineKind, NoviceKind, RunRecord, Runtime, SeedPlan,
    TrialSettings, Transport,
};
use discobench_core::RngState;

use crate::config::{Config, CONFIG_ENV_VAR};
use crate::records;
use crate::session::{SessionSpec, WireSession};
use crate::subprocess;
use crate::wire::Hello;

#[derive(Parser, Debug)]
#[command(name = "discobench", version, about = "Automated experimental design and model discovery benchmark")]
pub struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true, env = CONFIG_ENV_VAR)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run checkpointed trials and print Error@k.
    RunTrial(TrialArgs),
    /// Run scientist-to-novice discovery episodes.
    RunDiscovery(DiscoveryArgs),
    /// Expected information gain of one design under the prior.
    Eig(EigArgs),
    /// EI regret of chosen designs against random ones.
    Regret(RegretArgs),
    /// Re-execute saved records and compare.
    Replay { records: Vec<PathBuf> },
    /// List environments and their goals.
    ListEnvs,
    /// Play the scientist yourself.
    Repl(EpisodeArgs),
    /// Serve one session on stdin/stdout.
    ServeStdio {
        /// Also write the finished record here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serve sessions over HTTP.
    ServeHttp {
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: SocketAddr,
    },
    /// Print the effective configuration as TOML.
    Config,
    /// Act as a baseline agent client: server lines on stdin, messages on stdout.
    Play(PlayArgs),
}

#[derive(Args, Debug, Clone)]
pub struct PlayArgs {
    /// `env/goal`; set by the harness for command agents.
    #[arg(long, env = "DISCOBENCH_ENV")]
    pub env: Option<String>,
    #[arg(long, env = "DISCOBENCH_SEED")]
    pub seed: Option<u64>,
    #[arg(long, env = "DISCOBENCH_RUN", default_value_t = 0)]
    pub run: u64,
    /// `prior` or `no_prior`.
    #[arg(long, env = "DISCOBENCH_FRAMING")]
    pub framing: Option<String>,
    #[arg(long, default_value = "random")]
    pub agent: String,
    /// Play a discovery episode with this novice.
    #[arg(long)]
    pub novice: Option<String>,
    #[arg(long)]
    pub particles: Option<usize>,
}

#[derive(Args, Debug, Clone)]
pub struct EpisodeArgs {
    /// Environment id or `env/goal`.
    #[arg(long)]
    pub env: Option<String>,
    #[arg(long)]
    pub goal: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Domain-rich framing (default).
    #[arg(long, overrides_with = "no_prior")]
    pub prior: bool,
    /// Domain-scrubbed framing.
    #[arg(long, overrides_with = "prior")]
    pub no_prior: bool,
    /// Comma-separated observation counts, e.g. `0,1,3,5,7,10`.
    #[arg(long, value_delimiter = ',')]
    pub checkpoints: Option<Vec<usize>>,
    #[arg(long)]
    pub queries: Option<usize>,
}

#[derive(Args, Debug, Clone)]
pub struct TrialArgs {
    #[command(flatten)]
    pub episode: EpisodeArgs,
    #[arg(long)]
    pub runs: Option<u64>,
    /// A baseline (random, fixed_design, mu0_predictor, oracle_theta) or `cmd:<command>`.
    #[arg(long)]
    pub agent: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Posterior particles for baseline agents.
    #[arg(long)]
    pub particles: Option<usize>,
    /// Skip design scoring.
    #[arg(long)]
    pub no_eig: bool,
    /// Outer and inner EIG sample counts.
    #[arg(long)]
    pub eig_samples: Option<usize>,
    /// Random designs behind EI regret.
    #[arg(long)]
    pub n_random: Option<usize>,
    /// Runs executed at once.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Args, Debug, Clone)]
pub struct DiscoveryArgs {
    #[command(flatten)]
    pub trial: TrialArgs,
    /// parametric or mu0_predictor; ignored for command agents, which play both roles.
    #[arg(long)]
    pub novice: Option<String>,
}

#[derive(Args, Debug, Clone)]
pub struct EigArgs {
    #[arg(long)]
    pub env: String,
    /// `key=value` pairs, e.g. `t=1.5`.
    #[arg(long)]
    pub design: String,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 1000)]
    pub m: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub json: bool,
}

#[derive(Args, Debug, Clone)]
pub struct RegretArgs {
    #[arg(long)]
    pub env: String,
    /// Repeat for each chosen design.
    #[arg(long = "design", required = true)]
    pub designs: Vec<String>,
    #[arg(long, default_value_t = 100)]
    pub n_random: usize,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 1000)]
    pub m: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub json: bool,
}

/// Parses and runs; returns the process exit code.
pub fn main_with(args: impl IntoIterator<Item = String>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if e.use_stderr() => {
            let _ = write!(err, "{e}");
            return 2;
        }
        Err(e) => {
            let _ = write!(out, "{e}");
            return 0;
        }
    };
    match run(cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            2
        }
    }
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<i32> {
    let config = Config::load(cli.config.as_deref()).map_err(|e| anyhow!("{e}"))?;
    match cli.command {
        Command::RunTrial(args) => run_episodes(&config, &args, None, out),
        Command::RunDiscovery(args) => {
            let novice = args.novice.clone().unwrap_or_else(|| config.run.novice.clone());
            run_episodes(&config, &args.trial, Some(novice), out)
        }
        Command::Eig(args) => eig(&args, out),
        Command::Regret(args) => regret(&args, out),
        Command::Replay { records } => replay_files(&records, out),
        Command::ListEnvs => list_envs(out),
        Command::Repl(args) => {
            let hello = hello_from(&config, &args);
            let session = WireSession::new("repl", config, Transport::Stdio);
            let stdin = std::io::stdin();
            let record = crate::repl::run(session, &hello, stdin.lock(), &mut *out)?;
            Ok(if record.is_some_and(|r| r.is_complete()) { 0 } else { 1 })
        }
        Command::ServeStdio { out: dir } => {
            let session = WireSession::new("stdio", config, Transport::Stdio);
            let stdin = std::io::stdin();
            let record = crate::stdio::serve(BufReader::new(stdin.lock()), &mut *out, session)?;
            if let (Some(dir), Some(r)) = (dir, &record) {
                let path = records::write_record(&dir, r)?;
                eprintln!("record written to {}", path.display());
            }
            Ok(if record.is_some_and(|r| r.is_complete()) { 0 } else { 1 })
        }
        Command::ServeHttp { bind } => {
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(crate::http::serve(config, bind))?;
            Ok(0)
        }
        Command::Config => {
            write!(out, "{}", config.to_toml())?;
            Ok(0)
        }
        Command::Play(args) => play(&config, &args, out),
    }
}

fn play(config: &Config, args: &PlayArgs, out: &mut dyn Write) -> Result<i32> {
    let (env, goal) = env_goal(args.env.as_deref(), None, config)?;
    let framing = match args.framing.as_deref() {
        Some(f) => serde_json::from_value(serde_json::Value::String(f.into()))
            .map_err(|_| anyhow!("framing must be prior or no_prior, got `{f}`"))?,
        None => config.run.framing,
    };
    let env_config = config.env_config(env, framing);
    let spec = GoalSpec::new(&env_config, goal)?;
    let plan = SeedPlan::new(args.seed.unwrap_or(config.run.seed), args.run);
    let prior_samples = config.trial.prior_samples;
    let particles = args.particles.unwrap_or(config.run.particles);
    let kind: BaselineKind = args.agent.parse().map_err(|e: String| anyhow!(e))?;
    let mut agent = baseline_agent(kind, &env_config, &spec, plan, particles, prior_samples)?;
    let mut novice = match &args.novice {
        Some(n) => {
            let nk: NoviceKind = n.parse().map_err(|e: String| anyhow!(e))?;
            Some(baseline_novice(nk, &env_config, &spec, plan, prior_samples)?)
        }
        None => None,
    };
    let mut hello = Hello {
        env: Some(format!("{env}/{goal}")),
        seed: Some(plan.master_seed),
        run: Some(plan.run),
        framing: Some(framing),
        agent: Some(agent.info().identity),
        ..Hello::default()
    };
    if let Some(n) = &novice {
        hello.mode = Some(crate::wire::EpisodeMode::Discovery);
        hello.novice = Some(n.info().identity);
    }
    let stdin = std::io::stdin();
    let mut exchange = crate::client::StreamExchange { input: stdin.lock(), output: &mut *out };
    let novice_ref: Option<&mut dyn discobench_core::harness::Novice> = match novice.as_mut() {
        Some(n) => Some(n.as_mut()),
        None => None,
    };
    let done = crate::client::play(&mut exchange, &hello, agent.as_mut(), novice_ref)?;
    Ok(if done.status == "complete" { 0 } else { 1 })
}

fn framing_of(args: &EpisodeArgs, config: &Config) -> Framing {
    if args.no_prior {
        Framing::NoPrior
    } else if args.prior {
        Framing::Prior
    } else {
        config.run.framing
    }
}

fn env_goal(env: Option<&str>, goal: Option<&str>, config: &Config) -> Result<(EnvId, GoalId)> {
    let env = env.unwrap_or(&config.run.env);
    let key = match goal.or(config.run.goal.as_deref()) {
        Some(g) if !env.contains('/') => format!("{env}/{g}"),
        _ => env.to_string(),
    };
    Ok(parse_registry_key(&key)?)
}

fn hello_from(config: &Config, args: &EpisodeArgs) -> Hello {
    Hello {
        env: args.env.clone(),
        goal: args.goal.clone(),
        seed: args.seed,
        framing: Some(framing_of(args, config)),
        checkpoints: args.checkpoints.clone(),
        queries_per_checkpoint: args.queries,
        agent: Some("human".into()),
        ..Hello::default()
    }
}

fn settings_of(config: &Config, args: &TrialArgs) -> Result<TrialSettings> {
    let mut s = config.trial_settings();
    if let Some(c) = &args.episode.checkpoints {
        s.checkpoints = c.clone();
    }
    if let Some(q) = args.episode.queries {
        s.queries_per_checkpoint = q;
    }
    if args.no_eig {
        s.eig = None;
    }
    if let Some(e) = s.eig.as_mut() {
        if let Some(n) = args.eig_samples {
            e.params = EigParams { n_outer: n, m_inner: n };
        }
        if let Some(n) = args.n_random {
            e.n_random = n;
        }
    }
    s.validate()?;
    Ok(s)
}

struct Plan {
    config: EnvConfig,
    goal: GoalId,
    settings: TrialSettings,
    agent: String,
    novice: Option<String>,
    particles: usize,
    retry_limit: u32,
    verbalizer: Option<(String, u64)>,
}

fn run_one(p: &Plan, seed: SeedPlan) -> Result<RunRecord> {
    let mut spec = SessionSpec {
        config: p.config.clone(),
        goal: p.goal,
        settings: p.settings.clone(),
        plan: seed,
        agent: discobench_core::harness::AgentInfo::new(p.agent.clone()),
        novice: None,
        verbalizer: p.verbalizer.clone(),
    };
    spec.agent.retry_limit = p.retry_limit;
    if subprocess::is_command(&p.agent) {
        spec.novice = p.novice.as_ref().map(|_| spec.agent.clone());
        return subprocess::run(&p.agent, spec);
    }
    let kind: BaselineKind = p.agent.parse().map_err(|e: String| anyhow!(e))?;
    let goal = GoalSpec::new(&p.config, p.goal)?;
    let started = Instant::now();
    let mut agent = baseline_agent(kind, &p.config, &goal, seed, p.particles, p.settings.prior_samples)?;
    spec.agent = agent.info();
    spec.agent.retry_limit = p.retry_limit;
    let mut record = match &p.novice {
        Some(n) => {
            let nk: NoviceKind = n.parse().map_err(|e: String| anyhow!(e))?;
            let mut novice = baseline_novice(nk, &p.config, &goal, seed, p.settings.prior_samples)?;
            spec.novice = Some(novice.info());
            drive(spec.start()?, agent.as_mut(), Some(novice.as_mut()))
        }
        None => drive(spec.start()?, agent.as_mut(), None),
    };
    record.trial_mut().runtime =
        Some(Runtime { transport: Transport::InProcess, wall_clock_ms: started.elapsed().as_millis() as u64 });
    Ok(record)
}

fn run_episodes(config: &Config, args: &TrialArgs, novice: Option<String>, out: &mut dyn Write) -> Result<i32> {
    let (env, goal) = env_goal(args.episode.env.as_deref(), args.episode.goal.as_deref(), config)?;
    let plan = Plan {
        config: config.env_config(env, framing_of(&args.episode, config)),
        goal,
        settings: settings_of(config, args)?,
        agent: args.agent.clone().unwrap_or_else(|| config.run.agent.clone()),
        novice,
        particles: args.particles.unwrap_or(config.run.particles),
        retry_limit: config.trial.retry_limit,
        verbalizer: config.verbalizer.url.clone().map(|u| (u, config.verbalizer.timeout_ms)),
    };
    if !subprocess::is_command(&plan.agent) {
        plan.agent.parse::<BaselineKind>().map_err(|e| anyhow!(e))?;
    }
    let seed = args.episode.seed.unwrap_or(config.run.seed);
    let runs = args.runs.unwrap_or(config.run.runs);
    let dir = args.out.clone().unwrap_or_else(|| config.run.out.clone());
    let jobs = args.jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())).max(1);
    let plans: Vec<SeedPlan> = (0..runs).map(|r| SeedPlan::new(seed, r)).collect();
    let mut results: Vec<Result<RunRecord>> = Vec::new();
    for chunk in plans.chunks(jobs) {
        std::thread::scope(|s| {
            let handles: Vec<_> = chunk.iter().map(|sp| s.spawn(|| run_one(&plan, *sp))).collect();
            results.extend(handles.into_iter().map(|h| h.join().unwrap_or_else(|_| Err(anyhow!("run panicked")))));
        });
    }
    let mut done = Vec::new();
    for (sp, r) in plans.iter().zip(results) {
        let record = r.with_context(|| format!("run {}", sp.run))?;
        let path = records::write_record(&dir, &record)?;
        writeln!(out, "run {}: {} -> {}", sp.run, status_word(&record), path.display())?;
        done.push(record);
    }
    let rows = aggregate(&done);
    records::append_aggregate(&dir, &rows, seed)?;
    writeln!(out, "\n{}", records::table(&rows))?;
    Ok(if done.iter().all(RunRecord::is_complete) { 0 } else { 1 })
}

fn status_word(r: &RunRecord) -> String {
    let t = r.trial();
    let s = serde_json::to_value(&t.status).ok();
    s.and_then(|v| v["status"].as_str().map(String::from)).unwrap_or_else(|| "unknown".into())
}

fn read_design(env: EnvId, text: &str) -> Result<Design> {
    let d = Design::parse_kv(env, text).map_err(|e| anyhow!("bad design `{text}`: {e}"))?;
    EnvConfig::default_for(env).env().check_design(&d).map_err(|e| anyhow!("bad design `{text}`: {e}"))?;
    Ok(d)
}

fn eig(args: &EigArgs, out: &mut dyn Write) -> Result<i32> {
    let (env, _) = parse_registry_key(&args.env)?;
    let config = EnvConfig::default_for(env);
    let design = read_design(env, &args.design)?;
    let params = EigParams { n_outer: args.n, m_inner: args.m };
    let est = design_eig(&config, &design, params, LatentSource::Prior { context: None }, &RngState::new(args.seed))?;
    if args.json {
        writeln!(out, "{}", serde_json::to_string(&est)?)?;
    } else {
        writeln!(out, "EIG = {:.4} nats (s.e. {:.4}, N = {}, M = {})", est.value, est.std_error, est.n_outer, est.m_inner)?;
    }
    Ok(0)
}

fn regret(args: &RegretArgs, out: &mut dyn Write) -> Result<i32> {
    let (env, _) = parse_registry_key(&args.env)?;
    let config = EnvConfig::default_for(env);
    let designs = args.designs.iter().map(|d| read_design(env, d)).collect::<Result<Vec<_>>>()?;
    let params = EigParams { n_outer: args.n, m_inner: args.m };
    let source = LatentSource::Prior { context: None };
    let r = ei_regret(&config, &designs, args.n_random, params, source, &RngState::new(args.seed))?;
    if args.json {
        writeln!(out, "{}", serde_json::to_string(&r)?)?;
    } else {
        writeln!(
            out,
            "EI regret = {:.4} nats (best random {:.4}, mean chosen {:.4}, {} random designs)",
            r.regret, r.best_random, r.mean_chosen, args.n_random
        )?;
    }
    Ok(0)
}

/// First JSON path at which two values differ.
pub fn first_difference(a: &serde_json::Value, b: &serde_json::Value, path: &str) -> Option<String> {
    use serde_json::Value as J;
    match (a, b) {
        (J::Object(x), J::Object(y)) => {
            for k in x.keys().chain(y.keys()) {
                let p = format!("{path}.{k}");
                match (x.get(k), y.get(k)) {
                    (Some(u), Some(v)) => {
                        if let Some(d) = first_difference(u, v, &p) {
                            return Some(d);
                        }
                    }
                    _ => return Some(p),
                }
            }
            None
        }
        (J::Array(x), J::Array(y)) => {
            if x.len() != y.len() {
                return Some(format!("{path} (length {} vs {})", x.len(), y.len()));
            }
            x.iter().zip(y).enumerate().find_map(|(i, (u, v))| first_difference(u, v, &format!("{path}[{i}]")))
        }
        _ => (a != b).then(|| path.to_string()),
    }
}

fn replay_files(paths: &[PathBuf], out: &mut dyn Write) -> Result<i32> {
    if paths.is_empty() {
        bail!("no records given");
    }
    let mut code = 0;
    for path in paths {
        let original = records::read_record(path)?;
        let again = replay(&original).with_context(|| format!("replaying {}", path.display()))?;
        let a = serde_json::to_value(original.without_runtime())?;
        let b = serde_json::to_value(again.without_runtime())?;
        match first_difference(&a, &b, "$") {
            None => writeln!(out, "{}: identical", path.display())?,
            Some(d) => {
                code = 1;
                writeln!(out, "{}: differs at {d}", path.display())?;
            }
        }
    }
    Ok(code)
}

fn list_envs(out: &mut dyn Write) -> Result<i32> {
    writeln!(out, "{} environments", EnvId::ALL.len())?;
    for env in EnvId::ALL {
        let goals: Vec<&str> = env.goals().iter().map(|g| g.as_str()).collect();
        writeln!(out, "{:<24} {}", env.as_str(), goals.join(", "))?;
    }
    Ok(0)
}
