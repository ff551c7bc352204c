//! Result files: one JSON record per run, an append-only aggregate table.

use std::fs::{self, OpenOptions};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use discobench_core::env::Framing;
use discobench_core::harness::{AggregateRow, RunRecord, Stat};

fn framing_str(f: Framing) -> &'static str {
    match f {
        Framing::Prior => "prior",
        Framing::NoPrior => "no_prior",
    }
}

fn slug(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '-' { c } else { '_' }).collect()
}

pub fn record_name(record: &RunRecord) -> String {
    let t = record.trial();
    let agent = match record {
        RunRecord::Discovery(d) => format!("{}+{}", t.agent.identity, d.novice_agent.identity),
        RunRecord::Trial(_) => t.agent.identity.clone(),
    };
    format!(
        "{}__{}__{}__{}__seed{}__run{}.json",
        t.goal.env,
        t.goal.goal,
        slug(&agent),
        framing_str(t.config.framing),
        t.seed_plan.master_seed,
        t.seed_plan.run
    )
}

pub fn write_record(dir: &Path, record: &RunRecord) -> Result<PathBuf> {
    let dir = dir.join("records");
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(record_name(record));
    fs::write(&path, serde_json::to_string_pretty(record)? + "\n").with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

pub fn read_record(path: &Path) -> Result<RunRecord> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut de = serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(&mut de).with_context(|| format!("parsing {}", path.display()))
}

const COLUMNS: [&str; 16] = [
    "env",
    "goal",
    "agent",
    "framing",
    "runs",
    "incomplete",
    "error_at_0",
    "error_at_0_se",
    "final_step",
    "error_at_final",
    "error_at_final_se",
    "discovery",
    "discovery_se",
    "regret",
    "regret_se",
    "seed",
];

fn stat_cells(s: &Option<Stat>) -> [String; 2] {
    match s {
        Some(s) => [s.mean.to_string(), s.std_error.to_string()],
        None => [String::new(), String::new()],
    }
}

/// Appends rows to `aggregate.csv`, writing the header for a new file.
pub fn append_aggregate(dir: &Path, rows: &[AggregateRow], seed: u64) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join("aggregate.csv");
    let fresh = !path.exists() || fs::metadata(&path)?.len() == 0;
    let file = OpenOptions::new().create(true).append(true).open(&path)?;
    let mut w = csv::Writer::from_writer(file);
    if fresh {
        w.write_record(COLUMNS)?;
    }
    for r in rows {
        let [e0, e0se] = stat_cells(&r.error_at_0);
        let [ef, efse] = stat_cells(&r.error_at_final);
        let [d, dse] = stat_cells(&r.discovery);
        let [g, gse] = stat_cells(&r.regret);
        w.write_record([
            r.env.clone(),
            r.goal.clone(),
            r.agent.clone(),
            framing_str(r.framing).to_string(),
            r.runs.to_string(),
            r.incomplete.to_string(),
            e0,
            e0se,
            r.final_step.to_string(),
            ef,
            efse,
            d,
            dse,
            g,
            gse,
            seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(path)
}

fn cell(s: &Option<Stat>) -> String {
    match s {
        Some(s) => format!("{:.3} ± {:.3}", s.mean, s.std_error),
        None => "n/a".into(),
    }
}

/// Plain-text table, one line per row.
pub fn table(rows: &[AggregateRow]) -> String {
    let final_step = rows.iter().map(|r| r.final_step).max().unwrap_or(0);
    let discovery = rows.iter().any(|r| r.discovery.is_some());
    let mut header = vec![
        "env".to_string(),
        "goal".into(),
        "agent".into(),
        "framing".into(),
        "runs".into(),
        "Error@0".into(),
        format!("Error@{final_step}"),
    ];
    if discovery {
        header.push(format!("Discovery@{final_step}"));
    }
    header.push("EI regret".into());
    let mut lines = vec![header];
    for r in rows {
        let mut l = vec![
            r.env.clone(),
            r.goal.clone(),
            r.agent.clone(),
            framing_str(r.framing).into(),
            if r.incomplete > 0 { format!("{} (+{} incomplete)", r.runs, r.incomplete) } else { r.runs.to_string() },
            cell(&r.error_at_0),
            cell(&r.error_at_final),
        ];
        if discovery {
            l.push(cell(&r.discovery));
        }
        l.push(cell(&r.regret));
        lines.push(l);
    }
    let widths: Vec<usize> =
        (0..lines[0].len()).map(|i| lines.iter().map(|l| l[i].chars().count()).max().unwrap_or(0)).collect();
    lines
        .iter()
        .map(|l| {
            let cells: Vec<String> =
                l.iter().zip(&widths).map(|(c, w)| format!("{c}{}", " ".repeat(w - c.chars().count()))).collect();
            cells.join("  ").trim_end().to_string()
        })
        .collect::<Vec<_>>()
        .join("\n")
}
