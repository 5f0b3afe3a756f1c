use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use chemosched_core::{ProblemSpec, Schedule, SweepEntry, Trajectory};
use serde::Serialize;

pub const TRAJECTORY_HEADER: &str = "period,size,log_size,treated,treatment_id";
pub const SWEEP_HEADER: &str = "budget,max_size,status";

/// One row per size index `1..=K+1`; the last index carries no decision.
pub fn trajectory_csv(spec: &ProblemSpec, schedule: &Schedule, traj: &Trajectory) -> String {
    let mut out = String::from(TRAJECTORY_HEADER);
    out.push('\n');
    for (i, (size, ls)) in traj.sizes.iter().zip(&traj.log_sizes).enumerate() {
        let period = i + 1;
        let choice = (period <= spec.horizon).then(|| schedule.at(period)).flatten();
        let id = choice.map(|c| spec.treatments[c].id.to_string()).unwrap_or_default();
        let _ = writeln!(out, "{period},{size},{ls},{},{id}", u8::from(choice.is_some()));
    }
    out
}

pub fn sweep_csv(entries: &[SweepEntry]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for e in entries {
        let size = e.max_size.map(|s| format!("{s:.2}")).unwrap_or_default();
        let _ = writeln!(out, "{},{size},{}", e.budget, e.status);
    }
    out
}

pub fn write_json(dir: &Path, name: &str, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(dir, name, &text)
}

pub fn write_text(dir: &Path, name: &str, text: &str) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}
