//! Runs an LP-file solver as a subprocess.
//!
//! The command template gets `{input}` (the LP file) and `{output}` (where
//! the solver must write its solution) substituted and runs under `sh -c`.
//! The solution file holds `name value` lines, one `objective value` line
//! and optionally `status optimal|feasible|infeasible`; `#` starts a
//! comment. Variables it omits are 0.

use std::collections::HashMap;
use std::path::PathBuf;
use std::process::Command;
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Instant;

use super::{Solution, SolveStats, SolveStatus};
use crate::error::{Error, Result};
use crate::milp::MilpModel;

static RUN_ID: AtomicU64 = AtomicU64::new(0);

struct WorkDir(PathBuf);

impl Drop for WorkDir {
    fn drop(&mut self) {
        let _ = std::fs::remove_dir_all(&self.0);
    }
}

/// Status, objective and per-variable values from solution-file text.
pub fn parse_solution_file(text: &str, model: &MilpModel) -> Result<(SolveStatus, f64, Vec<f64>)> {
    let index: HashMap<&str, usize> = model
        .variables
        .iter()
        .enumerate()
        .map(|(i, v)| (v.name.as_str(), i))
        .collect();
    let mut values = vec![0.0; model.variables.len()];
    let mut objective = None;
    let mut status = SolveStatus::Optimal;
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(Error::SolverOutput(format!("line {}: expected `name value`", n + 1)));
        }
        let (key, val) = (fields[0], fields[1]);
        if key == "status" {
            status = match val {
                "optimal" => SolveStatus::Optimal,
                "feasible" => SolveStatus::Feasible,
                "infeasible" => SolveStatus::Infeasible,
                other => {
                    return Err(Error::SolverOutput(format!("line {}: unknown status {other}", n + 1)))
                }
            };
            continue;
        }
        let x: f64 = val
            .parse()
            .map_err(|_| Error::SolverOutput(format!("line {}: bad number {val:?}", n + 1)))?;
        if key == "objective" {
            objective = Some(x);
        } else if let Some(&i) = index.get(key) {
            values[i] = x;
        } else {
            return Err(Error::SolverOutput(format!("line {}: unknown variable {key}", n + 1)));
        }
    }
    if status == SolveStatus::Infeasible {
        return Err(Error::SolverInfeasible);
    }
    let objective = objective.ok_or_else(|| Error::SolverOutput("no objective line".into()))?;
    Ok((status, objective, values))
}

/// Writes `lp_text`, runs `command` on it and reads the solution back into
/// `model`'s variable order. The schedule is left empty; see
/// [`super::decode_schedule`].
pub fn external_solve(model: &MilpModel, lp_text: &str, command: &str) -> Result<Solution> {
    if !command.contains("{input}") || !command.contains("{output}") {
        return Err(Error::Config(
            "solver command needs {input} and {output} placeholders".into(),
        ));
    }
    let start = Instant::now();
    let dir = std::env::temp_dir().join(format!(
        "aosnet-{}-{}",
        std::process::id(),
        RUN_ID.fetch_add(1, Ordering::Relaxed)
    ));
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let dir = WorkDir(dir);
    let input = dir.0.join("model.lp");
    let output = dir.0.join("solution.txt");
    std::fs::write(&input, lp_text).map_err(|e| Error::io(&input, e))?;
    let cmd = command
        .replace("{input}", &input.to_string_lossy())
        .replace("{output}", &output.to_string_lossy());
    let result = Command::new("sh")
        .arg("-c")
        .arg(&cmd)
        .output()
        .map_err(|e| Error::SolverProcess(format!("could not start `{cmd}`: {e}")))?;
    if !result.status.success() {
        let stderr = String::from_utf8_lossy(&result.stderr);
        return Err(Error::SolverProcess(format!(
            "`{cmd}` exited with {}: {}",
            result.status,
            stderr.trim()
        )));
    }
    let text = std::fs::read_to_string(&output)
        .map_err(|e| Error::SolverOutput(format!("no solution file: {e}")))?;
    let (status, objective, values) = parse_solution_file(&text, model)?;
    Ok(Solution {
        status,
        objective: Some(objective),
        values,
        schedule: Vec::new(),
        stats: SolveStats {
            nodes: 0,
            wall_time: start.elapsed(),
            truncated: false,
        },
    })
}
