//! Adapter for an external mixed-integer solver.
//!
//! The program receives the problem as JSON on stdin and must print a
//! [`SolveResult`] as JSON on stdout. Infinite bounds are written as `null`.

use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Stdio};

use super::SolveResult;
use crate::error::{GepError, Result};
use crate::model::CanonicalProblem;

/// Environment variable naming the adapter executable.
pub const EXTERNAL_SOLVER_ENV: &str = "GEP_TSA_EXTERNAL_SOLVER";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExternalSolver {
    pub program: PathBuf,
    pub args: Vec<String>,
}

impl ExternalSolver {
    pub fn new(program: impl Into<PathBuf>) -> Self {
        Self {
            program: program.into(),
            args: Vec::new(),
        }
    }

    pub fn with_args(mut self, args: impl IntoIterator<Item = impl Into<String>>) -> Self {
        self.args = args.into_iter().map(Into::into).collect();
        self
    }

    pub fn from_env() -> Option<Self> {
        std::env::var_os(EXTERNAL_SOLVER_ENV)
            .filter(|v| !v.is_empty())
            .map(Self::new)
    }

    pub fn solve(&self, problem: &CanonicalProblem) -> Result<SolveResult> {
        let input = encode_problem(problem)?;
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()?;
        child
            .stdin
            .take()
            .expect("piped stdin")
            .write_all(input.as_bytes())?;
        let out = child.wait_with_output()?;
        if !out.status.success() {
            return Err(GepError::Solver(format!(
                "external solver exited with {}: {}",
                out.status,
                String::from_utf8_lossy(&out.stderr).trim()
            )));
        }
        let res: SolveResult = serde_json::from_slice(&out.stdout)
            .map_err(|e| GepError::Solver(format!("unreadable external solver output: {e}")))?;
        if res.primal.len() != problem.num_vars {
            return Err(GepError::Dimension(format!(
                "external solver returned {} values for {} variables",
                res.primal.len(),
                problem.num_vars
            )));
        }
        Ok(res)
    }
}

fn encode_problem(problem: &CanonicalProblem) -> Result<String> {
    // serde_json writes non-finite floats as null, which is the documented
    // encoding of an absent bound.
    serde_json::to_string(problem).map_err(|e| GepError::Solver(e.to_string()))
}
