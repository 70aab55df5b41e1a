//! Solvers for MQ systems and closed-form cost estimates.
//!
//! Two backends share one contract: given a system and a budget, return
//! solutions in lexicographic order together with a completeness flag.
//! Anything else that can produce roots (an external Gröbner engine, say)
//! plugs in through [`MqSolver`].

mod bruteforce;
mod complexity;
mod xl;

use std::cell::Cell;

use thiserror::Error;

use crate::ffield::FieldElement;
use crate::mqsys::MQSystem;

pub use bruteforce::solve_bruteforce;
pub use complexity::{complexity_estimate, degree_of_regularity, Algorithm, ComplexityError, Omega};
pub use xl::{solve_xl, solve_xl_auto, MAX_XL_VARIABLES};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SolveBudget {
    pub max_candidates: u64,
    pub max_matrix_cells: u64,
}

impl SolveBudget {
    pub fn new(max_candidates: u64, max_matrix_cells: u64) -> Self {
        assert!(max_candidates > 0 && max_matrix_cells > 0, "budget caps must be positive");
        SolveBudget { max_candidates, max_matrix_cells }
    }
}

impl Default for SolveBudget {
    fn default() -> Self {
        SolveBudget { max_candidates: 1 << 24, max_matrix_cells: 1 << 22 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolveReport {
    /// Solutions sorted lexicographically.
    pub solutions: Vec<Vec<FieldElement>>,
    /// True when `solutions` is the whole solution set.
    pub complete: bool,
    /// Candidate evaluations plus row operations performed.
    pub work: u64,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SolveError {
    #[error("budget exceeded: {what} needs {needed}, limit {limit}")]
    BudgetExceeded { what: &'static str, needed: u128, limit: u64 },
    #[error("degree {degree} too low: no univariate relation produced")]
    DegreeTooLow { degree: usize },
    #[error("invalid XL degree {0}, need at least 2")]
    InvalidDegree(usize),
    #[error("unsupported system: {0}")]
    Unsupported(String),
}

/// A backend able to find roots of an MQ system.
pub trait MqSolver {
    fn name(&self) -> &str;
    fn solve(&self, system: &MQSystem) -> Result<SolveReport, SolveError>;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct BruteForce {
    pub budget: SolveBudget,
}

impl MqSolver for BruteForce {
    fn name(&self) -> &str {
        "bruteforce"
    }

    fn solve(&self, system: &MQSystem) -> Result<SolveReport, SolveError> {
        solve_bruteforce(system, &self.budget)
    }
}

/// XL at a fixed degree.
#[derive(Clone, Copy, Debug)]
pub struct Xl {
    pub degree: usize,
    pub budget: SolveBudget,
}

impl MqSolver for Xl {
    fn name(&self) -> &str {
        "xl"
    }

    fn solve(&self, system: &MQSystem) -> Result<SolveReport, SolveError> {
        solve_xl(system, self.degree, &self.budget)
    }
}

/// XL at the smallest degree that gives a complete answer.
#[derive(Clone, Copy, Debug, Default)]
pub struct XlAuto {
    pub budget: SolveBudget,
}

impl MqSolver for XlAuto {
    fn name(&self) -> &str {
        "xl-auto"
    }

    fn solve(&self, system: &MQSystem) -> Result<SolveReport, SolveError> {
        solve_xl_auto(system, &self.budget).map(|(report, _)| report)
    }
}

/// Looks up a solver by its CLI name.
pub fn solver_by_name(name: &str, budget: SolveBudget) -> Option<Box<dyn MqSolver>> {
    match name {
        "bruteforce" | "brute" => Some(Box::new(BruteForce { budget })),
        "xl" | "xl-auto" => Some(Box::new(XlAuto { budget })),
        _ => {
            let degree = name.strip_prefix("xl")?.parse().ok()?;
            Some(Box::new(Xl { degree, budget }))
        }
    }
}

thread_local! {
    static INVOCATIONS: Cell<u64> = const { Cell::new(0) };
}

/// Number of solver entry-point calls made on the current thread.
pub fn invocation_count() -> u64 {
    INVOCATIONS.with(|c| c.get())
}

fn note_invocation() {
    INVOCATIONS.with(|c| c.set(c.get() + 1));
}

/// Sorts, dedups and checks every reported root against the system.
fn finish(system: &MQSystem, mut solutions: Vec<Vec<FieldElement>>, complete: bool, work: u64) -> SolveReport {
    solutions.sort();
    solutions.dedup();
    for x in &solutions {
        assert!(
            system.is_solution(x).unwrap_or(false),
            "solver returned a non-solution {x:?}"
        );
    }
    SolveReport { solutions, complete, work }
}
