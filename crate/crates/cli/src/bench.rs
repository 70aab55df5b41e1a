//! Solver timing table in the shape of the published F4 experiments.

use std::fmt::Write as _;
use std::time::Instant;

use mqchain_core::ffield::FieldSpec;
use mqchain_core::hash::sha256_parts;
use mqchain_core::mqsolve::{solve_bruteforce, solve_xl, solve_xl_auto, SolveBudget, SolveError};
use mqchain_core::mqsys::{generate_system, Seed};

use crate::alloc;
use crate::error::{CliError, CliResult};

pub const CSV_HEADER: &str =
    "q,m,n,solver,trials,successes,mean_time_s,peak_mem_bytes,status,preset,published_time_s,published_mem_mb";

/// Published F4 timings for square systems: (q, n = m, seconds, MB).
/// The q = 32, n = 14 run printed "Out of memory." in the memory column.
pub const PUBLISHED_SQUARE: &[(u16, u16, f64, Option<f64>)] = &[
    (2, 6, 0.00, Some(3.1)),
    (2, 8, 0.031, Some(3.4)),
    (2, 10, 0.14, Some(6.1)),
    (2, 11, 0.58, Some(13.3)),
    (2, 12, 2.84, Some(41.6)),
    (2, 13, 13.187, Some(141.6)),
    (2, 14, 82.09, Some(532.0)),
    (16, 6, 0.00, Some(3.3)),
    (16, 8, 0.031, Some(3.7)),
    (16, 10, 0.76, Some(8.7)),
    (16, 11, 4.70, Some(22.0)),
    (16, 12, 33.75, Some(75.2)),
    (16, 13, 241.21, Some(265.9)),
    (16, 14, 1854.31, Some(1009.8)),
    (32, 6, 0.00, Some(3.2)),
    (32, 8, 0.031, Some(3.6)),
    (32, 10, 1.25, Some(8.8)),
    (32, 11, 8.34, Some(22.6)),
    (32, 12, 63.82, Some(77.5)),
    (32, 13, 470.81, Some(274.6)),
    (32, 14, 1048.0, None),
];

/// Recommended one-minute parameter sets: (q, m, n, seconds, MB).
pub const PRESETS: &[(u16, u16, u16, f64, f64)] = &[
    (2, 86, 28, 41.22, 314.5),
    (4, 43, 21, 86.43, 194.2),
    (5, 40, 20, 86.12, 140.7),
    (7, 35, 19, 58.65, 112.9),
    (8, 34, 19, 65.04, 111.2),
    (11, 30, 18, 57.03, 96.0),
    (13, 30, 18, 58.39, 97.3),
    (16, 29, 18, 58.25, 97.7),
    (17, 27, 17, 65.92, 127.2),
    (19, 24, 16, 40.25, 93.2),
    (23, 20, 15, 35.1, 93.4),
    (29, 16, 14, 61.18, 123.6),
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverChoice {
    BruteForce,
    Xl { degree: usize },
    XlAuto,
}

impl SolverChoice {
    pub fn parse(s: &str) -> CliResult<Self> {
        match s {
            "bruteforce" => Ok(SolverChoice::BruteForce),
            "xl-auto" => Ok(SolverChoice::XlAuto),
            _ => match s.strip_prefix("xl:").map(str::parse) {
                Some(Ok(degree)) => Ok(SolverChoice::Xl { degree }),
                _ => Err(CliError::Usage(format!("unknown solver {s:?}; use bruteforce, xl-auto or xl:<degree>"))),
            },
        }
    }

    pub fn name(&self) -> String {
        match self {
            SolverChoice::BruteForce => "bruteforce".into(),
            SolverChoice::Xl { degree } => format!("xl:{degree}"),
            SolverChoice::XlAuto => "xl-auto".into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BenchStatus {
    Ok,
    BudgetExceeded,
    Failed,
}

impl BenchStatus {
    fn as_str(&self) -> &'static str {
        match self {
            BenchStatus::Ok => "ok",
            BenchStatus::BudgetExceeded => "budget_exceeded",
            BenchStatus::Failed => "failed",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRecord {
    pub q: u16,
    pub m: u16,
    pub n: u16,
    pub solver: String,
    pub trials: u32,
    /// Trials whose solver run returned the full solution set.
    pub successes: u32,
    /// Mean wall time of the solve step over successful trials.
    pub mean_time_s: f64,
    /// Largest heap growth seen during any one solve.
    pub peak_mem_bytes: usize,
    pub status: BenchStatus,
    pub preset: bool,
    pub published_time_s: Option<f64>,
    pub published_mem_mb: Option<f64>,
}

impl BenchRecord {
    pub fn success(&self) -> bool {
        self.status == BenchStatus::Ok && self.successes == self.trials
    }

    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{:.9},{},{},{},{},{}",
            self.q,
            self.m,
            self.n,
            self.solver,
            self.trials,
            self.successes,
            self.mean_time_s,
            self.peak_mem_bytes,
            self.status.as_str(),
            self.preset,
            opt(self.published_time_s),
            opt(self.published_mem_mb)
        )
    }
}

pub fn to_csv(records: &[BenchRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(out, "{}", r.csv_row());
    }
    out
}

#[derive(Clone, Debug)]
pub struct BenchOptions {
    pub qs: Vec<u16>,
    pub ns: Vec<u16>,
    /// Equations per system; `None` means m = n.
    pub m: Option<u16>,
    pub trials: u32,
    pub solver: SolverChoice,
    pub seed: u64,
    pub budget: SolveBudget,
    /// Also queue the recommended preset shapes.
    pub include_presets: bool,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            qs: vec![2],
            ns: (6..=12).collect(),
            m: None,
            trials: 10,
            solver: SolverChoice::BruteForce,
            seed: 0,
            budget: SolveBudget::default(),
            include_presets: false,
        }
    }
}

fn published(q: u16, m: u16, n: u16) -> (bool, Option<f64>, Option<f64>) {
    if let Some(p) = PRESETS.iter().find(|p| (p.0, p.1, p.2) == (q, m, n)) {
        return (true, Some(p.3), Some(p.4));
    }
    match PUBLISHED_SQUARE.iter().find(|p| m == n && (p.0, p.1) == (q, n)) {
        Some(p) => (false, Some(p.2), p.3),
        None => (false, None, None),
    }
}

fn trial_seed(seed: u64, q: u16, m: u16, n: u16, trial: u32) -> Seed {
    Seed(sha256_parts(&[
        b"mqchain-bench",
        &seed.to_le_bytes(),
        &q.to_le_bytes(),
        &m.to_le_bytes(),
        &n.to_le_bytes(),
        &trial.to_le_bytes(),
    ]))
}

/// One row per (q, m, n). Systems come from a seed fixed by the options, so
/// reruns solve the same instances. Rows stop at the first budget overrun.
pub fn run_bench(opts: &BenchOptions) -> CliResult<Vec<BenchRecord>> {
    if opts.trials == 0 {
        return Ok(Vec::new());
    }
    let mut shapes = Vec::new();
    for &q in &opts.qs {
        for &n in &opts.ns {
            shapes.push((q, opts.m.unwrap_or(n), n));
        }
    }
    if opts.include_presets {
        shapes.extend(PRESETS.iter().map(|p| (p.0, p.1, p.2)));
    }
    let mut records = Vec::with_capacity(shapes.len());
    for (q, m, n) in shapes {
        let spec = FieldSpec::new(q).map_err(|e| CliError::Usage(e.to_string()))?;
        if m == 0 || n == 0 {
            return Err(CliError::Usage("m and n must be positive".into()));
        }
        records.push(bench_shape(opts, &spec, q, m, n));
    }
    Ok(records)
}

fn bench_shape(opts: &BenchOptions, spec: &FieldSpec, q: u16, m: u16, n: u16) -> BenchRecord {
    let (preset, published_time_s, published_mem_mb) = published(q, m, n);
    let mut record = BenchRecord {
        q,
        m,
        n,
        solver: opts.solver.name(),
        trials: opts.trials,
        successes: 0,
        mean_time_s: 0.0,
        peak_mem_bytes: 0,
        status: BenchStatus::Ok,
        preset,
        published_time_s,
        published_mem_mb,
    };
    let mut total = 0.0;
    for trial in 0..opts.trials {
        let system = generate_system(&trial_seed(opts.seed, q, m, n, trial), spec, m as usize, n as usize);
        let start = Instant::now();
        let (result, mem) = alloc::measure(|| match opts.solver {
            SolverChoice::BruteForce => solve_bruteforce(&system, &opts.budget),
            SolverChoice::Xl { degree } => solve_xl(&system, degree, &opts.budget),
            SolverChoice::XlAuto => solve_xl_auto(&system, &opts.budget).map(|(r, _)| r),
        });
        let elapsed = start.elapsed().as_secs_f64();
        record.peak_mem_bytes = record.peak_mem_bytes.max(mem);
        match result {
            Ok(report) if report.complete => {
                record.successes += 1;
                total += elapsed;
            }
            Ok(_) => record.status = BenchStatus::Failed,
            Err(SolveError::BudgetExceeded { .. }) => {
                record.status = BenchStatus::BudgetExceeded;
                break;
            }
            Err(_) => record.status = BenchStatus::Failed,
        }
    }
    if record.successes > 0 {
        record.mean_time_s = total / record.successes as f64;
    }
    record
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_is_stable() {
        assert_eq!(
            to_csv(&[]),
            "q,m,n,solver,trials,successes,mean_time_s,peak_mem_bytes,status,preset,published_time_s,published_mem_mb\n"
        );
    }

    #[test]
    fn zero_trials_is_an_empty_table() {
        let opts = BenchOptions { trials: 0, ..BenchOptions::default() };
        assert!(run_bench(&opts).unwrap().is_empty());
    }

    #[test]
    fn rows_carry_published_values_and_preset_flags() {
        let opts = BenchOptions { qs: vec![2], ns: vec![6, 7], trials: 2, ..BenchOptions::default() };
        let rows = run_bench(&opts).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(BenchRecord::success));
        assert_eq!(rows[0].published_time_s, Some(0.0));
        assert_eq!(rows[0].published_mem_mb, Some(3.1));
        assert_eq!(rows[1].published_time_s, None);
        assert_eq!(published(16, 29, 18), (true, Some(58.25), Some(97.7)));
        assert_eq!(published(32, 14, 14), (false, Some(1048.0), None));
    }

    #[test]
    fn oversized_shapes_are_marked_not_fatal() {
        let opts = BenchOptions { qs: vec![2], ns: vec![4], trials: 1, include_presets: true, ..BenchOptions::default() };
        let rows = run_bench(&opts).unwrap();
        assert_eq!(rows.len(), 1 + PRESETS.len());
        assert!(rows[0].success());
        assert!(rows[1..].iter().all(|r| r.preset && r.status == BenchStatus::BudgetExceeded));
        let csv = to_csv(&rows);
        assert_eq!(csv.lines().count(), rows.len() + 1);
        assert!(csv.lines().nth(2).unwrap().starts_with("2,86,28,bruteforce,1,0,"));
    }

    #[test]
    fn solver_names_parse() {
        assert_eq!(SolverChoice::parse("xl:3").unwrap(), SolverChoice::Xl { degree: 3 });
        assert_eq!(SolverChoice::parse("bruteforce").unwrap().name(), "bruteforce");
        assert!(matches!(SolverChoice::parse("f4"), Err(CliError::Usage(_))));
    }
}
