use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use super::{BenchConfig, BenchInstance, Experiment};
use crate::ame::SolveReport;
use crate::sim::RunStats;

/// Column order of the results CSV.
pub const CSV_COLUMNS: [&str; 16] = [
    "experiment",
    "instance",
    "agents",
    "t_max",
    "solver",
    "outcome",
    "hl_expanded",
    "ll_expanded",
    "approx_makespan",
    "policy",
    "n_runs",
    "mean_makespan",
    "ci95",
    "messages",
    "mean_collisions",
    "timeouts",
];

/// One (instance, solver, policy) result. Unsolved instances leave the
/// simulation fields empty.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub experiment: Experiment,
    pub instance: String,
    pub agents: usize,
    pub t_max: f64,
    pub solver: String,
    pub outcome: String,
    pub hl_expanded: usize,
    pub ll_expanded: usize,
    pub approx_makespan: Option<f64>,
    pub policy: Option<String>,
    pub n_runs: Option<usize>,
    pub mean_makespan: Option<f64>,
    pub ci95: Option<f64>,
    pub messages: Option<f64>,
    pub mean_collisions: Option<f64>,
    pub timeouts: Option<usize>,
    /// Wall time; kept out of the CSV so that it stays reproducible.
    #[serde(skip)]
    pub runtime_s: f64,
}

impl BenchRow {
    pub(super) fn unsolved(experiment: Experiment, bi: &BenchInstance, report: &SolveReport) -> Self {
        Self {
            experiment,
            instance: bi.label.clone(),
            agents: bi.agents,
            t_max: bi.t_max,
            solver: report.solver.to_string(),
            outcome: report.outcome.name().to_string(),
            hl_expanded: report.stats.hl_expanded,
            ll_expanded: report.stats.ll_expanded,
            approx_makespan: report.approx_makespan,
            policy: None,
            n_runs: None,
            mean_makespan: None,
            ci95: None,
            messages: None,
            mean_collisions: None,
            timeouts: None,
            runtime_s: report.stats.runtime.as_secs_f64(),
        }
    }

    pub(super) fn with_stats(mut self, s: &RunStats) -> Self {
        self.policy = Some(s.policy.to_string());
        self.n_runs = Some(s.n_runs);
        self.mean_makespan = Some(s.mean_makespan);
        self.ci95 = Some(s.ci95);
        self.messages = Some(s.messages);
        self.mean_collisions = Some(s.mean_collisions);
        self.timeouts = Some(s.timeouts);
        self
    }

    pub fn is_solved(&self) -> bool {
        self.outcome == "solved"
    }

    fn csv_record(&self) -> Vec<String> {
        let f = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.4}"));
        let u = |v: Option<usize>| v.map_or(String::new(), |x| x.to_string());
        vec![
            self.experiment.to_string(),
            self.instance.clone(),
            self.agents.to_string(),
            format!("{}", self.t_max),
            self.solver.clone(),
            self.outcome.clone(),
            self.hl_expanded.to_string(),
            self.ll_expanded.to_string(),
            f(self.approx_makespan),
            self.policy.clone().unwrap_or_default(),
            u(self.n_runs),
            f(self.mean_makespan),
            f(self.ci95),
            f(self.messages),
            f(self.mean_collisions),
            u(self.timeouts),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuccessRate {
    pub solver: String,
    pub agents: usize,
    pub attempted: usize,
    pub solved: usize,
}

impl SuccessRate {
    pub fn rate(&self) -> f64 {
        self.solved as f64 / self.attempted as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub config: BenchConfig,
    pub rows: Vec<BenchRow>,
    pub success: Vec<SuccessRate>,
    pub warnings: Vec<String>,
}

impl BenchReport {
    pub fn new(config: BenchConfig, rows: Vec<BenchRow>) -> Self {
        let success = success_rates(&rows);
        let mut report = Self { config, rows, success, warnings: Vec::new() };
        report.warnings = report.trend_warnings();
        report
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_COLUMNS).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r.csv_record()).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
    }

    /// Per-row table followed by success rates and warnings.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<14} {:>6} {:>6} {:<12} {:<11} {:>9} {:>9} {:<6} {:>18} {:>9} {:>10}",
            "instance",
            "agents",
            "t_max",
            "solver",
            "outcome",
            "time(s)",
            "approx",
            "policy",
            "makespan",
            "messages",
            "collisions"
        );
        for r in &self.rows {
            let approx = r.approx_makespan.map_or("-".into(), |a| format!("{a:.2}"));
            let makespan = match (r.mean_makespan, r.ci95) {
                (Some(m), Some(c)) => format!("{m:.2} ± {c:.2}"),
                _ => "-".into(),
            };
            let _ = writeln!(
                out,
                "{:<14} {:>6} {:>6} {:<12} {:<11} {:>9.3} {:>9} {:<6} {:>18} {:>9} {:>10}",
                r.instance,
                r.agents,
                r.t_max,
                r.solver,
                r.outcome,
                r.runtime_s,
                approx,
                r.policy.as_deref().unwrap_or("-"),
                makespan,
                r.messages.map_or("-".into(), |m| format!("{m:.1}")),
                r.mean_collisions.map_or("-".into(), |c| format!("{c:.2}")),
            );
        }
        let _ = writeln!(out, "\n{:<12} {:>6} {:>10}", "solver", "agents", "solved(%)");
        for s in &self.success {
            let _ = writeln!(out, "{:<12} {:>6} {:>10.1}", s.solver, s.agents, 100.0 * s.rate());
        }
        for w in &self.warnings {
            let _ = writeln!(out, "warning: {w}");
        }
        out
    }

    fn trend_warnings(&self) -> Vec<String> {
        let mut warnings = Vec::new();
        match self.config.experiment {
            Experiment::Exp2 => {
                // per (instance, solver, policy), makespan should grow with t_max
                let mut series: BTreeMap<(String, String, String), Vec<(f64, f64)>> = BTreeMap::new();
                for r in self.rows.iter().filter(|r| r.is_solved()) {
                    if let (Some(p), Some(m)) = (&r.policy, r.mean_makespan) {
                        series.entry((r.instance.clone(), r.solver.clone(), p.clone())).or_default().push((r.t_max, m));
                    }
                }
                for ((inst, solver, policy), mut s) in series {
                    s.sort_by(|a, b| a.0.total_cmp(&b.0));
                    if let Some(w) = s.windows(2).find(|w| w[1].1 <= w[0].1) {
                        warnings.push(format!(
                            "{inst} {solver}/{policy}: mean makespan {:.2} at t_max {} does not exceed {:.2} at t_max {}",
                            w[1].1, w[1].0, w[0].1, w[0].0
                        ));
                    }
                }
            }
            Experiment::Exp3 => {
                let mut by_solver: BTreeMap<&str, Vec<&SuccessRate>> = BTreeMap::new();
                for s in &self.success {
                    by_solver.entry(&s.solver).or_default().push(s);
                }
                for (solver, rates) in by_solver {
                    if let Some(w) = rates.windows(2).find(|w| w[1].rate() > w[0].rate()) {
                        warnings.push(format!(
                            "{solver}: success rate rises from {:.2} at {} agents to {:.2} at {} agents",
                            w[0].rate(),
                            w[0].agents,
                            w[1].rate(),
                            w[1].agents
                        ));
                    }
                }
            }
            _ => {}
        }
        warnings
    }
}

/// Solved fraction per (solver, agent count), counting each instance once.
fn success_rates(rows: &[BenchRow]) -> Vec<SuccessRate> {
    let mut seen: BTreeMap<(String, usize, String, String), bool> = BTreeMap::new();
    for r in rows {
        seen.insert((r.solver.clone(), r.agents, r.instance.clone(), format!("{}", r.t_max)), r.is_solved());
    }
    let mut agg: BTreeMap<(String, usize), (usize, usize)> = BTreeMap::new();
    for ((solver, agents, ..), solved) in seen {
        let e = agg.entry((solver, agents)).or_default();
        e.0 += 1;
        e.1 += usize::from(solved);
    }
    agg.into_iter()
        .map(|((solver, agents), (attempted, solved))| SuccessRate { solver, agents, attempted, solved })
        .collect()
}
