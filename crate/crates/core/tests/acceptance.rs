//! Acceptance suite. Runs as a plain binary so that the PASS/FAIL line of
//! every criterion is always printed; exits non-zero if any criterion fails.

mod common;

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::Instant;

use mapf_dp::ame::{solve, AmeOptions, SearchLimits, SolveOutcome, Solver};
use mapf_dp::bench::{run_bench, BenchConfig, Experiment};
use mapf_dp::cbs::brute_force_optimal_makespan;
use mapf_dp::dependency::{build_partial_order, compute_labels, reduce_dag, transitive_reduction};
use mapf_dp::io::PlanFile;
use mapf_dp::model::{
    generate_random_instance, validate_plan, AgentSpec, Graph, Instance, Path, Plan, RandomInstanceParams,
};
use mapf_dp::sim::{monte_carlo, ExecConfig, Policy, RunStats};
use mapf_dp::stats::median;

use common::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// A desk-scale instance solved by AME, with its MCP, FSP and dummy statistics.
struct Desk {
    instance: Instance,
    plan: Plan,
    approx: f64,
    mcp: RunStats,
    fsp: RunStats,
    dummy: RunStats,
}

type Check<'a> = Box<dyn Fn() -> Outcome + 'a>;

const DESK_INSTANCES: usize = 20;
const DESK_RUNS: usize = 200;

fn desk_set() -> (Vec<Desk>, usize) {
    let mut out = Vec::new();
    let mut attempted = 0;
    let mut seed = 0;
    while out.len() < DESK_INSTANCES {
        let instance = generate_random_instance(&RandomInstanceParams::default(), seed).unwrap();
        seed += 1;
        attempted += 1;
        let r = solve(&instance, Solver::Ame, &SearchLimits::default(), AmeOptions::default());
        let (Some(plan), Some(approx)) = (r.plan, r.approx_makespan) else { continue };
        let stats = |p| monte_carlo(&instance, &plan, p, DESK_RUNS, 7 + seed, ExecConfig::default()).unwrap();
        let (mcp, fsp, dummy) = (stats(Policy::Mcp), stats(Policy::Fsp), stats(Policy::Dummy));
        out.push(Desk { instance, plan, approx, mcp, fsp, dummy });
    }
    (out, attempted)
}

fn robustness(desk: &[Desk]) -> Outcome {
    let mut bad = Vec::new();
    for (k, d) in desk.iter().enumerate() {
        for s in [&d.mcp, &d.fsp] {
            if s.collision_runs > 0 || s.deadlocks > 0 || s.timeouts > 0 || s.completed != s.n_runs {
                bad.push(format!("instance {k} {}: {s}", s.policy));
            }
        }
    }
    let detail = format!(
        "{} instances x {DESK_RUNS} runs x {{mcp, fsp}}, {} with collisions/deadlocks/timeouts {bad:?}",
        desk.len(),
        bad.len()
    );
    outcome(bad.is_empty(), detail)
}

fn validity(desk: &[Desk]) -> Outcome {
    let limits = SearchLimits { time: None, ..SearchLimits::default() };
    let (mut checked, mut invalid, mut capped) = (0, 0, 0);
    for seed in 0..500u64 {
        let inst = tiny_instance(seed, 8, 3);
        for solver in Solver::ALL {
            let r = solve(&inst, solver, &limits, AmeOptions::default());
            capped += usize::from(r.outcome == SolveOutcome::Timeout);
            if let Some(plan) = &r.plan {
                checked += 1;
                invalid += usize::from(!validate_plan(&inst, plan).unwrap().is_valid());
            }
        }
    }
    for d in desk {
        checked += 1;
        invalid += usize::from(!validate_plan(&d.instance, &d.plan).unwrap().is_valid());
    }
    let detail = format!("500 tiny instances x 2 solvers plus {} desk plans: {checked} plans checked, {invalid} invalid ({capped} tiny solves hit the expansion cap)", desk.len());
    outcome(invalid == 0, detail)
}

fn reduction_oracle() -> Outcome {
    let mut mismatches = 0;
    for seed in 0..200u64 {
        let (n, edges) = random_dag(seed);
        let reduced = reduce_dag(n, &edges).unwrap();
        let ok = reduced.iter().copied().collect::<BTreeSet<_>>() == brute_reduction(n, &edges)
            && reduce_dag(n, &reduced).unwrap() == reduced;
        mismatches += usize::from(!ok);
    }
    let plans = solved_plans(50, 1000);
    for (_, plan) in &plans {
        let full = build_partial_order(plan).unwrap();
        let reduced = transitive_reduction(&full).unwrap();
        let ids = |dg: &mapf_dp::dependency::DependencyGraph| {
            dg.edges().iter().map(|&(a, b)| (full.node_id(a), full.node_id(b))).collect::<Vec<_>>()
        };
        let ok = ids(&reduced).into_iter().collect::<BTreeSet<_>>() == brute_reduction(full.num_nodes(), &ids(&full))
            && transitive_reduction(&reduced).unwrap().edges() == reduced.edges();
        mismatches += usize::from(!ok);
    }
    outcome(mismatches == 0, format!("200 random DAGs and {} plan orders, {mismatches} mismatches", plans.len()))
}

fn labels_closed_form() -> Outcome {
    let g = Graph::from_grid(4, 1, vec![false; 4]).unwrap();
    let inst = Instance::new(g, vec![AgentSpec { id: 0, start: 0, goal: 3, delay_prob: 0.5 }]).unwrap();
    let plan = Plan::new(vec![Path::new(vec![0, 1, 2, 3])]);
    let moves = compute_labels(&plan, &[0.5]).labels(0).to_vec();
    let waited = compute_labels(&Plan::new(vec![Path::new(vec![0, 1, 1, 2, 3])]), &[0.5]).labels(0).to_vec();
    let stats = monte_carlo(&inst, &plan, Policy::Mcp, 10_000, 11, ExecConfig::default()).unwrap();
    let pass = moves == [0.0, 2.0, 4.0, 6.0]
        && waited == [0.0, 2.0, 3.0, 5.0, 7.0]
        && (stats.mean_makespan - 6.0).abs() <= 0.15;
    outcome(
        pass,
        format!("labels {moves:?}, with a wait {waited:?}, simulated mean {:.3} over 10000 runs", stats.mean_makespan),
    )
}

fn approximation(desk: &[Desk]) -> Outcome {
    let ratios: Vec<f64> = desk.iter().map(|d| d.approx / d.mcp.mean_makespan).collect();
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().copied().fold(0.0, f64::max);
    let med = median(&ratios);
    let pass = ratios.len() >= 10 && lo >= 0.70 && hi <= 1.05 && (0.85..=1.00).contains(&med);
    outcome(pass, format!("{} instances, approx/simulated ratio in [{lo:.3}, {hi:.3}], median {med:.3}", ratios.len()))
}

fn policy_dominance(desk: &[Desk]) -> Outcome {
    let mut message_fail = 0;
    let mut separated = 0;
    let mut dummy_fail = 0;
    for d in desk {
        let m = d.plan.num_agents();
        let fsp_closed = ((m - 1) * d.plan.sum_last_index()) as f64;
        message_fail += usize::from(!(d.mcp.messages < d.fsp.messages && d.fsp.messages == fsp_closed));
        separated += usize::from(d.mcp.mean_makespan + d.mcp.ci95 < d.fsp.mean_makespan - d.fsp.ci95);
        dummy_fail += usize::from(d.dummy.mean_makespan > d.mcp.mean_makespan + d.mcp.ci95 + d.dummy.ci95);
    }
    let share = separated as f64 / desk.len() as f64;
    let pass = message_fail == 0 && share >= 0.8 && dummy_fail == 0;
    outcome(
        pass,
        format!(
            "message violations {message_fail}, mcp faster than fsp with disjoint CIs on {separated}/{}, dummy above mcp + slack on {dummy_fail}",
            desk.len()
        ),
    )
}

fn cbs_optimality() -> Outcome {
    let limits = SearchLimits { time: None, ..SearchLimits::default() };
    let (mut matched, mut mismatched, mut capped) = (0, 0, 0);
    let mut seed = 0u64;
    while matched + mismatched < 40 && seed < 10_000 {
        let inst = tiny_instance(seed, 8, 3);
        seed += 1;
        let Ok(opt) = brute_force_optimal_makespan(&inst, 40) else { continue };
        let r = solve(&inst, Solver::AdaptedCbs, &limits, AmeOptions::default());
        match r.plan {
            Some(plan) if plan.max_last_index() == opt => matched += 1,
            Some(_) => mismatched += 1,
            None => capped += 1,
        }
    }
    let detail = format!(
        "{matched} feasible tiny instances match brute force, {mismatched} differ, {capped} hit the expansion cap"
    );
    outcome(matched >= 25 && mismatched == 0, detail)
}

fn trends() -> Outcome {
    let exp2 = run_bench(&BenchConfig::preset(Experiment::Exp2)).unwrap();
    let makespans: Vec<(f64, f64)> = exp2.rows.iter().filter_map(|r| Some((r.t_max, r.mean_makespan?))).collect();
    let increasing = makespans.len() == 3 && makespans.windows(2).all(|w| w[1].1 > w[0].1);

    let exp3_config = BenchConfig {
        instances: 5,
        n_runs: 20,
        high_level_expansions: 5_000,
        time_limit_secs: 600.0,
        ..BenchConfig::preset(Experiment::Exp3)
    };
    let exp3 = run_bench(&exp3_config).unwrap();
    let rates: Vec<(usize, f64)> = exp3.success.iter().map(|s| (s.agents, s.rate())).collect();
    let nonincreasing = rates.windows(2).all(|w| w[1].1 <= w[0].1);
    let mut detail = format!("exp2 mean makespan by t_max {makespans:?}; exp3 success rate by agents {rates:?}");
    if !increasing {
        detail.push_str(" (warning: exp2 sweep not strictly increasing)");
    }
    outcome(nonincreasing, detail)
}

fn determinism() -> Outcome {
    let mut same = true;
    for seed in 0..3u64 {
        let inst = grid_instance(seed, 10, 10, 5);
        for solver in Solver::ALL {
            let json = || {
                let r = solve(&inst, solver, &SearchLimits::default(), AmeOptions::default());
                r.plan.map(|p| PlanFile::new(&inst, solver.name(), &p).with_dependencies().unwrap().to_json().unwrap())
            };
            same &= json() == json();
        }
    }
    let config = BenchConfig {
        instances: 3,
        width: 10,
        height: 10,
        agent_counts: vec![5],
        n_runs: 50,
        ..BenchConfig::preset(Experiment::Exp4)
    };
    let csv = || run_bench(&config).unwrap().to_csv();
    let csv_same = csv() == csv();
    outcome(same && csv_same, format!("plan files identical: {same}, bench CSV identical: {csv_same}"))
}

fn main() -> ExitCode {
    let start = Instant::now();
    let (desk, attempted) = desk_set();
    println!(
        "desk set: {} AME-solved random instances out of {attempted} generated ({:.1}s)",
        desk.len(),
        start.elapsed().as_secs_f64()
    );

    let criteria: [(&str, Check<'_>); 9] = [
        ("robustness", Box::new(|| robustness(&desk))),
        ("validity", Box::new(|| validity(&desk))),
        ("reduction oracle", Box::new(reduction_oracle)),
        ("labels and closed form", Box::new(labels_closed_form)),
        ("approximation quality", Box::new(|| approximation(&desk))),
        ("policy dominance", Box::new(|| policy_dominance(&desk))),
        ("baseline optimality", Box::new(cbs_optimality)),
        ("trends", Box::new(trends)),
        ("determinism", Box::new(determinism)),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = check();
        failed += usize::from(!o.pass);
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {} {verdict} {name}: {} ({:.1}s)", k + 1, o.detail, t.elapsed().as_secs_f64());
    }
    println!("acceptance: {}/9 passed in {:.1}s", 9 - failed, start.elapsed().as_secs_f64());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
