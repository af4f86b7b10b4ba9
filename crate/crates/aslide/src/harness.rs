//! Command implementations behind the thin `aslide` binary.
//!
//! Exit-code contract: 0 on success, 1 when a theorem or invariant check
//! fails, 2 on usage or I/O problems. The `ASLIDE_LOG` environment variable
//! (`info` or `debug`) turns on progress lines to stderr.

use std::fs;
use std::path::{Path, PathBuf};

use crate::adversary::{Adversary, CyclicAdversary, GreedyAdversary, RandomAdversary, ReplayAdversary};
use crate::config::{parse_run_config, AdversaryKind, Mode, NetworkConfig, ProtocolKind, RunConfig};
use crate::net::{run, run_plan, SimError};
use crate::oracle::{compute_plan, OracleSolver};
use crate::potential::classify::classify_deliveries;
use crate::potential::phi::{fresh_count_checks, phi_evolution};
use crate::potential::psi::check_cycle_inequality;
use crate::report::{competitive_compare, CheckRecord, ReportWriter};
use crate::schedule::Schedule;
use crate::trace::Trace;
use crate::verify::{
    family_property_sweep, invariant_scan, oracle_equivalence_sweep, slide_invariant_suite,
    slide_plus_invariant_suite,
};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, bad files, bad config: exit 2.
    Usage(String),
    /// A checked property failed: exit 1.
    CheckFailed(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::CheckFailed(m) => write!(f, "{m}"),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::CheckFailed(_) => 1,
        }
    }
}

fn usage<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Usage(e.to_string())
}

fn sim_error(e: SimError) -> CliError {
    match e {
        SimError::Fault { .. } => CliError::CheckFailed(e.to_string()),
        other => CliError::Usage(other.to_string()),
    }
}

pub fn verbosity() -> u8 {
    match std::env::var("ASLIDE_LOG").ok().as_deref() {
        Some("debug") | Some("2") => 2,
        Some("info") | Some("1") => 1,
        _ => 0,
    }
}

macro_rules! info {
    ($($arg:tt)*) => {
        if crate::harness::verbosity() >= 1 {
            eprintln!($($arg)*);
        }
    };
}

/// Common file-driven flags shared by the subcommands.
#[derive(Debug, Default, Clone)]
pub struct RunFlags {
    pub seed: Option<u64>,
    pub rounds: Option<u64>,
    pub replay: Option<PathBuf>,
    pub trace: Option<PathBuf>,
    pub emit_schedule: Option<PathBuf>,
}

fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    parse_run_config(&text).map_err(usage)
}

fn load_schedule(path: &Path, n: u32) -> Result<Schedule, CliError> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    Schedule::parse(&text, n).map_err(usage)
}

fn build_adversary(rc: &RunConfig, flags: &RunFlags) -> Result<Box<dyn Adversary>, CliError> {
    let seed = flags.seed.unwrap_or(rc.seed);
    Ok(match rc.adversary {
        AdversaryKind::Random => Box::new(RandomAdversary::new(rc.net.n, seed)),
        AdversaryKind::Cyclic => Box::new(CyclicAdversary::new(&rc.net)),
        AdversaryKind::Greedy => Box::new(GreedyAdversary::new(&rc.net)),
        AdversaryKind::Replay => {
            let path = flags
                .replay
                .as_ref()
                .ok_or_else(|| usage("adversary = replay needs --replay <file>"))?;
            Box::new(ReplayAdversary::new(load_schedule(path, rc.net.n)?))
        }
    })
}

fn write_trace(trace: &Trace, path: &Path) -> Result<(), CliError> {
    let mut f = fs::File::create(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    trace.write_to(&mut f).map_err(usage)?;
    Ok(())
}

fn emit_schedule(trace: &Trace, flags: &RunFlags) -> Result<(), CliError> {
    if let Some(path) = &flags.emit_schedule {
        fs::write(path, trace.schedule().to_text()).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        info!("schedule written to {}", path.display());
    }
    Ok(())
}

fn print_summary(trace: &Trace) {
    let last = trace.records.last().expect("at least one round");
    println!(
        "rounds={} inserted={} delivered={} transfers={}",
        trace.records.len(),
        last.y,
        last.z,
        last.t
    );
    let heights: Vec<u64> = last.heights[1..trace.meta.n as usize - 1].to_vec();
    println!("final-heights={heights:?}");
}

/// `run`: execute one experiment from a config file, write the trace, print
/// a summary.
pub fn cmd_run(config: &Path, flags: &RunFlags) -> Result<(), CliError> {
    let rc = load_config(config)?;
    let rounds = flags.rounds.unwrap_or(rc.rounds);
    let trace = if rc.net.protocol == ProtocolKind::OfflinePlan {
        // The plan needs the whole schedule up front, so only
        // schedule-determined adversaries can drive it.
        let schedule = match rc.adversary {
            AdversaryKind::Random => Schedule::random(rc.net.n, flags.seed.unwrap_or(rc.seed), rounds),
            AdversaryKind::Replay => {
                let path = flags
                    .replay
                    .as_ref()
                    .ok_or_else(|| usage("adversary = replay needs --replay <file>"))?;
                load_schedule(path, rc.net.n)?
            }
            other => {
                return Err(usage(format!(
                    "offline-plan runs need a schedule-determined adversary (random or replay), got {other}"
                )))
            }
        };
        let plan = compute_plan(&schedule, &rc.net, rounds).map_err(CliError::CheckFailed)?;
        run_plan(&rc.net, &schedule, &plan).map_err(sim_error)?
    } else {
        let mut adversary = build_adversary(&rc, flags)?;
        run(&rc.net, adversary.as_mut(), rounds).map_err(sim_error)?
    };
    if let Some(path) = &flags.trace {
        write_trace(&trace, path)?;
        info!("trace written to {}", path.display());
    }
    emit_schedule(&trace, flags)?;
    print_summary(&trace);
    Ok(())
}

/// `lowerbound`: slide against the cyclic adversary, with the oracle on the
/// realized schedule and every per-cycle check.
pub fn cmd_lowerbound(config: &Path, cycles: u64, flags: &RunFlags) -> Result<(), CliError> {
    let rc = load_config(config)?;
    let cfg = rc.net;
    if cfg.protocol != ProtocolKind::Slide {
        return Err(usage("lowerbound runs the slide protocol; set protocol = slide"));
    }
    if cycles == 0 {
        return Err(usage("--cycles must be positive"));
    }
    let cycle_rounds = (cfg.n as u64 - 1) * cfg.capacity;
    let rounds = cycles * cycle_rounds;
    let mut adversary = CyclicAdversary::new(&cfg);
    let trace = run(&cfg, &mut adversary, rounds).map_err(sim_error)?;
    if let Some(path) = &flags.trace {
        write_trace(&trace, path)?;
    }
    emit_schedule(&trace, flags)?;

    let stdout = std::io::stdout();
    let mut report = ReportWriter::new(stdout.lock(), "lowerbound").map_err(usage)?;
    let mut failed = 0u64;

    let cycle_checks = check_cycle_inequality(&trace).map_err(CliError::CheckFailed)?;
    for c in &cycle_checks {
        for (name, lhs, rhs, pass) in [
            ("cycle-inequality", format!("{}", c.lhs), format!("{}", c.rhs), c.pass),
            (
                "cumulative-deliveries",
                format!("{}", c.cumulative_delivered),
                format!("{}", c.cumulative_bound),
                c.cumulative_pass,
            ),
            ("cycle-potential-nonnegative", format!("{}", c.psi_end), "0".into(), !c.psi_end.is_negative()),
        ] {
            let rec = CheckRecord::new(name, format!("cycle={}", c.cycle), lhs, rhs, pass);
            report.record(&rec).map_err(usage)?;
            if !pass {
                failed += 1;
            }
        }
    }

    // The oracle delivers exactly C per cycle on this schedule.
    let schedule = trace.schedule();
    let mut solver = OracleSolver::new(&schedule, &cfg);
    for alpha in 1..=cycles {
        let value = solver.max_delivery_by(alpha * cycle_rounds);
        let pass = value == alpha * cfg.capacity;
        let rec = CheckRecord::new(
            "oracle-per-cycle",
            format!("cycle={alpha}"),
            format!("{value}"),
            format!("{}", alpha * cfg.capacity),
            pass,
        );
        report.record(&rec).map_err(usage)?;
        if !pass {
            failed += 1;
        }
    }

    if failed > 0 {
        return Err(CliError::CheckFailed(format!("{failed} lowerbound checks failed")));
    }
    Ok(())
}

/// `compare`: dual runs over seeded or replayed schedules, with the
/// competitive bound at every checkpoint.
pub fn cmd_compare(
    config: &Path,
    seeds: &[u64],
    replays: &[PathBuf],
    flags: &RunFlags,
) -> Result<(), CliError> {
    let rc = load_config(config)?;
    let cfg = rc.net;
    if cfg.protocol == ProtocolKind::OfflinePlan {
        return Err(usage("compare needs an online protocol (slide or slide-plus)"));
    }
    let rounds = flags.rounds.unwrap_or(rc.rounds);
    let mut schedules = Vec::new();
    for &seed in seeds {
        schedules.push((format!("seed={seed}"), Schedule::random(cfg.n, seed, rounds)));
    }
    for path in replays {
        schedules.push((path.display().to_string(), load_schedule(path, cfg.n)?));
    }
    if schedules.is_empty() {
        schedules.push((format!("seed={}", rc.seed), Schedule::random(cfg.n, rc.seed, rounds)));
    }

    let stdout = std::io::stdout();
    let mut report = ReportWriter::new(stdout.lock(), "compare").map_err(usage)?;
    let mut all_pass = true;
    for (label, schedule) in &schedules {
        info!("comparing on {label} ({} rounds)", schedule.rounds());
        let cmp = competitive_compare(&cfg, schedule).map_err(CliError::CheckFailed)?;
        for mut rec in cmp.records() {
            rec.scope = format!("{label} {}", rec.scope);
            report.record(&rec).map_err(usage)?;
        }
        all_pass &= cmp.pass;
    }
    if !all_pass {
        return Err(CliError::CheckFailed("competitive bound violated".into()));
    }
    Ok(())
}

/// `oracle`: maximum deliveries at every checkpoint of a schedule file.
pub fn cmd_oracle(config: &Path, flags: &RunFlags) -> Result<(), CliError> {
    let rc = load_config(config)?;
    let path = flags
        .replay
        .as_ref()
        .ok_or_else(|| usage("oracle reads a schedule file: pass --replay <file>"))?;
    let schedule = load_schedule(path, rc.net.n)?;
    let horizon = flags.rounds.unwrap_or(schedule.rounds()).min(schedule.rounds());
    if horizon == 0 {
        return Err(usage("empty schedule"));
    }
    let mut solver = OracleSolver::new(&schedule, &rc.net);
    let mut x = rc.net.capacity.min(horizon);
    loop {
        println!("{x} {}", solver.max_delivery_by(x));
        if x == horizon {
            break;
        }
        x = (x + rc.net.capacity).min(horizon);
    }
    Ok(())
}

/// `verify`: the named property suite, one record per check.
pub fn cmd_verify(suite: &str, flags: &RunFlags) -> Result<(), CliError> {
    let seed = flags.seed.unwrap_or(1);
    let stdout = std::io::stdout();
    let mut report = ReportWriter::new(stdout.lock(), &format!("verify-{suite}")).map_err(usage)?;
    let mut emit = |rec: CheckRecord| -> Result<bool, CliError> {
        report.record(&rec).map_err(usage)?;
        Ok(rec.pass)
    };
    let ok = match suite {
        "family-lemmas" => {
            let res = family_property_sweep(seed, 10_000);
            let (lhs, pass) = match &res {
                Ok(s) => (format!("{} samples, {} exhaustive", s.samples, s.exhaustively_checked), true),
                Err(e) => (e.clone(), false),
            };
            emit(CheckRecord::new("family-lemmas", format!("seed={seed}"), lhs, "all lemmas".into(), pass))?
        }
        "slide-invariants" => {
            if let Some(path) = &flags.trace {
                let text = fs::read(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
                let trace = Trace::read_from(&mut &text[..]).map_err(usage)?;
                let res = invariant_scan(&trace);
                let (lhs, pass) = match &res {
                    Ok(s) => (format!("{} rounds clean", s.rounds), true),
                    Err(v) => (v.to_string(), false),
                };
                emit(CheckRecord::new("slide-invariants", path.display().to_string(), lhs, "clean scan".into(), pass))?
            } else {
                let rounds = flags.rounds.unwrap_or(20_000);
                let res = slide_invariant_suite(8, 64, seed, rounds);
                let (lhs, pass) = match &res {
                    Ok(s) => (format!("{} rounds, min drop {:?}", s.rounds, s.min_drop), true),
                    Err(e) => (e.clone(), false),
                };
                emit(CheckRecord::new("slide-invariants", format!("seed={seed}"), lhs, "clean scan".into(), pass))?
            }
        }
        "slide-plus-invariants" => {
            let rounds = flags.rounds.unwrap_or(20_000);
            let res = slide_plus_invariant_suite(4, 128, seed, rounds);
            let (lhs, pass) = match &res {
                Ok(s) => (format!("{} rounds, min drop {:?}", s.rounds, s.min_drop), true),
                Err(e) => (e.clone(), false),
            };
            emit(CheckRecord::new("slide-plus-invariants", format!("seed={seed}"), lhs, "clean scan".into(), pass))?
        }
        "oracle-equivalence" => {
            let res = oracle_equivalence_sweep(8, 1000, 10, seed);
            let (lhs, pass) = match &res {
                Ok(s) => (format!("{} exhaustive + {} random cases", s.exhaustive_cases, s.random_cases), true),
                Err(e) => (e.clone(), false),
            };
            emit(CheckRecord::new("oracle-equivalence", format!("seed={seed}"), lhs, "flow == search".into(), pass))?
        }
        "potentials" => {
            let mut pass = true;
            // Short cyclic run: per-cycle inequality in exact arithmetic.
            let cfg = NetworkConfig::new(8, 64, Mode::SemiAsync, ProtocolKind::Slide);
            let mut adv = CyclicAdversary::new(&cfg);
            let trace = run(&cfg, &mut adv, 10 * 448).map_err(sim_error)?;
            let checks = check_cycle_inequality(&trace).map_err(CliError::CheckFailed)?;
            for c in &checks {
                pass &= emit(CheckRecord::new(
                    "cycle-inequality",
                    format!("cycle={}", c.cycle),
                    format!("{}", c.lhs),
                    format!("{}", c.rhs),
                    c.pass,
                ))?;
            }
            // Short dual runs: ledger bound and fresh-count bound.
            for s in 0..3u64 {
                let schedule = Schedule::random(8, seed + s, 2000);
                let plan = compute_plan(&schedule, &cfg, 2000).map_err(CliError::CheckFailed)?;
                let dual = crate::dual::dual_run(&cfg, &schedule, &plan).map_err(sim_error)?;
                let classification = classify_deliveries(&dual).map_err(CliError::CheckFailed)?;
                let ledger = phi_evolution(&dual, &classification).map_err(CliError::CheckFailed)?;
                pass &= emit(CheckRecord::new(
                    "ledger-lower-bound",
                    format!("seed={}", seed + s),
                    format!("{} violations over {} rounds", ledger.violations, dual.rounds_total()),
                    "0 violations".into(),
                    ledger.all_pass(),
                ))?;
                for (x, z2, bound, ok) in fresh_count_checks(&dual, &classification, cfg.capacity) {
                    pass &= emit(CheckRecord::new(
                        "fresh-count-bound",
                        format!("seed={} x={x}", seed + s),
                        format!("{z2}"),
                        format!("{bound}"),
                        ok,
                    ))?;
                }
            }
            pass
        }
        other => {
            return Err(usage(format!(
                "unknown suite `{other}`; expected family-lemmas, slide-invariants, slide-plus-invariants, oracle-equivalence, or potentials"
            )))
        }
    };
    if !ok {
        return Err(CliError::CheckFailed(format!("suite {suite} failed")));
    }
    Ok(())
}
