//! Versioned, line-delimited check reports and the competitive comparison.
//!
//! Report files and stdout reports share one shape: a header line naming the
//! report and version, then one JSON record per checked inequality. A
//! crashed run leaves a valid prefix.

use std::io::Write;

use serde::Serialize;

use crate::config::{Mode, NetworkConfig, ProtocolKind};
use crate::dual::dual_run;
use crate::oracle::OracleSolver;
use crate::potential::classify::classify_deliveries;
use crate::schedule::Schedule;

pub const REPORT_VERSION: u32 = 1;

/// One checked inequality.
#[derive(Debug, Clone, Serialize)]
pub struct CheckRecord {
    pub check: String,
    pub scope: String,
    pub lhs: String,
    pub rhs: String,
    pub pass: bool,
}

impl CheckRecord {
    pub fn new(check: &str, scope: String, lhs: String, rhs: String, pass: bool) -> CheckRecord {
        CheckRecord { check: check.into(), scope, lhs, rhs, pass }
    }
}

/// Streams a named report: header first, then one record per line.
pub struct ReportWriter<W: Write> {
    out: W,
}

impl<W: Write> ReportWriter<W> {
    pub fn new(mut out: W, name: &str) -> std::io::Result<ReportWriter<W>> {
        writeln!(out, "{}", serde_json::json!({ "report": name, "version": REPORT_VERSION }))?;
        Ok(ReportWriter { out })
    }

    pub fn record(&mut self, rec: &CheckRecord) -> std::io::Result<()> {
        writeln!(self.out, "{}", serde_json::to_string(rec).expect("record serializes"))
    }
}

/// Per-checkpoint row of a dual-run comparison.
#[derive(Debug, Clone, Serialize)]
pub struct CheckpointRow {
    pub x: u64,
    /// Online deliveries by x.
    pub online: u64,
    /// Executed-plan deliveries by x.
    pub offline: u64,
    /// Per-checkpoint optimum (a fresh perfect-information protocol per x).
    pub oracle: u64,
    /// offline / online, for display only.
    pub ratio: f64,
    pub k: u64,
    /// The additive allowance g(n, C) = k * n^2 * C.
    pub g: u64,
    /// k * n * online + g.
    pub bound: u64,
    pub pass: bool,
    pub z1: u64,
    pub z2: u64,
    pub z3: u64,
    pub components_pass: bool,
}

/// A full competitive comparison of one schedule.
#[derive(Debug, Clone)]
pub struct CompetitiveReport {
    pub cfg: NetworkConfig,
    pub rounds: u64,
    pub rows: Vec<CheckpointRow>,
    pub online_total: u64,
    pub offline_total: u64,
    pub pass: bool,
}

impl CompetitiveReport {
    pub fn records(&self) -> Vec<CheckRecord> {
        self.rows
            .iter()
            .map(|r| {
                CheckRecord::new(
                    "competitive-bound",
                    format!("x={}", r.x),
                    format!("oracle={} offline={} z=({},{},{})", r.oracle, r.offline, r.z1, r.z2, r.z3),
                    format!("{}*online+{}={}", r.k * self.cfg.n as u64, r.g, r.bound),
                    r.pass && r.components_pass,
                )
            })
            .collect()
    }
}

/// Dual-runs the configured protocol and the offline plan on `schedule`,
/// then checks the competitive bound at every checkpoint (every C rounds and
/// at the horizon).
///
/// The multiplicative constant is k = 8 for the fully asynchronous protocol
/// and k = 4 for the semi-asynchronous one, with allowance g = k n^2 C. The
/// bound is checked against both the executed plan and the per-checkpoint
/// optimum. Component checks: co-moved and fresh deliveries each within
/// 2n*online + 2n^2 C, stale within 4n*online + 4n^2 C (and absent entirely
/// in the semi-asynchronous model).
pub fn competitive_compare(cfg: &NetworkConfig, schedule: &Schedule) -> Result<CompetitiveReport, String> {
    let rounds = schedule.rounds();
    if rounds == 0 {
        return Err("empty schedule".into());
    }
    // One solver serves every checkpoint and then yields the horizon plan.
    let mut solver = OracleSolver::new(schedule, cfg);
    let mut oracle_at = Vec::new();
    let mut x = cfg.capacity.min(rounds);
    loop {
        oracle_at.push((x, solver.max_delivery_by(x)));
        if x == rounds {
            break;
        }
        x = (x + cfg.capacity).min(rounds);
    }
    let plan = solver.into_plan()?;
    let dual = dual_run(cfg, schedule, &plan).map_err(|e| e.to_string())?;
    let classification = classify_deliveries(&dual)?;

    let n = cfg.n as u64;
    let k = match cfg.protocol {
        ProtocolKind::SlidePlus => 8,
        _ => 4,
    };
    let g = k * n * n * cfg.capacity;
    let comp_g = 2 * n * n * cfg.capacity;

    let online_series = dual.online_delivered_series();
    let offline_series = dual.plan_delivered_series();

    let mut rows = Vec::new();
    let mut pass = true;
    for (x, oracle) in oracle_at {
        let online = online_series[x as usize - 1];
        let offline = offline_series[x as usize - 1];
        let bound = k * n * online + g;
        let (z1, z2, z3) = classification.sizes_by(x);
        let row_pass = oracle <= bound && offline <= bound;
        let components_pass = z1 <= 2 * n * online + comp_g
            && z2 <= 2 * n * online + comp_g
            && z3 <= 2 * (2 * n * online + comp_g)
            && (cfg.mode != Mode::SemiAsync || z3 == 0);
        pass &= row_pass && components_pass;
        rows.push(CheckpointRow {
            x,
            online,
            offline,
            oracle,
            ratio: if online == 0 { f64::INFINITY } else { offline as f64 / online as f64 },
            k,
            g,
            bound,
            pass: row_pass,
            z1,
            z2,
            z3,
            components_pass,
        });
    }
    let offline_total = plan.value;
    Ok(CompetitiveReport {
        cfg: *cfg,
        rounds,
        rows,
        online_total: dual.online_delivered,
        offline_total,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_header_then_records() {
        let mut buf = Vec::new();
        {
            let mut w = ReportWriter::new(&mut buf, "smoke").unwrap();
            w.record(&CheckRecord::new("c", "s".into(), "1".into(), "2".into(), true)).unwrap();
        }
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().contains("\"report\":\"smoke\""));
        assert!(lines.next().unwrap().contains("\"pass\":true"));
    }

    #[test]
    fn receiver_starved_schedule_holds_trivially() {
        // Nothing can reach the receiver, so both worlds deliver zero and
        // the additive allowance carries the bound.
        let cfg = NetworkConfig::new(4, 16, Mode::SemiAsync, ProtocolKind::Slide);
        let edges = (0..64).map(|i| if i % 2 == 0 { crate::schedule::Edge::new(0, 1) } else { crate::schedule::Edge::new(1, 2) }).collect();
        let report = competitive_compare(&cfg, &Schedule::new(4, edges)).unwrap();
        assert!(report.pass);
        for row in &report.rows {
            assert_eq!((row.online, row.offline, row.oracle), (0, 0, 0));
        }
    }

    #[test]
    fn compare_holds_on_a_small_dual_run() {
        let cfg = NetworkConfig::new(4, 16, Mode::SemiAsync, ProtocolKind::Slide);
        let schedule = Schedule::random(4, 77, 200);
        let report = competitive_compare(&cfg, &schedule).unwrap();
        assert!(report.pass);
        assert_eq!(report.rows.last().unwrap().x, 200);
        for row in &report.rows {
            assert_eq!(row.z3, 0);
            assert!(row.oracle >= row.offline);
        }
    }
}
