//! Descriptive statistics over generated datasets.
//!
//! Every report here is computed from the CSV/sidecar files alone, not
//! from in-memory generation state, so reports double as an independent
//! cross-check of the generator's own counters.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as FmtWrite;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::export::{parse_row, read_sidecar_json, ExportError, CSV_HEADER};

#[derive(Debug, Error)]
pub enum AnalyzeError {
    #[error(transparent)]
    Export(#[from] ExportError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("integrity: {0}")]
    Integrity(String),
    #[error("dataset spans zero time")]
    ZeroSpan,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Summary {
    pub rows: u64,
    pub unique_accounts: u64,
    pub unique_banks: u64,
    pub first_timestamp: String,
    pub last_timestamp: String,
    pub laundering_rows: u64,
    /// Rows per laundering row; absent when nothing is labeled.
    pub rows_per_laundering: Option<f64>,
    /// 1-based line numbers of rows that failed to parse (skipped).
    pub malformed_lines: Vec<u64>,
}

/// Single pass over the CSV computing the headline numbers.
pub fn summarize(csv: &Path) -> Result<Summary, AnalyzeError> {
    let reader = BufReader::new(File::open(csv)?);
    let mut rows = 0u64;
    let mut laundering = 0u64;
    let mut accounts: BTreeSet<String> = BTreeSet::new();
    let mut banks: BTreeSet<u64> = BTreeSet::new();
    let mut first = String::new();
    let mut last = String::new();
    let mut malformed = Vec::new();
    for (line_no, line) in reader.lines().enumerate() {
        let line = line?;
        if line_no == 0 {
            continue;
        }
        let row = match parse_row(&line, line_no as u64 + 1) {
            Ok(r) => r,
            Err(_) => {
                malformed.push(line_no as u64 + 1);
                continue;
            }
        };
        rows += 1;
        if row.is_laundering {
            laundering += 1;
        }
        banks.insert(row.from_bank);
        banks.insert(row.to_bank);
        accounts.insert(row.from_account);
        accounts.insert(row.to_account);
        if first.is_empty() {
            first = row.timestamp.clone();
        }
        last = row.timestamp;
    }
    Ok(Summary {
        rows,
        unique_accounts: accounts.len() as u64,
        unique_banks: banks.len() as u64,
        first_timestamp: first,
        last_timestamp: last,
        laundering_rows: laundering,
        rows_per_laundering: (laundering > 0).then(|| rows as f64 / laundering as f64),
        malformed_lines: malformed,
    })
}

pub fn summary_text(s: &Summary) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "rows: {}", s.rows);
    let _ = writeln!(out, "unique accounts: {}", s.unique_accounts);
    let _ = writeln!(out, "unique banks: {}", s.unique_banks);
    let _ = writeln!(out, "date range: {} .. {}", s.first_timestamp, s.last_timestamp);
    let _ = writeln!(out, "laundering rows: {}", s.laundering_rows);
    match s.rows_per_laundering {
        Some(r) => {
            let _ = writeln!(out, "laundering rate: 1 in {r:.1}");
        }
        None => {
            let _ = writeln!(out, "laundering rate: none");
        }
    }
    if !s.malformed_lines.is_empty() {
        let _ = writeln!(out, "malformed lines skipped: {:?}", s.malformed_lines);
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RateBreakdown {
    pub total_rows: u64,
    pub laundering_rows: u64,
    pub pattern_rows: u64,
    pub other_rows: u64,
    pub rows_per_laundering: Option<f64>,
    pub rows_per_pattern: Option<f64>,
    pub rows_per_other: Option<f64>,
}

/// Partition laundering rows into pattern members (sidecar-referenced)
/// and the rest. The sidecar must only reference labeled rows; anything
/// else is a ground-truth integrity failure.
pub fn rate_breakdown(csv: &Path, sidecar_json: &Path) -> Result<RateBreakdown, AnalyzeError> {
    let reader = BufReader::new(File::open(csv)?);
    let mut flags: Vec<bool> = Vec::new();
    for (line_no, line) in reader.lines().enumerate() {
        let line = line?;
        if line_no == 0 {
            continue;
        }
        let row = parse_row(&line, line_no as u64 + 1)?;
        flags.push(row.is_laundering);
    }
    let entries = read_sidecar_json(sidecar_json)?;
    let mut pattern_refs: BTreeSet<u64> = BTreeSet::new();
    for e in &entries {
        for &r in &e.rows {
            let Some(&lab) = flags.get(r as usize) else {
                return Err(AnalyzeError::Integrity(format!(
                    "instance {} references row {r} beyond the dataset ({} rows)",
                    e.pattern_id,
                    flags.len()
                )));
            };
            if !lab {
                return Err(AnalyzeError::Integrity(format!(
                    "instance {} references row {r}, which is not labeled as laundering",
                    e.pattern_id
                )));
            }
            pattern_refs.insert(r);
        }
    }
    let total_rows = flags.len() as u64;
    let laundering_rows = flags.iter().filter(|&&f| f).count() as u64;
    let pattern_rows = pattern_refs.len() as u64;
    let other_rows = laundering_rows - pattern_rows;
    let ratio = |part: u64| (part > 0).then(|| total_rows as f64 / part as f64);
    Ok(RateBreakdown {
        total_rows,
        laundering_rows,
        pattern_rows,
        other_rows,
        rows_per_laundering: ratio(laundering_rows),
        rows_per_pattern: ratio(pattern_rows),
        rows_per_other: ratio(other_rows),
    })
}

pub fn rate_breakdown_text(r: &RateBreakdown) -> String {
    let fmt = |label: &str, count: u64, ratio: Option<f64>| match ratio {
        Some(v) => format!("{label}: {count} (1 in {v:.0})\n"),
        None => format!("{label}: {count}\n"),
    };
    let mut out = String::new();
    let _ = writeln!(out, "total rows: {}", r.total_rows);
    out.push_str(&fmt("laundering", r.laundering_rows, r.rows_per_laundering));
    out.push_str(&fmt("  in patterns", r.pattern_rows, r.rows_per_pattern));
    out.push_str(&fmt("  other", r.other_rows, r.rows_per_other));
    out
}

/// Node-count histogram bins; the last bin is open-ended and must stay
/// empty for well-formed data.
pub const NODE_BINS: [(u32, u32); 6] = [
    (1, 2),
    (2, 4),
    (4, 8),
    (8, 12),
    (12, 18),
    (18, u32::MAX),
];

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PatternReport {
    /// kind -> (instances, member transactions).
    pub per_kind: BTreeMap<String, (u64, u64)>,
    /// Bin label -> instance count, binned by account count.
    pub node_histogram: Vec<(String, u64)>,
    pub partial_instances: u64,
}

pub fn pattern_report(sidecar_json: &Path) -> Result<PatternReport, AnalyzeError> {
    let entries = read_sidecar_json(sidecar_json)?;
    let mut per_kind: BTreeMap<String, (u64, u64)> = BTreeMap::new();
    let mut bins = vec![0u64; NODE_BINS.len()];
    let mut partial = 0u64;
    for e in &entries {
        let slot = per_kind.entry(e.kind.clone()).or_insert((0, 0));
        slot.0 += 1;
        slot.1 += e.rows.len() as u64;
        let nodes = e.accounts.len() as u32;
        let idx = NODE_BINS
            .iter()
            .position(|&(lo, hi)| nodes >= lo && nodes < hi)
            .unwrap_or(NODE_BINS.len() - 1);
        bins[idx] += 1;
        if e.partial {
            partial += 1;
        }
    }
    let node_histogram = NODE_BINS
        .iter()
        .zip(bins)
        .map(|(&(lo, hi), count)| {
            let label = if hi == u32::MAX {
                format!("[{lo},inf)")
            } else {
                format!("[{lo},{hi})")
            };
            (label, count)
        })
        .collect();
    Ok(PatternReport {
        per_kind,
        node_histogram,
        partial_instances: partial,
    })
}

pub fn pattern_report_text(r: &PatternReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<16} {:>10} {:>14}", "kind", "instances", "transactions");
    for (kind, (n, tx)) in &r.per_kind {
        let _ = writeln!(out, "{kind:<16} {n:>10} {tx:>14}");
    }
    let _ = writeln!(out, "partial instances: {}", r.partial_instances);
    let _ = writeln!(out, "node histogram:");
    for (label, count) in &r.node_histogram {
        let _ = writeln!(out, "  {label:<10} {count}");
    }
    out
}

/// Annualized per-account transaction-rate bin edges.
pub const RATE_BINS: [(u32, u32); 5] = [(0, 16), (16, 32), (32, 64), (64, 128), (128, u32::MAX)];

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ActivityReport {
    pub span_days: f64,
    /// Bin label -> number of accounts whose annualized rate falls in it.
    pub rate_histogram: Vec<(String, u64)>,
    /// Mean annualized transactions per active account.
    pub mean_annual_rate: f64,
    /// Payment format -> fraction of rows.
    pub format_fractions: BTreeMap<String, f64>,
    pub format_counts: BTreeMap<String, u64>,
}

/// Per-account annualized activity plus the payment-format mix. An
/// account participates in a row on either side; self-loops count once.
pub fn activity_histograms(csv: &Path) -> Result<ActivityReport, AnalyzeError> {
    let reader = BufReader::new(File::open(csv)?);
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    let mut formats: BTreeMap<String, u64> = BTreeMap::new();
    let mut first = String::new();
    let mut last = String::new();
    let mut rows = 0u64;
    for (line_no, line) in reader.lines().enumerate() {
        let line = line?;
        if line_no == 0 {
            continue;
        }
        let row = parse_row(&line, line_no as u64 + 1)?;
        rows += 1;
        *counts.entry(row.from_account.clone()).or_insert(0) += 1;
        if row.to_account != row.from_account {
            *counts.entry(row.to_account).or_insert(0) += 1;
        }
        *formats.entry(row.format).or_insert(0) += 1;
        if first.is_empty() {
            first = row.timestamp.clone();
        }
        last = row.timestamp;
    }
    let parse_ts = |s: &str| NaiveDateTime::parse_from_str(s, "%Y/%m/%d %H:%M");
    let span_days = match (parse_ts(&first), parse_ts(&last)) {
        (Ok(a), Ok(b)) => (b - a).num_minutes() as f64 / 1440.0,
        _ => 0.0,
    };
    if span_days <= 0.0 {
        return Err(AnalyzeError::ZeroSpan);
    }
    let mut bins = vec![0u64; RATE_BINS.len()];
    let mut participation = 0u64;
    for &n in counts.values() {
        participation += n;
        let rate = n as f64 * 365.25 / span_days;
        let idx = RATE_BINS
            .iter()
            .position(|&(lo, hi)| {
                rate >= f64::from(lo) && (hi == u32::MAX || rate < f64::from(hi))
            })
            .unwrap_or(RATE_BINS.len() - 1);
        bins[idx] += 1;
    }
    let rate_histogram = RATE_BINS
        .iter()
        .zip(bins)
        .map(|(&(lo, hi), count)| {
            let label = if hi == u32::MAX {
                format!("[{lo},inf)")
            } else {
                format!("[{lo},{hi})")
            };
            (label, count)
        })
        .collect();
    let format_fractions = formats
        .iter()
        .map(|(k, &v)| (k.clone(), v as f64 / rows.max(1) as f64))
        .collect();
    let mean_annual_rate = if counts.is_empty() {
        0.0
    } else {
        participation as f64 * 365.25 / span_days / counts.len() as f64
    };
    Ok(ActivityReport {
        span_days,
        rate_histogram,
        mean_annual_rate,
        format_fractions,
        format_counts: formats,
    })
}

pub fn activity_text(r: &ActivityReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "span: {:.1} days", r.span_days);
    let _ = writeln!(out, "mean annualized tx/account: {:.1}", r.mean_annual_rate);
    let _ = writeln!(out, "annualized transactions per account:");
    for (label, count) in &r.rate_histogram {
        let _ = writeln!(out, "  {label:<10} {count}");
    }
    let _ = writeln!(out, "payment formats:");
    for (fmt, frac) in &r.format_fractions {
        let _ = writeln!(out, "  {fmt:<14} {frac:.4}");
    }
    out
}

/// Upper-tail p-value of a Pearson chi-square test of `observed` against
/// `expected` counts. Zero-expectation categories must have zero
/// observations (else p = 0).
pub fn chi_square_p(observed: &[u64], expected: &[f64]) -> f64 {
    assert_eq!(observed.len(), expected.len(), "category count mismatch");
    let mut statistic = 0.0;
    let mut dof = 0usize;
    for (&o, &e) in observed.iter().zip(expected) {
        if e <= 0.0 {
            if o > 0 {
                return 0.0;
            }
            continue;
        }
        let d = o as f64 - e;
        statistic += d * d / e;
        dof += 1;
    }
    if dof < 2 {
        return 1.0;
    }
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    let dist = ChiSquared::new((dof - 1) as f64).expect("positive dof");
    1.0 - dist.cdf(statistic)
}

/// The header line written by the exporter; exposed so callers can
/// sanity-check foreign files before analysis.
pub fn has_expected_header(path: &Path) -> Result<bool, AnalyzeError> {
    let mut reader = BufReader::new(File::open(path)?);
    let mut first = String::new();
    reader.read_line(&mut first)?;
    Ok(first.trim_end() == CSV_HEADER)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetValidation {
    pub instances: usize,
    pub rows_checked: u64,
    /// Human-readable violations; empty means the dataset is clean.
    pub violations: Vec<String>,
}

/// Cross-check a dataset against its ground-truth sidecar from the files
/// alone: every member row must exist, be labeled, stay inside the
/// declared account set, and respect the declared pattern's shape.
pub fn validate_dataset(csv: &Path, sidecar_json: &Path) -> Result<DatasetValidation, AnalyzeError> {
    let sidecar = read_sidecar_json(sidecar_json)?;
    let wanted: BTreeSet<u64> = sidecar.iter().flat_map(|i| i.rows.iter().copied()).collect();

    let reader = BufReader::new(File::open(csv)?);
    let mut total = 0u64;
    let mut member_rows: BTreeMap<u64, crate::export::CsvRow> = BTreeMap::new();
    for (line_no, line) in reader.lines().enumerate() {
        let line = line?;
        if line_no == 0 {
            if line.trim_end() != CSV_HEADER {
                return Err(AnalyzeError::Integrity("unexpected CSV header".into()));
            }
            continue;
        }
        let idx = line_no as u64 - 1;
        if wanted.contains(&idx) {
            member_rows.insert(idx, parse_row(&line, line_no as u64 + 1)?);
        }
        total += 1;
    }

    let mut violations = Vec::new();
    let mut owner: BTreeMap<u64, u32> = BTreeMap::new();
    for inst in &sidecar {
        for &r in &inst.rows {
            if let Some(prev) = owner.insert(r, inst.pattern_id) {
                violations.push(format!(
                    "row {r} claimed by both pattern {prev} and pattern {}",
                    inst.pattern_id
                ));
            }
        }
    }
    for inst in &sidecar {
        check_instance(inst, &member_rows, total, &mut violations);
    }

    Ok(DatasetValidation {
        instances: sidecar.len(),
        rows_checked: wanted.len() as u64,
        violations,
    })
}

fn check_instance(
    inst: &crate::export::SidecarInstance,
    member_rows: &BTreeMap<u64, crate::export::CsvRow>,
    total_rows: u64,
    violations: &mut Vec<String>,
) {
    let id = inst.pattern_id;
    let mut push = |msg: String| violations.push(format!("pattern {id}: {msg}"));

    if inst.rows.is_empty() {
        push("no member rows".into());
        return;
    }
    if inst.accounts.len() != inst.roles.len() {
        push(format!(
            "{} accounts but {} roles",
            inst.accounts.len(),
            inst.roles.len()
        ));
        return;
    }
    if inst.rows.windows(2).any(|w| w[0] >= w[1]) {
        push("member row indices not strictly increasing".into());
    }

    let role: BTreeMap<&str, &str> = inst
        .accounts
        .iter()
        .zip(&inst.roles)
        .map(|(a, r)| (a.as_str(), r.as_str()))
        .collect();
    let with_role = |want: &str| -> Vec<&str> {
        role.iter()
            .filter(|(_, r)| **r == want)
            .map(|(a, _)| *a)
            .collect()
    };

    let mut rows = Vec::with_capacity(inst.rows.len());
    for &r in &inst.rows {
        if r >= total_rows {
            push(format!("row {r} out of range (file has {total_rows})"));
            return;
        }
        let row = &member_rows[&r];
        if !row.is_laundering {
            push(format!("row {r} not labeled as laundering"));
        }
        if row.from_account == row.to_account {
            push(format!("row {r} is a self-transfer"));
        }
        for acct in [&row.from_account, &row.to_account] {
            if !role.contains_key(acct.as_str()) {
                push(format!("row {r} touches undeclared account {acct}"));
            }
        }
        rows.push(row);
    }

    let mut nodes: BTreeSet<&str> = BTreeSet::new();
    for row in &rows {
        nodes.insert(row.from_account.as_str());
        nodes.insert(row.to_account.as_str());
    }
    if nodes.len() >= 18 {
        push(format!("instance touches {} accounts (max 17)", nodes.len()));
    }
    if rows
        .iter()
        .any(|row| !role.contains_key(row.from_account.as_str()) || !role.contains_key(row.to_account.as_str()))
    {
        return; // shape checks below assume declared membership
    }

    let kind = match crate::model::PatternKind::parse(&inst.kind) {
        Some(k) => k,
        None => {
            push(format!("unknown pattern kind {:?}", inst.kind));
            return;
        }
    };
    use crate::model::PatternKind as K;
    match kind {
        K::FanIn => {
            let sinks = with_role("sink");
            for row in &rows {
                if sinks != [row.to_account.as_str()] {
                    push(format!("fan-in row not into the single sink: {}", row.to_account));
                }
                if role[row.from_account.as_str()] != "source" {
                    push(format!("fan-in row from non-source {}", row.from_account));
                }
            }
        }
        K::FanOut => {
            let sources = with_role("source");
            for row in &rows {
                if sources != [row.from_account.as_str()] {
                    push(format!("fan-out row not from the single source: {}", row.from_account));
                }
                if role[row.to_account.as_str()] != "sink" {
                    push(format!("fan-out row into non-sink {}", row.to_account));
                }
            }
        }
        K::GatherScatter => {
            let hubs = with_role("middle");
            if hubs.len() != 1 {
                push(format!("gather-scatter needs exactly 1 hub, has {}", hubs.len()));
                return;
            }
            let hub = hubs[0];
            for row in &rows {
                let gather = row.to_account == hub && role[row.from_account.as_str()] == "source";
                let scatter = row.from_account == hub && role[row.to_account.as_str()] == "sink";
                if !gather && !scatter {
                    push(format!(
                        "gather-scatter row avoids the hub: {} -> {}",
                        row.from_account, row.to_account
                    ));
                }
            }
        }
        K::ScatterGather => {
            let sources = with_role("source");
            let sinks = with_role("sink");
            if sources.len() != 1 || sinks.len() != 1 {
                push("scatter-gather needs exactly 1 source and 1 sink".into());
                return;
            }
            for row in &rows {
                let scatter =
                    row.from_account == sources[0] && role[row.to_account.as_str()] == "middle";
                let gather =
                    row.to_account == sinks[0] && role[row.from_account.as_str()] == "middle";
                if !scatter && !gather {
                    push(format!(
                        "scatter-gather row outside both phases: {} -> {}",
                        row.from_account, row.to_account
                    ));
                }
            }
        }
        K::Cycle => {
            // Edges must follow the declared ring order, wrapping at the end.
            let pos: BTreeMap<&str, usize> = inst
                .accounts
                .iter()
                .enumerate()
                .map(|(i, a)| (a.as_str(), i))
                .collect();
            let n = inst.accounts.len();
            for row in &rows {
                let (f, t) = (
                    pos[row.from_account.as_str()],
                    pos[row.to_account.as_str()],
                );
                if t != (f + 1) % n {
                    push(format!(
                        "cycle row skips the ring order: {} -> {}",
                        row.from_account, row.to_account
                    ));
                }
            }
        }
        K::Random => {
            let sources = with_role("source");
            for row in &rows {
                if sources == [row.to_account.as_str()] {
                    push(format!("random-walk row returns to the origin {}", row.to_account));
                }
            }
        }
        K::Bipartite => {
            for row in &rows {
                if role[row.from_account.as_str()] != "source"
                    || role[row.to_account.as_str()] != "sink"
                {
                    push(format!(
                        "bipartite row crosses the partition: {} -> {}",
                        row.from_account, row.to_account
                    ));
                }
            }
        }
        K::Stack => {
            for row in &rows {
                let ok = matches!(
                    (role[row.from_account.as_str()], role[row.to_account.as_str()]),
                    ("source", "middle") | ("middle", "sink")
                );
                if !ok {
                    push(format!(
                        "stack row jumps layers: {} -> {}",
                        row.from_account, row.to_account
                    ));
                }
            }
        }
    }
}
