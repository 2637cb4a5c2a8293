//! Dataset CSV writer/parser, ground-truth sidecar, temporal split, and
//! per-bank filtering.
//!
//! The CSV layout is positional: two columns share the header name
//! `Account`, so consumers must address fields by index, not name.
//! Timestamps are lexicographically sortable (`YYYY/MM/DD HH:MM`), which
//! the split tool relies on when checking input order.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write as IoWrite};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::GeneratedWorld;
use crate::model::Minute;

pub const CSV_HEADER: &str = "Timestamp,From Bank,Account,To Bank,Account,Amount Received,Receiving Currency,Amount Paid,Payment Currency,Payment Format,Is Laundering";

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {reason}")]
    Malformed { line: u64, reason: String },
    #[error("line {line}: timestamps out of order")]
    Unordered { line: u64 },
    #[error("need at least 5 rows to split, got {0}")]
    TooFewRows(u64),
    #[error("split fractions must be positive and sum to 1")]
    BadFractions,
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// One parsed dataset row. Amounts stay textual; use the currency columns
/// to re-interpret them when numeric values are needed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvRow {
    pub timestamp: String,
    pub from_bank: u64,
    pub from_account: String,
    pub to_bank: u64,
    pub to_account: String,
    pub amount_received: String,
    pub receiving_currency: String,
    pub amount_paid: String,
    pub payment_currency: String,
    pub format: String,
    pub is_laundering: bool,
}

pub fn timestamp_string(start: NaiveDate, minute: Minute) -> String {
    let t = start
        .and_hms_opt(0, 0, 0)
        .expect("midnight exists")
        + chrono::Duration::minutes(i64::from(minute));
    t.format("%Y/%m/%d %H:%M").to_string()
}

/// Stream the world's transactions to CSV. Returns the row count.
pub fn write_csv<W: IoWrite>(world: &GeneratedWorld, out: W) -> io::Result<u64> {
    let mut w = BufWriter::new(out);
    writeln!(w, "{CSV_HEADER}")?;
    let start = world.config.sim_start;
    let accounts = &world.population.accounts;
    let cur = &world.currencies;
    let mut n = 0u64;
    for t in &world.transactions {
        let fa = &accounts[t.from_account as usize];
        let ta = &accounts[t.to_account as usize];
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{}",
            timestamp_string(start, t.minute),
            fa.bank,
            fa.display_id,
            ta.bank,
            ta.display_id,
            cur.format_minor(t.amount_received, t.receiving_currency),
            cur.name(t.receiving_currency),
            cur.format_minor(t.amount_paid, t.payment_currency),
            cur.name(t.payment_currency),
            t.format.as_str(),
            u8::from(t.is_laundering),
        )?;
        n += 1;
    }
    w.flush()?;
    Ok(n)
}

/// Parse one data line positionally. `line_no` is 1-based and includes
/// the header line, matching editor coordinates.
pub fn parse_row(line: &str, line_no: u64) -> Result<CsvRow, ExportError> {
    let mut f = line.split(',');
    let mut next = |what: &str| {
        f.next().ok_or_else(|| ExportError::Malformed {
            line: line_no,
            reason: format!("missing field {what}"),
        })
    };
    let timestamp = next("timestamp")?.to_string();
    let from_bank = next("from bank")?;
    let from_account = next("from account")?.to_string();
    let to_bank = next("to bank")?;
    let to_account = next("to account")?.to_string();
    let amount_received = next("amount received")?.to_string();
    let receiving_currency = next("receiving currency")?.to_string();
    let amount_paid = next("amount paid")?.to_string();
    let payment_currency = next("payment currency")?.to_string();
    let format = next("payment format")?.to_string();
    let laundering = next("is laundering")?;
    if f.next().is_some() {
        return Err(ExportError::Malformed {
            line: line_no,
            reason: "too many fields".into(),
        });
    }
    let parse_bank = |s: &str| -> Result<u64, ExportError> {
        s.parse().map_err(|_| ExportError::Malformed {
            line: line_no,
            reason: format!("bad bank id {s:?}"),
        })
    };
    let is_laundering = match laundering {
        "0" => false,
        "1" => true,
        other => {
            return Err(ExportError::Malformed {
                line: line_no,
                reason: format!("bad laundering flag {other:?}"),
            })
        }
    };
    Ok(CsvRow {
        timestamp,
        from_bank: parse_bank(from_bank)?,
        from_account,
        to_bank: parse_bank(to_bank)?,
        to_account,
        amount_received,
        receiving_currency,
        amount_paid,
        payment_currency,
        format,
        is_laundering,
    })
}

/// Render a parsed row back to its CSV line.
pub fn row_to_line(r: &CsvRow) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{}",
        r.timestamp,
        r.from_bank,
        r.from_account,
        r.to_bank,
        r.to_account,
        r.amount_received,
        r.receiving_currency,
        r.amount_paid,
        r.payment_currency,
        r.format,
        u8::from(r.is_laundering),
    )
}

/// Machine-readable sidecar entry for one laundering pattern instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SidecarInstance {
    pub pattern_id: u32,
    pub kind: String,
    pub partial: bool,
    pub reused_accounts: bool,
    /// Account display ids, source/middle/sink role per position.
    pub accounts: Vec<String>,
    pub roles: Vec<String>,
    /// CSV row indices (0-based over data rows) of member transactions.
    pub rows: Vec<u64>,
}

fn sidecar_entries(world: &GeneratedWorld) -> Vec<SidecarInstance> {
    world
        .instances
        .iter()
        .map(|rec| SidecarInstance {
            pattern_id: rec.pattern_id,
            kind: rec.kind.to_string(),
            partial: rec.partial,
            reused_accounts: rec.reused_accounts,
            accounts: rec
                .accounts
                .iter()
                .map(|&a| world.population.accounts[a as usize].display_id.clone())
                .collect(),
            roles: rec
                .planned
                .roles
                .iter()
                .map(|r| format!("{r:?}").to_lowercase())
                .collect(),
            rows: rec.row_refs.clone(),
        })
        .collect()
}

/// Write the human-diffable sidecar at `txt_path` and a JSON index next
/// to it (same stem, `.json`). Returns the instance count.
pub fn write_sidecar(world: &GeneratedWorld, txt_path: &Path) -> Result<usize, ExportError> {
    let entries = sidecar_entries(world);

    let mut w = BufWriter::new(File::create(txt_path)?);
    for e in &entries {
        let status = if e.partial { "partial" } else { "complete" };
        writeln!(w, "BEGIN INSTANCE {} {}", e.pattern_id, e.kind)?;
        writeln!(w, "status: {status}")?;
        writeln!(w, "reused_accounts: {}", u8::from(e.reused_accounts))?;
        let members: Vec<String> = e
            .accounts
            .iter()
            .zip(&e.roles)
            .map(|(a, r)| format!("{a}({r})"))
            .collect();
        writeln!(w, "accounts: {}", members.join(" "))?;
        let rows: Vec<String> = e.rows.iter().map(u64::to_string).collect();
        writeln!(w, "rows: {}", rows.join(" "))?;
        writeln!(w, "END INSTANCE {}", e.pattern_id)?;
    }
    w.flush()?;

    let json_path = txt_path.with_extension("json");
    let file = BufWriter::new(File::create(json_path)?);
    serde_json::to_writer_pretty(file, &entries)?;
    Ok(entries.len())
}

pub fn read_sidecar_json(path: &Path) -> Result<Vec<SidecarInstance>, ExportError> {
    let file = BufReader::new(File::open(path)?);
    Ok(serde_json::from_reader(file)?)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitBounds {
    /// Timestamp at the train/validation boundary row.
    pub t1: String,
    /// Timestamp at the validation/test boundary row.
    pub t2: String,
    pub train_range: (u64, u64),
    pub val_eval_range: (u64, u64),
    pub test_eval_range: (u64, u64),
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Cut a timestamp-ordered CSV into cumulative temporal snapshots:
/// train = rows [0, f1*n), validation = [0, (f1+f2)*n), test = all rows.
/// Later files repeat earlier rows; the eval ranges in the returned
/// bounds say which suffix each file is scored on.
pub fn temporal_split(
    in_csv: &Path,
    out_dir: &Path,
    fractions: (f64, f64, f64),
) -> Result<SplitBounds, ExportError> {
    let (f1, f2, f3) = fractions;
    if !(f1 > 0.0 && f2 > 0.0 && f3 > 0.0 && (f1 + f2 + f3 - 1.0).abs() < 1e-9) {
        return Err(ExportError::BadFractions);
    }

    let n = count_and_check_order(in_csv)?;
    if n < 5 {
        return Err(ExportError::TooFewRows(n));
    }
    let a = (n as f64 * f1).floor() as u64;
    let b = (n as f64 * (f1 + f2)).floor() as u64;

    std::fs::create_dir_all(out_dir)?;
    let mut train = BufWriter::new(File::create(out_dir.join("train.csv"))?);
    let mut val = BufWriter::new(File::create(out_dir.join("validation.csv"))?);
    let mut test = BufWriter::new(File::create(out_dir.join("test.csv"))?);
    writeln!(train, "{CSV_HEADER}")?;
    writeln!(val, "{CSV_HEADER}")?;
    writeln!(test, "{CSV_HEADER}")?;

    let mut t1 = String::new();
    let mut t2 = String::new();
    let reader = BufReader::new(File::open(in_csv)?);
    let mut idx = 0u64;
    for (line_no, line) in reader.lines().enumerate() {
        let line = line?;
        if line_no == 0 {
            continue;
        }
        if idx < a {
            writeln!(train, "{line}")?;
        }
        if idx < b {
            writeln!(val, "{line}")?;
        }
        writeln!(test, "{line}")?;
        // Boundary timestamps: last row of each cumulative prefix.
        if idx + 1 == a || idx + 1 == b {
            let ts = line.split(',').next().unwrap_or("").to_string();
            if idx + 1 == a {
                t1 = ts.clone();
            }
            if idx + 1 == b {
                t2 = ts;
            }
        }
        idx += 1;
    }
    train.flush()?;
    val.flush()?;
    test.flush()?;

    let note = (t1 == t2).then(|| "boundary timestamps tie; split is by index order".to_string());
    let bounds = SplitBounds {
        t1,
        t2,
        train_range: (0, a),
        val_eval_range: (a, b),
        test_eval_range: (b, n),
        note,
    };
    let bounds_file = BufWriter::new(File::create(out_dir.join("split-bounds.json"))?);
    serde_json::to_writer_pretty(bounds_file, &bounds)?;
    Ok(bounds)
}

/// Count data rows, verifying the header and timestamp ordering.
fn count_and_check_order(path: &Path) -> Result<u64, ExportError> {
    let reader = BufReader::new(File::open(path)?);
    let mut n = 0u64;
    let mut prev = String::new();
    for (line_no, line) in reader.lines().enumerate() {
        let line = line?;
        if line_no == 0 {
            if line != CSV_HEADER {
                return Err(ExportError::Malformed {
                    line: 1,
                    reason: "unrecognized header".into(),
                });
            }
            continue;
        }
        let ts = line.split(',').next().unwrap_or("");
        if !prev.is_empty() && ts < prev.as_str() {
            return Err(ExportError::Unordered {
                line: line_no as u64 + 1,
            });
        }
        prev.clear();
        prev.push_str(ts);
        n += 1;
    }
    Ok(n)
}

/// Write the subset of rows a bank can see: those where it is on either
/// side. Row order is preserved. Returns the kept-row count.
pub fn filter_bank(in_csv: &Path, out_csv: &Path, bank: u64) -> Result<u64, ExportError> {
    let reader = BufReader::new(File::open(in_csv)?);
    let mut w = BufWriter::new(File::create(out_csv)?);
    writeln!(w, "{CSV_HEADER}")?;
    let mut kept = 0u64;
    for (line_no, line) in reader.lines().enumerate() {
        let line = line?;
        if line_no == 0 {
            continue;
        }
        let row = parse_row(&line, line_no as u64 + 1)?;
        if row.from_bank == bank || row.to_bank == bank {
            writeln!(w, "{line}")?;
            kept += 1;
        }
    }
    w.flush()?;
    Ok(kept)
}

/// Banks present in a dataset, for the union/coverage tools.
pub fn banks_in_csv(path: &Path) -> Result<Vec<u64>, ExportError> {
    let reader = BufReader::new(File::open(path)?);
    let mut banks = std::collections::BTreeSet::new();
    for (line_no, line) in reader.lines().enumerate() {
        let line = line?;
        if line_no == 0 {
            continue;
        }
        let row = parse_row(&line, line_no as u64 + 1)?;
        banks.insert(row.from_bank);
        banks.insert(row.to_bank);
    }
    Ok(banks.into_iter().collect())
}

/// Convenience: write transactions.csv, patterns.txt, and patterns.json
/// into a directory. Returns (row count, instance count).
pub fn write_dataset(world: &GeneratedWorld, dir: &Path) -> Result<(u64, usize), ExportError> {
    std::fs::create_dir_all(dir)?;
    let csv = File::create(dir.join("transactions.csv"))?;
    let rows = write_csv(world, csv)?;
    let instances = write_sidecar(world, &dir.join("patterns.txt"))?;
    Ok((rows, instances))
}

/// Paths produced by [`write_dataset`].
pub fn dataset_paths(dir: &Path) -> (PathBuf, PathBuf, PathBuf) {
    (
        dir.join("transactions.csv"),
        dir.join("patterns.txt"),
        dir.join("patterns.json"),
    )
}
