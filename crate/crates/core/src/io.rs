//! CSV formats and atomic file output.
//!
//! Numbers are written with Rust's shortest round-trip formatting, so a
//! value read back is bit-identical to the one written.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use crate::data::{BidRecord, Dataset, Role, RoundRecord, Treatment};
use crate::equilibrium::{BidFunction, BidFunctionMeta};
use crate::error::{Error, Result};

pub const BIDS_HEADER: &str = "session_id,subject_id,role,round,treatment,value,bid";
pub const ROUNDS_HEADER: &str =
    "session_id,round,treatment,bidder1_id,value1,bid1,bidder2_id,value2,bid2,seller_id,winner_id,price";
pub const BIDFN_HEADER: &str = "theta,bid";

/// Writes `contents` to `path` through a temporary file in the same
/// directory and a rename, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| Error::Io(format!("{} is not a file path", path.display())))?;
    let tmp: PathBuf = dir.join(format!(
        ".{}.tmp-{}",
        name.to_string_lossy(),
        std::process::id()
    ));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::from(e)
    })
}

/// `x` with 12 significant digits, trailing zeros trimmed.
pub fn fmt_sig12(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { x.to_string() };
    }
    let mag = x.abs().log10().floor() as i32;
    let decimals = (11 - mag).max(0) as usize;
    let s = format!("{x:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn header_line(data: &str) -> &str {
    data.lines().next().unwrap_or("").trim_end_matches('\r')
}

fn reader(data: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::None)
        .from_reader(data.as_bytes())
}

fn check_header(data: &str, expected: &str) -> Result<()> {
    let got = header_line(data);
    if got != expected {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header '{expected}', found '{got}'"),
        });
    }
    Ok(())
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, name: &str) -> Result<T> {
    let line = rec.position().map_or(0, |p| p.line() as usize);
    let raw = rec.get(i).ok_or_else(|| Error::Parse {
        line,
        message: format!("missing column '{name}'"),
    })?;
    raw.parse().map_err(|_| Error::Parse {
        line,
        message: format!("column '{name}': cannot parse '{raw}'"),
    })
}

fn number(rec: &csv::StringRecord, i: usize, name: &str) -> Result<f64> {
    let x: f64 = field(rec, i, name)?;
    if !x.is_finite() {
        return Err(Error::Parse {
            line: rec.position().map_or(0, |p| p.line() as usize),
            message: format!("column '{name}' is not a finite number"),
        });
    }
    Ok(x)
}

fn role(rec: &csv::StringRecord, i: usize) -> Result<Role> {
    let line = rec.position().map_or(0, |p| p.line() as usize);
    rec.get(i)
        .unwrap_or("")
        .parse()
        .map_err(|e: Error| Error::Parse {
            line,
            message: e.to_string(),
        })
}

fn treatment(rec: &csv::StringRecord, i: usize) -> Result<Treatment> {
    let line = rec.position().map_or(0, |p| p.line() as usize);
    rec.get(i)
        .unwrap_or("")
        .parse()
        .map_err(|e: Error| Error::Parse {
            line,
            message: e.to_string(),
        })
}

pub fn parse_bids(data: &str) -> Result<Vec<BidRecord>> {
    check_header(data, BIDS_HEADER)?;
    let mut out = Vec::new();
    for rec in reader(data).records() {
        let rec = rec?;
        out.push(BidRecord {
            session_id: field(&rec, 0, "session_id")?,
            subject_id: field(&rec, 1, "subject_id")?,
            role: role(&rec, 2)?,
            round: field(&rec, 3, "round")?,
            treatment: treatment(&rec, 4)?,
            value: number(&rec, 5, "value")?,
            bid: number(&rec, 6, "bid")?,
        });
    }
    Ok(out)
}

pub fn parse_rounds(data: &str) -> Result<Vec<RoundRecord>> {
    check_header(data, ROUNDS_HEADER)?;
    let mut out = Vec::new();
    for rec in reader(data).records() {
        let rec = rec?;
        out.push(RoundRecord {
            session_id: field(&rec, 0, "session_id")?,
            round: field(&rec, 1, "round")?,
            treatment: treatment(&rec, 2)?,
            bidder_ids: [field(&rec, 3, "bidder1_id")?, field(&rec, 6, "bidder2_id")?],
            values: [number(&rec, 4, "value1")?, number(&rec, 7, "value2")?],
            bids: [number(&rec, 5, "bid1")?, number(&rec, 8, "bid2")?],
            seller_id: field(&rec, 9, "seller_id")?,
            winner_id: field(&rec, 10, "winner_id")?,
            price: number(&rec, 11, "price")?,
        });
    }
    Ok(out)
}

pub fn bids_csv(records: &[BidRecord]) -> String {
    let mut s = String::with_capacity(32 * (records.len() + 1));
    s.push_str(BIDS_HEADER);
    s.push('\n');
    for r in records {
        s.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.session_id,
            r.subject_id,
            r.role.as_str(),
            r.round,
            r.treatment,
            r.value,
            r.bid
        ));
    }
    s
}

pub fn rounds_csv(rounds: &[RoundRecord]) -> String {
    let mut s = String::with_capacity(64 * (rounds.len() + 1));
    s.push_str(ROUNDS_HEADER);
    s.push('\n');
    for r in rounds {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.session_id,
            r.round,
            r.treatment,
            r.bidder_ids[0],
            r.values[0],
            r.bids[0],
            r.bidder_ids[1],
            r.values[1],
            r.bids[1],
            r.seller_id,
            r.winner_id,
            r.price
        ));
    }
    s
}

pub fn bidfn_csv(f: &BidFunction) -> String {
    let mut s = String::from(BIDFN_HEADER);
    s.push('\n');
    for (t, b) in f.grid().iter().zip(f.bids()) {
        s.push_str(&fmt_sig12(*t));
        s.push(',');
        s.push_str(&fmt_sig12(*b));
        s.push('\n');
    }
    s
}

pub fn parse_bidfn(data: &str) -> Result<BidFunction> {
    check_header(data, BIDFN_HEADER)?;
    let mut grid = Vec::new();
    let mut bids = Vec::new();
    for rec in reader(data).records() {
        let rec = rec?;
        grid.push(number(&rec, 0, "theta")?);
        bids.push(number(&rec, 1, "bid")?);
    }
    BidFunction::new(grid, bids, BidFunctionMeta::default())
}

/// What a CSV file holds, judged by its header.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileKind {
    Bids,
    Rounds,
}

pub fn read_to_string(path: &Path) -> Result<String> {
    let mut s = String::new();
    fs::File::open(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?
        .read_to_string(&mut s)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Ok(s)
}

fn sniff(data: &str) -> Option<FileKind> {
    match header_line(data) {
        BIDS_HEADER => Some(FileKind::Bids),
        ROUNDS_HEADER => Some(FileKind::Rounds),
        _ => None,
    }
}

/// Loads a dataset from a rounds or bids CSV, or from a directory holding
/// `rounds.csv` and/or `bids.csv`. Rounds imply the bid records; when both
/// files are present the bids file wins for bid records.
pub fn load_dataset(path: &Path) -> Result<(Dataset, bool)> {
    let read_file = |p: &Path| -> Result<(FileKind, String)> {
        let data = read_to_string(p)?;
        let kind = sniff(&data).ok_or_else(|| Error::Parse {
            line: 1,
            message: format!(
                "{}: header matches neither the bids nor the rounds schema",
                p.display()
            ),
        })?;
        Ok((kind, data))
    };
    let (rounds_data, bids_data) = if path.is_dir() {
        let r = path.join("rounds.csv");
        let b = path.join("bids.csv");
        let rd = if r.exists() {
            Some(read_file(&r)?)
        } else {
            None
        };
        let bd = if b.exists() {
            Some(read_file(&b)?)
        } else {
            None
        };
        if rd.is_none() && bd.is_none() {
            return Err(Error::Io(format!(
                "{} holds neither rounds.csv nor bids.csv",
                path.display()
            )));
        }
        (rd, bd)
    } else {
        match read_file(path)? {
            (FileKind::Rounds, d) => (Some((FileKind::Rounds, d)), None),
            (FileKind::Bids, d) => (None, Some((FileKind::Bids, d))),
        }
    };
    let mut ds = Dataset::default();
    let has_rounds = rounds_data.is_some();
    if let Some((kind, d)) = rounds_data {
        if kind != FileKind::Rounds {
            return Err(Error::Parse {
                line: 1,
                message: "rounds.csv does not carry the rounds header".into(),
            });
        }
        ds = Dataset::from_rounds(vec![], parse_rounds(&d)?);
    }
    if let Some((kind, d)) = bids_data {
        if kind != FileKind::Bids {
            return Err(Error::Parse {
                line: 1,
                message: "bids.csv does not carry the bids header".into(),
            });
        }
        ds.bids = parse_bids(&d)?;
    }
    Ok((ds, has_rounds))
}
