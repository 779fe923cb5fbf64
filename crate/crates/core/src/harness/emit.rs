use std::fs::File;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use super::{ConvergenceRecord, CutoffRecord};
use crate::error::{Error, Result};

pub const RECORD_HEADER: [&str; 14] = [
    "N",
    "level",
    "eHN_minus_EH",
    "eHF_a",
    "eHF_b",
    "delta",
    "overlap",
    "nplus",
    "nplus2",
    "pmax_b",
    "pmax_i",
    "mexc",
    "converged",
    "wall_ms",
];

pub const CUTOFF_HEADER: [&str; 7] = ["mexc", "level", "eHF_a", "eHF_b", "abs_diff", "dim", "converged"];

/// 17 significant digits; parses back to the same bits.
fn float(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn write_rows<I>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(header).map_err(csv_err(path))?;
    for row in rows {
        w.write_record(&row).map_err(csv_err(path))?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_records_csv(path: impl AsRef<Path>, records: &[ConvergenceRecord]) -> Result<()> {
    write_rows(
        path.as_ref(),
        &RECORD_HEADER,
        records.iter().map(|r| {
            vec![
                r.n.to_string(),
                r.level.to_string(),
                float(r.ehn_minus_eh),
                float(r.ehf_a),
                float(r.ehf_b),
                float(r.delta),
                float(r.overlap),
                float(r.nplus),
                float(r.nplus2),
                r.pmax_b.to_string(),
                r.pmax_i.to_string(),
                r.mexc.to_string(),
                r.converged.to_string(),
                r.wall_ms.to_string(),
            ]
        }),
    )
}

pub fn write_cutoff_csv(path: impl AsRef<Path>, records: &[CutoffRecord]) -> Result<()> {
    write_rows(
        path.as_ref(),
        &CUTOFF_HEADER,
        records.iter().map(|r| {
            vec![
                r.mexc.to_string(),
                r.level.to_string(),
                float(r.ehf_a),
                float(r.ehf_b),
                float(r.abs_diff),
                r.dim.to_string(),
                r.converged.to_string(),
            ]
        }),
    )
}

struct Fields<'a> {
    path: &'a Path,
    line: usize,
    record: csv::StringRecord,
    pos: usize,
}

impl Fields<'_> {
    fn next<T: FromStr>(&mut self) -> Result<T> {
        let raw = self.record.get(self.pos).ok_or_else(|| Error::MalformedRecord {
            path: self.path.to_path_buf(),
            msg: format!("line {}: missing field {}", self.line, self.pos + 1),
        })?;
        self.pos += 1;
        raw.parse().map_err(|_| Error::MalformedRecord {
            path: self.path.to_path_buf(),
            msg: format!("line {}: cannot parse {raw:?}", self.line),
        })
    }
}

fn read_rows<T>(path: &Path, header: &[&str], parse: impl Fn(&mut Fields) -> Result<T>) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let found = r.headers().map_err(csv_err(path))?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(Error::MalformedRecord {
            path: path.to_path_buf(),
            msg: format!("unexpected header {:?}", found.iter().collect::<Vec<_>>()),
        });
    }
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let mut f = Fields {
            path,
            line: i + 2,
            record: rec.map_err(csv_err(path))?,
            pos: 0,
        };
        out.push(parse(&mut f)?);
    }
    Ok(out)
}

pub fn read_records_csv(path: impl AsRef<Path>) -> Result<Vec<ConvergenceRecord>> {
    read_rows(path.as_ref(), &RECORD_HEADER, |f| {
        Ok(ConvergenceRecord {
            n: f.next()?,
            level: f.next()?,
            ehn_minus_eh: f.next()?,
            ehf_a: f.next()?,
            ehf_b: f.next()?,
            delta: f.next()?,
            overlap: f.next()?,
            nplus: f.next()?,
            nplus2: f.next()?,
            pmax_b: f.next()?,
            pmax_i: f.next()?,
            mexc: f.next()?,
            converged: f.next()?,
            wall_ms: f.next()?,
        })
    })
}

pub fn read_cutoff_csv(path: impl AsRef<Path>) -> Result<Vec<CutoffRecord>> {
    read_rows(path.as_ref(), &CUTOFF_HEADER, |f| {
        Ok(CutoffRecord {
            mexc: f.next()?,
            level: f.next()?,
            ehf_a: f.next()?,
            ehf_b: f.next()?,
            abs_diff: f.next()?,
            dim: f.next()?,
            converged: f.next()?,
        })
    })
}

pub fn write_report_json(path: impl AsRef<Path>, report: &impl Serialize) -> Result<()> {
    let path = path.as_ref();
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut f = File::create(path).map_err(io)?;
    serde_json::to_writer_pretty(&mut f, report).map_err(|e| io(e.into()))?;
    writeln!(f).map_err(io)
}
