//! Sample and feature-table serialization.
//!
//! Two sample formats: JSONL with one link object per line, and a long CSV
//! with one row per profile sample. Both round-trip losslessly; floats are
//! written in shortest round-trip form. Parse errors carry the 1-based line
//! of the offending input.

use crate::dataset::{FeatureTable, LinkSample};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::profile::PathProfile;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};
use std::str::FromStr;

/// On-disk sample encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleFormat {
    Jsonl,
    CsvLong,
}

impl FromStr for SampleFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jsonl" => Ok(SampleFormat::Jsonl),
            "csv-long" | "csv" => Ok(SampleFormat::CsvLong),
            other => Err(Error::Config(format!(
                "unknown sample format {other:?}, expected jsonl or csv-long"
            ))),
        }
    }
}

impl std::fmt::Display for SampleFormat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SampleFormat::Jsonl => "jsonl",
            SampleFormat::CsvLong => "csv-long",
        })
    }
}

#[derive(Serialize, Deserialize)]
struct RawSample {
    group: String,
    frequency_mhz: f64,
    spacing_m: f64,
    tx_height_agl_m: f64,
    rx_height_agl_m: f64,
    dtm_m: Vec<f64>,
    dsm_m: Vec<f64>,
    path_loss_db: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    noise_floor_db: Option<f64>,
}

impl RawSample {
    fn from_sample(s: &LinkSample) -> Self {
        RawSample {
            group: s.group.clone(),
            frequency_mhz: s.profile.frequency_mhz,
            spacing_m: s.profile.spacing_m,
            tx_height_agl_m: s.profile.tx_height_agl_m,
            rx_height_agl_m: s.profile.rx_height_agl_m,
            dtm_m: s.profile.dtm_m.clone(),
            dsm_m: s.profile.dsm_m.clone(),
            path_loss_db: s.measured_path_loss_db,
            noise_floor_db: s.noise_floor_db,
        }
    }

    fn into_sample(self) -> Result<LinkSample> {
        let profile = PathProfile::new(
            self.spacing_m,
            self.dsm_m,
            self.dtm_m,
            self.tx_height_agl_m,
            self.rx_height_agl_m,
            self.frequency_mhz,
        )?;
        let sample = LinkSample {
            profile,
            measured_path_loss_db: self.path_loss_db,
            group: self.group,
            noise_floor_db: self.noise_floor_db,
        };
        sample.validate()?;
        Ok(sample)
    }
}

/// Parses a sample stream in the given format. Row order is preserved;
/// the first invalid row aborts with its line number.
pub fn parse_samples<R: BufRead>(reader: R, format: SampleFormat) -> Result<Vec<LinkSample>> {
    match format {
        SampleFormat::Jsonl => parse_jsonl(reader),
        SampleFormat::CsvLong => parse_csv_long(reader),
    }
}

fn parse_jsonl<R: BufRead>(reader: R) -> Result<Vec<LinkSample>> {
    let mut samples = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = (i + 1) as u64;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawSample = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: lineno,
            msg: e.to_string(),
        })?;
        samples.push(raw.into_sample().map_err(|e| Error::Parse {
            line: lineno,
            msg: e.to_string(),
        })?);
    }
    Ok(samples)
}

/// Writes samples in the given format.
pub fn write_samples<W: Write>(
    samples: &[LinkSample],
    format: SampleFormat,
    writer: W,
) -> Result<()> {
    match format {
        SampleFormat::Jsonl => write_jsonl(samples, writer),
        SampleFormat::CsvLong => write_csv_long(samples, writer),
    }
}

fn write_jsonl<W: Write>(samples: &[LinkSample], mut writer: W) -> Result<()> {
    for s in samples {
        serde_json::to_writer(&mut writer, &RawSample::from_sample(s))?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    link_id: u64,
    group: String,
    frequency_mhz: f64,
    spacing_m: f64,
    tx_height_agl_m: f64,
    rx_height_agl_m: f64,
    sample_index: usize,
    dtm_m: f64,
    dsm_m: f64,
    path_loss_db: f64,
    noise_floor_db: Option<f64>,
}

struct LinkBuilder {
    id: u64,
    first_line: u64,
    head: CsvRow,
    dtm: Vec<f64>,
    dsm: Vec<f64>,
}

impl LinkBuilder {
    fn push(&mut self, row: CsvRow, line: u64) -> Result<()> {
        let h = &self.head;
        let consistent = row.group == h.group
            && row.frequency_mhz == h.frequency_mhz
            && row.spacing_m == h.spacing_m
            && row.tx_height_agl_m == h.tx_height_agl_m
            && row.rx_height_agl_m == h.rx_height_agl_m
            && row.path_loss_db == h.path_loss_db
            && row.noise_floor_db == h.noise_floor_db;
        if !consistent {
            return Err(Error::Sample {
                row: line,
                msg: format!("link {} metadata changes mid-link", self.id),
            });
        }
        if row.sample_index != self.dtm.len() {
            return Err(Error::Sample {
                row: line,
                msg: format!(
                    "link {} sample_index {} out of order, expected {}",
                    self.id,
                    row.sample_index,
                    self.dtm.len()
                ),
            });
        }
        self.dtm.push(row.dtm_m);
        self.dsm.push(row.dsm_m);
        Ok(())
    }

    fn finish(self) -> Result<LinkSample> {
        let raw = RawSample {
            group: self.head.group,
            frequency_mhz: self.head.frequency_mhz,
            spacing_m: self.head.spacing_m,
            tx_height_agl_m: self.head.tx_height_agl_m,
            rx_height_agl_m: self.head.rx_height_agl_m,
            dtm_m: self.dtm,
            dsm_m: self.dsm,
            path_loss_db: self.head.path_loss_db,
            noise_floor_db: self.head.noise_floor_db,
        };
        let first = self.first_line;
        raw.into_sample().map_err(|e| Error::Sample {
            row: first,
            msg: e.to_string(),
        })
    }
}

fn parse_csv_long<R: BufRead>(reader: R) -> Result<Vec<LinkSample>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let mut samples = Vec::new();
    let mut current: Option<LinkBuilder> = None;
    let mut seen: std::collections::BTreeSet<u64> = Default::default();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let row: CsvRow = record.deserialize(Some(&headers)).map_err(|e| Error::Parse {
            line,
            msg: e.to_string(),
        })?;
        match current.as_mut() {
            Some(b) if b.id == row.link_id => b.push(row, line)?,
            _ => {
                if let Some(done) = current.take() {
                    samples.push(done.finish()?);
                }
                if !seen.insert(row.link_id) {
                    return Err(Error::Sample {
                        row: line,
                        msg: format!("link {} rows are not contiguous", row.link_id),
                    });
                }
                current = Some(LinkBuilder {
                    id: row.link_id,
                    first_line: line,
                    dtm: vec![row.dtm_m],
                    dsm: vec![row.dsm_m],
                    head: row,
                });
                let b = current.as_mut().expect("just set");
                if b.head.sample_index != 0 {
                    return Err(Error::Sample {
                        row: line,
                        msg: format!("link {} does not start at sample_index 0", b.id),
                    });
                }
            }
        }
    }
    if let Some(done) = current.take() {
        samples.push(done.finish()?);
    }
    Ok(samples)
}

fn write_csv_long<W: Write>(samples: &[LinkSample], writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record([
        "link_id",
        "group",
        "frequency_mhz",
        "spacing_m",
        "tx_height_agl_m",
        "rx_height_agl_m",
        "sample_index",
        "dtm_m",
        "dsm_m",
        "path_loss_db",
        "noise_floor_db",
    ])?;
    for (i, s) in samples.iter().enumerate() {
        let p = &s.profile;
        for k in 0..p.len() {
            wtr.write_record([
                format!("{}", i as u64 + 1),
                s.group.clone(),
                format!("{}", p.frequency_mhz),
                format!("{}", p.spacing_m),
                format!("{}", p.tx_height_agl_m),
                format!("{}", p.rx_height_agl_m),
                format!("{k}"),
                format!("{}", p.dtm_m[k]),
                format!("{}", p.dsm_m[k]),
                format!("{}", s.measured_path_loss_db),
                s.noise_floor_db.map_or(String::new(), |f| format!("{f}")),
            ])?;
        }
    }
    wtr.flush()?;
    Ok(())
}

const FEATURE_HEADER: [&str; 10] = [
    "group", "f1", "f2", "f3", "f4", "f5", "f6", "f7", "f8", "path_loss_db",
];

/// Writes `group,f1,...,f8,path_loss_db` rows at full float precision.
pub fn write_feature_table<W: Write>(table: &FeatureTable, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(FEATURE_HEADER)?;
    for i in 0..table.len() {
        let mut rec: Vec<String> = Vec::with_capacity(10);
        rec.push(table.groups[i].clone());
        for v in table.features.row(i) {
            rec.push(format!("{v}"));
        }
        rec.push(format!("{}", table.labels[i]));
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Reads a feature CSV produced by [`write_feature_table`].
pub fn read_feature_table<R: BufRead>(reader: R) -> Result<FeatureTable> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?;
    if headers.len() != FEATURE_HEADER.len()
        || headers.iter().zip(FEATURE_HEADER).any(|(a, b)| a != b)
    {
        return Err(Error::Parse {
            line: 1,
            msg: format!("unexpected feature CSV header {headers:?}"),
        });
    }
    let mut groups = Vec::new();
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != FEATURE_HEADER.len() {
            return Err(Error::Parse {
                line,
                msg: format!("expected {} fields, got {}", FEATURE_HEADER.len(), record.len()),
            });
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse::<f64>().map_err(|e| Error::Parse {
                line,
                msg: format!("bad float {s:?}: {e}"),
            })
        };
        groups.push(record[0].to_string());
        let mut row = Vec::with_capacity(8);
        for k in 1..=8 {
            row.push(parse(&record[k])?);
        }
        rows.push(row);
        labels.push(parse(&record[9])?);
    }
    Ok(FeatureTable {
        groups,
        features: Matrix::from_rows(&rows)?,
        labels,
    })
}
