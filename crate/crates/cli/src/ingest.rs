//! Reading and writing review and embedding files.
//!
//! Reviews are CSV or JSON Lines with the fields `product_id, reviewer_id,
//! rating, timestamp, text, helpful_votes, has_photo, label`; `label` may be
//! absent or empty. Embeddings are JSON Lines with `owner, product_id,
//! review_id, image_id, vector`.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDate, NaiveDateTime};
use coreview_core::records::{group_reviews, ImageEmbedding, Label, ProductReviewSet, RecordError, ReviewRecord};
use serde_json::{Map, Value};

pub const REVIEW_FIELDS: [&str; 8] = [
    "product_id",
    "reviewer_id",
    "rating",
    "timestamp",
    "text",
    "helpful_votes",
    "has_photo",
    "label",
];

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: line {line}: field `{field}`: {reason}", path.display())]
    Field {
        path: PathBuf,
        line: u64,
        field: String,
        reason: String,
    },
    #[error("{}: line {line}: {reason}", path.display())]
    Line { path: PathBuf, line: u64, reason: String },
    #[error("{}: {source}", path.display())]
    Record { path: PathBuf, source: RecordError },
    #[error("{}: cannot tell the review format; use a .csv or .jsonl extension", path.display())]
    UnknownFormat { path: PathBuf },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum ReviewFormat {
    Csv,
    Jsonl,
}

impl ReviewFormat {
    pub fn from_path(path: &Path) -> Result<Self, IngestError> {
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => Ok(Self::Csv),
            Some("jsonl") | Some("ndjson") => Ok(Self::Jsonl),
            _ => Err(IngestError::UnknownFormat { path: path.to_path_buf() }),
        }
    }
}

/// Days since the Unix epoch from a number, an ISO date (`2019-03-01`) or an
/// ISO date-time (`2019-03-01T12:00:00`, optionally with an offset).
pub fn parse_timestamp(s: &str) -> Result<f64, String> {
    let s = s.trim();
    if let Ok(v) = s.parse::<f64>() {
        return if v.is_finite() { Ok(v) } else { Err(format!("{s:?} is not finite")) };
    }
    let secs = if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        d.and_hms_opt(0, 0, 0).expect("midnight").and_utc().timestamp()
    } else if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        dt.timestamp()
    } else if let Ok(dt) = NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S") {
        dt.and_utc().timestamp()
    } else {
        return Err(format!("{s:?} is neither a day count nor an ISO-8601 date"));
    };
    Ok(secs as f64 / 86_400.0)
}

fn parse_label(s: &str) -> Result<Option<Label>, String> {
    match s.trim() {
        "" => Ok(None),
        other => other.parse().map(Some).map_err(|e: RecordError| e.to_string()),
    }
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s.trim() {
        "true" | "1" => Ok(true),
        "false" | "0" => Ok(false),
        other => Err(format!("expected true/false or 1/0, got {other:?}")),
    }
}

fn parse_rating(s: &str) -> Result<u8, String> {
    let v: u8 = s.trim().parse().map_err(|_| format!("{s:?} is not an integer"))?;
    if (1..=5).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is outside 1..=5"))
    }
}

fn parse_count(s: &str) -> Result<u32, String> {
    s.trim()
        .parse()
        .map_err(|_| format!("{s:?} is not a non-negative integer"))
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IngestError + '_ {
    move |source| IngestError::Io { path: path.to_path_buf(), source }
}

/// Reads review records without grouping them.
pub fn read_review_records(path: &Path, format: ReviewFormat) -> Result<Vec<ReviewRecord>, IngestError> {
    match format {
        ReviewFormat::Csv => read_csv(path),
        ReviewFormat::Jsonl => read_jsonl(path),
    }
}

/// Reads, validates and groups reviews by product.
pub fn load_reviews(path: &Path, format: ReviewFormat) -> Result<Vec<ProductReviewSet>, IngestError> {
    let records = read_review_records(path, format)?;
    group_reviews(records).map_err(|source| IngestError::Record { path: path.to_path_buf(), source })
}

fn read_csv(path: &Path) -> Result<Vec<ReviewRecord>, IngestError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut rdr = csv::ReaderBuilder::new().flexible(false).from_reader(file);
    let line_err = |line: u64, reason: String| IngestError::Line { path: path.to_path_buf(), line, reason };
    let header = rdr.headers().map_err(|e| line_err(1, e.to_string()))?.clone();
    let mut col = [usize::MAX; 8];
    for (i, h) in header.iter().enumerate() {
        match REVIEW_FIELDS.iter().position(|f| *f == h) {
            Some(k) if col[k] == usize::MAX => col[k] = i,
            Some(_) => return Err(line_err(1, format!("column {h:?} appears twice"))),
            None => return Err(line_err(1, format!("unknown column {h:?}"))),
        }
    }
    if let Some(k) = col[..7].iter().position(|&c| c == usize::MAX) {
        return Err(line_err(1, format!("missing column {:?}", REVIEW_FIELDS[k])));
    }
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            line_err(line, e.to_string())
        })?;
        let line = row.position().map_or(0, |p| p.line());
        let get = |k: usize| if col[k] == usize::MAX { "" } else { &row[col[k]] };
        let field = |k: usize, reason: String| IngestError::Field {
            path: path.to_path_buf(),
            line,
            field: REVIEW_FIELDS[k].to_string(),
            reason,
        };
        let r = ReviewRecord {
            product_id: get(0).to_string(),
            reviewer_id: get(1).to_string(),
            rating: parse_rating(get(2)).map_err(|e| field(2, e))?,
            timestamp: parse_timestamp(get(3)).map_err(|e| field(3, e))?,
            text: get(4).to_string(),
            helpful_votes: parse_count(get(5)).map_err(|e| field(5, e))?,
            has_photo: parse_bool(get(6)).map_err(|e| field(6, e))?,
            label: parse_label(get(7)).map_err(|e| field(7, e))?,
        };
        check_record(path, line, &r)?;
        out.push(r);
    }
    Ok(out)
}

fn check_record(path: &Path, line: u64, r: &ReviewRecord) -> Result<(), IngestError> {
    r.validate().map_err(|e| match e {
        RecordError::InvalidField { field, reason } => IngestError::Field {
            path: path.to_path_buf(),
            line,
            field: field.to_string(),
            reason,
        },
        other => IngestError::Line { path: path.to_path_buf(), line, reason: other.to_string() },
    })
}

fn json_field<'a>(obj: &'a Map<String, Value>, name: &str) -> Option<&'a Value> {
    obj.get(name).filter(|v| !v.is_null())
}

fn read_jsonl(path: &Path) -> Result<Vec<ReviewRecord>, IngestError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line_no = i as u64 + 1;
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let field = |name: &str, reason: String| IngestError::Field {
            path: path.to_path_buf(),
            line: line_no,
            field: name.to_string(),
            reason,
        };
        let obj: Map<String, Value> = serde_json::from_str(&line).map_err(|e| IngestError::Line {
            path: path.to_path_buf(),
            line: line_no,
            reason: format!("not a JSON object: {e}"),
        })?;
        if let Some(k) = obj.keys().find(|k| !REVIEW_FIELDS.contains(&k.as_str())) {
            return Err(field(k, "unknown field".into()));
        }
        let string = |name: &str| -> Result<String, IngestError> {
            match json_field(&obj, name) {
                Some(Value::String(s)) => Ok(s.clone()),
                Some(v) => Err(field(name, format!("expected a string, got {v}"))),
                None => Err(field(name, "missing".into())),
            }
        };
        // numbers are also accepted as strings, which is what CSV exports give
        let scalar = |name: &str| -> Result<String, IngestError> {
            match json_field(&obj, name) {
                Some(Value::String(s)) => Ok(s.clone()),
                Some(Value::Number(n)) => Ok(n.to_string()),
                Some(Value::Bool(b)) => Ok(b.to_string()),
                Some(v) => Err(field(name, format!("unexpected value {v}"))),
                None => Err(field(name, "missing".into())),
            }
        };
        let timestamp = match json_field(&obj, "timestamp") {
            Some(Value::Number(n)) => n.as_f64().ok_or_else(|| field("timestamp", "not a number".into()))?,
            Some(Value::String(s)) => parse_timestamp(s).map_err(|e| field("timestamp", e))?,
            Some(v) => return Err(field("timestamp", format!("unexpected value {v}"))),
            None => return Err(field("timestamp", "missing".into())),
        };
        let label = match json_field(&obj, "label") {
            None => None,
            Some(Value::String(s)) => parse_label(s).map_err(|e| field("label", e))?,
            Some(v) => return Err(field("label", format!("unexpected value {v}"))),
        };
        let text = match json_field(&obj, "text") {
            None => String::new(),
            Some(_) => string("text")?,
        };
        let r = ReviewRecord {
            product_id: string("product_id")?,
            reviewer_id: string("reviewer_id")?,
            rating: parse_rating(&scalar("rating")?).map_err(|e| field("rating", e))?,
            timestamp,
            text,
            helpful_votes: parse_count(&scalar("helpful_votes")?).map_err(|e| field("helpful_votes", e))?,
            has_photo: parse_bool(&scalar("has_photo")?).map_err(|e| field("has_photo", e))?,
            label,
        };
        check_record(path, line_no, &r)?;
        out.push(r);
    }
    Ok(out)
}

/// Writes records in the given format. Floats use the shortest decimal that
/// reads back to the same value.
pub fn write_reviews<W: Write>(out: W, format: ReviewFormat, records: &[ReviewRecord]) -> std::io::Result<()> {
    match format {
        ReviewFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(REVIEW_FIELDS)?;
            for r in records {
                w.write_record([
                    r.product_id.as_str(),
                    &r.reviewer_id,
                    &r.rating.to_string(),
                    &r.timestamp.to_string(),
                    &r.text,
                    &r.helpful_votes.to_string(),
                    if r.has_photo { "true" } else { "false" },
                    r.label.map_or("", Label::as_str),
                ])?;
            }
            w.flush()
        }
        ReviewFormat::Jsonl => {
            let mut out = out;
            for r in records {
                serde_json::to_writer(&mut out, r)?;
                out.write_all(b"\n")?;
            }
            out.flush()
        }
    }
}

/// Reads and validates an embeddings file.
pub fn load_embeddings(path: &Path) -> Result<Vec<ImageEmbedding>, IngestError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line_no = i as u64 + 1;
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let e: ImageEmbedding = serde_json::from_str(&line).map_err(|e| IngestError::Line {
            path: path.to_path_buf(),
            line: line_no,
            reason: e.to_string(),
        })?;
        e.validate().map_err(|e| IngestError::Line {
            path: path.to_path_buf(),
            line: line_no,
            reason: e.to_string(),
        })?;
        out.push(e);
    }
    Ok(out)
}

pub fn write_embeddings<W: Write>(mut out: W, embeddings: &[ImageEmbedding]) -> std::io::Result<()> {
    for e in embeddings {
        serde_json::to_writer(&mut out, e)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn timestamps() {
        assert_eq!(parse_timestamp("12.5"), Ok(12.5));
        assert_eq!(parse_timestamp("1970-01-03"), Ok(2.0));
        assert_eq!(parse_timestamp("1970-01-02T12:00:00"), Ok(1.5));
        assert_eq!(parse_timestamp("1970-01-02T12:00:00+00:00"), Ok(1.5));
        assert!(parse_timestamp("yesterday").is_err());
        assert!(parse_timestamp("NaN").is_err());
    }

    #[test]
    fn scalar_parsers() {
        assert_eq!(parse_rating("5"), Ok(5));
        assert!(parse_rating("6").unwrap_err().contains("outside"));
        assert_eq!(parse_bool("1"), Ok(true));
        assert!(parse_bool("yes").is_err());
        assert_eq!(parse_label(""), Ok(None));
        assert_eq!(parse_label("fake_buyer"), Ok(Some(Label::FakeBuyer)));
        assert!(parse_count("-1").is_err());
    }
}
