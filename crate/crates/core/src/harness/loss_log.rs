//! Loss logs: one measured loss per trained `(frames, tokens)` configuration.
//!
//! CSV form: lowercase header `frames,tokens,loss` (extra columns ignored),
//! `#` comment lines, and metadata carried as `# key=value` comments.
//! Structured form: a JSON document with `version`, `metadata` and `rows`.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::scaling_fit::LossSample;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogFormat {
    Csv,
    Json,
}

impl LogFormat {
    /// `.json` means structured, anything else CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => LogFormat::Json,
            _ => LogFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossLog {
    pub metadata: BTreeMap<String, String>,
    pub rows: Vec<LossSample>,
}

#[derive(Serialize, Deserialize)]
struct LossLogDoc {
    version: String,
    #[serde(flatten)]
    log: LossLog,
}

impl LossLog {
    /// Validates every row and, unless `allow_duplicates`, rejects repeated
    /// `(frames, tokens)` pairs. Errors name the 1-based row.
    pub fn new(
        rows: Vec<LossSample>,
        metadata: BTreeMap<String, String>,
        allow_duplicates: bool,
    ) -> Result<Self, HarnessError> {
        validate_rows(&rows, allow_duplicates, "<memory>")?;
        Ok(Self { metadata, rows })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            let _ = writeln!(out, "# {k}={v}");
        }
        out.push_str("frames,tokens,loss\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{}", r.frames, r.tokens, r.loss);
        }
        out
    }

    pub fn to_json(&self) -> String {
        let doc = LossLogDoc {
            version: super::REPORT_VERSION.to_string(),
            log: self.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("loss log serializes") + "\n"
    }

    pub fn from_csv_str(text: &str, allow_duplicates: bool, path: &str) -> Result<Self, HarnessError> {
        let mut metadata = BTreeMap::new();
        for line in text.lines() {
            if let Some(rest) = line.trim_start().strip_prefix('#') {
                if let Some((k, v)) = rest.trim().split_once('=') {
                    let k = k.trim();
                    if !k.is_empty() && !k.contains(char::is_whitespace) {
                        metadata.insert(k.to_string(), v.trim().to_string());
                    }
                }
            }
        }
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let parse = |row: usize, message: String| HarnessError::Parse {
            path: path.to_string(),
            row,
            message,
        };
        let headers = rdr.headers().map_err(|e| parse(0, e.to_string()))?.clone();
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| parse(0, format!("missing column `{name}`")))
        };
        let (fi, ti, li) = (col("frames")?, col("tokens")?, col("loss")?);
        let mut rows = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let row = i + 1;
            let rec = rec.map_err(|e| parse(row, e.to_string()))?;
            let cell = |idx: usize, name: &str| {
                rec.get(idx)
                    .ok_or_else(|| parse(row, format!("missing `{name}` cell")))
            };
            let frames: u32 = cell(fi, "frames")?
                .parse()
                .map_err(|_| parse(row, format!("frames `{}` is not a positive integer", &rec[fi])))?;
            let tokens: u32 = cell(ti, "tokens")?
                .parse()
                .map_err(|_| parse(row, format!("tokens `{}` is not a positive integer", &rec[ti])))?;
            let loss: f64 = cell(li, "loss")?
                .parse()
                .map_err(|_| parse(row, format!("loss `{}` is not a number", &rec[li])))?;
            rows.push(LossSample { frames, tokens, loss });
        }
        validate_rows(&rows, allow_duplicates, path)?;
        Ok(Self { metadata, rows })
    }

    pub fn from_json_str(text: &str, allow_duplicates: bool, path: &str) -> Result<Self, HarnessError> {
        let doc: LossLogDoc = serde_json::from_str(text).map_err(|e| HarnessError::Parse {
            path: path.to_string(),
            row: e.line(),
            message: e.to_string(),
        })?;
        validate_rows(&doc.log.rows, allow_duplicates, path)?;
        Ok(doc.log)
    }
}

fn validate_rows(rows: &[LossSample], allow_duplicates: bool, path: &str) -> Result<(), HarnessError> {
    let mut seen = HashSet::new();
    for (i, r) in rows.iter().enumerate() {
        let err = |message: String| HarnessError::Parse {
            path: path.to_string(),
            row: i + 1,
            message,
        };
        r.validate().map_err(|e| err(e.to_string()))?;
        if !seen.insert((r.frames, r.tokens)) && !allow_duplicates {
            return Err(err(format!(
                "duplicate configuration ({} frames, {} tokens); pass --allow-duplicates to keep it",
                r.frames, r.tokens
            )));
        }
    }
    Ok(())
}

pub fn load_loss_log(path: &Path, format: LogFormat, allow_duplicates: bool) -> Result<LossLog, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    let name = path.display().to_string();
    match format {
        LogFormat::Csv => LossLog::from_csv_str(&text, allow_duplicates, &name),
        LogFormat::Json => LossLog::from_json_str(&text, allow_duplicates, &name),
    }
}
