//! Benchmark score tables: row averages and best/second-best markers.
//!
//! CSV layout: `frames,tokens` followed by one column per benchmark score.
//! A paired cell such as VideoMME without/with subtitles is two columns, and
//! both count toward the average. Optional reserved columns: `loss` (lower is
//! better), `avg` (a published average to compare against) and `total`
//! (ignored; recomputed from frames × tokens).

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::HarnessError;

const RESERVED: [&str; 5] = ["frames", "tokens", "loss", "avg", "total"];
const TIE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub benchmark: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub frames: u32,
    pub tokens: u32,
    pub scores: Vec<Score>,
    pub loss: Option<f64>,
    pub published_avg: Option<f64>,
}

impl BenchmarkRow {
    /// Unrounded mean of every score entry.
    pub fn average(&self) -> f64 {
        self.scores.iter().map(|s| s.value).sum::<f64>() / self.scores.len() as f64
    }
}

/// Half-up rounding to two decimals. The small bias keeps values such as
/// `42.695`, stored just below the half, rounding up as printed.
pub fn round_2dp(x: f64) -> f64 {
    (x * 100.0 + 0.5 + 1e-7).floor() / 100.0
}

pub fn format_2dp(x: f64) -> String {
    format!("{:.2}", round_2dp(x))
}

pub fn parse_scores(text: &str, path: &str) -> Result<Vec<BenchmarkRow>, HarnessError> {
    let parse = |row: usize, message: String| HarnessError::Parse {
        path: path.to_string(),
        row,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(|e| parse(0, e.to_string()))?.clone();
    let find = |name: &str| headers.iter().position(|h| h == name);
    let fi = find("frames").ok_or_else(|| parse(0, "missing column `frames`".into()))?;
    let ti = find("tokens").ok_or_else(|| parse(0, "missing column `tokens`".into()))?;
    let (li, ai) = (find("loss"), find("avg"));
    let score_cols: Vec<(usize, String)> = headers
        .iter()
        .enumerate()
        .filter(|(_, h)| !RESERVED.contains(h))
        .map(|(i, h)| (i, h.to_string()))
        .collect();
    if score_cols.is_empty() {
        return Err(parse(0, "no benchmark score columns".into()));
    }

    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| parse(row, e.to_string()))?;
        let int = |idx: usize, name: &str| -> Result<u32, HarnessError> {
            rec[idx]
                .parse::<u32>()
                .ok()
                .filter(|&v| v > 0)
                .ok_or_else(|| parse(row, format!("{name} `{}` is not a positive integer", &rec[idx])))
        };
        let real = |idx: usize, name: &str| -> Result<f64, HarnessError> {
            rec[idx]
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| parse(row, format!("{name} `{}` is not a number", &rec[idx])))
        };
        let mut scores = Vec::with_capacity(score_cols.len());
        for (idx, name) in &score_cols {
            let value = real(*idx, name)?;
            if !(0.0..=100.0).contains(&value) {
                return Err(HarnessError::Validation(format!(
                    "{path}: row {row}: {name} score {value} outside [0, 100]"
                )));
            }
            scores.push(Score { benchmark: name.clone(), value });
        }
        rows.push(BenchmarkRow {
            frames: int(fi, "frames")?,
            tokens: int(ti, "tokens")?,
            scores,
            loss: li.map(|i| real(i, "loss")).transpose()?,
            published_avg: ai.map(|i| real(i, "avg")).transpose()?,
        });
    }
    if rows.is_empty() {
        return Err(parse(0, "no rows".into()));
    }
    Ok(rows)
}

pub fn load_scores(path: &Path) -> Result<Vec<BenchmarkRow>, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    parse_scores(&text, &path.display().to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub frames: u32,
    pub tokens: u32,
    pub total: u64,
    pub scores: Vec<Score>,
    pub loss: Option<f64>,
    pub average: f64,
    /// `average` rounded half-up to two decimals.
    pub average_display: String,
    pub published_avg: Option<f64>,
    /// Displayed average minus the published one.
    pub avg_delta: Option<f64>,
    /// Columns (benchmark names, `avg`, `loss`) where this row is best.
    pub best: Vec<String>,
    pub second_best: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableReport {
    pub columns: Vec<String>,
    pub rows: Vec<TableRow>,
}

impl TableReport {
    /// Rows marked best in `column`.
    pub fn best_in(&self, column: &str) -> Vec<&TableRow> {
        self.rows.iter().filter(|r| r.best.iter().any(|c| c == column)).collect()
    }
}

/// Marks best and second-best rows. All rows tied at the top are best; the
/// next distinct value is second best.
fn mark(values: &[f64], higher_is_better: bool) -> (Vec<bool>, Vec<bool>) {
    let key = |v: f64| if higher_is_better { -v } else { v };
    let mut sorted: Vec<f64> = values.iter().map(|&v| key(v)).collect();
    sorted.sort_by(f64::total_cmp);
    let top = sorted[0];
    let second = sorted.iter().copied().find(|&v| v > top + TIE);
    let best = values.iter().map(|&v| (key(v) - top).abs() <= TIE).collect();
    let runner = values
        .iter()
        .map(|&v| second.is_some_and(|s| (key(v) - s).abs() <= TIE))
        .collect();
    (best, runner)
}

pub fn summarize_table(rows: &[BenchmarkRow]) -> Result<TableReport, HarnessError> {
    let first = rows
        .first()
        .ok_or_else(|| HarnessError::Validation("empty score table".into()))?;
    let columns: Vec<String> = first.scores.iter().map(|s| s.benchmark.clone()).collect();
    for (i, r) in rows.iter().enumerate() {
        let names: Vec<&str> = r.scores.iter().map(|s| s.benchmark.as_str()).collect();
        if names != columns.iter().map(String::as_str).collect::<Vec<_>>() {
            return Err(HarnessError::Validation(format!("row {}: benchmark columns differ", i + 1)));
        }
        if let Some(s) = r.scores.iter().find(|s| !(0.0..=100.0).contains(&s.value)) {
            return Err(HarnessError::Validation(format!(
                "row {}: {} score {} outside [0, 100]",
                i + 1,
                s.benchmark,
                s.value
            )));
        }
    }

    let mut out: Vec<TableRow> = rows
        .iter()
        .map(|r| {
            let average = r.average();
            TableRow {
                frames: r.frames,
                tokens: r.tokens,
                total: u64::from(r.frames) * u64::from(r.tokens),
                scores: r.scores.clone(),
                loss: r.loss,
                average,
                average_display: format_2dp(average),
                published_avg: r.published_avg,
                avg_delta: r.published_avg.map(|p| round_2dp(average) - p),
                best: Vec::new(),
                second_best: Vec::new(),
            }
        })
        .collect();

    let mut apply = |name: &str, values: Vec<f64>, higher: bool| {
        let (best, second) = mark(&values, higher);
        for (row, (b, s)) in out.iter_mut().zip(best.into_iter().zip(second)) {
            if b {
                row.best.push(name.to_string());
            }
            if s {
                row.second_best.push(name.to_string());
            }
        }
    };
    for (j, name) in columns.iter().enumerate() {
        apply(name, rows.iter().map(|r| r.scores[j].value).collect(), true);
    }
    apply("avg", rows.iter().map(|r| round_2dp(r.average())).collect(), true);
    if rows.iter().all(|r| r.loss.is_some()) {
        apply("loss", rows.iter().map(|r| r.loss.unwrap()).collect(), false);
    }
    Ok(TableReport { columns, rows: out })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(scores: &[f64]) -> BenchmarkRow {
        BenchmarkRow {
            frames: 1,
            tokens: 1,
            scores: scores
                .iter()
                .enumerate()
                .map(|(i, &value)| Score { benchmark: format!("b{i}"), value })
                .collect(),
            loss: None,
            published_avg: None,
        }
    }

    #[test]
    fn six_entry_average() {
        let r = row(&[18.67, 18.44, 49.45, 39.88, 41.33, 49.15]);
        assert_eq!(format_2dp(r.average()), "36.15");
        let r = row(&[33.00, 40.67, 62.83, 50.04, 55.19, 62.00]);
        assert_eq!(format_2dp(r.average()), "50.62");
    }

    #[test]
    fn half_up() {
        assert_eq!(format_2dp(42.695), "42.70");
        assert_eq!(format_2dp(1.005), "1.01");
        assert_eq!(format_2dp(1.004), "1.00");
    }

    #[test]
    fn ties_mark_every_row() {
        let rows = vec![row(&[50.0, 1.0]), row(&[50.0, 2.0]), row(&[50.0, 3.0])];
        let t = summarize_table(&rows).unwrap();
        assert_eq!(t.best_in("b0").len(), 3);
        assert!(t.rows.iter().all(|r| !r.second_best.contains(&"b0".to_string())));
        assert_eq!(t.best_in("b1")[0].scores[1].value, 3.0);
        assert!(t.rows[1].second_best.contains(&"b1".to_string()));
    }

    #[test]
    fn out_of_range_score() {
        let err = parse_scores("frames,tokens,a\n1,1,100.5\n", "s.csv").unwrap_err();
        assert!(matches!(err, HarnessError::Validation(_)));
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn loss_column_lower_is_better() {
        let text = "frames,tokens,loss,a\n8,729,0.642,1\n120,49,0.639,1\n";
        let t = summarize_table(&parse_scores(text, "s").unwrap()).unwrap();
        let best = t.best_in("loss");
        assert_eq!((best[0].frames, best[0].tokens), (120, 49));
    }
}
