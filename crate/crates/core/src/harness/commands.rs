use std::fmt::Write as _;
use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use super::report::{ApplySummary, FitReport, PlanReport, ReportDocument};
use super::table::{summarize_table, BenchmarkRow};
use super::{HarnessError, LossLog};
use crate::allocator::{allocate, plan, Budget, TokenSet};
use crate::context_ops::interchange::{read_frames, to_string};
use crate::context_ops::{apply_selection, SelectionSpec};
use crate::scaling_fit::{fit, Axis, Family, FitOptions, FitResult, FittedParams, JointParams};

fn check_shape(log: &LossLog, family: Family) -> Result<(), HarnessError> {
    let Some(axis) = family.axis() else {
        return Ok(());
    };
    // A one-axis law over tokens needs the frame count fixed, and vice versa.
    let (held, name) = match axis {
        Axis::Tokens => (log.rows.iter().map(|r| r.frames).collect::<Vec<_>>(), "frames"),
        Axis::Frames => (log.rows.iter().map(|r| r.tokens).collect::<Vec<_>>(), "tokens"),
    };
    if held.windows(2).any(|w| w[0] != w[1]) {
        return Err(HarnessError::Usage(format!(
            "family {} needs a log with constant {name}; this log varies it",
            family.name()
        )));
    }
    Ok(())
}

pub fn cmd_fit(
    log: &LossLog,
    source: &str,
    family: Family,
    options: &FitOptions,
) -> Result<ReportDocument, HarnessError> {
    check_shape(log, family)?;
    let result = fit(family, &log.rows, options)?;
    let mut doc = ReportDocument::new("fit");
    doc.fit = Some(FitReport {
        source: source.to_string(),
        samples: log.rows.len(),
        starts: options.starts,
        seed: options.seed,
        result,
    });
    Ok(doc)
}

/// Per-sample `(x, predicted, observed)` rows for plotting. One-axis laws use
/// their axis as `x`; the joint law writes both coordinates.
pub fn curve_csv(log: &LossLog, result: &FitResult) -> String {
    let mut out = String::new();
    let axis = result.family.axis();
    match axis {
        Some(Axis::Tokens) => out.push_str("tokens,predicted,observed\n"),
        Some(Axis::Frames) => out.push_str("frames,predicted,observed\n"),
        None => out.push_str("frames,tokens,predicted,observed\n"),
    }
    for s in &log.rows {
        let predicted = result.params.predict(axis, s);
        match axis {
            Some(a) => {
                let _ = writeln!(out, "{},{},{}", a.of(s), predicted, s.loss);
            }
            None => {
                let _ = writeln!(out, "{},{},{},{}", s.frames, s.tokens, predicted, s.loss);
            }
        }
    }
    out
}

/// Joint-law parameters from a structured fit report.
pub fn params_from_report(text: &str) -> Result<JointParams, HarnessError> {
    let doc = ReportDocument::from_json(text)
        .map_err(|e| HarnessError::Validation(format!("unreadable report: {e}")))?;
    match doc.fit.map(|f| f.result.params) {
        Some(FittedParams::Joint(p)) => Ok(p),
        Some(_) => Err(HarnessError::Usage("report holds a one-axis fit; planning needs the joint law".into())),
        None => Err(HarnessError::Validation("report has no fit section".into())),
    }
}

pub fn cmd_plan(
    params: &JointParams,
    budgets: &[u64],
    tokens: &TokenSet,
    max_frames: u32,
    top: Option<usize>,
) -> Result<ReportDocument, HarnessError> {
    if budgets.is_empty() {
        return Err(HarnessError::Usage("at least one --budget is required".into()));
    }
    let budgets = budgets
        .iter()
        .map(|&b| Budget::new(b))
        .collect::<Result<Vec<_>, _>>()?;
    let rows = plan(params, &budgets, tokens, max_frames)?;
    let allocations = budgets
        .iter()
        .map(|&b| allocate(params, b, tokens, max_frames, top))
        .collect::<Result<Vec<_>, _>>()?;
    let mut doc = ReportDocument::new("plan");
    doc.plan = Some(PlanReport {
        params: *params,
        token_set: tokens.values().to_vec(),
        max_frames,
        rows,
        allocations,
    });
    Ok(doc)
}

pub fn cmd_table(rows: &[BenchmarkRow]) -> Result<ReportDocument, HarnessError> {
    let mut doc = ReportDocument::new("table");
    doc.table = Some(summarize_table(rows)?);
    Ok(doc)
}

/// Applies `spec` to the tensor fixture at `input`. With `dump`, the output
/// context is written there in the same interchange format.
pub fn cmd_apply(input: &Path, spec: &SelectionSpec, dump: Option<&Path>) -> Result<ReportDocument, HarnessError> {
    let file = File::open(input).map_err(|e| HarnessError::io(input, e))?;
    let source = read_frames(BufReader::new(file)).map_err(|e| HarnessError::Tensor {
        context: input.display().to_string(),
        source: e,
    })?;
    let ctx = apply_selection(&source, spec)?;
    if let Some(path) = dump {
        std::fs::write(path, to_string(&ctx.to_frames())).map_err(|e| HarnessError::io(path, e))?;
    }
    let mut doc = ReportDocument::new("apply");
    doc.apply = Some(ApplySummary {
        source: input.display().to_string(),
        source_frames: source.len(),
        frames: ctx.frames_out,
        tokens_per_frame: ctx.tokens_per_frame,
        total_tokens: ctx.total_tokens(),
        dim: ctx.dim,
        summary: format!("{} × {} = {}", ctx.frames_out, ctx.tokens_per_frame, ctx.total_tokens()),
    });
    Ok(doc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scaling_fit::LossSample;
    use std::collections::BTreeMap;

    fn log(rows: &[(u32, u32, f64)]) -> LossLog {
        let rows = rows.iter().map(|&(t, m, l)| LossSample::new(t, m, l).unwrap()).collect();
        LossLog::new(rows, BTreeMap::new(), false).unwrap()
    }

    #[test]
    fn shape_mismatch_is_usage_error() {
        let l = log(&[(8, 49, 0.7), (16, 49, 0.65), (32, 49, 0.6)]);
        let err = cmd_fit(&l, "x", Family::PowerTokens, &FitOptions::default()).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(cmd_fit(&l, "x", Family::PowerFrames, &FitOptions::default()).is_ok());
    }

    #[test]
    fn joint_on_two_rows_is_underdetermined() {
        let l = log(&[(8, 49, 0.7), (16, 81, 0.65)]);
        let err = cmd_fit(&l, "x", Family::Joint, &FitOptions::default()).unwrap_err();
        assert!(err.to_string().contains("underdetermined"), "{err}");
    }

    #[test]
    fn symmetric_plan_splits_evenly() {
        let p = JointParams::new(0.3, 0.4, 0.3, 0.4, 0.1).unwrap();
        let set = TokenSet::new(vec![1, 4, 9, 16, 25, 36, 49, 64, 81, 100]).unwrap();
        let doc = cmd_plan(&p, &[100], &set, 100, Some(3)).unwrap();
        let row = &doc.plan.unwrap().rows[0];
        assert_eq!((row.frames, row.tokens), (10, 10));
        assert!(!row.over_budget);
        // 10 is not a square, so the integer pick sits next to the split
        assert!(row.best.total <= 100);
    }

    #[test]
    fn plan_domain_error_exit_code() {
        let p = JointParams::new(0.3, 1.2, 0.3, 0.4, 0.1).unwrap();
        let err = cmd_plan(&p, &[100], &TokenSet::default(), 100, None).unwrap_err();
        assert_eq!(err.exit_code(), 4);
        assert!(err.to_string().contains("alpha"), "{err}");
    }

    #[test]
    fn report_params_round_trip() {
        let p = JointParams::new(0.25, 0.26, 0.13, 0.21, 0.5).unwrap();
        let configs = crate::harness::joint_grid();
        let l = crate::harness::generate_synthetic(&p, &configs, 0.0, 1).unwrap();
        let opts = FitOptions { starts: 8, ..FitOptions::default() };
        let doc = cmd_fit(&l, "synthetic", Family::Joint, &opts).unwrap();
        let back = params_from_report(&doc.to_json()).unwrap();
        match doc.fit.unwrap().result.params {
            FittedParams::Joint(q) => assert_eq!(q, back),
            other => panic!("{other:?}"),
        }
    }
}
