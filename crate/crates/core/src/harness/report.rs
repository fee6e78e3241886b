//! Report document shared by every command, rendered as text or JSON.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::table::{format_2dp, TableReport};
use crate::allocator::{AllocationResult, PlanRow};
use crate::scaling_fit::{FitResult, FittedParams, JointParams};

pub const REPORT_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub source: String,
    pub samples: usize,
    pub starts: usize,
    pub seed: u64,
    pub result: FitResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanReport {
    pub params: JointParams,
    pub token_set: Vec<u32>,
    pub max_frames: u32,
    pub rows: Vec<PlanRow>,
    pub allocations: Vec<AllocationResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApplySummary {
    pub source: String,
    pub source_frames: usize,
    pub frames: usize,
    pub tokens_per_frame: usize,
    pub total_tokens: usize,
    pub dim: usize,
    /// `"T × M = total"`.
    pub summary: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub version: String,
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<PlanReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<TableReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub apply: Option<ApplySummary>,
}

impl ReportDocument {
    pub fn new(command: &str) -> Self {
        Self {
            version: REPORT_VERSION.to_string(),
            command: command.to_string(),
            fit: None,
            plan: None,
            table: None,
            apply: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if let Some(f) = &self.fit {
            render_fit(&mut out, f);
        }
        if let Some(p) = &self.plan {
            render_plan(&mut out, p);
        }
        if let Some(t) = &self.table {
            render_table(&mut out, t);
        }
        if let Some(a) = &self.apply {
            let _ = writeln!(out, "{}", a.summary);
            let _ = writeln!(out, "source: {} ({} frames), dim {}", a.source, a.source_frames, a.dim);
        }
        out
    }
}

fn render_fit(out: &mut String, f: &FitReport) {
    let r = &f.result;
    let _ = writeln!(out, "fit {} on {} ({} samples)", r.family.name(), f.source, f.samples);
    match &r.params {
        FittedParams::Power(p) => {
            let _ = writeln!(out, "  floor    {:.6}", p.floor);
            let _ = writeln!(out, "  scale    {:.6e}", p.scale);
            let _ = writeln!(out, "  exponent {:.6}", p.exponent);
        }
        FittedParams::Linear(p) => {
            let _ = writeln!(out, "  slope     {:.6e}", p.slope);
            let _ = writeln!(out, "  intercept {:.6}", p.intercept);
        }
        FittedParams::Joint(p) => {
            let _ = writeln!(out, "  c_m   {:.6}", p.c_m);
            let _ = writeln!(out, "  alpha {:.6}", p.alpha);
            let _ = writeln!(out, "  c_t   {:.6}", p.c_t);
            let _ = writeln!(out, "  beta  {:.6}", p.beta);
            let _ = writeln!(out, "  floor {:.6}", p.floor);
        }
    }
    let _ = writeln!(out, "  R2 {:.6}  MSE {:.3e}", r.r_squared, r.mse);
    if r.zero_variance {
        let _ = writeln!(out, "  note: observed losses are constant");
    }
    let _ = writeln!(
        out,
        "  iterations {} ({}), starts {}, seed {}",
        r.iterations,
        if r.converged { "converged" } else { "not converged" },
        f.starts,
        f.seed
    );
}

fn render_plan(out: &mut String, p: &PlanReport) {
    let j = &p.params;
    let _ = writeln!(
        out,
        "plan with c_m={} alpha={} c_t={} beta={} floor={}",
        j.c_m, j.alpha, j.c_t, j.beta, j.floor
    );
    let _ = writeln!(out, "{:>10} {:>10} {:>10} {:>7} {:>7} {:>14}", "window", "T_opt", "M_opt", "tokens", "frames", "best");
    for r in &p.rows {
        let _ = writeln!(
            out,
            "{:>10} {:>10.2} {:>10.2} {:>7} {:>7} {:>14}{}",
            r.window,
            r.t_opt,
            r.m_opt,
            r.tokens,
            r.frames,
            format!("<{},{}>", r.best.frames, r.best.tokens),
            if r.over_budget { "  (rounded estimate exceeds window)" } else { "" }
        );
    }
    for a in &p.allocations {
        let _ = writeln!(out, "window {}: ranked configurations", a.window);
        for (i, c) in a.snapped.iter().enumerate() {
            let _ = writeln!(
                out,
                "  {:>3}. <{},{}> total {} loss {:.6}",
                i + 1,
                c.frames,
                c.tokens,
                c.total,
                c.predicted_loss.unwrap_or(f64::NAN)
            );
        }
    }
}

fn render_table(out: &mut String, t: &TableReport) {
    let _ = write!(out, "{:>6} {:>6} {:>7}", "frames", "tokens", "total");
    for c in &t.columns {
        let _ = write!(out, " {:>15}", c);
    }
    let _ = writeln!(out, " {:>9} {:>9}", "avg", "published");
    let cell = |s: String, best: bool, second: bool| {
        if best {
            format!("*{s}")
        } else if second {
            format!("_{s}")
        } else {
            s
        }
    };
    let has = |v: &[String], c: &str| v.iter().any(|x| x == c);
    for r in &t.rows {
        let _ = write!(out, "{:>6} {:>6} {:>7}", r.frames, r.tokens, r.total);
        for s in &r.scores {
            let c = cell(
                format_2dp(s.value),
                has(&r.best, &s.benchmark),
                has(&r.second_best, &s.benchmark),
            );
            let _ = write!(out, " {c:>15}");
        }
        let avg = cell(r.average_display.clone(), has(&r.best, "avg"), has(&r.second_best, "avg"));
        let published = r.published_avg.map(format_2dp).unwrap_or_else(|| "-".into());
        let _ = write!(out, " {avg:>9} {published:>9}");
        if let Some(l) = r.loss {
            let _ = write!(out, "  loss {}", cell(format!("{l:.3}"), has(&r.best, "loss"), false));
        }
        let _ = writeln!(out);
    }
    let _ = writeln!(out, "* best, _ second best");
}
