use serde::{Deserialize, Serialize};

use super::{closed_form_opt, loss_at, AllocError, Budget};
use crate::scaling_fit::JointParams;

pub const DEFAULT_MAX_FRAMES: u32 = 1024;

/// Losses closer than this are treated as equal; the tie goes to more frames.
const TIE_EPS: f64 = 1e-12;

/// Realizable tokens-per-frame values, all perfect squares, kept in descending order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSet(Vec<u32>);

impl TokenSet {
    pub fn new(mut values: Vec<u32>) -> Result<Self, AllocError> {
        if values.is_empty() {
            return Err(AllocError::InvalidTokenSet("empty".into()));
        }
        for &v in &values {
            let r = (f64::from(v)).sqrt().round() as u32;
            if v == 0 || r * r != v {
                return Err(AllocError::InvalidTokenSet(format!("{v} is not a positive perfect square")));
            }
        }
        values.sort_unstable_by(|a, b| b.cmp(a));
        values.dedup();
        Ok(Self(values))
    }

    /// Token counts reachable by non-overlapping mean pooling of an `n × n`
    /// grid: `⌈n/p⌉²` for `p in 1..=n`.
    pub fn from_grid(side: u32) -> Self {
        let mut v: Vec<u32> = (1..=side).map(|p| side.div_ceil(p).pow(2)).collect();
        v.sort_unstable_by(|a, b| b.cmp(a));
        v.dedup();
        Self(v)
    }

    pub fn values(&self) -> &[u32] {
        &self.0
    }
}

impl Default for TokenSet {
    fn default() -> Self {
        Self::from_grid(27)
    }
}

/// An integer `⟨frames, tokens⟩` configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeasibleConfig {
    pub frames: u32,
    pub tokens: u32,
    pub total: u64,
    pub predicted_loss: Option<f64>,
}

impl FeasibleConfig {
    fn new(frames: u32, tokens: u32) -> Self {
        Self {
            frames,
            tokens,
            total: u64::from(frames) * u64::from(tokens),
            predicted_loss: None,
        }
    }

    fn with_loss(mut self, params: &JointParams) -> Self {
        self.predicted_loss = Some(loss_at(params, self.tokens.into(), self.frames.into()));
        self
    }
}

/// All `⟨T, M⟩` with `M` in the token set, `1 <= T <= max_frames` and
/// `T·M <= L`, ordered by descending `M` then ascending `T`.
pub fn enumerate_feasible(budget: Budget, tokens: &TokenSet, max_frames: u32) -> Vec<FeasibleConfig> {
    let mut out = Vec::new();
    for &m in tokens.values() {
        let cap = (budget.window() / u64::from(m)).min(u64::from(max_frames)) as u32;
        out.extend((1..=cap).map(|t| FeasibleConfig::new(t, m)));
    }
    out
}

fn better(candidate: &FeasibleConfig, incumbent: &FeasibleConfig) -> bool {
    let (c, i) = (candidate.predicted_loss.unwrap(), incumbent.predicted_loss.unwrap());
    c < i - TIE_EPS || ((c - i).abs() <= TIE_EPS && candidate.frames > incumbent.frames)
}

/// Exhaustive minimizer of the predicted loss over the feasible set.
pub fn grid_search_opt(
    params: &JointParams,
    budget: Budget,
    tokens: &TokenSet,
    max_frames: u32,
) -> Result<FeasibleConfig, AllocError> {
    enumerate_feasible(budget, tokens, max_frames)
        .into_iter()
        .map(|c| c.with_loss(params))
        .reduce(|best, c| if better(&c, &best) { c } else { best })
        .ok_or(AllocError::NoSolution { window: budget.window() })
}

/// Feasible configurations ranked by predicted loss, best first.
///
/// Equal losses put more frames first, then the configuration closest (in
/// log space) to the real-valued point `(t_opt, m_opt)`. The head of the list
/// is always the [`grid_search_opt`] answer.
pub fn snap_to_feasible(
    params: &JointParams,
    t_opt: f64,
    m_opt: f64,
    budget: Budget,
    tokens: &TokenSet,
    max_frames: u32,
) -> Result<Vec<FeasibleConfig>, AllocError> {
    let best = grid_search_opt(params, budget, tokens, max_frames)?;
    let distance = |c: &FeasibleConfig| {
        (f64::from(c.frames) / t_opt).ln().powi(2) + (f64::from(c.tokens) / m_opt).ln().powi(2)
    };
    let mut ranked: Vec<_> = enumerate_feasible(budget, tokens, max_frames)
        .into_iter()
        .map(|c| c.with_loss(params))
        .collect();
    ranked.sort_by(|a, b| {
        a.predicted_loss
            .unwrap()
            .total_cmp(&b.predicted_loss.unwrap())
            .then(b.frames.cmp(&a.frames))
            .then(distance(a).total_cmp(&distance(b)))
    });
    if let Some(pos) = ranked.iter().position(|c| c.frames == best.frames && c.tokens == best.tokens) {
        let head = ranked.remove(pos);
        ranked.insert(0, head);
    }
    Ok(ranked)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationResult {
    pub window: u64,
    pub t_opt: f64,
    pub m_opt: f64,
    pub predicted_loss_at_opt: f64,
    /// The real-valued point uses the whole window.
    pub constraint_active: bool,
    /// Ranked feasible configurations, best first.
    pub snapped: Vec<FeasibleConfig>,
}

/// Closed-form allocation plus the ranked integer configurations. `top`
/// truncates the ranked list.
pub fn allocate(
    params: &JointParams,
    budget: Budget,
    tokens: &TokenSet,
    max_frames: u32,
    top: Option<usize>,
) -> Result<AllocationResult, AllocError> {
    let (t_opt, m_opt) = closed_form_opt(params, budget)?;
    let mut snapped = snap_to_feasible(params, t_opt, m_opt, budget, tokens, max_frames)?;
    if let Some(k) = top {
        snapped.truncate(k);
    }
    let l = budget.window() as f64;
    Ok(AllocationResult {
        window: budget.window(),
        t_opt,
        m_opt,
        predicted_loss_at_opt: loss_at(params, m_opt, t_opt),
        constraint_active: t_opt * m_opt >= l * (1.0 - 1e-9),
        snapped,
    })
}

pub fn round_half_up(x: f64) -> u64 {
    (x + 0.5).floor() as u64
}

/// One line of a planning table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanRow {
    pub window: u64,
    pub t_opt: f64,
    pub m_opt: f64,
    /// `round_half_up(M_opt)`.
    pub tokens: u64,
    /// `round_half_up(T_opt)`.
    pub frames: u64,
    /// The rounded estimate's `tokens·frames` exceeds the window. The
    /// estimate is a target, not a configuration; `best` is always within budget.
    pub over_budget: bool,
    pub best: FeasibleConfig,
}

pub fn plan(
    params: &JointParams,
    budgets: &[Budget],
    tokens: &TokenSet,
    max_frames: u32,
) -> Result<Vec<PlanRow>, AllocError> {
    if budgets.is_empty() {
        return Err(AllocError::InvalidBudget);
    }
    budgets
        .iter()
        .map(|&b| {
            let (t_opt, m_opt) = closed_form_opt(params, b)?;
            let (frames, tok) = (round_half_up(t_opt), round_half_up(m_opt));
            Ok(PlanRow {
                window: b.window(),
                t_opt,
                m_opt,
                tokens: tok,
                frames,
                over_budget: frames * tok > b.window(),
                best: grid_search_opt(params, b, tokens, max_frames)?,
            })
        })
        .collect()
}
