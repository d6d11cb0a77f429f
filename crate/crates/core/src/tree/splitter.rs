//! Split evaluation shared by the dense and CSC growers.
//!
//! A feature's values in a node are presented as three blocks: strictly
//! negative entries, a count of zeros, and strictly positive entries. The
//! dense grower builds these blocks from a column scan and the sparse grower
//! gets them from `extract_nnz`; everything downstream is common code, so both
//! inputs yield bit-identical splits.

use std::cmp::Ordering;

use super::criterion::{decrease, Criterion};

/// Best split found at a node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitRecord {
    pub feature: usize,
    pub threshold: f64,
    /// Impurity decrease at the node (not weighted by the node size).
    pub improvement: f64,
}

/// Midpoint of two consecutive distinct sorted values `a < b`, falling back to
/// `a` when rounding would put it at or above `b`.
#[inline]
pub fn midpoint(a: f64, b: f64) -> f64 {
    let m = a / 2.0 + b / 2.0;
    if m.is_finite() && m < b && m >= a {
        m
    } else {
        a
    }
}

pub(crate) fn by_value_then_id(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

/// Targets and node totals needed to score candidate splits.
pub(crate) struct ScoreCtx<'a> {
    pub criterion: Criterion,
    /// Row-major n x d targets.
    pub y: &'a [f64],
    pub d: usize,
    pub weights: Option<&'a [f64]>,
    pub total_w: f64,
    pub total_s: &'a [f64],
    pub parent_impurity: f64,
}

/// Accumulator for one side of a split, with scratch space for the other side.
pub(crate) struct SideAcc {
    w: f64,
    s: Vec<f64>,
    other_s: Vec<f64>,
}

impl SideAcc {
    pub fn new(d: usize) -> Self {
        SideAcc {
            w: 0.0,
            s: vec![0.0; d],
            other_s: vec![0.0; d],
        }
    }

    fn reset(&mut self) {
        self.w = 0.0;
        self.s.iter_mut().for_each(|v| *v = 0.0);
    }

    #[inline]
    fn add(&mut self, ctx: &ScoreCtx, id: usize) {
        let wi = ctx.weights.map_or(1.0, |w| w[id]);
        self.w += wi;
        let row = &ctx.y[id * ctx.d..(id + 1) * ctx.d];
        for (s, v) in self.s.iter_mut().zip(row) {
            *s += wi * v;
        }
    }

    /// Impurity decrease with the accumulated samples on the left (`acc_is_left`)
    /// or on the right, the other side being the complement in the node.
    #[inline]
    fn score(&mut self, ctx: &ScoreCtx, acc_is_left: bool) -> f64 {
        let other_w = ctx.total_w - self.w;
        for ((o, t), s) in self.other_s.iter_mut().zip(ctx.total_s).zip(&self.s) {
            *o = t - s;
        }
        if self.w <= 0.0 || other_w <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let (wl, sl, wr, sr) = if acc_is_left {
            (self.w, &self.s, other_w, &self.other_s)
        } else {
            (other_w, &self.other_s, self.w, &self.s)
        };
        decrease(ctx.criterion, ctx.parent_impurity, ctx.total_w, ctx.total_s, wl, sl, wr, sr)
    }
}

/// A feature's values inside a node, split by sign.
pub(crate) struct Blocks<'a> {
    pub neg: &'a [(f64, usize)],
    pub n_zero: usize,
    pub pos: &'a [(f64, usize)],
}

impl Blocks<'_> {
    pub fn min(&self) -> f64 {
        if !self.neg.is_empty() {
            self.neg.iter().map(|e| e.0).fold(f64::INFINITY, f64::min)
        } else if self.n_zero > 0 {
            0.0
        } else {
            self.pos.iter().map(|e| e.0).fold(f64::INFINITY, f64::min)
        }
    }

    pub fn max(&self) -> f64 {
        if !self.pos.is_empty() {
            self.pos.iter().map(|e| e.0).fold(f64::NEG_INFINITY, f64::max)
        } else if self.n_zero > 0 {
            0.0
        } else {
            self.neg.iter().map(|e| e.0).fold(f64::NEG_INFINITY, f64::max)
        }
    }
}

pub(crate) enum FeatureEval {
    Constant,
    Candidate { threshold: f64, gain: f64 },
}

/// Exhaustive scan over the midpoints of consecutive distinct values.
/// `neg` and `pos` must be sorted by (value, id). Among equal gains the lowest
/// threshold wins.
pub(crate) fn scan_sorted(ctx: &ScoreCtx, b: &Blocks, acc: &mut SideAcc) -> FeatureEval {
    let (neg, pos) = (b.neg, b.pos);
    let lo = neg.first().map(|e| e.0).unwrap_or(if b.n_zero > 0 { 0.0 } else { pos.first().map_or(0.0, |e| e.0) });
    let hi = pos.last().map(|e| e.0).unwrap_or(if b.n_zero > 0 { 0.0 } else { neg.last().map_or(0.0, |e| e.0) });
    if lo == hi {
        return FeatureEval::Constant;
    }
    let mut best_neg: Option<(f64, f64)> = None;
    // Negative block: left side grows upward from the smallest value.
    acc.reset();
    for k in 0..neg.len() {
        acc.add(ctx, neg[k].1);
        let next = if k + 1 < neg.len() {
            neg[k + 1].0
        } else if b.n_zero > 0 {
            0.0
        } else {
            // The boundary into the positive block is scored below.
            break;
        };
        if next == neg[k].0 {
            continue;
        }
        let g = acc.score(ctx, true);
        if best_neg.is_none_or(|(_, bg)| g > bg) {
            best_neg = Some((midpoint(neg[k].0, next), g));
        }
    }
    let mut best_pos: Option<(f64, f64)> = None;
    // Positive block: right side grows downward from the largest value.
    acc.reset();
    for k in (0..pos.len()).rev() {
        acc.add(ctx, pos[k].1);
        let below = if k > 0 {
            pos[k - 1].0
        } else if b.n_zero > 0 {
            0.0
        } else if let Some(last) = neg.last() {
            last.0
        } else {
            break;
        };
        if below == pos[k].0 {
            continue;
        }
        let g = acc.score(ctx, false);
        if best_pos.is_none_or(|(_, bg)| g >= bg) {
            best_pos = Some((midpoint(below, pos[k].0), g));
        }
    }
    let best = match (best_neg, best_pos) {
        (Some(n), Some(p)) => {
            if p.1 > n.1 {
                p
            } else {
                n
            }
        }
        (Some(n), None) => n,
        (None, Some(p)) => p,
        (None, None) => return FeatureEval::Constant,
    };
    FeatureEval::Candidate {
        threshold: best.0,
        gain: best.1,
    }
}

/// Scores the single threshold `tau` (with `min <= tau < max`). `neg` and `pos`
/// must be in ascending sample-id order.
pub(crate) fn score_threshold(ctx: &ScoreCtx, b: &Blocks, tau: f64, acc: &mut SideAcc) -> f64 {
    acc.reset();
    if tau < 0.0 {
        for &(v, id) in b.neg {
            if v <= tau {
                acc.add(ctx, id);
            }
        }
        acc.score(ctx, true)
    } else {
        for &(v, id) in b.pos {
            if v > tau {
                acc.add(ctx, id);
            }
        }
        acc.score(ctx, false)
    }
}

/// Uniform threshold in `[min, max)` from a uniform `u` in `[0, 1)`.
pub(crate) fn draw_threshold(min: f64, max: f64, u: f64) -> f64 {
    let t = min + (max - min) * u;
    if t >= max || !t.is_finite() {
        min
    } else {
        t
    }
}
