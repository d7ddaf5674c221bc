//! Instance-level matching of labeled instances against predicted tracks.
//!
//! A pair matches when it shares a class, its first and last sights are close
//! in time and overlap in space, and both instances moved in nearly the same
//! direction. Qualifying pairs are then assigned one-to-one.

use serde::{Deserialize, Serialize};

use crate::geometry::{cosine_distance, iou};
use crate::model::{displacement_vector, ClassId, Instance};

/// Slack on the real-valued criteria so that a value landing on a decimal
/// threshold (e.g. a cosine distance of 0.01 computed as 0.010000000000000009)
/// counts as on the boundary.
pub const BOUNDARY_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InstanceMatchParams {
    /// First and last sights must differ by strictly fewer frames than this.
    pub frame_tol: u32,
    /// Minimum first-sight and last-sight IOU (inclusive).
    pub sight_iou: f64,
    /// Maximum displacement cosine distance (inclusive).
    pub max_dcos: f64,
}

impl Default for InstanceMatchParams {
    fn default() -> Self {
        Self {
            frame_tol: 45,
            sight_iou: 0.1,
            max_dcos: 1e-2,
        }
    }
}

/// Per-criterion values behind a verdict.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairDiagnostics {
    pub same_class: bool,
    pub first_frame_delta: u32,
    pub last_frame_delta: u32,
    pub first_iou: f64,
    pub last_iou: f64,
    pub dcos: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchVerdict {
    pub matched: bool,
    pub diagnostics: PairDiagnostics,
}

impl PairDiagnostics {
    pub fn passes(&self, params: &InstanceMatchParams) -> bool {
        self.same_class
            && self.first_frame_delta < params.frame_tol
            && self.last_frame_delta < params.frame_tol
            && self.first_iou >= params.sight_iou - BOUNDARY_EPS
            && self.last_iou >= params.sight_iou - BOUNDARY_EPS
            && self.dcos <= params.max_dcos + BOUNDARY_EPS
    }
}

/// Evaluate all four criteria for one labeled/predicted pair.
///
/// Every criterion is symmetric, so the argument order never changes the verdict.
pub fn match_instance_pair<L, P>(label: &L, pred: &P, params: &InstanceMatchParams) -> MatchVerdict
where
    L: Instance + ?Sized,
    P: Instance + ?Sized,
{
    let (lf0, lb0) = label.first_sight();
    let (lfn, lbn) = label.last_sight();
    let (pf0, pb0) = pred.first_sight();
    let (pfn, pbn) = pred.last_sight();
    let diagnostics = PairDiagnostics {
        same_class: label.class() == pred.class(),
        first_frame_delta: lf0.abs_diff(pf0),
        last_frame_delta: lfn.abs_diff(pfn),
        first_iou: iou(&lb0, &pb0),
        last_iou: iou(&lbn, &pbn),
        dcos: cosine_distance(&displacement_vector(label), &displacement_vector(pred)),
    };
    MatchVerdict {
        matched: diagnostics.passes(params),
        diagnostics,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ClassCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InstanceMatch {
    pub gt_id: u64,
    pub pred_id: u64,
    pub class: ClassId,
    #[serde(flatten)]
    pub diagnostics: PairDiagnostics,
}

/// Per-class TP/FP/FN (indexed by class id) plus the committed matches.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct InstanceReport {
    pub per_class: Vec<ClassCounts>,
    pub matches: Vec<InstanceMatch>,
}

impl InstanceReport {
    pub fn counts(&self, class: ClassId) -> ClassCounts {
        self.per_class.get(class.index()).copied().unwrap_or_default()
    }

    pub fn totals(&self) -> ClassCounts {
        self.per_class.iter().fold(ClassCounts::default(), |acc, c| ClassCounts {
            tp: acc.tp + c.tp,
            fp: acc.fp + c.fp,
            fn_: acc.fn_ + c.fn_,
        })
    }

    /// TP / (TP + FN) over all classes; 1 when there are no labeled instances.
    pub fn recall(&self) -> f64 {
        let t = self.totals();
        if t.tp + t.fn_ == 0 {
            1.0
        } else {
            t.tp as f64 / (t.tp + t.fn_) as f64
        }
    }
}

/// One-to-one assignment among qualifying pairs, committed greedily by
/// descending first-sight IOU (ties: lower label id, then lower track id).
///
/// `num_classes` sets the minimum length of `per_class`.
pub fn match_instances<L, P>(
    gts: &[L],
    preds: &[P],
    params: &InstanceMatchParams,
    num_classes: usize,
) -> InstanceReport
where
    L: Instance,
    P: Instance,
{
    let mut candidates: Vec<(usize, usize, PairDiagnostics)> = Vec::new();
    for (gi, g) in gts.iter().enumerate() {
        for (pi, p) in preds.iter().enumerate() {
            if g.class() != p.class() {
                continue;
            }
            let verdict = match_instance_pair(g, p, params);
            if verdict.matched {
                candidates.push((gi, pi, verdict.diagnostics));
            }
        }
    }
    candidates.sort_by(|a, b| {
        b.2.first_iou
            .total_cmp(&a.2.first_iou)
            .then(gts[a.0].id().cmp(&gts[b.0].id()))
            .then(preds[a.1].id().cmp(&preds[b.1].id()))
    });

    let mut gt_used = vec![false; gts.len()];
    let mut pred_used = vec![false; preds.len()];
    let mut matches = Vec::new();
    for (gi, pi, diagnostics) in candidates {
        if gt_used[gi] || pred_used[pi] {
            continue;
        }
        gt_used[gi] = true;
        pred_used[pi] = true;
        matches.push(InstanceMatch {
            gt_id: gts[gi].id(),
            pred_id: preds[pi].id(),
            class: gts[gi].class(),
            diagnostics,
        });
    }

    let width = gts
        .iter()
        .map(|g| g.class().index() + 1)
        .chain(preds.iter().map(|p| p.class().index() + 1))
        .fold(num_classes, usize::max);
    let mut per_class = vec![ClassCounts::default(); width];
    for (g, used) in gts.iter().zip(&gt_used) {
        let c = &mut per_class[g.class().index()];
        if *used {
            c.tp += 1;
        } else {
            c.fn_ += 1;
        }
    }
    for (p, used) in preds.iter().zip(&pred_used) {
        if !*used {
            per_class[p.class().index()].fp += 1;
        }
    }
    matches.sort_by_key(|m| (m.gt_id, m.pred_id));
    InstanceReport { per_class, matches }
}
