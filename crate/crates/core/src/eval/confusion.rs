//! Frame-level confusion matrices with a trailing background row/column.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::geometry::{iou, BBox};
use crate::model::{ClassId, Frame, Instance};
use crate::par::Execution;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabeledBox {
    pub class: ClassId,
    pub bbox: BBox,
}

/// Boxes per frame, ascending frame order.
pub type FrameBoxes = BTreeMap<Frame, Vec<LabeledBox>>;

/// Flatten instances into per-frame boxes.
pub fn frames_from_instances<I: Instance>(instances: &[I]) -> FrameBoxes {
    let mut frames = FrameBoxes::new();
    for inst in instances {
        for i in 0..inst.len() {
            let (frame, bbox) = inst.sight(i);
            frames.entry(frame).or_default().push(LabeledBox {
                class: inst.class(),
                bbox,
            });
        }
    }
    frames
}

/// `(K+1) x (K+1)` counts. Rows are ground truth, columns predictions; index
/// `K` is background. The background/background cell stays 0.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    num_classes: usize,
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(num_classes: usize) -> Self {
        Self {
            num_classes,
            counts: vec![vec![0; num_classes + 1]; num_classes + 1],
        }
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn background(&self) -> usize {
        self.num_classes
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn get(&self, row: usize, col: usize) -> u64 {
        self.counts[row][col]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn is_diagonal(&self) -> bool {
        self.counts
            .iter()
            .enumerate()
            .all(|(r, row)| row.iter().enumerate().all(|(c, &v)| r == c || v == 0))
    }

    fn add(&mut self, other: &ConfusionMatrix) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    fn bump(&mut self, row: usize, col: usize) {
        self.counts[row][col] += 1;
    }
}

/// Class-agnostic greedy one-to-one matching of a single frame. Returns the
/// matched `(gt index, pred index)` pairs.
pub fn match_frame(gt: &[LabeledBox], pred: &[LabeledBox], frame_iou: f64) -> Vec<(usize, usize)> {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (gi, g) in gt.iter().enumerate() {
        for (pi, p) in pred.iter().enumerate() {
            let v = iou(&g.bbox, &p.bbox);
            if v >= frame_iou {
                pairs.push((v, gi, pi));
            }
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut gt_used = vec![false; gt.len()];
    let mut pred_used = vec![false; pred.len()];
    let mut out = Vec::new();
    for (_, gi, pi) in pairs {
        if !gt_used[gi] && !pred_used[pi] {
            gt_used[gi] = true;
            pred_used[pi] = true;
            out.push((gi, pi));
        }
    }
    out
}

fn frame_counts(gt: &[LabeledBox], pred: &[LabeledBox], frame_iou: f64, num_classes: usize) -> ConfusionMatrix {
    let mut m = ConfusionMatrix::new(num_classes);
    let bg = m.background();
    let mut gt_used = vec![false; gt.len()];
    let mut pred_used = vec![false; pred.len()];
    for (gi, pi) in match_frame(gt, pred, frame_iou) {
        gt_used[gi] = true;
        pred_used[pi] = true;
        m.bump(gt[gi].class.index(), pred[pi].class.index());
    }
    for (g, used) in gt.iter().zip(gt_used) {
        if !used {
            m.bump(g.class.index(), bg);
        }
    }
    for (p, used) in pred.iter().zip(pred_used) {
        if !used {
            m.bump(bg, p.class.index());
        }
    }
    m
}

/// Sum of per-frame confusion counts over every frame present in either input.
///
/// `num_classes` is widened if any box carries a larger class id.
pub fn frame_confusion(
    gt_frames: &FrameBoxes,
    pred_frames: &FrameBoxes,
    frame_iou: f64,
    num_classes: usize,
) -> ConfusionMatrix {
    frame_confusion_with(gt_frames, pred_frames, frame_iou, num_classes, Execution::default())
}

pub fn frame_confusion_with(
    gt_frames: &FrameBoxes,
    pred_frames: &FrameBoxes,
    frame_iou: f64,
    num_classes: usize,
    exec: Execution,
) -> ConfusionMatrix {
    let k = gt_frames
        .values()
        .chain(pred_frames.values())
        .flatten()
        .map(|b| b.class.index() + 1)
        .fold(num_classes, usize::max);

    let mut frames: Vec<Frame> = gt_frames.keys().chain(pred_frames.keys()).copied().collect();
    frames.sort_unstable();
    frames.dedup();

    let empty: Vec<LabeledBox> = Vec::new();
    let partial = exec.map(&frames, |f| {
        let g = gt_frames.get(f).unwrap_or(&empty);
        let p = pred_frames.get(f).unwrap_or(&empty);
        frame_counts(g, p, frame_iou, k)
    });
    let mut total = ConfusionMatrix::new(k);
    for m in &partial {
        total.add(m);
    }
    total
}

/// Each row divided by its sum; all-zero rows stay zero.
pub fn normalize_rows(m: &ConfusionMatrix) -> Vec<Vec<f64>> {
    m.counts
        .iter()
        .map(|row| {
            let sum: u64 = row.iter().sum();
            row.iter()
                .map(|&v| if sum == 0 { 0.0 } else { v as f64 / sum as f64 })
                .collect()
        })
        .collect()
}
