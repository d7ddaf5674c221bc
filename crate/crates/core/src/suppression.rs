//! Detector post-processing: confidence thresholding and class-aware greedy NMS.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::iou;
use crate::model::Detection;
use crate::par::Execution;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuppressionParams {
    /// Detections with `conf >= conf_thresh` survive.
    pub conf_thresh: f64,
    /// A same-class overlap with `iou >= nms_iou` against a kept box suppresses.
    pub nms_iou: f64,
}

impl Default for SuppressionParams {
    fn default() -> Self {
        Self {
            conf_thresh: 0.5,
            nms_iou: 0.5,
        }
    }
}

impl SuppressionParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("conf_thresh", self.conf_thresh), ("nms_iou", self.nms_iou)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        Ok(())
    }
}

/// Keep detections with `conf >= conf_thresh`, preserving order.
pub fn confidence_filter(dets: &[Detection], conf_thresh: f64) -> Vec<Detection> {
    dets.iter().filter(|d| d.conf >= conf_thresh).copied().collect()
}

/// Descending confidence, then smaller x, then smaller y.
fn rank(a: &Detection, b: &Detection) -> Ordering {
    b.conf
        .total_cmp(&a.conf)
        .then(a.bbox.x.total_cmp(&b.bbox.x))
        .then(a.bbox.y.total_cmp(&b.bbox.y))
}

/// Greedy class-aware NMS over the detections of a single frame.
///
/// The result is sorted by descending confidence.
pub fn nms(dets: &[Detection], nms_iou: f64) -> Result<Vec<Detection>> {
    if let Some(first) = dets.first() {
        if let Some(other) = dets.iter().find(|d| d.frame != first.frame) {
            return Err(Error::MixedFrames {
                expected: first.frame,
                found: other.frame,
            });
        }
    }
    Ok(nms_unchecked(dets, nms_iou))
}

fn nms_unchecked(dets: &[Detection], nms_iou: f64) -> Vec<Detection> {
    let mut order: Vec<&Detection> = dets.iter().collect();
    // stable sort: full ties keep input order
    order.sort_by(|a, b| rank(a, b));

    let mut kept: Vec<Detection> = Vec::with_capacity(order.len());
    for d in order {
        let suppressed = kept
            .iter()
            .any(|k| k.class == d.class && iou(&k.bbox, &d.bbox) >= nms_iou);
        if !suppressed {
            kept.push(*d);
        }
    }
    kept
}

/// Split a stream into per-frame groups in ascending frame order; input order
/// is kept inside each group.
pub fn group_by_frame(dets: &[Detection]) -> Vec<Vec<Detection>> {
    let mut sorted = dets.to_vec();
    sorted.sort_by_key(|d| d.frame);
    let mut groups: Vec<Vec<Detection>> = Vec::new();
    for d in sorted {
        match groups.last_mut() {
            Some(g) if g[0].frame == d.frame => g.push(d),
            _ => groups.push(vec![d]),
        }
    }
    groups
}

/// Per frame: confidence filter, then NMS. Frames come out in ascending order.
pub fn suppress_stream(dets: &[Detection], params: &SuppressionParams) -> Vec<Detection> {
    suppress_stream_with(dets, params, Execution::default())
}

pub fn suppress_stream_with(
    dets: &[Detection],
    params: &SuppressionParams,
    exec: Execution,
) -> Vec<Detection> {
    let groups = group_by_frame(dets);
    exec.map(&groups, |frame| {
        let confident = confidence_filter(frame, params.conf_thresh);
        nms_unchecked(&confident, params.nms_iou)
    })
    .into_iter()
    .flatten()
    .collect()
}
