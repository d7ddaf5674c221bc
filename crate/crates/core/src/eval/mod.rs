//! Track evaluation at two granularities: per-frame box confusion and
//! per-instance spatio-temporal matching.

pub mod confusion;
pub mod instance;

use serde::{Deserialize, Serialize};

pub use confusion::{
    frame_confusion, frame_confusion_with, frames_from_instances, match_frame, normalize_rows,
    ConfusionMatrix, FrameBoxes, LabeledBox,
};
pub use instance::{
    match_instance_pair, match_instances, ClassCounts, InstanceMatch, InstanceMatchParams,
    InstanceReport, MatchVerdict, PairDiagnostics, BOUNDARY_EPS,
};

use crate::model::{GroundTruthInstance, Track};
use crate::par::Execution;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalParams {
    pub instance: InstanceMatchParams,
    /// Minimum IOU for a frame-level box match (inclusive).
    pub frame_iou: f64,
}

impl Default for EvalParams {
    fn default() -> Self {
        Self {
            instance: InstanceMatchParams::default(),
            frame_iou: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvalMode {
    FrameLevel,
    InstanceLevel,
    #[default]
    Both,
}

impl EvalMode {
    pub fn frame_level(self) -> bool {
        matches!(self, EvalMode::FrameLevel | EvalMode::Both)
    }

    pub fn instance_level(self) -> bool {
        matches!(self, EvalMode::InstanceLevel | EvalMode::Both)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub params: EvalParams,
    pub instance: Option<InstanceReport>,
    pub frame: Option<ConfusionMatrix>,
}

/// Evaluate one video's tracks against its labels.
pub fn evaluate(
    gts: &[GroundTruthInstance],
    tracks: &[Track],
    params: &EvalParams,
    mode: EvalMode,
    num_classes: usize,
) -> EvalReport {
    let instance = mode
        .instance_level()
        .then(|| match_instances(gts, tracks, &params.instance, num_classes));
    let frame = mode.frame_level().then(|| {
        frame_confusion_with(
            &frames_from_instances(gts),
            &frames_from_instances(tracks),
            params.frame_iou,
            num_classes,
            Execution::Sequential,
        )
    });
    EvalReport {
        params: *params,
        instance,
        frame,
    }
}

/// Evaluate independent videos, one work item per video.
pub fn evaluate_videos(
    videos: &[(Vec<GroundTruthInstance>, Vec<Track>)],
    params: &EvalParams,
    mode: EvalMode,
    num_classes: usize,
    exec: Execution,
) -> Vec<EvalReport> {
    exec.map(videos, |(gts, tracks)| evaluate(gts, tracks, params, mode, num_classes))
}
