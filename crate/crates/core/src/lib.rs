//! Tracking-by-detection for UAV breeding-site surveys.
//!
//! Per-frame detections are cleaned by confidence thresholding and class-aware
//! NMS ([`suppression`]), linked into persistent instances by time-window IOU
//! association ([`tracker`]), and scored against labels both frame by frame
//! and instance by instance ([`eval`]). [`synth`] produces deterministic
//! scenes with known ground truth; [`io`] and [`report`] hold the file
//! formats, and [`cli`] binds it all into the `foci` binary.

pub mod cli;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod io;
pub mod model;
pub mod par;
pub mod report;
pub mod suppression;
pub mod synth;
pub mod tracker;

pub use error::{Error, Result};
pub use geometry::{area, cosine_distance, iou, BBox, Vec2};
pub use model::{
    displacement_vector, ClassId, ClassRegistry, Detection, Frame, GroundTruthInstance, Instance,
    LabelPoint, Track, TrackPoint,
};
pub use par::Execution;
