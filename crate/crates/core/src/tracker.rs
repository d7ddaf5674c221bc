//! Time-window IOU association.
//!
//! Every instance seen within the last `time_window` frames stays a candidate.
//! Each new detection is matched one-to-one to a same-class candidate by
//! greedy descending IOU (at least `match_iou`); unmatched detections open new
//! tracks. There is no motion model and gaps are never interpolated.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{iou, BBox};
use crate::model::{ClassId, Detection, Frame, Track, TrackPoint};
use crate::par::Execution;
use crate::suppression::group_by_frame;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackerParams {
    /// Largest frame gap across which a candidate stays matchable.
    pub time_window: u32,
    /// Minimum IOU against the candidate's last box (inclusive).
    pub match_iou: f64,
}

impl Default for TrackerParams {
    fn default() -> Self {
        Self {
            time_window: 45,
            match_iou: 0.1,
        }
    }
}

impl TrackerParams {
    // negated comparisons also reject NaN
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        // values above 1 are accepted and simply never match
        if !(self.match_iou >= 0.0) {
            return Err(Error::Config(format!(
                "match_iou must be a non-negative number, got {}",
                self.match_iou
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub id: u64,
    pub class: ClassId,
    pub last_seen_frame: Frame,
    pub last_seen_bbox: BBox,
}

/// Live candidates, kept in ascending id order.
#[derive(Debug, Clone, Default)]
pub struct CandidateRegistry {
    active: Vec<Candidate>,
    next_id: u64,
}

impl CandidateRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn active(&self) -> &[Candidate] {
        &self.active
    }

    pub fn next_id(&self) -> u64 {
        self.next_id
    }

    /// Drop every candidate with `frame - last_seen_frame > time_window`.
    pub fn evict_stale(&mut self, frame: Frame, time_window: u32) {
        self.active
            .retain(|c| frame.saturating_sub(c.last_seen_frame) <= time_window);
    }

    /// Insert a candidate directly. Ids must be fresh and increasing.
    pub fn insert(&mut self, class: ClassId, frame: Frame, bbox: BBox) -> u64 {
        let id = self.next_id;
        self.next_id += 1;
        self.active.push(Candidate {
            id,
            class,
            last_seen_frame: frame,
            last_seen_bbox: bbox,
        });
        id
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Assignment {
    pub detection: Detection,
    pub track_id: u64,
    pub is_new: bool,
}

/// Associate one frame of detections with the registry and update it.
///
/// Output is in input order. Stale candidates are evicted first.
pub fn associate(
    frame_dets: &[Detection],
    registry: &mut CandidateRegistry,
    params: &TrackerParams,
) -> Result<Vec<Assignment>> {
    let Some(first) = frame_dets.first() else {
        return Ok(Vec::new());
    };
    let frame = first.frame;
    if let Some(other) = frame_dets.iter().find(|d| d.frame != frame) {
        return Err(Error::MixedFrames {
            expected: frame,
            found: other.frame,
        });
    }
    registry.evict_stale(frame, params.time_window);

    // (iou, candidate slot, detection index); slots follow ascending id
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (slot, cand) in registry.active.iter().enumerate() {
        for (di, d) in frame_dets.iter().enumerate() {
            if d.class != cand.class {
                continue;
            }
            let v = iou(&d.bbox, &cand.last_seen_bbox);
            if v >= params.match_iou {
                pairs.push((v, slot, di));
            }
        }
    }
    pairs.sort_by(|a, b| {
        b.0.total_cmp(&a.0)
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });

    let mut det_slot: Vec<Option<usize>> = vec![None; frame_dets.len()];
    let mut slot_taken = vec![false; registry.active.len()];
    for (_, slot, di) in pairs {
        if slot_taken[slot] || det_slot[di].is_some() {
            continue;
        }
        slot_taken[slot] = true;
        det_slot[di] = Some(slot);
    }

    let mut out = Vec::with_capacity(frame_dets.len());
    for (d, slot) in frame_dets.iter().zip(det_slot) {
        let assignment = match slot {
            Some(slot) => {
                let cand = &mut registry.active[slot];
                cand.last_seen_frame = frame;
                cand.last_seen_bbox = d.bbox;
                Assignment {
                    detection: *d,
                    track_id: cand.id,
                    is_new: false,
                }
            }
            None => Assignment {
                detection: *d,
                track_id: registry.insert(d.class, frame, d.bbox),
                is_new: true,
            },
        };
        out.push(assignment);
    }
    Ok(out)
}

/// Incremental per-video tracker: feed frames in order, collect tracks at the end.
#[derive(Debug, Clone, Default)]
pub struct Tracker {
    params: TrackerParams,
    registry: CandidateRegistry,
    tracks: Vec<Track>,
    last_frame: Option<Frame>,
}

impl Tracker {
    pub fn new(params: TrackerParams) -> Self {
        Self {
            params,
            ..Self::default()
        }
    }

    pub fn registry(&self) -> &CandidateRegistry {
        &self.registry
    }

    /// Process all detections of one frame. Frames must not go backwards.
    pub fn step(&mut self, frame_dets: &[Detection]) -> Result<Vec<Assignment>> {
        let Some(first) = frame_dets.first() else {
            return Ok(Vec::new());
        };
        if let Some(prev) = self.last_frame {
            if first.frame <= prev {
                return Err(Error::Config(format!(
                    "frame {} fed to tracker after frame {prev}",
                    first.frame
                )));
            }
        }
        let assignments = associate(frame_dets, &mut self.registry, &self.params)?;
        self.last_frame = Some(first.frame);
        for a in &assignments {
            let point = TrackPoint {
                frame: a.detection.frame,
                bbox: a.detection.bbox,
                conf: a.detection.conf,
            };
            if a.is_new {
                debug_assert_eq!(a.track_id as usize, self.tracks.len());
                self.tracks.push(Track {
                    id: a.track_id,
                    class: a.detection.class,
                    points: vec![point],
                });
            } else {
                self.tracks[a.track_id as usize].points.push(point);
            }
        }
        Ok(assignments)
    }

    /// All tracks, ascending id.
    pub fn finish(self) -> Vec<Track> {
        self.tracks
    }
}

fn order_by_frame(dets: &[Detection]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by_key(|&i| dets[i].frame);
    order
}

/// Track a whole video. Also returns the track id of every input detection,
/// aligned with `dets`.
pub fn track_video_with_ids(dets: &[Detection], params: &TrackerParams) -> (Vec<Track>, Vec<u64>) {
    let order = order_by_frame(dets);
    let mut ids = vec![0u64; dets.len()];
    let mut tracker = Tracker::new(*params);
    let mut start = 0;
    let mut frame_buf = Vec::new();
    while start < order.len() {
        let frame = dets[order[start]].frame;
        let mut end = start;
        while end < order.len() && dets[order[end]].frame == frame {
            end += 1;
        }
        frame_buf.clear();
        frame_buf.extend(order[start..end].iter().map(|&i| dets[i]));
        // frames are strictly increasing and single-valued here, so step cannot fail
        let assignments = tracker.step(&frame_buf).expect("grouped frames are ordered");
        for (a, &i) in assignments.iter().zip(&order[start..end]) {
            ids[i] = a.track_id;
        }
        start = end;
    }
    (tracker.finish(), ids)
}

/// Track a whole video. Input need not be sorted; detections within a frame
/// keep their relative order.
pub fn track_video(dets: &[Detection], params: &TrackerParams) -> Vec<Track> {
    let mut tracker = Tracker::new(*params);
    for frame in group_by_frame(dets) {
        tracker.step(&frame).expect("grouped frames are ordered");
    }
    tracker.finish()
}

/// Independent videos, each with its own registry.
pub fn track_videos(videos: &[Vec<Detection>], params: &TrackerParams, exec: Execution) -> Vec<Vec<Track>> {
    exec.map(videos, |dets| track_video(dets, params))
}
