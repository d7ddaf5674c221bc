//! JSON evaluation report: per-class instance counts, the frame-level
//! confusion matrix (raw and row-normalized) and the parameters used.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{normalize_rows, ClassCounts, EvalMode, EvalParams, EvalReport, PairDiagnostics};
use crate::model::{ClassId, ClassRegistry};

pub const TOOL_NAME: &str = "foci";
pub const BACKGROUND_LABEL: &str = "background";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassRow {
    pub class: String,
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchRow {
    pub gt_id: u64,
    pub pred_id: u64,
    pub class: String,
    #[serde(flatten)]
    pub diagnostics: PairDiagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSection {
    pub per_class: Vec<ClassRow>,
    pub totals: ClassCounts,
    pub matches: Vec<MatchRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameSection {
    /// Row/column labels; the last one is the background pseudo-class.
    pub labels: Vec<String>,
    /// Rows are ground truth, columns predictions.
    pub counts: Vec<Vec<u64>>,
    pub normalized: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub tool: String,
    pub version: String,
    pub mode: EvalMode,
    pub params: EvalParams,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub instance_level: Option<InstanceSection>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub frame_level: Option<FrameSection>,
}

impl ReportFile {
    pub fn new(report: &EvalReport, mode: EvalMode, registry: &ClassRegistry) -> Self {
        let name = |i: usize| registry.name(ClassId(i as u16)).to_string();
        let instance_level = report.instance.as_ref().map(|r| InstanceSection {
            per_class: r
                .per_class
                .iter()
                .enumerate()
                .map(|(i, c)| ClassRow {
                    class: name(i),
                    tp: c.tp,
                    fp: c.fp,
                    fn_: c.fn_,
                })
                .collect(),
            totals: r.totals(),
            matches: r
                .matches
                .iter()
                .map(|m| MatchRow {
                    gt_id: m.gt_id,
                    pred_id: m.pred_id,
                    class: registry.name(m.class).to_string(),
                    diagnostics: m.diagnostics,
                })
                .collect(),
        });
        let frame_level = report.frame.as_ref().map(|m| FrameSection {
            labels: (0..m.num_classes())
                .map(name)
                .chain(std::iter::once(BACKGROUND_LABEL.to_string()))
                .collect(),
            counts: m.counts().to_vec(),
            normalized: normalize_rows(m),
        });
        Self {
            tool: TOOL_NAME.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            mode,
            params: report.params,
            instance_level,
            frame_level,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report always serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn class_row(&self, class: &str) -> Option<&ClassRow> {
        self.instance_level
            .as_ref()?
            .per_class
            .iter()
            .find(|r| r.class == class)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::evaluate;
    use crate::geometry::BBox;
    use crate::model::{Track, TrackPoint};

    #[test]
    fn json_roundtrip_is_lossless() {
        let tracks = vec![Track {
            id: 0,
            class: ClassId::TIRE,
            points: vec![
                TrackPoint { frame: 0, bbox: BBox::new(0.1, 0.2, 10.0, 10.0), conf: 0.9 },
                TrackPoint { frame: 5, bbox: BBox::new(1.0 / 3.0, 0.7, 10.0, 10.0), conf: 0.9 },
            ],
        }];
        let gts: Vec<_> = tracks.iter().map(Into::into).collect();
        let mut other = tracks.clone();
        other[0].points[1].bbox.w += 0.123456789;
        let report = evaluate(&gts, &other, &EvalParams::default(), EvalMode::Both, 6);
        let file = ReportFile::new(&report, EvalMode::Both, &ClassRegistry::default());
        let text = file.to_json();
        assert_eq!(ReportFile::from_json(&text).unwrap(), file);
        assert_eq!(file.frame_level.as_ref().unwrap().labels.last().unwrap(), "background");
        assert_eq!(file.class_row("tire").unwrap().tp, 1);
        assert!(text.contains("\"fn\": 0"));
    }

    #[test]
    fn sections_follow_mode() {
        let report = evaluate(&[], &[], &EvalParams::default(), EvalMode::FrameLevel, 6);
        let file = ReportFile::new(&report, EvalMode::FrameLevel, &ClassRegistry::default());
        assert!(file.instance_level.is_none());
        assert!(!file.to_json().contains("instance_level"));
    }
}
