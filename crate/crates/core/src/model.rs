//! Domain records: class vocabulary, per-frame detections, tracks and labeled instances.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::geometry::{BBox, Vec2};

/// Frame index within one video.
pub type Frame = u32;

/// The six breeding-site classes, in their stable id order.
pub const BUILTIN_CLASSES: [&str; 6] = ["bucket", "watertank", "bottle", "pool", "tire", "puddle"];

/// Dense class index into a [`ClassRegistry`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ClassId(pub u16);

impl ClassId {
    pub const BUCKET: ClassId = ClassId(0);
    pub const WATERTANK: ClassId = ClassId(1);
    pub const BOTTLE: ClassId = ClassId(2);
    pub const POOL: ClassId = ClassId(3);
    pub const TIRE: ClassId = ClassId(4);
    pub const PUDDLE: ClassId = ClassId(5);

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Lowercase and drop all whitespace: `"Water Tank"` becomes `"watertank"`.
pub fn normalize_class_name(raw: &str) -> String {
    raw.chars()
        .filter(|c| !c.is_whitespace())
        .flat_map(char::to_lowercase)
        .collect()
}

/// Ordered class vocabulary. Built-ins always occupy ids `0..6`; extensions
/// are appended after them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassRegistry {
    names: Vec<String>,
}

impl Default for ClassRegistry {
    fn default() -> Self {
        Self {
            names: BUILTIN_CLASSES.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl ClassRegistry {
    /// Append a class name; returns the existing id when already present.
    pub fn register(&mut self, raw: &str) -> ClassId {
        let name = normalize_class_name(raw);
        if let Some(id) = self.lookup(&name) {
            return id;
        }
        self.names.push(name);
        ClassId((self.names.len() - 1) as u16)
    }

    fn lookup(&self, normalized: &str) -> Option<ClassId> {
        self.names
            .iter()
            .position(|n| n == normalized)
            .map(|i| ClassId(i as u16))
    }

    /// Resolve a class token, either a name (normalized) or a numeric id.
    pub fn resolve(&self, token: &str) -> Option<ClassId> {
        let trimmed = token.trim();
        if let Ok(id) = trimmed.parse::<u16>() {
            return ((id as usize) < self.names.len()).then_some(ClassId(id));
        }
        self.lookup(&normalize_class_name(trimmed))
    }

    pub fn name(&self, id: ClassId) -> &str {
        self.names.get(id.index()).map(String::as_str).unwrap_or("?")
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn ids(&self) -> impl Iterator<Item = ClassId> + '_ {
        (0..self.names.len()).map(|i| ClassId(i as u16))
    }
}

/// One frame-local detector output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub frame: Frame,
    pub class: ClassId,
    pub conf: f64,
    pub bbox: BBox,
}

impl Detection {
    pub fn new(frame: Frame, class: ClassId, conf: f64, bbox: BBox) -> Self {
        Self { frame, class, conf, bbox }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackPoint {
    pub frame: Frame,
    pub bbox: BBox,
    pub conf: f64,
}

/// A predicted instance: stable id plus its observed points in increasing frame order.
/// Gaps between observed frames are not filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Track {
    pub id: u64,
    pub class: ClassId,
    pub points: Vec<TrackPoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelPoint {
    pub frame: Frame,
    pub bbox: BBox,
}

/// A labeled instance with a persistent annotation id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthInstance {
    pub id: u64,
    pub class: ClassId,
    pub points: Vec<LabelPoint>,
}

/// Shared view over [`Track`] and [`GroundTruthInstance`].
///
/// Implementors hold at least one point, ordered by frame.
pub trait Instance {
    fn id(&self) -> u64;
    fn class(&self) -> ClassId;
    fn len(&self) -> usize;
    fn sight(&self, i: usize) -> (Frame, BBox);

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn first_sight(&self) -> (Frame, BBox) {
        self.sight(0)
    }

    fn last_sight(&self) -> (Frame, BBox) {
        self.sight(self.len() - 1)
    }
}

impl Instance for Track {
    fn id(&self) -> u64 {
        self.id
    }
    fn class(&self) -> ClassId {
        self.class
    }
    fn len(&self) -> usize {
        self.points.len()
    }
    fn sight(&self, i: usize) -> (Frame, BBox) {
        let p = &self.points[i];
        (p.frame, p.bbox)
    }
}

impl Instance for GroundTruthInstance {
    fn id(&self) -> u64 {
        self.id
    }
    fn class(&self) -> ClassId {
        self.class
    }
    fn len(&self) -> usize {
        self.points.len()
    }
    fn sight(&self, i: usize) -> (Frame, BBox) {
        let p = &self.points[i];
        (p.frame, p.bbox)
    }
}

impl From<&Track> for GroundTruthInstance {
    fn from(t: &Track) -> Self {
        Self {
            id: t.id,
            class: t.class,
            points: t
                .points
                .iter()
                .map(|p| LabelPoint { frame: p.frame, bbox: p.bbox })
                .collect(),
        }
    }
}

/// Top-left displacement from first to last sight.
///
/// Panics if the instance has no points.
pub fn displacement_vector<I: Instance + ?Sized>(inst: &I) -> Vec2 {
    let (_, first) = inst.first_sight();
    let (_, last) = inst.last_sight();
    Vec2::between(&first, &last)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gt(points: &[(Frame, BBox)]) -> GroundTruthInstance {
        GroundTruthInstance {
            id: 0,
            class: ClassId::TIRE,
            points: points.iter().map(|&(frame, bbox)| LabelPoint { frame, bbox }).collect(),
        }
    }

    #[test]
    fn registry_builtins_and_normalization() {
        let reg = ClassRegistry::default();
        assert_eq!(reg.len(), 6);
        assert_eq!(reg.resolve("Water Tank"), Some(ClassId::WATERTANK));
        assert_eq!(reg.resolve(" tire "), Some(ClassId::TIRE));
        assert_eq!(reg.resolve("5"), Some(ClassId::PUDDLE));
        assert_eq!(reg.resolve("6"), None);
        assert_eq!(reg.resolve("boat"), None);
        assert_eq!(reg.name(ClassId::POOL), "pool");
    }

    #[test]
    fn registry_extension_appends() {
        let mut reg = ClassRegistry::default();
        assert_eq!(reg.register("Flower Pot"), ClassId(6));
        assert_eq!(reg.register("flowerpot"), ClassId(6));
        assert_eq!(reg.register("Bucket"), ClassId::BUCKET);
        assert_eq!(reg.resolve("flower pot"), Some(ClassId(6)));
    }

    #[test]
    fn displacement_examples() {
        let b = BBox::new(3.0, 4.0, 5.0, 5.0);
        assert_eq!(displacement_vector(&gt(&[(3, b)])), Vec2::new(0.0, 0.0));
        let inst = gt(&[
            (0, BBox::new(10.0, 20.0, 5.0, 5.0)),
            (4, BBox::new(99.0, -3.0, 1.0, 1.0)),
            (9, BBox::new(40.0, 60.0, 5.0, 5.0)),
        ]);
        assert_eq!(displacement_vector(&inst), Vec2::new(30.0, 40.0));
    }
}
