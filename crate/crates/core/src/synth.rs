//! Deterministic synthetic UAV scenes.
//!
//! Instances are static boxes in world coordinates. A camera viewport slides
//! over the world at a constant velocity, so every instance drifts across the
//! image along the same direction. Ground truth records each frame in which
//! an instance shows at least `min_visible_px` in both dimensions and at
//! least `min_visible_fraction` of its area. Detections
//! are the ground-truth boxes with Gaussian jitter, burst dropouts and
//! spurious boxes.
//!
//! Randomness comes from ChaCha8 seeded with `seed`, consumed in a fixed
//! order: placement, then per-instance detection noise, then spurious boxes
//! frame by frame.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BBox, Vec2};
use crate::model::{
    ClassId, ClassRegistry, Detection, Frame, GroundTruthInstance, LabelPoint, BUILTIN_CLASSES,
};
use crate::tracker::TrackerParams;

const PLACEMENT_ATTEMPTS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    /// Standard deviation of the Gaussian added to x, y, w and h (pixels).
    pub jitter_sigma: f64,
    /// Chance that a burst of missed detections starts at a given frame.
    pub dropout_rate: f64,
    /// Longest burst, in frames. Bursts are uniform in `1..=dropout_burst_max`.
    pub dropout_burst_max: u32,
    /// Expected number of false boxes per frame.
    pub spurious_rate: f64,
    /// Confidence range `[low, high]` for every emitted detection.
    pub conf_range: [f64; 2],
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            jitter_sigma: 0.0,
            dropout_rate: 0.0,
            dropout_burst_max: 1,
            spurious_rate: 0.0,
            conf_range: [0.6, 0.95],
        }
    }
}

fn default_box_sizes() -> BTreeMap<String, [f64; 2]> {
    [
        ("bucket", [30.0, 60.0]),
        ("watertank", [80.0, 160.0]),
        ("bottle", [15.0, 30.0]),
        ("pool", [150.0, 400.0]),
        ("tire", [40.0, 80.0]),
        ("puddle", [100.0, 250.0]),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneConfig {
    pub seed: u64,
    pub image_width: f64,
    pub image_height: f64,
    pub n_frames: u32,
    pub fps: f64,
    /// Apparent motion of static objects across the image, pixels per frame.
    pub camera_velocity: Vec2,
    /// An instance is labeled only while at least this much of it is in view.
    pub min_visible_px: f64,
    /// ... and while at least this fraction of its area is inside the image.
    pub min_visible_fraction: f64,
    /// Instance count per class name.
    pub instances: BTreeMap<String, u32>,
    /// `[min, max]` side length per class name.
    pub box_sizes: BTreeMap<String, [f64; 2]>,
    pub noise: NoiseConfig,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            image_width: 3840.0,
            image_height: 2160.0,
            n_frames: 240,
            fps: 24.0,
            camera_velocity: Vec2::new(-1.0, 0.5),
            min_visible_px: 4.0,
            min_visible_fraction: 0.5,
            instances: BTreeMap::new(),
            box_sizes: default_box_sizes(),
            noise: NoiseConfig::default(),
        }
    }
}

impl SceneConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scene config always serializes")
    }

    fn class_plan(&self, registry: &ClassRegistry) -> Result<Vec<(ClassId, u32, [f64; 2])>> {
        let mut plan = Vec::new();
        for (name, &count) in &self.instances {
            let class = registry
                .resolve(name)
                .ok_or_else(|| Error::Config(format!("unknown class `{name}`")))?;
            let size = self.size_range(registry, class)?;
            plan.push((class, count, size));
        }
        plan.sort_by_key(|p| p.0);
        Ok(plan)
    }

    fn size_range(&self, registry: &ClassRegistry, class: ClassId) -> Result<[f64; 2]> {
        let name = registry.name(class);
        let find = |sizes: &BTreeMap<String, [f64; 2]>| {
            sizes
                .iter()
                .find(|(k, _)| registry.resolve(k) == Some(class))
                .map(|(_, v)| *v)
        };
        // configured ranges override the built-in ones class by class
        find(&self.box_sizes)
            .or_else(|| find(&default_box_sizes()))
            .ok_or_else(|| Error::Config(format!("no box size range for class `{name}`")))
    }

    // negated comparisons also reject NaN
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.image_width > 0.0 && self.image_height > 0.0) {
            return bad(format!(
                "zero-area image {}x{}",
                self.image_width, self.image_height
            ));
        }
        if !(self.min_visible_px > 0.0) {
            return bad("min_visible_px must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.min_visible_fraction) {
            return bad("min_visible_fraction must lie in [0, 1]".into());
        }
        for (name, [lo, hi]) in &self.box_sizes {
            if !(*lo > 0.0 && lo <= hi) {
                return bad(format!("box size range for `{name}` must satisfy 0 < min <= max"));
            }
            if *hi > self.image_width || *hi > self.image_height {
                return bad(format!("boxes of `{name}` do not fit in the image"));
            }
        }
        let n = &self.noise;
        if !(n.jitter_sigma >= 0.0) {
            return bad("jitter_sigma must be non-negative".into());
        }
        if !(0.0..=1.0).contains(&n.dropout_rate) {
            return bad("dropout_rate must lie in [0, 1]".into());
        }
        if n.dropout_burst_max < 1 {
            return bad("dropout_burst_max must be at least 1".into());
        }
        if !(n.spurious_rate >= 0.0) {
            return bad("spurious_rate must be non-negative".into());
        }
        let [lo, hi] = n.conf_range;
        if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
            return bad("conf_range must satisfy 0 <= low <= high <= 1".into());
        }
        Ok(())
    }
}

/// Generator output. `provenance[i]` names the instance behind
/// `detections[i]` (`None` for spurious boxes); `dropouts[k]` lists the
/// labeled frames of `ground_truth[k]` that produced no detection.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub ground_truth: Vec<GroundTruthInstance>,
    pub detections: Vec<Detection>,
    pub provenance: Vec<Option<u64>>,
    pub dropouts: Vec<BTreeSet<Frame>>,
}

fn uniform(rng: &mut ChaCha8Rng, [lo, hi]: [f64; 2]) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

/// Build a scene from `config`. Identical configs give identical scenes.
pub fn generate(config: &SceneConfig) -> Result<Scene> {
    config.validate()?;
    let registry = ClassRegistry::default();
    let plan = config.class_plan(&registry)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (img_w, img_h) = (config.image_width, config.image_height);
    let v = config.camera_velocity;

    if config.n_frames == 0 {
        return Ok(Scene {
            ground_truth: Vec::new(),
            detections: Vec::new(),
            provenance: Vec::new(),
            dropouts: Vec::new(),
        });
    }

    // world boxes, pairwise disjoint
    let mut world: Vec<(ClassId, BBox)> = Vec::new();
    for &(class, count, size) in &plan {
        for _ in 0..count {
            let mut placed = false;
            for _ in 0..PLACEMENT_ATTEMPTS {
                let w = uniform(&mut rng, size);
                let h = uniform(&mut rng, size);
                let anchor = rng.random_range(0..config.n_frames) as f64;
                let x = uniform(&mut rng, [0.0, img_w - w]);
                let y = uniform(&mut rng, [0.0, img_h - h]);
                let candidate = BBox::new(x + v.dx * anchor, y + v.dy * anchor, w, h);
                if world.iter().all(|(_, b)| b.intersection_area(&candidate) == 0.0) {
                    world.push((class, candidate));
                    placed = true;
                    break;
                }
            }
            if !placed {
                return Err(Error::Config("scene too crowded to place instances without overlap".into()));
            }
        }
    }

    let ground_truth: Vec<GroundTruthInstance> = world
        .iter()
        .enumerate()
        .filter_map(|(id, &(class, wb))| {
            let points: Vec<LabelPoint> = (0..config.n_frames)
                .filter_map(|f| {
                    let shifted = wb.translate(-v.dx * f as f64, -v.dy * f as f64);
                    shifted
                        .clip_to(img_w, img_h)
                        .filter(|b| {
                            b.w >= config.min_visible_px
                                && b.h >= config.min_visible_px
                                && b.area() >= config.min_visible_fraction * wb.area()
                        })
                        .map(|bbox| LabelPoint { frame: f, bbox })
                })
                .collect();
            (!points.is_empty()).then_some(GroundTruthInstance {
                id: id as u64,
                class,
                points,
            })
        })
        .collect();

    let noise = &config.noise;
    let jitter = Normal::new(0.0, noise.jitter_sigma).map_err(|e| Error::Config(e.to_string()))?;
    let mut tagged: Vec<(Detection, Option<u64>)> = Vec::new();
    let mut dropouts = Vec::with_capacity(ground_truth.len());
    for inst in &ground_truth {
        let mut dropped = BTreeSet::new();
        let mut burst_left = 0u32;
        let mut force_observe = false;
        for p in &inst.points {
            if burst_left > 0 {
                burst_left -= 1;
                dropped.insert(p.frame);
                force_observe = burst_left == 0;
                continue;
            }
            if !force_observe && noise.dropout_rate > 0.0 && rng.random_bool(noise.dropout_rate) {
                burst_left = rng.random_range(1..=noise.dropout_burst_max) - 1;
                dropped.insert(p.frame);
                force_observe = burst_left == 0;
                continue;
            }
            force_observe = false;
            let bbox = if noise.jitter_sigma > 0.0 {
                let b = p.bbox;
                BBox::new(
                    b.x + jitter.sample(&mut rng),
                    b.y + jitter.sample(&mut rng),
                    (b.w + jitter.sample(&mut rng)).max(1.0),
                    (b.h + jitter.sample(&mut rng)).max(1.0),
                )
            } else {
                p.bbox
            };
            let conf = uniform(&mut rng, noise.conf_range);
            tagged.push((Detection::new(p.frame, inst.class, conf, bbox), Some(inst.id)));
        }
        dropouts.push(dropped);
    }

    if noise.spurious_rate > 0.0 {
        let poisson = Poisson::new(noise.spurious_rate).map_err(|e| Error::Config(e.to_string()))?;
        let classes: Vec<ClassId> = (0..BUILTIN_CLASSES.len()).map(|i| ClassId(i as u16)).collect();
        for f in 0..config.n_frames {
            let n = poisson.sample(&mut rng) as u64;
            for _ in 0..n {
                let class = classes[rng.random_range(0..classes.len())];
                let size = config.size_range(&registry, class)?;
                let w = uniform(&mut rng, size);
                let h = uniform(&mut rng, size);
                let x = uniform(&mut rng, [0.0, img_w - w]);
                let y = uniform(&mut rng, [0.0, img_h - h]);
                let conf = uniform(&mut rng, noise.conf_range);
                tagged.push((Detection::new(f, class, conf, BBox::new(x, y, w, h)), None));
            }
        }
    }

    tagged.sort_by_key(|(d, _)| d.frame);
    let (detections, provenance) = tagged.into_iter().unzip();
    Ok(Scene {
        ground_truth,
        detections,
        provenance,
        dropouts,
    })
}

/// Number of tracks a window-limited tracker must produce for each instance:
/// maximal runs of observed frames whose consecutive gaps stay within
/// `time_window`. Computed from frame arithmetic alone.
pub fn oracle_expected_tracks(
    gt: &[GroundTruthInstance],
    applied_dropouts: &[BTreeSet<Frame>],
    params: &TrackerParams,
) -> Vec<usize> {
    gt.iter()
        .zip(applied_dropouts)
        .map(|(inst, dropped)| {
            let observed = inst.points.iter().map(|p| p.frame).filter(|f| !dropped.contains(f));
            expected_runs(observed, params.time_window)
        })
        .collect()
}

/// Runs in an ascending frame sequence split wherever the gap exceeds `window`.
pub fn expected_runs(frames: impl IntoIterator<Item = Frame>, window: u32) -> usize {
    let mut runs = 0;
    let mut prev: Option<Frame> = None;
    for f in frames {
        match prev {
            Some(p) if f - p <= window => {}
            _ => runs += 1,
        }
        prev = Some(f);
    }
    runs
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_tire(n_frames: u32) -> SceneConfig {
        SceneConfig {
            n_frames,
            camera_velocity: Vec2::default(),
            instances: [("tire".to_string(), 1)].into_iter().collect(),
            ..SceneConfig::default()
        }
    }

    #[test]
    fn empty_video() {
        let scene = generate(&one_tire(0)).unwrap();
        assert!(scene.ground_truth.is_empty());
        assert!(scene.detections.is_empty());
    }

    #[test]
    fn noiseless_static_passthrough() {
        let scene = generate(&one_tire(10)).unwrap();
        assert_eq!(scene.ground_truth.len(), 1);
        let gt = &scene.ground_truth[0];
        assert_eq!(gt.points.len(), 10);
        assert!(gt.points.iter().all(|p| p.bbox == gt.points[0].bbox));
        assert_eq!(scene.detections.len(), 10);
        for (d, p) in scene.detections.iter().zip(&gt.points) {
            assert_eq!((d.frame, d.bbox, d.class), (p.frame, p.bbox, ClassId::TIRE));
        }
        assert!(scene.provenance.iter().all(|p| *p == Some(0)));
    }

    #[test]
    fn same_seed_same_scene() {
        let mut cfg = one_tire(300);
        cfg.instances.insert("pool".into(), 3);
        cfg.camera_velocity = Vec2::new(-3.0, 1.0);
        cfg.noise = NoiseConfig {
            jitter_sigma: 2.0,
            dropout_rate: 0.05,
            dropout_burst_max: 10,
            spurious_rate: 0.3,
            ..NoiseConfig::default()
        };
        assert_eq!(generate(&cfg).unwrap(), generate(&cfg).unwrap());
        let mut other = cfg.clone();
        other.seed = 1;
        assert_ne!(generate(&cfg).unwrap(), generate(&other).unwrap());
    }

    #[test]
    fn truncated_instances_are_labeled_until_half_leaves_the_image() {
        let mut cfg = one_tire(4000);
        cfg.camera_velocity = Vec2::new(2.0, 0.0);
        let scene = generate(&cfg).unwrap();
        let gt = &scene.ground_truth[0];
        let full = gt.points.iter().map(|p| p.bbox.area()).fold(0.0, f64::max);
        assert!(gt.points.iter().all(|p| p.bbox.area() >= 0.5 * full));
        assert!(gt.points.iter().any(|p| p.bbox.area() < full));

        cfg.min_visible_fraction = 0.0;
        let slivers = generate(&cfg).unwrap();
        assert!(slivers.ground_truth[0].points.len() > gt.points.len());
    }

    #[test]
    fn partial_box_sizes_keep_builtin_defaults() {
        let cfg = SceneConfig::from_toml("[instances]\ntire = 2\nbucket = 1\n[box_sizes]\nbucket = [10.0, 10.0]\n").unwrap();
        let scene = generate(&cfg).unwrap();
        for gt in &scene.ground_truth {
            let b = gt.points.iter().map(|p| p.bbox).find(|b| b.w > 0.0).unwrap();
            if gt.class == ClassId::BUCKET {
                assert!(b.w <= 10.0 && b.h <= 10.0);
            }
        }
        assert_eq!(scene.ground_truth.len(), 3);
    }

    #[test]
    fn zero_area_image_rejected() {
        let cfg = SceneConfig { image_width: 0.0, ..one_tire(5) };
        assert!(matches!(generate(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn boxes_stay_inside_image() {
        let mut cfg = one_tire(2000);
        cfg.instances.insert("watertank".into(), 5);
        cfg.camera_velocity = Vec2::new(-4.0, 2.0);
        let scene = generate(&cfg).unwrap();
        for p in scene.ground_truth.iter().flat_map(|g| &g.points) {
            assert!(p.bbox.x >= 0.0 && p.bbox.y >= 0.0);
            assert!(p.bbox.right() <= cfg.image_width && p.bbox.bottom() <= cfg.image_height);
        }
    }

    #[test]
    fn runs_examples() {
        assert_eq!(expected_runs(0..100, 45), 1);
        assert_eq!(expected_runs((0..=10).chain(57..=90), 45), 2);
        assert_eq!(expected_runs((0..=10).chain(50..=90), 45), 1);
        assert_eq!(expected_runs(0..5, 0), 5);
        assert_eq!(expected_runs(std::iter::empty(), 45), 0);
    }

    #[test]
    fn config_toml_roundtrip() {
        let mut cfg = one_tire(77);
        cfg.noise.jitter_sigma = 1.5;
        let back = SceneConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
        let partial = SceneConfig::from_toml("seed = 3\nn_frames = 9\n[instances]\npool = 2\n").unwrap();
        assert_eq!(partial.seed, 3);
        assert_eq!(partial.instances["pool"], 2);
        assert!(SceneConfig::from_toml("bogus = 1").is_err());
    }
}
