//! Sequential vs data-parallel execution of the per-frame and per-video
//! stages. Build with `--no-default-features` to bench without rayon (the
//! parallel variant then runs sequentially too).

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use foci::eval::{evaluate_videos, frame_confusion_with, frames_from_instances, EvalMode, EvalParams};
use foci::suppression::{suppress_stream_with, SuppressionParams};
use foci::synth::{generate, NoiseConfig, Scene, SceneConfig};
use foci::tracker::{track_video, track_videos, TrackerParams};
use foci::{Execution, Vec2};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn noisy_scene(seed: u64, n_frames: u32) -> Scene {
    let config = SceneConfig {
        seed,
        n_frames,
        camera_velocity: Vec2::new(-0.5, 0.25),
        instances: [("bucket", 10), ("tire", 10), ("bottle", 10), ("watertank", 10), ("puddle", 5), ("pool", 5)]
            .into_iter()
            .map(|(k, n)| (k.to_string(), n))
            .collect(),
        noise: NoiseConfig {
            jitter_sigma: 2.0,
            dropout_rate: 0.02,
            dropout_burst_max: 30,
            spurious_rate: 5.0,
            ..NoiseConfig::default()
        },
        ..SceneConfig::default()
    };
    generate(&config).expect("bench scene is valid")
}

fn suppression(c: &mut Criterion) {
    let scene = noisy_scene(1, 2000);
    let params = SuppressionParams::default();
    let mut group = c.benchmark_group("suppress_stream");
    group.throughput(Throughput::Elements(scene.detections.len() as u64));
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| suppress_stream_with(black_box(&scene.detections), &params, exec))
        });
    }
    group.finish();
}

fn confusion(c: &mut Criterion) {
    let scene = noisy_scene(2, 2000);
    let tracks = track_video(&scene.detections, &TrackerParams::default());
    let gt = frames_from_instances(&scene.ground_truth);
    let pred = frames_from_instances(&tracks);
    let mut group = c.benchmark_group("frame_confusion");
    group.throughput(Throughput::Elements(gt.len() as u64));
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| frame_confusion_with(black_box(&gt), black_box(&pred), 0.5, 6, exec))
        });
    }
    group.finish();
}

fn videos(c: &mut Criterion) {
    let scenes: Vec<Scene> = (0..8).map(|seed| noisy_scene(seed, 1000)).collect();
    let detections: Vec<_> = scenes.iter().map(|s| s.detections.clone()).collect();
    let params = TrackerParams::default();
    let pairs: Vec<_> = scenes
        .iter()
        .map(|s| (s.ground_truth.clone(), track_video(&s.detections, &params)))
        .collect();

    let mut group = c.benchmark_group("videos");
    group.sample_size(20);
    group.throughput(Throughput::Elements(scenes.len() as u64));
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::new("track", name), |b| {
            b.iter(|| track_videos(black_box(&detections), &params, exec))
        });
        group.bench_function(BenchmarkId::new("evaluate", name), |b| {
            b.iter(|| evaluate_videos(black_box(&pairs), &EvalParams::default(), EvalMode::Both, 6, exec))
        });
    }
    group.finish();
}

criterion_group!(benches, suppression, confusion, videos);
criterion_main!(benches);
