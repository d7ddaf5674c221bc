//! Line-oriented CSV formats for detections, annotations and tracks.
//!
//! Each file starts with a magic line `# foci <kind> v1`, followed by a CSV
//! header row and one record per line:
//!
//! | kind          | columns                                   |
//! |---------------|-------------------------------------------|
//! | `detections`  | `frame,class,conf,x,y,w,h`                |
//! | `annotations` | `frame,instance_id,class,x,y,w,h`         |
//! | `tracks`      | `frame,track_id,class,x,y,w,h,conf`       |
//!
//! `class` is either a registry name (normalized on read) or a numeric id.
//! Box coordinates are top-left `x, y` plus width and height, in pixels.
//!
//! Annotation parsing also accepts a track file, which lets a track file
//! stand in as labels. External label formats should be converted into the
//! annotation schema before evaluation.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BBox;
use crate::model::{
    ClassId, ClassRegistry, Detection, Frame, GroundTruthInstance, LabelPoint, Track, TrackPoint,
};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileKind {
    Detections,
    Annotations,
    Tracks,
}

impl FileKind {
    fn tag(self) -> &'static str {
        match self {
            FileKind::Detections => "detections",
            FileKind::Annotations => "annotations",
            FileKind::Tracks => "tracks",
        }
    }

    fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "detections" => Some(FileKind::Detections),
            "annotations" => Some(FileKind::Annotations),
            "tracks" => Some(FileKind::Tracks),
            _ => None,
        }
    }

    pub fn magic(self) -> String {
        format!("# foci {} v{FORMAT_VERSION}", self.tag())
    }
}

fn parse_err(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Split off and check the magic line. Returns the kind and the CSV body.
fn split_header<'a>(path: &Path, text: &'a str) -> Result<(FileKind, &'a str)> {
    let (first, body) = text.split_once('\n').unwrap_or((text, ""));
    let first = first.trim();
    let mut parts = first.split_whitespace();
    let (Some("#"), Some("foci"), Some(tag), Some(version), None) =
        (parts.next(), parts.next(), parts.next(), parts.next(), parts.next())
    else {
        return Err(parse_err(path, 1, format!("expected `# foci <kind> v{FORMAT_VERSION}` header, found `{first}`")));
    };
    let kind = FileKind::from_tag(tag).ok_or_else(|| parse_err(path, 1, format!("unknown file kind `{tag}`")))?;
    if version != format!("v{FORMAT_VERSION}") {
        return Err(parse_err(path, 1, format!("unsupported format version `{version}`")));
    }
    Ok((kind, body))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Deserialize CSV rows, tagging each with its 1-based file line number.
fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path, body: &str) -> Result<Vec<(u64, T)>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(body.as_bytes());
    // body starts on the second line of the file
    let file_line = |pos: Option<&csv::Position>| pos.map(|p| p.line() + 1).unwrap_or(0);
    let headers = reader
        .headers()
        .map_err(|e| parse_err(path, file_line(e.position()), e.to_string()))?
        .clone();
    let mut rows = Vec::new();
    for result in reader.records() {
        let record = result.map_err(|e| parse_err(path, file_line(e.position()), e.to_string()))?;
        let line = file_line(record.position());
        let row = record.deserialize(Some(&headers)).map_err(|e| {
            let message = match e.kind() {
                csv::ErrorKind::Deserialize { err, .. } => err.to_string(),
                _ => e.to_string(),
            };
            parse_err(path, line, message)
        })?;
        rows.push((line, row));
    }
    Ok(rows)
}

fn check_box(path: &Path, line: u64, b: &BBox) -> Result<()> {
    if !b.is_finite() {
        return Err(parse_err(path, line, "non-finite box coordinate"));
    }
    if b.w < 0.0 || b.h < 0.0 {
        return Err(parse_err(path, line, "negative box width or height"));
    }
    Ok(())
}

fn check_conf(path: &Path, line: u64, conf: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&conf) {
        return Err(parse_err(path, line, format!("confidence {conf} outside [0, 1]")));
    }
    Ok(())
}

fn resolve_class(path: &Path, line: u64, registry: &ClassRegistry, token: &str) -> Result<ClassId> {
    registry.resolve(token).ok_or_else(|| Error::UnknownClass {
        path: path.to_path_buf(),
        line,
        token: token.to_string(),
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct DetectionRow {
    frame: Frame,
    class: String,
    conf: f64,
    x: f64,
    y: f64,
    w: f64,
    h: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct AnnotationRow {
    frame: Frame,
    #[serde(alias = "track_id")]
    instance_id: u64,
    class: String,
    x: f64,
    y: f64,
    w: f64,
    h: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct TrackRow {
    frame: Frame,
    track_id: u64,
    class: String,
    x: f64,
    y: f64,
    w: f64,
    h: f64,
    conf: f64,
}

/// Load a class registry file: one name per line, appended after the
/// built-in classes. Blank lines and `#` comments are skipped.
pub fn load_registry(path: &Path) -> Result<ClassRegistry> {
    let text = read_text(path)?;
    let mut registry = ClassRegistry::default();
    for (i, line) in text.lines().enumerate() {
        let name = line.split('#').next().unwrap_or("").trim();
        if name.is_empty() {
            continue;
        }
        if name.contains(',') || name.parse::<u16>().is_ok() {
            return Err(parse_err(path, i as u64 + 1, format!("invalid class name `{name}`")));
        }
        registry.register(name);
    }
    Ok(registry)
}

fn expect_kind(path: &Path, found: FileKind, allowed: &[FileKind]) -> Result<()> {
    if allowed.contains(&found) {
        Ok(())
    } else {
        Err(parse_err(path, 1, format!("expected a {} file, found {}", allowed[0].tag(), found.tag())))
    }
}

/// Detections sorted by frame, stable within a frame.
pub fn parse_detections_str(path: &Path, text: &str, registry: &ClassRegistry) -> Result<Vec<Detection>> {
    let (kind, body) = split_header(path, text)?;
    expect_kind(path, kind, &[FileKind::Detections])?;
    let mut dets = Vec::new();
    for (line, row) in read_rows::<DetectionRow>(path, body)? {
        let bbox = BBox::new(row.x, row.y, row.w, row.h);
        check_box(path, line, &bbox)?;
        check_conf(path, line, row.conf)?;
        let class = resolve_class(path, line, registry, &row.class)?;
        dets.push(Detection::new(row.frame, class, row.conf, bbox));
    }
    dets.sort_by_key(|d| d.frame);
    Ok(dets)
}

pub fn parse_detections(path: &Path, registry: &ClassRegistry) -> Result<Vec<Detection>> {
    parse_detections_str(path, &read_text(path)?, registry)
}

struct Grouped {
    class: ClassId,
    points: Vec<(Frame, BBox, f64)>,
}

fn group_instances(
    path: &Path,
    registry: &ClassRegistry,
    rows: impl IntoIterator<Item = (u64, u64, Frame, ClassId, BBox, f64)>,
) -> Result<BTreeMap<u64, Grouped>> {
    let mut groups: BTreeMap<u64, Grouped> = BTreeMap::new();
    for (_, id, frame, class, bbox, conf) in rows {
        let g = groups.entry(id).or_insert_with(|| Grouped { class, points: Vec::new() });
        if g.class != class {
            return Err(Error::ClassConflict {
                path: path.to_path_buf(),
                id,
                first: registry.name(g.class).to_string(),
                second: registry.name(class).to_string(),
            });
        }
        g.points.push((frame, bbox, conf));
    }
    for (&id, g) in groups.iter_mut() {
        g.points.sort_by_key(|p| p.0);
        if let Some(w) = g.points.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::DuplicateRecord {
                path: path.to_path_buf(),
                id,
                frame: w[0].0,
            });
        }
    }
    Ok(groups)
}

type RawRecord = (u64, u64, Frame, ClassId, BBox, f64);

fn instance_records(path: &Path, text: &str, registry: &ClassRegistry, allowed: &[FileKind]) -> Result<Vec<RawRecord>> {
    let (kind, body) = split_header(path, text)?;
    expect_kind(path, kind, allowed)?;
    let mut out = Vec::new();
    if kind == FileKind::Tracks {
        for (line, r) in read_rows::<TrackRow>(path, body)? {
            let bbox = BBox::new(r.x, r.y, r.w, r.h);
            check_box(path, line, &bbox)?;
            check_conf(path, line, r.conf)?;
            let class = resolve_class(path, line, registry, &r.class)?;
            out.push((line, r.track_id, r.frame, class, bbox, r.conf));
        }
    } else {
        for (line, r) in read_rows::<AnnotationRow>(path, body)? {
            let bbox = BBox::new(r.x, r.y, r.w, r.h);
            check_box(path, line, &bbox)?;
            let class = resolve_class(path, line, registry, &r.class)?;
            out.push((line, r.instance_id, r.frame, class, bbox, 1.0));
        }
    }
    Ok(out)
}

/// Labeled instances in ascending id order, points sorted by frame.
pub fn parse_annotations_str(path: &Path, text: &str, registry: &ClassRegistry) -> Result<Vec<GroundTruthInstance>> {
    let records = instance_records(path, text, registry, &[FileKind::Annotations, FileKind::Tracks])?;
    Ok(group_instances(path, registry, records)?
        .into_iter()
        .map(|(id, g)| GroundTruthInstance {
            id,
            class: g.class,
            points: g.points.into_iter().map(|(frame, bbox, _)| LabelPoint { frame, bbox }).collect(),
        })
        .collect())
}

pub fn parse_annotations(path: &Path, registry: &ClassRegistry) -> Result<Vec<GroundTruthInstance>> {
    parse_annotations_str(path, &read_text(path)?, registry)
}

/// Tracks in ascending id order, points sorted by frame.
pub fn parse_tracks_str(path: &Path, text: &str, registry: &ClassRegistry) -> Result<Vec<Track>> {
    let records = instance_records(path, text, registry, &[FileKind::Tracks])?;
    Ok(group_instances(path, registry, records)?
        .into_iter()
        .map(|(id, g)| Track {
            id,
            class: g.class,
            points: g
                .points
                .into_iter()
                .map(|(frame, bbox, conf)| TrackPoint { frame, bbox, conf })
                .collect(),
        })
        .collect())
}

pub fn parse_tracks(path: &Path, registry: &ClassRegistry) -> Result<Vec<Track>> {
    parse_tracks_str(path, &read_text(path)?, registry)
}

fn write_csv<W: Write, R: Serialize>(mut out: W, kind: FileKind, rows: impl IntoIterator<Item = R>) -> std::io::Result<()> {
    writeln!(out, "{}", kind.magic())?;
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()
}

pub fn write_detections<W: Write>(out: W, dets: &[Detection], registry: &ClassRegistry) -> std::io::Result<()> {
    write_csv(
        out,
        FileKind::Detections,
        dets.iter().map(|d| DetectionRow {
            frame: d.frame,
            class: registry.name(d.class).to_string(),
            conf: d.conf,
            x: d.bbox.x,
            y: d.bbox.y,
            w: d.bbox.w,
            h: d.bbox.h,
        }),
    )
}

/// Records sorted by `(frame, instance_id)`.
pub fn write_annotations<W: Write>(out: W, gts: &[GroundTruthInstance], registry: &ClassRegistry) -> std::io::Result<()> {
    let mut rows: Vec<AnnotationRow> = gts
        .iter()
        .flat_map(|g| {
            g.points.iter().map(move |p| AnnotationRow {
                frame: p.frame,
                instance_id: g.id,
                class: registry.name(g.class).to_string(),
                x: p.bbox.x,
                y: p.bbox.y,
                w: p.bbox.w,
                h: p.bbox.h,
            })
        })
        .collect();
    rows.sort_by_key(|r| (r.frame, r.instance_id));
    write_csv(out, FileKind::Annotations, rows)
}

/// Records sorted by `(frame, track_id)`.
pub fn write_tracks<W: Write>(out: W, tracks: &[Track], registry: &ClassRegistry) -> std::io::Result<()> {
    let mut rows: Vec<TrackRow> = tracks
        .iter()
        .flat_map(|t| {
            t.points.iter().map(move |p| TrackRow {
                frame: p.frame,
                track_id: t.id,
                class: registry.name(t.class).to_string(),
                x: p.bbox.x,
                y: p.bbox.y,
                w: p.bbox.w,
                h: p.bbox.h,
                conf: p.conf,
            })
        })
        .collect();
    rows.sort_by_key(|r| (r.frame, r.track_id));
    write_csv(out, FileKind::Tracks, rows)
}

/// Create `path` and hand a buffered writer to `f`.
pub fn write_file(path: &Path, f: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    f(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}
