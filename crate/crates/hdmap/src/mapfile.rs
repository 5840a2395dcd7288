//! The map file format.
//!
//! One JSON object per scene:
//!
//! ```json
//! {
//!   "elements": [
//!     {
//!       "category": "divider",
//!       "closed": false,
//!       "confidence": 0.912000,
//!       "vertices": [
//!         [-1.750000, -30.000000],
//!         [-1.750000, 30.000000]
//!       ]
//!     }
//!   ],
//!   "range": {
//!     "x": [-15.000000, 15.000000],
//!     "y": [-30.000000, 30.000000]
//!   },
//!   "version": "1"
//! }
//! ```
//!
//! `category` is one of `ped_crossing`, `divider`, `boundary`; crossings are
//! closed and the other two are open. `confidence` marks a prediction file:
//! it is present on every element of a prediction file and on none of a
//! ground-truth file. A third vertex coordinate is accepted on read and
//! dropped. Files are written with sorted keys, six decimals per number, one
//! vertex per line and a trailing newline, through a temporary file that is
//! renamed into place.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use hdmap_core::eval::ScoredElement;
use hdmap_core::scenegen::PerceptionRange;
use hdmap_core::{ElementCategory, GroundTruthSet, MapElement, Point2, Polyline};
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use crate::error::{Error, Result};

pub const FORMAT_VERSION: &str = "1";

/// File name skipped when a directory of maps is listed.
pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq)]
pub enum MapContent {
    GroundTruth(GroundTruthSet),
    Predictions(Vec<ScoredElement>),
}

impl MapContent {
    pub fn len(&self) -> usize {
        match self {
            MapContent::GroundTruth(g) => g.len(),
            MapContent::Predictions(p) => p.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Elements with their confidence, if any.
    pub fn elements(&self) -> Vec<(&MapElement, Option<f64>)> {
        match self {
            MapContent::GroundTruth(g) => g.elements.iter().map(|e| (e, None)).collect(),
            MapContent::Predictions(p) => p.iter().map(|s| (&s.element, Some(s.confidence))).collect(),
        }
    }

    /// Same kind of content with every element passed through `f`.
    pub fn try_map(&self, mut f: impl FnMut(&MapElement) -> hdmap_core::Result<MapElement>) -> Result<Self> {
        Ok(match self {
            MapContent::GroundTruth(g) => {
                MapContent::GroundTruth(GroundTruthSet::new(g.elements.iter().map(&mut f).collect::<hdmap_core::Result<_>>()?))
            }
            MapContent::Predictions(p) => MapContent::Predictions(
                p.iter()
                    .map(|s| Ok(ScoredElement { element: f(&s.element)?, confidence: s.confidence }))
                    .collect::<hdmap_core::Result<_>>()?,
            ),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MapFile {
    pub range: PerceptionRange,
    pub content: MapContent,
}

impl MapFile {
    pub fn ground_truth(&self) -> Option<&GroundTruthSet> {
        match &self.content {
            MapContent::GroundTruth(g) => Some(g),
            MapContent::Predictions(_) => None,
        }
    }
}

#[derive(Deserialize)]
struct RawFile {
    version: String,
    range: RawRange,
    elements: Vec<serde_json::Value>,
}

#[derive(Deserialize)]
struct RawRange {
    x: [f64; 2],
    y: [f64; 2],
}

#[derive(Deserialize)]
struct RawElement {
    category: String,
    closed: bool,
    #[serde(default)]
    confidence: Option<f64>,
    vertices: Vec<Vec<f64>>,
}

fn schema(path: &Path, element: Option<usize>, field: &'static str, reason: impl Into<String>) -> Error {
    Error::Schema { path: path.to_path_buf(), element, field, reason: reason.into() }
}

fn parse_element(path: &Path, i: usize, value: serde_json::Value) -> Result<(MapElement, Option<f64>)> {
    let raw: RawElement =
        serde_json::from_value(value).map_err(|e| schema(path, Some(i), "element", e.to_string()))?;
    let category: ElementCategory = raw
        .category
        .parse()
        .map_err(|_| schema(path, Some(i), "category", format!("unknown category {:?}", raw.category)))?;
    if category == ElementCategory::None {
        return Err(schema(path, Some(i), "category", "`none` is not a map element"));
    }
    if raw.closed != category.is_closed() {
        let want = if category.is_closed() { "closed" } else { "open" };
        return Err(schema(path, Some(i), "closed", format!("{category} elements are {want}")));
    }
    let mut vertices = Vec::with_capacity(raw.vertices.len());
    for (j, v) in raw.vertices.iter().enumerate() {
        if !(v.len() == 2 || v.len() == 3) {
            return Err(schema(path, Some(i), "vertices", format!("vertex {j} has {} coordinates", v.len())));
        }
        vertices.push(Point2::new(v[0], v[1]));
    }
    let shape = Polyline::new(vertices, raw.closed).map_err(|e| schema(path, Some(i), "vertices", e.to_string()))?;
    if let Some(c) = raw.confidence {
        if !(0.0..=1.0).contains(&c) {
            return Err(schema(path, Some(i), "confidence", format!("{c} is outside [0, 1]")));
        }
    }
    let element = MapElement::new(category, shape).map_err(|e| schema(path, Some(i), "category", e.to_string()))?;
    Ok((element, raw.confidence))
}

/// Parses map JSON; `path` only labels errors.
pub fn parse_map(text: &str, path: &Path) -> Result<MapFile> {
    let raw: RawFile = serde_json::from_str(text).map_err(|source| Error::Json { path: path.to_path_buf(), source })?;
    if raw.version != FORMAT_VERSION {
        return Err(schema(path, None, "version", format!("unsupported version {:?}", raw.version)));
    }
    let range = PerceptionRange::new(raw.range.x[0], raw.range.x[1], raw.range.y[0], raw.range.y[1])
        .map_err(|e| schema(path, None, "range", e.to_string()))?;
    let mut parsed = Vec::with_capacity(raw.elements.len());
    for (i, v) in raw.elements.into_iter().enumerate() {
        parsed.push(parse_element(path, i, v)?);
    }
    let scored = parsed.iter().filter(|(_, c)| c.is_some()).count();
    let content = if scored == 0 {
        MapContent::GroundTruth(GroundTruthSet::new(parsed.into_iter().map(|(e, _)| e).collect()))
    } else if scored == parsed.len() {
        MapContent::Predictions(
            parsed.into_iter().map(|(element, c)| ScoredElement { element, confidence: c.unwrap_or_default() }).collect(),
        )
    } else {
        let first = parsed.iter().position(|(_, c)| c.is_none()).unwrap_or(0);
        return Err(schema(path, Some(first), "confidence", "missing while other elements carry one"));
    };
    Ok(MapFile { range, content })
}

pub fn read_map(path: &Path) -> Result<MapFile> {
    let text = fs::read_to_string(path).map_err(|source| Error::Read { path: path.to_path_buf(), source })?;
    parse_map(&text, path)
}

/// Six-decimal rendering with negative zero folded to zero.
fn decimal(x: f64) -> String {
    let mut r = (x * 1e6).round() / 1e6;
    if r == 0.0 {
        r = 0.0;
    }
    format!("{r:.6}")
}

fn fixed(x: f64) -> Box<RawValue> {
    RawValue::from_string(decimal(x)).expect("a finite decimal is valid JSON")
}

// one vertex per line keeps long polylines readable under pretty printing
fn vertex(p: &Point2) -> Box<RawValue> {
    RawValue::from_string(format!("[{}, {}]", decimal(p.x), decimal(p.y))).expect("valid JSON pair")
}

#[derive(Serialize)]
struct OutFile {
    elements: Vec<OutElement>,
    range: OutRange,
    version: &'static str,
}

#[derive(Serialize)]
struct OutRange {
    x: Box<RawValue>,
    y: Box<RawValue>,
}

#[derive(Serialize)]
struct OutElement {
    category: &'static str,
    closed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    confidence: Option<Box<RawValue>>,
    vertices: Vec<Box<RawValue>>,
}

/// Canonical text of a map file.
pub fn render_map(map: &MapFile) -> String {
    let r = &map.range;
    let out = OutFile {
        elements: map
            .content
            .elements()
            .into_iter()
            .map(|(e, c)| OutElement {
                category: e.category().name(),
                closed: e.is_closed(),
                confidence: c.map(fixed),
                vertices: e.shape().vertices().iter().map(vertex).collect(),
            })
            .collect(),
        range: OutRange { x: vertex(&Point2::new(r.x_min, r.x_max)), y: vertex(&Point2::new(r.y_min, r.y_max)) },
        version: FORMAT_VERSION,
    };
    let mut text = serde_json::to_string_pretty(&out).expect("map serialization cannot fail");
    text.push('\n');
    text
}

/// Writes `bytes` to a sibling temporary file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let err = |source| Error::Write { path: path.to_path_buf(), source };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(err)?;
    tmp.write_all(bytes).map_err(err)?;
    tmp.as_file().sync_all().map_err(err)?;
    tmp.persist(path).map_err(|e| err(e.error))?;
    Ok(())
}

pub fn write_map(map: &MapFile, path: &Path) -> Result<()> {
    write_atomic(path, render_map(map).as_bytes())
}

/// `*.json` map files in `dir`, sorted by name, without the suite manifest.
pub fn list_maps(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|source| Error::Read { path: dir.to_path_buf(), source })?;
    let mut out = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|source| Error::Read { path: dir.to_path_buf(), source })?;
        let p = entry.path();
        let is_json = p.extension().is_some_and(|e| e == "json");
        let is_manifest = p.file_name().is_some_and(|n| n == MANIFEST_NAME);
        if p.is_file() && is_json && !is_manifest {
            out.push(p);
        }
    }
    out.sort();
    Ok(out)
}
