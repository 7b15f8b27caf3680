//! On-disk form of a binned graph sequence.
//!
//! An archive is a directory holding
//!
//! * `manifest.json`: format tag, vertex count `n`, step count, resolution,
//!   binning origin, the vertex label table (index = dense id), per-step edge
//!   counts, and the names of optional sidecar files;
//! * `edges.tsv`: one line `step<TAB>u<TAB>v` per edge, steps 1-based, lines
//!   sorted by `(step, u, v)` with `u < v`;
//! * optionally `attributes.json` (a serialized [`VertexAttributes`]) and
//!   `change_points.txt` (one 1-based step index per line).
//!
//! Writing is deterministic: the same sequence always produces byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::IngestError;
use crate::graph::{GraphSequence, StaticGraph};
use crate::ingest::{ChangePointLabels, LabelTable, VertexAttributes};

pub const ARCHIVE_FORMAT: &str = "winscale-archive/1";
const MANIFEST: &str = "manifest.json";
const EDGES: &str = "edges.tsv";
const ATTRIBUTES: &str = "attributes.json";
const CHANGE_POINTS: &str = "change_points.txt";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub n: usize,
    pub steps: usize,
    pub resolution: u64,
    pub origin: u64,
    pub labels: LabelTable,
    pub edge_counts: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attributes: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub change_points: Option<String>,
}

/// A sequence plus everything needed to run any of the three tasks on it.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub seq: GraphSequence,
    pub labels: LabelTable,
    pub origin: u64,
    pub attributes: Option<VertexAttributes>,
    pub change_points: Option<ChangePointLabels>,
}

impl Dataset {
    pub fn new(seq: GraphSequence) -> Self {
        let mut labels = LabelTable::default();
        for v in 0..seq.n() {
            labels.intern(&v.to_string());
        }
        Self {
            seq,
            labels,
            origin: 0,
            attributes: None,
            change_points: None,
        }
    }
}

fn edges_text(seq: &GraphSequence) -> String {
    let mut out = String::new();
    for (i, g) in seq.graphs().iter().enumerate() {
        for (u, v) in g.edges() {
            let _ = writeln!(out, "{}\t{u}\t{v}", i + 1);
        }
    }
    out
}

pub fn write_archive(dir: &Path, data: &Dataset) -> Result<Manifest, IngestError> {
    fs::create_dir_all(dir)?;
    let manifest = Manifest {
        format: ARCHIVE_FORMAT.to_string(),
        n: data.seq.n(),
        steps: data.seq.len(),
        resolution: data.seq.resolution(),
        origin: data.origin,
        labels: data.labels.clone(),
        edge_counts: data.seq.edge_counts(),
        attributes: data.attributes.as_ref().map(|_| ATTRIBUTES.to_string()),
        change_points: data
            .change_points
            .as_ref()
            .map(|_| CHANGE_POINTS.to_string()),
    };
    fs::write(
        dir.join(MANIFEST),
        serde_json::to_string_pretty(&manifest)? + "\n",
    )?;
    fs::write(dir.join(EDGES), edges_text(&data.seq))?;
    if let Some(attrs) = &data.attributes {
        fs::write(
            dir.join(ATTRIBUTES),
            serde_json::to_string_pretty(attrs)? + "\n",
        )?;
    }
    if let Some(cp) = &data.change_points {
        fs::write(dir.join(CHANGE_POINTS), cp.to_text())?;
    }
    Ok(manifest)
}

fn parse_edges(text: &str, manifest: &Manifest) -> Result<Vec<StaticGraph>, IngestError> {
    let mut graphs = vec![StaticGraph::empty(manifest.n); manifest.steps];
    for (idx, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let bad = |reason: &str| IngestError::Malformed {
            line: idx + 1,
            reason: format!("{EDGES}: {reason}"),
        };
        let f: Vec<usize> = line
            .split('\t')
            .map(|s| s.parse().map_err(|_| bad("non-integer field")))
            .collect::<Result<_, _>>()?;
        let [step, u, v] = f[..] else {
            return Err(bad("expected 3 fields"));
        };
        if step < 1 || step > manifest.steps || u >= manifest.n || v >= manifest.n || u == v {
            return Err(bad("field out of range"));
        }
        graphs[step - 1].insert(u, v);
    }
    Ok(graphs)
}

pub fn read_archive(dir: &Path) -> Result<Dataset, IngestError> {
    let manifest: Manifest = serde_json::from_str(&fs::read_to_string(dir.join(MANIFEST))?)?;
    if manifest.format != ARCHIVE_FORMAT {
        return Err(IngestError::Archive(format!(
            "unsupported format `{}`",
            manifest.format
        )));
    }
    if manifest.labels.len() != manifest.n || manifest.steps == 0 {
        return Err(IngestError::Archive(
            "manifest label table / step count inconsistent".into(),
        ));
    }
    let graphs = parse_edges(&fs::read_to_string(dir.join(EDGES))?, &manifest)?;
    let seq = GraphSequence::new(manifest.n, graphs, manifest.resolution);
    if seq.edge_counts() != manifest.edge_counts {
        return Err(IngestError::Archive(
            "edge counts disagree with manifest".into(),
        ));
    }
    let attributes = match &manifest.attributes {
        Some(name) => Some(serde_json::from_str(&fs::read_to_string(dir.join(name))?)?),
        None => None,
    };
    let change_points = match &manifest.change_points {
        Some(name) => Some(ChangePointLabels::parse(
            &fs::read_to_string(dir.join(name))?,
            seq.len(),
        )?),
        None => None,
    };
    Ok(Dataset {
        seq,
        labels: manifest.labels,
        origin: manifest.origin,
        attributes,
        change_points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_foreign_format() {
        let dir = tempfile::tempdir().unwrap();
        let seq = GraphSequence::new(2, vec![StaticGraph::from_edges(2, [(0, 1)])], 1);
        write_archive(dir.path(), &Dataset::new(seq)).unwrap();
        let path = dir.path().join(MANIFEST);
        let text = fs::read_to_string(&path)
            .unwrap()
            .replace(ARCHIVE_FORMAT, "other/9");
        fs::write(&path, text).unwrap();
        assert!(matches!(
            read_archive(dir.path()),
            Err(IngestError::Archive(_))
        ));
    }

    #[test]
    fn tampered_edges_are_caught() {
        let dir = tempfile::tempdir().unwrap();
        let seq = GraphSequence::new(3, vec![StaticGraph::from_edges(3, [(0, 1)])], 1);
        write_archive(dir.path(), &Dataset::new(seq)).unwrap();
        fs::write(dir.path().join(EDGES), "1\t0\t1\n1\t1\t2\n").unwrap();
        assert!(read_archive(dir.path()).is_err());
        fs::write(dir.path().join(EDGES), "1\t0\t7\n").unwrap();
        assert!(read_archive(dir.path()).is_err());
    }
}
