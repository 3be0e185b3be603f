//! Edge lists, layer-stack manifests and label files.
//!
//! An edge list holds one undirected edge per line as two
//! whitespace-separated 0-based vertex ids. Lines starting with `#` and
//! blank lines are skipped. A manifest is `{"n": 5, "layers": [...]}` with
//! layer paths relative to the manifest's directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use dynsc_core::{LayerStack, MembershipMatrix, SparseSymGraph};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub n: usize,
    pub layers: Vec<PathBuf>,
}

/// Parses edge-list text. `path` only labels error messages.
pub fn parse_edge_list(text: &str, n: usize, path: &Path) -> Result<SparseSymGraph> {
    let mut edges = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: idx + 1,
            message,
        };
        let mut fields = line.split_whitespace();
        let (Some(a), Some(b), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(parse_err(format!("expected two vertex ids, got {line:?}")));
        };
        let id = |s: &str| {
            s.parse::<usize>()
                .map_err(|e| parse_err(format!("bad vertex id {s:?}: {e}")))
        };
        let (i, j) = (id(a)?, id(b)?);
        if i >= n || j >= n {
            return Err(parse_err(format!("vertex id out of range for n = {n}")));
        }
        if i == j {
            return Err(parse_err(format!("self-loop at vertex {i}")));
        }
        edges.push((i, j));
    }
    Ok(SparseSymGraph::from_edge_list(n, &edges)?)
}

pub fn read_edge_list(path: &Path, n: usize) -> Result<SparseSymGraph> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_edge_list(&text, n, path)
}

/// One line per edge `i < j`, repeated by multiplicity.
pub fn format_edge_list(g: &SparseSymGraph) -> String {
    let mut out = String::new();
    for (i, j, w) in g.edges() {
        for _ in 0..w {
            let _ = writeln!(out, "{i} {j}");
        }
    }
    out
}

pub fn write_edge_list(path: &Path, g: &SparseSymGraph) -> Result<()> {
    fs::write(path, format_edge_list(g)).map_err(|e| Error::io(path, e))
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path, e))
}

/// Loads every layer listed in the manifest at `path`.
pub fn load_stack(path: &Path) -> Result<LayerStack> {
    let manifest = read_manifest(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let layers = manifest
        .layers
        .iter()
        .map(|layer| read_edge_list(&base.join(layer), manifest.n))
        .collect::<Result<Vec<_>>>()?;
    Ok(LayerStack::new(manifest.n, layers)?)
}

/// Writes each layer as `layer_<t>.txt` next to a `manifest.json`.
pub fn save_stack(dir: &Path, stack: &LayerStack) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut layers = Vec::with_capacity(stack.len());
    for (t, g) in stack.layers().iter().enumerate() {
        let name = PathBuf::from(format!("layer_{t}.txt"));
        write_edge_list(&dir.join(&name), g)?;
        layers.push(name);
    }
    let manifest = Manifest {
        n: stack.n(),
        layers,
    };
    let path = dir.join("manifest.json");
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| Error::json(&path, e))?;
    fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// One label per line, vertex order.
pub fn format_labels(m: &MembershipMatrix) -> String {
    let mut out = String::with_capacity(2 * m.n());
    for l in m.labels() {
        let _ = writeln!(out, "{l}");
    }
    out
}

pub fn write_labels(path: &Path, m: &MembershipMatrix) -> Result<()> {
    fs::write(path, format_labels(m)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_and_blanks_skipped() {
        let text = "# header\n0 1\n\n  # indented comment\n1\t2\n0 1\n";
        let g = parse_edge_list(text, 3, Path::new("x")).unwrap();
        assert_eq!(g.get(0, 1), 2);
        assert_eq!(g.get(2, 1), 1);
        assert_eq!(g.edge_count(), 2);
    }

    #[test]
    fn malformed_lines_report_position() {
        for (text, line) in [("0 1\n0\n", 2), ("0 x\n", 1), ("0 1 2\n", 1), ("1 1\n", 1), ("0 9\n", 1)] {
            match parse_edge_list(text, 3, Path::new("f")) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn edge_list_round_trip() {
        let g = SparseSymGraph::from_edge_list(4, &[(0, 3), (3, 0), (1, 2)]).unwrap();
        let back = parse_edge_list(&format_edge_list(&g), 4, Path::new("x")).unwrap();
        assert_eq!(back, g);
    }
}
