//! Graph file formats: DIMACS-style edge lists and JSON.

use crate::drawing::Drawing;
use crate::error::{Error, Result};
use crate::graph::Graph;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// JSON graph document; vertices are 0-indexed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphDoc {
    pub n: usize,
    pub edges: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coords: Option<Vec<[f64; 2]>>,
}

impl GraphDoc {
    pub fn from_parts(g: &Graph, d: Option<&Drawing>) -> Self {
        GraphDoc {
            n: g.n(),
            edges: g.edges().iter().map(|&(u, v)| [u, v]).collect(),
            coords: d.map(|d| d.coords.clone()),
        }
    }

    pub fn into_parts(self) -> Result<(Graph, Option<Drawing>)> {
        let g = Graph::new(self.n, self.edges.iter().map(|e| (e[0], e[1])))?;
        let d = self.coords.map(Drawing::new);
        if let Some(d) = &d {
            if d.coords.len() != g.n() {
                return Err(Error::Parse(format!("{} coords for {} vertices", d.coords.len(), g.n())));
            }
        }
        Ok((g, d))
    }
}

/// Parses `p mis N M` / `e u v` text with 1-indexed vertices. `c` lines are comments.
pub fn parse_dimacs(text: &str) -> Result<Graph> {
    let mut header: Option<(usize, usize)> = None;
    let mut edges = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let t: Vec<&str> = line.split_whitespace().collect();
        let bad = || Error::Parse(format!("line {}: {}", lineno + 1, line.trim()));
        match t.first().copied() {
            None | Some("c") => {}
            Some("p") => {
                if t.len() != 4 || header.is_some() {
                    return Err(bad());
                }
                let n = t[2].parse().map_err(|_| bad())?;
                let m = t[3].parse().map_err(|_| bad())?;
                header = Some((n, m));
            }
            Some("e") => {
                if t.len() != 3 || header.is_none() {
                    return Err(bad());
                }
                let u: usize = t[1].parse().map_err(|_| bad())?;
                let v: usize = t[2].parse().map_err(|_| bad())?;
                if u == 0 || v == 0 {
                    return Err(bad());
                }
                edges.push((u - 1, v - 1));
            }
            Some(_) => return Err(bad()),
        }
    }
    let (n, m) = header.ok_or_else(|| Error::Parse("missing `p mis N M` header".into()))?;
    if edges.len() != m {
        return Err(Error::Parse(format!("header declares {m} edges, found {}", edges.len())));
    }
    Graph::new(n, edges)
}

pub fn write_dimacs(g: &Graph) -> String {
    let mut s = format!("p mis {} {}\n", g.n(), g.m());
    for &(u, v) in g.edges() {
        s.push_str(&format!("e {} {}\n", u + 1, v + 1));
    }
    s
}

/// Reads a graph from a `.json` document or a DIMACS file (any other extension).
pub fn read_graph(path: &Path) -> Result<(Graph, Option<Drawing>)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    if path.extension().is_some_and(|e| e == "json") {
        let doc: GraphDoc = serde_json::from_str(&text)?;
        doc.into_parts()
    } else {
        Ok((parse_dimacs(&text)?, None))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimacs_roundtrip() {
        let g = Graph::petersen();
        assert_eq!(parse_dimacs(&write_dimacs(&g)).unwrap(), g);
    }

    #[test]
    fn dimacs_errors() {
        assert!(parse_dimacs("e 1 2\n").is_err());
        assert!(parse_dimacs("p mis 2 1\ne 0 1\n").is_err());
        assert!(parse_dimacs("p mis 2 2\ne 1 2\n").is_err());
        assert_eq!(parse_dimacs("p mis 2 1\ne 1 1\n").unwrap_err().code(), "SelfLoop");
        let g = parse_dimacs("c hi\np mis 3 2\ne 1 2\ne 2 3\n").unwrap();
        assert_eq!(g, Graph::path(3));
    }

    #[test]
    fn json_coords() {
        let doc: GraphDoc =
            serde_json::from_str(r#"{"n":2,"edges":[[0,1]],"coords":[[0,0],[1,0.5]]}"#).unwrap();
        let (g, d) = doc.into_parts().unwrap();
        assert_eq!(g.m(), 1);
        assert_eq!(d.unwrap().coords[1], [1.0, 0.5]);
    }
}
