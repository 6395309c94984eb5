//! Graph Laplacians from SNAP-style edge lists.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::io::BufRead;
use std::path::Path;

use super::{DMode, ProblemKind, ProblemPair};
use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// Undirected weighted edge between two original vertex ids.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: u64,
    pub v: u64,
    pub weight: f64,
}

impl Edge {
    pub fn unit(u: u64, v: u64) -> Self {
        Self { u, v, weight: 1.0 }
    }
}

/// Parses whitespace separated `u v [w]` lines; `#` and `%` start comments.
pub fn parse_edge_list<R: BufRead>(reader: R) -> Result<Vec<Edge>> {
    let mut edges = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') || t.starts_with('%') {
            continue;
        }
        let parts: Vec<&str> = t.split_whitespace().collect();
        if parts.len() < 2 {
            return Err(Error::Parse {
                line: idx + 1,
                msg: format!("expected 'u v [w]', got '{t}'"),
            });
        }
        let id = |s: &str| {
            s.parse::<u64>().map_err(|e| Error::Parse {
                line: idx + 1,
                msg: format!("{s}: {e}"),
            })
        };
        let weight = match parts.get(2) {
            Some(w) => w.parse::<f64>().map_err(|e| Error::Parse {
                line: idx + 1,
                msg: format!("{w}: {e}"),
            })?,
            None => 1.0,
        };
        if !(weight > 0.0) || !weight.is_finite() {
            return Err(Error::Parse {
                line: idx + 1,
                msg: format!("edge weight must be positive, got {weight}"),
            });
        }
        edges.push(Edge {
            u: id(parts[0])?,
            v: id(parts[1])?,
            weight,
        });
    }
    Ok(edges)
}

pub fn read_edge_list_file(path: impl AsRef<Path>) -> Result<Vec<Edge>> {
    let f = std::fs::File::open(path)?;
    parse_edge_list(std::io::BufReader::new(f))
}

/// Laplacian of the largest connected component with one vertex grounded.
#[derive(Debug, Clone)]
pub struct GraphProblem {
    pub pair: ProblemPair,
    /// Full (singular) Laplacian of the kept component.
    pub laplacian: CsrMatrix,
    /// Original id of every row of the grounded matrix.
    pub vertex_ids: Vec<u64>,
    /// Original id of the grounded vertex.
    pub grounded: u64,
}

/// Symmetric, deduplicated, loop-free adjacency of the largest component.
/// Returns `(sorted vertex ids, adjacency lists with weights)`.
fn largest_component(edges: &[Edge]) -> Result<(Vec<u64>, Vec<Vec<(usize, f64)>>)> {
    let mut unique: BTreeMap<(u64, u64), f64> = BTreeMap::new();
    for e in edges {
        if e.u == e.v {
            continue;
        }
        let key = (e.u.min(e.v), e.u.max(e.v));
        unique.entry(key).or_insert(e.weight);
    }
    if unique.is_empty() {
        return Err(Error::InvalidArgument("graph has no edges".into()));
    }
    let ids: Vec<u64> = unique
        .keys()
        .flat_map(|&(a, b)| [a, b])
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let index: BTreeMap<u64, usize> = ids.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); ids.len()];
    for (&(a, b), &w) in &unique {
        let (ia, ib) = (index[&a], index[&b]);
        adj[ia].push((ib, w));
        adj[ib].push((ia, w));
    }

    let mut comp = vec![usize::MAX; ids.len()];
    let mut best: (usize, usize) = (0, 0); // (size, component id)
    let mut ncomp = 0;
    for s in 0..ids.len() {
        if comp[s] != usize::MAX {
            continue;
        }
        let mut size = 0;
        let mut queue = VecDeque::from([s]);
        comp[s] = ncomp;
        while let Some(v) = queue.pop_front() {
            size += 1;
            for &(u, _) in &adj[v] {
                if comp[u] == usize::MAX {
                    comp[u] = ncomp;
                    queue.push_back(u);
                }
            }
        }
        if size > best.0 {
            best = (size, ncomp);
        }
        ncomp += 1;
    }

    let keep: Vec<usize> = (0..ids.len()).filter(|&v| comp[v] == best.1).collect();
    let mut new_index = vec![usize::MAX; ids.len()];
    for (k, &v) in keep.iter().enumerate() {
        new_index[v] = k;
    }
    let kept_ids = keep.iter().map(|&v| ids[v]).collect();
    let kept_adj = keep
        .iter()
        .map(|&v| {
            let mut row: Vec<(usize, f64)> = adj[v].iter().map(|&(u, w)| (new_index[u], w)).collect();
            row.sort_by_key(|e| e.0);
            row
        })
        .collect();
    Ok((kept_ids, kept_adj))
}

/// `L = Deg - Adj` of the largest component, grounded at the lowest-index
/// vertex of maximum degree.
pub fn load_graph_laplacian(edges: &[Edge], d_mode: DMode) -> Result<GraphProblem> {
    let (ids, adj) = largest_component(edges)?;
    let n = ids.len();
    let mut triplets = Vec::new();
    for (i, row) in adj.iter().enumerate() {
        let deg: f64 = row.iter().map(|e| e.1).sum();
        triplets.push((i, i, deg));
        for &(j, w) in row {
            triplets.push((i, j, -w));
        }
    }
    let laplacian = CsrMatrix::from_triplets(n, n, &triplets)?.into_symmetric()?;

    let grounded_row = (0..n)
        .max_by(|&a, &b| adj[a].len().cmp(&adj[b].len()).then(b.cmp(&a)))
        .expect("component is nonempty");
    let keep: Vec<usize> = (0..n).filter(|&i| i != grounded_row).collect();
    let mut map = vec![usize::MAX; n];
    for (k, &i) in keep.iter().enumerate() {
        map[i] = k;
    }
    let grounded_triplets: Vec<(usize, usize, f64)> = triplets
        .iter()
        .filter(|t| t.0 != grounded_row && t.1 != grounded_row)
        .map(|&(i, j, v)| (map[i], map[j], v))
        .collect();
    let a = CsrMatrix::from_triplets(n - 1, n - 1, &grounded_triplets)?.into_symmetric()?;
    let pair = ProblemPair::new(a, d_mode, ProblemKind::Graph)?;
    Ok(GraphProblem {
        pair,
        laplacian,
        vertex_ids: keep.iter().map(|&i| ids[i]).collect(),
        grounded: ids[grounded_row],
    })
}
