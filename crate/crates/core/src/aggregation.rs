//! Greedy nonoverlapping aggregation of the index set.

use std::collections::{BTreeSet, VecDeque};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// Partition of `0..n` into `num_aggregates` disjoint sets.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AggregateMap {
    assignment: Vec<usize>,
    members: Vec<Vec<usize>>,
}

impl AggregateMap {
    /// Builds a map from a per-vertex assignment; aggregate ids must be
    /// `0..k` with every id used.
    pub fn from_assignment(assignment: Vec<usize>) -> Result<Self> {
        let k = assignment.iter().map(|&a| a + 1).max().unwrap_or(0);
        let mut members = vec![Vec::new(); k];
        for (v, &a) in assignment.iter().enumerate() {
            members[a].push(v);
        }
        if let Some(empty) = members.iter().position(|m| m.is_empty()) {
            return Err(Error::InvalidArgument(format!("aggregate {empty} is empty")));
        }
        Ok(Self { assignment, members })
    }

    pub fn n(&self) -> usize {
        self.assignment.len()
    }

    pub fn num_aggregates(&self) -> usize {
        self.members.len()
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    /// Vertices of aggregate `i`, ascending.
    pub fn members(&self, i: usize) -> &[usize] {
        &self.members[i]
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.members.iter().map(Vec::len).collect()
    }

    /// Writes the `vertex,aggregate` CSV dump.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "vertex,aggregate")?;
        for (v, a) in self.assignment.iter().enumerate() {
            writeln!(w, "{v},{a}")?;
        }
        Ok(())
    }
}

/// Adjacency of the pattern (`power = 1`) or of its square (`power = 2`),
/// diagonal excluded, neighbors ascending.
fn adjacency(pattern: &CsrMatrix, power: u8) -> Result<Vec<Vec<usize>>> {
    if pattern.nrows() != pattern.ncols() {
        return Err(Error::DimensionMismatch {
            op: "greedy_aggregate",
            expected: pattern.nrows(),
            got: pattern.ncols(),
        });
    }
    let n = pattern.nrows();
    let direct: Vec<Vec<usize>> = (0..n)
        .map(|i| pattern.row(i).0.iter().copied().filter(|&j| j != i).collect())
        .collect();
    match power {
        1 => Ok(direct),
        2 => Ok((0..n)
            .map(|i| {
                let mut set = BTreeSet::new();
                for &j in &direct[i] {
                    set.insert(j);
                    set.extend(direct[j].iter().copied());
                }
                set.remove(&i);
                set.into_iter().collect()
            })
            .collect()),
        p => Err(Error::InvalidArgument(format!("aggregation power must be 1 or 2, got {p}"))),
    }
}

/// Lowest-index-seeded BFS growth to `target` vertices, then aggregates
/// below `max(2, target / 2)` are merged into their most strongly connected
/// neighbor aggregate (ties to the lowest id).
pub fn greedy_aggregate(pattern: &CsrMatrix, target: usize, power: u8) -> Result<AggregateMap> {
    if target == 0 {
        return Err(Error::InvalidArgument("aggregate target size must be positive".into()));
    }
    let adj = adjacency(pattern, power)?;
    let n = adj.len();
    const NONE: usize = usize::MAX;
    let mut agg = vec![NONE; n];
    let mut count = 0;
    for seed in 0..n {
        if agg[seed] != NONE {
            continue;
        }
        agg[seed] = count;
        let mut size = 1;
        let mut queue = VecDeque::from([seed]);
        'grow: while let Some(v) = queue.pop_front() {
            for &u in &adj[v] {
                if size >= target {
                    break 'grow;
                }
                if agg[u] == NONE {
                    agg[u] = count;
                    size += 1;
                    queue.push_back(u);
                }
            }
        }
        count += 1;
    }

    let min_size = (target / 2).max(2);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); count];
    for (v, &a) in agg.iter().enumerate() {
        members[a].push(v);
    }
    for a in 0..count {
        let len = members[a].len();
        if len == 0 || len >= min_size {
            continue;
        }
        let mut links: Vec<(usize, usize)> = Vec::new(); // (aggregate, edge count)
        for &v in &members[a] {
            for &u in &adj[v] {
                let b = agg[u];
                if b == a {
                    continue;
                }
                match links.iter_mut().find(|l| l.0 == b) {
                    Some(l) => l.1 += 1,
                    None => links.push((b, 1)),
                }
            }
        }
        let Some(&(into, _)) = links
            .iter()
            .max_by(|x, y| x.1.cmp(&y.1).then(y.0.cmp(&x.0)))
        else {
            continue; // isolated: keep as its own aggregate
        };
        let moved = std::mem::take(&mut members[a]);
        for &v in &moved {
            agg[v] = into;
        }
        members[into].extend(moved);
    }

    let mut renumber = vec![NONE; count];
    let mut next = 0;
    for (a, m) in members.iter().enumerate() {
        if !m.is_empty() {
            renumber[a] = next;
            next += 1;
        }
    }
    let assignment = agg.iter().map(|&a| renumber[a]).collect();
    AggregateMap::from_assignment(assignment)
}

/// `N / N_c`.
pub fn coarsening_ratio(map: &AggregateMap, n_c: usize) -> Result<f64> {
    if n_c == 0 {
        return Err(Error::InvalidArgument("coarse dimension is zero".into()));
    }
    Ok(map.n() as f64 / n_c as f64)
}

/// True when every aggregate induces a connected subgraph of `pattern`.
pub fn aggregates_connected(pattern: &CsrMatrix, map: &AggregateMap, power: u8) -> Result<bool> {
    let adj = adjacency(pattern, power)?;
    for i in 0..map.num_aggregates() {
        let m = map.members(i);
        let mut seen = BTreeSet::from([m[0]]);
        let mut queue = VecDeque::from([m[0]]);
        while let Some(v) = queue.pop_front() {
            for &u in &adj[v] {
                if map.assignment()[u] == i && seen.insert(u) {
                    queue.push_back(u);
                }
            }
        }
        if seen.len() != m.len() {
            return Ok(false);
        }
    }
    Ok(true)
}
