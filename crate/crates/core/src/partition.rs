//! Footpath-contracted layout graph, a built-in nested bipartitioner and the
//! cell-id / lowest-common-level primitives.

use std::collections::{BTreeMap, BTreeSet, BinaryHeap, VecDeque};
use std::io::BufRead;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::par::Execution;
use crate::timetable::Timetable;
use crate::StopId;

pub type CellId = u16;
pub const MAX_LEVELS: u8 = 16;
const FM_PASSES: usize = 10;
const ATTEMPTS: usize = 4;

#[derive(Debug, Error)]
pub enum PartitionError {
    #[error("{0} levels requested, at most 16 supported")]
    TooManyLevels(u8),
    #[error("partition file line {line}: {reason}")]
    Import { line: usize, reason: String },
    #[error("stops {0} and {1} share a footpath but lie in different cells")]
    Misaligned(StopId, StopId),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Undirected weighted graph whose vertices are footpath components.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayoutGraph {
    pub(crate) vertex_weight: Vec<u32>,
    pub(crate) offsets: Vec<u32>,
    pub(crate) adj: Vec<u32>,
    pub(crate) adj_weight: Vec<u32>,
    pub(crate) stop_vertex: Vec<u32>,
}

impl LayoutGraph {
    /// Aggregates parallel edges in either direction and drops self-edges.
    pub fn from_edges(vertex_weight: Vec<u32>, edges: &[(u32, u32, u32)], stop_vertex: Vec<u32>) -> Self {
        let n = vertex_weight.len();
        let mut agg: BTreeMap<(u32, u32), u32> = BTreeMap::new();
        for &(u, v, w) in edges {
            if u != v {
                *agg.entry((u.min(v), u.max(v))).or_default() += w;
            }
        }
        let mut lists: Vec<Vec<(u32, u32)>> = vec![Vec::new(); n];
        for (&(u, v), &w) in &agg {
            lists[u as usize].push((v, w));
            lists[v as usize].push((u, w));
        }
        let mut g = LayoutGraph { vertex_weight, offsets: vec![0], adj: Vec::new(), adj_weight: Vec::new(), stop_vertex };
        for mut list in lists {
            list.sort_unstable();
            for (v, w) in list {
                g.adj.push(v);
                g.adj_weight.push(w);
            }
            g.offsets.push(g.adj.len() as u32);
        }
        g
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_weight.len()
    }
    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        self.adj.len() / 2
    }
    pub fn weight(&self, v: u32) -> u32 {
        self.vertex_weight[v as usize]
    }
    pub fn neighbors(&self, v: u32) -> impl Iterator<Item = (u32, u32)> + '_ {
        let r = self.offsets[v as usize] as usize..self.offsets[v as usize + 1] as usize;
        self.adj[r.clone()].iter().copied().zip(self.adj_weight[r].iter().copied())
    }
    pub fn stop_vertex(&self, p: StopId) -> u32 {
        self.stop_vertex[p as usize]
    }
    /// Total weight of edges between `a`-side and the rest, given a side flag per vertex.
    pub fn cut(&self, side: &[bool]) -> u64 {
        let mut cut = 0u64;
        for v in 0..self.vertex_count() as u32 {
            for (u, w) in self.neighbors(v) {
                if v < u && side[v as usize] != side[u as usize] {
                    cut += w as u64;
                }
            }
        }
        cut
    }
}

pub fn build_layout_graph(tt: &Timetable) -> LayoutGraph {
    let n = tt.stop_count();
    let mut stop_vertex = vec![u32::MAX; n];
    let mut weights = Vec::new();
    for p in 0..n as StopId {
        let rep = tt.footpaths().targets(p)[0];
        if rep == p {
            stop_vertex[p as usize] = weights.len() as u32;
            weights.push(0);
        }
        let v = stop_vertex[rep as usize];
        stop_vertex[p as usize] = v;
        weights[v as usize] += 1;
    }
    let mut edges = Vec::new();
    for t in 0..tt.trip_count() as u32 {
        let events = tt.trip_events(t);
        for e in events.start..events.end - 1 {
            edges.push((stop_vertex[tt.event_stop(e) as usize], stop_vertex[tt.event_stop(e + 1) as usize], 1));
        }
    }
    LayoutGraph::from_edges(weights, &edges, stop_vertex)
}

/// Largest side weight a balanced bisection may produce.
///
/// Besides `(1+ε)·W/2` the bound admits `⌈W/2⌉ + w_max - 1`, the smallest value
/// always attainable with indivisible vertex weights.
pub fn balance_limit(total: u64, max_weight: u64, epsilon: f64) -> u64 {
    let relaxed = ((1.0 + epsilon) * total as f64 / 2.0).floor() as u64;
    relaxed.max(total.div_ceil(2) + max_weight.saturating_sub(1))
}

/// Splits `vertices` of `g` into two sides. Edges leaving the vertex set are ignored.
pub fn bisect(g: &LayoutGraph, vertices: &[u32], epsilon: f64, enforce_balance: bool, seed: u64) -> (Vec<u32>, Vec<u32>) {
    let local = Subgraph::new(g, vertices);
    let side = local.bisect(epsilon, enforce_balance, seed);
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for (i, &v) in vertices.iter().enumerate() {
        if side[i] {
            b.push(v);
        } else {
            a.push(v);
        }
    }
    (a, b)
}

struct Subgraph {
    weight: Vec<u64>,
    offsets: Vec<usize>,
    adj: Vec<(usize, i64)>,
}

impl Subgraph {
    fn new(g: &LayoutGraph, vertices: &[u32]) -> Self {
        let index: BTreeMap<u32, usize> = vertices.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut s = Subgraph { weight: Vec::new(), offsets: vec![0], adj: Vec::new() };
        for &v in vertices {
            s.weight.push(g.weight(v) as u64);
            for (u, w) in g.neighbors(v) {
                if let Some(&j) = index.get(&u) {
                    s.adj.push((j, w as i64));
                }
            }
            s.offsets.push(s.adj.len());
        }
        s
    }

    fn n(&self) -> usize {
        self.weight.len()
    }

    fn neighbors(&self, v: usize) -> &[(usize, i64)] {
        &self.adj[self.offsets[v]..self.offsets[v + 1]]
    }

    fn cut(&self, side: &[bool]) -> i64 {
        (0..self.n())
            .flat_map(|v| self.neighbors(v).iter().map(move |&(u, w)| (v, u, w)))
            .filter(|&(v, u, _)| v < u && side[v] != side[u])
            .map(|(_, _, w)| w)
            .sum()
    }

    fn side_weights(&self, side: &[bool]) -> [u64; 2] {
        let mut sw = [0, 0];
        for v in 0..self.n() {
            sw[side[v] as usize] += self.weight[v];
        }
        sw
    }

    /// `true` marks the second side.
    fn bisect(&self, epsilon: f64, enforce: bool, seed: u64) -> Vec<bool> {
        let n = self.n();
        if n <= 1 {
            return vec![false; n];
        }
        let total: u64 = self.weight.iter().sum();
        let limit = balance_limit(total, *self.weight.iter().max().unwrap(), epsilon);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut best: Option<(i64, u64, Vec<bool>)> = None;
        for _ in 0..ATTEMPTS {
            let start = self.pseudo_peripheral(rng.gen_range(0..n));
            let mut side = self.grow(start, total);
            for _ in 0..FM_PASSES {
                if !self.fm_pass(&mut side, limit) {
                    break;
                }
            }
            if !enforce {
                self.greedy_unbounded(&mut side);
            }
            let cut = self.cut(&side);
            let heavy = *self.side_weights(&side).iter().max().unwrap();
            if best.as_ref().map_or(true, |b| (cut, heavy) < (b.0, b.1)) {
                best = Some((cut, heavy, side));
            }
        }
        best.unwrap().2
    }

    fn bfs_far(&self, start: usize) -> (usize, usize) {
        let mut dist = vec![usize::MAX; self.n()];
        dist[start] = 0;
        let mut queue = VecDeque::from([start]);
        let mut far = (0, start);
        while let Some(v) = queue.pop_front() {
            if (dist[v], std::cmp::Reverse(v)) > (far.0, std::cmp::Reverse(far.1)) {
                far = (dist[v], v);
            }
            for &(u, _) in self.neighbors(v) {
                if dist[u] == usize::MAX {
                    dist[u] = dist[v] + 1;
                    queue.push_back(u);
                }
            }
        }
        (far.1, far.0)
    }

    fn pseudo_peripheral(&self, start: usize) -> usize {
        let (mut v, mut ecc) = self.bfs_far(start);
        for _ in 0..4 {
            let (u, e) = self.bfs_far(v);
            if e <= ecc {
                break;
            }
            v = u;
            ecc = e;
        }
        v
    }

    /// Region growing: the first side collects the most strongly attached
    /// vertices until it holds at least half the weight.
    fn grow(&self, start: usize, total: u64) -> Vec<bool> {
        let n = self.n();
        let mut in_a = vec![false; n];
        let mut attach = vec![0i64; n];
        let mut heap = BinaryHeap::from([(0i64, std::cmp::Reverse(start))]);
        let mut wa = 0u64;
        let mut next_free = 0;
        while 2 * wa < total {
            let v = loop {
                match heap.pop() {
                    Some((a, std::cmp::Reverse(v))) if !in_a[v] && a == attach[v] => break Some(v),
                    Some(_) => continue,
                    None => break None,
                }
            };
            let v = match v {
                Some(v) => v,
                None => {
                    while in_a[next_free] {
                        next_free += 1;
                    }
                    next_free
                }
            };
            in_a[v] = true;
            wa += self.weight[v];
            for &(u, w) in self.neighbors(v) {
                if !in_a[u] {
                    attach[u] += w;
                    heap.push((attach[u], std::cmp::Reverse(u)));
                }
            }
        }
        // second side = vertices outside the grown region
        in_a.iter().map(|&a| !a).collect()
    }

    fn gain(&self, side: &[bool], v: usize) -> (i64, i64) {
        let (mut ext, mut int) = (0, 0);
        for &(u, w) in self.neighbors(v) {
            if side[u] == side[v] {
                int += w;
            } else {
                ext += w;
            }
        }
        (ext - int, ext)
    }

    /// One boundary Fiduccia-Mattheyses pass with gain buckets. Returns whether
    /// the cut or the balance improved.
    fn fm_pass(&self, side: &mut [bool], limit: u64) -> bool {
        let n = self.n();
        let mut weights = self.side_weights(side);
        let mut buckets: BTreeMap<i64, BTreeSet<usize>> = BTreeMap::new();
        let mut gain = vec![0i64; n];
        let mut queued = vec![false; n];
        let mut locked = vec![false; n];
        for v in 0..n {
            let (g, ext) = self.gain(side, v);
            gain[v] = g;
            if ext > 0 {
                buckets.entry(g).or_default().insert(v);
                queued[v] = true;
            }
        }
        let start_cut = self.cut(side);
        let start_heavy = weights[0].max(weights[1]);
        let (mut cut, mut best) = (start_cut, (start_cut, start_heavy, 0usize));
        let mut moves: Vec<usize> = Vec::new();
        loop {
            let mut pick = None;
            'outer: for (_, set) in buckets.iter().rev() {
                for &v in set {
                    let to = !side[v] as usize;
                    if weights[to] + self.weight[v] <= limit && weights[1 - to] > self.weight[v] {
                        pick = Some(v);
                        break 'outer;
                    }
                }
            }
            let Some(v) = pick else { break };
            let g = gain[v];
            buckets.get_mut(&g).unwrap().remove(&v);
            if buckets[&g].is_empty() {
                buckets.remove(&g);
            }
            queued[v] = false;
            locked[v] = true;
            let from = side[v] as usize;
            weights[from] -= self.weight[v];
            weights[1 - from] += self.weight[v];
            side[v] = !side[v];
            cut -= g;
            moves.push(v);
            for &(u, _) in self.neighbors(v) {
                if locked[u] {
                    continue;
                }
                if queued[u] {
                    let set = buckets.get_mut(&gain[u]).unwrap();
                    set.remove(&u);
                    if set.is_empty() {
                        buckets.remove(&gain[u]);
                    }
                }
                let (gu, ext) = self.gain(side, u);
                gain[u] = gu;
                queued[u] = ext > 0;
                if queued[u] {
                    buckets.entry(gu).or_default().insert(u);
                }
            }
            let heavy = weights[0].max(weights[1]);
            if (cut, heavy) < (best.0, best.1) {
                best = (cut, heavy, moves.len());
            }
        }
        for &v in &moves[best.2..] {
            side[v] = !side[v];
        }
        best.2 > 0
    }

    /// Moves vertices with strictly positive gain while both sides stay non-empty.
    fn greedy_unbounded(&self, side: &mut [bool]) {
        loop {
            let weights = self.side_weights(side);
            let pick = (0..self.n())
                .map(|v| (self.gain(side, v).0, std::cmp::Reverse(v)))
                .filter(|&(g, std::cmp::Reverse(v))| g > 0 && weights[side[v] as usize] > self.weight[v])
                .max();
            match pick {
                Some((_, std::cmp::Reverse(v))) => side[v] = !side[v],
                None => break,
            }
        }
    }
}

/// Cell ids per layout vertex and per stop for a `levels`-deep nested bipartition.
#[derive(Clone, Debug, PartialEq)]
pub struct NestedPartition {
    pub(crate) levels: u8,
    pub(crate) level_imbalance: Vec<Option<f64>>,
    pub(crate) vertex_cell: Vec<CellId>,
    pub(crate) stop_cell: Vec<CellId>,
}

impl NestedPartition {
    pub fn levels(&self) -> u8 {
        self.levels
    }
    /// Imbalance bound used when splitting cells of level `l+1` into level `l`;
    /// `None` for the unconstrained top level.
    pub fn level_imbalance(&self) -> &[Option<f64>] {
        &self.level_imbalance
    }
    pub fn cell(&self, p: StopId) -> CellId {
        self.stop_cell[p as usize]
    }
    pub fn cell_at(&self, p: StopId, level: u8) -> CellId {
        ((self.stop_cell[p as usize] as u32) >> level) as CellId
    }
    pub fn stop_cells(&self) -> &[CellId] {
        &self.stop_cell
    }
    pub fn vertex_cells(&self) -> &[CellId] {
        &self.vertex_cell
    }
    pub fn lcl(&self, p: StopId, q: StopId) -> u8 {
        lcl(self.cell(p), self.cell(q))
    }

    /// Builds a partition from per-stop cell ids, checking footpath alignment.
    pub fn from_stop_cells(tt: &Timetable, levels: u8, stop_cell: Vec<CellId>) -> Result<Self, PartitionError> {
        if levels > MAX_LEVELS {
            return Err(PartitionError::TooManyLevels(levels));
        }
        for p in 0..tt.stop_count() as StopId {
            if levels < 16 && stop_cell[p as usize] as u32 >= 1 << levels {
                return Err(PartitionError::Import { line: p as usize, reason: format!("cell id of stop {p} exceeds {levels} bits") });
            }
            for &q in tt.footpaths().targets(p) {
                if stop_cell[p as usize] != stop_cell[q as usize] {
                    return Err(PartitionError::Misaligned(p, q));
                }
            }
        }
        let g = build_layout_graph(tt);
        let mut vertex_cell = vec![0; g.vertex_count()];
        for p in 0..tt.stop_count() {
            vertex_cell[g.stop_vertex[p] as usize] = stop_cell[p];
        }
        Ok(NestedPartition { levels, level_imbalance: vec![None; levels as usize], vertex_cell, stop_cell })
    }

    /// Reads `stopId cellId` pairs, one per line. Every stop must be listed.
    pub fn import(tt: &Timetable, levels: u8, reader: impl BufRead) -> Result<Self, PartitionError> {
        let mut cells = vec![None; tt.stop_count()];
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |reason: String| PartitionError::Import { line: i + 1, reason };
            let mut parts = line.split_whitespace();
            let (Some(p), Some(c), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(err("expected `stopId cellId`".into()));
            };
            let p: usize = p.parse().map_err(|_| err(format!("bad stop id {p}")))?;
            let c: CellId = c.parse().map_err(|_| err(format!("bad cell id {c}")))?;
            if p >= cells.len() {
                return Err(err(format!("stop {p} out of range")));
            }
            cells[p] = Some(c);
        }
        let stop_cell = cells
            .iter()
            .enumerate()
            .map(|(p, c)| c.ok_or(PartitionError::Import { line: 0, reason: format!("stop {p} missing") }))
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_stop_cells(tt, levels, stop_cell)
    }
}

/// Lowest level on which cells `a` and `b` coincide.
pub fn lcl(a: CellId, b: CellId) -> u8 {
    (CellId::BITS - (a ^ b).leading_zeros()) as u8
}

/// Shifted form of the LCL test: relax iff `rank ≥ min(lcl(p,s), lcl(p,t))`.
pub fn lcl_test(rank: u8, cp: CellId, cs: CellId, ct: CellId) -> bool {
    let (xs, xt) = ((cp ^ cs) as u32, (cp ^ ct) as u32);
    !((xs >> rank) != 0 && (xt >> rank) != 0)
}

/// SplitMix64 finalizer used to derive per-cell seeds.
fn derive_seed(parent: u64, cell: u64) -> u64 {
    let mut z = parent ^ cell.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(0x6a09_e667_f3bc_c909);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn nested_bipartition(g: &LayoutGraph, levels: u8, epsilon: f64, seed: u64) -> Result<NestedPartition, PartitionError> {
    nested_bipartition_with(g, levels, epsilon, seed, Execution::default())
}

/// Top-down recursive bisection. The top level runs without a balance bound,
/// every lower level with `epsilon`.
pub fn nested_bipartition_with(
    g: &LayoutGraph,
    levels: u8,
    epsilon: f64,
    seed: u64,
    exec: Execution,
) -> Result<NestedPartition, PartitionError> {
    if levels > MAX_LEVELS {
        return Err(PartitionError::TooManyLevels(levels));
    }
    fn recurse(g: &LayoutGraph, vertices: Vec<u32>, level: u8, top: u8, eps: f64, seed: u64, exec: Execution) -> Vec<(u32, CellId)> {
        if level == 0 || vertices.is_empty() {
            return vertices.into_iter().map(|v| (v, 0)).collect();
        }
        let (a, b) = bisect(g, &vertices, eps, level != top, seed);
        let (sa, sb) = (derive_seed(seed, 0), derive_seed(seed, 1));
        let (ra, rb) = exec.join(
            || recurse(g, a, level - 1, top, eps, sa, exec),
            || recurse(g, b, level - 1, top, eps, sb, exec),
        );
        let bit = 1u32 << (level - 1);
        ra.into_iter().chain(rb.into_iter().map(|(v, c)| (v, (c as u32 | bit) as CellId))).collect()
    }
    let mut vertex_cell = vec![0; g.vertex_count()];
    for (v, c) in recurse(g, (0..g.vertex_count() as u32).collect(), levels, levels, epsilon, seed, exec) {
        vertex_cell[v as usize] = c;
    }
    let stop_cell = g.stop_vertex.iter().map(|&v| vertex_cell[v as usize]).collect();
    let level_imbalance = (0..levels).map(|l| if l + 1 == levels { None } else { Some(epsilon) }).collect();
    Ok(NestedPartition { levels, level_imbalance, vertex_cell, stop_cell })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timetable::{TimetableBuilder, DAY};
    use proptest::prelude::{prop_assert_eq, proptest};

    fn unit_graph(n: u32, edges: &[(u32, u32, u32)]) -> LayoutGraph {
        LayoutGraph::from_edges(vec![1; n as usize], edges, (0..n).collect())
    }

    fn two_cliques() -> LayoutGraph {
        let mut edges = Vec::new();
        for base in [0, 5] {
            for i in 0..5 {
                for j in i + 1..5 {
                    edges.push((base + i, base + j, 3));
                }
            }
        }
        edges.push((4, 5, 1));
        unit_graph(10, &edges)
    }

    fn side_flags(n: usize, b: &[u32]) -> Vec<bool> {
        let mut side = vec![false; n];
        for &v in b {
            side[v as usize] = true;
        }
        side
    }

    #[test]
    fn layout_graph_contracts_footpaths() {
        let mut b = TimetableBuilder::new(DAY);
        let [x, y] = ["x", "y"].map(|n| b.add_stop(n, None, None));
        b.add_footpath(x, y, 30);
        b.add_trip("t", &[(x, 0, 0), (y, 60, 60)]);
        let g = build_layout_graph(&b.build().unwrap());
        assert_eq!((g.vertex_count(), g.edge_count()), (1, 0));
        assert_eq!(g.weight(0), 2);
    }

    #[test]
    fn layout_graph_aggregates_connections() {
        let mut b = TimetableBuilder::new(DAY);
        let [x, y, z] = ["a", "b", "c"].map(|n| b.add_stop(n, None, None));
        for k in 0..3 {
            b.add_trip(format!("{k}"), &[(x, k * 100, k * 100), (y, k * 100 + 10, k * 100 + 10)]);
        }
        b.add_trip("bc", &[(y, 0, 0), (z, 10, 10)]);
        let g = build_layout_graph(&b.build().unwrap());
        assert_eq!(g.vertex_count(), 3);
        let mut weights: Vec<u32> = g.adj_weight.clone();
        weights.sort();
        assert_eq!(weights, vec![1, 1, 3, 3]);
    }

    #[test]
    fn path_graph_is_cut_once() {
        let g = unit_graph(4, &[(0, 1, 1), (1, 2, 1), (2, 3, 1)]);
        let (a, b) = bisect(&g, &[0, 1, 2, 3], 0.0, true, 7);
        assert_eq!((a.len(), b.len()), (2, 2));
        assert_eq!(g.cut(&side_flags(4, &b)), 1);
    }

    #[test]
    fn cliques_are_split_at_the_bridge() {
        let g = two_cliques();
        for seed in 0..10 {
            let (_, b) = bisect(&g, &(0..10).collect::<Vec<_>>(), 0.25, true, seed);
            assert_eq!(g.cut(&side_flags(10, &b)), 1);
        }
    }

    #[test]
    fn single_vertex_cell_is_trivial() {
        let g = unit_graph(3, &[]);
        assert_eq!(bisect(&g, &[2], 0.1, true, 0), (vec![2], vec![]));
    }

    #[test]
    fn random_graphs_near_brute_force_optimum() {
        let mut good = 0;
        let seeds = 100;
        for seed in 0..seeds {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let weights: Vec<u32> = (0..12).map(|_| rng.gen_range(1..4)).collect();
            let mut edges = Vec::new();
            for u in 0..12u32 {
                for v in u + 1..12 {
                    if rng.gen_bool(0.3) {
                        edges.push((u, v, rng.gen_range(1..10)));
                    }
                }
            }
            let g = LayoutGraph::from_edges(weights.clone(), &edges, (0..12).collect());
            let total: u64 = weights.iter().map(|&w| w as u64).sum();
            let limit = balance_limit(total, *weights.iter().max().unwrap() as u64, 0.25);
            let mut optimum = u64::MAX;
            for mask in 0u32..1 << 11 {
                let side: Vec<bool> = (0..12).map(|v| v < 11 && mask >> v & 1 == 1).collect();
                let wb: u64 = (0..12).filter(|&v| side[v]).map(|v| weights[v] as u64).sum();
                if wb.max(total - wb) <= limit {
                    optimum = optimum.min(g.cut(&side));
                }
            }
            let (a, b) = bisect(&g, &(0..12).collect::<Vec<_>>(), 0.25, true, seed);
            let side = side_flags(12, &b);
            let wb: u64 = b.iter().map(|&v| weights[v as usize] as u64).sum();
            let wa: u64 = a.iter().map(|&v| weights[v as usize] as u64).sum();
            assert!(wa.max(wb) <= limit, "seed {seed} violates balance");
            if g.cut(&side) <= 2 * optimum {
                good += 1;
            }
        }
        assert!(good * 10 >= seeds * 9, "only {good}/{seeds} within factor 2");
    }

    #[test]
    fn zero_levels_gives_single_cell() {
        let p = nested_bipartition(&two_cliques(), 0, 0.25, 1).unwrap();
        assert!(p.vertex_cells().iter().all(|&c| c == 0));
    }

    #[test]
    fn too_many_levels_rejected() {
        assert!(matches!(nested_bipartition(&two_cliques(), 17, 0.25, 1), Err(PartitionError::TooManyLevels(17))));
    }

    #[test]
    fn one_level_splits_cliques() {
        let p = nested_bipartition(&two_cliques(), 1, 0.25, 3).unwrap();
        let c = p.vertex_cells();
        assert!(c[..5].iter().all(|&x| x == c[0]));
        assert!(c[5..].iter().all(|&x| x == c[5]));
        assert_ne!(c[0], c[5]);
    }

    fn grid(w: u32, h: u32) -> LayoutGraph {
        let mut edges = Vec::new();
        for y in 0..h {
            for x in 0..w {
                let v = y * w + x;
                if x + 1 < w {
                    edges.push((v, v + 1, 1));
                }
                if y + 1 < h {
                    edges.push((v, v + w, 1));
                }
            }
        }
        unit_graph(w * h, &edges)
    }

    #[test]
    fn grid_partition_nests_and_balances() {
        let g = grid(8, 5);
        let levels = 3;
        let p = nested_bipartition(&g, levels, 0.25, 11).unwrap();
        let cells = p.vertex_cells();
        for l in 1..=levels {
            let mut parents: BTreeMap<u32, BTreeSet<u32>> = BTreeMap::new();
            for &c in cells {
                parents.entry(c as u32 >> l).or_default().insert(c as u32 >> (l - 1));
            }
            for (parent, children) in parents {
                assert!(children.iter().all(|&ch| ch >> 1 == parent));
                if l < levels {
                    let weight = |cell: u32| cells.iter().filter(|&&c| c as u32 >> (l - 1) == cell).count() as u64;
                    let total: u64 = children.iter().map(|&ch| weight(ch)).sum();
                    for &ch in &children {
                        assert!(weight(ch) <= balance_limit(total, 1, 0.25));
                    }
                }
            }
        }
    }

    #[test]
    fn partition_is_deterministic_across_policies() {
        let g = grid(10, 10);
        let a = nested_bipartition_with(&g, 4, 0.5, 99, Execution::Sequential).unwrap();
        let b = nested_bipartition_with(&g, 4, 0.5, 99, Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn lcl_examples() {
        assert_eq!(lcl(0b001, 0b011), 2);
        assert_eq!(lcl(5, 5), 0);
        assert_eq!(lcl(0, 0x8000), 16);
    }

    fn lcl_by_levels(a: CellId, b: CellId) -> u8 {
        (0..=16u8).find(|&l| (a as u32) >> l == (b as u32) >> l).unwrap()
    }

    proptest! {
        #[test]
        fn lcl_matches_level_loop(a in 0u16..1024, b in 0u16..1024) {
            prop_assert_eq!(lcl(a, b), lcl_by_levels(a, b));
        }
    }

    #[test]
    fn lcl_test_matches_definition_on_six_bits() {
        for rank in 0..=6u8 {
            for p in 0..64u16 {
                for s in 0..64u16 {
                    for t in 0..64u16 {
                        let direct = rank >= lcl_by_levels(p, s).min(lcl_by_levels(p, t));
                        assert_eq!(lcl_test(rank, p, s, t), direct);
                    }
                }
            }
        }
    }

    #[test]
    fn lcl_test_trivial_cases() {
        assert!((0..=16).all(|r| lcl_test(r, 9, 9, 1234)));
        assert!(lcl_test(16, 0, 0xffff, 0x8000));
    }

    #[test]
    fn import_checks_alignment() {
        let mut b = TimetableBuilder::new(DAY);
        let [x, y, z] = ["x", "y", "z"].map(|n| b.add_stop(n, None, None));
        b.add_footpath(x, y, 10);
        b.add_trip("t", &[(x, 0, 0), (z, 10, 10)]);
        let tt = b.build().unwrap();
        let ok = NestedPartition::import(&tt, 1, "0 1\n1 1\n2 0\n".as_bytes()).unwrap();
        assert_eq!(ok.stop_cells(), &[1, 1, 0]);
        assert!(matches!(NestedPartition::import(&tt, 1, "0 1\n1 0\n2 0\n".as_bytes()), Err(PartitionError::Misaligned(..))));
        assert!(NestedPartition::import(&tt, 1, "0 1\n".as_bytes()).is_err());
    }
}
