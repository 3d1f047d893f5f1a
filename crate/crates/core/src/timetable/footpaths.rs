use std::collections::BTreeMap;

use super::TimetableError;
use crate::{StopId, Time};

pub const DEFAULT_CLOSURE_CAP: usize = 300;

/// Symmetric, transitively closed footpaths in adjacency-array layout.
///
/// Every stop has a zero-duration self-loop and the entries of one source
/// are sorted by target stop id.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Footpaths {
    pub(crate) offsets: Vec<u32>,
    pub(crate) targets: Vec<StopId>,
    pub(crate) durations: Vec<Time>,
}

impl Footpaths {
    pub fn stop_count(&self) -> usize {
        self.offsets.len().saturating_sub(1)
    }

    /// Number of stored entries, self-loops included.
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn targets(&self, p: StopId) -> &[StopId] {
        &self.targets[self.range(p)]
    }

    pub fn durations(&self, p: StopId) -> &[Time] {
        &self.durations[self.range(p)]
    }

    /// `(target, duration)` pairs leaving `p`, ordered by target.
    pub fn from(&self, p: StopId) -> impl Iterator<Item = (StopId, Time)> + '_ {
        self.targets(p).iter().copied().zip(self.durations(p).iter().copied())
    }

    pub fn duration(&self, p: StopId, q: StopId) -> Option<Time> {
        let targets = self.targets(p);
        targets.binary_search(&q).ok().map(|i| self.durations(p)[i])
    }

    fn range(&self, p: StopId) -> std::ops::Range<usize> {
        self.offsets[p as usize] as usize..self.offsets[p as usize + 1] as usize
    }

    pub(crate) fn validate(&self, stops: usize) -> Result<(), String> {
        if self.stop_count() != stops {
            return Err("footpath offsets do not match stop count".into());
        }
        for p in 0..stops as StopId {
            if self.duration(p, p) != Some(0) {
                return Err(format!("stop {p} lacks its zero self-loop"));
            }
            if !self.targets(p).windows(2).all(|w| w[0] < w[1]) {
                return Err(format!("footpaths of stop {p} not sorted"));
            }
            for (q, d) in self.from(p) {
                if q as usize >= stops || self.duration(q, p) != Some(d) {
                    return Err(format!("footpath ({p},{q}) not symmetric"));
                }
            }
        }
        Ok(())
    }
}

/// Min-plus closure of `raw` within each connected footpath component.
///
/// Raw entries are symmetrized first; entries from a stop to itself are ignored
/// since every stop gets a zero-duration self-loop.
pub fn close_footpaths(
    stop_count: usize,
    raw: &[(StopId, StopId, Time)],
    cap: usize,
) -> Result<Footpaths, TimetableError> {
    let mut direct: BTreeMap<(StopId, StopId), Time> = BTreeMap::new();
    let mut parent: Vec<usize> = (0..stop_count).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for &(p, q, d) in raw {
        if p as usize >= stop_count {
            return Err(TimetableError::UnknownStop(p as u64));
        }
        if q as usize >= stop_count {
            return Err(TimetableError::UnknownStop(q as u64));
        }
        if p == q {
            continue;
        }
        let key = (p.min(q), p.max(q));
        let entry = direct.entry(key).or_insert(d);
        *entry = (*entry).min(d);
        let (a, b) = (find(&mut parent, p as usize), find(&mut parent, q as usize));
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut members: BTreeMap<usize, Vec<StopId>> = BTreeMap::new();
    for p in 0..stop_count {
        let root = find(&mut parent, p);
        members.entry(root).or_default().push(p as StopId);
    }
    let mut adjacency: Vec<Vec<(StopId, Time)>> = (0..stop_count as StopId).map(|p| vec![(p, 0)]).collect();
    for comp in members.values().filter(|c| c.len() > 1) {
        if comp.len() > cap {
            return Err(TimetableError::ClosureBlowup { stop: comp[0], size: comp.len(), cap });
        }
        let k = comp.len();
        let local = |p: StopId| comp.binary_search(&p).unwrap();
        let mut dist = vec![Time::MAX; k * k];
        for i in 0..k {
            dist[i * k + i] = 0;
        }
        for (&(p, q), &d) in direct.range((comp[0], 0)..) {
            if p > comp[k - 1] {
                break;
            }
            if comp.binary_search(&p).is_err() {
                continue;
            }
            let (i, j) = (local(p), local(q));
            dist[i * k + j] = dist[i * k + j].min(d);
            dist[j * k + i] = dist[j * k + i].min(d);
        }
        for m in 0..k {
            for i in 0..k {
                let im = dist[i * k + m];
                if im == Time::MAX {
                    continue;
                }
                for j in 0..k {
                    let mj = dist[m * k + j];
                    if mj != Time::MAX && im + mj < dist[i * k + j] {
                        dist[i * k + j] = im + mj;
                    }
                }
            }
        }
        for i in 0..k {
            let list = &mut adjacency[comp[i] as usize];
            list.clear();
            list.extend((0..k).map(|j| (comp[j], dist[i * k + j])));
        }
    }
    let mut fp = Footpaths { offsets: vec![0], targets: Vec::new(), durations: Vec::new() };
    for list in adjacency {
        for (q, d) in list {
            fp.targets.push(q);
            fp.durations.push(d);
        }
        fp.offsets.push(fp.targets.len() as u32);
    }
    Ok(fp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn floyd_warshall(n: usize, raw: &[(StopId, StopId, Time)]) -> Vec<Option<Time>> {
        let mut d = vec![None; n * n];
        for i in 0..n {
            d[i * n + i] = Some(0);
        }
        for &(p, q, w) in raw {
            let (p, q) = (p as usize, q as usize);
            if p == q {
                continue;
            }
            for (a, b) in [(p, q), (q, p)] {
                d[a * n + b] = Some(d[a * n + b].map_or(w, |x: Time| x.min(w)));
            }
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if let (Some(a), Some(b)) = (d[i * n + k], d[k * n + j]) {
                        if d[i * n + j].map_or(true, |x| a + b < x) {
                            d[i * n + j] = Some(a + b);
                        }
                    }
                }
            }
        }
        d
    }

    #[test]
    fn empty_input_gives_self_loops() {
        let fp = close_footpaths(3, &[], 300).unwrap();
        assert_eq!(fp.len(), 3);
        for p in 0..3 {
            assert_eq!(fp.targets(p), &[p]);
            assert_eq!(fp.duration(p, p), Some(0));
        }
    }

    #[test]
    fn chain_is_closed() {
        let fp = close_footpaths(3, &[(0, 1, 60), (1, 2, 60)], 300).unwrap();
        assert_eq!(fp.duration(0, 2), Some(120));
        assert_eq!(fp.duration(2, 0), Some(120));
        assert_eq!(fp.validate(3), Ok(()));
    }

    #[test]
    fn oversized_component_is_rejected() {
        let raw: Vec<_> = (0..4).map(|i| (i, i + 1, 10)).collect();
        match close_footpaths(5, &raw, 4) {
            Err(TimetableError::ClosureBlowup { stop: 0, size: 5, cap: 4 }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    proptest! {
        #[test]
        fn matches_floyd_warshall(edges in prop::collection::vec((0u32..8, 0u32..8, 0u32..500), 0..14)) {
            let fp = close_footpaths(8, &edges, 300).unwrap();
            let oracle = floyd_warshall(8, &edges);
            for p in 0..8u32 {
                for q in 0..8u32 {
                    prop_assert_eq!(fp.duration(p, q), oracle[(p * 8 + q) as usize]);
                }
            }
            prop_assert_eq!(fp.validate(8), Ok(()));
        }

        #[test]
        fn triangle_inequality_holds(edges in prop::collection::vec((0u32..10, 0u32..10, 1u32..300), 0..20)) {
            let fp = close_footpaths(10, &edges, 300).unwrap();
            for p in 0..10u32 {
                for (q, pq) in fp.from(p) {
                    for (r, qr) in fp.from(q) {
                        let pr = fp.duration(p, r);
                        prop_assert!(pr.is_some_and(|d| d <= pq + qr));
                    }
                }
            }
        }
    }
}
