use super::RawTrip;
use crate::Time;

/// `a ≺ b`: strictly earlier arrival and departure at every index.
pub fn precedes(a: (&[Time], &[Time]), b: (&[Time], &[Time])) -> bool {
    a.0.len() == b.0.len()
        && a.0.iter().zip(b.0).all(|(x, y)| x < y)
        && a.1.iter().zip(b.1).all(|(x, y)| x < y)
}

/// Greedy line grouping. Returns member trip indices per line, each list in `≺` order.
///
/// Trips are visited sorted by stop sequence, then departure vector, then arrival
/// vector; each joins the first line with the same stop sequence whose last trip
/// precedes it, otherwise it opens a new line.
pub fn group_lines(trips: &[RawTrip]) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..trips.len()).collect();
    order.sort_by(|&a, &b| {
        let (x, y) = (&trips[a], &trips[b]);
        x.stops.cmp(&y.stops).then_with(|| x.dep.cmp(&y.dep)).then_with(|| x.arr.cmp(&y.arr)).then(a.cmp(&b))
    });
    let mut lines: Vec<Vec<usize>> = Vec::new();
    let mut group_start = 0;
    for (pos, &t) in order.iter().enumerate() {
        if pos > 0 && trips[order[pos - 1]].stops != trips[t].stops {
            group_start = lines.len();
        }
        let trip = &trips[t];
        let slot = lines[group_start..].iter().position(|members| {
            let last = &trips[*members.last().unwrap()];
            precedes((&last.arr, &last.dep), (&trip.arr, &trip.dep))
        });
        match slot {
            Some(i) => lines[group_start + i].push(t),
            None => lines.push(vec![t]),
        }
    }
    lines
}
