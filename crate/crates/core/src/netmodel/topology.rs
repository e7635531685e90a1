use std::collections::VecDeque;

use super::case::SystemCase;
use crate::{Error, Result};

/// Generator (0-based position in the case) closest to `bus`.
///
/// Closeness is branch-hop count; ties go to the smallest summed series
/// impedance magnitude along a shortest-hop path, then to the lowest
/// generator position.
pub fn nearest_generator(case: &SystemCase, bus: usize) -> Result<usize> {
    let start = case.bus_index(bus)?;
    if case.generators.is_empty() {
        return Err(Error::Unreachable(bus));
    }
    let n = case.buses.len();
    let mut adjacency: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for br in &case.branches {
        let f = case.bus_index(br.from)?;
        let t = case.bus_index(br.to)?;
        let z = br.impedance_magnitude();
        adjacency[f].push((t, z));
        adjacency[t].push((f, z));
    }

    // BFS layers; impedance is relaxed only along edges that advance one hop.
    let mut hops = vec![usize::MAX; n];
    let mut impedance = vec![f64::INFINITY; n];
    hops[start] = 0;
    impedance[start] = 0.0;
    let mut queue = VecDeque::from([start]);
    while let Some(u) = queue.pop_front() {
        for &(v, z) in &adjacency[u] {
            if hops[v] == usize::MAX {
                hops[v] = hops[u] + 1;
                queue.push_back(v);
            }
            if hops[v] == hops[u] + 1 && impedance[u] + z < impedance[v] {
                impedance[v] = impedance[u] + z;
            }
        }
    }

    let mut best: Option<(usize, f64, usize)> = None;
    for (g, gen) in case.generators.iter().enumerate() {
        let idx = case.bus_index(gen.bus)?;
        if hops[idx] == usize::MAX {
            continue;
        }
        let candidate = (hops[idx], impedance[idx], g);
        best = match best {
            None => Some(candidate),
            Some(cur) => {
                let better = candidate.0 < cur.0
                    || (candidate.0 == cur.0 && candidate.1 < cur.1)
                    || (candidate.0 == cur.0 && candidate.1 == cur.1 && candidate.2 < cur.2);
                Some(if better { candidate } else { cur })
            }
        };
    }
    best.map(|b| b.2).ok_or(Error::Unreachable(bus))
}
