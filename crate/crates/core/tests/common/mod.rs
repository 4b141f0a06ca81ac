#![allow(dead_code)]

use std::collections::VecDeque;

/// All-pairs hop counts on a D x D junction grid with L slots per trap, built directly from
/// the geometry: horizontal trap (r, c) has id r*(D+1)+c and runs west to east, vertical trap
/// (c, r) has id D*(D+1)+c*(D+1)+r and runs north to south, slot id = trap*L + index.
pub fn oracle_distances(d: usize, l: usize) -> Vec<Vec<u32>> {
    let h = |r: usize, c: usize| r * (d + 1) + c;
    let v = |c: usize, r: usize| d * (d + 1) + c * (d + 1) + r;
    let traps = 2 * d * (d + 1);
    let n = traps * l;
    let mut adj = vec![Vec::new(); n];
    let link = |a: usize, b: usize, adj: &mut Vec<Vec<usize>>| {
        adj[a].push(b);
        adj[b].push(a);
    };
    for t in 0..traps {
        for i in 1..l {
            link(t * l + i - 1, t * l + i, &mut adj);
        }
    }
    for r in 0..d {
        for c in 0..d {
            let west_end = h(r, c) * l + l - 1;
            let east_end = h(r, c + 1) * l;
            let north_end = v(c, r) * l + l - 1;
            let south_end = v(c, r + 1) * l;
            let legs = [north_end, east_end, south_end, west_end];
            for i in 0..4 {
                for j in i + 1..4 {
                    link(legs[i], legs[j], &mut adj);
                }
            }
        }
    }
    (0..n)
        .map(|s| {
            let mut dist = vec![u32::MAX; n];
            dist[s] = 0;
            let mut q = VecDeque::from([s]);
            while let Some(x) = q.pop_front() {
                for &y in &adj[x] {
                    if dist[y] == u32::MAX {
                        dist[y] = dist[x] + 1;
                        q.push_back(y);
                    }
                }
            }
            dist
        })
        .collect()
}
