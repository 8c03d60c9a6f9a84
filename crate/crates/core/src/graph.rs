//! Nonnegative-weight shortest paths shared by the sample and grid solvers.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Directed graph in compressed sparse row form.
#[derive(Debug, Clone, Default)]
pub(crate) struct Csr {
    pub offsets: Vec<usize>,
    pub targets: Vec<u32>,
    pub weights: Vec<f64>,
}

impl Csr {
    pub fn from_lists(lists: Vec<Vec<(u32, f64)>>) -> Self {
        let mut offsets = Vec::with_capacity(lists.len() + 1);
        offsets.push(0);
        let total = lists.iter().map(Vec::len).sum();
        let mut targets = Vec::with_capacity(total);
        let mut weights = Vec::with_capacity(total);
        for list in lists {
            for (t, w) in list {
                targets.push(t);
                weights.push(w);
            }
            offsets.push(targets.len());
        }
        Self {
            offsets,
            targets,
            weights,
        }
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn edges(&self, u: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.offsets[u]..self.offsets[u + 1];
        self.targets[r.clone()]
            .iter()
            .zip(&self.weights[r])
            .map(|(&t, &w)| (t as usize, w))
    }

    /// Connected components of the underlying undirected graph, as
    /// `(lowest member, size)` pairs.
    pub fn components(&self) -> Vec<(usize, usize)> {
        let n = self.len();
        let mut undirected = vec![Vec::new(); n];
        for u in 0..n {
            for (v, _) in self.edges(u) {
                undirected[u].push(v);
                undirected[v].push(u);
            }
        }
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for root in 0..n {
            if seen[root] {
                continue;
            }
            seen[root] = true;
            let mut stack = vec![root];
            let mut size = 0;
            while let Some(u) = stack.pop() {
                size += 1;
                for &v in &undirected[u] {
                    if !seen[v] {
                        seen[v] = true;
                        stack.push(v);
                    }
                }
            }
            out.push((root, size));
        }
        out
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Entry {
    dist: f64,
    node: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    // min-heap on (dist, node)
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Binary-heap Dijkstra over a CSR graph. Unreachable nodes get `+inf`.
pub(crate) fn dijkstra(graph: &Csr, source: usize, target: Option<usize>) -> Vec<f64> {
    let n = graph.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Entry {
        dist: 0.0,
        node: source,
    });
    while let Some(Entry { dist: du, node: u }) = heap.pop() {
        if done[u] {
            continue;
        }
        done[u] = true;
        if Some(u) == target {
            break;
        }
        for (v, w) in graph.edges(u) {
            let cand = du + w;
            if cand < dist[v] {
                dist[v] = cand;
                heap.push(Entry {
                    dist: cand,
                    node: v,
                });
            }
        }
    }
    dist
}

/// O(n^2) Dijkstra on a complete graph whose weights come from `weight(u, v)`.
/// Stops once `target` is settled.
pub(crate) fn dense_dijkstra<W>(
    n: usize,
    source: usize,
    target: Option<usize>,
    weight: W,
) -> Vec<f64>
where
    W: Fn(usize, usize) -> f64,
{
    let mut dist = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    dist[source] = 0.0;
    for _ in 0..n {
        let mut u = usize::MAX;
        let mut best = f64::INFINITY;
        for (v, (&d, &fin)) in dist.iter().zip(&done).enumerate() {
            if !fin && d < best {
                best = d;
                u = v;
            }
        }
        if u == usize::MAX {
            break;
        }
        done[u] = true;
        if Some(u) == target {
            break;
        }
        for v in 0..n {
            if !done[v] {
                let cand = best + weight(u, v);
                if cand < dist[v] {
                    dist[v] = cand;
                }
            }
        }
    }
    dist
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heap_and_dense_agree_on_small_graph() {
        let w = [
            [0.0, 4.0, 1.0, 9.0],
            [4.0, 0.0, 2.0, 1.0],
            [1.0, 2.0, 0.0, 7.0],
            [9.0, 1.0, 7.0, 0.0],
        ];
        let lists = (0..4)
            .map(|u| {
                (0..4)
                    .filter(|&v| v != u)
                    .map(|v| (v as u32, w[u][v]))
                    .collect()
            })
            .collect();
        let g = Csr::from_lists(lists);
        let a = dijkstra(&g, 0, None);
        let b = dense_dijkstra(4, 0, None, |u, v| w[u][v]);
        assert_eq!(a, vec![0.0, 3.0, 1.0, 4.0]);
        assert_eq!(a, b);
    }

    #[test]
    fn components_are_found() {
        let g = Csr::from_lists(vec![vec![(1, 1.0)], vec![], vec![], vec![(2, 1.0)]]);
        assert_eq!(g.components(), vec![(0, 2), (2, 2)]);
        assert!(dijkstra(&g, 0, None)[2].is_infinite());
    }
}
