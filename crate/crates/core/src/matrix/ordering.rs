//! Fill-reducing ordering for the exact factorisation.

use std::collections::BTreeSet;

/// Minimum-degree elimination order on an undirected graph given as sorted
/// adjacency lists (no self loops). Ties go to the smallest node index, so
/// the order is a deterministic function of the graph.
pub(crate) fn minimum_degree(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let mut graph: Vec<Vec<usize>> = adj.to_vec();
    let mut queue: BTreeSet<(usize, usize)> = (0..n).map(|v| (graph[v].len(), v)).collect();
    let mut eliminated = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut merged = Vec::new();

    while let Some((_, p)) = queue.pop_first() {
        eliminated[p] = true;
        order.push(p);
        let nbrs = std::mem::take(&mut graph[p]);
        for &u in &nbrs {
            let old_deg = graph[u].len();
            merged.clear();
            merge_excluding(&graph[u], &nbrs, p, u, &mut merged);
            std::mem::swap(&mut graph[u], &mut merged);
            if graph[u].len() != old_deg {
                queue.remove(&(old_deg, u));
                queue.insert((graph[u].len(), u));
            }
        }
    }
    debug_assert!(eliminated.iter().all(|&e| e));
    order
}

/// Sorted union of `a` and `b`, dropping `skip_a` and `skip_b`.
fn merge_excluding(a: &[usize], b: &[usize], skip_a: usize, skip_b: usize, out: &mut Vec<usize>) {
    let (mut i, mut j) = (0, 0);
    let push = |v: usize, out: &mut Vec<usize>| {
        if v != skip_a && v != skip_b && out.last() != Some(&v) {
            out.push(v);
        }
    };
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            push(a[i], out);
            if a[i] == b[j] {
                j += 1;
            }
            i += 1;
        } else {
            push(b[j], out);
            j += 1;
        }
    }
    for &v in &a[i..] {
        push(v, out);
    }
    for &v in &b[j..] {
        push(v, out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_graph_eliminates_leaves_first() {
        // 0 - 1 - 2 - 3
        let adj = vec![vec![1], vec![0, 2], vec![1, 3], vec![2]];
        let order = minimum_degree(&adj);
        assert_eq!(order[0], 0);
        let mut sorted = order.clone();
        sorted.sort();
        assert_eq!(sorted, vec![0, 1, 2, 3]);
    }

    #[test]
    fn star_center_last() {
        let adj = vec![vec![1, 2, 3, 4], vec![0], vec![0], vec![0], vec![0]];
        let order = minimum_degree(&adj);
        assert_eq!(order, vec![1, 2, 3, 0, 4]);
    }
}
