//! Hopcroft–Karp maximum bipartite matching.

use std::collections::VecDeque;

const NIL: usize = usize::MAX;

/// Maximum matching of a bipartite graph given as adjacency lists from the
/// left side. Returns `mate[left] = Some(right)`.
///
/// Neighbours are explored in the order given, so the result is
/// deterministic for a fixed adjacency list.
pub fn hopcroft_karp(adj: &[Vec<usize>], n_right: usize) -> Vec<Option<usize>> {
    let n_left = adj.len();
    let mut mate_left = vec![NIL; n_left];
    let mut mate_right = vec![NIL; n_right];
    let mut dist = vec![0usize; n_left];
    let mut queue = VecDeque::with_capacity(n_left);
    let mut cursor = vec![0usize; n_left];

    loop {
        // BFS layering from free left vertices
        queue.clear();
        let mut found_free = false;
        for u in 0..n_left {
            if mate_left[u] == NIL {
                dist[u] = 0;
                queue.push_back(u);
            } else {
                dist[u] = usize::MAX;
            }
        }
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                let w = mate_right[v];
                if w == NIL {
                    found_free = true;
                } else if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        if !found_free {
            break;
        }

        cursor.iter_mut().for_each(|c| *c = 0);
        let mut augmented = false;
        for u in 0..n_left {
            if mate_left[u] == NIL
                && augment(u, adj, &mut mate_left, &mut mate_right, &mut dist, &mut cursor)
            {
                augmented = true;
            }
        }
        if !augmented {
            break;
        }
    }
    mate_left
        .into_iter()
        .map(|v| (v != NIL).then_some(v))
        .collect()
}

/// Iterative layered DFS from free vertex `root`.
fn augment(
    root: usize,
    adj: &[Vec<usize>],
    mate_left: &mut [usize],
    mate_right: &mut [usize],
    dist: &mut [usize],
    cursor: &mut [usize],
) -> bool {
    let mut stack = vec![root];
    while let Some(&u) = stack.last() {
        if cursor[u] == adj[u].len() {
            dist[u] = usize::MAX;
            stack.pop();
            continue;
        }
        let v = adj[u][cursor[u]];
        cursor[u] += 1;
        let w = mate_right[v];
        if w == NIL {
            // flip the path: every stacked vertex takes the edge it advanced on
            let mut right = v;
            while let Some(x) = stack.pop() {
                let prev = mate_left[x];
                mate_left[x] = right;
                mate_right[right] = x;
                right = prev;
            }
            return true;
        }
        if dist[w] == dist[u] + 1 {
            stack.push(w);
        }
    }
    false
}

/// Perfect matching of a square bipartite graph, or `None`.
pub fn perfect_matching(adj: &[Vec<usize>]) -> Option<Vec<usize>> {
    hopcroft_karp(adj, adj.len()).into_iter().collect()
}
