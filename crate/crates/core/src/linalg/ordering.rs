//! Fill-reducing ordering by recursive level-set bisection.

use std::collections::VecDeque;

const LEAF: usize = 64;

/// Nested-dissection permutation (`perm[new] = old`) of the undirected graph
/// with the given adjacency lists.
///
/// Each piece is split by the middle level of a breadth-first search started
/// from a pseudo-peripheral vertex; the two sides are ordered first and the
/// separating level last.
pub fn nested_dissection(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let mut perm = Vec::with_capacity(n);
    // label[v] identifies the piece v currently belongs to
    let mut label = vec![0usize; n];
    let mut next_label = 1;
    let mut level = vec![usize::MAX; n];
    let mut stack: Vec<(Vec<usize>, usize)> = vec![((0..n).collect(), 0)];
    let mut out_blocks: Vec<Vec<usize>> = Vec::new();
    // ordering is emitted in reverse: separators first, then pieces
    while let Some((nodes, lab)) = stack.pop() {
        if nodes.len() <= LEAF {
            out_blocks.push(bfs_order(adj, &nodes, &label, lab));
            continue;
        }
        let comps = components(adj, &nodes, &label, lab, &mut level);
        if comps.len() > 1 {
            for comp in comps {
                for &v in &comp {
                    label[v] = next_label;
                }
                stack.push((comp, next_label));
                next_label += 1;
            }
            continue;
        }
        let root = pseudo_peripheral(adj, &nodes, &label, lab, &mut level);
        let levels = bfs_levels(adj, root, &label, lab, &mut level);
        let total = nodes.len();
        let mut acc = 0;
        let mut mid = levels.len() / 2;
        for (k, l) in levels.iter().enumerate() {
            acc += l.len();
            if 2 * acc >= total {
                mid = k;
                break;
            }
        }
        if mid == 0 || mid + 1 >= levels.len() {
            out_blocks.push(bfs_order(adj, &nodes, &label, lab));
            continue;
        }
        let sep = levels[mid].clone();
        let left: Vec<usize> = levels[..mid].iter().flatten().copied().collect();
        let right: Vec<usize> = levels[mid + 1..].iter().flatten().copied().collect();
        for &v in &sep {
            label[v] = usize::MAX;
        }
        out_blocks.push(sep);
        for part in [left, right] {
            for &v in &part {
                label[v] = next_label;
            }
            stack.push((part, next_label));
            next_label += 1;
        }
    }
    for block in out_blocks.into_iter().rev() {
        perm.extend(block);
    }
    debug_assert_eq!(perm.len(), n);
    perm
}

fn components(adj: &[Vec<usize>], nodes: &[usize], label: &[usize], lab: usize, seen: &mut [usize]) -> Vec<Vec<usize>> {
    let stamp = usize::MAX - 1;
    let mut comps = Vec::new();
    for &s in nodes {
        if seen[s] == stamp {
            continue;
        }
        let mut comp = vec![s];
        seen[s] = stamp;
        let mut head = 0;
        while head < comp.len() {
            let v = comp[head];
            head += 1;
            for &w in &adj[v] {
                if label[w] == lab && seen[w] != stamp {
                    seen[w] = stamp;
                    comp.push(w);
                }
            }
        }
        comps.push(comp);
    }
    for &v in nodes {
        seen[v] = usize::MAX;
    }
    comps
}

fn bfs_levels(adj: &[Vec<usize>], root: usize, label: &[usize], lab: usize, level: &mut [usize]) -> Vec<Vec<usize>> {
    let mut levels = vec![vec![root]];
    level[root] = 0;
    loop {
        let mut next = Vec::new();
        let d = levels.len();
        for &v in levels.last().unwrap() {
            for &w in &adj[v] {
                if label[w] == lab && level[w] == usize::MAX {
                    level[w] = d;
                    next.push(w);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        levels.push(next);
    }
    for l in &levels {
        for &v in l {
            level[v] = usize::MAX;
        }
    }
    levels
}

fn pseudo_peripheral(adj: &[Vec<usize>], nodes: &[usize], label: &[usize], lab: usize, level: &mut [usize]) -> usize {
    let mut root = nodes[0];
    let mut depth = 0;
    for _ in 0..8 {
        let levels = bfs_levels(adj, root, label, lab, level);
        if levels.len() <= depth {
            break;
        }
        depth = levels.len();
        let last = levels.last().unwrap();
        let cand = *last
            .iter()
            .min_by_key(|&&v| (adj[v].iter().filter(|&&w| label[w] == lab).count(), v))
            .unwrap();
        if cand == root {
            break;
        }
        root = cand;
    }
    root
}

fn bfs_order(adj: &[Vec<usize>], nodes: &[usize], label: &[usize], lab: usize) -> Vec<usize> {
    let mut order = Vec::with_capacity(nodes.len());
    let mut seen = std::collections::HashSet::new();
    for &s in nodes {
        if !seen.insert(s) {
            continue;
        }
        let mut q = VecDeque::from([s]);
        while let Some(v) = q.pop_front() {
            order.push(v);
            for &w in &adj[v] {
                if label[w] == lab && seen.insert(w) {
                    q.push_back(w);
                }
            }
        }
    }
    order
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(nx: usize, ny: usize) -> Vec<Vec<usize>> {
        let id = |i: usize, j: usize| j * nx + i;
        let mut adj = vec![Vec::new(); nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                if i + 1 < nx {
                    adj[id(i, j)].push(id(i + 1, j));
                    adj[id(i + 1, j)].push(id(i, j));
                }
                if j + 1 < ny {
                    adj[id(i, j)].push(id(i, j + 1));
                    adj[id(i, j + 1)].push(id(i, j));
                }
            }
        }
        adj
    }

    #[test]
    fn is_a_permutation() {
        let adj = grid(37, 23);
        let mut p = nested_dissection(&adj);
        p.sort_unstable();
        assert_eq!(p, (0..37 * 23).collect::<Vec<_>>());
    }

    #[test]
    fn handles_disconnected_graphs() {
        let mut adj = grid(20, 20);
        adj.extend(
            grid(15, 15)
                .into_iter()
                .map(|l| l.into_iter().map(|v| v + 400).collect()),
        );
        adj.push(Vec::new());
        let mut p = nested_dissection(&adj);
        p.sort_unstable();
        assert_eq!(p.len(), 626);
        assert!(p.windows(2).all(|w| w[1] == w[0] + 1));
    }
}
