//! Bipartite matchings that must cover prescribed ("mandatory") vertices on
//! both sides.
//!
//! The decision problem is a flow with unit lower bounds on the mandatory
//! vertices. We solve it as: Hopcroft-Karp maximum matching, then for every
//! uncovered mandatory vertex an alternating-path search that either augments
//! or hands the cover over from an optional vertex on the same side. The
//! second sweep (right side) never uncovers a left vertex, so coverage from
//! the first sweep survives. A sweep fails exactly when no matching covers
//! that side's mandatory set, and a matching covering both sets exists iff
//! each side can be covered separately (Mendelsohn-Dulmage).

use std::collections::VecDeque;

const NONE: usize = usize::MAX;

#[derive(Clone, Debug)]
pub struct Matching {
    pub mate_left: Vec<Option<usize>>,
    pub mate_right: Vec<Option<usize>>,
}

impl Matching {
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.mate_left
            .iter()
            .enumerate()
            .filter_map(|(i, m)| m.map(|j| (i, j)))
            .collect()
    }

    pub fn size(&self) -> usize {
        self.mate_left.iter().filter(|m| m.is_some()).count()
    }
}

/// Maximum cardinality matching. `adj[u]` lists right neighbors of left `u`.
pub fn hopcroft_karp(adj: &[Vec<usize>], n_right: usize) -> Matching {
    let n_left = adj.len();
    let mut mate_l = vec![NONE; n_left];
    let mut mate_r = vec![NONE; n_right];
    let mut dist = vec![0usize; n_left];
    let mut queue = VecDeque::new();

    loop {
        // BFS layering from free left vertices
        queue.clear();
        for u in 0..n_left {
            if mate_l[u] == NONE {
                dist[u] = 0;
                queue.push_back(u);
            } else {
                dist[u] = usize::MAX;
            }
        }
        let mut found = false;
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                let w = mate_r[v];
                if w == NONE {
                    found = true;
                } else if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        if !found {
            break;
        }
        let mut it = vec![0usize; n_left];
        for u in 0..n_left {
            if mate_l[u] == NONE {
                augment_dfs(u, adj, &mut mate_l, &mut mate_r, &mut dist, &mut it);
            }
        }
    }

    Matching {
        mate_left: mate_l.into_iter().map(to_opt).collect(),
        mate_right: mate_r.into_iter().map(to_opt).collect(),
    }
}

fn to_opt(x: usize) -> Option<usize> {
    (x != NONE).then_some(x)
}

/// Iterative layered DFS; recursion depth could reach the path length.
fn augment_dfs(
    root: usize,
    adj: &[Vec<usize>],
    mate_l: &mut [usize],
    mate_r: &mut [usize],
    dist: &mut [usize],
    it: &mut [usize],
) -> bool {
    let mut stack: Vec<usize> = vec![root];
    while let Some(&u) = stack.last() {
        if it[u] == adj[u].len() {
            dist[u] = usize::MAX;
            stack.pop();
            continue;
        }
        let v = adj[u][it[u]];
        let w = mate_r[v];
        if w == NONE {
            // flip the whole stack path
            let mut v = v;
            while let Some(x) = stack.pop() {
                let next = mate_l[x];
                mate_l[x] = v;
                mate_r[v] = x;
                v = next;
                if !stack.is_empty() {
                    let parent = *stack.last().unwrap();
                    it[parent] += 1;
                }
            }
            return true;
        }
        if dist[w] != usize::MAX && dist[w] == dist[u] + 1 {
            stack.push(w);
        } else {
            it[u] += 1;
        }
    }
    false
}

/// A matching in which every mandatory vertex on either side is matched,
/// or `None` when none exists.
pub fn cover_mandatory(
    adj: &[Vec<usize>],
    n_right: usize,
    mandatory_left: &[bool],
    mandatory_right: &[bool],
) -> Option<Matching> {
    debug_assert_eq!(adj.len(), mandatory_left.len());
    debug_assert_eq!(n_right, mandatory_right.len());

    let m = hopcroft_karp(adj, n_right);
    let mut mate_l: Vec<usize> = m.mate_left.iter().map(|x| x.unwrap_or(NONE)).collect();
    let mut mate_r: Vec<usize> = m.mate_right.iter().map(|x| x.unwrap_or(NONE)).collect();

    let mut adj_t = vec![Vec::new(); n_right];
    for (u, vs) in adj.iter().enumerate() {
        for &v in vs {
            adj_t[v].push(u);
        }
    }

    if !repair_side(adj, &mut mate_l, &mut mate_r, mandatory_left) {
        return None;
    }
    if !repair_side(&adj_t, &mut mate_r, &mut mate_l, mandatory_right) {
        return None;
    }

    Some(Matching {
        mate_left: mate_l.into_iter().map(to_opt).collect(),
        mate_right: mate_r.into_iter().map(to_opt).collect(),
    })
}

/// Covers every mandatory vertex of the "root" side. Vertices of the other
/// side only ever gain partners; on the root side only optional vertices may
/// lose theirs.
fn repair_side(
    adj: &[Vec<usize>],
    mate_root: &mut [usize],
    mate_other: &mut [usize],
    mandatory_root: &[bool],
) -> bool {
    let n_other = mate_other.len();
    let mut prev = vec![NONE; n_other];
    let mut seen_stamp = vec![usize::MAX; n_other];
    let mut queue = VecDeque::new();

    for root in 0..adj.len() {
        if !mandatory_root[root] || mate_root[root] != NONE {
            continue;
        }
        queue.clear();
        queue.push_back(root);
        let mut end: Option<usize> = None;
        'bfs: while let Some(x) = queue.pop_front() {
            for &v in &adj[x] {
                if seen_stamp[v] == root {
                    continue;
                }
                seen_stamp[v] = root;
                prev[v] = x;
                let w = mate_other[v];
                if w == NONE {
                    end = Some(v);
                    break 'bfs;
                }
                if !mandatory_root[w] {
                    // hand v over; w becomes free
                    mate_root[w] = NONE;
                    end = Some(v);
                    break 'bfs;
                }
                queue.push_back(w);
            }
        }
        let Some(mut v) = end else {
            return false;
        };
        loop {
            let x = prev[v];
            let old = mate_root[x];
            mate_root[x] = v;
            mate_other[v] = x;
            if x == root {
                break;
            }
            v = old;
        }
    }
    true
}
