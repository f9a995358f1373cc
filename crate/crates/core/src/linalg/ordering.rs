use std::collections::VecDeque;

use super::SparsityPattern;

/// Reverse Cuthill-McKee permutation of a structurally symmetric pattern.
///
/// Returns `perm` with `perm[new] = old`. Each connected component is started from a
/// pseudo-peripheral vertex; ties are broken by vertex index so the result is deterministic.
pub fn reverse_cuthill_mckee(pattern: &SparsityPattern) -> Vec<usize> {
    let n = pattern.nrows();
    let degree: Vec<usize> = (0..n)
        .map(|r| pattern.row(r).iter().filter(|&&c| c != r).count())
        .collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut scratch = vec![usize::MAX; n];

    for seed in 0..n {
        if visited[seed] {
            continue;
        }
        let start = pseudo_peripheral(pattern, &degree, seed, &mut scratch);
        let first = order.len();
        visited[start] = true;
        order.push(start);
        let mut head = first;
        while head < order.len() {
            let v = order[head];
            head += 1;
            let mut nbrs: Vec<usize> = pattern
                .row(v)
                .iter()
                .copied()
                .filter(|&c| c != v && !visited[c])
                .collect();
            nbrs.sort_by_key(|&c| (degree[c], c));
            for c in nbrs {
                visited[c] = true;
                order.push(c);
            }
        }
    }
    order.reverse();
    order
}

fn bfs_levels(pattern: &SparsityPattern, start: usize, level: &mut [usize]) -> (Vec<usize>, usize) {
    let mut touched = vec![start];
    level[start] = 0;
    let mut queue = VecDeque::from([start]);
    let mut depth = 0;
    while let Some(v) = queue.pop_front() {
        depth = depth.max(level[v]);
        for &c in pattern.row(v) {
            if level[c] == usize::MAX {
                level[c] = level[v] + 1;
                touched.push(c);
                queue.push_back(c);
            }
        }
    }
    (touched, depth)
}

fn pseudo_peripheral(
    pattern: &SparsityPattern,
    degree: &[usize],
    seed: usize,
    level: &mut [usize],
) -> usize {
    let mut current = seed;
    let mut best_depth = 0;
    for _ in 0..8 {
        let (touched, depth) = bfs_levels(pattern, current, level);
        let candidate = touched
            .iter()
            .copied()
            .filter(|&v| level[v] == depth)
            .min_by_key(|&v| (degree[v], v))
            .unwrap_or(current);
        for v in touched {
            level[v] = usize::MAX;
        }
        if depth <= best_depth && best_depth > 0 {
            break;
        }
        best_depth = depth;
        if candidate == current {
            break;
        }
        current = candidate;
    }
    current
}

/// Number of stored entries of the lower envelope under permutation `perm` (`perm[new] = old`).
pub fn envelope_size(pattern: &SparsityPattern, perm: &[usize]) -> usize {
    let n = pattern.nrows();
    let mut inv = vec![0; n];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }
    (0..n)
        .map(|new| {
            let first = pattern
                .row(perm[new])
                .iter()
                .map(|&c| inv[c])
                .filter(|&c| c <= new)
                .min()
                .unwrap_or(new);
            new - first + 1
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rcm_is_a_permutation_and_shrinks_a_scrambled_path() {
        // path graph with scrambled labels
        let labels = [0usize, 7, 3, 9, 1, 5, 8, 2, 6, 4];
        let mut entries = Vec::new();
        for w in labels.windows(2) {
            entries.push((w[0], w[1]));
            entries.push((w[1], w[0]));
        }
        for i in 0..10 {
            entries.push((i, i));
        }
        let p = SparsityPattern::from_entries(10, 10, entries);
        let perm = reverse_cuthill_mckee(&p);
        let mut sorted = perm.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..10).collect::<Vec<_>>());
        let ident: Vec<usize> = (0..10).collect();
        assert_eq!(envelope_size(&p, &perm), 19);
        assert!(envelope_size(&p, &ident) > 19);
    }
}
