//! Maximum bipartite matching (Hopcroft-Karp).

use std::collections::VecDeque;

const INF: usize = usize::MAX;

/// Size of a maximum matching between left vertices `0..adj.len()` and right
/// vertices `0..n_right`, where `adj[u]` lists the right neighbours of `u`.
pub fn max_matching(adj: &[Vec<usize>], n_right: usize) -> usize {
    let n_left = adj.len();
    let mut left_mate = vec![None; n_left];
    let mut right_mate: Vec<Option<usize>> = vec![None; n_right];
    let mut dist = vec![INF; n_left];
    let mut size = 0;

    while layer(adj, &left_mate, &right_mate, &mut dist) {
        for u in 0..n_left {
            if left_mate[u].is_none() && augment(u, adj, &mut left_mate, &mut right_mate, &mut dist)
            {
                size += 1;
            }
        }
    }
    size
}

/// BFS from free left vertices; true if some augmenting path exists.
fn layer(
    adj: &[Vec<usize>],
    left_mate: &[Option<usize>],
    right_mate: &[Option<usize>],
    dist: &mut [usize],
) -> bool {
    let mut queue = VecDeque::new();
    for (u, mate) in left_mate.iter().enumerate() {
        if mate.is_none() {
            dist[u] = 0;
            queue.push_back(u);
        } else {
            dist[u] = INF;
        }
    }
    let mut found = false;
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            match right_mate[v] {
                None => found = true,
                Some(w) if dist[w] == INF => {
                    dist[w] = dist[u] + 1;
                    queue.push_back(w);
                }
                Some(_) => {}
            }
        }
    }
    found
}

fn augment(
    u: usize,
    adj: &[Vec<usize>],
    left_mate: &mut [Option<usize>],
    right_mate: &mut [Option<usize>],
    dist: &mut [usize],
) -> bool {
    for &v in &adj[u] {
        let ok = match right_mate[v] {
            None => true,
            Some(w) => dist[w] == dist[u] + 1 && augment(w, adj, left_mate, right_mate, dist),
        };
        if ok {
            left_mate[u] = Some(v);
            right_mate[v] = Some(u);
            return true;
        }
    }
    dist[u] = INF;
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Hall's condition checked over every subset of left vertices.
    fn hall_brute_force(adj: &[Vec<usize>]) -> bool {
        let n = adj.len();
        (1u32..1 << n).all(|mask| {
            let mut nb = std::collections::BTreeSet::new();
            for (u, row) in adj.iter().enumerate() {
                if mask & (1 << u) != 0 {
                    nb.extend(row.iter().copied());
                }
            }
            nb.len() >= mask.count_ones() as usize
        })
    }

    #[test]
    fn small_cases() {
        assert_eq!(max_matching(&[vec![0], vec![0]], 2), 1);
        assert_eq!(max_matching(&[vec![0, 1], vec![0]], 2), 2);
        assert_eq!(max_matching(&[], 0), 0);
    }

    #[test]
    fn agrees_with_hall_on_random_graphs() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..500 {
            let n = rng.random_range(1..7);
            let adj: Vec<Vec<usize>> = (0..n)
                .map(|_| (0..n).filter(|_| rng.random_bool(0.35)).collect())
                .collect();
            assert_eq!(
                max_matching(&adj, n) == n,
                hall_brute_force(&adj),
                "{adj:?}"
            );
        }
    }
}
