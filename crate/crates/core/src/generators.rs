//! Deterministic synthetic graphs.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::graph::Graph;

/// The crate-wide seeded generator. Same seed, same stream, on every platform.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn path(n: usize) -> Graph {
    Graph::new(n, (1..n).map(|i| (i - 1, i))).expect("path is simple")
}

/// Cycle on `n >= 3` nodes; smaller `n` degrades to a path.
pub fn cycle(n: usize) -> Graph {
    if n < 3 {
        return path(n);
    }
    Graph::new(n, (0..n).map(|i| (i, (i + 1) % n))).expect("cycle is simple")
}

/// `rows x cols` grid, node `(r, c)` at index `r * cols + c`.
pub fn grid(rows: usize, cols: usize) -> Graph {
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let v = r * cols + c;
            if c + 1 < cols {
                edges.push((v, v + 1));
            }
            if r + 1 < rows {
                edges.push((v, v + cols));
            }
        }
    }
    Graph::new(rows * cols, edges).expect("grid is simple")
}

/// Star with center 0 and `n - 1` leaves.
pub fn star(n: usize) -> Graph {
    Graph::new(n, (1..n).map(|i| (0, i))).expect("star is simple")
}

pub fn complete(n: usize) -> Graph {
    let edges = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)));
    Graph::new(n, edges).expect("complete graph is simple")
}

/// Uniform random labeled tree via a random Prüfer sequence.
pub fn random_tree<R: Rng>(n: usize, rng: &mut R) -> Graph {
    if n <= 2 {
        return path(n);
    }
    let code: Vec<usize> = (0..n - 2).map(|_| rng.gen_range(0..n)).collect();
    let mut degree = vec![1usize; n];
    for &c in &code {
        degree[c] += 1;
    }
    // Linear-time decoding: `leaf` walks upward, `ptr` remembers the scan position.
    let mut edges = Vec::with_capacity(n - 1);
    let mut ptr = degree.iter().position(|&d| d == 1).expect("a leaf exists");
    let mut leaf = ptr;
    for &c in &code {
        edges.push((leaf, c));
        degree[c] -= 1;
        if degree[c] == 1 && c < ptr {
            leaf = c;
        } else {
            ptr += 1;
            while degree[ptr] != 1 {
                ptr += 1;
            }
            leaf = ptr;
        }
    }
    edges.push((leaf, n - 1));
    Graph::new(n, edges).expect("Prüfer decoding yields a tree")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes() {
        assert_eq!(path(4).num_edges(), 3);
        assert_eq!(cycle(5).num_edges(), 5);
        assert_eq!(grid(2, 4).num_nodes(), 8);
        assert_eq!(grid(2, 4).num_edges(), 10);
        assert_eq!(complete(5).num_edges(), 10);
        assert_eq!(star(5).num_edges(), 4);
    }

    #[test]
    fn random_trees_are_trees() {
        let mut rng = seeded_rng(3);
        for n in [1, 2, 3, 10, 150] {
            let t = random_tree(n, &mut rng);
            assert_eq!(t.num_edges(), n.saturating_sub(1));
            if n > 0 {
                assert!(t.is_connected());
            }
        }
    }

    #[test]
    fn random_tree_is_deterministic() {
        let a = random_tree(40, &mut seeded_rng(9));
        let b = random_tree(40, &mut seeded_rng(9));
        assert_eq!(a, b);
    }
}
