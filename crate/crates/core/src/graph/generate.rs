use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{edge, Graph};
use crate::error::{Error, Result};
use crate::rng::seeded_rng;

/// Graph families used as test corpora. Every family yields a 2-vertex
/// connected graph.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Family {
    Cycle { n: usize },
    Complete { n: usize },
    Torus { rows: usize, cols: usize },
    /// Hamiltonian cycle over a seeded permutation plus `extra` random chords.
    Random2vc { n: usize, extra: usize },
}

pub fn generate(family: &Family, seed: u64) -> Result<Graph> {
    match *family {
        Family::Cycle { n } => {
            if n < 3 {
                return Err(Error::InvalidInput(format!("cycle needs n >= 3, got {n}")));
            }
            Ok(Graph::cycle(n))
        }
        Family::Complete { n } => {
            if n < 3 {
                return Err(Error::InvalidInput(format!("complete graph needs n >= 3, got {n}")));
            }
            Ok(Graph::complete(n))
        }
        Family::Torus { rows, cols } => {
            if rows < 3 || cols < 3 {
                return Err(Error::InvalidInput(format!(
                    "torus needs both sides >= 3, got {rows}x{cols}"
                )));
            }
            let id = |r: usize, c: usize| r * cols + c;
            let mut edges = Vec::with_capacity(2 * rows * cols);
            for r in 0..rows {
                for c in 0..cols {
                    edges.push((id(r, c), id(r, (c + 1) % cols)));
                    edges.push((id(r, c), id((r + 1) % rows, c)));
                }
            }
            Graph::new(rows * cols, edges)
        }
        Family::Random2vc { n, extra } => {
            if n < 3 {
                return Err(Error::InvalidInput(format!("random-2vc needs n >= 3, got {n}")));
            }
            let capacity = n * (n - 1) / 2 - n;
            if extra > capacity {
                return Err(Error::InvalidInput(format!(
                    "random-2vc with n = {n} admits at most {capacity} chords, asked for {extra}"
                )));
            }
            let mut rng = seeded_rng(seed, "random-2vc", &[n as u64, extra as u64]);
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rng);
            let mut edges: Vec<_> = (0..n).map(|i| edge(perm[i], perm[(i + 1) % n])).collect();
            let mut on_cycle = edges.clone();
            on_cycle.sort_unstable();
            let mut chords: Vec<_> = (0..n)
                .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
                .filter(|e| on_cycle.binary_search(e).is_err())
                .collect();
            let (picked, _) = chords.partial_shuffle(&mut rng, extra);
            edges.extend_from_slice(picked);
            Graph::new(n, edges)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_families() {
        assert_eq!(generate(&Family::Cycle { n: 5 }, 0).unwrap(), Graph::cycle(5));
        assert_eq!(generate(&Family::Complete { n: 4 }, 0).unwrap(), Graph::complete(4));
        let torus = generate(&Family::Torus { rows: 4, cols: 4 }, 0).unwrap();
        assert_eq!(torus.edge_count(), 32);
        assert!(torus.nodes().all(|v| torus.degree(v) == 4));
    }

    #[test]
    fn random_2vc_is_seeded_and_2vc() {
        let fam = Family::Random2vc { n: 20, extra: 15 };
        let g = generate(&fam, 7).unwrap();
        assert_eq!(g.edge_count(), 35);
        assert!(g.is_two_vertex_connected_brute().unwrap());
        assert_eq!(generate(&fam, 7).unwrap(), g);
        assert_ne!(generate(&fam, 8).unwrap(), g);
    }

    #[test]
    fn unsatisfiable_params() {
        assert!(generate(&Family::Random2vc { n: 4, extra: 3 }, 0).is_err());
        assert!(generate(&Family::Random2vc { n: 4, extra: 2 }, 0).is_ok());
        assert!(generate(&Family::Torus { rows: 2, cols: 5 }, 0).is_err());
        assert!(generate(&Family::Cycle { n: 2 }, 0).is_err());
    }
}
