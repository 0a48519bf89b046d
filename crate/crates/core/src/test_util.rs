//! Shared helpers for the unit-test modules.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::graph::{DiscreteGraph, MetricGraph};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Haar-ish random unitary from the QR factor of a random complex matrix.
pub fn random_unitary(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<Complex64> {
    let m = DMatrix::<Complex64>::from_fn(n, n, |_, _| {
        Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
    });
    m.qr().q()
}

/// Star graph S_n: center vertex 0, leaves 1..n-1, edges in leaf order.
pub fn star_graph(n: usize, lengths: &[f64]) -> MetricGraph {
    let edges: Vec<(usize, usize)> = (1..n).map(|j| (0, j)).collect();
    let g = DiscreteGraph::new(n, &edges).unwrap();
    MetricGraph::closed(g, lengths.to_vec()).unwrap()
}

/// Single edge of length `len` between vertices 0 and 1.
pub fn interval(len: f64) -> MetricGraph {
    let g = DiscreteGraph::new(2, &[(0, 1)]).unwrap();
    MetricGraph::closed(g, vec![len]).unwrap()
}

/// Triangle on vertices {0, 1, 2}.
pub fn triangle(lengths: [f64; 3]) -> MetricGraph {
    let g = DiscreteGraph::new(3, &[(0, 1), (0, 2), (1, 2)]).unwrap();
    MetricGraph::closed(g, lengths.to_vec()).unwrap()
}
