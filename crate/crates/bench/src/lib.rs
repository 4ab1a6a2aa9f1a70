//! Benchmark fixtures.

use groundsel::graph::{laplacian, random_geometric, GeomGraphConfig};
use groundsel::linalg::SymMatrix;

/// Laplacian of the default geometric graph (range 300, mean degree 4,
/// 20% negative edges) with `n` nodes.
pub fn reference_laplacian(n: usize, seed: u64) -> SymMatrix {
    let cfg = GeomGraphConfig {
        n,
        seed,
        ..GeomGraphConfig::default()
    };
    laplacian(&random_geometric(&cfg).expect("valid config"))
}
