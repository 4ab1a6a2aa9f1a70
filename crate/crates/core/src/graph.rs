//! Signed graphs, their Laplacians, and the geometric random generator.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::SymMatrix;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub w: f64,
}

/// Undirected graph with nonzero real edge weights. Negative weights model
/// antagonistic interactions.
///
/// Edges are stored with `i < j`, at most once per unordered pair.
#[derive(Clone, Debug, PartialEq)]
pub struct SignedGraph {
    n: usize,
    edges: Vec<Edge>,
}

impl SignedGraph {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter(
                "graph needs at least one node".into(),
            ));
        }
        Ok(Self {
            n,
            edges: Vec::new(),
        })
    }

    pub fn from_edges(
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let mut g = Self::new(n)?;
        for (i, j, w) in edges {
            g.add_edge(i, j, w)?;
        }
        Ok(g)
    }

    pub fn add_edge(&mut self, i: usize, j: usize, w: f64) -> Result<()> {
        if i == j {
            return Err(Error::InvalidEdge {
                i,
                j,
                reason: "self-loop",
            });
        }
        if i >= self.n || j >= self.n {
            return Err(Error::InvalidEdge {
                i,
                j,
                reason: "endpoint out of range",
            });
        }
        if w == 0.0 || !w.is_finite() {
            return Err(Error::InvalidEdge {
                i,
                j,
                reason: "weight must be finite and nonzero",
            });
        }
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        if self.edges.iter().any(|e| e.i == i && e.j == j) {
            return Err(Error::InvalidEdge {
                i,
                j,
                reason: "duplicate edge",
            });
        }
        self.edges.push(Edge { i, j, w });
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Unweighted degree (number of incident edges).
    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|e| e.i == v || e.j == v).count()
    }

    pub fn mean_degree(&self) -> f64 {
        2.0 * self.edges.len() as f64 / self.n as f64
    }

    pub fn negative_fraction(&self) -> f64 {
        if self.edges.is_empty() {
            return 0.0;
        }
        self.edges.iter().filter(|e| e.w < 0.0).count() as f64 / self.edges.len() as f64
    }

    /// Edge-list text: a `n=<count>` header, then one `i j w` line per edge.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("n={}\n", self.n);
        for e in &self.edges {
            let _ = writeln!(out, "{} {} {}", e.i, e.j, e.w);
        }
        out
    }

    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(k, l)| (k + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (line, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "missing `n=<count>` header".into(),
        })?;
        let n = header
            .strip_prefix("n=")
            .and_then(|s| s.trim().parse::<usize>().ok())
            .ok_or_else(|| Error::Parse {
                line,
                msg: format!("expected `n=<count>`, found `{header}`"),
            })?;
        let mut g = Self::new(n)?;
        for (line, l) in lines {
            let parts: Vec<&str> = l.split_whitespace().collect();
            let bad = |msg: String| Error::Parse { line, msg };
            if parts.len() != 3 {
                return Err(bad(format!("expected `i j w`, found `{l}`")));
            }
            let i = parts[0]
                .parse()
                .map_err(|_| bad(format!("bad node `{}`", parts[0])))?;
            let j = parts[1]
                .parse()
                .map_err(|_| bad(format!("bad node `{}`", parts[1])))?;
            let w = parts[2]
                .parse()
                .map_err(|_| bad(format!("bad weight `{}`", parts[2])))?;
            g.add_edge(i, j, w).map_err(|e| bad(e.to_string()))?;
        }
        Ok(g)
    }
}

/// `L_ii = Σ_j W_ij`, `L_ij = -W_ij`. Row sums are exactly zero.
pub fn laplacian(g: &SignedGraph) -> SymMatrix {
    let mut m = DMatrix::zeros(g.n, g.n);
    for e in &g.edges {
        m[(e.i, e.j)] -= e.w;
        m[(e.j, e.i)] -= e.w;
        m[(e.i, e.i)] += e.w;
        m[(e.j, e.j)] += e.w;
    }
    SymMatrix::from_symmetric_unchecked(m)
}

/// Splits into the positive-edge graph and the negated negative-edge graph,
/// so that `L = L₊ − L₋`.
pub fn split_signed(g: &SignedGraph) -> (SignedGraph, SignedGraph) {
    let mut plus = SignedGraph {
        n: g.n,
        edges: Vec::new(),
    };
    let mut minus = SignedGraph {
        n: g.n,
        edges: Vec::new(),
    };
    for e in &g.edges {
        if e.w > 0.0 {
            plus.edges.push(*e);
        } else {
            minus.edges.push(Edge { w: -e.w, ..*e });
        }
    }
    (plus, minus)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeomGraphConfig {
    pub n: usize,
    pub comm_range: f64,
    pub target_avg_degree: f64,
    pub p_negative: f64,
    pub seed: u64,
}

impl Default for GeomGraphConfig {
    fn default() -> Self {
        Self {
            n: 20,
            comm_range: 300.0,
            target_avg_degree: 4.0,
            p_negative: 0.2,
            seed: 0,
        }
    }
}

impl GeomGraphConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidParameter(format!(
                "geometric graph needs n >= 2, got {}",
                self.n
            )));
        }
        if !(self.comm_range > 0.0) {
            return Err(Error::InvalidParameter(
                "comm_range must be positive".into(),
            ));
        }
        if !(self.target_avg_degree > 0.0) {
            return Err(Error::InvalidParameter(
                "target_avg_degree must be positive".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.p_negative) {
            return Err(Error::InvalidParameter(
                "p_negative must lie in [0, 1]".into(),
            ));
        }
        Ok(())
    }

    /// Side of the square placement region.
    ///
    /// Chosen so the expected degree, including the loss of disk area near
    /// the boundary, equals `target_avg_degree`. For two uniform points in a
    /// square of side `L` the probability of lying within distance `r` is
    /// `πx² − 8x³/3 + x⁴/2` with `x = r/L ≤ 1`.
    pub fn side_length(&self) -> f64 {
        let per_pair = self.target_avg_degree / (self.n as f64 - 1.0);
        let prob = |x: f64| std::f64::consts::PI * x * x - 8.0 / 3.0 * x.powi(3) + 0.5 * x.powi(4);
        if per_pair >= prob(1.0) {
            return self.comm_range;
        }
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if prob(mid) < per_pair {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        self.comm_range / (0.5 * (lo + hi))
    }
}

/// Uniform points in a square, an edge between every pair within
/// `comm_range`, weight −1 with probability `p_negative` and +1 otherwise.
pub fn random_geometric(cfg: &GeomGraphConfig) -> Result<SignedGraph> {
    cfg.validate()?;
    let side = cfg.side_length();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let pts: Vec<(f64, f64)> = (0..cfg.n)
        .map(|_| (rng.random::<f64>() * side, rng.random::<f64>() * side))
        .collect();
    let r2 = cfg.comm_range * cfg.comm_range;
    let mut g = SignedGraph::new(cfg.n)?;
    for i in 0..cfg.n {
        for j in i + 1..cfg.n {
            let (dx, dy) = (pts[i].0 - pts[j].0, pts[i].1 - pts[j].1);
            if dx * dx + dy * dy <= r2 {
                let w = if rng.random::<f64>() < cfg.p_negative {
                    -1.0
                } else {
                    1.0
                };
                g.edges.push(Edge { i, j, w });
            }
        }
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{eigenvalues_sym, lambda_min};

    fn sorted_eigs(a: &SymMatrix) -> Vec<f64> {
        let mut v = eigenvalues_sym(a).unwrap();
        v.reverse();
        v
    }

    #[test]
    fn triangle_laplacian() {
        let g = SignedGraph::from_edges(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]).unwrap();
        let l = laplacian(&g);
        for i in 0..3 {
            assert_eq!(l.get(i, i), 2.0);
            for j in 0..3 {
                if i != j {
                    assert_eq!(l.get(i, j), -1.0);
                }
            }
        }
        for (got, want) in sorted_eigs(&l).iter().zip([0.0, 3.0, 3.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn path_laplacian_spectrum() {
        let g = SignedGraph::from_edges(3, [(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        for (got, want) in sorted_eigs(&laplacian(&g)).iter().zip([0.0, 1.0, 3.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn negative_edge_laplacian() {
        let g = SignedGraph::from_edges(2, [(0, 1, -1.0)]).unwrap();
        let l = laplacian(&g);
        assert_eq!(l.rows(), vec![vec![-1.0, 1.0], vec![1.0, -1.0]]);
        assert!((lambda_min(&l).unwrap() + 2.0).abs() < 1e-12);
    }

    #[test]
    fn edge_validation() {
        let mut g = SignedGraph::new(3).unwrap();
        assert!(g.add_edge(1, 1, 1.0).is_err());
        assert!(g.add_edge(0, 3, 1.0).is_err());
        assert!(g.add_edge(0, 1, 0.0).is_err());
        g.add_edge(1, 0, 2.0).unwrap();
        assert_eq!(g.edges()[0], Edge { i: 0, j: 1, w: 2.0 });
        assert!(g.add_edge(0, 1, 1.0).is_err());
    }

    #[test]
    fn split_all_positive() {
        let g = SignedGraph::from_edges(3, [(0, 1, 1.0), (1, 2, 2.0)]).unwrap();
        let (p, m) = split_signed(&g);
        assert_eq!(p, g);
        assert!(m.edges().is_empty());
    }

    #[test]
    fn split_single_negative() {
        let g = SignedGraph::from_edges(2, [(0, 1, -1.0)]).unwrap();
        let (p, m) = split_signed(&g);
        assert!(p.edges().is_empty());
        assert_eq!(m.edges(), &[Edge { i: 0, j: 1, w: 1.0 }]);
    }

    #[test]
    fn split_reconstructs_laplacian() {
        let g = SignedGraph::from_edges(
            4,
            [
                (0, 1, 1.0),
                (1, 2, -0.5),
                (2, 3, 2.0),
                (0, 3, -1.5),
                (0, 2, 0.25),
            ],
        )
        .unwrap();
        let (p, m) = split_signed(&g);
        let (l, lp, lm) = (laplacian(&g), laplacian(&p), laplacian(&m));
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(l.get(i, j), lp.get(i, j) - lm.get(i, j));
            }
        }
    }

    #[test]
    fn geometric_all_positive_when_p_zero() {
        let cfg = GeomGraphConfig {
            p_negative: 0.0,
            seed: 3,
            ..Default::default()
        };
        let g = random_geometric(&cfg).unwrap();
        assert!(g.edges().iter().all(|e| e.w == 1.0));
    }

    #[test]
    fn geometric_deterministic_per_seed() {
        let cfg = GeomGraphConfig {
            seed: 11,
            ..Default::default()
        };
        assert_eq!(
            random_geometric(&cfg).unwrap(),
            random_geometric(&cfg).unwrap()
        );
        let other = GeomGraphConfig {
            seed: 12,
            ..Default::default()
        };
        assert_ne!(
            random_geometric(&cfg).unwrap(),
            random_geometric(&other).unwrap()
        );
    }

    #[test]
    fn geometric_rejects_bad_config() {
        let cfg = GeomGraphConfig {
            n: 1,
            ..Default::default()
        };
        assert!(random_geometric(&cfg).is_err());
        let cfg = GeomGraphConfig {
            p_negative: 1.5,
            ..Default::default()
        };
        assert!(random_geometric(&cfg).is_err());
        let cfg = GeomGraphConfig {
            comm_range: 0.0,
            ..Default::default()
        };
        assert!(random_geometric(&cfg).is_err());
    }

    #[test]
    fn geometric_degree_census() {
        let mut total = 0.0;
        for seed in 0..100 {
            let cfg = GeomGraphConfig {
                n: 20,
                seed,
                ..Default::default()
            };
            total += random_geometric(&cfg).unwrap().mean_degree();
        }
        let mean = total / 100.0;
        assert!((3.0..=5.0).contains(&mean), "mean degree {mean}");
    }

    #[test]
    fn side_length_monte_carlo_pair_probability() {
        // Independent check of the boundary-corrected pair probability.
        let cfg = GeomGraphConfig {
            n: 30,
            ..Default::default()
        };
        let side = cfg.side_length();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let trials = 400_000;
        let hits = (0..trials)
            .filter(|_| {
                let dx = (rng.random::<f64>() - rng.random::<f64>()) * side;
                let dy = (rng.random::<f64>() - rng.random::<f64>()) * side;
                dx * dx + dy * dy <= cfg.comm_range * cfg.comm_range
            })
            .count();
        let expected_degree = 29.0 * hits as f64 / trials as f64;
        assert!((expected_degree - 4.0).abs() < 0.05, "{expected_degree}");
    }

    #[test]
    fn edge_list_round_trip() {
        let g = random_geometric(&GeomGraphConfig {
            seed: 2,
            ..Default::default()
        })
        .unwrap();
        let text = g.to_edge_list();
        assert!(text.starts_with("n=20\n"));
        assert_eq!(SignedGraph::parse_edge_list(&text).unwrap(), g);
    }

    #[test]
    fn edge_list_parse_errors() {
        assert!(matches!(
            SignedGraph::parse_edge_list("3\n0 1 1"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            SignedGraph::parse_edge_list("n=3\n0 1"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            SignedGraph::parse_edge_list("n=3\n# c\n0 0 1"),
            Err(Error::Parse { line: 3, .. })
        ));
    }
}
