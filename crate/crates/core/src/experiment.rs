//! Campaign runner: graph sweeps × trials × methods, emitted as CSV rows.

use std::cmp::Ordering;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{laplacian, random_geometric, GeomGraphConfig, SignedGraph};
use crate::linalg::{lambda_min_kept, IndexSet};
use crate::selection::{run_method, Method, MethodParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Campaign {
    SizeSweep,
    NegprobSweep,
    RateSweep,
}

impl Campaign {
    pub const ALL: [Campaign; 3] = [
        Campaign::SizeSweep,
        Campaign::NegprobSweep,
        Campaign::RateSweep,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Campaign::SizeSweep => "size_sweep",
            Campaign::NegprobSweep => "negprob_sweep",
            Campaign::RateSweep => "rate_sweep",
        }
    }

    pub fn default_grid(&self) -> Vec<f64> {
        match self {
            Campaign::SizeSweep => vec![20.0, 25.0, 30.0, 35.0, 40.0],
            Campaign::NegprobSweep => (1..=8).map(|k| k as f64 / 20.0).collect(),
            Campaign::RateSweep => vec![0.1, 0.25, 0.5, 0.75, 1.0, 1.5],
        }
    }
}

impl fmt::Display for Campaign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Campaign {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Campaign::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown campaign `{s}`")))
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentSpec {
    pub campaign: Campaign,
    /// Values of the swept variable: `n`, `p_neg` or `β`.
    pub grid: Vec<f64>,
    pub trials: u32,
    pub base_seed: u64,
    pub methods: Vec<Method>,
    /// Node count when it is not swept.
    pub n: usize,
    /// Negative-edge probability when it is not swept.
    pub p_neg: f64,
    /// Threshold when it is not swept.
    pub beta: f64,
    pub comm_range: f64,
    pub avg_degree: f64,
    pub params: MethodParams,
}

impl ExperimentSpec {
    pub fn new(campaign: Campaign) -> Self {
        Self {
            campaign,
            grid: campaign.default_grid(),
            trials: 20,
            base_seed: 0,
            methods: vec![Method::GreedyQ, Method::Degree, Method::Random],
            n: 20,
            p_neg: if campaign == Campaign::RateSweep {
                0.0
            } else {
                0.2
            },
            beta: 0.0,
            comm_range: 300.0,
            avg_degree: 4.0,
            params: MethodParams::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        if self.grid.is_empty() {
            return Err(Error::InvalidParameter("sweep grid is empty".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidParameter("no methods selected".into()));
        }
        if self.methods.contains(&Method::BruteForce) {
            return Err(Error::InvalidParameter(
                "brute_force is not a campaign method".into(),
            ));
        }
        for &x in &self.grid {
            let ok = match self.campaign {
                Campaign::SizeSweep => x >= 2.0 && x.fract() == 0.0,
                Campaign::NegprobSweep => (0.0..=1.0).contains(&x),
                Campaign::RateSweep => x.is_finite(),
            };
            if !ok {
                return Err(Error::InvalidParameter(format!(
                    "bad {} grid value {x}",
                    self.campaign
                )));
            }
        }
        for p in self.points() {
            p.graph_config(0).validate()?;
        }
        Ok(())
    }

    fn points(&self) -> Vec<GridPoint> {
        self.grid
            .iter()
            .map(|&x| {
                let mut p = GridPoint {
                    n: self.n,
                    p_neg: self.p_neg,
                    beta: self.beta,
                    comm_range: self.comm_range,
                    avg_degree: self.avg_degree,
                };
                match self.campaign {
                    Campaign::SizeSweep => p.n = x as usize,
                    Campaign::NegprobSweep => p.p_neg = x,
                    Campaign::RateSweep => p.beta = x,
                }
                p
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug)]
struct GridPoint {
    n: usize,
    p_neg: f64,
    beta: f64,
    comm_range: f64,
    avg_degree: f64,
}

impl GridPoint {
    fn graph_config(&self, seed: u64) -> GeomGraphConfig {
        GeomGraphConfig {
            n: self.n,
            comm_range: self.comm_range,
            target_avg_degree: self.avg_degree,
            p_negative: self.p_neg,
            seed,
        }
    }
}

/// One CSV row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub campaign: Campaign,
    pub method: Method,
    pub n: usize,
    pub p_neg: f64,
    pub beta: f64,
    pub seed: u64,
    pub removed_count: usize,
    pub final_lambda_min: f64,
    pub q_evals: usize,
    pub wall_ms: u64,
    /// `certified`, `grounded_to_singleton`, `unsatisfiable` or `error: …`.
    pub status: String,
    /// Removed indices joined by `;`.
    pub removed: String,
}

impl TrialRecord {
    pub fn success(&self) -> bool {
        self.status == "certified"
    }

    /// The swept value this row belongs to.
    pub fn grid_value(&self) -> f64 {
        match self.campaign {
            Campaign::SizeSweep => self.n as f64,
            Campaign::NegprobSweep => self.p_neg,
            Campaign::RateSweep => self.beta,
        }
    }

    pub fn removed_set(&self) -> Result<IndexSet> {
        let members = if self.removed.is_empty() {
            Vec::new()
        } else {
            self.removed
                .split(';')
                .map(|s| {
                    s.parse()
                        .map_err(|_| Error::InvalidParameter(format!("bad removed index `{s}`")))
                })
                .collect::<Result<Vec<usize>>>()?
        };
        IndexSet::new(members, self.n)
    }
}

pub fn format_removed(s: &IndexSet) -> String {
    s.iter()
        .map(|i| i.to_string())
        .collect::<Vec<_>>()
        .join(";")
}

/// File name used for stored campaign graphs.
pub fn graph_file_name(n: usize, p_neg: f64, seed: u64) -> String {
    format!("graph_n{n}_p{p_neg}_seed{seed}.txt")
}

fn row_order(a: &TrialRecord, b: &TrialRecord) -> Ordering {
    a.campaign
        .as_str()
        .cmp(b.campaign.as_str())
        .then_with(|| a.method.as_str().cmp(b.method.as_str()))
        .then_with(|| a.grid_value().total_cmp(&b.grid_value()))
        .then_with(|| a.seed.cmp(&b.seed))
}

/// Runs every (grid point, trial) pair in parallel; the graph and the random
/// baseline share the seed `base_seed + trial`. Rows come back sorted by
/// campaign, method, grid value and seed.
pub fn run_experiment(spec: &ExperimentSpec, omit_timing: bool) -> Result<Vec<TrialRecord>> {
    spec.validate()?;
    let tasks: Vec<(GridPoint, u64)> = spec
        .points()
        .into_iter()
        .flat_map(|p| (0..spec.trials as u64).map(move |t| (p, spec.base_seed + t)))
        .collect();
    let nested: Vec<Vec<TrialRecord>> = tasks
        .par_iter()
        .map(|&(p, seed)| run_trial(spec, p, seed, omit_timing))
        .collect();
    let mut rows: Vec<TrialRecord> = nested.into_iter().flatten().collect();
    rows.sort_by(row_order);
    Ok(rows)
}

fn run_trial(
    spec: &ExperimentSpec,
    p: GridPoint,
    seed: u64,
    omit_timing: bool,
) -> Vec<TrialRecord> {
    let blank = |method: Method| TrialRecord {
        campaign: spec.campaign,
        method,
        n: p.n,
        p_neg: p.p_neg,
        beta: p.beta,
        seed,
        removed_count: 0,
        final_lambda_min: f64::NAN,
        q_evals: 0,
        wall_ms: 0,
        status: String::new(),
        removed: String::new(),
    };
    let graph = match random_geometric(&p.graph_config(seed)) {
        Ok(g) => g,
        Err(e) => {
            return spec
                .methods
                .iter()
                .map(|&m| TrialRecord {
                    status: format!("error: {e}"),
                    ..blank(m)
                })
                .collect()
        }
    };
    let l = laplacian(&graph);
    let params = MethodParams {
        seed,
        ..spec.params.clone()
    };
    spec.methods
        .iter()
        .map(|&m| {
            let start = Instant::now();
            let res = run_method(m, &l, p.beta, &params);
            let wall_ms = if omit_timing {
                0
            } else {
                start.elapsed().as_millis() as u64
            };
            match res {
                Ok(r) => TrialRecord {
                    removed_count: r.removed.len(),
                    final_lambda_min: r.final_lambda_min,
                    q_evals: r.oracle_evals,
                    wall_ms,
                    status: r.outcome.as_str().to_string(),
                    removed: format_removed(&r.removed),
                    ..blank(m)
                },
                Err(e) => TrialRecord {
                    wall_ms,
                    status: format!("error: {e}"),
                    ..blank(m)
                },
            }
        })
        .collect()
}

/// Writes the edge list of every campaign graph into `dir`.
pub fn save_graphs(spec: &ExperimentSpec, dir: &Path) -> Result<usize> {
    std::fs::create_dir_all(dir)?;
    let mut written = 0;
    let mut seen = std::collections::BTreeSet::new();
    for p in spec.points() {
        for t in 0..spec.trials as u64 {
            let seed = spec.base_seed + t;
            let name = graph_file_name(p.n, p.p_neg, seed);
            if !seen.insert(name.clone()) {
                continue;
            }
            let g = random_geometric(&p.graph_config(seed))?;
            std::fs::write(dir.join(name), g.to_edge_list())?;
            written += 1;
        }
    }
    Ok(written)
}

pub fn write_records<W: Write>(rows: &[TrialRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records<R: Read>(input: R) -> Result<Vec<TrialRecord>> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}

/// Where `verify` gets graphs from.
#[derive(Clone, Debug)]
pub enum GraphSource<'a> {
    /// Rebuild from `(n, p_neg, seed)` with these generator settings.
    Regenerate { comm_range: f64, avg_degree: f64 },
    /// Load edge lists written by [`save_graphs`].
    Directory(&'a Path),
}

#[derive(Clone, Debug, Default)]
pub struct VerifyReport {
    pub rows: usize,
    pub checked: usize,
    pub failures: Vec<String>,
}

impl VerifyReport {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Re-certifies every success row: `λ_min(L(kept)) ≥ β − ε_pd` by a fresh
/// eigensolve, and the stored `final_lambda_min` and `removed_count` agree.
pub fn verify_records(rows: &[TrialRecord], source: &GraphSource) -> Result<VerifyReport> {
    let mut report = VerifyReport {
        rows: rows.len(),
        ..Default::default()
    };
    for (k, row) in rows.iter().enumerate() {
        if !row.success() {
            continue;
        }
        report.checked += 1;
        let line = k + 2;
        let graph = match source {
            GraphSource::Regenerate {
                comm_range,
                avg_degree,
            } => random_geometric(&GeomGraphConfig {
                n: row.n,
                comm_range: *comm_range,
                target_avg_degree: *avg_degree,
                p_negative: row.p_neg,
                seed: row.seed,
            })?,
            GraphSource::Directory(dir) => {
                let path = dir.join(graph_file_name(row.n, row.p_neg, row.seed));
                SignedGraph::parse_edge_list(&std::fs::read_to_string(&path)?)?
            }
        };
        if graph.n() != row.n {
            report.failures.push(format!(
                "line {line}: graph has {} nodes, row says {}",
                graph.n(),
                row.n
            ));
            continue;
        }
        let l = laplacian(&graph);
        let removed = match row.removed_set() {
            Ok(s) => s,
            Err(e) => {
                report.failures.push(format!("line {line}: {e}"));
                continue;
            }
        };
        if removed.len() != row.removed_count {
            report.failures.push(format!(
                "line {line}: removed_count {} but {} indices listed",
                row.removed_count,
                removed.len()
            ));
            continue;
        }
        let lam = lambda_min_kept(&l, &removed.complement())?;
        let tol = l.pd_tolerance();
        if lam < row.beta - tol {
            report.failures.push(format!(
                "line {line}: lambda_min {lam:e} below beta {} for {} seed {}",
                row.beta, row.method, row.seed
            ));
        } else if (lam - row.final_lambda_min).abs() > 1e-8 * (1.0 + lam.abs()) {
            report.failures.push(format!(
                "line {line}: stored lambda_min {:e} disagrees with {lam:e}",
                row.final_lambda_min
            ));
        }
    }
    Ok(report)
}

/// Mean and sample standard deviation of `removed_count` per
/// (method, grid value), in row order.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesPoint {
    pub method: Method,
    pub grid_value: f64,
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

pub fn summarize(rows: &[TrialRecord]) -> Vec<SeriesPoint> {
    let mut sorted: Vec<&TrialRecord> = rows.iter().collect();
    sorted.sort_by(|a, b| row_order(a, b));
    let mut out: Vec<SeriesPoint> = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let (m, x) = (sorted[i].method, sorted[i].grid_value());
        let mut j = i;
        while j < sorted.len() && sorted[j].method == m && sorted[j].grid_value() == x {
            j += 1;
        }
        let vals: Vec<f64> = sorted[i..j]
            .iter()
            .map(|r| r.removed_count as f64)
            .collect();
        let count = vals.len();
        let mean = vals.iter().sum::<f64>() / count as f64;
        let std = if count > 1 {
            (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1) as f64).sqrt()
        } else {
            0.0
        };
        out.push(SeriesPoint {
            method: m,
            grid_value: x,
            mean,
            std,
            count,
        });
        i = j;
    }
    out
}
