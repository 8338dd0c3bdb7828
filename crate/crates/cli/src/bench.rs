//! Incremental index insertion against a full rebuild and against plain
//! per-step searching, counted in relaxations and timed.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use marsring_core::marssim::{generate_world, WorldError, WorldParams};
use marsring_core::worldgraph::{single_source, DistanceIndex, Edge, SearchCounter, WorldGraph};
use thiserror::Error;

/// Density of the benchmark worlds beyond their spanning tree.
pub const DENSITY: f64 = 0.1;

pub const MIN_SIZE: usize = 8;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("size {0} is below the minimum of {MIN_SIZE}")]
    TooSmall(usize),
    #[error(transparent)]
    World(#[from] WorldError),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Cost {
    pub ops: u64,
    pub time: Duration,
}

impl std::ops::AddAssign for Cost {
    fn add_assign(&mut self, rhs: Self) {
        self.ops += rhs.ops;
        self.time += rhs.time;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Trial {
    pub n: usize,
    pub seed: u64,
    /// Inserting the last vertex into an index of the other n - 1.
    pub insert: Cost,
    /// Floyd-Warshall over all n vertices.
    pub rebuild: Cost,
    /// One Dijkstra pass from every vertex.
    pub stock: Cost,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SizeReport {
    pub n: usize,
    pub trials: Vec<Trial>,
}

impl SizeReport {
    pub fn total(&self) -> (Cost, Cost, Cost) {
        let mut sum = (Cost::default(), Cost::default(), Cost::default());
        for t in &self.trials {
            sum.0 += t.insert;
            sum.1 += t.rebuild;
            sum.2 += t.stock;
        }
        sum
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BenchReport {
    pub sizes: Vec<SizeReport>,
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

/// The world without its highest vertex, plus that vertex's edges.
fn split_last(graph: &WorldGraph) -> (WorldGraph, u32, Vec<Edge>) {
    let last = graph.vertex_ids().max().expect("non-empty world");
    let mut rest = WorldGraph::new();
    for v in graph.vertices().filter(|v| v.id != last) {
        rest.add_vertex(v).expect("fresh id");
    }
    let mut incident = Vec::new();
    for e in graph.edges() {
        if e.other(last).is_some() {
            incident.push(e);
        } else {
            rest.add_edge(e).expect("fresh edge");
        }
    }
    (rest, last, incident)
}

pub fn run_trial(n: usize, seed: u64) -> Result<Trial, WorldError> {
    let graph = generate_world(&WorldParams { vertices: n, density: DENSITY, ..WorldParams::default() }, seed)?;

    let (rest, last, incident) = split_last(&graph);
    let mut index = DistanceIndex::build(&rest);
    index.reset_ops();
    let ((), insert_time) = timed(|| index.insert_vertex(last, &incident).expect("valid insertion"));
    let insert = Cost { ops: index.ops(), time: insert_time };

    let (full, rebuild_time) = timed(|| DistanceIndex::build(&graph));
    let rebuild = Cost { ops: full.ops(), time: rebuild_time };

    let mut counter = SearchCounter::default();
    let ((), stock_time) = timed(|| {
        for v in graph.vertex_ids() {
            single_source(&graph, v, &mut counter).expect("vertex exists");
        }
    });
    let stock = Cost { ops: counter.relaxations, time: stock_time };

    Ok(Trial { n, seed, insert, rebuild, stock })
}

/// Trial `t` at size `n` uses world seed `seed + t`.
pub fn run(sizes: &[usize], trials: u64, seed: u64) -> Result<BenchReport, BenchError> {
    if let Some(&n) = sizes.iter().find(|&&n| n < MIN_SIZE) {
        return Err(BenchError::TooSmall(n));
    }
    let mut report = BenchReport::default();
    if trials == 0 {
        return Ok(report);
    }
    for &n in sizes {
        let trials = (0..trials).map(|t| run_trial(n, seed.wrapping_add(t))).collect::<Result<_, _>>()?;
        report.sizes.push(SizeReport { n, trials });
    }
    Ok(report)
}

fn micros(d: Duration) -> String {
    format!("{:.1}", d.as_secs_f64() * 1e6)
}

/// Per-trial rows, then one total row per size.
pub fn render(report: &BenchReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>4} {:>8} {:>12} {:>12} {:>12} {:>11} {:>11} {:>11}",
        "n", "trial", "insert_ops", "rebuild_ops", "stock_ops", "insert_us", "rebuild_us", "stock_us"
    );
    for size in &report.sizes {
        let row = |out: &mut String, label: String, i: Cost, r: Cost, s: Cost| {
            let _ = writeln!(
                out,
                "{:>4} {:>8} {:>12} {:>12} {:>12} {:>11} {:>11} {:>11}",
                size.n,
                label,
                i.ops,
                r.ops,
                s.ops,
                micros(i.time),
                micros(r.time),
                micros(s.time)
            );
        };
        for (k, t) in size.trials.iter().enumerate() {
            row(&mut out, k.to_string(), t.insert, t.rebuild, t.stock);
        }
        let (i, r, s) = size.total();
        row(&mut out, "total".into(), i, r, s);
    }
    out
}
