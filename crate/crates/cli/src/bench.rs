//! Grid benchmark over random compatible pairs.

use std::path::Path;
use std::time::Instant;

use circuit_ot::baselines::{exact_wasserstein, mixture_wasserstein, sinkhorn_between_circuits, unroll_with_cap};
use circuit_ot::compat::VariableBijection;
use circuit_ot::coupling::couple;
use circuit_ot::gen::{generate_pair, GenSpec, LeafKind};
use circuit_ot::par::*;
use circuit_ot::rng::SeedTree;
use circuit_ot::{Circuit, Error, ErrorClass};
use clap::ValueEnum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Cw,
    Mw,
    Exact,
    Sinkhorn,
}

impl Method {
    const ALL: [Method; 4] = [Method::Cw, Method::Mw, Method::Exact, Method::Sinkhorn];

    pub fn name(self) -> &'static str {
        match self {
            Method::Cw => "cw",
            Method::Mw => "mw",
            Method::Exact => "w_exact",
            Method::Sinkhorn => "sinkhorn",
        }
    }
}

pub struct Settings {
    pub methods: Vec<Method>,
    pub leaf_kind: LeafKind,
    pub order: f64,
    pub sinkhorn_samples: usize,
    pub max_components: u128,
    pub max_support: u128,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    NotRun,
    Value(f64),
    /// Beyond a size cap.
    Infeasible,
    /// Not defined for this leaf family.
    Unsupported,
    Failed(&'static str),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::NotRun => String::new(),
            Cell::Value(v) => v.to_string(),
            Cell::Infeasible => "infeasible".into(),
            Cell::Unsupported => "unsupported".into(),
            Cell::Failed(code) => format!("error_{code}"),
        }
    }
}

pub struct Row {
    pub v: usize,
    pub k: usize,
    pub rep: usize,
    pub seed: u64,
    /// Distance and wall seconds, in `Method::ALL` order.
    pub cells: Vec<(Cell, Option<f64>)>,
}

fn joint_support(c: &Circuit) -> Option<u128> {
    c.discrete_support().map(|s| s.iter().fold(1u128, |acc, m| acc.saturating_mul(*m as u128)))
}

fn measure(method: Method, p: &Circuit, q: &Circuit, s: &Settings, seed: u64) -> circuit_ot::Result<Cell> {
    let v = p.num_vars();
    Ok(match method {
        Method::Cw => Cell::Value(couple(p, q, &VariableBijection::identity(v), s.order)?.distance_p_power),
        Method::Mw => {
            let a = unroll_with_cap(p, s.max_components)?;
            let b = unroll_with_cap(q, s.max_components)?;
            Cell::Value(mixture_wasserstein(&a, &b, s.order)?.0)
        }
        Method::Exact => match (joint_support(p), joint_support(q)) {
            (Some(a), Some(b)) if a.max(b) > s.max_support => Cell::Infeasible,
            (Some(_), Some(_)) => Cell::Value(exact_wasserstein(p, q, s.order)?.0),
            _ => Cell::Unsupported,
        },
        Method::Sinkhorn => {
            let seed = SeedTree::new(seed).child("sinkhorn").seed();
            Cell::Value(sinkhorn_between_circuits(p, q, s.sinkhorn_samples, None, seed, s.order)?.objective)
        }
    })
}

fn run_pair(v: usize, k: usize, rep: usize, s: &Settings) -> circuit_ot::Result<Row> {
    let seed = SeedTree::new(s.seed).child("bench").index(v as u64).index(k as u64).index(rep as u64).seed();
    let (p, q, _) = generate_pair(&GenSpec::new(v, k, s.leaf_kind, seed))?;
    let cells = Method::ALL
        .iter()
        .map(|&m| {
            if !s.methods.contains(&m) {
                return (Cell::NotRun, None);
            }
            let start = Instant::now();
            let cell = match measure(m, &p, &q, s, seed) {
                Ok(cell) => cell,
                Err(e) if e.class() == ErrorClass::Resource => Cell::Infeasible,
                Err(Error::UnsupportedPair(_)) => Cell::Unsupported,
                Err(e) => Cell::Failed(e.code()),
            };
            (cell, Some(start.elapsed().as_secs_f64()))
        })
        .collect();
    Ok(Row { v, k, rep, seed, cells })
}

/// Every (v, k, rep) cell, run in parallel and returned sorted by
/// (v, k, rep) so the output does not depend on scheduling.
pub fn run_grid(v_grid: &[usize], k_grid: &[usize], reps: usize, s: &Settings) -> circuit_ot::Result<Vec<Row>> {
    if let Some(bad) = v_grid.iter().chain(k_grid).find(|x| **x == 0) {
        return Err(Error::Format(format!("grid values must be positive, got {bad}")));
    }
    let jobs: Vec<(usize, usize, usize)> = v_grid
        .iter()
        .flat_map(|&v| k_grid.iter().flat_map(move |&k| (0..reps).map(move |r| (v, k, r))))
        .collect();
    let mut rows = jobs.par_iter().map(|&(v, k, r)| run_pair(v, k, r, s)).collect::<circuit_ot::Result<Vec<_>>>()?;
    rows.sort_by_key(|r| (r.v, r.k, r.rep));
    Ok(rows)
}

pub fn write_csv(rows: &[Row], path: &Path) -> circuit_ot::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = ["pair_id", "v", "k", "rep", "seed"].map(String::from).to_vec();
    header.extend(Method::ALL.iter().map(|m| m.name().to_string()));
    header.extend(Method::ALL.iter().map(|m| format!("{}_seconds", m.name())));
    w.write_record(&header)?;
    for (id, row) in rows.iter().enumerate() {
        let mut record = vec![id.to_string(), row.v.to_string(), row.k.to_string(), row.rep.to_string(), row.seed.to_string()];
        record.extend(row.cells.iter().map(|(c, _)| c.render()));
        record.extend(row.cells.iter().map(|(_, t)| t.map(|t| format!("{t:.6}")).unwrap_or_default()));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}
