//! Synthetic decorrelated data and the two experiments: stored size of the
//! full versus materialized Skycube, and query latency of the materialized
//! path versus Sort-Filter-Skyline over the whole relation.

use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};
use crate::materialize::{build_skyline_lattice, query_skyline, MaterializedSkycube};
use crate::relation::{Relation, Row, RowId};
use crate::schema::{Criterion, CriterionSet, Direction, Schema};
use crate::skyline::{full_skycube, skyline_sfs, SkycubeLimits};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GeneratorConfig {
    pub n: usize,
    pub d: usize,
    /// Values per criterion, drawn from `0..k`.
    pub k: u32,
    pub seed: u64,
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 1 || self.d < 1 || self.k < 2 {
            return Err(Error::config("generator needs n >= 1, d >= 1 and k >= 2"));
        }
        if self.d > 26 {
            return Err(Error::config("generator supports at most 26 criteria"));
        }
        if self.n > u32::MAX as usize {
            return Err(Error::config("generator supports at most u32::MAX rows"));
        }
        Ok(())
    }
}

/// Criteria `c0..` (symbols `A..`, minimized) and one `Row` dimension.
pub fn synthetic_schema(d: usize) -> Result<Arc<Schema>> {
    let criteria = (0..d)
        .map(|i| Criterion {
            name: format!("c{i}"),
            symbol: (b'A' + i as u8) as char,
            direction: Direction::Minimize,
        })
        .collect();
    Ok(Arc::new(Schema::new(vec!["Row".into()], criteria, vec![], None)?))
}

/// Independent uniform values on every criterion.
pub fn generate_synthetic(cfg: GeneratorConfig) -> Result<Relation> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let rows = (0..cfg.n)
        .map(|i| Row {
            id: RowId(i as u32 + 1),
            dims: vec![(i + 1).to_string()],
            values: (0..cfg.d).map(|_| f64::from(rng.random_range(0..cfg.k))).collect(),
            split: None,
        })
        .collect();
    Relation::new(synthetic_schema(cfg.d)?, rows)
}

/// Size from Binomial(d, 1/2) clamped to `[1, d]`, members uniform without
/// replacement.
pub fn sample_query<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CriterionSet {
    assert!(d >= 1, "sample_query needs at least one criterion");
    let size = Binomial::new(d as u64, 0.5)
        .expect("valid binomial")
        .sample(rng)
        .clamp(1, d as u64) as usize;
    CriterionSet::from_indices(sample(rng, d, size))
}

/// Stored tuple counts at one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct SizePoint {
    pub config: GeneratorConfig,
    pub full: usize,
    pub materialized: usize,
    pub full_build: Duration,
    pub materialized_build: Duration,
}

impl SizePoint {
    pub fn ratio(&self) -> f64 {
        if self.full == 0 {
            1.0
        } else {
            self.materialized as f64 / self.full as f64
        }
    }
}

pub fn bench_size_point(cfg: GeneratorConfig) -> Result<SizePoint> {
    let r = generate_synthetic(cfg)?;
    let limits = SkycubeLimits::default();
    let t = Instant::now();
    let full = full_skycube(&r, limits)?.stored_tuple_count();
    let full_build = t.elapsed();
    let t = Instant::now();
    let materialized = build_skyline_lattice(&r, limits)?.stored_tuple_count();
    Ok(SizePoint {
        config: cfg,
        full,
        materialized,
        full_build,
        materialized_build: t.elapsed(),
    })
}

pub fn bench_size(sweep: &[GeneratorConfig]) -> Result<Vec<SizePoint>> {
    sweep.iter().map(|&c| bench_size_point(c)).collect()
}

/// Query latencies at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryPoint {
    pub config: GeneratorConfig,
    pub queries: usize,
    pub build: Duration,
    pub mean_baseline: Duration,
    pub mean_materialized: Duration,
    pub mean_candidates: f64,
    pub stored: usize,
}

/// Candidates inspected by the materialized path for `subspace`.
fn candidate_count(m: &MaterializedSkycube, subspace: CriterionSet) -> usize {
    match m.concept(subspace) {
        Some(c) => c.tuple_count(),
        None => m.concept(m.closure(subspace)).map_or(0, |c| c.tuple_count()),
    }
}

/// Times both query paths over `queries` sampled subspaces. Any disagreement
/// between the two answers aborts with a domain error.
pub fn bench_query(cfg: GeneratorConfig, queries: usize, query_seed: u64) -> Result<QueryPoint> {
    let r = generate_synthetic(cfg)?;
    let t = Instant::now();
    let m = build_skyline_lattice(&r, SkycubeLimits::default())?;
    run_queries(cfg, &r, &m, t.elapsed(), queries, query_seed)
}

/// Both experiments on one generated relation, sharing the materialization.
pub fn bench_point(cfg: GeneratorConfig, queries: usize, query_seed: u64) -> Result<(SizePoint, QueryPoint)> {
    let r = generate_synthetic(cfg)?;
    let limits = SkycubeLimits::default();
    let t = Instant::now();
    let full = full_skycube(&r, limits)?.stored_tuple_count();
    let full_build = t.elapsed();
    let t = Instant::now();
    let m = build_skyline_lattice(&r, limits)?;
    let build = t.elapsed();
    let size = SizePoint {
        config: cfg,
        full,
        materialized: m.stored_tuple_count(),
        full_build,
        materialized_build: build,
    };
    Ok((size, run_queries(cfg, &r, &m, build, queries, query_seed)?))
}

fn run_queries(
    cfg: GeneratorConfig,
    r: &Relation,
    m: &MaterializedSkycube,
    build: Duration,
    queries: usize,
    query_seed: u64,
) -> Result<QueryPoint> {
    if queries == 0 {
        return Err(Error::config("at least one query is required"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(query_seed);
    let subspaces: Vec<CriterionSet> = (0..queries).map(|_| sample_query(cfg.d, &mut rng)).collect();

    let mut baseline = Duration::ZERO;
    let mut materialized = Duration::ZERO;
    let mut candidates = 0usize;
    for &s in &subspaces {
        let t = Instant::now();
        let expected = skyline_sfs(r, s);
        baseline += t.elapsed();
        let t = Instant::now();
        let got = query_skyline(m, r, s)?;
        materialized += t.elapsed();
        if got != expected {
            return Err(Error::domain(format!(
                "query paths disagree on {} (seed {})",
                r.schema().format_set(s),
                cfg.seed
            )));
        }
        candidates += candidate_count(m, s);
    }
    Ok(QueryPoint {
        config: cfg,
        queries,
        build,
        mean_baseline: baseline / queries as u32,
        mean_materialized: materialized / queries as u32,
        mean_candidates: candidates as f64 / queries as f64,
        stored: m.stored_tuple_count(),
    })
}

pub const SIZE_REPORT_HEADER: &str = "n,d,k,seed,full_tuples,materialized_tuples,ratio";
pub const QUERY_REPORT_HEADER: &str =
    "n,d,k,seed,queries,mean_baseline_us,mean_materialized_us,mean_candidates,build_ms";

/// Deterministic columns only; build times are left out so reports diff.
pub fn size_report_line(p: &SizePoint) -> String {
    let c = p.config;
    format!(
        "{},{},{},{},{},{},{:.6}",
        c.n,
        c.d,
        c.k,
        c.seed,
        p.full,
        p.materialized,
        p.ratio()
    )
}

pub fn query_report_line(p: &QueryPoint) -> String {
    let c = p.config;
    format!(
        "{},{},{},{},{},{:.3},{:.3},{:.3},{:.3}",
        c.n,
        c.d,
        c.k,
        c.seed,
        p.queries,
        p.mean_baseline.as_secs_f64() * 1e6,
        p.mean_materialized.as_secs_f64() * 1e6,
        p.mean_candidates,
        p.build.as_secs_f64() * 1e3
    )
}

/// Median of a non-empty slice.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        (v[mid - 1] + v[mid]) / 2.0
    }
}
