//! Random instance generation and the benchmark campaign: sweep the budget
//! numerator `R`, solve each instance with brute force and both greedy
//! variants, attach bounds, and emit CSV and SVG reports.
//!
//! Everything downstream of a `(seed, R, index)` triple is deterministic:
//! generation uses a dedicated RNG stream per (index, attempt), instances
//! that fail the solvability check are redrawn on the next attempt stream,
//! and parallel evaluation merges results by index. Identical configs give
//! byte-identical report files.

use crate::bitset::BitSet;
use crate::bounds::{self, kmax};
use crate::model::{
    realize_likelihoods, validate_instance, BldsInstance, Source, StateSpace,
};
use crate::objective::Evaluator;
use crate::rational::{format_rat, rat, rat_to_f64, Rat};
use crate::solvers::{
    exact_solve, fast_greedy_solve, greedy_solve, FastGreedyConfig, EXACT_SOLVE_MAX_SOURCES,
};
use num::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::fmt::Write as _;
use thiserror::Error;

/// How generated sources encode their observation structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenMode {
    /// Random symmetric confusion sets, no likelihood realization. Supports
    /// objective evaluation and solving, not simulation.
    Raw,
    /// Random per-source state partitions realized as concrete likelihood
    /// rows, so the instance can also be simulated.
    Realizable,
}

/// Parameters for one family of random instances. Budgets are `r / m` for
/// every state and the prior is uniform.
#[derive(Debug, Clone)]
pub struct GenConfig {
    pub n: usize,
    pub m: usize,
    /// Budget numerator; requires `r < m - 1` so no budget is vacuous.
    pub r: u32,
    pub cost_max: u32,
    pub count: usize,
    pub seed: u64,
    pub mode: GenMode,
    /// Raw-mode probability of including a state in a confusion set.
    pub include_prob: Rat,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GenError {
    #[error("budget numerator {r} must satisfy r < m - 1 (m = {m})")]
    BadBudgetNumerator { r: u32, m: usize },
    #[error("{0} must be at least 1")]
    ZeroParameter(&'static str),
    #[error("include_prob must lie in [0, 1]")]
    BadIncludeProb,
}

impl GenConfig {
    pub fn validate(&self) -> Result<(), GenError> {
        if self.n == 0 {
            return Err(GenError::ZeroParameter("n"));
        }
        if self.m == 0 {
            return Err(GenError::ZeroParameter("m"));
        }
        if self.count == 0 {
            return Err(GenError::ZeroParameter("count"));
        }
        if self.cost_max == 0 {
            return Err(GenError::ZeroParameter("cost_max"));
        }
        if self.r as usize + 1 >= self.m {
            return Err(GenError::BadBudgetNumerator { r: self.r, m: self.m });
        }
        if self.include_prob < Rat::zero() || self.include_prob > rat(1, 1) {
            return Err(GenError::BadIncludeProb);
        }
        Ok(())
    }

    pub fn default_include_prob() -> Rat {
        rat(1, 2)
    }
}

/// Reads a seed override from the `BLDS_SEED` environment variable.
pub fn seed_from_env(default: u64) -> Result<u64, std::num::ParseIntError> {
    match std::env::var("BLDS_SEED") {
        Ok(text) => text.trim().parse(),
        Err(_) => Ok(default),
    }
}

/// Exact coin flip: a fresh 64-bit draw interpreted as a point in `[0, 1)`
/// compared against the rational probability.
fn bernoulli(rng: &mut ChaCha8Rng, p: &Rat) -> bool {
    Rat::new_raw(rng.gen::<u64>() as i128, 1i128 << 64) < *p
}

fn gen_rng(cfg: &GenConfig, index: u64, attempt: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    // One stream per (index, attempt) keeps instances independent and lets
    // a redraw replace a bad draw without shifting its neighbors.
    rng.set_stream(index.wrapping_mul(1 << 16).wrapping_add(attempt));
    rng
}

fn gen_raw_source(cfg: &GenConfig, rng: &mut ChaCha8Rng) -> Source {
    let m = cfg.m;
    let cost = Rat::from_integer(rng.gen_range(1..=cfg.cost_max) as i128);
    let mut fc = vec![BitSet::empty(); m];
    for p in 0..m {
        for q in 0..m {
            if q != p && bernoulli(rng, &cfg.include_prob) {
                // Symmetrize by union so the confusion relation is mutual.
                fc[p] = fc[p].insert(q);
                fc[q] = fc[q].insert(p);
            }
        }
    }
    Source::with_fc_sets(cost, fc)
}

fn gen_partition(m: usize, rng: &mut ChaCha8Rng) -> Vec<BitSet> {
    let block_count = rng.gen_range(1..=m);
    let mut blocks = vec![BitSet::empty(); block_count];
    for state in 0..m {
        let b = rng.gen_range(0..block_count);
        blocks[b] = blocks[b].insert(state);
    }
    blocks.retain(|b| !b.is_empty());
    blocks
}

fn gen_instance_with_attempt(cfg: &GenConfig, index: u64, attempt: u64) -> BldsInstance {
    let mut rng = gen_rng(cfg, index, attempt);
    let m = cfg.m;
    let sources = match cfg.mode {
        GenMode::Raw => (0..cfg.n).map(|_| gen_raw_source(cfg, &mut rng)).collect(),
        GenMode::Realizable => {
            let partitions: Vec<Vec<BitSet>> =
                (0..cfg.n).map(|_| gen_partition(m, &mut rng)).collect();
            let costs: Vec<Rat> = (0..cfg.n)
                .map(|_| Rat::from_integer(rng.gen_range(1..=cfg.cost_max) as i128))
                .collect();
            realize_likelihoods(&partitions, &costs)
        }
    };
    BldsInstance {
        states: StateSpace::indexed(m),
        sources,
        prior: vec![rat(1, m as i128); m],
        budgets: vec![rat(cfg.r as i128, m as i128); m],
    }
}

/// Generates the `index`-th instance of the family. Deterministic: the same
/// `(config, index)` always yields a bit-identical instance.
pub fn gen_instance(cfg: &GenConfig, index: u64) -> BldsInstance {
    gen_instance_with_attempt(cfg, index, 0)
}

/// One evaluated instance of the campaign.
#[derive(Debug, Clone)]
pub struct BenchRow {
    pub r: u32,
    pub idx: u64,
    pub h_opt: Rat,
    pub h_greedy: Rat,
    pub h_fast: Rat,
    /// Cost ratios versus the brute-force optimum; 0/0 counts as 1.
    pub ratio_g: f64,
    pub ratio_f: f64,
    /// Whether the fast greedy reached full coverage.
    pub full_cover_f: bool,
    pub oracle_g: u64,
    pub oracle_f: u64,
    /// Number of greedy picks.
    pub t_g: u64,
    pub bound_a: Option<f64>,
    pub bound_b: Option<f64>,
    pub bound_c: Option<f64>,
    pub bound_d: f64,
    pub bound_d_log: f64,
    pub fast_a: Option<f64>,
    pub fast_b: f64,
    /// Fast-greedy coverage and the target, kept exact for auditing.
    pub z_fast: Rat,
    pub z_target: Rat,
    /// Threshold-level ceiling for this instance's cost spread.
    pub kmax: u64,
    /// Redraws needed before a solvable instance came up at this index.
    pub redraws: u64,
}

/// Per-budget aggregate over the rows of one `R`.
#[derive(Debug, Clone, PartialEq)]
pub struct RAggregate {
    pub r: u32,
    pub mean_ratio_g: f64,
    /// Mean of the logarithmic integrality bound `1 + ln M'`.
    pub mean_bound_log: f64,
    pub mean_fast_b: f64,
    pub full_cover_fraction: f64,
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub aggregates: Vec<RAggregate>,
    pub epsilon: Rat,
    pub total_redraws: u64,
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Config(#[from] GenError),
    #[error("brute-force oracle is capped at {EXACT_SOLVE_MAX_SOURCES} sources, got {0}")]
    TooLarge(usize),
}

const MAX_REDRAWS: u64 = 10_000;

fn ratio_or_one(num: &Rat, den: &Rat) -> f64 {
    if den.is_zero() {
        1.0
    } else {
        rat_to_f64(num) / rat_to_f64(den)
    }
}

fn evaluate_instance(cfg: &GenConfig, idx: u64, epsilon: &Rat) -> BenchRow {
    let mut redraws = 0u64;
    let inst = loop {
        let raw = gen_instance_with_attempt(cfg, idx, redraws);
        let validated = validate_instance(raw).expect("generated instances are valid");
        if Evaluator::new(&validated).check_solvable().is_ok() {
            break validated;
        }
        redraws += 1;
        assert!(redraws < MAX_REDRAWS, "instance family looks unsolvable");
    };

    let fast_cfg = FastGreedyConfig::new(epsilon.clone()).expect("epsilon checked upstream");
    let opt = exact_solve(&inst).expect("solvable and within the brute-force cap");
    let (greedy, g_trace) = greedy_solve(&inst).expect("solvable");
    let (fast, f_trace) = fast_greedy_solve(&inst, &fast_cfg).expect("solvable");

    // The uniform parameterization admits the scale m(m - R), which varies
    // monotonically with R unlike the minimal common denominator.
    let scale = (cfg.m as i128) * (cfg.m as i128 - cfg.r as i128);
    let g_bounds = bounds::report_for_greedy(&g_trace, &inst, Some(scale));
    let f_bounds = bounds::report_for_fast(&f_trace, &inst, Some(scale));

    let eval = Evaluator::new(&inst);
    let costs: Vec<&Rat> = (0..inst.num_sources()).map(|i| inst.cost(i)).collect();
    let h_max = costs.iter().max().expect("n >= 1");
    let h_min = costs.iter().min().expect("n >= 1");

    BenchRow {
        r: cfg.r,
        idx,
        h_opt: opt.cost.clone(),
        h_greedy: greedy.cost.clone(),
        h_fast: fast.cost.clone(),
        ratio_g: ratio_or_one(&greedy.cost, &opt.cost),
        ratio_f: ratio_or_one(&fast.cost, &opt.cost),
        full_cover_f: fast.feasible,
        oracle_g: g_trace.oracle_calls,
        oracle_f: f_trace.oracle_calls,
        t_g: g_trace.t() as u64,
        bound_a: g_bounds.bound_a,
        bound_b: g_bounds.bound_b,
        bound_c: g_bounds.bound_c,
        bound_d: g_bounds.bound_d.expect("always computed for greedy"),
        bound_d_log: g_bounds.bound_d_log.expect("always computed for greedy"),
        fast_a: f_bounds.fast_a,
        fast_b: f_bounds.fast_b.expect("always computed for fast"),
        z_fast: fast.achieved_z,
        z_target: eval.z_full(),
        kmax: kmax(cfg.n, epsilon, h_max, h_min),
        redraws,
    }
}

/// Runs the full campaign: for each budget numerator in `r_values`,
/// generates and evaluates `cfg.count` solvable instances. Rows come back
/// sorted by `(R, index)` regardless of parallel scheduling.
pub fn run_benchmark(
    cfg: &GenConfig,
    r_values: &[u32],
    epsilon: &Rat,
) -> Result<BenchReport, BenchError> {
    if cfg.n > EXACT_SOLVE_MAX_SOURCES {
        return Err(BenchError::TooLarge(cfg.n));
    }
    let mut rows = Vec::with_capacity(r_values.len() * cfg.count);
    for &r in r_values {
        let r_cfg = GenConfig { r, ..cfg.clone() };
        r_cfg.validate()?;
        let mut r_rows: Vec<BenchRow> = (0..cfg.count as u64)
            .into_par_iter()
            .map(|idx| evaluate_instance(&r_cfg, idx, epsilon))
            .collect();
        rows.append(&mut r_rows);
    }
    let aggregates = aggregate(&rows, r_values);
    let total_redraws = rows.iter().map(|row| row.redraws).sum();
    Ok(BenchReport {
        rows,
        aggregates,
        epsilon: epsilon.clone(),
        total_redraws,
    })
}

fn aggregate(rows: &[BenchRow], r_values: &[u32]) -> Vec<RAggregate> {
    r_values
        .iter()
        .map(|&r| {
            let group: Vec<&BenchRow> = rows.iter().filter(|row| row.r == r).collect();
            let count = group.len() as f64;
            RAggregate {
                r,
                mean_ratio_g: group.iter().map(|row| row.ratio_g).sum::<f64>() / count,
                mean_bound_log: group.iter().map(|row| row.bound_d_log).sum::<f64>() / count,
                mean_fast_b: group.iter().map(|row| row.fast_b).sum::<f64>() / count,
                full_cover_fraction: group.iter().filter(|row| row.full_cover_f).count() as f64
                    / count,
            }
        })
        .collect()
}

fn opt_f64(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.12}")).unwrap_or_default()
}

/// Serializes the per-instance rows.
pub fn report_to_csv(report: &BenchReport) -> String {
    let mut out = String::from(
        "R,idx,h_opt,h_greedy,h_fast,ratio_g,ratio_f,full_cover_f,oracle_g,oracle_f,\
         bound_a,bound_b,bound_c,bound_d,fast_a,fast_b\n",
    );
    for row in &report.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{:.12},{:.12},{},{},{},{},{},{},{:.12},{},{:.12}",
            row.r,
            row.idx,
            format_rat(&row.h_opt),
            format_rat(&row.h_greedy),
            format_rat(&row.h_fast),
            row.ratio_g,
            row.ratio_f,
            row.full_cover_f,
            row.oracle_g,
            row.oracle_f,
            opt_f64(row.bound_a),
            opt_f64(row.bound_b),
            opt_f64(row.bound_c),
            row.bound_d,
            opt_f64(row.fast_a),
            row.fast_b,
        );
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RatioKind {
    Greedy,
    Fast,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("report has no rows for R = {0}")]
pub struct MissingR(pub u32);

/// Histogram of cost ratios at one budget level. Returns (CSV, SVG). Bins
/// span from `min(1, observed minimum)` to the observed maximum.
pub fn emit_histogram(
    report: &BenchReport,
    r: u32,
    which: RatioKind,
    bins: usize,
) -> Result<(String, String), MissingR> {
    assert!(bins >= 1);
    let ratios: Vec<f64> = report
        .rows
        .iter()
        .filter(|row| row.r == r)
        .map(|row| match which {
            RatioKind::Greedy => row.ratio_g,
            RatioKind::Fast => row.ratio_f,
        })
        .collect();
    if ratios.is_empty() {
        return Err(MissingR(r));
    }
    let lo = ratios.iter().cloned().fold(1.0f64, f64::min);
    let hi = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut counts = vec![0u64; bins];
    for &x in &ratios {
        let mut b = ((x - lo) / width) as usize;
        if b >= bins {
            b = bins - 1;
        }
        counts[b] += 1;
    }
    let mut csv = String::from("bin_low,bin_high,count\n");
    for (b, &c) in counts.iter().enumerate() {
        let _ = writeln!(
            csv,
            "{:.6},{:.6},{}",
            lo + b as f64 * width,
            lo + (b + 1) as f64 * width,
            c
        );
    }
    let svg = bar_chart_svg(
        &counts,
        lo,
        width,
        &format!(
            "cost ratio histogram, R={r}, {}",
            match which {
                RatioKind::Greedy => "greedy",
                RatioKind::Fast => "fast greedy",
            }
        ),
    );
    Ok((csv, svg))
}

/// Mean bound curves over the report's budget sweep. Returns (CSV, SVG).
pub fn emit_bound_curve(report: &BenchReport) -> (String, String) {
    let mut csv = String::from("R,mean_bound_log,mean_fast_b\n");
    for agg in &report.aggregates {
        let _ = writeln!(
            csv,
            "{},{:.12},{:.12}",
            agg.r, agg.mean_bound_log, agg.mean_fast_b
        );
    }
    let series: Vec<(f64, Vec<f64>)> = report
        .aggregates
        .iter()
        .map(|a| (a.r as f64, vec![a.mean_bound_log, a.mean_fast_b]))
        .collect();
    let svg = line_chart_svg(&series, "mean performance bounds vs budget numerator R");
    (csv, svg)
}

const SVG_W: f64 = 640.0;
const SVG_H: f64 = 400.0;
const MARGIN: f64 = 50.0;

fn svg_open(title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" \
         width=\"{SVG_W}\" height=\"{SVG_H}\" viewBox=\"0 0 {SVG_W} {SVG_H}\">\n\
         <text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">{title}</text>\n\
         <line x1=\"{MARGIN}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n\
         <line x1=\"{MARGIN}\" y1=\"{MARGIN}\" x2=\"{MARGIN}\" y2=\"{}\" stroke=\"black\"/>\n",
        SVG_W / 2.0,
        SVG_H - MARGIN,
        SVG_W - MARGIN,
        SVG_H - MARGIN,
        SVG_H - MARGIN,
    )
}

fn bar_chart_svg(counts: &[u64], lo: f64, width: f64, title: &str) -> String {
    let mut svg = svg_open(title);
    let max_count = counts.iter().cloned().max().unwrap_or(1).max(1) as f64;
    let plot_w = SVG_W - 2.0 * MARGIN;
    let plot_h = SVG_H - 2.0 * MARGIN;
    let bar_w = plot_w / counts.len() as f64;
    for (b, &c) in counts.iter().enumerate() {
        let h = plot_h * c as f64 / max_count;
        let x = MARGIN + b as f64 * bar_w;
        let y = SVG_H - MARGIN - h;
        let _ = writeln!(
            svg,
            "<rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{:.2}\" height=\"{h:.2}\" \
             fill=\"steelblue\" stroke=\"black\"/>",
            bar_w * 0.95
        );
        let _ = writeln!(
            svg,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\" font-size=\"9\">{:.3}</text>",
            x + bar_w / 2.0,
            SVG_H - MARGIN + 14.0,
            lo + (b as f64 + 0.5) * width
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn line_chart_svg(series: &[(f64, Vec<f64>)], title: &str) -> String {
    let mut svg = svg_open(title);
    if series.is_empty() {
        svg.push_str("</svg>\n");
        return svg;
    }
    let n_lines = series[0].1.len();
    let xs: Vec<f64> = series.iter().map(|(x, _)| *x).collect();
    let (x_lo, x_hi) = (
        xs.iter().cloned().fold(f64::INFINITY, f64::min),
        xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    );
    let ys: Vec<f64> = series.iter().flat_map(|(_, v)| v.iter().cloned()).collect();
    let (y_lo, y_hi) = (
        0.0f64.min(ys.iter().cloned().fold(f64::INFINITY, f64::min)),
        ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    );
    let x_span = (x_hi - x_lo).max(1e-9);
    let y_span = (y_hi - y_lo).max(1e-9);
    let to_px = |x: f64, y: f64| {
        (
            MARGIN + (x - x_lo) / x_span * (SVG_W - 2.0 * MARGIN),
            SVG_H - MARGIN - (y - y_lo) / y_span * (SVG_H - 2.0 * MARGIN),
        )
    };
    let colors = ["steelblue", "firebrick", "seagreen"];
    for line in 0..n_lines {
        let pts: Vec<String> = series
            .iter()
            .map(|(x, v)| {
                let (px, py) = to_px(*x, v[line]);
                format!("{px:.2},{py:.2}")
            })
            .collect();
        let _ = writeln!(
            svg,
            "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"2\" points=\"{}\"/>",
            colors[line % colors.len()],
            pts.join(" ")
        );
    }
    for (x, _) in series {
        let (px, _) = to_px(*x, y_lo);
        let _ = writeln!(
            svg,
            "<text x=\"{px:.2}\" y=\"{:.2}\" text-anchor=\"middle\" font-size=\"10\">{x}</text>",
            SVG_H - MARGIN + 14.0
        );
    }
    svg.push_str("</svg>\n");
    svg
}
