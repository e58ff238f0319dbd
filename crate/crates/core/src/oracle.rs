//! Exhaustive-search ground truth. Enumerates representation channels on a
//! dense parameter grid, evaluates the exact (non-approximated) trade-off for
//! each, and keeps the best feasible one. Also provides a sampled brute-force
//! maximizer of the quadratic surrogate, used to certify the closed-form
//! design on binary sensitive alphabets.

use crate::dist::Channel;
use crate::error::{Error, Result};
use crate::geometry::{GeometryOperators, ProblemInstance};
use crate::matrix::{dot, Matrix};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Fairness constraint selector: the point-wise chi-squared bound
/// (chi2(p_s_given_y; p_s) <= eps^2 for every y on the support) or the
/// averaged leakage bound (I(S;Y) <= eps^2, nats).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
pub enum Measure {
    #[serde(rename = "chi2")]
    #[value(name = "chi2")]
    ChiSquaredPointwise,
    #[serde(rename = "mi")]
    #[value(name = "mi")]
    MutualInformation,
}

/// Slack applied to the exact constraint comparisons, so designs sitting on
/// the constraint boundary are not rejected for float dust.
const FEAS_TOL: f64 = 1e-12;

/// Hard cap on grid size; beyond this the search is asked to coarsen.
const MAX_EVALUATIONS: u128 = 2_000_000_000;

#[derive(Debug, Clone)]
pub struct OracleConfig {
    /// Grid points per free parameter, endpoints included.
    pub grid_resolution: usize,
    /// Representation alphabet size (2 by default, 3 behind the same knob
    /// for sensitivity checks; dense search beyond 3 is refused).
    pub y_cardinality: usize,
    pub measure: Measure,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            grid_resolution: 500,
            y_cardinality: 2,
            measure: Measure::ChiSquaredPointwise,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OracleResult {
    /// Best exact task information among feasible channels, in nats.
    pub best_value_nats: f64,
    pub best_value_bits: f64,
    /// `None` only when nothing was feasible.
    pub best_channel: Option<Channel>,
    pub evaluated_count: u64,
    pub feasible_count: u64,
}

/// Exact evaluation of one candidate channel.
#[derive(Debug, Clone)]
pub struct ChannelEvaluation {
    /// Exact I(Y;T) in nats.
    pub objective_nats: f64,
    pub objective_bits: f64,
    /// Exact I(X;Y) in nats.
    pub rate_nats: f64,
    /// Exact I(S;Y) in nats.
    pub leakage_nats: f64,
    /// Point-wise divergence per representation value; `None` on zero-mass
    /// values, where the constraint is vacuous.
    pub chi2_per_y: Vec<Option<f64>>,
    pub fairness_ok: bool,
    pub rate_ok: bool,
    pub feasible: bool,
}

struct EvalScratch {
    p_y: Vec<f64>,
    s_joint: Vec<f64>,
    t_joint: Vec<f64>,
}

impl EvalScratch {
    fn new(ns: usize, nt: usize, ny: usize) -> Self {
        Self {
            p_y: vec![0.0; ny],
            s_joint: vec![0.0; ns * ny],
            t_joint: vec![0.0; nt * ny],
        }
    }
}

struct EvalContext<'a> {
    p_x: &'a [f64],
    p_s: &'a [f64],
    p_t: &'a [f64],
    ps_matrix: &'a Matrix,
    pt_matrix: &'a Matrix,
    eps_sq: f64,
    rate: f64,
    measure: Measure,
}

/// Hot-path evaluation over raw column slices. Returns
/// (objective_nats, rate_nats, fairness_ok, rate_ok); the marginal and the
/// pair joints stay behind in the scratch for diagnostics.
fn eval_columns(
    ctx: &EvalContext<'_>,
    columns: &[&[f64]],
    scratch: &mut EvalScratch,
) -> (f64, f64, bool, bool) {
    let nx = ctx.p_x.len();
    let ns = ctx.p_s.len();
    let nt = ctx.p_t.len();
    let ny = columns[0].len();

    scratch.p_y.iter_mut().for_each(|v| *v = 0.0);
    scratch.s_joint.iter_mut().for_each(|v| *v = 0.0);
    scratch.t_joint.iter_mut().for_each(|v| *v = 0.0);

    for x in 0..nx {
        let px = ctx.p_x[x];
        for y in 0..ny {
            let w = columns[x][y] * px;
            if w == 0.0 {
                continue;
            }
            scratch.p_y[y] += w;
            for s in 0..ns {
                scratch.s_joint[s * ny + y] += ctx.ps_matrix.get(s, x) * w;
            }
            for t in 0..nt {
                scratch.t_joint[t * ny + y] += ctx.pt_matrix.get(t, x) * w;
            }
        }
    }

    // exact I(X;Y) = sum_{x,y} p(x) c(y|x) ln(c(y|x) / p_y(y))
    let mut rate_nats = 0.0;
    for x in 0..nx {
        for y in 0..ny {
            let c = columns[x][y];
            if c > 0.0 && scratch.p_y[y] > 0.0 {
                rate_nats += ctx.p_x[x] * c * (c / scratch.p_y[y]).ln();
            }
        }
    }
    rate_nats = rate_nats.max(0.0);
    let rate_ok = rate_nats <= ctx.rate + FEAS_TOL;

    let fairness_ok = match ctx.measure {
        Measure::ChiSquaredPointwise => {
            let mut ok = true;
            'outer: for y in 0..ny {
                let py = scratch.p_y[y];
                if py <= 0.0 {
                    continue; // constraint vacuous off the support
                }
                let mut chi2 = 0.0;
                for s in 0..ns {
                    let d = scratch.s_joint[s * ny + y] / py - ctx.p_s[s];
                    chi2 += d * d / ctx.p_s[s];
                }
                if chi2 > ctx.eps_sq + FEAS_TOL {
                    ok = false;
                    break 'outer;
                }
            }
            ok
        }
        Measure::MutualInformation => {
            let mut leak = 0.0;
            for s in 0..ns {
                for y in 0..ny {
                    let v = scratch.s_joint[s * ny + y];
                    if v > 0.0 && scratch.p_y[y] > 0.0 {
                        leak += v * (v / (ctx.p_s[s] * scratch.p_y[y])).ln();
                    }
                }
            }
            leak.max(0.0) <= ctx.eps_sq + FEAS_TOL
        }
    };

    let mut objective = 0.0;
    for t in 0..nt {
        for y in 0..ny {
            let v = scratch.t_joint[t * ny + y];
            if v > 0.0 && scratch.p_y[y] > 0.0 {
                objective += v * (v / (ctx.p_t[t] * scratch.p_y[y])).ln();
            }
        }
    }
    objective = objective.max(0.0);

    (objective, rate_nats, fairness_ok, rate_ok)
}

fn context<'a>(inst: &'a ProblemInstance, measure: Measure) -> EvalContext<'a> {
    EvalContext {
        p_x: inst.p_x().as_slice(),
        p_s: inst.p_s().as_slice(),
        p_t: inst.p_t().as_slice(),
        ps_matrix: inst.p_s_given_x().matrix(),
        pt_matrix: inst.p_t_given_x().matrix(),
        eps_sq: inst.eps() * inst.eps(),
        rate: inst.rate(),
        measure,
    }
}

/// Exact evaluation of one representation channel against the selected
/// fairness measure and the compression budget. Infeasibility is a result,
/// not an error.
pub fn evaluate_channel(
    inst: &ProblemInstance,
    p_y_given_x: &Channel,
    measure: Measure,
) -> Result<ChannelEvaluation> {
    if p_y_given_x.in_size() != inst.x_size() {
        return Err(Error::DimensionMismatch(format!(
            "representation channel expects input size {}, got {}",
            inst.x_size(),
            p_y_given_x.in_size()
        )));
    }
    let ny = p_y_given_x.out_size();
    let columns: Vec<Vec<f64>> = (0..inst.x_size()).map(|x| p_y_given_x.column(x)).collect();
    let column_refs: Vec<&[f64]> = columns.iter().map(Vec::as_slice).collect();
    let ctx = context(inst, measure);
    let mut scratch = EvalScratch::new(inst.s_size(), inst.t_size(), ny);
    let (objective, rate_nats, fairness_ok, rate_ok) =
        eval_columns(&ctx, &column_refs, &mut scratch);

    let mut leakage_nats = 0.0;
    for s in 0..inst.s_size() {
        for y in 0..ny {
            let v = scratch.s_joint[s * ny + y];
            if v > 0.0 && scratch.p_y[y] > 0.0 {
                leakage_nats += v * (v / (ctx.p_s[s] * scratch.p_y[y])).ln();
            }
        }
    }
    leakage_nats = leakage_nats.max(0.0);

    let mut chi2_per_y = Vec::with_capacity(ny);
    for y in 0..ny {
        let py = scratch.p_y[y];
        if py <= 0.0 {
            chi2_per_y.push(None);
        } else {
            let mut chi2 = 0.0;
            for s in 0..inst.s_size() {
                let d = scratch.s_joint[s * ny + y] / py - ctx.p_s[s];
                chi2 += d * d / ctx.p_s[s];
            }
            chi2_per_y.push(Some(chi2));
        }
    }

    Ok(ChannelEvaluation {
        objective_nats: objective,
        objective_bits: objective / std::f64::consts::LN_2,
        rate_nats,
        leakage_nats,
        chi2_per_y,
        fairness_ok,
        rate_ok,
        feasible: fairness_ok && rate_ok,
    })
}

/// All pmfs over `size` outcomes whose entries are multiples of
/// 1/(resolution - 1), in lexicographic order of their quantum counts.
fn simplex_grid(size: usize, resolution: usize) -> Vec<Vec<f64>> {
    let quanta = resolution - 1;
    let mut out = Vec::new();
    let mut counts = vec![0usize; size];
    fn rec(
        counts: &mut Vec<usize>,
        pos: usize,
        left: usize,
        quanta: usize,
        out: &mut Vec<Vec<f64>>,
    ) {
        if pos == counts.len() - 1 {
            counts[pos] = left;
            out.push(counts.iter().map(|&c| c as f64 / quanta as f64).collect());
            return;
        }
        for take in 0..=left {
            counts[pos] = take;
            rec(counts, pos + 1, left - take, quanta, out);
        }
    }
    rec(&mut counts, 0, quanta, quanta, &mut out);
    out
}

/// Maximizes the exact task information over the uniform channel grid,
/// subject to the selected fairness constraint and the compression budget.
///
/// Deterministic: grid chunks are reduced with a strict-improvement rule and
/// merged in index order, so ties resolve to the lexicographically smallest
/// parameter tuple no matter the parallel schedule.
pub fn grid_search(inst: &ProblemInstance, cfg: &OracleConfig) -> Result<OracleResult> {
    if cfg.grid_resolution < 2 {
        return Err(Error::Validation("grid_resolution must be >= 2".into()));
    }
    if cfg.y_cardinality < 2 {
        return Err(Error::Validation("y_cardinality must be >= 2".into()));
    }
    if cfg.y_cardinality > 3 {
        return Err(Error::Validation(
            "dense search supports y_cardinality 2 or 3".into(),
        ));
    }
    let nx = inst.x_size();
    let points = simplex_grid(cfg.y_cardinality, cfg.grid_resolution);
    let per_column = points.len() as u128;
    let total_u128 = per_column.pow(nx as u32);
    if total_u128 > MAX_EVALUATIONS {
        return Err(Error::Validation(format!(
            "grid of {total_u128} channels is too large; lower the resolution"
        )));
    }
    let total = total_u128 as u64;
    let ctx = context(inst, cfg.measure);

    let chunk: u64 = 1 << 15;
    let chunk_count = total.div_ceil(chunk);
    let best = (0..chunk_count)
        .into_par_iter()
        .map(|ci| {
            let start = ci * chunk;
            let end = (start + chunk).min(total);
            let mut scratch = EvalScratch::new(inst.s_size(), inst.t_size(), cfg.y_cardinality);
            let mut columns: Vec<&[f64]> = vec![points[0].as_slice(); nx];
            let mut best_val = f64::NEG_INFINITY;
            let mut best_idx = u64::MAX;
            let mut feasible = 0u64;
            for idx in start..end {
                let mut rem = idx;
                // most significant digit first: lexicographic over columns
                for x in (0..nx).rev() {
                    columns[x] = points[(rem % per_column as u64) as usize].as_slice();
                    rem /= per_column as u64;
                }
                let (objective, _, fair, rate_ok) = eval_columns(&ctx, &columns, &mut scratch);
                if fair && rate_ok {
                    feasible += 1;
                    if objective > best_val {
                        best_val = objective;
                        best_idx = idx;
                    }
                }
            }
            (best_val, best_idx, feasible)
        })
        .collect::<Vec<_>>();

    let mut best_val = f64::NEG_INFINITY;
    let mut best_idx = u64::MAX;
    let mut feasible_count = 0u64;
    for (val, idx, feas) in best {
        feasible_count += feas;
        if idx != u64::MAX && val > best_val {
            best_val = val;
            best_idx = idx;
        }
    }

    if best_idx == u64::MAX {
        return Ok(OracleResult {
            best_value_nats: 0.0,
            best_value_bits: 0.0,
            best_channel: None,
            evaluated_count: total,
            feasible_count: 0,
        });
    }

    let mut rem = best_idx;
    let mut cols = vec![Vec::new(); nx];
    for x in (0..nx).rev() {
        cols[x] = points[(rem % per_column as u64) as usize].clone();
        rem /= per_column as u64;
    }
    let best_channel = Channel::from_columns(&cols)?;
    Ok(OracleResult {
        best_value_nats: best_val,
        best_value_bits: best_val / std::f64::consts::LN_2,
        best_channel: Some(best_channel),
        evaluated_count: total,
        feasible_count,
    })
}

/// Orthonormal basis of the complement of a unit vector, via the Householder
/// reflection that maps the first coordinate axis onto it.
fn orthonormal_complement(w: &[f64]) -> Vec<Vec<f64>> {
    let n = w.len();
    let mut u: Vec<f64> = w.to_vec();
    u[0] -= 1.0;
    let uu = dot(&u, &u);
    let mut basis = Vec::with_capacity(n - 1);
    for k in 1..n {
        let mut col = vec![0.0; n];
        col[k] = 1.0;
        if uu > 1e-24 {
            let f = 2.0 * u[k] / uu;
            for i in 0..n {
                col[i] -= f * u[i];
            }
        }
        basis.push(col);
    }
    basis
}

/// Brute-force maximization of the quadratic surrogate over binary symmetric
/// designs: directions on the unit sphere orthogonal to sqrt(p_s), each
/// scaled down just enough to satisfy the compression budget. The complement
/// basis directions are always included, so on binary sensitive alphabets
/// the single feasible direction is evaluated exactly.
pub fn quadratic_oracle(
    ops: &GeometryOperators,
    eps: f64,
    rate: f64,
    sphere_samples: usize,
) -> Result<f64> {
    let n = ops.w_ty.cols();
    if n > 4 {
        return Err(Error::Validation(
            "quadratic oracle supports sensitive alphabets up to size 4".into(),
        ));
    }
    let sqrt_p_s = ops.sqrt_p_s();
    let basis = orthonormal_complement(sqrt_p_s);

    let value_of = |dir: &[f64]| -> f64 {
        let img_x = ops.w_xy.matvec(dir).expect("dimension checked");
        let demand = 0.5 * eps * eps * dot(&img_x, &img_x);
        let k = (demand / rate).sqrt().max(1.0);
        let img_t = ops.w_ty.matvec(dir).expect("dimension checked");
        0.5 * eps * eps * dot(&img_t, &img_t) / (k * k)
    };

    // zero direction is always admissible
    let mut best = 0.0f64;
    for b in &basis {
        best = best.max(value_of(b));
    }

    let dim = n - 1;
    if dim > 1 && sphere_samples > 0 {
        let mut rng = StdRng::seed_from_u64(0x51_4f_52_41);
        let mut dir = vec![0.0; n];
        for _ in 0..sphere_samples {
            // gaussian sample in complement coordinates via Box-Muller
            let mut coeffs = vec![0.0; dim];
            for c in coeffs.iter_mut() {
                let u1: f64 = rng.random_range(1e-12..1.0);
                let u2: f64 = rng.random_range(0.0..1.0);
                *c = (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
            }
            let norm: f64 = coeffs.iter().map(|c| c * c).sum::<f64>().sqrt();
            if norm < 1e-12 {
                continue;
            }
            dir.iter_mut().for_each(|v| *v = 0.0);
            for (c, b) in coeffs.iter().zip(basis.iter()) {
                for i in 0..n {
                    dir[i] += c / norm * b[i];
                }
            }
            best = best.max(value_of(&dir));
        }
    }
    Ok(best)
}
