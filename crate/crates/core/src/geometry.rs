//! Perturbation geometry: the operators that map fairness perturbation
//! directions into task-space and data-space deviations, the validity
//! thresholds of the local (second-order) mutual-information approximation,
//! and the approximation itself.
//!
//! Conventions: a representation value y pins the sensitive conditional to
//! `p_s + eps * [sqrt(p_s)] l_y`, where the direction `l_y` is orthogonal to
//! `sqrt(p_s)`, the directions average to zero under p_y, and each has norm
//! at most one. All approximate mutual informations are in nats.

use crate::dist::{mutual_information, Channel, LogBase, Pmf};
use crate::error::{Error, Result};
use crate::matrix::{dot, norm2, Matrix};
use crate::svd::svd_small;

const DESIGN_TOL: f64 = 1e-10;

/// Full problem input: data marginal, the two conditional channels, the
/// fairness budget and the compression budget (nats).
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    p_x: Pmf,
    p_s_given_x: Channel,
    p_t_given_x: Channel,
    p_s: Pmf,
    p_t: Pmf,
    eps: f64,
    rate: f64,
}

impl ProblemInstance {
    pub fn new(
        p_x: Pmf,
        p_s_given_x: Channel,
        p_t_given_x: Channel,
        eps: f64,
        rate: f64,
    ) -> Result<Self> {
        let n = p_x.len();
        if n < 2 {
            return Err(Error::Validation(
                "data alphabet must have size >= 2".into(),
            ));
        }
        if p_s_given_x.in_size() != n {
            return Err(Error::DimensionMismatch(format!(
                "sensitive channel expects input size {n}, got {}",
                p_s_given_x.in_size()
            )));
        }
        if p_s_given_x.out_size() != n {
            return Err(Error::Validation(format!(
                "sensitive channel must be square (invertibility requires |S| = |X|), got {}x{}",
                p_s_given_x.out_size(),
                n
            )));
        }
        if p_t_given_x.in_size() != n {
            return Err(Error::DimensionMismatch(format!(
                "task channel expects input size {n}, got {}",
                p_t_given_x.in_size()
            )));
        }
        if p_t_given_x.out_size() < 2 {
            return Err(Error::Validation(
                "task alphabet must have size >= 2".into(),
            ));
        }
        if p_x.min() <= 0.0 {
            return Err(Error::Validation(
                "p_x must be strictly positive (zero-mass symbols are rejected)".into(),
            ));
        }
        let det = p_s_given_x.matrix().determinant()?;
        if det.abs() <= 1e-10 {
            return Err(Error::Conditioning(format!(
                "sensitive channel is not invertible (|det| = {:.3e} <= 1e-10)",
                det.abs()
            )));
        }
        let p_s = p_s_given_x.apply(&p_x)?;
        let p_t = p_t_given_x.apply(&p_x)?;
        if p_s.min() <= 0.0 || p_t.min() <= 0.0 {
            return Err(Error::Validation(
                "derived marginals must be strictly positive".into(),
            ));
        }
        if !eps.is_finite() || eps < 0.0 {
            return Err(Error::Validation(format!("eps must be >= 0, got {eps}")));
        }
        if !rate.is_finite() || rate <= 0.0 {
            return Err(Error::Validation(format!("rate must be > 0, got {rate}")));
        }
        Ok(Self {
            p_x,
            p_s_given_x,
            p_t_given_x,
            p_s,
            p_t,
            eps,
            rate,
        })
    }

    pub fn p_x(&self) -> &Pmf {
        &self.p_x
    }

    pub fn p_s(&self) -> &Pmf {
        &self.p_s
    }

    pub fn p_t(&self) -> &Pmf {
        &self.p_t
    }

    pub fn p_s_given_x(&self) -> &Channel {
        &self.p_s_given_x
    }

    pub fn p_t_given_x(&self) -> &Channel {
        &self.p_t_given_x
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn s_size(&self) -> usize {
        self.p_s.len()
    }

    pub fn x_size(&self) -> usize {
        self.p_x.len()
    }

    pub fn t_size(&self) -> usize {
        self.p_t.len()
    }

    /// Same instance with a different fairness budget.
    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        Self::new(
            self.p_x.clone(),
            self.p_s_given_x.clone(),
            self.p_t_given_x.clone(),
            eps,
            self.rate,
        )
    }

    /// Same instance with a different compression budget.
    pub fn with_rate(&self, rate: f64) -> Result<Self> {
        Self::new(
            self.p_x.clone(),
            self.p_s_given_x.clone(),
            self.p_t_given_x.clone(),
            self.eps,
            rate,
        )
    }
}

/// A representation marginal together with one perturbation direction per
/// representation value.
#[derive(Debug, Clone)]
pub struct PerturbationDesign {
    p_y: Pmf,
    l_vectors: Vec<Vec<f64>>,
}

impl PerturbationDesign {
    /// Validates the three direction properties against the sensitive
    /// marginal: orthogonality to sqrt(p_s), zero mean under p_y, and unit
    /// norm cap.
    pub fn new(p_y: Pmf, l_vectors: Vec<Vec<f64>>, p_s: &Pmf) -> Result<Self> {
        if l_vectors.len() != p_y.len() {
            return Err(Error::DimensionMismatch(format!(
                "need one direction per representation value: {} vs {}",
                l_vectors.len(),
                p_y.len()
            )));
        }
        let sqrt_p_s = p_s.sqrt_entries();
        let n = p_s.len();
        let mut mean = vec![0.0; n];
        for (y, l) in l_vectors.iter().enumerate() {
            if l.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "direction {y} has length {}, expected {n}",
                    l.len()
                )));
            }
            let ortho = dot(l, &sqrt_p_s);
            if ortho.abs() > DESIGN_TOL {
                return Err(Error::Validation(format!(
                    "direction {y} is not orthogonal to sqrt(p_s): <l, sqrt(p_s)> = {ortho:.3e}"
                )));
            }
            let sq = dot(l, l);
            if sq > 1.0 + DESIGN_TOL {
                return Err(Error::Validation(format!(
                    "direction {y} has squared norm {sq:.12} > 1"
                )));
            }
            for (m, &v) in mean.iter_mut().zip(l.iter()) {
                *m += p_y.get(y) * v;
            }
        }
        let mean_norm = norm2(&mean);
        if mean_norm > DESIGN_TOL {
            return Err(Error::Validation(format!(
                "directions do not average to zero: |sum_y p_y l_y| = {mean_norm:.3e}"
            )));
        }
        Ok(Self { p_y, l_vectors })
    }

    pub fn p_y(&self) -> &Pmf {
        &self.p_y
    }

    pub fn l_vectors(&self) -> &[Vec<f64>] {
        &self.l_vectors
    }

    pub fn s_size(&self) -> usize {
        self.l_vectors.first().map_or(0, Vec::len)
    }
}

/// The two deviation operators plus the validity thresholds of the
/// second-order approximation.
///
/// `w_ty` maps a direction to its task-space deviation and `w_xy` to its
/// data-space deviation, both in the square-root-weighted coordinates in
/// which squared norms become chi-squared-type divergences.
#[derive(Debug, Clone)]
pub struct GeometryOperators {
    pub w_ty: Matrix,
    pub w_xy: Matrix,
    /// Task-side validity threshold for eps.
    pub c1: f64,
    /// Data-side validity threshold for eps.
    pub c2: f64,
    /// Maps a direction l to the raw deviation of the data conditional:
    /// `p_x_given_y = p_x + eps * push_x l`.
    pub(crate) push_x: Matrix,
    /// Maps a direction l to the raw deviation of the task conditional.
    pub(crate) push_t: Matrix,
    pub(crate) sqrt_p_s: Vec<f64>,
}

impl GeometryOperators {
    /// Thresholds are sufficient, not necessary; callers warn rather than
    /// refuse above them.
    pub fn eps_within_thresholds(&self, eps: f64) -> bool {
        eps < self.c1.min(self.c2)
    }

    pub fn sqrt_p_s(&self) -> &[f64] {
        &self.sqrt_p_s
    }
}

/// Builds the deviation operators and the validity thresholds.
pub fn build_operators(inst: &ProblemInstance) -> Result<GeometryOperators> {
    let sqrt_p_s = inst.p_s().sqrt_entries();
    let sqrt_p_x = inst.p_x().sqrt_entries();
    let sqrt_p_t = inst.p_t().sqrt_entries();

    let s_inv = inst.p_s_given_x().matrix().inverse().map_err(|e| match e {
        Error::Conditioning(msg) => Error::Conditioning(format!("sensitive channel: {msg}")),
        other => other,
    })?;

    // push_x = P_{S|X}^{-1} [sqrt(p_s)]
    let mut push_x = s_inv.clone();
    for i in 0..push_x.rows() {
        for j in 0..push_x.cols() {
            push_x.set(i, j, push_x.get(i, j) * sqrt_p_s[j]);
        }
    }
    let push_t = inst.p_t_given_x().matrix().mul(&push_x)?;

    let inv_sqrt_p_x: Vec<f64> = sqrt_p_x.iter().map(|v| 1.0 / v).collect();
    let inv_sqrt_p_t: Vec<f64> = sqrt_p_t.iter().map(|v| 1.0 / v).collect();
    let w_xy = push_x.scale_rows(&inv_sqrt_p_x)?;
    let w_ty = push_t.scale_rows(&inv_sqrt_p_t)?;

    // c1 = min_t p_t / (sigma_max(P_{T|X} P_{S|X}^{-1}) sqrt(max_s p_s))
    let t_from_s = inst.p_t_given_x().matrix().mul(&s_inv)?;
    let sigma_max_ts = svd_small(&t_from_s)?.values[0];
    let c1 = inst.p_t().min() / (sigma_max_ts * inst.p_s().max().sqrt());

    // c2 = sigma_min(P_{S|X}) min_x p_x / sqrt(max_s p_s)
    let s_values = svd_small(inst.p_s_given_x().matrix())?.values;
    let sigma_min_s = *s_values.last().expect("non-empty spectrum");
    let c2 = sigma_min_s * inst.p_x().min() / inst.p_s().max().sqrt();

    Ok(GeometryOperators {
        w_ty,
        w_xy,
        c1,
        c2,
        push_x,
        push_t,
        sqrt_p_s,
    })
}

/// Applies one perturbation direction to the sensitive marginal:
/// `p_s + eps * [sqrt(p_s)] l`, validated as a pmf.
pub fn perturb_to_conditional(p_s: &Pmf, l: &[f64], eps: f64) -> Result<Pmf> {
    if l.len() != p_s.len() {
        return Err(Error::DimensionMismatch(format!(
            "direction length {} does not match alphabet size {}",
            l.len(),
            p_s.len()
        )));
    }
    let sqrt_p_s = p_s.sqrt_entries();
    let ortho = dot(l, &sqrt_p_s);
    if ortho.abs() > DESIGN_TOL {
        return Err(Error::Validation(format!(
            "direction is not orthogonal to sqrt(p_s): {ortho:.3e}"
        )));
    }
    if dot(l, l) > 1.0 + DESIGN_TOL {
        return Err(Error::Validation("direction norm exceeds 1".into()));
    }
    let mut out = Vec::with_capacity(p_s.len());
    for i in 0..p_s.len() {
        let v = p_s.get(i) + eps * sqrt_p_s[i] * l[i];
        if v < -1e-12 {
            return Err(Error::InfeasibleEpsilon {
                conditional: "p_s_given_y",
                y: 0,
                index: i,
                value: v,
            });
        }
        out.push(v.max(0.0));
    }
    Pmf::new(out)
}

fn quadratic_form(w: &Matrix, design: &PerturbationDesign, eps: f64) -> Result<f64> {
    if design.s_size() != w.cols() {
        return Err(Error::DimensionMismatch(format!(
            "design directions have length {}, operator expects {}",
            design.s_size(),
            w.cols()
        )));
    }
    let mut acc = 0.0;
    for (y, l) in design.l_vectors().iter().enumerate() {
        let img = w.matvec(l)?;
        acc += design.p_y().get(y) * dot(&img, &img);
    }
    Ok(0.5 * eps * eps * acc)
}

/// Second-order approximation of the data-representation mutual information,
/// in nats. Valid below `c2`; above it the caller should warn, not refuse.
pub fn approx_mi_xy(ops: &GeometryOperators, design: &PerturbationDesign, eps: f64) -> Result<f64> {
    quadratic_form(&ops.w_xy, design, eps)
}

/// Second-order approximation of the task-representation mutual information,
/// in nats. Valid below `c1`.
pub fn approx_mi_ty(ops: &GeometryOperators, design: &PerturbationDesign, eps: f64) -> Result<f64> {
    quadratic_form(&ops.w_ty, design, eps)
}

/// One row of the approximation-error probe.
#[derive(Debug, Clone)]
pub struct ProbeRow {
    pub eps: f64,
    pub approx_mi_xy: f64,
    pub approx_mi_ty: f64,
    /// Exact value from the reconstructed data conditionals; `None` when the
    /// reconstruction is not a valid distribution at this eps.
    pub exact_mi_xy: Option<f64>,
    pub exact_mi_ty: Option<f64>,
    pub err_xy_over_eps_sq: Option<f64>,
    pub err_ty_over_eps_sq: Option<f64>,
}

fn exact_mi_of_reconstruction(
    base: &Pmf,
    push: &Matrix,
    design: &PerturbationDesign,
    eps: f64,
) -> Result<Option<f64>> {
    let n = base.len();
    let ny = design.p_y().len();
    let mut joint = Matrix::zeros(n, ny);
    for (y, l) in design.l_vectors().iter().enumerate() {
        let dev = push.matvec(l)?;
        for i in 0..n {
            let cond = base.get(i) + eps * dev[i];
            if cond < -1e-12 {
                return Ok(None);
            }
            joint.set(i, y, cond.max(0.0) * design.p_y().get(y));
        }
    }
    Ok(Some(mutual_information(&joint, LogBase::Nats)?))
}

/// Quantifies how fast the second-order approximation tightens: for each eps
/// in the grid, reconstructs the conditionals exactly, computes the exact
/// mutual informations, and reports |exact - approx| / eps^2. Grid points
/// whose reconstruction is infeasible are reported with `None` values rather
/// than failing the probe.
pub fn approximation_error_probe(
    inst: &ProblemInstance,
    design: &PerturbationDesign,
    eps_grid: &[f64],
) -> Result<Vec<ProbeRow>> {
    let ops = build_operators(inst)?;
    let mut rows = Vec::with_capacity(eps_grid.len());
    for &eps in eps_grid {
        if !eps.is_finite() || eps < 0.0 {
            return Err(Error::Validation(format!(
                "probe eps must be >= 0, got {eps}"
            )));
        }
        let approx_xy = approx_mi_xy(&ops, design, eps)?;
        let approx_ty = approx_mi_ty(&ops, design, eps)?;
        let exact_xy = exact_mi_of_reconstruction(inst.p_x(), &ops.push_x, design, eps)?;
        let exact_ty = exact_mi_of_reconstruction(inst.p_t(), &ops.push_t, design, eps)?;
        let ratio = |exact: Option<f64>, approx: f64| {
            exact.map(|e| {
                if eps == 0.0 {
                    0.0
                } else {
                    (e - approx).abs() / (eps * eps)
                }
            })
        };
        rows.push(ProbeRow {
            eps,
            approx_mi_xy: approx_xy,
            approx_mi_ty: approx_ty,
            err_xy_over_eps_sq: ratio(exact_xy, approx_xy),
            err_ty_over_eps_sq: ratio(exact_ty, approx_ty),
            exact_mi_xy: exact_xy,
            exact_mi_ty: exact_ty,
        });
    }
    Ok(rows)
}
