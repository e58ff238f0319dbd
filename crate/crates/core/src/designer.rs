//! Closed-form representation design: pick the dominant feasible singular
//! direction of the task-deviation operator, shrink it by the smallest factor
//! K >= 1 that restores the compression budget, and reconstruct the full
//! conditional family around a uniform binary representation.

use crate::dist::{bayes_invert, Channel, JointDist, Pmf};
use crate::error::{Error, Result};
use crate::geometry::{
    approx_mi_ty, build_operators, GeometryOperators, PerturbationDesign, ProblemInstance,
};
use crate::matrix::{dot, norm2, Matrix};
use crate::svd::svd_small;

/// Tolerance for treating the top singular value as the guaranteed unit one.
pub const SIGMA_TIE_TOL: f64 = 1e-9;

/// Top of the singular spectrum of the task-deviation operator.
///
/// The unit singular value with vector `sqrt(p_s)` is always present; the
/// design must look past it, so when the top of the spectrum is degenerate
/// the vectors are rotated inside their span to split off the component
/// along `sqrt(p_s)`.
#[derive(Debug, Clone)]
pub struct SpectralData {
    pub sigma_max: f64,
    pub sigma_max2: f64,
    pub v_max: Vec<f64>,
    pub v_max2: Vec<f64>,
}

impl SpectralData {
    pub fn from_operator(w: &Matrix, sqrt_p_s: &[f64]) -> Result<Self> {
        if w.cols() < 2 {
            return Err(Error::Validation(
                "spectral selection needs at least two singular directions".into(),
            ));
        }
        let svd = svd_small(w)?;
        let mut v0 = svd.right_vector(0);
        let mut v1 = svd.right_vector(1);
        if svd.value(0) - svd.value(1) <= SIGMA_TIE_TOL {
            // degenerate top pair: rotate so the second vector is orthogonal
            // to sqrt(p_s) (the first soaks up the unit direction)
            let a = dot(&v0, sqrt_p_s);
            let b = dot(&v1, sqrt_p_s);
            let q = (a * a + b * b).sqrt();
            if q > SIGMA_TIE_TOL {
                let (c, s) = (a / q, b / q);
                let r0: Vec<f64> = v0
                    .iter()
                    .zip(v1.iter())
                    .map(|(x, y)| c * x + s * y)
                    .collect();
                let r1: Vec<f64> = v0
                    .iter()
                    .zip(v1.iter())
                    .map(|(x, y)| -s * x + c * y)
                    .collect();
                v0 = r0;
                v1 = r1;
            }
        }
        Ok(Self {
            sigma_max: svd.value(0),
            sigma_max2: svd.value(1),
            v_max: v0,
            v_max2: v1,
        })
    }
}

/// Picks the perturbation direction per the spectral rule: the top singular
/// pair when the top value exceeds 1, the second pair when the top value is
/// the guaranteed unit one. Returns (sigma, direction, used_second).
pub fn select_direction(spec: &SpectralData, tol: f64) -> Result<(f64, Vec<f64>, bool)> {
    if spec.sigma_max > 1.0 + tol {
        Ok((spec.sigma_max, spec.v_max.clone(), false))
    } else if (spec.sigma_max - 1.0).abs() <= tol {
        Ok((spec.sigma_max2, spec.v_max2.clone(), true))
    } else {
        Err(Error::Numerical(format!(
            "top singular value {:.12} < 1; the operator always carries a unit \
             singular value, so the spectrum is numerically corrupted",
            spec.sigma_max
        )))
    }
}

/// Smallest K >= 1 such that the scaled direction satisfies the compression
/// budget: K = max(1, sqrt(eps^2 |w_xy v|^2 / (2 rate))).
pub fn compute_k(ops: &GeometryOperators, v: &[f64], eps: f64, rate: f64) -> f64 {
    let img = ops
        .w_xy
        .matvec(v)
        .expect("direction length matches operator");
    let demand = 0.5 * eps * eps * dot(&img, &img);
    (demand / rate).sqrt().max(1.0)
}

/// Where the reconstruction first went negative, if it did.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InfeasibleEntry {
    pub y: usize,
    pub index: usize,
    pub value: f64,
}

/// Everything the design produces: the scaled direction pair, the objective
/// value, and the reconstructed conditional family.
///
/// The sensitive and task conditionals are valid distributions whenever
/// `solve` returns at all. The data conditional `p_x_given_y` is the raw
/// algebraic reconstruction: beyond the local-validity radius it can carry a
/// negative entry, in which case no channel realizes the design exactly —
/// `p_y_given_x` and `joint` are then `None` and `infeasibility` names the
/// first offending entry. The objective and budget values remain meaningful
/// as second-order quantities either way.
#[derive(Debug, Clone)]
pub struct DesignSolution {
    /// Objective value of the quadratic surrogate, in nats.
    pub p2_value: f64,
    /// Singular value the design rides on.
    pub sigma: f64,
    /// True when the unit top value forced the second singular pair.
    pub used_second: bool,
    /// Rate-feasibility scaling, >= 1.
    pub k_factor: f64,
    pub design: PerturbationDesign,
    pub p_s_given_y: Channel,
    pub p_t_given_y: Channel,
    /// Raw reconstruction, columns indexed by y; may be signed (see above).
    pub p_x_given_y: Matrix,
    pub p_y_given_x: Option<Channel>,
    pub joint: Option<JointDist>,
    /// Exact-optimality marker: the construction is provably tight for
    /// binary sensitive alphabets.
    pub tightness: bool,
    pub infeasibility: Option<InfeasibleEntry>,
}

impl DesignSolution {
    pub fn is_realizable(&self) -> bool {
        self.infeasibility.is_none()
    }
}

fn canonical_sign(mut v: Vec<f64>) -> Vec<f64> {
    for &x in &v {
        if x.abs() > 1e-12 {
            if x < 0.0 {
                for e in &mut v {
                    *e = -*e;
                }
            }
            break;
        }
    }
    v
}

fn reconstruct(base: &Pmf, push: &Matrix, l: &[f64], eps: f64) -> Result<Vec<f64>> {
    let dev = push.matvec(l)?;
    Ok((0..base.len())
        .map(|i| base.get(i) + eps * dev[i])
        .collect())
}

fn first_negative(col: &[f64]) -> Option<(usize, f64)> {
    col.iter().copied().enumerate().find(|&(_, v)| v < -1e-12)
}

/// Solves the design problem for one instance.
pub fn solve(inst: &ProblemInstance) -> Result<DesignSolution> {
    let ops = build_operators(inst)?;
    let spec = SpectralData::from_operator(&ops.w_ty, inst.p_s().sqrt_entries().as_slice())?;
    let (sigma, v_raw, used_second) = select_direction(&spec, SIGMA_TIE_TOL)?;

    // polish orthogonality so the design constraints hold to machine
    // precision, then fix the sign convention
    let sqrt_p_s = inst.p_s().sqrt_entries();
    let mut v = v_raw;
    let proj = dot(&v, &sqrt_p_s);
    for (e, s) in v.iter_mut().zip(sqrt_p_s.iter()) {
        *e -= proj * s;
    }
    let nrm = norm2(&v);
    if nrm < 1e-12 {
        return Err(Error::Numerical(
            "selected direction collapsed onto sqrt(p_s)".into(),
        ));
    }
    for e in &mut v {
        *e /= nrm;
    }
    let v = canonical_sign(v);

    let eps = inst.eps();
    let k = compute_k(&ops, &v, eps, inst.rate());
    let l1: Vec<f64> = v.iter().map(|x| x / k).collect();
    let l2: Vec<f64> = v.iter().map(|x| -x / k).collect();
    let design = PerturbationDesign::new(Pmf::uniform(2), vec![l1, l2], inst.p_s())?;
    let p2_value = approx_mi_ty(&ops, &design, eps)?;

    let diag_sqrt_s = Matrix::diag(&sqrt_p_s);
    let mut s_cols = Vec::with_capacity(2);
    let mut t_cols = Vec::with_capacity(2);
    let mut x_cols = Vec::with_capacity(2);
    let mut infeasibility = None;
    for (y, l) in design.l_vectors().iter().enumerate() {
        let s_col = reconstruct(inst.p_s(), &diag_sqrt_s, l, eps)?;
        if let Some((index, value)) = first_negative(&s_col) {
            return Err(Error::InfeasibleEpsilon {
                conditional: "p_s_given_y",
                y,
                index,
                value,
            });
        }
        let t_col = reconstruct(inst.p_t(), &ops.push_t, l, eps)?;
        if let Some((index, value)) = first_negative(&t_col) {
            return Err(Error::InfeasibleEpsilon {
                conditional: "p_t_given_y",
                y,
                index,
                value,
            });
        }
        let x_col = reconstruct(inst.p_x(), &ops.push_x, l, eps)?;
        if infeasibility.is_none() {
            if let Some((index, value)) = first_negative(&x_col) {
                infeasibility = Some(InfeasibleEntry { y, index, value });
            }
        }
        s_cols.push(s_col);
        t_cols.push(t_col);
        x_cols.push(x_col);
    }

    let p_s_given_y = Channel::from_columns(&s_cols)?;
    let p_t_given_y = Channel::from_columns(&t_cols)?;
    let p_x_given_y = Matrix::from_columns(&x_cols)?;

    let (p_y_given_x, joint) = if infeasibility.is_none() {
        let x_channel = Channel::new(p_x_given_y.clone())?;
        let pyx = bayes_invert(&x_channel, design.p_y(), inst.p_x())?;
        let joint = assemble_joint(inst, &pyx)?;
        (Some(pyx), Some(joint))
    } else {
        (None, None)
    };

    Ok(DesignSolution {
        p2_value,
        sigma,
        used_second,
        k_factor: k,
        design,
        p_s_given_y,
        p_t_given_y,
        p_x_given_y,
        p_y_given_x,
        joint,
        tightness: inst.s_size() == 2,
        infeasibility,
    })
}

/// Assembles the four-way joint from the designed representation channel,
/// coupling the sensitive and task variables independently given the data
/// (only the two conditional channels are specified, so the joint is pinned
/// up to that coupling).
pub fn assemble_joint(inst: &ProblemInstance, p_y_given_x: &Channel) -> Result<JointDist> {
    let (ns, nt, nx, ny) = (
        inst.s_size(),
        inst.t_size(),
        inst.x_size(),
        p_y_given_x.out_size(),
    );
    if p_y_given_x.in_size() != nx {
        return Err(Error::DimensionMismatch(
            "representation channel input must match the data alphabet".into(),
        ));
    }
    let mut table = vec![0.0; ns * nt * nx * ny];
    for s in 0..ns {
        for t in 0..nt {
            for x in 0..nx {
                let base =
                    inst.p_s_given_x().get(s, x) * inst.p_t_given_x().get(t, x) * inst.p_x().get(x);
                for y in 0..ny {
                    table[((s * nt + t) * nx + x) * ny + y] = base * p_y_given_x.get(y, x);
                }
            }
        }
    }
    JointDist::new([ns, nt, nx, ny], table)
}

/// Utility bound in the low-rate regime, obtained by substituting the
/// rate-induced K into the spectral objective: rate * sigma^2 / |w_xy v|^2.
/// Linear in the rate; coincides with `solve` at the regime boundary.
pub fn low_rate_bound(inst: &ProblemInstance) -> Result<f64> {
    let ops = build_operators(inst)?;
    let spec = SpectralData::from_operator(&ops.w_ty, inst.p_s().sqrt_entries().as_slice())?;
    let (sigma, v, _) = select_direction(&spec, SIGMA_TIE_TOL)?;
    let img = ops.w_xy.matvec(&v)?;
    let gain = dot(&img, &img);
    let threshold = 0.5 * inst.eps() * inst.eps() * gain;
    if inst.rate() > threshold {
        return Err(Error::Domain(format!(
            "rate {} exceeds the low-rate regime boundary {threshold:.6e}",
            inst.rate()
        )));
    }
    Ok(inst.rate() * sigma * sigma / gain)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{chi_squared, compose};
    use crate::reference::reference_instance;

    fn assert_close(a: f64, b: f64, tol: f64, what: &str) {
        assert!(
            (a - b).abs() <= tol,
            "{what}: {a} vs {b} (diff {:.3e}, tol {tol:e})",
            (a - b).abs()
        );
    }

    #[test]
    fn spectra_match_reference() {
        let inst = reference_instance();
        let ops = build_operators(&inst).unwrap();
        let sq = inst.p_s().sqrt_entries();

        let svd_ty = svd_small(&ops.w_ty).unwrap();
        assert_close(svd_ty.value(0), 3.2034, 1e-3, "sigma_max(w_ty)");
        assert_close(svd_ty.value(1), 1.0, 1e-3, "sigma_2(w_ty)");
        let v = svd_ty.right_vector(0);
        let expected = [-0.8314, 0.5557];
        let sign = if v[0] * expected[0] >= 0.0 { 1.0 } else { -1.0 };
        for i in 0..2 {
            assert_close(sign * v[i], expected[i], 1e-3, "top right vector");
        }

        let svd_xy = svd_small(&ops.w_xy).unwrap();
        assert_close(svd_xy.value(0), 23.7087, 1e-3, "sigma_max(w_xy)");
        assert_close(svd_xy.value(1), 1.0, 1e-3, "sigma_2(w_xy)");

        let spec = SpectralData::from_operator(&ops.w_ty, &sq).unwrap();
        assert!(spec.sigma_max >= spec.sigma_max2);
        assert!(spec.sigma_max2 >= 0.0);
        assert!((dot(&spec.v_max, &spec.v_max) - 1.0).abs() < 1e-12);
        assert!((dot(&spec.v_max2, &spec.v_max2) - 1.0).abs() < 1e-12);
        assert!(dot(&spec.v_max, &spec.v_max2).abs() < 1e-9);
        let (sigma, dir, used_second) = select_direction(&spec, SIGMA_TIE_TOL).unwrap();
        assert!(!used_second);
        assert_close(sigma, 3.2034, 1e-3, "selected sigma");
        let sign = if dir[0] * expected[0] >= 0.0 {
            1.0
        } else {
            -1.0
        };
        for i in 0..2 {
            assert_close(sign * dir[i], expected[i], 1e-3, "selected direction");
        }
    }

    #[test]
    fn select_direction_unit_top() {
        // an instance whose task operator is the identity: every singular
        // value is 1, so the second pair is used
        let p_x = Pmf::uniform(2);
        let id = Channel::identity(2);
        let inst = ProblemInstance::new(p_x, id.clone(), id, 0.05, 0.75).unwrap();
        let ops = build_operators(&inst).unwrap();
        let spec = SpectralData::from_operator(&ops.w_ty, &inst.p_s().sqrt_entries()).unwrap();
        let (sigma, dir, used_second) = select_direction(&spec, SIGMA_TIE_TOL).unwrap();
        assert!(used_second);
        assert_close(sigma, 1.0, 1e-9, "second value");
        assert!(dot(&dir, &inst.p_s().sqrt_entries()).abs() < 1e-9);
    }

    #[test]
    fn select_direction_tie_break_and_contradiction() {
        // a value within tolerance of 1 takes the unit branch
        let spec = SpectralData {
            sigma_max: 1.0 + 1e-12,
            sigma_max2: 0.5,
            v_max: vec![1.0, 0.0],
            v_max2: vec![0.0, 1.0],
        };
        let (sigma, _, used_second) = select_direction(&spec, 1e-9).unwrap();
        assert!(used_second);
        assert_eq!(sigma, 0.5);
        // a top value below 1 - tol is a numerical contradiction
        let bad = SpectralData {
            sigma_max: 0.9,
            sigma_max2: 0.5,
            v_max: vec![1.0, 0.0],
            v_max2: vec![0.0, 1.0],
        };
        assert!(matches!(
            select_direction(&bad, 1e-9),
            Err(Error::Numerical(_))
        ));
    }

    #[test]
    fn k_factor_cases() {
        let inst = reference_instance();
        let ops = build_operators(&inst).unwrap();
        let spec = SpectralData::from_operator(&ops.w_ty, &inst.p_s().sqrt_entries()).unwrap();
        let (_, v, _) = select_direction(&spec, SIGMA_TIE_TOL).unwrap();
        // the bundled budget of 0.75 nats is loose across the whole sweep
        for eps in [0.005, 0.01, 0.02, 0.05] {
            assert_eq!(compute_k(&ops, &v, eps, 0.75), 1.0, "K at eps={eps}");
        }
        // tight budget: K = sqrt(demand / rate), frozen from the quadratic
        // at eps = 0.05
        let k = compute_k(&ops, &v, 0.05, 0.35);
        assert_close(k, 1.4169, 1e-3, "binding K");
        // unbounded budget never scales
        assert_eq!(compute_k(&ops, &v, 0.05, 1e12), 1.0);
    }

    #[test]
    fn solve_reference_instance() {
        let inst = reference_instance();
        let sol = solve(&inst).unwrap();
        assert_close(sol.p2_value, 0.012827, 1e-5, "objective at eps=0.05");
        assert_eq!(sol.k_factor, 1.0);
        assert!(sol.tightness);
        assert!(!sol.used_second);
        // beyond the local-validity radius the data conditional is signed
        // and no exact channel realizes the design
        assert!(!sol.is_realizable());
        assert!(sol.p_y_given_x.is_none());
        assert!(sol.joint.is_none());
        let inf = sol.infeasibility.unwrap();
        assert!(inf.value < 0.0);
        // one of the two columns matches the quoted reconstruction, the
        // other is its signed partner
        let col_ok: Vec<usize> = (0..2)
            .filter(|&y| (0..2).all(|x| sol.p_x_given_y.get(x, y) >= 0.0))
            .collect();
        assert_eq!(col_ok.len(), 1);
        let y = col_ok[0];
        assert_close(sol.p_x_given_y.get(0, y), 0.763, 1e-2, "p_x_given_y[0]");
        assert_close(sol.p_x_given_y.get(1, y), 0.237, 1e-2, "p_x_given_y[1]");
    }

    #[test]
    fn solve_within_validity_radius_is_realizable() {
        let inst = reference_instance().with_eps(0.02).unwrap();
        let sol = solve(&inst).unwrap();
        assert!(sol.is_realizable());
        let pyx = sol.p_y_given_x.as_ref().unwrap();
        let joint = sol.joint.as_ref().unwrap();

        // fairness is an exact identity: chi2 = (eps/K)^2 for both y
        for y in 0..2 {
            let cond = Pmf::new(sol.p_s_given_y.column(y)).unwrap();
            let c2 = chi_squared(&cond, inst.p_s()).unwrap();
            assert_close(c2, (0.02 / sol.k_factor).powi(2), 1e-10, "chi2 identity");
        }
        // recomposed data marginal
        for x in 0..2 {
            let recomposed: f64 = (0..2)
                .map(|y| sol.design.p_y().get(y) * sol.p_x_given_y.get(x, y))
                .sum();
            assert_close(
                recomposed,
                inst.p_x().get(x),
                1e-10,
                "marginal recomposition",
            );
        }
        // Markov consistency through the data variable
        let x_channel = Channel::new(sol.p_x_given_y.clone()).unwrap();
        let s_via_x = compose(inst.p_s_given_x(), &x_channel).unwrap();
        assert!(s_via_x.matrix().max_abs_diff(sol.p_s_given_y.matrix()) < 1e-10);
        let t_via_x = compose(inst.p_t_given_x(), &x_channel).unwrap();
        assert!(t_via_x.matrix().max_abs_diff(sol.p_t_given_y.matrix()) < 1e-10);

        // bayes inversion round-trip: recompose p_x_given_y from p_y_given_x
        for x in 0..2 {
            let px = inst.p_x().get(x);
            for y in 0..2 {
                let back = pyx.get(y, x) * px / sol.design.p_y().get(y);
                assert_close(back, sol.p_x_given_y.get(x, y), 1e-12, "bayes round trip");
            }
        }
        // joint marginals agree with the instance
        let marg_x = joint.marginal(2);
        for x in 0..2 {
            assert_close(marg_x.get(x), inst.p_x().get(x), 1e-12, "joint x-marginal");
        }
        let ty = joint.pair_marginal(1, 3);
        // joint (t,y) marginal matches p_t_given_y * p_y
        for t in 0..2 {
            for y in 0..2 {
                assert_close(
                    ty.get(t, y),
                    sol.p_t_given_y.get(t, y) * 0.5,
                    1e-12,
                    "joint (t,y)",
                );
            }
        }
    }

    #[test]
    fn solve_zero_eps_is_degenerate() {
        let inst = reference_instance().with_eps(0.0).unwrap();
        let sol = solve(&inst).unwrap();
        assert_eq!(sol.p2_value, 0.0);
        assert!(sol.is_realizable());
        for y in 0..2 {
            for i in 0..2 {
                assert_close(
                    sol.p_s_given_y.get(i, y),
                    inst.p_s().get(i),
                    1e-15,
                    "conditional equals marginal",
                );
            }
        }
    }

    #[test]
    fn sign_invariance_of_the_direction() {
        // replacing v by -v swaps the two representation labels and leaves
        // the objective, K, and recomposed marginals unchanged
        let inst = reference_instance().with_eps(0.015).unwrap();
        let ops = build_operators(&inst).unwrap();
        let spec = SpectralData::from_operator(&ops.w_ty, &inst.p_s().sqrt_entries()).unwrap();
        let (_, v, _) = select_direction(&spec, SIGMA_TIE_TOL).unwrap();
        let flipped: Vec<f64> = v.iter().map(|x| -x).collect();
        let k_a = compute_k(&ops, &v, inst.eps(), inst.rate());
        let k_b = compute_k(&ops, &flipped, inst.eps(), inst.rate());
        assert_eq!(k_a, k_b);
        let design_a = PerturbationDesign::new(
            Pmf::uniform(2),
            vec![v.clone(), flipped.clone()],
            inst.p_s(),
        )
        .unwrap();
        let design_b =
            PerturbationDesign::new(Pmf::uniform(2), vec![flipped, v], inst.p_s()).unwrap();
        let p2_a = approx_mi_ty(&ops, &design_a, inst.eps()).unwrap();
        let p2_b = approx_mi_ty(&ops, &design_b, inst.eps()).unwrap();
        assert_eq!(p2_a, p2_b);
    }

    #[test]
    fn low_rate_bound_matches_solve() {
        let base = reference_instance(); // eps = 0.05
        let frozen = 0.35 * 3.2034 * 3.2034 / 562.1029; // = 0.006390 to 4 s.f.
        let inst = base.with_rate(0.35).unwrap();
        let bound = low_rate_bound(&inst).unwrap();
        assert_close(bound, frozen, 1e-5, "low-rate bound at r=0.35");
        let sol = solve(&inst).unwrap();
        assert_close(bound, sol.p2_value, 1e-12, "bound equals solve");
        // linear in the rate
        let double = low_rate_bound(&base.with_rate(0.7).unwrap()).unwrap();
        assert_close(double, 2.0 * bound, 1e-12, "linearity");
        // outside the regime: r = 0.75 > 0.7026
        assert!(matches!(low_rate_bound(&base), Err(Error::Domain(_))));
        // boundary continuity: at the regime edge the bound equals the
        // unscaled objective
        let ops = build_operators(&base).unwrap();
        let spec = SpectralData::from_operator(&ops.w_ty, &base.p_s().sqrt_entries()).unwrap();
        let (sigma, v, _) = select_direction(&spec, SIGMA_TIE_TOL).unwrap();
        let img = ops.w_xy.matvec(&v).unwrap();
        let threshold = 0.5 * 0.05 * 0.05 * dot(&img, &img);
        let at_edge = low_rate_bound(&base.with_rate(threshold).unwrap()).unwrap();
        assert_close(
            at_edge,
            0.5 * 0.05 * 0.05 * sigma * sigma,
            1e-12,
            "boundary continuity",
        );
    }

    #[test]
    fn ternary_instance_end_to_end() {
        // |S| = 3: the binary construction is still emitted, marked as a
        // lower bound rather than tight
        let p_x = Pmf::new(vec![0.2, 0.5, 0.3]).unwrap();
        let p_s_given_x = Channel::from_columns(&[
            vec![0.6, 0.25, 0.15],
            vec![0.2, 0.55, 0.25],
            vec![0.25, 0.2, 0.55],
        ])
        .unwrap();
        let p_t_given_x = Channel::from_columns(&[
            vec![0.5, 0.3, 0.2],
            vec![0.25, 0.45, 0.3],
            vec![0.3, 0.25, 0.45],
        ])
        .unwrap();
        let probe = ProblemInstance::new(
            p_x.clone(),
            p_s_given_x.clone(),
            p_t_given_x.clone(),
            0.01,
            0.5,
        )
        .unwrap();
        let ops = build_operators(&probe).unwrap();
        let eps = 0.4 * ops.c1.min(ops.c2);
        let inst = probe.with_eps(eps).unwrap();
        let sol = solve(&inst).unwrap();
        assert!(!sol.tightness);
        assert!(sol.is_realizable(), "inside the validity radius");
        assert!(sol.sigma > 0.0);

        // reconstruction identities carry over to the ternary case
        for y in 0..2 {
            let cond = Pmf::new(sol.p_s_given_y.column(y)).unwrap();
            let c2 = chi_squared(&cond, inst.p_s()).unwrap();
            assert_close(c2, (eps / sol.k_factor).powi(2), 1e-10, "chi2 identity");
        }
        let x_channel = Channel::new(sol.p_x_given_y.clone()).unwrap();
        let s_via_x = compose(inst.p_s_given_x(), &x_channel).unwrap();
        assert!(s_via_x.matrix().max_abs_diff(sol.p_s_given_y.matrix()) < 1e-10);
        for x in 0..3 {
            let recomposed: f64 = (0..2).map(|y| 0.5 * sol.p_x_given_y.get(x, y)).sum();
            assert_close(
                recomposed,
                inst.p_x().get(x),
                1e-10,
                "marginal recomposition",
            );
        }
        let joint = sol.joint.as_ref().unwrap();
        assert_eq!(joint.dims(), [3, 3, 3, 2]);
        let marg_t = joint.marginal(1);
        for t in 0..3 {
            assert_close(marg_t.get(t), inst.p_t().get(t), 1e-12, "joint t-marginal");
        }

        // the emitted value is a certified lower bound: sampling more
        // feasible directions never drops below it, and with a loose rate
        // the selected direction is the global maximizer of the surrogate
        let oracle = crate::oracle::quadratic_oracle(&ops, eps, inst.rate(), 5000).unwrap();
        assert!(
            oracle <= sol.p2_value + 1e-12,
            "selected direction is optimal"
        );
        assert!(
            oracle >= sol.p2_value * (1.0 - 1e-3),
            "sampled maximum should approach the bound: {oracle} vs {}",
            sol.p2_value
        );
    }

    #[test]
    fn rate_feasibility_of_returned_design() {
        use crate::geometry::approx_mi_xy;
        for rate in [0.1, 0.2, 0.35, 0.5, 0.75] {
            let inst = reference_instance().with_rate(rate).unwrap();
            let sol = solve(&inst).unwrap();
            let ops = build_operators(&inst).unwrap();
            let used = approx_mi_xy(&ops, &sol.design, inst.eps()).unwrap();
            assert!(
                used <= rate + 1e-10,
                "rate budget violated at r={rate}: {used}"
            );
        }
    }
}
