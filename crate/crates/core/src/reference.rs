//! The bundled reference instance and its known-good constants.
//!
//! `verify_golden_values` recomputes every constant from scratch and reports
//! pass/fail per check. Golden checks hold only for the bundled instance;
//! invariant checks hold for any valid instance and are marked as such. One
//! check is special: the tabulated reference value for entry (2,1) of the
//! data-side operator carries the opposite sign from what the defining
//! product yields. The spectral identity `W sqrt(p_s) = sqrt(p_x)` (unit
//! norm) holds only for the computed positive sign, so the magnitude is
//! compared and the sign difference is reported as an expected deviation.

use crate::dist::{entropy, Channel, LogBase, Pmf};
use crate::error::Result;
use crate::geometry::{build_operators, ProblemInstance};
use crate::matrix::{dot, norm2};
use crate::svd::svd_small;

/// The instance shipped at `instances/reference.toml`, constructed directly.
pub fn reference_instance() -> ProblemInstance {
    let p_x = Pmf::new(vec![0.25, 0.75]).expect("valid marginal");
    let p_s_given_x =
        Channel::from_columns(&[vec![0.275, 0.725], vec![0.32, 0.68]]).expect("valid channel");
    let p_t_given_x =
        Channel::from_columns(&[vec![0.25, 0.75], vec![0.4, 0.6]]).expect("valid channel");
    ProblemInstance::new(p_x, p_s_given_x, p_t_given_x, 0.05, 0.75).expect("valid instance")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckKind {
    /// Constant specific to the reference instance.
    Golden,
    /// Holds for every valid instance.
    Invariant,
    /// Known sign difference against the tabulated value, adjudicated by the
    /// spectral invariant; counted as a pass.
    ExpectedDeviation,
}

#[derive(Debug, Clone)]
pub struct GoldenCheck {
    pub name: &'static str,
    pub kind: CheckKind,
    pub passed: bool,
    pub detail: String,
}

fn check(
    out: &mut Vec<GoldenCheck>,
    name: &'static str,
    kind: CheckKind,
    passed: bool,
    detail: String,
) {
    out.push(GoldenCheck {
        name,
        kind,
        passed,
        detail,
    });
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

/// Runs every golden-constant and invariant check against an instance.
pub fn verify_golden_values(inst: &ProblemInstance) -> Result<Vec<GoldenCheck>> {
    let mut out = Vec::new();
    let ops = build_operators(inst)?;

    // marginals
    let p_s = inst.p_s();
    let p_t = inst.p_t();
    check(
        &mut out,
        "p_s",
        CheckKind::Golden,
        close(p_s.get(0), 0.3088, 1e-3) && close(p_s.get(1), 0.6913, 1e-3),
        format!("[{:.4}, {:.4}] vs [0.3088, 0.6913]", p_s.get(0), p_s.get(1)),
    );
    check(
        &mut out,
        "p_t",
        CheckKind::Golden,
        close(p_t.get(0), 0.3625, 1e-3) && close(p_t.get(1), 0.6375, 1e-3),
        format!("[{:.4}, {:.4}] vs [0.3625, 0.6375]", p_t.get(0), p_t.get(1)),
    );

    // data entropy in bits
    let h_bits = entropy(inst.p_x(), LogBase::Bits);
    check(
        &mut out,
        "h_x_bits",
        CheckKind::Golden,
        close(h_bits, 0.8113, 1e-4),
        format!("{h_bits:.6} vs 0.8113"),
    );

    // task-side operator entries
    let expected_ty = [[2.4610, -0.9206], [-1.1599, 1.7355]];
    let mut ok = true;
    for i in 0..2.min(ops.w_ty.rows()) {
        for j in 0..2.min(ops.w_ty.cols()) {
            ok &= close(ops.w_ty.get(i, j), expected_ty[i][j], 1e-3);
        }
    }
    check(
        &mut out,
        "w_ty_entries",
        CheckKind::Golden,
        ok && ops.w_ty.rows() == 2,
        format!(
            "[[{:.4}, {:.4}], [{:.4}, {:.4}]]",
            ops.w_ty.get(0, 0),
            ops.w_ty.get(0, 1),
            ops.w_ty.get(1, 0),
            ops.w_ty.get(1, 1)
        ),
    );

    // data-side operator magnitudes
    let expected_xy_abs = [[16.7931, 11.8246], [10.3371, 5.8669]];
    let mut ok = true;
    for i in 0..2.min(ops.w_xy.rows()) {
        for j in 0..2.min(ops.w_xy.cols()) {
            ok &= close(ops.w_xy.get(i, j).abs(), expected_xy_abs[i][j], 1e-3);
        }
    }
    check(
        &mut out,
        "w_xy_magnitudes",
        CheckKind::Golden,
        ok && ops.w_xy.rows() == 2,
        format!(
            "|entries| = [[{:.4}, {:.4}], [{:.4}, {:.4}]]",
            ops.w_xy.get(0, 0).abs(),
            ops.w_xy.get(0, 1).abs(),
            ops.w_xy.get(1, 0).abs(),
            ops.w_xy.get(1, 1).abs()
        ),
    );

    // (2,1) sign: computed positive, tabulated negative; the invariant below
    // adjudicates in favor of positive
    let sign_positive = ops.w_xy.rows() == 2 && ops.w_xy.get(1, 0) > 0.0;
    check(
        &mut out,
        "w_xy_sign_2_1",
        CheckKind::ExpectedDeviation,
        sign_positive,
        format!(
            "computed {:+.4}; tabulated reference prints the opposite sign, \
             the unit-image invariant requires +",
            ops.w_xy.get(1, 0)
        ),
    );

    // invariants: (W^T W) sqrt(p_s) = sqrt(p_s) for both operators
    let sq = inst.p_s().sqrt_entries();
    for (name, w) in [
        ("unit_direction_w_ty", &ops.w_ty),
        ("unit_direction_w_xy", &ops.w_xy),
    ] {
        let img = w.matvec(&sq)?;
        let back = w.transpose().matvec(&img)?;
        let err = back
            .iter()
            .zip(sq.iter())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        check(
            &mut out,
            if name == "unit_direction_w_ty" {
                "unit_direction_w_ty"
            } else {
                "unit_direction_w_xy"
            },
            CheckKind::Invariant,
            err < 1e-9,
            format!("max |(W^T W) sqrt(p_s) - sqrt(p_s)| = {err:.3e}"),
        );
    }

    // spectra
    let svd_ty = svd_small(&ops.w_ty)?;
    check(
        &mut out,
        "w_ty_singular_values",
        CheckKind::Golden,
        close(svd_ty.value(0), 3.2034, 1e-3) && close(svd_ty.value(1), 1.0, 1e-3),
        format!(
            "({:.4}, {:.4}) vs (3.2034, 1)",
            svd_ty.value(0),
            svd_ty.value(1)
        ),
    );
    let svd_xy = svd_small(&ops.w_xy)?;
    check(
        &mut out,
        "w_xy_singular_values",
        CheckKind::Golden,
        close(svd_xy.value(0), 23.7087, 1e-3) && close(svd_xy.value(1), 1.0, 1e-3),
        format!(
            "({:.4}, {:.4}) vs (23.7087, 1)",
            svd_xy.value(0),
            svd_xy.value(1)
        ),
    );

    // top right singular vectors, up to sign
    let vector_matches = |v: &[f64], expected: [f64; 2]| {
        let direct = close(v[0], expected[0], 1e-3) && close(v[1], expected[1], 1e-3);
        let flipped = close(-v[0], expected[0], 1e-3) && close(-v[1], expected[1], 1e-3);
        direct || flipped
    };
    let v_ty = svd_ty.right_vector(0);
    check(
        &mut out,
        "w_ty_top_vector",
        CheckKind::Golden,
        v_ty.len() == 2 && vector_matches(&v_ty, [-0.8314, 0.5557]),
        format!("[{:.4}, {:.4}] vs +/-[-0.8314, 0.5557]", v_ty[0], v_ty[1]),
    );
    let v_xy = svd_xy.right_vector(0);
    check(
        &mut out,
        "w_xy_top_vector",
        CheckKind::Golden,
        v_xy.len() == 2 && vector_matches(&v_xy, [0.8314, -0.5557]),
        format!("[{:.4}, {:.4}] vs +/-[0.8314, -0.5557]", v_xy[0], v_xy[1]),
    );
    let v2_ty = svd_ty.right_vector(1);
    check(
        &mut out,
        "w_ty_second_vector",
        CheckKind::Golden,
        v2_ty.len() == 2 && vector_matches(&v2_ty, [0.5557, 0.8314]),
        format!("[{:.4}, {:.4}] vs +/-[0.5557, 0.8314]", v2_ty[0], v2_ty[1]),
    );

    // quadratic-form constants at the top direction
    let img = ops.w_xy.matvec(&v_ty)?;
    let gain = dot(&img, &img);
    check(
        &mut out,
        "rate_gain",
        CheckKind::Golden,
        close(gain, 562.1029, 0.05),
        format!("{gain:.4} vs 562.1029"),
    );
    let demand = 0.5 * 0.05 * 0.05 * gain;
    check(
        &mut out,
        "rate_demand_at_eps_0_05",
        CheckKind::Golden,
        close(demand, 0.7026, 1e-3),
        format!("{demand:.6} vs 0.7026"),
    );
    let p2 = 0.5 * 0.05 * 0.05 * svd_ty.value(0) * svd_ty.value(0);
    check(
        &mut out,
        "objective_at_eps_0_05",
        CheckKind::Golden,
        close(p2, 0.5 * 0.05 * 0.05 * 3.2034 * 3.2034, 1e-5),
        format!("{p2:.8} vs 0.01282722"),
    );
    let k = (demand / inst.rate()).sqrt().max(1.0);
    check(
        &mut out,
        "k_factor",
        CheckKind::Golden,
        close(k, 1.0, 1e-12) == (inst.rate() >= demand),
        format!("K = {k:.6} at rate {}", inst.rate()),
    );

    // unit norm of the mapped direction (adjudicates the sign check)
    let unit_img = ops.w_xy.matvec(&sq)?;
    check(
        &mut out,
        "unit_image_norm",
        CheckKind::Invariant,
        close(norm2(&unit_img), 1.0, 1e-9),
        format!("|w_xy sqrt(p_s)| = {:.12}", norm2(&unit_img)),
    );

    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_instance_passes_every_check() {
        let inst = reference_instance();
        let checks = verify_golden_values(&inst).unwrap();
        assert!(checks.len() >= 14);
        for c in &checks {
            assert!(c.passed, "{} failed: {}", c.name, c.detail);
        }
    }

    #[test]
    fn perturbed_instance_fails_golden_but_keeps_invariants() {
        let p_x = Pmf::new(vec![0.3, 0.7]).unwrap();
        let inst = ProblemInstance::new(
            p_x,
            reference_instance().p_s_given_x().clone(),
            reference_instance().p_t_given_x().clone(),
            0.05,
            0.75,
        )
        .unwrap();
        let checks = verify_golden_values(&inst).unwrap();
        let golden_failures = checks
            .iter()
            .filter(|c| c.kind == CheckKind::Golden && !c.passed)
            .count();
        assert!(golden_failures > 0, "expected golden mismatches");
        for c in checks.iter().filter(|c| c.kind == CheckKind::Invariant) {
            assert!(c.passed, "invariant {} must hold: {}", c.name, c.detail);
        }
    }
}
