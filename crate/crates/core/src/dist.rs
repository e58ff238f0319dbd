//! Finite discrete probability foundation: pmfs, column-stochastic channels,
//! four-way joint tables, and the exact information measures used as ground
//! truth by everything else.
//!
//! Validation is strict: inputs that do not normalize are rejected,
//! never silently renormalized. The only concession to floating point is that
//! negative dust above `-1e-12` is clamped to zero.

use crate::error::{Error, Result};
use crate::matrix::Matrix;

const PMF_SUM_TOL: f64 = 1e-12;
const JOINT_SUM_TOL: f64 = 1e-10;
const NEG_DUST: f64 = -1e-12;

/// Logarithm base for entropies and mutual informations. All second-order
/// (Taylor-derived) quantities elsewhere in the crate are natural-log only.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogBase {
    Nats,
    Bits,
}

impl LogBase {
    /// Multiplier converting a natural-log quantity into this base.
    #[inline]
    pub fn from_nats(self) -> f64 {
        match self {
            LogBase::Nats => 1.0,
            LogBase::Bits => 1.0 / std::f64::consts::LN_2,
        }
    }
}

/// Probability mass function over a finite alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf {
    probs: Vec<f64>,
}

impl Pmf {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidPmf("empty alphabet".into()));
        }
        let mut probs = probs;
        for (i, p) in probs.iter_mut().enumerate() {
            if !p.is_finite() {
                return Err(Error::InvalidPmf(format!("entry {i} is not finite")));
            }
            if *p < 0.0 {
                if *p < NEG_DUST {
                    return Err(Error::InvalidPmf(format!("entry {i} = {p:.6e} < 0")));
                }
                *p = 0.0;
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > PMF_SUM_TOL {
            return Err(Error::InvalidPmf(format!(
                "entries sum to {sum:.15} (must be 1 within {PMF_SUM_TOL:e}); renormalization is refused"
            )));
        }
        Ok(Self { probs })
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            probs: vec![1.0 / n as f64; n],
        }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize) -> f64 {
        self.probs[i]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }

    pub fn min(&self) -> f64 {
        self.probs.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.probs.iter().copied().fold(0.0, f64::max)
    }

    /// Entrywise square root, as a plain vector.
    pub fn sqrt_entries(&self) -> Vec<f64> {
        self.probs.iter().map(|p| p.sqrt()).collect()
    }
}

/// Column-stochastic conditional distribution matrix: column j is the pmf of
/// the output given input value j.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    matrix: Matrix,
}

impl Channel {
    pub fn new(matrix: Matrix) -> Result<Self> {
        let mut matrix = matrix;
        for i in 0..matrix.rows() {
            for j in 0..matrix.cols() {
                let v = matrix.get(i, j);
                if !v.is_finite() {
                    return Err(Error::InvalidChannel(format!(
                        "entry ({i},{j}) is not finite"
                    )));
                }
                if v < 0.0 {
                    if v < NEG_DUST {
                        return Err(Error::InvalidChannel(format!(
                            "entry ({i},{j}) = {v:.6e} < 0"
                        )));
                    }
                    matrix.set(i, j, 0.0);
                }
            }
        }
        for j in 0..matrix.cols() {
            let sum: f64 = (0..matrix.rows()).map(|i| matrix.get(i, j)).sum();
            if (sum - 1.0).abs() > PMF_SUM_TOL {
                return Err(Error::InvalidChannel(format!(
                    "column {j} sums to {sum:.15} (must be 1 within {PMF_SUM_TOL:e})"
                )));
            }
        }
        Ok(Self { matrix })
    }

    /// Columns are conditional pmfs: `columns[j]` is the output pmf given
    /// input value j.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        Self::new(Matrix::from_columns(columns)?)
    }

    pub fn identity(n: usize) -> Self {
        Self {
            matrix: Matrix::identity(n),
        }
    }

    pub fn out_size(&self) -> usize {
        self.matrix.rows()
    }

    pub fn in_size(&self) -> usize {
        self.matrix.cols()
    }

    #[inline]
    pub fn get(&self, out: usize, input: usize) -> f64 {
        self.matrix.get(out, input)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.matrix.column(j)
    }

    /// Pushes an input pmf through the channel: output = M * p.
    pub fn apply(&self, p: &Pmf) -> Result<Pmf> {
        if p.len() != self.in_size() {
            return Err(Error::DimensionMismatch(format!(
                "channel expects input size {}, got {}",
                self.in_size(),
                p.len()
            )));
        }
        Pmf::new(self.matrix.matvec(p.as_slice())?)
    }
}

/// Joint distribution over (s, t, x, y), stored as a flat table.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDist {
    dims: [usize; 4],
    table: Vec<f64>,
}

impl JointDist {
    pub fn new(dims: [usize; 4], table: Vec<f64>) -> Result<Self> {
        let expected: usize = dims.iter().product();
        if expected == 0 {
            return Err(Error::InvalidJoint("empty alphabet".into()));
        }
        if table.len() != expected {
            return Err(Error::InvalidJoint(format!(
                "expected {expected} entries for dims {dims:?}, got {}",
                table.len()
            )));
        }
        let mut table = table;
        for (i, v) in table.iter_mut().enumerate() {
            if !v.is_finite() {
                return Err(Error::InvalidJoint(format!("entry {i} is not finite")));
            }
            if *v < 0.0 {
                if *v < NEG_DUST {
                    return Err(Error::InvalidJoint(format!("entry {i} = {v:.6e} < 0")));
                }
                *v = 0.0;
            }
        }
        let sum: f64 = table.iter().sum();
        if (sum - 1.0).abs() > JOINT_SUM_TOL {
            return Err(Error::InvalidJoint(format!(
                "table sums to {sum:.15} (must be 1 within {JOINT_SUM_TOL:e})"
            )));
        }
        Ok(Self { dims, table })
    }

    pub fn dims(&self) -> [usize; 4] {
        self.dims
    }

    #[inline]
    fn index(&self, s: usize, t: usize, x: usize, y: usize) -> usize {
        ((s * self.dims[1] + t) * self.dims[2] + x) * self.dims[3] + y
    }

    #[inline]
    pub fn get(&self, s: usize, t: usize, x: usize, y: usize) -> f64 {
        self.table[self.index(s, t, x, y)]
    }

    /// Marginal over the selected axis (0=s, 1=t, 2=x, 3=y).
    pub fn marginal(&self, axis: usize) -> Pmf {
        let n = self.dims[axis];
        let mut out = vec![0.0; n];
        for s in 0..self.dims[0] {
            for t in 0..self.dims[1] {
                for x in 0..self.dims[2] {
                    for y in 0..self.dims[3] {
                        let idx = [s, t, x, y][axis];
                        out[idx] += self.get(s, t, x, y);
                    }
                }
            }
        }
        Pmf { probs: out }
    }

    /// Pairwise marginal as a matrix indexed (axis_a, axis_b).
    pub fn pair_marginal(&self, axis_a: usize, axis_b: usize) -> Matrix {
        let mut out = Matrix::zeros(self.dims[axis_a], self.dims[axis_b]);
        for s in 0..self.dims[0] {
            for t in 0..self.dims[1] {
                for x in 0..self.dims[2] {
                    for y in 0..self.dims[3] {
                        let coords = [s, t, x, y];
                        let (a, b) = (coords[axis_a], coords[axis_b]);
                        out.set(a, b, out.get(a, b) + self.get(s, t, x, y));
                    }
                }
            }
        }
        out
    }
}

/// Shannon entropy in the requested base; 0 log 0 is treated as 0.
pub fn entropy(p: &Pmf, base: LogBase) -> f64 {
    let nats: f64 = p
        .as_slice()
        .iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| -x * x.ln())
        .sum();
    nats * base.from_nats()
}

/// Exact mutual information of a joint table (rows = first variable,
/// columns = second). No approximation.
pub fn mutual_information(joint: &Matrix, base: LogBase) -> Result<f64> {
    let mut sum = 0.0;
    for i in 0..joint.rows() {
        for j in 0..joint.cols() {
            let v = joint.get(i, j);
            if v < NEG_DUST {
                return Err(Error::Validation(format!(
                    "joint entry ({i},{j}) = {v:.6e} < 0"
                )));
            }
            sum += v.max(0.0);
        }
    }
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::Validation(format!("joint sums to {sum:.15}, not 1")));
    }
    let mut p_row = vec![0.0; joint.rows()];
    let mut p_col = vec![0.0; joint.cols()];
    for i in 0..joint.rows() {
        for j in 0..joint.cols() {
            let v = joint.get(i, j).max(0.0);
            p_row[i] += v;
            p_col[j] += v;
        }
    }
    let mut mi = 0.0;
    for i in 0..joint.rows() {
        for j in 0..joint.cols() {
            let v = joint.get(i, j);
            if v > 0.0 {
                mi += v * (v / (p_row[i] * p_col[j])).ln();
            }
        }
    }
    Ok(mi.max(0.0) * base.from_nats())
}

/// Kullback-Leibler divergence D(p || q). Requires support(p) within
/// support(q).
pub fn kl_divergence(p: &Pmf, q: &Pmf, base: LogBase) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch(format!(
            "pmf sizes differ: {} vs {}",
            p.len(),
            q.len()
        )));
    }
    let mut nats = 0.0;
    for i in 0..p.len() {
        let pi = p.get(i);
        if pi == 0.0 {
            continue;
        }
        let qi = q.get(i);
        if qi == 0.0 {
            return Err(Error::Support(format!(
                "q has zero mass at index {i} where p = {pi:.6e} > 0"
            )));
        }
        nats += pi * (pi / qi).ln();
    }
    Ok(nats.max(0.0) * base.from_nats())
}

/// Chi-squared divergence sum_i (p_i - q_i)^2 / q_i. Requires q strictly
/// positive.
pub fn chi_squared(p: &Pmf, q: &Pmf) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch(format!(
            "pmf sizes differ: {} vs {}",
            p.len(),
            q.len()
        )));
    }
    let mut acc = 0.0;
    for i in 0..p.len() {
        let qi = q.get(i);
        if qi <= 0.0 {
            return Err(Error::Support(format!("q has zero mass at index {i}")));
        }
        let d = p.get(i) - qi;
        acc += d * d / qi;
    }
    Ok(acc)
}

/// Largest disagreement between output distributions across input values:
/// max over (out, in1, in2) of |P(out|in1) - P(out|in2)|. Diagnostic only.
pub fn parity_gap(p_y_given_s: &Channel) -> f64 {
    let mut worst = 0.0f64;
    for y in 0..p_y_given_s.out_size() {
        let row = p_y_given_s.matrix().row(y);
        let lo = row.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        worst = worst.max(hi - lo);
    }
    worst
}

/// Channel composition: the channel A<-B applied after B<-C, i.e. the matrix
/// product. Output is column-stochastic whenever the inputs are.
pub fn compose(channel_ab: &Channel, p_b_given_c: &Channel) -> Result<Channel> {
    if channel_ab.in_size() != p_b_given_c.out_size() {
        return Err(Error::DimensionMismatch(format!(
            "cannot compose {}x{} with {}x{}",
            channel_ab.out_size(),
            channel_ab.in_size(),
            p_b_given_c.out_size(),
            p_b_given_c.in_size()
        )));
    }
    Channel::new(channel_ab.matrix().mul(p_b_given_c.matrix())?)
}

/// Bayes inversion: from P(X|Y) and the marginals, produce P(Y|X).
///
/// The supplied `p_x` must be consistent with `sum_y P(X|Y=y) P(Y=y)` within
/// 1e-9. The actual division uses the recomposed marginal so the output is
/// exactly column-stochastic.
pub fn bayes_invert(p_x_given_y: &Channel, p_y: &Pmf, p_x: &Pmf) -> Result<Channel> {
    let nx = p_x_given_y.out_size();
    let ny = p_x_given_y.in_size();
    if p_y.len() != ny || p_x.len() != nx {
        return Err(Error::DimensionMismatch(
            "marginal sizes do not match the channel".into(),
        ));
    }
    let mut recomposed = vec![0.0; nx];
    for x in 0..nx {
        for y in 0..ny {
            recomposed[x] += p_x_given_y.get(x, y) * p_y.get(y);
        }
    }
    for x in 0..nx {
        if p_x.get(x) == 0.0 {
            return Err(Error::Support(format!("p_x has zero mass at index {x}")));
        }
        if (recomposed[x] - p_x.get(x)).abs() > 1e-9 {
            return Err(Error::Consistency(format!(
                "recomposed marginal at x={x} is {:.12}, expected {:.12}",
                recomposed[x],
                p_x.get(x)
            )));
        }
    }
    let mut out = Matrix::zeros(ny, nx);
    for x in 0..nx {
        for y in 0..ny {
            out.set(y, x, p_x_given_y.get(x, y) * p_y.get(y) / recomposed[x]);
        }
    }
    Channel::new(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn assert_close(a: f64, b: f64, tol: f64, what: &str) {
        assert!(
            (a - b).abs() <= tol,
            "{what}: {a} vs {b} (diff {:.3e}, tol {tol:e})",
            (a - b).abs()
        );
    }

    #[test]
    fn pmf_validation() {
        assert!(Pmf::new(vec![0.25, 0.75]).is_ok());
        assert!(Pmf::new(vec![0.25, 0.74]).is_err());
        assert!(Pmf::new(vec![-0.1, 1.1]).is_err());
        assert!(Pmf::new(vec![]).is_err());
        // negative dust is tolerated and clamped
        let p = Pmf::new(vec![1.0 + 1e-13, -1e-13]).unwrap();
        assert_eq!(p.get(1), 0.0);
    }

    #[test]
    fn channel_validation() {
        assert!(Channel::from_columns(&[vec![0.3, 0.7], vec![0.5, 0.5]]).is_ok());
        assert!(Channel::from_columns(&[vec![0.3, 0.6], vec![0.5, 0.5]]).is_err());
        assert!(Channel::from_columns(&[vec![1.2, -0.2], vec![0.5, 0.5]]).is_err());
    }

    #[test]
    fn entropy_golden() {
        // deterministic and uniform cases, plus the skewed binary marginal
        // whose entropy in bits is 0.8113 to four decimals
        let p = Pmf::new(vec![0.25, 0.75]).unwrap();
        assert_close(entropy(&p, LogBase::Bits), 0.8113, 1e-4, "H bits");
        let det = Pmf::new(vec![1.0, 0.0]).unwrap();
        assert_eq!(entropy(&det, LogBase::Bits), 0.0);
        assert_eq!(entropy(&det, LogBase::Nats), 0.0);
        let half = Pmf::new(vec![0.5, 0.5]).unwrap();
        assert_close(entropy(&half, LogBase::Bits), 1.0, 1e-15, "uniform");
    }

    #[test]
    fn mutual_information_product_and_diagonal() {
        // product joint -> 0
        let joint =
            Matrix::new(2, 2, vec![0.25 * 0.6, 0.25 * 0.4, 0.75 * 0.6, 0.75 * 0.4]).unwrap();
        assert!(mutual_information(&joint, LogBase::Nats).unwrap() < 1e-12);
        // diagonal joint -> H(X)
        let diag = Matrix::new(2, 2, vec![0.25, 0.0, 0.0, 0.75]).unwrap();
        assert_close(
            mutual_information(&diag, LogBase::Bits).unwrap(),
            0.8113,
            1e-4,
            "I(X;X) bits",
        );
        // non-normalized input rejected
        let bad = Matrix::new(2, 2, vec![0.5, 0.5, 0.5, 0.5]).unwrap();
        assert!(mutual_information(&bad, LogBase::Nats).is_err());
    }

    #[test]
    fn mi_of_identity_channel_equals_direct_sum() {
        // joint(t, x) built from the bundled conditional task channel and the
        // data marginal; identity representation keeps I(Y;T) = I(X;T)
        let p_x = [0.25, 0.75];
        let p_t_given_x = [[0.25, 0.4], [0.75, 0.6]]; // rows t, cols x
        let mut joint = Matrix::zeros(2, 2);
        for t in 0..2 {
            for x in 0..2 {
                joint.set(t, x, p_t_given_x[t][x] * p_x[x]);
            }
        }
        // independent oracle: direct summation
        let p_t = [
            joint.get(0, 0) + joint.get(0, 1),
            joint.get(1, 0) + joint.get(1, 1),
        ];
        let mut direct = 0.0;
        for t in 0..2 {
            for x in 0..2 {
                let v = joint.get(t, x);
                direct += v * (v / (p_t[t] * p_x[x])).ln();
            }
        }
        let mi = mutual_information(&joint, LogBase::Nats).unwrap();
        assert_close(mi, direct, 1e-15, "I(X;T) vs direct sum");
    }

    #[test]
    fn kl_golden_and_asymmetry() {
        let p = Pmf::new(vec![0.5, 0.5]).unwrap();
        let q = Pmf::new(vec![0.25, 0.75]).unwrap();
        // direct summation: 0.5 ln 2 + 0.5 ln(2/3)
        let expected = 0.5 * 2.0f64.ln() + 0.5 * (2.0f64 / 3.0).ln();
        assert_close(expected, 0.1438, 1e-4, "frozen value sanity");
        assert_close(
            kl_divergence(&p, &q, LogBase::Nats).unwrap(),
            expected,
            1e-15,
            "KL(p||q)",
        );
        assert_eq!(kl_divergence(&p, &p, LogBase::Nats).unwrap(), 0.0);
        // asymmetry witness
        let forward = kl_divergence(&p, &q, LogBase::Nats).unwrap();
        let backward = kl_divergence(&q, &p, LogBase::Nats).unwrap();
        assert!((forward - backward).abs() > 1e-3);
        // support violation
        let spiked = Pmf::new(vec![1.0, 0.0]).unwrap();
        assert!(matches!(
            kl_divergence(&p, &spiked, LogBase::Nats),
            Err(Error::Support(_))
        ));
    }

    #[test]
    fn chi_squared_golden() {
        let p = Pmf::new(vec![0.5, 0.5]).unwrap();
        let q = Pmf::new(vec![0.25, 0.75]).unwrap();
        assert_eq!(chi_squared(&q, &q).unwrap(), 0.0);
        // direct summation: 0.0625/0.25 + 0.0625/0.75 = 1/3
        assert_close(chi_squared(&p, &q).unwrap(), 1.0 / 3.0, 1e-15, "chi2");
        let spiked = Pmf::new(vec![1.0, 0.0]).unwrap();
        assert!(chi_squared(&p, &spiked).is_err());
    }

    #[test]
    fn chi_squared_perturbation_identity() {
        // p = q + eps [sqrt(q)] l with l orthogonal to sqrt(q) and unit norm
        // gives chi2 = eps^2 exactly; q is the bundled sensitive marginal
        let q = Pmf::new(vec![0.30875, 0.69125]).unwrap();
        let sq = q.sqrt_entries();
        let l = [-sq[1], sq[0]]; // unit: sq[0]^2 + sq[1]^2 = 1
        let eps = 0.01;
        let p = Pmf::new(vec![
            q.get(0) + eps * sq[0] * l[0],
            q.get(1) + eps * sq[1] * l[1],
        ])
        .unwrap();
        assert_close(chi_squared(&p, &q).unwrap(), 1e-4, 1e-12, "eps^2 identity");
    }

    #[test]
    fn chi_squared_differs_from_inside_normalization() {
        // The variant that divides inside the square, sum ((p-q)/q)^2, is a
        // different quantity; the perturbation identity above holds only for
        // the standard form implemented here.
        let q = Pmf::new(vec![0.30875, 0.69125]).unwrap();
        let p = Pmf::new(vec![0.2857, 0.7143]).unwrap();
        let standard = chi_squared(&p, &q).unwrap();
        let inside: f64 = (0..2)
            .map(|i| {
                let r = (p.get(i) - q.get(i)) / q.get(i);
                r * r
            })
            .sum();
        assert!((standard - inside).abs() > 1e-4);
    }

    #[test]
    fn parity_gap_cases() {
        let equal = Channel::from_columns(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        assert_eq!(parity_gap(&equal), 0.0);
        let det = Channel::from_columns(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(parity_gap(&det), 1.0);
        let mild = Channel::from_columns(&[vec![0.6, 0.4], vec![0.5, 0.5]]).unwrap();
        assert_close(parity_gap(&mild), 0.1, 1e-12, "mild gap");
    }

    #[test]
    fn compose_golden() {
        let c = Channel::from_columns(&[vec![0.275, 0.725], vec![0.32, 0.68]]).unwrap();
        let composed = compose(&Channel::identity(2), &c).unwrap();
        assert!(composed.matrix().max_abs_diff(c.matrix()) < 1e-15);

        let p_x = Pmf::new(vec![0.25, 0.75]).unwrap();
        let p_t_given_x = Channel::from_columns(&[vec![0.25, 0.75], vec![0.4, 0.6]]).unwrap();
        let p_t = p_t_given_x.apply(&p_x).unwrap();
        assert_close(p_t.get(0), 0.3625, 1e-12, "p_t[0]");
        assert_close(p_t.get(1), 0.6375, 1e-12, "p_t[1]");
        let p_s = c.apply(&p_x).unwrap();
        assert_close(p_s.get(0), 0.30875, 1e-12, "p_s[0]");
        assert_close(p_s.get(1), 0.69125, 1e-12, "p_s[1]");

        let tall = Channel::from_columns(&[vec![0.2, 0.3, 0.5]]).unwrap();
        assert!(compose(&c, &tall).is_err());
    }

    #[test]
    fn bayes_invert_cases() {
        let p_x = Pmf::new(vec![0.25, 0.75]).unwrap();
        // identity with consistent marginals
        let id = Channel::identity(2);
        let back = bayes_invert(&id, &p_x, &p_x).unwrap();
        assert!(back.matrix().max_abs_diff(Channel::identity(2).matrix()) < 1e-15);
        // uniform columns preserve independence: P(Y|X) columns equal P_Y
        let p_y = Pmf::new(vec![0.5, 0.5]).unwrap();
        let indep = Channel::from_columns(&[vec![0.25, 0.75], vec![0.25, 0.75]]).unwrap();
        let inv = bayes_invert(&indep, &p_y, &p_x).unwrap();
        for x in 0..2 {
            assert_close(inv.get(0, x), 0.5, 1e-15, "independent column");
        }
        // inconsistent marginal rejected
        let skew = Pmf::new(vec![0.5, 0.5]).unwrap();
        assert!(matches!(
            bayes_invert(&indep, &p_y, &skew),
            Err(Error::Consistency(_))
        ));
        // zero-mass data symbol rejected
        let zero = Pmf::new(vec![1.0, 0.0]).unwrap();
        assert!(matches!(
            bayes_invert(&id, &zero, &zero),
            Err(Error::Support(_))
        ));
    }

    #[test]
    fn joint_dist_marginals() {
        // S _|_ T | X product construction over binary alphabets
        let p_x = [0.25, 0.75];
        let ps = [[0.275, 0.32], [0.725, 0.68]];
        let pt = [[0.25, 0.4], [0.75, 0.6]];
        let pyx = [[0.9, 0.3], [0.1, 0.7]];
        let mut table = vec![0.0; 16];
        for s in 0..2 {
            for t in 0..2 {
                for x in 0..2 {
                    for y in 0..2 {
                        table[((s * 2 + t) * 2 + x) * 2 + y] =
                            ps[s][x] * pt[t][x] * p_x[x] * pyx[y][x];
                    }
                }
            }
        }
        let joint = JointDist::new([2, 2, 2, 2], table).unwrap();
        let ms = joint.marginal(0);
        assert_close(ms.get(0), 0.30875, 1e-12, "joint marginal s");
        let sx = joint.pair_marginal(0, 2);
        assert_close(sx.get(0, 1), 0.32 * 0.75, 1e-12, "joint pair (s,x)");
        // sum violation rejected
        assert!(JointDist::new([2, 2, 2, 2], vec![0.1; 16]).is_err());
    }

    proptest! {
        #[test]
        fn divergences_vanish_on_identical(raw in proptest::collection::vec(0.05f64..1.0, 2..6)) {
            let total: f64 = raw.iter().sum();
            let p = Pmf::new(raw.iter().map(|x| x / total).collect()).unwrap();
            prop_assert!(chi_squared(&p, &p).unwrap() == 0.0);
            prop_assert!(kl_divergence(&p, &p, LogBase::Nats).unwrap() == 0.0);
        }

        #[test]
        fn compose_produces_valid_pmf(
            raw_p in proptest::collection::vec(0.05f64..1.0, 3),
            raw_c in proptest::collection::vec(0.05f64..1.0, 9),
        ) {
            let total: f64 = raw_p.iter().sum();
            let p = Pmf::new(raw_p.iter().map(|x| x / total).collect()).unwrap();
            let cols: Vec<Vec<f64>> = raw_c
                .chunks(3)
                .map(|c| {
                    let s: f64 = c.iter().sum();
                    c.iter().map(|x| x / s).collect()
                })
                .collect();
            let ch = Channel::from_columns(&cols).unwrap();
            let out = ch.apply(&p).unwrap();
            let sum: f64 = out.as_slice().iter().sum();
            prop_assert!((sum - 1.0).abs() <= 1e-12);
            prop_assert!(out.as_slice().iter().all(|&v| v >= 0.0));
        }

        #[test]
        fn kl_chi2_second_order_consistency(
            raw_q in proptest::collection::vec(0.3f64..1.0, 2..4),
            raw_d in proptest::collection::vec(-1.0f64..1.0, 2..4),
        ) {
            prop_assume!(raw_q.len() == raw_d.len());
            let total: f64 = raw_q.iter().sum();
            let q: Vec<f64> = raw_q.iter().map(|x| x / total).collect();
            // center the perturbation and scale it to 1e-3
            let mean: f64 = raw_d.iter().sum::<f64>() / raw_d.len() as f64;
            let mut d: Vec<f64> = raw_d.iter().map(|x| x - mean).collect();
            let norm: f64 = d.iter().map(|x| x * x).sum::<f64>().sqrt();
            prop_assume!(norm > 1e-3);
            for v in &mut d {
                *v *= 1e-3 / norm;
            }
            let q_pmf = Pmf::new(q.clone()).unwrap();
            let p = Pmf::new(q.iter().zip(&d).map(|(a, b)| a + b).collect()).unwrap();
            let kl = kl_divergence(&p, &q_pmf, LogBase::Nats).unwrap();
            let c2 = chi_squared(&p, &q_pmf).unwrap();
            // 2 KL / chi2 -> 1 as the perturbation shrinks; within 1% at 1e-3
            prop_assert!((2.0 * kl / c2 - 1.0).abs() < 0.01);
        }

        #[test]
        fn bayes_round_trip_identity(
            raw_y in proptest::collection::vec(0.1f64..1.0, 2),
            raw_c in proptest::collection::vec(0.05f64..1.0, 4),
        ) {
            let ty: f64 = raw_y.iter().sum();
            let p_y = Pmf::new(raw_y.iter().map(|v| v / ty).collect()).unwrap();
            let cols: Vec<Vec<f64>> = raw_c
                .chunks(2)
                .map(|c| {
                    let s: f64 = c.iter().sum();
                    c.iter().map(|x| x / s).collect()
                })
                .collect();
            let p_x_given_y = Channel::from_columns(&cols).unwrap();
            // consistent p_x from the pair
            let mut px = vec![0.0; 2];
            for x in 0..2 {
                for y in 0..2 {
                    px[x] += p_x_given_y.get(x, y) * p_y.get(y);
                }
            }
            let p_x = Pmf::new(px).unwrap();
            let p_y_given_x = bayes_invert(&p_x_given_y, &p_y, &p_x).unwrap();
            // reverse Bayes recovers the original conditional
            for x in 0..2 {
                for y in 0..2 {
                    prop_assume!(p_y.get(y) > 1e-6);
                    let back = p_y_given_x.get(y, x) * p_x.get(x) / p_y.get(y);
                    prop_assert!((back - p_x_given_y.get(x, y)).abs() <= 1e-12);
                }
            }
        }

        #[test]
        fn mi_nonnegative_and_zero_on_products(
            raw_a in proptest::collection::vec(0.05f64..1.0, 2..4),
            raw_b in proptest::collection::vec(0.05f64..1.0, 2..4),
        ) {
            let ta: f64 = raw_a.iter().sum();
            let tb: f64 = raw_b.iter().sum();
            let mut joint = Matrix::zeros(raw_a.len(), raw_b.len());
            for i in 0..raw_a.len() {
                for j in 0..raw_b.len() {
                    joint.set(i, j, (raw_a[i] / ta) * (raw_b[j] / tb));
                }
            }
            let mi = mutual_information(&joint, LogBase::Nats).unwrap();
            prop_assert!(mi >= 0.0);
            prop_assert!(mi <= 1e-12);
        }
    }
}
