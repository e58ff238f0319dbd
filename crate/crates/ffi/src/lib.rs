//! C ABI over the fairgeo core: opaque handles, status codes, and flat
//! buffers. Every entry point is panic-safe (panics surface as
//! `FG_STATUS_INTERNAL`) and null-tolerant (nulls surface as
//! `FG_STATUS_NULL_ARGUMENT`). Matrices cross the boundary column-major.

use fairgeo::designer::{solve, DesignSolution};
use fairgeo::dist::{
    chi_squared, entropy, kl_divergence, mutual_information, Channel, LogBase, Pmf,
};
use fairgeo::error::Error;
use fairgeo::geometry::ProblemInstance;
use fairgeo::instance::InstanceFile;
use fairgeo::matrix::Matrix;
use fairgeo::oracle::{grid_search, Measure, OracleConfig};
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;

/// Status of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FgStatus {
    Ok = 0,
    NullArgument = 1,
    Parse = 2,
    Validation = 3,
    InfeasibleEps = 4,
    Numerical = 5,
    Domain = 6,
    BufferTooSmall = 7,
    Utf8 = 8,
    Unrealizable = 9,
    Internal = 10,
}

/// Log base selector for the scalar information measures.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FgUnit {
    Nats = 0,
    Bits = 1,
}

/// Fairness constraint selector for the exhaustive search.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FgMeasure {
    Chi2 = 0,
    Mi = 1,
}

/// Which reconstructed conditional family to read back.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FgConditional {
    SensitiveGivenY = 0,
    TaskGivenY = 1,
    DataGivenY = 2,
}

/// Opaque problem instance.
pub struct FgInstance {
    inner: ProblemInstance,
}

/// Opaque design solution.
pub struct FgSolution {
    inner: DesignSolution,
}

/// Result of one exhaustive search.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct FgOracleResult {
    pub best_value_nats: f64,
    pub best_value_bits: f64,
    pub evaluated_count: u64,
    pub feasible_count: u64,
}

impl From<FgUnit> for LogBase {
    fn from(u: FgUnit) -> Self {
        match u {
            FgUnit::Nats => LogBase::Nats,
            FgUnit::Bits => LogBase::Bits,
        }
    }
}

fn status_of(e: &Error) -> FgStatus {
    match e.exit_code() {
        2 => FgStatus::Parse,
        3 => FgStatus::Validation,
        4 => FgStatus::InfeasibleEps,
        5 => FgStatus::Numerical,
        _ => FgStatus::Internal,
    }
}

fn guard<F: FnOnce() -> FgStatus>(f: F) -> FgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => FgStatus::Internal,
    }
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn fg_status_name(status: FgStatus) -> *const c_char {
    let name: &'static [u8] = match status {
        FgStatus::Ok => b"ok\0",
        FgStatus::NullArgument => b"null argument\0",
        FgStatus::Parse => b"parse error\0",
        FgStatus::Validation => b"validation error\0",
        FgStatus::InfeasibleEps => b"infeasible epsilon\0",
        FgStatus::Numerical => b"numerical error\0",
        FgStatus::Domain => b"domain error\0",
        FgStatus::BufferTooSmall => b"buffer too small\0",
        FgStatus::Utf8 => b"invalid utf-8\0",
        FgStatus::Unrealizable => b"design not realizable\0",
        FgStatus::Internal => b"internal error\0",
    };
    name.as_ptr() as *const c_char
}

unsafe fn column_major_channel(
    data: *const f64,
    rows: usize,
    cols: usize,
) -> Result<Channel, Error> {
    let flat = slice::from_raw_parts(data, rows * cols);
    let columns: Vec<Vec<f64>> = (0..cols)
        .map(|c| flat[c * rows..(c + 1) * rows].to_vec())
        .collect();
    Channel::from_columns(&columns)
}

/// Builds an instance from flat buffers.
///
/// `p_s_given_x` is `x_size * x_size` and `p_t_given_x` is
/// `t_size * x_size`, both column-major (each column is the conditional pmf
/// given one data value).
///
/// # Safety
/// `p_x` must point to `x_size` readable doubles, the two matrices to their
/// stated extents, and `out` to a writable pointer slot.
#[no_mangle]
pub unsafe extern "C" fn fg_instance_new(
    p_x: *const f64,
    x_size: usize,
    p_s_given_x: *const f64,
    p_t_given_x: *const f64,
    t_size: usize,
    eps: f64,
    rate: f64,
    out: *mut *mut FgInstance,
) -> FgStatus {
    if p_x.is_null() || p_s_given_x.is_null() || p_t_given_x.is_null() || out.is_null() {
        return FgStatus::NullArgument;
    }
    guard(|| {
        let px = slice::from_raw_parts(p_x, x_size).to_vec();
        let build = || -> Result<ProblemInstance, Error> {
            let p_x = Pmf::new(px.clone())?;
            let ps = column_major_channel(p_s_given_x, x_size, x_size)?;
            let pt = column_major_channel(p_t_given_x, t_size, x_size)?;
            ProblemInstance::new(p_x, ps, pt, eps, rate)
        };
        match build() {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(FgInstance { inner }));
                FgStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Parses an instance from TOML text (same schema as the CLI files).
///
/// # Safety
/// `text` must be a NUL-terminated string, `out` a writable pointer slot.
#[no_mangle]
pub unsafe extern "C" fn fg_instance_from_toml(
    text: *const c_char,
    out: *mut *mut FgInstance,
) -> FgStatus {
    if text.is_null() || out.is_null() {
        return FgStatus::NullArgument;
    }
    guard(|| {
        let Ok(text) = CStr::from_ptr(text).to_str() else {
            return FgStatus::Utf8;
        };
        let parsed = InstanceFile::from_toml_str(text).and_then(|f| f.to_instance());
        match parsed {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(FgInstance { inner }));
                FgStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// # Safety
/// `instance` must be null or a pointer from `fg_instance_new` /
/// `fg_instance_from_toml`, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fg_instance_free(instance: *mut FgInstance) {
    if !instance.is_null() {
        drop(Box::from_raw(instance));
    }
}

/// Writes the alphabet sizes of an instance.
///
/// # Safety
/// `instance` must be a live instance pointer; size outputs may be null.
#[no_mangle]
pub unsafe extern "C" fn fg_instance_sizes(
    instance: *const FgInstance,
    s_size: *mut usize,
    x_size: *mut usize,
    t_size: *mut usize,
) -> FgStatus {
    if instance.is_null() {
        return FgStatus::NullArgument;
    }
    let inst = &(*instance).inner;
    if !s_size.is_null() {
        *s_size = inst.s_size();
    }
    if !x_size.is_null() {
        *x_size = inst.x_size();
    }
    if !t_size.is_null() {
        *t_size = inst.t_size();
    }
    FgStatus::Ok
}

/// Runs the spectral design.
///
/// # Safety
/// `instance` must be a live instance pointer and `out` a writable slot.
#[no_mangle]
pub unsafe extern "C" fn fg_solve(
    instance: *const FgInstance,
    out: *mut *mut FgSolution,
) -> FgStatus {
    if instance.is_null() || out.is_null() {
        return FgStatus::NullArgument;
    }
    guard(|| match solve(&(*instance).inner) {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(FgSolution { inner }));
            FgStatus::Ok
        }
        Err(e) => status_of(&e),
    })
}

/// # Safety
/// `solution` must be null or a live pointer from `fg_solve`.
#[no_mangle]
pub unsafe extern "C" fn fg_solution_free(solution: *mut FgSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}

/// Objective value of the quadratic surrogate, nats.
///
/// # Safety
/// `solution` must be a live pointer from `fg_solve`.
#[no_mangle]
pub unsafe extern "C" fn fg_solution_objective_nats(solution: *const FgSolution) -> f64 {
    (*solution).inner.p2_value
}

/// Singular value the design rides on.
///
/// # Safety
/// `solution` must be a live pointer from `fg_solve`.
#[no_mangle]
pub unsafe extern "C" fn fg_solution_sigma(solution: *const FgSolution) -> f64 {
    (*solution).inner.sigma
}

/// Rate-feasibility scaling, >= 1.
///
/// # Safety
/// `solution` must be a live pointer from `fg_solve`.
#[no_mangle]
pub unsafe extern "C" fn fg_solution_k_factor(solution: *const FgSolution) -> f64 {
    (*solution).inner.k_factor
}

/// True when the unit top singular value forced the second pair.
///
/// # Safety
/// `solution` must be a live pointer from `fg_solve`.
#[no_mangle]
pub unsafe extern "C" fn fg_solution_used_second(solution: *const FgSolution) -> bool {
    (*solution).inner.used_second
}

/// True when the value is exactly optimal (binary sensitive alphabet).
///
/// # Safety
/// `solution` must be a live pointer from `fg_solve`.
#[no_mangle]
pub unsafe extern "C" fn fg_solution_tight(solution: *const FgSolution) -> bool {
    (*solution).inner.tightness
}

/// True when a channel realizes the design exactly.
///
/// # Safety
/// `solution` must be a live pointer from `fg_solve`.
#[no_mangle]
pub unsafe extern "C" fn fg_solution_realizable(solution: *const FgSolution) -> bool {
    (*solution).inner.is_realizable()
}

/// Writes the representation marginal (length 2).
///
/// # Safety
/// `solution` must be live; `buf` must hold `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn fg_solution_p_y(
    solution: *const FgSolution,
    buf: *mut f64,
    len: usize,
) -> FgStatus {
    if solution.is_null() || buf.is_null() {
        return FgStatus::NullArgument;
    }
    let p_y = (*solution).inner.design.p_y().as_slice();
    if len < p_y.len() {
        return FgStatus::BufferTooSmall;
    }
    slice::from_raw_parts_mut(buf, p_y.len()).copy_from_slice(p_y);
    FgStatus::Ok
}

/// Writes one perturbation direction (length = sensitive alphabet size).
///
/// # Safety
/// `solution` must be live; `buf` must hold `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn fg_solution_direction(
    solution: *const FgSolution,
    y: usize,
    buf: *mut f64,
    len: usize,
) -> FgStatus {
    if solution.is_null() || buf.is_null() {
        return FgStatus::NullArgument;
    }
    let sol = &(*solution).inner;
    let Some(l) = sol.design.l_vectors().get(y) else {
        return FgStatus::Domain;
    };
    if len < l.len() {
        return FgStatus::BufferTooSmall;
    }
    slice::from_raw_parts_mut(buf, l.len()).copy_from_slice(l);
    FgStatus::Ok
}

fn write_matrix_column_major(m: &Matrix, buf: &mut [f64]) -> FgStatus {
    if buf.len() < m.rows() * m.cols() {
        return FgStatus::BufferTooSmall;
    }
    for c in 0..m.cols() {
        for r in 0..m.rows() {
            buf[c * m.rows() + r] = m.get(r, c);
        }
    }
    FgStatus::Ok
}

/// Writes one reconstructed conditional family, column-major with one
/// column per representation value. The data conditional may carry a
/// negative entry when the design is not realizable.
///
/// # Safety
/// `solution` must be live; `buf` must hold `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn fg_solution_conditional(
    solution: *const FgSolution,
    which: FgConditional,
    buf: *mut f64,
    len: usize,
) -> FgStatus {
    if solution.is_null() || buf.is_null() {
        return FgStatus::NullArgument;
    }
    let sol = &(*solution).inner;
    let m = match which {
        FgConditional::SensitiveGivenY => sol.p_s_given_y.matrix(),
        FgConditional::TaskGivenY => sol.p_t_given_y.matrix(),
        FgConditional::DataGivenY => &sol.p_x_given_y,
    };
    write_matrix_column_major(m, slice::from_raw_parts_mut(buf, len))
}

/// Writes the realized representation channel, column-major `|Y| x |X|`
/// (one column per data value). Fails with `FG_STATUS_UNREALIZABLE` when no
/// channel realizes the design at this eps.
///
/// # Safety
/// `solution` must be live; `buf` must hold `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn fg_solution_channel(
    solution: *const FgSolution,
    buf: *mut f64,
    len: usize,
) -> FgStatus {
    if solution.is_null() || buf.is_null() {
        return FgStatus::NullArgument;
    }
    match &(*solution).inner.p_y_given_x {
        Some(ch) => write_matrix_column_major(ch.matrix(), slice::from_raw_parts_mut(buf, len)),
        None => FgStatus::Unrealizable,
    }
}

/// Exhaustive search over representation channels; `channel_buf` (nullable)
/// receives the best channel column-major `y_cardinality x |X|` when
/// something is feasible.
///
/// # Safety
/// `instance` must be live, `result` writable; `channel_buf`, when not
/// null, must hold `channel_len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn fg_grid_search(
    instance: *const FgInstance,
    grid_resolution: usize,
    y_cardinality: usize,
    measure: FgMeasure,
    result: *mut FgOracleResult,
    channel_buf: *mut f64,
    channel_len: usize,
) -> FgStatus {
    if instance.is_null() || result.is_null() {
        return FgStatus::NullArgument;
    }
    guard(|| {
        let cfg = OracleConfig {
            grid_resolution,
            y_cardinality,
            measure: match measure {
                FgMeasure::Chi2 => Measure::ChiSquaredPointwise,
                FgMeasure::Mi => Measure::MutualInformation,
            },
        };
        match grid_search(&(*instance).inner, &cfg) {
            Ok(res) => {
                *result = FgOracleResult {
                    best_value_nats: res.best_value_nats,
                    best_value_bits: res.best_value_bits,
                    evaluated_count: res.evaluated_count,
                    feasible_count: res.feasible_count,
                };
                if !channel_buf.is_null() {
                    if let Some(ch) = &res.best_channel {
                        let buf = slice::from_raw_parts_mut(channel_buf, channel_len);
                        let st = write_matrix_column_major(ch.matrix(), buf);
                        if st != FgStatus::Ok {
                            return st;
                        }
                    }
                }
                FgStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Utility bound in the low-rate regime (domain error outside it).
///
/// # Safety
/// `instance` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fg_low_rate_bound(instance: *const FgInstance, out: *mut f64) -> FgStatus {
    if instance.is_null() || out.is_null() {
        return FgStatus::NullArgument;
    }
    guard(|| match fairgeo::low_rate_bound(&(*instance).inner) {
        Ok(v) => {
            *out = v;
            FgStatus::Ok
        }
        Err(Error::Domain(_)) => FgStatus::Domain,
        Err(e) => status_of(&e),
    })
}

/// Shannon entropy of a pmf.
///
/// # Safety
/// `probs` must point to `len` readable doubles and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn fg_entropy(
    probs: *const f64,
    len: usize,
    unit: FgUnit,
    out: *mut f64,
) -> FgStatus {
    if probs.is_null() || out.is_null() {
        return FgStatus::NullArgument;
    }
    guard(
        || match Pmf::new(slice::from_raw_parts(probs, len).to_vec()) {
            Ok(p) => {
                *out = entropy(&p, unit.into());
                FgStatus::Ok
            }
            Err(e) => status_of(&e),
        },
    )
}

/// Kullback-Leibler divergence D(p || q).
///
/// # Safety
/// `p` and `q` must point to `len` readable doubles and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn fg_kl_divergence(
    p: *const f64,
    q: *const f64,
    len: usize,
    unit: FgUnit,
    out: *mut f64,
) -> FgStatus {
    if p.is_null() || q.is_null() || out.is_null() {
        return FgStatus::NullArgument;
    }
    guard(|| {
        let run = || -> Result<f64, Error> {
            let p = Pmf::new(slice::from_raw_parts(p, len).to_vec())?;
            let q = Pmf::new(slice::from_raw_parts(q, len).to_vec())?;
            kl_divergence(&p, &q, unit.into())
        };
        match run() {
            Ok(v) => {
                *out = v;
                FgStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Chi-squared divergence sum (p - q)^2 / q.
///
/// # Safety
/// `p` and `q` must point to `len` readable doubles and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn fg_chi_squared(
    p: *const f64,
    q: *const f64,
    len: usize,
    out: *mut f64,
) -> FgStatus {
    if p.is_null() || q.is_null() || out.is_null() {
        return FgStatus::NullArgument;
    }
    guard(|| {
        let run = || -> Result<f64, Error> {
            let p = Pmf::new(slice::from_raw_parts(p, len).to_vec())?;
            let q = Pmf::new(slice::from_raw_parts(q, len).to_vec())?;
            chi_squared(&p, &q)
        };
        match run() {
            Ok(v) => {
                *out = v;
                FgStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Exact mutual information of a joint table (column-major `rows x cols`).
///
/// # Safety
/// `joint` must point to `rows * cols` readable doubles, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fg_mutual_information(
    joint: *const f64,
    rows: usize,
    cols: usize,
    unit: FgUnit,
    out: *mut f64,
) -> FgStatus {
    if joint.is_null() || out.is_null() {
        return FgStatus::NullArgument;
    }
    guard(|| {
        let run = || -> Result<f64, Error> {
            let flat = slice::from_raw_parts(joint, rows * cols);
            let mut m = Matrix::zeros(rows, cols);
            for c in 0..cols {
                for r in 0..rows {
                    m.set(r, c, flat[c * rows + r]);
                }
            }
            mutual_information(&m, unit.into())
        };
        match run() {
            Ok(v) => {
                *out = v;
                FgStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}
