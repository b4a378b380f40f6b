//! Locating reflexive points: push-field descent with Armijo
//! backtracking, a brute-force grid scan as an independent cross-check,
//! and a reflexivity certificate built from the per-curve residuals.

use crate::audit::PushFieldSpec;
use crate::height::{HeightError, HeightField, Side};
use crate::scalar::Real;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};
use thiserror::Error;

/// Height threshold under which a point counts as reflexive.
pub const DEFAULT_EPS_REFLEXIVE: f64 = 1e-12;
/// Steps shorter than this are treated as a stall.
pub const MIN_STEP: f64 = 1e-14;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("start point lies outside the field's domain")]
    OutOfDomain(Vec<f64>),
    #[error("no push field declared for curve {0}")]
    MissingPushField(String),
    #[error("invalid solve options: {0}")]
    InvalidOptions(String),
    #[error("grid and domain have mismatched dimensions: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("every grid point was rejected by the domain guard")]
    EmptyGridAfterGuard,
    #[error(transparent)]
    Height(#[from] HeightError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMode {
    PushDescent,
    GradientDescent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Reflexive,
    MaxIters,
    Stalled,
    LeftDomain,
}

#[derive(Debug, Clone)]
pub struct SolveOptions<T: Real> {
    pub eps_reflexive: T,
    pub max_iters: usize,
    pub armijo_c: T,
    pub backtrack: T,
    pub initial_step: T,
    pub mode: SolveMode,
}

impl<T: Real> Default for SolveOptions<T> {
    fn default() -> Self {
        SolveOptions {
            eps_reflexive: T::of(DEFAULT_EPS_REFLEXIVE),
            max_iters: 10_000,
            armijo_c: T::of(1e-4),
            backtrack: T::of(0.5),
            initial_step: T::of(1.0),
            mode: SolveMode::PushDescent,
        }
    }
}

impl<T: Real> SolveOptions<T> {
    fn validate(&self) -> Result<(), SolveError> {
        if !(self.eps_reflexive > T::zero()) {
            return Err(SolveError::InvalidOptions("eps_reflexive must be > 0".into()));
        }
        if self.max_iters == 0 {
            return Err(SolveError::InvalidOptions("max_iters must be > 0".into()));
        }
        if !(self.armijo_c > T::zero()) || !(self.initial_step > T::zero()) {
            return Err(SolveError::InvalidOptions(
                "armijo_c and initial_step must be > 0".into(),
            ));
        }
        if !(self.backtrack > T::zero() && self.backtrack < T::one()) {
            return Err(SolveError::InvalidOptions(
                "backtrack must lie strictly between 0 and 1".into(),
            ));
        }
        Ok(())
    }
}

/// One accepted iterate (the starting point is step 0).
#[derive(Debug, Clone, Serialize)]
pub struct TraceStep {
    pub iter: usize,
    pub u: Vec<f64>,
    pub h: f64,
    /// The curve whose push field produced this step; absent for the
    /// starting point and for gradient steps.
    pub curve: Option<String>,
}

#[derive(Debug, Clone)]
pub struct SolveResult<T: Real> {
    pub u_star: Vec<T>,
    pub h_star: T,
    pub iterations: usize,
    pub trace: Vec<TraceStep>,
    pub status: SolveStatus,
}

impl<T: Real> Serialize for SolveResult<T> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("SolveResult", 5)?;
        st.serialize_field("u_star", &to_f64(&self.u_star))?;
        st.serialize_field("h_star", &self.h_star.to_f64_lossy())?;
        st.serialize_field("iterations", &self.iterations)?;
        st.serialize_field("status", &self.status)?;
        st.serialize_field("trace", &self.trace)?;
        st.end()
    }
}

fn to_f64<T: Real>(u: &[T]) -> Vec<f64> {
    u.iter().map(|x| x.to_f64_lossy()).collect()
}

/// The trace as CSV: `iter,param_1..k,H,curve`.
pub fn trace_csv(result: &SolveResult<impl Real>, dim: usize) -> String {
    let mut cols: Vec<String> = vec!["iter".into()];
    cols.extend((1..=dim).map(|i| format!("param_{i}")));
    cols.push("H".into());
    cols.push("curve".into());
    let mut out = cols.join(",");
    out.push('\n');
    for step in &result.trace {
        out.push_str(&step.iter.to_string());
        for x in &step.u {
            out.push(',');
            out.push_str(&format!("{x:.16e}"));
        }
        out.push_str(&format!(",{:.16e},", step.h));
        out.push_str(step.curve.as_deref().unwrap_or(""));
        out.push('\n');
    }
    out
}

/// Directional derivative of H along v, with a one-sided fallback; `None`
/// when no stencil fits (the caller then falls back to plain strict
/// decrease).
fn height_directional_fd<T: Real>(
    f: &HeightField<T>,
    u: &[T],
    v: &[T],
    h0: T,
) -> Result<Option<T>, HeightError> {
    let vmax = v.iter().fold(T::zero(), |a, x| a.max(x.abs()));
    if vmax == T::zero() {
        return Ok(Some(T::zero()));
    }
    let umax = u.iter().fold(T::one(), |a, x| a.max(x.abs()));
    let h = h0 * umax / vmax;
    let shift = |s: T| -> Vec<T> {
        u.iter()
            .zip(v.iter())
            .map(|(&ui, &vi)| ui + s * vi)
            .collect()
    };
    let plus = shift(h);
    let minus = shift(-h);
    let fp = f.domain.contains(&plus).then(|| f.height(&plus)).transpose()?;
    let fm = f
        .domain
        .contains(&minus)
        .then(|| f.height(&minus))
        .transpose()?;
    Ok(match (fp, fm) {
        (Some(p), Some(m)) => Some((p - m) / (h + h)),
        (Some(p), None) => Some((p - f.height(u)?) / h),
        (None, Some(m)) => Some((f.height(u)? - m) / h),
        (None, None) => None,
    })
}

/// Backtracking line search: shrink s until u + s·v stays strictly inside
/// the domain and satisfies the Armijo sufficient-decrease bound together
/// with strict decrease; `None` once s falls below [`MIN_STEP`].
fn line_search<T: Real>(
    f: &HeightField<T>,
    u: &[T],
    v: &[T],
    h_cur: T,
    dhv: Option<T>,
    opts: &SolveOptions<T>,
) -> Result<Option<(Vec<T>, T)>, HeightError> {
    let mut s = opts.initial_step;
    let slope = dhv.filter(|d| *d < T::zero()).unwrap_or(T::zero());
    while s >= T::of(MIN_STEP) {
        let w: Vec<T> = u
            .iter()
            .zip(v.iter())
            .map(|(&ui, &vi)| ui + s * vi)
            .collect();
        if f.domain.contains(&w) {
            let hw = f.height(&w)?;
            if hw < h_cur && hw <= h_cur + opts.armijo_c * s * slope {
                return Ok(Some((w, hw)));
            }
        }
        s = s * opts.backtrack;
    }
    Ok(None)
}

/// Greedy descent along the push field of the curve γ* with the largest
/// |mismatch| (ties broken by curve order). The step direction is
/// sign(m_{γ*})·V_{γ*}(u): the fields are calibrated so that m_γ strictly
/// decreases along V_γ, so flowing with the sign of the current mismatch
/// always moves |m_{γ*}| toward zero. Stops when H drops below
/// `eps_reflexive`, when no admissible step of length ≥ 1e−14 decreases H
/// strictly (stalled), or at the iteration cap.
pub fn push_descent<T: Real>(
    f: &HeightField<T>,
    push: &PushFieldSpec<T>,
    u0: &[T],
    opts: &SolveOptions<T>,
) -> Result<SolveResult<T>, SolveError> {
    opts.validate()?;
    for c in f.curves.curves() {
        if push.field(c).is_none() {
            return Err(SolveError::MissingPushField(c.clone()));
        }
    }
    descend(f, u0, opts, |u| {
        let m = f.mismatches(u)?;
        let mut best = 0usize;
        for (i, mi) in m.iter().enumerate() {
            if mi.abs() > m[best].abs() {
                best = i;
            }
        }
        let curve = f.curves.curves()[best].clone();
        let sign = if m[best] < T::zero() { -T::one() } else { T::one() };
        let v: Vec<T> = (push.field(&curve).expect("checked above"))(u)
            .into_iter()
            .map(|x| sign * x)
            .collect();
        Ok((v, Some(curve)))
    })
}

/// Steepest descent on the finite-difference gradient of H; the
/// cross-check mode for [`push_descent`].
pub fn gradient_descent<T: Real>(
    f: &HeightField<T>,
    u0: &[T],
    opts: &SolveOptions<T>,
) -> Result<SolveResult<T>, SolveError> {
    opts.validate()?;
    descend(f, u0, opts, |u| {
        let g = f.height_gradient_fd(u, None)?;
        Ok((g.iter().map(|&x| -x).collect(), None))
    })
}

/// Dispatch on the configured mode.
pub fn solve<T: Real>(
    f: &HeightField<T>,
    push: &PushFieldSpec<T>,
    u0: &[T],
    opts: &SolveOptions<T>,
) -> Result<SolveResult<T>, SolveError> {
    match opts.mode {
        SolveMode::PushDescent => push_descent(f, push, u0, opts),
        SolveMode::GradientDescent => gradient_descent(f, u0, opts),
    }
}

fn descend<T: Real>(
    f: &HeightField<T>,
    u0: &[T],
    opts: &SolveOptions<T>,
    mut direction: impl FnMut(&[T]) -> Result<(Vec<T>, Option<String>), SolveError>,
) -> Result<SolveResult<T>, SolveError> {
    if !f.domain.contains(u0) {
        return Err(SolveError::OutOfDomain(to_f64(u0)));
    }
    let mut u = u0.to_vec();
    let mut h = f.height(&u)?;
    let mut trace = vec![TraceStep {
        iter: 0,
        u: to_f64(&u),
        h: h.to_f64_lossy(),
        curve: None,
    }];
    let mut iterations = 0usize;
    let status = loop {
        if h < opts.eps_reflexive {
            break SolveStatus::Reflexive;
        }
        if iterations == opts.max_iters {
            break SolveStatus::MaxIters;
        }
        if !f.domain.contains(&u) {
            break SolveStatus::LeftDomain;
        }
        let (v, curve) = direction(&u)?;
        let dhv = height_directional_fd(f, &u, &v, T::of(crate::height::DEFAULT_FD_STEP))?;
        let Some((w, hw)) = line_search(f, &u, &v, h, dhv, opts)? else {
            break SolveStatus::Stalled;
        };
        debug_assert!(hw < h, "line search must decrease H strictly");
        u = w;
        h = hw;
        iterations += 1;
        trace.push(TraceStep {
            iter: iterations,
            u: to_f64(&u),
            h: h.to_f64_lossy(),
            curve,
        });
    };
    Ok(SolveResult {
        u_star: u,
        h_star: h,
        iterations,
        trace,
        status,
    })
}

/// The grid argmin of one scan.
#[derive(Debug, Clone, Serialize)]
pub struct ArgminRecord {
    pub point: Vec<f64>,
    pub height: f64,
    pub row: usize,
}

/// A full brute-force evaluation over a grid: one row per in-domain grid
/// point holding the parameters, all mismatches, and H.
#[derive(Debug, Clone)]
pub struct ScanTable {
    pub header: String,
    pub rows: Vec<Vec<f64>>,
    pub argmin: ArgminRecord,
}

impl ScanTable {
    /// RFC-4180-style CSV with `\n` line endings and 17-significant-digit
    /// floats, so identical scans are byte-identical.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.rows.len() * 64 + self.header.len() + 1);
        out.push_str(&self.header);
        out.push('\n');
        for row in &self.rows {
            let mut first = true;
            for x in row {
                if !first {
                    out.push(',');
                }
                first = false;
                out.push_str(&format!("{x:.16e}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Evaluate mismatches and H over an inclusive per-parameter grid
/// (`resolution[i]` = number of points along axis i), row-major with the
/// last parameter varying fastest. Points rejected by the domain guard
/// are skipped; the argmin is the first row attaining the minimal H.
pub fn grid_scan<T: Real>(
    f: &HeightField<T>,
    grid_box: &[(T, T)],
    resolution: &[usize],
) -> Result<ScanTable, SolveError> {
    let dim = f.dim();
    if grid_box.len() != dim || resolution.len() != dim {
        return Err(SolveError::DimensionMismatch {
            expected: dim,
            got: grid_box.len().max(resolution.len()),
        });
    }
    if resolution.iter().any(|&r| r == 0) {
        return Err(SolveError::InvalidOptions(
            "every axis needs at least one grid point".into(),
        ));
    }
    let axis = |i: usize, k: usize| -> T {
        let (lo, hi) = grid_box[i];
        let r = resolution[i];
        if r == 1 {
            lo
        } else {
            lo + (hi - lo) * T::of(k as f64) / T::of((r - 1) as f64)
        }
    };
    let total: usize = resolution.iter().product();
    let mut rows = Vec::new();
    let mut argmin: Option<ArgminRecord> = None;
    let mut indices = vec![0usize; dim];
    for _ in 0..total {
        let u: Vec<T> = (0..dim).map(|i| axis(i, indices[i])).collect();
        if f.domain.contains(&u) {
            let m = f.mismatches(&u)?;
            let h = m.iter().map(|&x| x * x).fold(T::zero(), |a, b| a + b);
            let mut row = to_f64(&u);
            row.extend(m.iter().map(|x| x.to_f64_lossy()));
            let h64 = h.to_f64_lossy();
            row.push(h64);
            if argmin.as_ref().map_or(true, |a| h64 < a.height) {
                argmin = Some(ArgminRecord {
                    point: to_f64(&u),
                    height: h64,
                    row: rows.len(),
                });
            }
            rows.push(row);
        }
        // Advance the odometer, last axis fastest.
        for i in (0..dim).rev() {
            indices[i] += 1;
            if indices[i] < resolution[i] {
                break;
            }
            indices[i] = 0;
        }
        if dim == 0 {
            break;
        }
    }
    let argmin = argmin.ok_or(SolveError::EmptyGridAfterGuard)?;
    Ok(ScanTable {
        header: f.scan_csv_header(),
        rows,
        argmin,
    })
}

/// Per-curve residuals at a candidate reflexive point.
#[derive(Debug, Clone, Serialize)]
pub struct CurveResidual {
    pub curve: String,
    /// |m_γ(u)|.
    pub mismatch: f64,
    /// |Ext_I(u;γ) − Ext_II(u;γ^σ)|.
    pub ext_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReflexiveCertificate {
    pub u_star: Vec<f64>,
    pub residuals: Vec<CurveResidual>,
    pub tolerance: f64,
    pub certified: bool,
}

/// The default certificate tolerance for a given reflexivity threshold:
/// H < eps bounds each |m_γ| by √eps.
pub fn default_certificate_tol(eps_reflexive: f64) -> f64 {
    eps_reflexive.sqrt()
}

/// Report per-curve mismatches and extremal-length matching residuals;
/// `certified` iff every |m_γ| is within `tol`.
pub fn certify_reflexive<T: Real>(
    f: &HeightField<T>,
    u: &[T],
    tol: f64,
) -> Result<ReflexiveCertificate, SolveError> {
    if !f.domain.contains(u) {
        return Err(SolveError::OutOfDomain(to_f64(u)));
    }
    let mut residuals = Vec::with_capacity(f.curves.len());
    let mut certified = true;
    for (i, curve) in f.curves.curves().iter().enumerate() {
        let li = f.log_ext(u, Side::I, i)?;
        let lii = f.log_ext(u, Side::II, f.curves.paired(i))?;
        let mismatch = (li - lii).to_f64_lossy().abs();
        let ext_residual = (li.exp() - lii.exp()).to_f64_lossy().abs();
        if mismatch > tol {
            certified = false;
        }
        residuals.push(CurveResidual {
            curve: curve.clone(),
            mismatch,
            ext_residual,
        });
    }
    Ok(ReflexiveCertificate {
        u_star: to_f64(u),
        residuals,
        tolerance: tol,
        certified,
    })
}
