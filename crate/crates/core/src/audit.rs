//! Numerical audits of the three analytic hypotheses behind the descent:
//! H1 (regularity: both log-extremal-length maps are immersions), H2
//! (degeneration: mismatches blow up along boundary rays), H3
//! (pushability: per-curve vector fields push their own mismatch down
//! without disturbing non-incident curves).
//!
//! Each audit produces a machine-readable report with a verdict, the
//! thresholds used, and per-sample evidence; a `fail` report always
//! contains a concrete witness point.

use crate::height::{HeightField, HeightError, Provenance, Side, DEFAULT_FD_STEP};
use crate::reallinalg::singular_values;
use crate::scalar::Real;
use serde::Serialize;
use serde_json::{json, Value};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

pub const DEFAULT_SAMPLES: usize = 100;
pub const DEFAULT_RANK_TOL: f64 = 1e-6;
pub const DEFAULT_BLOW_THRESHOLD: f64 = 5.0;
pub const DEFAULT_DEGENERATION_STEPS: usize = 13;
pub const DEFAULT_T_MIN: f64 = 1e-3;
pub const DEFAULT_MARGIN: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum AuditError {
    #[error("no samples supplied (or none survived the domain filter)")]
    NoSamples,
    #[error("ray {ray} exits the domain at t = {t}")]
    RayExitsDomain { ray: String, t: f64 },
    #[error("no push field declared for curve {0}")]
    MissingPushField(String),
    #[error("incidence set of {0} does not contain the curve itself")]
    InvalidIncidence(String),
    #[error(transparent)]
    Height(#[from] HeightError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Hypothesis {
    H1,
    H2,
    H3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

/// One audited point and the quantities measured there.
#[derive(Debug, Clone, Serialize)]
pub struct Evidence {
    pub point: Vec<f64>,
    pub quantities: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditReport {
    pub hypothesis: Hypothesis,
    pub verdict: Verdict,
    pub thresholds: BTreeMap<String, f64>,
    pub evidence: Vec<Evidence>,
    pub seed: Option<u64>,
    pub notes: Vec<String>,
}

impl AuditReport {
    fn new(hypothesis: Hypothesis, seed: Option<u64>) -> Self {
        AuditReport {
            hypothesis,
            verdict: Verdict::Pass,
            thresholds: BTreeMap::new(),
            evidence: Vec::new(),
            seed,
            notes: Vec::new(),
        }
    }
}

/// Sample points for an audit, remembering the quasi-random seed when they
/// were machine-generated (recorded in reports for reproducibility).
#[derive(Debug, Clone)]
pub struct Samples<T: Real> {
    pub points: Vec<Vec<T>>,
    pub seed: Option<u64>,
}

impl<T: Real> From<Vec<Vec<T>>> for Samples<T> {
    fn from(points: Vec<Vec<T>>) -> Self {
        Samples { points, seed: None }
    }
}

impl<T: Real> Samples<T> {
    pub fn extend_with(mut self, user_points: Vec<Vec<T>>) -> Self {
        self.points.extend(user_points);
        self
    }
}

const HALTON_PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    let b = base as f64;
    while i > 0 {
        f /= b;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// `n` low-discrepancy in-domain points drawn from the field's sample box;
/// `seed` offsets the start of the underlying Halton sequence.
pub fn halton_samples<T: Real>(
    field: &HeightField<T>,
    n: usize,
    seed: u64,
) -> Result<Samples<T>, AuditError> {
    let dim = field.dim();
    assert!(
        dim <= HALTON_PRIMES.len(),
        "sampling supports at most {} parameters",
        HALTON_PRIMES.len()
    );
    let sample_box = &field.domain.sample_box;
    debug_assert_eq!(sample_box.len(), dim);
    let mut points = Vec::with_capacity(n);
    if dim == 0 {
        if field.domain.contains(&[]) {
            points.resize(n.max(1), Vec::new());
        }
    } else {
        let budget = 100 * n as u64 + 100;
        for k in 0..budget {
            if points.len() == n {
                break;
            }
            let idx = seed + 1 + k;
            let u: Vec<T> = (0..dim)
                .map(|d| {
                    let (lo, hi) = sample_box[d];
                    lo + (hi - lo) * T::of(radical_inverse(idx, HALTON_PRIMES[d]))
                })
                .collect();
            if field.domain.contains(&u) {
                points.push(u);
            }
        }
    }
    if points.is_empty() || (n > 0 && points.len() < n) {
        return Err(AuditError::NoSamples);
    }
    Ok(Samples {
        points,
        seed: Some(seed),
    })
}

fn point_f64<T: Real>(u: &[T]) -> Vec<f64> {
    u.iter().map(|x| x.to_f64_lossy()).collect()
}

fn matrix_f64<T: Real>(m: &[Vec<T>]) -> Vec<Vec<f64>> {
    m.iter().map(|row| point_f64(row)).collect()
}

/// Tolerance for the step-halving stability check: entries of a smooth
/// map's central difference move by O(step²·|third derivative|); the third
/// derivative of a log-extremal-length entry is bounded by the cube of its
/// own magnitude for the closed forms audited here, so the bound scales
/// with (1+|entry|)³ plus an absolute floor for rounding noise.
fn stability_tol(step: f64, entry: f64) -> f64 {
    let scale = 1.0 + entry.abs();
    10.0 * step * step * scale * scale * scale + 1e-7
}

/// H1: at every sample, both finite-difference Jacobians of
/// u ↦ (log Ext(u;γ))_γ must have rank equal to the chart dimension, with
/// singular values measured against `rank_tol·max(1, σ_max)`, and the
/// difference quotients must be stable under step halving. Unstable
/// quotients fail closed-form assignments but only downgrade externally
/// supplied ones to `inconclusive` (their differentiability is unknowable
/// from evaluations alone).
pub fn audit_regularity<T: Real>(
    field: &HeightField<T>,
    samples: &Samples<T>,
    rank_tol: f64,
) -> Result<AuditReport, AuditError> {
    if samples.points.is_empty() {
        return Err(AuditError::NoSamples);
    }
    let mut report = AuditReport::new(Hypothesis::H1, samples.seed);
    report.thresholds.insert("rank_tol".into(), rank_tol);
    report.thresholds.insert("fd_step".into(), DEFAULT_FD_STEP);
    let dim = field.dim();
    if dim == 0 {
        report
            .notes
            .push("zero-dimensional chart: immersion condition is vacuous".into());
        report.evidence.push(Evidence {
            point: vec![],
            quantities: BTreeMap::from([("rank".into(), json!(0)), ("dim".into(), json!(0))]),
        });
        return Ok(report);
    }

    let step = T::of(DEFAULT_FD_STEP);
    let half = T::of(DEFAULT_FD_STEP / 2.0);
    let mut any_unstable_external = false;
    for u in &samples.points {
        for side in [Side::I, Side::II] {
            let provenance = match side {
                Side::I => field.ext_i.provenance,
                Side::II => field.ext_ii.provenance,
            };
            let j_full = matrix_f64(&field.log_ext_jacobian(u, side, Some(step))?);
            let j_half = matrix_f64(&field.log_ext_jacobian(u, side, Some(half))?);
            let mut max_delta = 0.0f64;
            let mut stable = true;
            for (rf, rh) in j_full.iter().zip(j_half.iter()) {
                for (&a, &b) in rf.iter().zip(rh.iter()) {
                    let delta = (a - b).abs();
                    max_delta = max_delta.max(delta);
                    if delta > stability_tol(DEFAULT_FD_STEP, a) {
                        stable = false;
                    }
                }
            }
            let sv = singular_values(&j_half);
            let sigma_max = sv.first().copied().unwrap_or(0.0);
            let rank = sv
                .iter()
                .filter(|&&s| s > rank_tol * sigma_max.max(1.0))
                .count();
            let mut quantities = BTreeMap::from([
                ("side".into(), json!(side.to_string())),
                ("singular_values".into(), json!(sv)),
                ("rank".into(), json!(rank)),
                ("dim".into(), json!(dim)),
                ("jacobian_norm".into(), json!(sigma_max)),
                ("halving_max_delta".into(), json!(max_delta)),
            ]);
            if !stable {
                if matches!(provenance, Provenance::External | Provenance::Table) {
                    any_unstable_external = true;
                    quantities.insert(
                        "stability_note".into(),
                        json!("difference quotients unstable; differentiability not assessable"),
                    );
                } else {
                    report.verdict = Verdict::Fail;
                    quantities.insert(
                        "stability_note".into(),
                        json!("difference quotients unstable for a closed-form assignment"),
                    );
                }
            }
            if rank < dim {
                report.verdict = Verdict::Fail;
                quantities.insert("note".into(), json!(format!("rank {rank} < dim {dim}")));
            }
            report.evidence.push(Evidence {
                point: point_f64(u),
                quantities,
            });
        }
    }
    if report.verdict == Verdict::Pass && any_unstable_external {
        report.verdict = Verdict::Inconclusive;
        report.notes.push(
            "externally supplied assignment has unstable difference quotients".into(),
        );
    }
    Ok(report)
}

/// A boundary-approach path u(t), t ∈ (0,1], heading out of the domain as
/// t → 0.
#[derive(Clone)]
pub struct Ray<T: Real> {
    pub name: String,
    path: Arc<dyn Fn(T) -> Vec<T> + Send + Sync>,
}

impl<T: Real> fmt::Debug for Ray<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Ray").field("name", &self.name).finish_non_exhaustive()
    }
}

impl<T: Real> Ray<T> {
    pub fn new<F: Fn(T) -> Vec<T> + Send + Sync + 'static>(name: impl Into<String>, f: F) -> Self {
        Ray {
            name: name.into(),
            path: Arc::new(f),
        }
    }

    pub fn at(&self, t: T) -> Vec<T> {
        (self.path)(t)
    }
}

/// Geometric schedule 1 = t_0 > t_1 > … > t_{steps−1} = t_min.
pub fn geometric_t_schedule<T: Real>(t_min: T, steps: usize) -> Vec<T> {
    assert!(steps >= 2, "need at least two schedule points");
    assert!(t_min > T::zero() && t_min < T::one());
    (0..steps)
        .map(|k| t_min.powf(T::of(k as f64) / T::of((steps - 1) as f64)))
        .collect()
}

/// Default boundary rays for a box-shaped domain: one per finite bound
/// (approaching that facet) and one per unbounded direction (escaping to
/// infinity), all anchored at the midpoint of the sample box.
pub fn default_boundary_rays<T: Real>(field: &HeightField<T>) -> Vec<Ray<T>> {
    use crate::height::DomainShape;
    let DomainShape::Box { lower, upper } = &field.domain.shape else {
        return Vec::new();
    };
    let mid: Vec<T> = field
        .domain
        .sample_box
        .iter()
        .map(|&(lo, hi)| (lo + hi) / T::of(2.0))
        .collect();
    let mut rays = Vec::new();
    for i in 0..mid.len() {
        let anchor = mid.clone();
        match lower[i] {
            Some(lo) => rays.push(Ray::new(format!("param_{}_to_lower", i + 1), move |t| {
                let mut u = anchor.clone();
                u[i] = lo + t * (anchor[i] - lo);
                u
            })),
            None => {
                let scale = T::one().max(mid[i].abs());
                rays.push(Ray::new(format!("param_{}_to_minus_inf", i + 1), move |t| {
                    let mut u = anchor.clone();
                    u[i] = anchor[i] - (T::one() / t - T::one()) * scale;
                    u
                }));
            }
        }
        let anchor = mid.clone();
        match upper[i] {
            Some(hi) => rays.push(Ray::new(format!("param_{}_to_upper", i + 1), move |t| {
                let mut u = anchor.clone();
                u[i] = hi - t * (hi - anchor[i]);
                u
            })),
            None => rays.push(Ray::new(format!("param_{}_to_plus_inf", i + 1), move |t| {
                let mut u = anchor.clone();
                u[i] = anchor[i] / t;
                u
            })),
        }
    }
    rays
}

/// H2: along every declared ray the largest |m_γ| must exceed
/// `blow_threshold` at the deepest sampled t and be increasing over the
/// last three samples. A bounded, non-increasing tail is a failure
/// witness; an increasing tail that has not yet reached the threshold is
/// inconclusive (the sampled depth may simply be too shallow).
pub fn audit_degeneration<T: Real>(
    field: &HeightField<T>,
    rays: &[Ray<T>],
    blow_threshold: f64,
    steps: usize,
) -> Result<AuditReport, AuditError> {
    if rays.is_empty() {
        return Err(AuditError::NoSamples);
    }
    let mut report = AuditReport::new(Hypothesis::H2, None);
    report
        .thresholds
        .insert("blow_threshold".into(), blow_threshold);
    report.thresholds.insert("steps".into(), steps as f64);
    report.thresholds.insert("t_min".into(), DEFAULT_T_MIN);
    let schedule = geometric_t_schedule(T::of(DEFAULT_T_MIN), steps.max(2));

    let mut any_inconclusive = false;
    for ray in rays {
        let mut ts = Vec::with_capacity(schedule.len());
        let mut max_m = Vec::with_capacity(schedule.len());
        let mut deepest_point = Vec::new();
        for &t in &schedule {
            let u = ray.at(t);
            if !field.domain.contains(&u) {
                return Err(AuditError::RayExitsDomain {
                    ray: ray.name.clone(),
                    t: t.to_f64_lossy(),
                });
            }
            let m = field.mismatches(&u)?;
            let peak = m.iter().fold(T::zero(), |a, &x| a.max(x.abs()));
            ts.push(t.to_f64_lossy());
            max_m.push(peak.to_f64_lossy());
            deepest_point = point_f64(&u);
        }
        let n = max_m.len();
        let tail_increasing = n >= 3 && max_m[n - 3] < max_m[n - 2] && max_m[n - 2] < max_m[n - 1];
        let deepest = max_m[n - 1];
        let outcome = if deepest > blow_threshold && tail_increasing {
            "pass"
        } else if tail_increasing {
            any_inconclusive = true;
            "inconclusive"
        } else {
            report.verdict = Verdict::Fail;
            "fail"
        };
        report.evidence.push(Evidence {
            point: deepest_point,
            quantities: BTreeMap::from([
                ("ray".into(), json!(ray.name)),
                ("t".into(), json!(ts)),
                ("max_abs_m".into(), json!(max_m)),
                ("deepest_max_abs_m".into(), json!(deepest)),
                ("tail_increasing".into(), json!(tail_increasing)),
                ("outcome".into(), json!(outcome)),
            ]),
        });
    }
    if report.verdict == Verdict::Pass && any_inconclusive {
        report.verdict = Verdict::Inconclusive;
        report
            .notes
            .push("some rays grow but have not reached the threshold at the sampled depth".into());
    }
    Ok(report)
}

type VectorFieldFn<T> = dyn Fn(&[T]) -> Vec<T> + Send + Sync;

/// Per-curve vector fields V_γ with incidence sets I(γ) ∋ γ.
#[derive(Clone)]
pub struct PushFieldSpec<T: Real> {
    fields: BTreeMap<String, Arc<VectorFieldFn<T>>>,
    incidence: BTreeMap<String, BTreeSet<String>>,
}

impl<T: Real> fmt::Debug for PushFieldSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PushFieldSpec")
            .field("curves", &self.fields.keys().collect::<Vec<_>>())
            .field("incidence", &self.incidence)
            .finish()
    }
}

impl<T: Real> PushFieldSpec<T> {
    pub fn new(
        fields: BTreeMap<String, Arc<VectorFieldFn<T>>>,
        incidence: BTreeMap<String, BTreeSet<String>>,
    ) -> Result<Self, AuditError> {
        for (curve, inc) in &incidence {
            if !inc.contains(curve) {
                return Err(AuditError::InvalidIncidence(curve.clone()));
            }
        }
        for curve in fields.keys() {
            if !incidence.contains_key(curve) {
                return Err(AuditError::InvalidIncidence(curve.clone()));
            }
        }
        Ok(PushFieldSpec { fields, incidence })
    }

    /// The preset used by the concrete families: curve k scales parameter
    /// k (V = u_k·∂/∂u_k) and is incident only to itself.
    pub fn coordinate_scaling(curves: &[String], dim: usize) -> Self {
        let mut fields: BTreeMap<String, Arc<VectorFieldFn<T>>> = BTreeMap::new();
        let mut incidence = BTreeMap::new();
        for (k, curve) in curves.iter().enumerate() {
            let coord = k.min(dim.saturating_sub(1));
            fields.insert(
                curve.clone(),
                Arc::new(move |u: &[T]| {
                    let mut v = vec![T::zero(); u.len()];
                    if !u.is_empty() {
                        v[coord] = u[coord];
                    }
                    v
                }),
            );
            incidence.insert(curve.clone(), BTreeSet::from([curve.clone()]));
        }
        PushFieldSpec { fields, incidence }
    }

    pub fn field(&self, curve: &str) -> Option<&Arc<VectorFieldFn<T>>> {
        self.fields.get(curve)
    }

    pub fn incidence(&self, curve: &str) -> Option<&BTreeSet<String>> {
        self.incidence.get(curve)
    }

    /// Replace one curve's field, keeping its incidence set.
    pub fn with_field<F: Fn(&[T]) -> Vec<T> + Send + Sync + 'static>(
        mut self,
        curve: &str,
        f: F,
    ) -> Self {
        self.fields.insert(curve.to_string(), Arc::new(f));
        self.incidence
            .entry(curve.to_string())
            .or_insert_with(|| BTreeSet::from([curve.to_string()]));
        self
    }
}

/// H3: at every sample u and every curve γ whose mismatch exceeds
/// `margin`: (P1) the push field strictly decreases m_γ, i.e.
/// dm_γ(V_γ) < 0, so flowing along ±V_γ (sign chosen by the current
/// mismatch) always moves |m_γ| toward zero; (P2)
/// non-incident mismatches respond below `margin` (incident responses are
/// recorded as an observed bound — uniformity over the whole domain is not
/// decidable from finitely many samples); (P3) γ's own weighted response
/// strictly dominates the other incident ones.
pub fn audit_pushability<T: Real>(
    field: &HeightField<T>,
    push: &PushFieldSpec<T>,
    samples: &Samples<T>,
    margin: f64,
) -> Result<AuditReport, AuditError> {
    if samples.points.is_empty() {
        return Err(AuditError::NoSamples);
    }
    let curves = field.curves.curves().to_vec();
    for c in &curves {
        if push.field(c).is_none() {
            return Err(AuditError::MissingPushField(c.clone()));
        }
    }
    let mut report = AuditReport::new(Hypothesis::H3, samples.seed);
    report.thresholds.insert("margin".into(), margin);
    report.thresholds.insert("fd_step".into(), DEFAULT_FD_STEP);

    let mut active_anywhere = false;
    let mut incident_bound = 0.0f64;
    for u in &samples.points {
        let m = field.mismatches(u)?;
        for (gi, gamma) in curves.iter().enumerate() {
            let m_g = m[gi].to_f64_lossy();
            if m_g.abs() <= margin {
                continue;
            }
            active_anywhere = true;
            let v = (push.field(gamma).expect("checked above"))(u);
            let inc = push.incidence(gamma).expect("validated incidence");
            let dm: Vec<f64> = (0..curves.len())
                .map(|di| {
                    field
                        .mismatch_directional_fd(u, di, &v, None)
                        .map(|x| x.to_f64_lossy())
                })
                .collect::<Result<_, _>>()?;
            let own = dm[gi];
            let mut quantities = BTreeMap::from([
                ("curve".into(), json!(gamma)),
                ("m".into(), json!(m_g)),
                ("dm_along_push".into(), json!(dm)),
            ]);
            let mut failed = None;
            if !(own < 0.0) {
                failed = Some(("P1", format!("dm_γ(V_γ) = {own} has the wrong sign")));
            }
            let mut incident_weighted = 0.0f64;
            for (di, delta) in curves.iter().enumerate() {
                if di == gi {
                    continue;
                }
                if inc.contains(delta) {
                    incident_bound = incident_bound.max(dm[di].abs());
                    incident_weighted += m[di].to_f64_lossy().abs() * dm[di].abs();
                } else if dm[di].abs() >= margin && failed.is_none() {
                    failed = Some((
                        "P2",
                        format!("non-incident {delta} responds with |dm| = {}", dm[di].abs()),
                    ));
                }
            }
            if failed.is_none() && !(m_g.abs() * own.abs() > incident_weighted) {
                failed = Some((
                    "P3",
                    format!(
                        "own weighted response {} does not dominate {}",
                        m_g.abs() * own.abs(),
                        incident_weighted
                    ),
                ));
            }
            if let Some((cond, detail)) = failed {
                report.verdict = Verdict::Fail;
                quantities.insert("violated".into(), json!(cond));
                quantities.insert("detail".into(), json!(detail));
            }
            report.evidence.push(Evidence {
                point: point_f64(u),
                quantities,
            });
        }
    }
    report
        .thresholds
        .insert("observed_incident_bound".into(), incident_bound);
    if !active_anywhere {
        report.notes.push(
            "no curve exceeded the margin at any sample; conditions hold vacuously".into(),
        );
    }
    report.notes.push(
        "uniformity of incident bounds over the full domain is not certified by finite sampling"
            .into(),
    );
    Ok(report)
}
