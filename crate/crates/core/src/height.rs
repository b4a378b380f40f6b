//! Mismatch functions and the height functional on a parameter domain.
//!
//! A height field combines an admissible curve set (with its pairing
//! involution), two strictly positive extremal-length assignments, and a
//! parameter domain. The mismatch of a curve γ at a point u is
//! `log Ext_I(u; γ) − log Ext_II(u; γ^σ)`; the height is the sum of
//! squared mismatches. Derivatives are taken by finite differences with a
//! one-sided fallback near the domain boundary.

use crate::config::SliceChart;
use crate::scalar::Real;
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

/// Default relative finite-difference step.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

#[derive(Debug, Error)]
pub enum HeightError {
    #[error("point lies outside the field's domain")]
    OutOfDomain,
    #[error("extremal length of {curve} on side {side} is not strictly positive ({value})")]
    NonpositiveExtremalLength {
        curve: String,
        side: Side,
        value: f64,
    },
    #[error("no finite-difference stencil fits inside the domain")]
    StencilOutOfDomain,
    #[error("unknown curve {0}")]
    UnknownCurve(String),
    #[error("expected {expected} parameters, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("curve pairing is not an involution: {0}")]
    PairingNotInvolutive(String),
    #[error("assignment tagged {got:?} supplied where side {expected:?} was required")]
    WrongSide { expected: Side, got: Side },
}

/// Which of the two extremal-length assignments a value belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Side {
    I,
    II,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::I => write!(f, "I"),
            Side::II => write!(f, "II"),
        }
    }
}

/// Ordered curve names together with the pairing involution σ_*.
#[derive(Debug, Clone)]
pub struct AdmissibleCurveSet {
    curves: Vec<String>,
    /// pairing[i] = index of the σ-partner of curve i.
    pairing: Vec<usize>,
}

impl AdmissibleCurveSet {
    pub fn new(
        curves: Vec<String>,
        pairing: BTreeMap<String, String>,
    ) -> Result<Self, HeightError> {
        let index: BTreeMap<&str, usize> = curves
            .iter()
            .enumerate()
            .map(|(i, c)| (c.as_str(), i))
            .collect();
        let mut idx = Vec::with_capacity(curves.len());
        for c in &curves {
            let partner = pairing
                .get(c)
                .ok_or_else(|| HeightError::PairingNotInvolutive(format!("{c} has no image")))?;
            let j = *index
                .get(partner.as_str())
                .ok_or_else(|| HeightError::UnknownCurve(partner.clone()))?;
            idx.push(j);
        }
        for (i, &j) in idx.iter().enumerate() {
            if idx[j] != i {
                return Err(HeightError::PairingNotInvolutive(format!(
                    "{} → {} → {}",
                    curves[i], curves[j], curves[idx[j]]
                )));
            }
        }
        Ok(AdmissibleCurveSet {
            curves,
            pairing: idx,
        })
    }

    /// The identity pairing on the given curves.
    pub fn identity(curves: Vec<String>) -> Self {
        let pairing = (0..curves.len()).collect();
        AdmissibleCurveSet { curves, pairing }
    }

    pub fn curves(&self) -> &[String] {
        &self.curves
    }

    pub fn len(&self) -> usize {
        self.curves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.curves.is_empty()
    }

    pub fn index_of(&self, curve: &str) -> Option<usize> {
        self.curves.iter().position(|c| c == curve)
    }

    /// Index of the σ-partner of curve `i`.
    pub fn paired(&self, i: usize) -> usize {
        self.pairing[i]
    }
}

/// Where an assignment's values come from; audits treat externally
/// supplied evaluators more cautiously than closed forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    ClosedFormDumbbell,
    ClosedFormStacked,
    Table,
    External,
}

type EvalFn<T> = dyn Fn(&[T], usize) -> T + Send + Sync;

/// One side's extremal-length evaluator over the parameter domain. The
/// function receives the parameter vector and a curve index (into the
/// field's curve set) and must return a strictly positive value wherever
/// the domain guard passes.
#[derive(Clone)]
pub struct ExtremalLengthAssignment<T: Real> {
    pub side: Side,
    pub provenance: Provenance,
    eval: Arc<EvalFn<T>>,
}

impl<T: Real> fmt::Debug for ExtremalLengthAssignment<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ExtremalLengthAssignment")
            .field("side", &self.side)
            .field("provenance", &self.provenance)
            .finish_non_exhaustive()
    }
}

impl<T: Real> ExtremalLengthAssignment<T> {
    pub fn new<F: Fn(&[T], usize) -> T + Send + Sync + 'static>(
        side: Side,
        provenance: Provenance,
        eval: F,
    ) -> Self {
        ExtremalLengthAssignment {
            side,
            provenance,
            eval: Arc::new(eval),
        }
    }

    pub fn raw_eval(&self, u: &[T], curve: usize) -> T {
        (self.eval)(u, curve)
    }

    fn retagged(mut self, side: Side) -> Self {
        self.side = side;
        self
    }
}

/// Shape of the parameter domain: an open box (bounds optional per side)
/// or a slice chart with its per-edge positivity constraints.
#[derive(Clone, Debug)]
pub enum DomainShape<T: Real> {
    Box {
        lower: Vec<Option<T>>,
        upper: Vec<Option<T>>,
    },
    Chart(SliceChart<T>),
}

type GuardFn<T> = dyn Fn(&[T]) -> bool + Send + Sync;

/// An open parameter domain with an optional extra guard predicate and a
/// closed sample box (used by audits and quasi-random sampling) that must
/// lie inside the domain.
#[derive(Clone)]
pub struct Domain<T: Real> {
    pub shape: DomainShape<T>,
    guard: Option<Arc<GuardFn<T>>>,
    /// Per-parameter [lo, hi] ranges from which samples are drawn.
    pub sample_box: Vec<(T, T)>,
}

impl<T: Real> fmt::Debug for Domain<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Domain")
            .field("shape", &self.shape)
            .field("has_guard", &self.guard.is_some())
            .field("sample_box", &self.sample_box)
            .finish()
    }
}

impl<T: Real> Domain<T> {
    pub fn new_box(
        lower: Vec<Option<T>>,
        upper: Vec<Option<T>>,
        sample_box: Vec<(T, T)>,
    ) -> Self {
        debug_assert_eq!(lower.len(), upper.len());
        Domain {
            shape: DomainShape::Box { lower, upper },
            guard: None,
            sample_box,
        }
    }

    pub fn new_chart(chart: SliceChart<T>, sample_box: Vec<(T, T)>) -> Self {
        Domain {
            shape: DomainShape::Chart(chart),
            guard: None,
            sample_box,
        }
    }

    pub fn with_guard<F: Fn(&[T]) -> bool + Send + Sync + 'static>(mut self, guard: F) -> Self {
        self.guard = Some(Arc::new(guard));
        self
    }

    pub fn dim(&self) -> usize {
        match &self.shape {
            DomainShape::Box { lower, .. } => lower.len(),
            DomainShape::Chart(chart) => chart.dim(),
        }
    }

    pub fn contains(&self, u: &[T]) -> bool {
        if u.len() != self.dim() || u.iter().any(|x| !x.is_finite()) {
            return false;
        }
        let shape_ok = match &self.shape {
            DomainShape::Box { lower, upper } => u.iter().enumerate().all(|(i, &x)| {
                lower[i].map_or(true, |lo| x > lo) && upper[i].map_or(true, |hi| x < hi)
            }),
            DomainShape::Chart(chart) => chart.in_domain(u),
        };
        shape_ok && self.guard.as_ref().map_or(true, |g| g(u))
    }
}

/// The height functional H(u) = Σ_γ m_γ(u)² over a parameter domain.
#[derive(Clone, Debug)]
pub struct HeightField<T: Real> {
    pub domain: Domain<T>,
    pub curves: AdmissibleCurveSet,
    pub ext_i: ExtremalLengthAssignment<T>,
    pub ext_ii: ExtremalLengthAssignment<T>,
}

impl<T: Real> HeightField<T> {
    pub fn new(
        domain: Domain<T>,
        curves: AdmissibleCurveSet,
        ext_i: ExtremalLengthAssignment<T>,
        ext_ii: ExtremalLengthAssignment<T>,
    ) -> Result<Self, HeightError> {
        if ext_i.side != Side::I {
            return Err(HeightError::WrongSide {
                expected: Side::I,
                got: ext_i.side,
            });
        }
        if ext_ii.side != Side::II {
            return Err(HeightError::WrongSide {
                expected: Side::II,
                got: ext_ii.side,
            });
        }
        Ok(HeightField {
            domain,
            curves,
            ext_i,
            ext_ii,
        })
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    /// The same field with the two assignments exchanged (side tags fixed
    /// up); with the identity pairing this negates every mismatch.
    pub fn with_swapped_sides(&self) -> Self {
        HeightField {
            domain: self.domain.clone(),
            curves: self.curves.clone(),
            ext_i: self.ext_ii.clone().retagged(Side::I),
            ext_ii: self.ext_i.clone().retagged(Side::II),
        }
    }

    fn check_point(&self, u: &[T]) -> Result<(), HeightError> {
        if u.len() != self.dim() {
            return Err(HeightError::DimensionMismatch {
                expected: self.dim(),
                got: u.len(),
            });
        }
        if !self.domain.contains(u) {
            return Err(HeightError::OutOfDomain);
        }
        Ok(())
    }

    /// Evaluate one assignment, enforcing the positivity contract.
    pub fn log_ext(&self, u: &[T], side: Side, curve: usize) -> Result<T, HeightError> {
        let assignment = match side {
            Side::I => &self.ext_i,
            Side::II => &self.ext_ii,
        };
        let v = assignment.raw_eval(u, curve);
        if !v.is_finite() || v <= T::zero() {
            return Err(HeightError::NonpositiveExtremalLength {
                curve: self.curves.curves()[curve].clone(),
                side,
                value: v.to_f64_lossy(),
            });
        }
        Ok(v.ln())
    }

    fn mismatch_at(&self, u: &[T], curve: usize) -> Result<T, HeightError> {
        let li = self.log_ext(u, Side::I, curve)?;
        let lii = self.log_ext(u, Side::II, self.curves.paired(curve))?;
        Ok(li - lii)
    }

    /// m_γ(u) = log Ext_I(u; γ) − log Ext_II(u; γ^σ).
    pub fn mismatch(&self, u: &[T], curve: &str) -> Result<T, HeightError> {
        self.check_point(u)?;
        let i = self
            .curves
            .index_of(curve)
            .ok_or_else(|| HeightError::UnknownCurve(curve.to_string()))?;
        self.mismatch_at(u, i)
    }

    /// All mismatches in curve order.
    pub fn mismatches(&self, u: &[T]) -> Result<Vec<T>, HeightError> {
        self.check_point(u)?;
        (0..self.curves.len())
            .map(|i| self.mismatch_at(u, i))
            .collect()
    }

    /// H(u) = Σ_γ m_γ(u)².
    pub fn height(&self, u: &[T]) -> Result<T, HeightError> {
        Ok(self
            .mismatches(u)?
            .into_iter()
            .map(|m| m * m)
            .fold(T::zero(), |a, b| a + b))
    }

    fn fd_step(&self, anchor: T, step: Option<T>) -> T {
        step.unwrap_or_else(|| T::of(DEFAULT_FD_STEP)) * T::one().max(anchor.abs())
    }

    /// Central-difference derivative of `f` along coordinate `i`, falling
    /// back to a one-sided quotient when a stencil point leaves the domain.
    fn coordinate_fd<F: Fn(&[T]) -> Result<T, HeightError>>(
        &self,
        f: &F,
        u: &[T],
        i: usize,
        h: T,
    ) -> Result<T, HeightError> {
        let mut plus = u.to_vec();
        plus[i] += h;
        let mut minus = u.to_vec();
        minus[i] -= h;
        let fp = self.domain.contains(&plus).then(|| f(&plus)).transpose()?;
        let fm = self.domain.contains(&minus).then(|| f(&minus)).transpose()?;
        match (fp, fm) {
            (Some(p), Some(m)) => Ok((p - m) / (h + h)),
            (Some(p), None) => Ok((p - f(u)?) / h),
            (None, Some(m)) => Ok((f(u)? - m) / h),
            (None, None) => Err(HeightError::StencilOutOfDomain),
        }
    }

    /// Finite-difference gradient of H.
    pub fn height_gradient_fd(&self, u: &[T], step: Option<T>) -> Result<Vec<T>, HeightError> {
        self.check_point(u)?;
        let f = |v: &[T]| self.height(v);
        (0..u.len())
            .map(|i| self.coordinate_fd(&f, u, i, self.fd_step(u[i], step)))
            .collect()
    }

    /// Finite-difference Jacobian of u ↦ (log Ext_side(u; γ))_γ,
    /// curves × params.
    pub fn log_ext_jacobian(
        &self,
        u: &[T],
        side: Side,
        step: Option<T>,
    ) -> Result<Vec<Vec<T>>, HeightError> {
        self.check_point(u)?;
        let mut jac = vec![vec![T::zero(); u.len()]; self.curves.len()];
        for (c, row) in jac.iter_mut().enumerate() {
            let f = |v: &[T]| self.log_ext(v, side, c);
            for (i, entry) in row.iter_mut().enumerate() {
                *entry = self.coordinate_fd(&f, u, i, self.fd_step(u[i], step))?;
            }
        }
        Ok(jac)
    }

    /// Finite-difference directional derivative of m_γ along the vector v.
    pub fn mismatch_directional_fd(
        &self,
        u: &[T],
        curve: usize,
        v: &[T],
        step: Option<T>,
    ) -> Result<T, HeightError> {
        self.check_point(u)?;
        if v.len() != u.len() {
            return Err(HeightError::DimensionMismatch {
                expected: u.len(),
                got: v.len(),
            });
        }
        let vmax = v.iter().fold(T::zero(), |a, x| a.max(x.abs()));
        if vmax == T::zero() {
            return Ok(T::zero());
        }
        let umax = u.iter().fold(T::one(), |a, x| a.max(x.abs()));
        let h = step.unwrap_or_else(|| T::of(DEFAULT_FD_STEP)) * umax / vmax;
        let shift = |s: T| -> Vec<T> {
            u.iter()
                .zip(v.iter())
                .map(|(&ui, &vi)| ui + s * vi)
                .collect()
        };
        let plus = shift(h);
        let minus = shift(-h);
        let eval = |w: &[T]| self.mismatch_at(w, curve);
        let fp = self.domain.contains(&plus).then(|| eval(&plus)).transpose()?;
        let fm = self
            .domain
            .contains(&minus)
            .then(|| eval(&minus))
            .transpose()?;
        match (fp, fm) {
            (Some(p), Some(m)) => Ok((p - m) / (h + h)),
            (Some(p), None) => Ok((p - eval(u)?) / h),
            (None, Some(m)) => Ok((eval(u)? - m) / h),
            (None, None) => Err(HeightError::StencilOutOfDomain),
        }
    }

    /// Header of the scan CSV: `param_1,…,param_k,m_<curve>,…,H`.
    pub fn scan_csv_header(&self) -> String {
        let mut cols: Vec<String> = (1..=self.dim()).map(|i| format!("param_{i}")).collect();
        cols.extend(self.curves.curves().iter().map(|c| format!("m_{c}")));
        cols.push("H".into());
        cols.join(",")
    }
}
