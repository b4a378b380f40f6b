//! The two concrete surface families with closed-form extremal lengths,
//! a generic Euclidean cylinder, and an independent discrete oracle.
//!
//! Closed forms are generic over [`Scalar`] so they can be evaluated both
//! in floating point and in exact rational arithmetic. The discrete oracle
//! is a resistor-network computation and is floating-point only.

use crate::scalar::Scalar;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SurfaceError {
    #[error("invalid surface parameter: {0}")]
    InvalidParameter(String),
    #[error("degenerate slit: {0}")]
    DegenerateSlit(String),
    #[error("discrete extremal-length solve failed: {0}")]
    SingularSystem(String),
}

fn require_positive_finite<T: Scalar>(x: &T, name: &str) -> Result<(), SurfaceError> {
    if !x.finite() || !(*x > T::zero()) {
        return Err(SurfaceError::InvalidParameter(format!(
            "{name} must be finite and strictly positive"
        )));
    }
    Ok(())
}

/// A flat cylinder of given circumference and height.
#[derive(Debug, Clone, PartialEq)]
pub struct EuclideanCylinder<T: Scalar> {
    pub circumference: T,
    pub height: T,
}

impl<T: Scalar> EuclideanCylinder<T> {
    pub fn new(circumference: T, height: T) -> Result<Self, SurfaceError> {
        require_positive_finite(&circumference, "circumference")?;
        require_positive_finite(&height, "height")?;
        Ok(EuclideanCylinder {
            circumference,
            height,
        })
    }

    /// Extremal length of the core curve family: circumference / height.
    pub fn core_extremal_length(&self) -> T {
        self.circumference.clone() / self.height.clone()
    }
}

/// Extremal length of the cylinder's core curve family, `w/h`.
pub fn cylinder_extremal_length<T: Scalar>(cyl: &EuclideanCylinder<T>) -> T {
    cyl.core_extremal_length()
}

/// Two unit-width rectangular tori of heights `b` and `c` joined along a
/// horizontal slit of length `ell` in each.
#[derive(Debug, Clone, PartialEq)]
pub struct SlitDumbbellSurface<T: Scalar> {
    pub b: T,
    pub c: T,
    pub ell: T,
}

impl<T: Scalar> SlitDumbbellSurface<T> {
    pub fn new(ell: T, b: T, c: T) -> Result<Self, SurfaceError> {
        require_positive_finite(&ell, "slit length")?;
        if !b.finite() || !c.finite() {
            return Err(SurfaceError::InvalidParameter(
                "handle heights must be finite".into(),
            ));
        }
        if !(b.clone() - ell.clone() > T::zero()) || !(c.clone() - ell.clone() > T::zero()) {
            return Err(SurfaceError::DegenerateSlit(
                "slit length must be strictly below both handle heights".into(),
            ));
        }
        Ok(SlitDumbbellSurface { b, c, ell })
    }
}

/// Closed-form extremal lengths of the four core curves of the dumbbell.
#[derive(Debug, Clone, PartialEq)]
pub struct CoreExtremalLengths<T: Scalar> {
    pub alpha1: T,
    pub beta1: T,
    pub alpha2: T,
    pub beta2: T,
}

impl<T: Scalar> CoreExtremalLengths<T> {
    pub fn get(&self, curve: &str) -> Option<&T> {
        match curve {
            "alpha1" => Some(&self.alpha1),
            "beta1" => Some(&self.beta1),
            "alpha2" => Some(&self.alpha2),
            "beta2" => Some(&self.beta2),
            _ => None,
        }
    }
}

/// Exact closed forms: α1 ↦ 1/(b−ℓ), β1 ↦ b, α2 ↦ 1/(c−ℓ), β2 ↦ c.
pub fn dumbbell_core_extremal_lengths<T: Scalar>(
    s: &SlitDumbbellSurface<T>,
) -> CoreExtremalLengths<T> {
    CoreExtremalLengths {
        alpha1: T::one() / (s.b.clone() - s.ell.clone()),
        beta1: s.b.clone(),
        alpha2: T::one() / (s.c.clone() - s.ell.clone()),
        beta2: s.c.clone(),
    }
}

/// Three cylinders of common circumference stacked into an annulus, with
/// twists at the two interior gluing circles.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedCylinderSurface<T: Scalar> {
    pub w: T,
    pub h1: T,
    pub h2: T,
    pub h3: T,
    pub t1: T,
    pub t2: T,
    /// Normalized to w = 1 and h1 + h2 + h3 = 1.
    pub sliced: bool,
}

impl<T: Scalar> StackedCylinderSurface<T> {
    pub fn new(w: T, h1: T, h2: T, h3: T, t1: T, t2: T) -> Result<Self, SurfaceError> {
        require_positive_finite(&w, "circumference")?;
        require_positive_finite(&h1, "h1")?;
        require_positive_finite(&h2, "h2")?;
        require_positive_finite(&h3, "h3")?;
        for (t, name) in [(&t1, "t1"), (&t2, "t2")] {
            if !t.finite() || *t < T::zero() || !(*t < w) {
                return Err(SurfaceError::InvalidParameter(format!(
                    "twist {name} must lie in [0, w)"
                )));
            }
        }
        Ok(StackedCylinderSurface {
            w,
            h1,
            h2,
            h3,
            t1,
            t2,
            sliced: false,
        })
    }

    /// Normalized slice: w = 1 and h3 = 1 − h1 − h2.
    pub fn new_sliced(h1: T, h2: T, t1: T, t2: T) -> Result<Self, SurfaceError> {
        let h3 = T::one() - h1.clone() - h2.clone();
        let mut s = Self::new(T::one(), h1, h2, h3, t1, t2)?;
        s.sliced = true;
        Ok(s)
    }

    pub fn total_height(&self) -> T {
        self.h1.clone() + self.h2.clone() + self.h3.clone()
    }
}

/// Extremal length of the stacked surface's core class: w / (h1+h2+h3),
/// independent of both twists.
pub fn stacked_core_extremal_length<T: Scalar>(s: &StackedCylinderSurface<T>) -> T {
    s.w.clone() / s.total_height()
}

/// Extremal length of the family crossing the annulus from boundary to
/// boundary: the reciprocal constant (h1+h2+h3) / w, also twist-independent.
pub fn stacked_crossing_extremal_length<T: Scalar>(s: &StackedCylinderSurface<T>) -> T {
    s.total_height() / s.w.clone()
}

/// Independent oracle for the cylinder's core extremal length: discretize
/// as a resistor network (n columns around the circumference, cell-shaped
/// conductances), collapse the two boundary circles to terminals, and
/// return the effective conductance between them. For a straight cylinder
/// the column symmetry makes this exactly w/h up to solver rounding.
pub fn discrete_extremal_length_oracle(
    cyl: &EuclideanCylinder<f64>,
    n: usize,
) -> Result<f64, SurfaceError> {
    if n < 4 {
        return Err(SurfaceError::InvalidParameter(
            "grid density must be at least 4".into(),
        ));
    }
    let w = cyl.circumference;
    let h = cyl.height;
    // Cells of size a × b with near-unit aspect ratio; edge conductances
    // follow the cell shape so the continuum limit is w/h.
    let m = ((n as f64 * h / w).round() as usize).max(1);
    let a = w / n as f64;
    let b = h / m as f64;
    let g_v = a / b;
    let g_h = b / a;

    let rows = m - 1; // interior node rows between the two terminals
    if rows == 0 {
        // Every column is a single terminal-to-terminal edge.
        return Ok(n as f64 * g_v);
    }

    // Interior potentials x[j * n + i] for row j ∈ 0..rows, column i (periodic),
    // with the bottom terminal at potential 1 and the top at 0:
    //   L x = rhs, L = graph Laplacian restricted to interior nodes.
    let size = rows * n;
    let degree = 2.0 * g_v + 2.0 * g_h;
    let apply = |x: &[f64], y: &mut [f64]| {
        for j in 0..rows {
            for i in 0..n {
                let idx = j * n + i;
                let left = x[j * n + (i + n - 1) % n];
                let right = x[j * n + (i + 1) % n];
                let below = if j == 0 { 0.0 } else { x[(j - 1) * n + i] };
                let above = if j + 1 == rows { 0.0 } else { x[(j + 1) * n + i] };
                y[idx] = degree * x[idx] - g_h * (left + right) - g_v * (below + above);
            }
        }
    };
    let mut rhs = vec![0.0; size];
    for i in 0..n {
        rhs[i] = g_v; // edges from the bottom terminal (potential 1) to row 0
    }

    let x = conjugate_gradient(apply, &rhs, 1e-13, 20 * size + 100).ok_or_else(|| {
        SurfaceError::SingularSystem("conjugate gradients did not converge".into())
    })?;

    // Current out of the bottom terminal.
    let current: f64 = (0..n).map(|i| g_v * (1.0 - x[i])).sum();
    Ok(current)
}

/// Matrix-free conjugate gradients for a symmetric positive-definite apply.
fn conjugate_gradient<F: Fn(&[f64], &mut [f64])>(
    apply: F,
    rhs: &[f64],
    rel_tol: f64,
    max_iters: usize,
) -> Option<Vec<f64>> {
    let n = rhs.len();
    let dot = |u: &[f64], v: &[f64]| -> f64 { u.iter().zip(v).map(|(a, b)| a * b).sum() };
    let rhs_norm2 = dot(rhs, rhs);
    if rhs_norm2 == 0.0 {
        return Some(vec![0.0; n]);
    }
    let stop = rel_tol * rel_tol * rhs_norm2;
    let mut x = vec![0.0; n];
    let mut r = rhs.to_vec();
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rr = dot(&r, &r);
    for _ in 0..max_iters {
        if rr <= stop {
            return Some(x);
        }
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) || !pap.is_finite() {
            return None;
        }
        let alpha = rr / pap;
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for k in 0..n {
            p[k] = r[k] + beta * p[k];
        }
    }
    if rr <= stop {
        Some(x)
    } else {
        None
    }
}
