//! Characters of the homology lattice and admissible side-I/side-II pairs.
//!
//! A character is an additive homomorphism Γ → ℂ, stored by its values on
//! the chosen basis of Γ. A pair (χ_I, χ_II) is admissible for a datum when
//! there are unit moduli ζ, κ with
//!
//! * (C1) ζ⁻¹·χ_I(ι(e)) on the ray of τ(e), and ζ·κ⁻¹·χ_II(ι(σ(e))) on the
//!   conjugated ray (rays: ℝ₊ for horizontal, iℝ₊ for vertical, whose
//!   conjugates are ℝ₊ and −iℝ₊);
//! * (C2) both period vectors annihilate every relation;
//! * (C3) χ_II(ι(σ(e))) = κ·conj(χ_I(ι(e))) for every edge.
//!
//! The witness is pinned down by the scale-fixing edge e0: ζ is the phase
//! of χ_I(ι(e0)) and κ the ratio χ_II(ι(σ(e0))) / conj(χ_I(ι(e0))). A pair
//! of honest ray membership tests (sign along the ray, transverse part
//! small relative to the modulus) decides (C1).

use crate::config::{index_datum, ConfigError, ConfigurationDatum, EdgeKind, SliceChart};
use crate::intlinalg::{left_inverse_and_kernel, IntMat};
use crate::scalar::Real;
use num_complex::Complex;
use num_traits::ToPrimitive;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};
use std::sync::Arc;
use thiserror::Error;

/// Strict positivity threshold along a ray.
pub const TOL_POS: f64 = 1e-12;
/// Relative bound on the transverse component of a ray member.
pub const TOL_RAY: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum CharacterError {
    #[error("character has {got} values, expected rank {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("the period at the scale-fixing edge vanishes")]
    ZeroPeriodE0,
    #[error("pair is not admissible: {0}")]
    NotAdmissible(String),
    #[error("normalized pair leaves the restricted cone: {0}")]
    NotInNormCone(String),
    #[error("parameters lie outside the chart domain")]
    OutOfDomain,
    #[error("periods are inconsistent with the relations: {0}")]
    PeriodSystemInconsistent(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// Additive character Γ → ℂ by its basis values.
#[derive(Debug, Clone, PartialEq)]
pub struct Character<T: Real> {
    pub values: Vec<Complex<T>>,
}

impl<T: Real> Character<T> {
    pub fn new(values: Vec<Complex<T>>) -> Self {
        Character { values }
    }

    pub fn rank(&self) -> usize {
        self.values.len()
    }

    /// Evaluate on an integer homology class in basis coordinates.
    pub fn eval(&self, class: &[i64]) -> Complex<T> {
        debug_assert_eq!(class.len(), self.values.len());
        let mut acc = Complex::new(T::zero(), T::zero());
        for (v, &c) in self.values.iter().zip(class.iter()) {
            acc = acc + *v * T::of(c as f64);
        }
        acc
    }

    /// Multiply every value by a fixed complex scalar.
    pub fn scaled(&self, s: Complex<T>) -> Self {
        Character {
            values: self.values.iter().map(|v| *v * s).collect(),
        }
    }
}

fn complex_pair<T: Real>(z: &Complex<T>) -> [f64; 2] {
    [
        z.re.to_f64().unwrap_or(f64::NAN),
        z.im.to_f64().unwrap_or(f64::NAN),
    ]
}

impl<T: Real> Serialize for Character<T> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let vals: Vec<[f64; 2]> = self.values.iter().map(complex_pair).collect();
        vals.serialize(s)
    }
}

/// Period coordinates of a character: `p_e = χ(ι(e))` in edge order.
pub fn period_coordinates<T: Real>(
    chi: &Character<T>,
    d: &ConfigurationDatum,
) -> Result<Vec<Complex<T>>, CharacterError> {
    let ix = index_datum(d)?;
    if chi.values.len() != ix.rank {
        return Err(CharacterError::DimensionMismatch {
            expected: ix.rank,
            got: chi.values.len(),
        });
    }
    Ok((0..d.edges.len())
        .map(|e| {
            let mut acc = Complex::new(T::zero(), T::zero());
            for j in 0..ix.rank {
                acc = acc + chi.values[j] * T::of(ix.iota.get(j, e) as f64);
            }
            acc
        })
        .collect())
}

/// The ray attached to an edge kind, possibly conjugated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Ray {
    PositiveReal,
    PositiveImaginary,
    NegativeImaginary,
}

fn ray_of(kind: EdgeKind, conjugated: bool) -> Ray {
    match (kind, conjugated) {
        (EdgeKind::Horizontal, _) => Ray::PositiveReal,
        (EdgeKind::Vertical, false) => Ray::PositiveImaginary,
        (EdgeKind::Vertical, true) => Ray::NegativeImaginary,
    }
}

/// Membership test: strictly positive along the ray, transverse part small
/// relative to the modulus.
fn on_ray<T: Real>(z: Complex<T>, ray: Ray) -> bool {
    let n = z.norm();
    let tol_pos = T::of(TOL_POS);
    let tol_ray = T::of(TOL_RAY);
    match ray {
        Ray::PositiveReal => z.re > tol_pos && z.im.abs() <= tol_ray * n,
        Ray::PositiveImaginary => z.im > tol_pos && z.re.abs() <= tol_ray * n,
        Ray::NegativeImaginary => z.im < -tol_pos && z.re.abs() <= tol_ray * n,
    }
}

/// Conditions that can fail in an admissibility check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Condition {
    /// Side-I ray condition at an edge.
    RaySideI,
    /// Side-II (conjugated-ray) condition at an edge.
    RaySideII,
    /// A relation residual on side I.
    RelationSideI,
    /// A relation residual on side II.
    RelationSideII,
    /// The conjugation matching χ_II(ι(σ(e))) = κ·conj(χ_I(ι(e))).
    Conjugation,
    /// The κ ratio is not of unit modulus.
    WitnessModulus,
}

#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub condition: Condition,
    pub edge: Option<String>,
    pub relation: Option<usize>,
    pub detail: String,
}

/// Result of an admissibility check: the e0-pinned witness plus every
/// violated condition (empty list ⇔ admissible).
#[derive(Debug, Clone)]
pub struct Admissibility<T: Real> {
    pub zeta: Complex<T>,
    pub kappa: Complex<T>,
    pub violations: Vec<Violation>,
}

impl<T: Real> Admissibility<T> {
    pub fn is_admissible(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn witness(&self) -> Option<(Complex<T>, Complex<T>)> {
        self.is_admissible().then_some((self.zeta, self.kappa))
    }
}

/// Check (C1)–(C3) for a candidate pair. The witness is computed from the
/// scale-fixing edge; residual conditions are verified within `tol`
/// (relative to the period scale), ray membership with the pinned ray
/// tolerances. A vanishing period at e0 is an error, not a violation.
pub fn check_admissible<T: Real>(
    chi_i: &Character<T>,
    chi_ii: &Character<T>,
    d: &ConfigurationDatum,
    tol: T,
) -> Result<Admissibility<T>, CharacterError> {
    let ix = index_datum(d)?;
    let p_i = period_coordinates(chi_i, d)?;
    let p_ii = period_coordinates(chi_ii, d)?;
    let e0 = d
        .resolve_e0()
        .ok_or_else(|| ConfigError::E0NotHorizontal("<no horizontal edge>".into()))?;
    let e0_idx = d.edge_index(&e0).expect("e0 resolved from edge list");

    let z0 = p_i[e0_idx];
    if z0.norm() <= T::of(TOL_POS) {
        return Err(CharacterError::ZeroPeriodE0);
    }
    let zeta = z0 / z0.norm();
    let w0 = p_ii[ix.sigma[e0_idx]];
    let kappa_raw = w0 / z0.conj();

    let scale = p_i
        .iter()
        .chain(p_ii.iter())
        .map(|z| z.norm())
        .fold(T::one(), T::max);
    let res_tol = tol * scale;

    let mut violations = Vec::new();
    let kappa = if kappa_raw.norm() <= T::of(TOL_POS) {
        violations.push(Violation {
            condition: Condition::WitnessModulus,
            edge: Some(e0.clone()),
            relation: None,
            detail: "kappa ratio vanishes at the scale-fixing edge".into(),
        });
        Complex::new(T::one(), T::zero())
    } else {
        if (kappa_raw.norm() - T::one()).abs() > tol {
            violations.push(Violation {
                condition: Condition::WitnessModulus,
                edge: Some(e0.clone()),
                relation: None,
                detail: format!(
                    "|kappa| = {} is not 1 within {}",
                    kappa_raw.norm().to_f64_lossy(),
                    tol.to_f64_lossy()
                ),
            });
        }
        kappa_raw / kappa_raw.norm()
    };

    let zeta_inv = zeta.conj();
    let kappa_inv = kappa.conj();

    for (e, name) in d.edges.iter().enumerate() {
        // (C1), side I: ζ⁻¹·p_I(e) on the ray of τ(e).
        let zi = zeta_inv * p_i[e];
        if !on_ray(zi, ray_of(ix.tau[e], false)) {
            violations.push(Violation {
                condition: Condition::RaySideI,
                edge: Some(name.clone()),
                relation: None,
                detail: format!("rotated side-I period {:?} leaves its ray", complex_pair(&zi)),
            });
        }
        // (C1), side II: ζ·κ⁻¹·p_II(σ(e)) on the conjugated ray.
        let zii = zeta * kappa_inv * p_ii[ix.sigma[e]];
        if !on_ray(zii, ray_of(ix.tau[e], true)) {
            violations.push(Violation {
                condition: Condition::RaySideII,
                edge: Some(name.clone()),
                relation: None,
                detail: format!(
                    "rotated side-II period {:?} leaves the conjugated ray",
                    complex_pair(&zii)
                ),
            });
        }
        // (C3): conjugation matching.
        let lhs = p_ii[ix.sigma[e]];
        let rhs = kappa * p_i[e].conj();
        if (lhs - rhs).norm() > res_tol {
            violations.push(Violation {
                condition: Condition::Conjugation,
                edge: Some(name.clone()),
                relation: None,
                detail: format!(
                    "chi_II(iota(sigma(e))) = {:?} but kappa·conj(chi_I(iota(e))) = {:?}",
                    complex_pair(&lhs),
                    complex_pair(&rhs)
                ),
            });
        }
    }

    for (ri, r) in d.relations.iter().enumerate() {
        let mut acc_i = Complex::new(T::zero(), T::zero());
        let mut acc_ii = Complex::new(T::zero(), T::zero());
        for (e, &re) in r.iter().enumerate() {
            let c = T::of(re as f64);
            acc_i = acc_i + p_i[e] * c;
            acc_ii = acc_ii + p_ii[ix.sigma[e]] * c;
        }
        if acc_i.norm() > res_tol {
            violations.push(Violation {
                condition: Condition::RelationSideI,
                edge: None,
                relation: Some(ri),
                detail: format!("side-I residual {}", acc_i.norm().to_f64_lossy()),
            });
        }
        if acc_ii.norm() > res_tol {
            violations.push(Violation {
                condition: Condition::RelationSideII,
                edge: None,
                relation: Some(ri),
                detail: format!("side-II residual {}", acc_ii.norm().to_f64_lossy()),
            });
        }
    }

    Ok(Admissibility {
        zeta,
        kappa,
        violations,
    })
}

/// An admissible pair with its unit witnesses. `from_parts` does not
/// validate; use [`check_admissible`] or [`pair_from_slice`] to obtain
/// verified pairs.
#[derive(Debug, Clone)]
pub struct AdmissiblePair<T: Real> {
    pub chi_i: Character<T>,
    pub chi_ii: Character<T>,
    pub zeta: Complex<T>,
    pub kappa: Complex<T>,
    pub datum: Arc<ConfigurationDatum>,
}

impl<T: Real> AdmissiblePair<T> {
    pub fn from_parts(
        chi_i: Character<T>,
        chi_ii: Character<T>,
        zeta: Complex<T>,
        kappa: Complex<T>,
        datum: Arc<ConfigurationDatum>,
    ) -> Self {
        AdmissiblePair {
            chi_i,
            chi_ii,
            zeta,
            kappa,
            datum,
        }
    }

    /// Validate a candidate pair and package it with its witness.
    pub fn checked(
        chi_i: Character<T>,
        chi_ii: Character<T>,
        datum: Arc<ConfigurationDatum>,
        tol: T,
    ) -> Result<Self, CharacterError> {
        let adm = check_admissible(&chi_i, &chi_ii, &datum, tol)?;
        match adm.witness() {
            Some((zeta, kappa)) => Ok(AdmissiblePair {
                chi_i,
                chi_ii,
                zeta,
                kappa,
                datum,
            }),
            None => Err(CharacterError::NotAdmissible(describe(&adm.violations))),
        }
    }
}

impl<T: Real> Serialize for AdmissiblePair<T> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("AdmissiblePair", 4)?;
        st.serialize_field("chi_i", &self.chi_i)?;
        st.serialize_field("chi_ii", &self.chi_ii)?;
        st.serialize_field("zeta", &complex_pair(&self.zeta))?;
        st.serialize_field("kappa", &complex_pair(&self.kappa))?;
        st.end()
    }
}

fn describe(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| {
            let loc = v
                .edge
                .as_deref()
                .map(|e| format!(" at edge {e}"))
                .or_else(|| v.relation.map(|r| format!(" at relation {r}")))
                .unwrap_or_default();
            format!("{:?}{loc}: {}", v.condition, v.detail)
        })
        .collect::<Vec<_>>()
        .join("; ")
}

/// Rotate a pair into the normalized cone (ζ = κ = 1). Errors with
/// `NotInNormCone` when the rotated periods leave their rays — the rotation
/// preserves (C2)/(C3) but membership of the un-rotated rays is a genuine
/// constraint.
pub fn normalize_pair<T: Real>(
    pair: &AdmissiblePair<T>,
    tol: T,
) -> Result<AdmissiblePair<T>, CharacterError> {
    let zeta_inv = pair.zeta.conj() / pair.zeta.norm();
    let kappa_inv = pair.kappa.conj() / pair.kappa.norm();
    let chi_i = pair.chi_i.scaled(zeta_inv);
    let chi_ii = pair.chi_ii.scaled(pair.zeta * kappa_inv);
    let adm = check_admissible(&chi_i, &chi_ii, &pair.datum, tol)?;
    if !adm.is_admissible() {
        let ray_violations: Vec<&Violation> = adm
            .violations
            .iter()
            .filter(|v| matches!(v.condition, Condition::RaySideI | Condition::RaySideII))
            .collect();
        if !ray_violations.is_empty() {
            let msgs: Vec<Violation> = ray_violations.into_iter().cloned().collect();
            return Err(CharacterError::NotInNormCone(describe(&msgs)));
        }
        return Err(CharacterError::NotAdmissible(describe(&adm.violations)));
    }
    let one = Complex::new(T::one(), T::zero());
    Ok(AdmissiblePair {
        chi_i,
        chi_ii,
        zeta: one,
        kappa: one,
        datum: pair.datum.clone(),
    })
}

/// Exact rational solver for period systems of one datum: an exact left
/// inverse of ιᵀ together with its left kernel (for consistency checks).
pub struct PeriodSolver<T: Real> {
    /// rank × |E|: reconstructs basis values from periods.
    left_inverse: Vec<Vec<T>>,
    /// Rows spanning the left kernel of ιᵀ: consistency functionals.
    left_kernel: Vec<Vec<T>>,
}

impl<T: Real> PeriodSolver<T> {
    pub fn new(d: &ConfigurationDatum) -> Result<Self, CharacterError> {
        let ix = index_datum(d)?;
        let ne = d.edges.len();
        // ιᵀ as an |E| × rank integer matrix.
        let rows: Vec<Vec<i128>> = (0..ne)
            .map(|e| (0..ix.rank).map(|j| ix.iota.get(j, e)).collect())
            .collect();
        let mt = if ix.rank == 0 {
            IntMat::zeros(ne, 0)
        } else {
            IntMat::from_rows(&rows)
        };
        let (l, k) = left_inverse_and_kernel(&mt);
        let Some(l) = l else {
            return Err(CharacterError::PeriodSystemInconsistent(
                "iota does not have full column rank over the rationals".into(),
            ));
        };
        let conv = |m: Vec<Vec<num_rational::BigRational>>| -> Vec<Vec<T>> {
            m.into_iter()
                .map(|row| {
                    row.into_iter()
                        .map(|q| T::of(q.to_f64().unwrap_or(f64::NAN)))
                        .collect()
                })
                .collect()
        };
        Ok(PeriodSolver {
            left_inverse: conv(l),
            left_kernel: conv(k),
        })
    }

    /// Solve `χ(ι(e)) = p_e` exactly-in-structure: apply the rational left
    /// inverse, then verify the left-kernel residuals.
    pub fn solve(&self, periods: &[Complex<T>], tol: T) -> Result<Character<T>, CharacterError> {
        let scale = periods.iter().map(|z| z.norm()).fold(T::one(), T::max);
        for (i, krow) in self.left_kernel.iter().enumerate() {
            let mut acc = Complex::new(T::zero(), T::zero());
            for (kv, p) in krow.iter().zip(periods.iter()) {
                acc = acc + *p * *kv;
            }
            if acc.norm() > tol * scale {
                return Err(CharacterError::PeriodSystemInconsistent(format!(
                    "kernel functional {i} has residual {}",
                    acc.norm().to_f64_lossy()
                )));
            }
        }
        let values: Vec<Complex<T>> = self
            .left_inverse
            .iter()
            .map(|lrow| {
                let mut acc = Complex::new(T::zero(), T::zero());
                for (lv, p) in lrow.iter().zip(periods.iter()) {
                    acc = acc + *p * *lv;
                }
                acc
            })
            .collect();
        Ok(Character::new(values))
    }
}

/// Build the normalized admissible pair over a point of the scale-fixed
/// slice: side-I periods are the chart coordinates read along their rays,
/// side II is the κ = 1 conjugate transported through σ.
pub fn pair_from_slice<T: Real>(
    chart: &SliceChart<T>,
    params: &[T],
) -> Result<AdmissiblePair<T>, CharacterError> {
    if params.len() != chart.dim() {
        return Err(CharacterError::DimensionMismatch {
            expected: chart.dim(),
            got: params.len(),
        });
    }
    if !chart.in_domain(params) {
        return Err(CharacterError::OutOfDomain);
    }
    let datum = chart.space.datum.clone();
    let ix = index_datum(&datum)?;
    let x = chart.embed(params)?;
    let periods_i: Vec<Complex<T>> = x
        .iter()
        .zip(ix.tau.iter())
        .map(|(&xe, kind)| match kind {
            EdgeKind::Horizontal => Complex::new(xe, T::zero()),
            EdgeKind::Vertical => Complex::new(T::zero(), xe),
        })
        .collect();
    // p'_{σ(e)} = conj(p_e)  ⇔  p'_f = conj(p_{σ⁻¹(f)}).
    let ne = datum.edges.len();
    let mut periods_ii = vec![Complex::new(T::zero(), T::zero()); ne];
    for e in 0..ne {
        periods_ii[ix.sigma[e]] = periods_i[e].conj();
    }
    let solver = PeriodSolver::new(&datum)?;
    let tol = T::of(1e-9);
    let chi_i = solver.solve(&periods_i, tol)?;
    let chi_ii = solver.solve(&periods_ii, tol)?;
    let one = Complex::new(T::one(), T::zero());
    let pair = AdmissiblePair {
        chi_i,
        chi_ii,
        zeta: one,
        kappa: one,
        datum,
    };
    debug_assert!(
        check_admissible(&pair.chi_i, &pair.chi_ii, &pair.datum, T::of(1e-9))
            .map(|a| a.is_admissible())
            .unwrap_or(false),
        "slice points produce admissible pairs"
    );
    Ok(pair)
}
