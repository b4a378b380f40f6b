//! The two concrete parameter families wired end to end: configuration
//! datum, slice chart, height field, and push fields, plus the JSON field
//! spec the command-line tool consumes.
//!
//! * The dumbbell family (slit length ℓ fixed, handle heights (b, c) free)
//!   compares the α-curve extremal lengths against the β-values — the
//!   marking swap enters as a relabeling — giving
//!   m_{αi} = −log(height·(height−ℓ)) and a unique interior reflexive
//!   point at b = c = (ℓ+√(ℓ²+4))/2.
//! * The stacked family (circumference w fixed; heights h1, h2 and twists
//!   t1, t2 free on the normalized slice h1+h2+h3 = 1) has constant
//!   extremal lengths on both sides, so its mismatch never moves: the
//!   deliberate rank-0 negative control.

use crate::audit::PushFieldSpec;
use crate::config::{build_slice_chart, ConfigError, ConfigurationDatum, EdgeKind, SliceChart};
use crate::height::{
    AdmissibleCurveSet, Domain, ExtremalLengthAssignment, HeightField, Provenance, Side,
};
use crate::scalar::Real;
use crate::surfaces::{
    dumbbell_core_extremal_lengths, stacked_core_extremal_length,
    stacked_crossing_extremal_length, SlitDumbbellSurface, StackedCylinderSurface,
};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FamilyError {
    #[error("malformed field spec: {0}")]
    Malformed(String),
    #[error("invalid family parameter: {0}")]
    InvalidParameter(String),
    #[error("unknown push-field preset {0:?} (available: \"coordinate_scaling\")")]
    UnknownPushPreset(String),
    #[error("sample box is invalid: {0}")]
    BadSampleBox(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// The genus-2 dumbbell datum: two horizontal core edges (widths, pinned
/// to a common unit scale) and two vertical edges (handle heights), basis
/// classes hitting one edge each, and the identity involution.
pub fn dumbbell_datum() -> ConfigurationDatum {
    ConfigurationDatum {
        genus: 2,
        punctures: 0,
        edges: vec!["a1".into(), "a2".into(), "b1".into(), "b2".into()],
        iota: BTreeMap::from([
            ("a1".to_string(), vec![1, 0, 0, 0]),
            ("a2".to_string(), vec![0, 1, 0, 0]),
            ("b1".to_string(), vec![0, 0, 1, 0]),
            ("b2".to_string(), vec![0, 0, 0, 1]),
        ]),
        relations: vec![],
        // Both handles share the unit width of the slit torus pieces.
        extra_linear_constraints: vec![vec![1.0, -1.0, 0.0, 0.0]],
        tau: BTreeMap::from([
            ("a1".to_string(), EdgeKind::Horizontal),
            ("a2".to_string(), EdgeKind::Horizontal),
            ("b1".to_string(), EdgeKind::Vertical),
            ("b2".to_string(), EdgeKind::Vertical),
        ]),
        sigma: BTreeMap::from([
            ("a1".to_string(), "a1".to_string()),
            ("a2".to_string(), "a2".to_string()),
            ("b1".to_string(), "b1".to_string()),
            ("b2".to_string(), "b2".to_string()),
        ]),
        e0: None,
    }
}

/// The dumbbell slice chart with the slit constraint as lower bounds: the
/// free parameters are the handle heights (b1, b2), each > ℓ.
pub fn dumbbell_chart<T: Real>(ell: T) -> Result<SliceChart<T>, ConfigError> {
    let chart = build_slice_chart::<T>(Arc::new(dumbbell_datum()), None)?;
    chart.with_lower_bounds(BTreeMap::from([
        ("b1".to_string(), ell),
        ("b2".to_string(), ell),
    ]))
}

fn check_positive_finite(x: f64, name: &str) -> Result<(), FamilyError> {
    if !x.is_finite() || x <= 0.0 {
        return Err(FamilyError::InvalidParameter(format!(
            "{name} must be finite and strictly positive, got {x}"
        )));
    }
    Ok(())
}

/// Default sample box of the dumbbell field: heights well clear of the
/// slit bound.
fn dumbbell_sample_box<T: Real>(ell: T) -> Vec<(T, T)> {
    let lo = ell + T::of(0.1);
    vec![(lo, T::of(3.0)), (lo, T::of(3.0))]
}

/// The dumbbell height field over parameters (b, c) with slit length ℓ:
/// side I carries the α extremal lengths 1/(b−ℓ), 1/(c−ℓ); side II the
/// swapped β values b, c.
pub fn dumbbell_field<T: Real>(ell: T) -> Result<HeightField<T>, FamilyError> {
    check_positive_finite(ell.to_f64_lossy(), "ell")?;
    let domain = Domain::new_box(
        vec![Some(ell), Some(ell)],
        vec![None, None],
        dumbbell_sample_box(ell),
    );
    let curves = AdmissibleCurveSet::identity(vec!["alpha1".into(), "alpha2".into()]);
    let surface = move |u: &[T]| {
        SlitDumbbellSurface::new(ell, u[0], u[1])
            .expect("domain bounds keep the slit strictly below both heights")
    };
    let ext_i = ExtremalLengthAssignment::new(
        Side::I,
        Provenance::ClosedFormDumbbell,
        move |u: &[T], c| {
            let e = dumbbell_core_extremal_lengths(&surface(u));
            if c == 0 {
                e.alpha1
            } else {
                e.alpha2
            }
        },
    );
    let ext_ii = ExtremalLengthAssignment::new(
        Side::II,
        Provenance::ClosedFormDumbbell,
        move |u: &[T], c| {
            let e = dumbbell_core_extremal_lengths(&surface(u));
            if c == 0 {
                e.beta1
            } else {
                e.beta2
            }
        },
    );
    HeightField::new(domain, curves, ext_i, ext_ii)
        .map_err(|e| FamilyError::InvalidParameter(e.to_string()))
}

/// The closed-form height of the dumbbell family,
/// (log(b(b−ℓ)))² + (log(c(c−ℓ)))²; the field must reproduce it.
pub fn dumbbell_height_closed_form<T: Real>(ell: T, b: T, c: T) -> T {
    let mb = (b * (b - ell)).ln();
    let mc = (c * (c - ell)).ln();
    mb * mb + mc * mc
}

/// The unique balanced reflexive height: b = c = (ℓ + √(ℓ²+4))/2.
pub fn dumbbell_reflexive_height<T: Real>(ell: T) -> T {
    (ell + (ell * ell + T::of(4.0)).sqrt()) / T::of(2.0)
}

/// Default sample box of the stacked field (heights bounded away from the
/// simplex boundary, twists in one fundamental period).
fn stacked_sample_box<T: Real>() -> Vec<(T, T)> {
    vec![
        (T::of(0.1), T::of(0.4)),
        (T::of(0.1), T::of(0.4)),
        (T::zero(), T::of(0.9)),
        (T::zero(), T::of(0.9)),
    ]
}

/// The stacked height field over (h1, h2, t1, t2) with h3 = 1 − h1 − h2:
/// side I is the core constant w/(h1+h2+h3) = w, side II the crossing
/// constant 1/w. Every mismatch is the constant 2·log w, so for w ≠ 1 the
/// field is a stall witness, and both Jacobians vanish identically.
pub fn stacked_field<T: Real>(w: T) -> Result<HeightField<T>, FamilyError> {
    check_positive_finite(w.to_f64_lossy(), "w")?;
    let one = T::one();
    let domain = Domain::new_box(
        vec![Some(T::zero()), Some(T::zero()), None, None],
        vec![Some(one), Some(one), None, None],
        stacked_sample_box(),
    )
    .with_guard(|u: &[T]| u[0] + u[1] < T::one());
    let curves = AdmissibleCurveSet::identity(vec!["alpha".into()]);
    let surface = move |u: &[T]| {
        let h3 = T::one() - u[0] - u[1];
        // Twists are periodic with period w; reduce before constructing.
        let wrap = |t: T| t - (t / w).floor() * w;
        StackedCylinderSurface::new(w, u[0], u[1], h3, wrap(u[2]), wrap(u[3]))
            .expect("guarded domain keeps all three heights positive")
    };
    let ext_i =
        ExtremalLengthAssignment::new(Side::I, Provenance::ClosedFormStacked, move |u: &[T], _| {
            stacked_core_extremal_length(&surface(u))
        });
    let ext_ii = ExtremalLengthAssignment::new(
        Side::II,
        Provenance::ClosedFormStacked,
        move |u: &[T], _| stacked_crossing_extremal_length(&surface(u)),
    );
    HeightField::new(domain, curves, ext_i, ext_ii)
        .map_err(|e| FamilyError::InvalidParameter(e.to_string()))
}

/// The push-field preset used by both families: curve k scales parameter
/// k, incidence sets are singletons.
pub fn family_push_fields<T: Real>(field: &HeightField<T>) -> PushFieldSpec<T> {
    PushFieldSpec::coordinate_scaling(field.curves.curves(), field.dim())
}

/// On-disk field spec: family selection plus optional overrides.
///
/// ```json
/// {"family": "dumbbell", "ell": 0.5}
/// {"family": "stacked", "w": 2.0, "push_fields": "coordinate_scaling"}
/// ```
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldConfig {
    #[serde(flatten)]
    pub family: FamilyParams,
    /// Optional replacement for the family's default sample box.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_box: Option<Vec<(f64, f64)>>,
    /// Named push-field preset; only "coordinate_scaling" is defined.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub push_fields: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum FamilyParams {
    Dumbbell { ell: f64 },
    Stacked { w: f64 },
}

impl FieldConfig {
    pub fn from_json_str(s: &str) -> Result<Self, FamilyError> {
        serde_json::from_str(s).map_err(|e| FamilyError::Malformed(e.to_string()))
    }

    /// Build the height field and its push fields.
    pub fn build(&self) -> Result<(HeightField<f64>, PushFieldSpec<f64>), FamilyError> {
        let mut field = match self.family {
            FamilyParams::Dumbbell { ell } => dumbbell_field::<f64>(ell)?,
            FamilyParams::Stacked { w } => stacked_field::<f64>(w)?,
        };
        if let Some(sample_box) = &self.sample_box {
            if sample_box.len() != field.dim() {
                return Err(FamilyError::BadSampleBox(format!(
                    "expected {} ranges, got {}",
                    field.dim(),
                    sample_box.len()
                )));
            }
            for &(lo, hi) in sample_box {
                if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                    return Err(FamilyError::BadSampleBox(format!(
                        "range [{lo}, {hi}] is not a finite interval"
                    )));
                }
            }
            // Every corner of the closed box must satisfy the open domain.
            let dim = field.dim();
            for mask in 0..(1usize << dim) {
                let corner: Vec<f64> = (0..dim)
                    .map(|i| {
                        if mask & (1 << i) == 0 {
                            sample_box[i].0
                        } else {
                            sample_box[i].1
                        }
                    })
                    .collect();
                if !field.domain.contains(&corner) {
                    return Err(FamilyError::BadSampleBox(format!(
                        "corner {corner:?} lies outside the domain"
                    )));
                }
            }
            field.domain.sample_box = sample_box.clone();
        }
        match self.push_fields.as_deref() {
            None | Some("coordinate_scaling") => {}
            Some(other) => return Err(FamilyError::UnknownPushPreset(other.to_string())),
        }
        let push = family_push_fields(&field);
        Ok((field, push))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::characters::pair_from_slice;

    const ELL: f64 = 0.5;

    #[test]
    fn datum_has_rank_four_and_a_two_parameter_slice() {
        let d = dumbbell_datum();
        assert_eq!(d.rank(), 4);
        let chart = dumbbell_chart::<f64>(ELL).unwrap();
        assert_eq!(chart.dim(), 2);
        assert_eq!(chart.params, ["b1", "b2"]);
    }

    #[test]
    fn dumbbell_mismatch_matches_the_closed_form() {
        let f = dumbbell_field::<f64>(ELL).unwrap();
        let m = f.mismatch(&[1.0, 1.0], "alpha1").unwrap();
        assert!((m - 2.0f64.ln()).abs() < 1e-15, "-log(1·0.5), got {m}");
        let h = f.height(&[1.0, 1.0]).unwrap();
        assert!((h - 2.0 * 2.0f64.ln().powi(2)).abs() < 1e-15);
        assert!((h - dumbbell_height_closed_form(ELL, 1.0, 1.0)).abs() < 1e-15);

        // Asymmetric point, both curves.
        let m1 = f.mismatch(&[2.0, 3.0], "alpha1").unwrap();
        let m2 = f.mismatch(&[2.0, 3.0], "alpha2").unwrap();
        assert!((m1 + (2.0f64 * 1.5).ln()).abs() < 1e-15);
        assert!((m2 + (3.0f64 * 2.5).ln()).abs() < 1e-15);
    }

    #[test]
    fn balanced_point_is_reflexive() {
        let b = dumbbell_reflexive_height(ELL);
        assert!((b - 1.2807764064044151).abs() < 1e-15);
        let f = dumbbell_field::<f64>(ELL).unwrap();
        let h = f.height(&[b, b]).unwrap();
        assert!(h < 1e-24, "H at the balanced point, got {h}");
    }

    #[test]
    fn dumbbell_gradient_matches_the_derivative_formula() {
        let f = dumbbell_field::<f64>(ELL).unwrap();
        let g = f.height_gradient_fd(&[1.0, 1.0], None).unwrap();
        // ∂H/∂b = 2·log(b(b−ℓ))·(1/b + 1/(b−ℓ)).
        let expected = 2.0 * 0.5f64.ln() * 3.0;
        assert!((g[0] - expected).abs() < 1e-6, "got {}", g[0]);
        assert!((g[1] - expected).abs() < 1e-6);
    }

    #[test]
    fn dumbbell_domain_enforces_the_slit_bound() {
        let f = dumbbell_field::<f64>(ELL).unwrap();
        assert!(f.height(&[0.4, 1.0]).is_err());
        assert!(f.height(&[0.6, 0.6]).is_ok());
    }

    #[test]
    fn field_over_the_slice_chart_agrees_with_the_box_domain() {
        // The same closed forms mounted over the chart-shaped domain give
        // identical values; the chart also produces the admissible pair.
        let box_field = dumbbell_field::<f64>(ELL).unwrap();
        let chart = dumbbell_chart::<f64>(ELL).unwrap();
        let chart_domain = Domain::new_chart(chart.clone(), dumbbell_sample_box(ELL));
        let chart_field = HeightField::new(
            chart_domain,
            box_field.curves.clone(),
            box_field.ext_i.clone(),
            box_field.ext_ii.clone(),
        )
        .unwrap();
        for u in [[1.0, 1.0], [2.0, 3.0], [0.7, 2.2]] {
            assert_eq!(
                box_field.height(&u).unwrap(),
                chart_field.height(&u).unwrap()
            );
        }
        assert!(pair_from_slice(&chart, &[2.0, 3.0]).is_ok());
    }

    #[test]
    fn stacked_mismatch_is_constant_in_all_four_parameters() {
        let f = stacked_field::<f64>(2.0).unwrap();
        let expected = 2.0 * 2.0f64.ln();
        let points: [[f64; 4]; 4] = [
            [0.2, 0.3, 0.0, 0.0],
            [0.1, 0.1, 0.5, 0.9],
            [0.4, 0.4, -3.7, 12.25],
            [0.25, 0.25, 1.999, 0.001],
        ];
        for u in points {
            let m = f.mismatch(&u, "alpha").unwrap();
            assert!((m - expected).abs() < 1e-12, "at {u:?}: {m}");
        }
        // w = 1 makes the constant zero: every point is reflexive.
        let unit = stacked_field::<f64>(1.0).unwrap();
        assert!(unit.height(&[0.2, 0.3, 0.1, 0.4]).unwrap() < 1e-28);
    }

    #[test]
    fn stacked_guard_rejects_collapsed_heights() {
        let f = stacked_field::<f64>(2.0).unwrap();
        assert!(f.height(&[0.6, 0.5, 0.0, 0.0]).is_err());
        assert!(f.height(&[0.0, 0.3, 0.0, 0.0]).is_err());
    }

    #[test]
    fn field_config_round_trips_and_builds() {
        let cfg = FieldConfig::from_json_str(r#"{"family":"dumbbell","ell":0.5}"#).unwrap();
        let (field, _push) = cfg.build().unwrap();
        assert_eq!(field.dim(), 2);
        assert_eq!(field.curves.curves(), ["alpha1", "alpha2"]);

        let cfg = FieldConfig::from_json_str(r#"{"family":"stacked","w":2.0}"#).unwrap();
        let (field, push) = cfg.build().unwrap();
        assert_eq!(field.dim(), 4);
        assert!(push.field("alpha").is_some());

        let json = serde_json::to_string(&cfg).unwrap();
        let again = FieldConfig::from_json_str(&json).unwrap();
        assert_eq!(
            serde_json::to_string(&again).unwrap(),
            json,
            "serialization is stable"
        );
    }

    #[test]
    fn field_config_rejects_bad_inputs() {
        assert!(matches!(
            FieldConfig::from_json_str(r#"{"family":"torus","r":1}"#),
            Err(FamilyError::Malformed(_))
        ));
        assert!(matches!(
            FieldConfig::from_json_str(r#"{"family":"dumbbell"}"#),
            Err(FamilyError::Malformed(_))
        ));
        let cfg = FieldConfig::from_json_str(r#"{"family":"dumbbell","ell":-1.0}"#).unwrap();
        assert!(matches!(
            cfg.build(),
            Err(FamilyError::InvalidParameter(_))
        ));
        let cfg = FieldConfig::from_json_str(
            r#"{"family":"dumbbell","ell":0.5,"push_fields":"mystery"}"#,
        )
        .unwrap();
        assert!(matches!(cfg.build(), Err(FamilyError::UnknownPushPreset(_))));
        let cfg = FieldConfig::from_json_str(
            r#"{"family":"dumbbell","ell":0.5,"sample_box":[[0.1,3.0],[0.6,3.0]]}"#,
        )
        .unwrap();
        assert!(matches!(cfg.build(), Err(FamilyError::BadSampleBox(_))));
    }

    #[test]
    fn sample_box_override_is_applied() {
        let cfg = FieldConfig::from_json_str(
            r#"{"family":"dumbbell","ell":0.5,"sample_box":[[0.8,2.0],[0.8,2.0]]}"#,
        )
        .unwrap();
        let (field, _) = cfg.build().unwrap();
        assert_eq!(field.domain.sample_box, vec![(0.8, 2.0), (0.8, 2.0)]);
    }
}
