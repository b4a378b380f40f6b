//! Configuration data for synchronized flat structures.
//!
//! A configuration datum `C = (E, ι, R, τ, σ)` lists the horizontal and
//! vertical edge classes of a pair of marked surfaces, how they sit in the
//! first homology lattice Γ of rank `2g + max(n-1, 0)`, the integer
//! relations they satisfy, and the edge pairing σ used to compare the two
//! sides. Validation is exact: lattice questions are decided over ℤ via the
//! Smith normal form, and only the final cone/chart geometry uses floating
//! point.
//!
//! From a valid datum two real objects are built:
//!
//! * [`VCSpace`] — the real subspace of edge-coordinate vectors that are
//!   real on horizontal edges, purely imaginary on vertical edges, and
//!   satisfy every relation. Coordinates here are the real numbers `x_e`
//!   with `z_e = x_e` (horizontal) or `z_e = i·x_e` (vertical).
//! * [`SliceChart`] — the affine chart of the scale-fixed slice
//!   `{x_{e0} = 1}` inside the positive cone, parametrized by the free edge
//!   coordinates.

use crate::intlinalg::{generates_lattice, kernel_basis, smith_normal_form, IntMat};
use crate::reallinalg::{rank as real_rank, solve_affine, solve_square};
use crate::scalar::Real;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::Arc;
use thiserror::Error;

/// Relative tolerance on singular values when deciding real ranks.
pub const REAL_RANK_TOL: f64 = 1e-9;

/// Strict-feasibility threshold: the slice meets the open cone when the
/// maximized interior margin exceeds this.
pub const FEASIBILITY_MARGIN: f64 = 1e-9;

/// Horizontal (`h`) or vertical (`v`) edge class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EdgeKind {
    #[serde(rename = "h")]
    Horizontal,
    #[serde(rename = "v")]
    Vertical,
}

/// A configuration datum. Serialized as a JSON object whose arrays index
/// the edge list in order; see the crate README for the file format.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConfigurationDatum {
    pub genus: usize,
    pub punctures: usize,
    /// Ordered edge labels; all maps below are keyed by these.
    pub edges: Vec<String>,
    /// Image of each edge in Γ ≅ ℤ^rank, as integer coordinate vectors.
    pub iota: BTreeMap<String, Vec<i64>>,
    /// Integer relation vectors, each of length `edges.len()`.
    #[serde(default)]
    pub relations: Vec<Vec<i64>>,
    /// Extra real linear equations `Σ c_e x_e = 0` on the edge coordinates,
    /// e.g. closure conditions that are not homological relations.
    #[serde(default)]
    pub extra_linear_constraints: Vec<Vec<f64>>,
    pub tau: BTreeMap<String, EdgeKind>,
    /// Edge pairing between side I and side II; must be a bijection with
    /// `tau(sigma(e)) = tau(e)`.
    pub sigma: BTreeMap<String, String>,
    /// Scale-fixing edge. Defaults to the first horizontal edge in order.
    #[serde(default)]
    pub e0: Option<String>,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    /// Structurally unreadable input: wrong lengths, unknown edge names,
    /// missing map entries. Distinct from a failed validation check.
    #[error("malformed configuration datum: {0}")]
    Malformed(String),
    #[error("configuration datum failed validation: {0}")]
    InvalidDatum(String),
    #[error("scale-fixing edge '{0}' is not horizontal")]
    E0NotHorizontal(String),
    #[error("the slice x_{0} = 1 does not meet the positive cone")]
    EmptySlice(String),
    #[error("parameter count mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// One named validation check.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationCheck {
    pub name: String,
    pub passed: bool,
    pub message: String,
}

/// Outcome of [`validate_datum`]: one entry per invariant, plus the
/// conjunction.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub checks: Vec<ValidationCheck>,
}

impl ValidationReport {
    pub fn check(&self, name: &str) -> Option<&ValidationCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl ConfigurationDatum {
    /// Rank of Γ: `2·genus + max(punctures - 1, 0)`.
    pub fn rank(&self) -> usize {
        2 * self.genus + self.punctures.saturating_sub(1)
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edge_index(&self, name: &str) -> Option<usize> {
        self.edges.iter().position(|e| e == name)
    }

    /// Declared scale-fixing edge, or the first horizontal edge in order.
    pub fn resolve_e0(&self) -> Option<String> {
        if let Some(e0) = &self.e0 {
            return Some(e0.clone());
        }
        self.edges
            .iter()
            .find(|e| self.tau.get(*e) == Some(&EdgeKind::Horizontal))
            .cloned()
    }

    pub fn from_json_str(s: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(s).map_err(|e| ConfigError::Malformed(e.to_string()))
    }
}

/// Index-resolved view of a structurally sound datum.
pub(crate) struct Indexed {
    pub rank: usize,
    /// ι as a rank × |E| integer matrix (column e = ι(e)).
    pub iota: IntMat,
    pub sigma: Vec<usize>,
    pub tau: Vec<EdgeKind>,
}

pub(crate) fn index_datum(d: &ConfigurationDatum) -> Result<Indexed, ConfigError> {
    let mut problems: Vec<String> = Vec::new();
    let ne = d.edges.len();
    if ne == 0 {
        problems.push("edge list is empty".into());
    }
    for (i, e) in d.edges.iter().enumerate() {
        if d.edges[..i].contains(e) {
            problems.push(format!("duplicate edge label '{e}'"));
        }
    }
    let rank = d.rank();
    for e in &d.edges {
        match d.iota.get(e) {
            None => problems.push(format!("iota missing edge '{e}'")),
            Some(v) if v.len() != rank => problems.push(format!(
                "iota['{e}'] has length {}, expected rank {rank}",
                v.len()
            )),
            _ => {}
        }
        if !d.tau.contains_key(e) {
            problems.push(format!("tau missing edge '{e}'"));
        }
        match d.sigma.get(e) {
            None => problems.push(format!("sigma missing edge '{e}'")),
            Some(img) if !d.edges.contains(img) => {
                problems.push(format!("sigma['{e}'] = '{img}' is not an edge"))
            }
            _ => {}
        }
    }
    for k in d.iota.keys().chain(d.tau.keys()).chain(d.sigma.keys()) {
        if !d.edges.contains(k) {
            problems.push(format!("map key '{k}' is not an edge"));
        }
    }
    for (i, r) in d.relations.iter().enumerate() {
        if r.len() != ne {
            problems.push(format!(
                "relation {i} has length {}, expected {ne}",
                r.len()
            ));
        }
    }
    for (i, c) in d.extra_linear_constraints.iter().enumerate() {
        if c.len() != ne {
            problems.push(format!(
                "extra constraint {i} has length {}, expected {ne}",
                c.len()
            ));
        }
        if c.iter().any(|v| !v.is_finite()) {
            problems.push(format!("extra constraint {i} has a non-finite entry"));
        }
    }
    if let Some(e0) = &d.e0 {
        if !d.edges.contains(e0) {
            problems.push(format!("e0 = '{e0}' is not an edge"));
        }
    }
    if !problems.is_empty() {
        return Err(ConfigError::Malformed(problems.join("; ")));
    }

    let iota_rows: Vec<Vec<i128>> = (0..rank)
        .map(|j| {
            d.edges
                .iter()
                .map(|e| d.iota[e][j] as i128)
                .collect::<Vec<_>>()
        })
        .collect();
    let iota = if rank == 0 {
        IntMat::zeros(0, ne)
    } else {
        IntMat::from_rows(&iota_rows)
    };
    let sigma = d
        .edges
        .iter()
        .map(|e| d.edge_index(&d.sigma[e]).expect("checked above"))
        .collect();
    let tau = d.edges.iter().map(|e| d.tau[e]).collect();
    Ok(Indexed {
        rank,
        iota,
        sigma,
        tau,
    })
}

/// Run every datum invariant. Structurally unreadable data (length or name
/// mismatches) yields `ConfigError::Malformed`; readable data always yields
/// a report, with one entry per invariant.
pub fn validate_datum(d: &ConfigurationDatum) -> Result<ValidationReport, ConfigError> {
    let ix = index_datum(d)?;
    let ne = d.edges.len();
    let mut checks = Vec::new();

    // σ is a bijection of E.
    let mut seen = vec![false; ne];
    for &img in &ix.sigma {
        seen[img] = true;
    }
    let bijective = seen.iter().all(|&s| s);
    checks.push(ValidationCheck {
        name: "sigma_bijection".into(),
        passed: bijective,
        message: if bijective {
            "sigma is a bijection of the edge set".into()
        } else {
            let missed: Vec<&str> = d
                .edges
                .iter()
                .enumerate()
                .filter(|(i, _)| !seen[*i])
                .map(|(_, e)| e.as_str())
                .collect();
            format!("sigma is not onto: {} never hit", missed.join(", "))
        },
    });

    // τ(σ(e)) = τ(e).
    let incompatible: Vec<String> = d
        .edges
        .iter()
        .enumerate()
        .filter(|(i, _)| ix.tau[ix.sigma[*i]] != ix.tau[*i])
        .map(|(_, e)| e.clone())
        .collect();
    checks.push(ValidationCheck {
        name: "tau_sigma_compat".into(),
        passed: incompatible.is_empty(),
        message: if incompatible.is_empty() {
            "tau(sigma(e)) = tau(e) for every edge".into()
        } else {
            format!(
                "tau(sigma(e)) != tau(e) for: {}",
                incompatible.join(", ")
            )
        },
    });

    // ι(E) generates Γ: full rank and all invariant factors 1.
    let smith = smith_normal_form(&ix.iota);
    let generates = smith.rank == ix.rank && smith.unit_invariant_factors();
    checks.push(ValidationCheck {
        name: "iota_generates".into(),
        passed: generates,
        message: if generates {
            format!("iota spans the rank-{} lattice", ix.rank)
        } else {
            format!(
                "iota span has rank {} and invariant factors {:?}; expected rank {} with all factors 1",
                smith.rank,
                &smith.diag[..smith.rank],
                ix.rank
            )
        },
    });

    // Every relation lies in ker(ι∗).
    let rel128: Vec<Vec<i128>> = d
        .relations
        .iter()
        .map(|r| r.iter().map(|&v| v as i128).collect())
        .collect();
    let bad_relations: Vec<usize> = rel128
        .iter()
        .enumerate()
        .filter(|(_, r)| ix.iota.mul_vec(r).iter().any(|v| *v != 0))
        .map(|(i, _)| i)
        .collect();
    checks.push(ValidationCheck {
        name: "relations_in_kernel".into(),
        passed: bad_relations.is_empty(),
        message: if bad_relations.is_empty() {
            "all relations annihilate iota".into()
        } else {
            format!("relations not in the kernel: indices {bad_relations:?}")
        },
    });

    // The relations generate ker(ι∗) as a lattice.
    let kernel = kernel_basis(&ix.iota);
    let gen_ok = bad_relations.is_empty() && generates_lattice(&rel128, &kernel);
    checks.push(ValidationCheck {
        name: "relations_generate_kernel".into(),
        passed: gen_ok,
        message: if gen_ok {
            format!("relations span the rank-{} kernel lattice", kernel.len())
        } else if !bad_relations.is_empty() {
            "cannot span the kernel: some relations are outside it".into()
        } else {
            format!(
                "{} relations do not span the rank-{} kernel lattice",
                d.relations.len(),
                kernel.len()
            )
        },
    });

    let ok = checks.iter().all(|c| c.passed);
    Ok(ValidationReport { ok, checks })
}

/// The real solution space of the edge-coordinate constraints, in the real
/// chart `x_e` (`z_e = x_e` horizontal, `z_e = i·x_e` vertical).
#[derive(Debug, Clone)]
pub struct VCSpace<T: Real> {
    pub datum: Arc<ConfigurationDatum>,
    /// Basis vectors of length |E|.
    pub basis: Vec<Vec<T>>,
    pub dim: usize,
}

/// Constraint rows in the real chart: each integer relation splits into its
/// horizontal and vertical parts (real and imaginary components of the
/// complex equation), and each extra constraint contributes one row.
fn constraint_rows<T: Real>(d: &ConfigurationDatum, ix: &Indexed) -> Vec<Vec<T>> {
    let ne = d.edges.len();
    let mut rows: Vec<Vec<T>> = Vec::new();
    for r in &d.relations {
        for kind in [EdgeKind::Horizontal, EdgeKind::Vertical] {
            let row: Vec<T> = (0..ne)
                .map(|e| {
                    if ix.tau[e] == kind {
                        T::of(r[e] as f64)
                    } else {
                        T::zero()
                    }
                })
                .collect();
            if row.iter().any(|v| *v != T::zero()) {
                rows.push(row);
            }
        }
    }
    for c in &d.extra_linear_constraints {
        rows.push(c.iter().map(|&v| T::of(v)).collect());
    }
    rows
}

/// Build [`VCSpace`] from a valid datum.
pub fn build_vc_space<T: Real>(datum: Arc<ConfigurationDatum>) -> Result<VCSpace<T>, ConfigError> {
    let report = validate_datum(&datum)?;
    if !report.ok {
        let failed: Vec<&str> = report
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.as_str())
            .collect();
        return Err(ConfigError::InvalidDatum(failed.join(", ")));
    }
    let ix = index_datum(&datum)?;
    let rows = constraint_rows::<T>(&datum, &ix);
    let ne = datum.edges.len();
    // With no constraints the space is all of ℝ^E; the nullspace routine
    // cannot learn the ambient dimension from an empty row list.
    let basis = if rows.is_empty() {
        (0..ne)
            .map(|i| {
                let mut v = vec![T::zero(); ne];
                v[i] = T::one();
                v
            })
            .collect()
    } else {
        crate::reallinalg::nullspace(&rows, T::of(REAL_RANK_TOL))
    };
    // Cross-check the dimension against the singular-value rank.
    let svd_rank = if rows.is_empty() {
        0
    } else {
        real_rank(&rows, T::of(REAL_RANK_TOL))
    };
    if basis.len() + svd_rank != ne {
        return Err(ConfigError::InvalidDatum(format!(
            "constraint system is numerically ill-conditioned: nullity {} + rank {svd_rank} != {ne}",
            basis.len()
        )));
    }
    let dim = basis.len();
    Ok(VCSpace { datum, basis, dim })
}

/// Affine chart of the scale-fixed slice `{x_{e0} = 1}` of the positive
/// cone, parametrized by free edge coordinates.
#[derive(Debug, Clone)]
pub struct SliceChart<T: Real> {
    pub space: VCSpace<T>,
    pub e0: String,
    /// Names of the free edge coordinates, in edge order.
    pub params: Vec<String>,
    x0: Vec<T>,
    /// One direction vector (length |E|) per parameter.
    dirs: Vec<Vec<T>>,
    /// Strict per-edge lower bounds; the default cone bound is 0.
    lower: Vec<T>,
}

impl<T: Real> SliceChart<T> {
    pub fn dim(&self) -> usize {
        self.params.len()
    }

    pub fn edge_names(&self) -> &[String] {
        &self.space.datum.edges
    }

    /// Edge-coordinate point for chart parameters `q`.
    pub fn embed(&self, q: &[T]) -> Result<Vec<T>, ConfigError> {
        if q.len() != self.params.len() {
            return Err(ConfigError::DimensionMismatch {
                expected: self.params.len(),
                got: q.len(),
            });
        }
        let mut x = self.x0.clone();
        for (dir, &qk) in self.dirs.iter().zip(q.iter()) {
            for (xe, de) in x.iter_mut().zip(dir.iter()) {
                *xe = *xe + qk * *de;
            }
        }
        Ok(x)
    }

    /// Strict interior test: every edge coordinate exceeds its lower bound.
    pub fn in_domain(&self, q: &[T]) -> bool {
        match self.embed(q) {
            Ok(x) => x
                .iter()
                .zip(self.lower.iter())
                .all(|(xe, lo)| *xe > *lo),
            Err(_) => false,
        }
    }

    pub fn lower_bounds(&self) -> &[T] {
        &self.lower
    }

    /// Replace per-edge lower bounds (strict). Re-checks that the chart
    /// still meets the shrunken cone.
    pub fn with_lower_bounds(mut self, bounds: BTreeMap<String, T>) -> Result<Self, ConfigError> {
        for (name, lo) in bounds {
            let Some(i) = self.space.datum.edge_index(&name) else {
                return Err(ConfigError::Malformed(format!(
                    "lower bound for unknown edge '{name}'"
                )));
            };
            self.lower[i] = lo;
        }
        let margin = strict_feasibility(&self.x0, &self.dirs, &self.lower);
        if margin <= T::of(FEASIBILITY_MARGIN) {
            return Err(ConfigError::EmptySlice(self.e0.clone()));
        }
        Ok(self)
    }
}

/// Maximize the interior margin `t` with `x_e(q) - lo_e >= t` and `t <= 1`
/// by enumerating the vertices of the small polyhedron in `(q, t)`. The
/// problem is feasible and pointed, so the optimum sits on a vertex; any
/// strictly positive value certifies that the open region is nonempty.
fn strict_feasibility<T: Real>(x0: &[T], dirs: &[Vec<T>], lower: &[T]) -> T {
    let nf = dirs.len();
    let nvar = nf + 1;
    let ne = x0.len();
    // Rows g·y <= rhs with y = (q, t).
    let mut rows: Vec<(Vec<T>, T)> = Vec::with_capacity(ne + 1);
    for e in 0..ne {
        let mut g = vec![T::zero(); nvar];
        for (k, dir) in dirs.iter().enumerate() {
            g[k] = -dir[e];
        }
        g[nf] = T::one();
        rows.push((g, x0[e] - lower[e]));
    }
    let mut cap = vec![T::zero(); nvar];
    cap[nf] = T::one();
    rows.push((cap, T::one()));

    let mut best = T::neg_infinity();
    let mut active = vec![0usize; nvar];
    // Enumerate all nvar-subsets of the constraints.
    fn visit<T: Real>(
        rows: &[(Vec<T>, T)],
        active: &mut Vec<usize>,
        depth: usize,
        start: usize,
        best: &mut T,
    ) {
        let nvar = active.len();
        if depth == nvar {
            let a: Vec<Vec<T>> = active.iter().map(|&i| rows[i].0.clone()).collect();
            let b: Vec<T> = active.iter().map(|&i| rows[i].1).collect();
            if let Some(y) = solve_square(&a, &b, T::of(1e-12)) {
                let feas_tol = T::of(1e-9);
                let feasible = rows
                    .iter()
                    .all(|(g, rhs)| {
                        let lhs: T = g.iter().zip(y.iter()).map(|(gi, yi)| *gi * *yi).sum();
                        lhs <= *rhs + feas_tol
                    });
                if feasible && y[nvar - 1] > *best {
                    *best = y[nvar - 1];
                }
            }
            return;
        }
        for i in start..rows.len() {
            active[depth] = i;
            visit(rows, active, depth + 1, i + 1, best);
        }
    }
    visit(&rows, &mut active, 0, 0, &mut best);
    if best == T::neg_infinity() {
        T::zero()
    } else {
        best
    }
}

/// Build the scale-fixed slice chart. `e0_override` takes precedence over
/// the datum's `e0` field, which in turn defaults to the first horizontal
/// edge in order.
pub fn build_slice_chart<T: Real>(
    datum: Arc<ConfigurationDatum>,
    e0_override: Option<&str>,
) -> Result<SliceChart<T>, ConfigError> {
    let space = build_vc_space::<T>(datum.clone())?;
    let e0 = match e0_override {
        Some(e) => e.to_string(),
        None => datum
            .resolve_e0()
            .ok_or_else(|| ConfigError::E0NotHorizontal("<no horizontal edge>".into()))?,
    };
    let Some(e0_idx) = datum.edge_index(&e0) else {
        return Err(ConfigError::Malformed(format!("e0 = '{e0}' is not an edge")));
    };
    if datum.tau.get(&e0) != Some(&EdgeKind::Horizontal) {
        return Err(ConfigError::E0NotHorizontal(e0));
    }

    let ix = index_datum(&datum)?;
    let ne = datum.edges.len();
    let mut rows = constraint_rows::<T>(&datum, &ix);
    let mut rhs = vec![T::zero(); rows.len()];
    let mut e0_row = vec![T::zero(); ne];
    e0_row[e0_idx] = T::one();
    rows.push(e0_row);
    rhs.push(T::one());

    let Some(sol) = solve_affine(&rows, &rhs, T::of(REAL_RANK_TOL)) else {
        // x_{e0} vanishes identically on the solution space.
        return Err(ConfigError::EmptySlice(e0));
    };
    if sol.directions.len() + 1 != space.dim {
        return Err(ConfigError::InvalidDatum(format!(
            "slice dimension {} inconsistent with space dimension {}",
            sol.directions.len(),
            space.dim
        )));
    }

    let mut x0 = sol.x0;
    let mut dirs = sol.directions;
    // The slice equation forces x_{e0} = 1 identically; snap away rounding.
    debug_assert!((x0[e0_idx] - T::one()).abs() < T::of(1e-9));
    x0[e0_idx] = T::one();
    for d in dirs.iter_mut() {
        debug_assert!(d[e0_idx].abs() < T::of(1e-9));
        d[e0_idx] = T::zero();
    }
    let params: Vec<String> = sol.free.iter().map(|&f| datum.edges[f].clone()).collect();
    let lower = vec![T::zero(); ne];

    let margin = strict_feasibility(&x0, &dirs, &lower);
    if margin <= T::of(FEASIBILITY_MARGIN) {
        return Err(ConfigError::EmptySlice(e0));
    }

    Ok(SliceChart {
        space,
        e0,
        params,
        x0,
        dirs,
        lower,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::dumbbell_datum;

    fn toy_two_edge() -> ConfigurationDatum {
        // E = {e1 (h), e2 (v)}, iota = identity into a rank-2 lattice.
        ConfigurationDatum {
            genus: 1,
            punctures: 0,
            edges: vec!["e1".into(), "e2".into()],
            iota: BTreeMap::from([
                ("e1".to_string(), vec![1, 0]),
                ("e2".to_string(), vec![0, 1]),
            ]),
            relations: vec![],
            extra_linear_constraints: vec![],
            tau: BTreeMap::from([
                ("e1".to_string(), EdgeKind::Horizontal),
                ("e2".to_string(), EdgeKind::Vertical),
            ]),
            sigma: BTreeMap::from([
                ("e1".to_string(), "e1".to_string()),
                ("e2".to_string(), "e2".to_string()),
            ]),
            e0: None,
        }
    }

    /// Three edges onto a rank-1 lattice; kernel has rank 2.
    fn toy_three_to_one(relations: Vec<Vec<i64>>) -> ConfigurationDatum {
        ConfigurationDatum {
            genus: 0,
            punctures: 2,
            edges: vec!["e1".into(), "e2".into(), "e3".into()],
            iota: BTreeMap::from([
                ("e1".to_string(), vec![1]),
                ("e2".to_string(), vec![1]),
                ("e3".to_string(), vec![1]),
            ]),
            relations,
            extra_linear_constraints: vec![],
            tau: BTreeMap::from([
                ("e1".to_string(), EdgeKind::Horizontal),
                ("e2".to_string(), EdgeKind::Horizontal),
                ("e3".to_string(), EdgeKind::Horizontal),
            ]),
            sigma: BTreeMap::from([
                ("e1".to_string(), "e1".to_string()),
                ("e2".to_string(), "e2".to_string()),
                ("e3".to_string(), "e3".to_string()),
            ]),
            e0: None,
        }
    }

    #[test]
    fn dumbbell_datum_is_valid() {
        let report = validate_datum(&dumbbell_datum()).unwrap();
        assert!(report.ok, "{report:?}");
        for name in [
            "sigma_bijection",
            "tau_sigma_compat",
            "iota_generates",
            "relations_in_kernel",
            "relations_generate_kernel",
        ] {
            assert!(report.check(name).unwrap().passed, "{name}");
        }
    }

    #[test]
    fn sigma_swapping_h_and_v_fails_compat() {
        let mut d = dumbbell_datum();
        d.sigma.insert("a1".into(), "b1".into());
        d.sigma.insert("b1".into(), "a1".into());
        let report = validate_datum(&d).unwrap();
        assert!(!report.ok);
        assert!(!report.check("tau_sigma_compat").unwrap().passed);
    }

    #[test]
    fn doubled_iota_fails_generation() {
        let mut d = toy_two_edge();
        d.iota.insert("e1".into(), vec![2, 0]);
        let report = validate_datum(&d).unwrap();
        assert!(!report.check("iota_generates").unwrap().passed);
        assert!(report
            .check("iota_generates")
            .unwrap()
            .message
            .contains("invariant factors"));
    }

    #[test]
    fn truncated_iota_vector_is_malformed() {
        let mut d = toy_two_edge();
        d.iota.insert("e1".into(), vec![1]);
        match validate_datum(&d) {
            Err(ConfigError::Malformed(msg)) => assert!(msg.contains("iota['e1']")),
            other => panic!("expected Malformed, got {other:?}"),
        }
    }

    #[test]
    fn relation_outside_kernel_is_flagged() {
        let d = toy_three_to_one(vec![vec![1, 1, 0]]);
        let report = validate_datum(&d).unwrap();
        assert!(!report.check("relations_in_kernel").unwrap().passed);
        assert!(!report.check("relations_generate_kernel").unwrap().passed);
    }

    #[test]
    fn kernel_generation_requires_full_lattice() {
        // Kernel rank 2; a single generator is not enough.
        let d = toy_three_to_one(vec![vec![1, -1, 0]]);
        let report = validate_datum(&d).unwrap();
        assert!(report.check("relations_in_kernel").unwrap().passed);
        assert!(!report.check("relations_generate_kernel").unwrap().passed);

        // Full basis passes.
        let d = toy_three_to_one(vec![vec![1, -1, 0], vec![1, 0, -1]]);
        assert!(validate_datum(&d).unwrap().ok);

        // Same rank but index-2 sublattice fails the exact check.
        let d = toy_three_to_one(vec![vec![2, -2, 0], vec![0, 1, -1]]);
        let report = validate_datum(&d).unwrap();
        assert!(!report.check("relations_generate_kernel").unwrap().passed);
    }

    #[test]
    fn vc_space_of_free_datum_is_full() {
        let space = build_vc_space::<f64>(Arc::new(toy_two_edge())).unwrap();
        assert_eq!(space.dim, 2);
    }

    #[test]
    fn relation_cuts_vc_dimension() {
        // Four edges onto rank 3 with kernel (1,-1,0,0).
        let d = ConfigurationDatum {
            genus: 1,
            punctures: 2,
            edges: vec!["a1".into(), "a2".into(), "b1".into(), "b2".into()],
            iota: BTreeMap::from([
                ("a1".to_string(), vec![1, 0, 0]),
                ("a2".to_string(), vec![1, 0, 0]),
                ("b1".to_string(), vec![0, 1, 0]),
                ("b2".to_string(), vec![0, 0, 1]),
            ]),
            relations: vec![vec![1, -1, 0, 0]],
            extra_linear_constraints: vec![],
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
        };
        let space = build_vc_space::<f64>(Arc::new(d)).unwrap();
        assert_eq!(space.dim, 3);
        // Every basis vector satisfies the relation on the horizontal part.
        for v in &space.basis {
            assert!((v[0] - v[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn dumbbell_chart_has_expected_shape() {
        let chart = build_slice_chart::<f64>(Arc::new(dumbbell_datum()), None).unwrap();
        assert_eq!(chart.e0, "a1");
        assert_eq!(chart.params, vec!["b1".to_string(), "b2".to_string()]);
        let x = chart.embed(&[2.0, 3.0]).unwrap();
        assert_eq!(x, vec![1.0, 1.0, 2.0, 3.0]);
        assert!(chart.in_domain(&[2.0, 3.0]));
        assert!(!chart.in_domain(&[-1.0, 3.0]));
        // x_{e0} is exactly 1 everywhere.
        let y = chart.embed(&[0.37, 11.25]).unwrap();
        assert_eq!(y[0], 1.0);
    }

    #[test]
    fn antipodal_relation_empties_the_cone() {
        // iota = (1, -1, 1): the kernel contains (1, 1, 0), which forces
        // x1 + x2 = 0 — opposite signs, so the positive cone is missed.
        let mut d = toy_three_to_one(vec![vec![1, 1, 0], vec![1, 0, -1]]);
        d.iota.insert("e2".into(), vec![-1]);
        let report = validate_datum(&d).unwrap();
        assert!(report.ok, "{report:?}");
        match build_slice_chart::<f64>(Arc::new(d), None) {
            Err(ConfigError::EmptySlice(e0)) => assert_eq!(e0, "e1"),
            other => panic!("expected EmptySlice, got {other:?}"),
        }
    }

    #[test]
    fn zero_dimensional_chart_is_a_single_point() {
        // One horizontal edge, rank-1 lattice.
        let d = ConfigurationDatum {
            genus: 0,
            punctures: 2,
            edges: vec!["e1".into()],
            iota: BTreeMap::from([("e1".to_string(), vec![1])]),
            relations: vec![],
            extra_linear_constraints: vec![],
            tau: BTreeMap::from([("e1".to_string(), EdgeKind::Horizontal)]),
            sigma: BTreeMap::from([("e1".to_string(), "e1".to_string())]),
            e0: None,
        };
        let chart = build_slice_chart::<f64>(Arc::new(d), None).unwrap();
        assert_eq!(chart.dim(), 0);
        assert_eq!(chart.embed(&[]).unwrap(), vec![1.0]);
    }

    #[test]
    fn vertical_e0_is_rejected() {
        let chart = build_slice_chart::<f64>(Arc::new(dumbbell_datum()), Some("b1"));
        match chart {
            Err(ConfigError::E0NotHorizontal(e)) => assert_eq!(e, "b1"),
            other => panic!("expected E0NotHorizontal, got {other:?}"),
        }
    }
}
