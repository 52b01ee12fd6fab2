//! Centroid computation: projection of an iterate onto the least-squares
//! solution set of its bound partition, with two selection rules.
//!
//! For a partition `(I0, I1, J)` the centroid set is the affine set of
//! minimizers of `‖Ay − b‖` with coordinates held at their bounds on
//! `I0 ∪ I1`, equivalently `{y ∈ L(I0, I1) : (A^J)ᵀ(Ay − b) = 0}`. The
//! `Oblivious` rule returns the member whose free part has minimum norm; the
//! `LocalNorm` rule returns the member nearest to the current point in the
//! diagonal norm with weights `1/x(i)` (plus `1/(u(i) − x(i))` for finite
//! bounds), which penalizes moving coordinates that sit close to a bound.

use crate::error::Result;
use crate::instance::Instance;
use crate::iterate::Iterate;
use crate::linalg::{self, min_norm_least_squares, weighted_constrained_ls};

/// Selection rule for the centroid mapping.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CentroidMapping {
    /// Minimum-norm member of the centroid set (free coordinates only).
    Oblivious,
    /// Member nearest to the current point in the local diagonal norm.
    LocalNorm,
}

/// Cap on local-norm weights. Any positive diagonal gives a valid mapping,
/// so the cap only needs to keep the column scaling of the weighted solve
/// within the range where the rank-revealing factorization can still tell
/// deliberately small columns from numerically dependent ones
/// (`linalg::RANK_REL_TOL` is 1e-10; 1e6 leaves three orders of margin).
pub const WEIGHT_CAP: f64 = 1e6;

/// Local-norm diagonal weights on the free coordinates of `it`.
fn local_weights(inst: &Instance, it: &Iterate) -> Vec<f64> {
    it.partition()
        .free
        .iter()
        .map(|&i| {
            let xi = it.x()[i];
            let ui = inst.u()[i];
            let mut w = 1.0 / xi;
            if ui.is_finite() {
                w += 1.0 / (ui - xi);
            }
            w.min(WEIGHT_CAP)
        })
        .collect()
}

/// Right-hand side seen by the free columns: `b` minus the contribution of
/// the coordinates fixed at a finite upper bound.
fn effective_rhs(inst: &Instance, it: &Iterate) -> Vec<f64> {
    let mut rhs = inst.b().to_vec();
    for &i in &it.partition().upper {
        let ui = inst.u()[i];
        for (row, r) in rhs.iter_mut().enumerate() {
            *r -= ui * inst.a().get(row, i);
        }
    }
    rhs
}

/// Returns the centroid of `it`'s partition under the chosen mapping.
/// Coordinates on `I0`/`I1` stay exactly at their bounds; for an empty free
/// set the centroid set is the single point `x` itself.
///
/// The local-norm output is validated against the free-column normal
/// equations; if extreme weight spreads degrade the weighted solve, the
/// oblivious member is returned instead (any centroid-set member keeps the
/// solve correct, the mapping only steers efficiency).
pub fn centroid(inst: &Instance, it: &Iterate, mapping: CentroidMapping) -> Result<Vec<f64>> {
    let free = &it.partition().free;
    if free.is_empty() {
        return Ok(it.x().to_vec());
    }
    let a_j = inst.a().columns(free);
    let rhs = effective_rhs(inst, it);
    let y_free = match mapping {
        CentroidMapping::Oblivious => min_norm_least_squares(&a_j, &rhs)?,
        CentroidMapping::LocalNorm => {
            let anchor: Vec<f64> = free.iter().map(|&i| it.x()[i]).collect();
            let weights = local_weights(inst, it);
            let y = weighted_constrained_ls(&a_j, &rhs, &anchor, &weights)?;
            if normal_eq_residual(&a_j, &rhs, &y) <= 1e-8 * (1.0 + linalg::norm2(inst.b())) {
                y
            } else {
                min_norm_least_squares(&a_j, &rhs)?
            }
        }
    };
    let mut w = it.x().to_vec();
    for (k, &i) in free.iter().enumerate() {
        w[i] = y_free[k];
    }
    Ok(w)
}

/// `‖(A^J)ᵀ(A^J y − rhs)‖∞`, the defining residual of the centroid set.
fn normal_eq_residual(a_j: &crate::linalg::Matrix, rhs: &[f64], y: &[f64]) -> f64 {
    let ay = crate::linalg::mat_vec(a_j, y).expect("dimensions agree");
    let res: Vec<f64> = ay.iter().zip(rhs).map(|(p, q)| p - q).collect();
    let g = crate::linalg::mat_t_vec(a_j, &res).expect("dimensions agree");
    linalg::norm_inf(&g)
}

/// A point is stable when the centroid mapping leaves it in place:
/// `‖ctr(x) − x‖∞ ≤ tol · (1 + ‖x‖∞)`.
pub fn is_stable(
    inst: &Instance,
    it: &Iterate,
    mapping: CentroidMapping,
    tol: f64,
) -> Result<bool> {
    let w = centroid(inst, it, mapping)?;
    let diff: Vec<f64> = w.iter().zip(it.x()).map(|(a, b)| a - b).collect();
    Ok(linalg::norm_inf(&diff) <= tol * (1.0 + linalg::norm_inf(it.x())))
}
