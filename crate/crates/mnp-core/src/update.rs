//! The first-order update step that opens every major cycle, in three
//! variants: Frank-Wolfe, projected gradient, and single-coordinate.
//!
//! Every variant honors the same contract: the result is unmoved exactly
//! when the input passes the first-order optimality check, and otherwise the
//! returned point strictly decreases the objective and is optimal on the
//! segment between input and output (exact line search, clamped to the
//! feasible part of the segment).

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::iterate::{check_optimality, gradient, make_iterate, Iterate};
use crate::linalg::{self, mat_vec};

/// Step-length policy for the projected-gradient rule.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PgStep {
    /// Exact line search along the clipped gradient direction. Only
    /// available on uncapacitated instances; capacitated solves fall back to
    /// the fixed step.
    OptimalLineSearch,
    /// Fixed step length followed by an exact line search on the segment to
    /// the projected point.
    Fixed(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UpdateRuleKind {
    FrankWolfe,
    ProjectedGradient,
    Coordinate,
}

/// Update rule selection. Frank-Wolfe requires all upper bounds finite.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UpdateRule {
    pub kind: UpdateRuleKind,
    pub pg_step: PgStep,
}

impl UpdateRule {
    pub fn frank_wolfe() -> Self {
        Self {
            kind: UpdateRuleKind::FrankWolfe,
            pg_step: PgStep::OptimalLineSearch,
        }
    }

    pub fn projected_gradient() -> Self {
        Self {
            kind: UpdateRuleKind::ProjectedGradient,
            pg_step: PgStep::OptimalLineSearch,
        }
    }

    pub fn coordinate() -> Self {
        Self {
            kind: UpdateRuleKind::Coordinate,
            pg_step: PgStep::OptimalLineSearch,
        }
    }
}

/// Outcome of one update step.
#[derive(Clone, Debug)]
pub struct UpdateResult {
    pub iterate: Iterate,
    /// False exactly when the input point is first-order optimal; in that
    /// case `iterate` is the unchanged input.
    pub moved: bool,
    /// Magnitude of the chosen direction: `‖z‖` for projected gradient,
    /// `z(j)` (or `|g(j)|` when capacitated) for coordinate, the duality gap
    /// `⟨g, x − ȳ⟩` for Frank-Wolfe. Zero when unmoved.
    pub direction_norm: f64,
    /// Exact objective decrease predicted by the line-search formula, where
    /// one exists (`‖z‖⁴/(2‖Az‖²)` for NNLS projected gradient,
    /// `z(j)²/(2‖A^j‖²)` for an unclamped coordinate step).
    pub predicted_drop: Option<f64>,
}

fn unmoved(it: &Iterate) -> UpdateResult {
    UpdateResult {
        iterate: it.clone(),
        moved: false,
        direction_norm: 0.0,
        predicted_drop: None,
    }
}

/// Clipped-gradient direction `z(i) = max(-g(i), 0)` for NNLS instances at a
/// stable point. Calling this on a capacitated instance is a contract
/// violation.
pub fn pg_direction(inst: &Instance, it: &Iterate) -> Result<Vec<f64>> {
    if !inst.is_uncapacitated() {
        return Err(Error::RequiresUncapacitated);
    }
    Ok(gradient(inst, it).iter().map(|&g| (-g).max(0.0)).collect())
}

/// Projected-gradient update with exact line search for NNLS:
/// `y = x + (‖z‖²/‖Az‖²) z`. Requires a stable iterate.
pub fn pg_update(
    inst: &Instance,
    it: &Iterate,
    opt_tol: f64,
    snap_tol: f64,
) -> Result<UpdateResult> {
    if !inst.is_uncapacitated() {
        return Err(Error::RequiresUncapacitated);
    }
    if check_optimality(inst, it, opt_tol).is_optimal() {
        return Ok(unmoved(it));
    }
    let z = pg_direction(inst, it)?;
    let z_sq = linalg::norm_sq(&z);
    let az = mat_vec(inst.a(), &z)?;
    let az_sq = linalg::norm_sq(&az);
    if az_sq == 0.0 {
        return Err(Error::DegenerateDirection(
            "projected-gradient direction lies in the kernel of A".into(),
        ));
    }
    let step = z_sq / az_sq;
    let y: Vec<f64> = it.x().iter().zip(&z).map(|(x, zi)| x + step * zi).collect();
    let iterate = make_iterate(inst, &y, snap_tol)?;
    Ok(UpdateResult {
        iterate,
        moved: true,
        direction_norm: z_sq.sqrt(),
        predicted_drop: Some(z_sq * z_sq / (2.0 * az_sq)),
    })
}

/// Fixed-step projected gradient for general bounds: clip `x − λg` to the
/// box, then take the exact minimizer on the segment from `x` to the clipped
/// point.
pub fn capacitated_pg_update(
    inst: &Instance,
    it: &Iterate,
    lambda: f64,
    opt_tol: f64,
    snap_tol: f64,
) -> Result<UpdateResult> {
    if check_optimality(inst, it, opt_tol).is_optimal() {
        return Ok(unmoved(it));
    }
    let g = gradient(inst, it);
    let d: Vec<f64> = it
        .x()
        .iter()
        .zip(&g)
        .zip(inst.u())
        .map(|((&x, &gi), &u)| (x - lambda * gi).clamp(0.0, u) - x)
        .collect();
    step_along(inst, it, &d, linalg::norm2(&d), None, snap_tol)
}

/// Frank-Wolfe update: linear minimizer over the box with the keep-in-place
/// rule on zero gradient entries, then exact line search on the segment.
/// Requires every upper bound finite.
pub fn fw_update(
    inst: &Instance,
    it: &Iterate,
    opt_tol: f64,
    snap_tol: f64,
) -> Result<UpdateResult> {
    if !inst.all_bounds_finite() {
        return Err(Error::InfiniteBound);
    }
    if check_optimality(inst, it, opt_tol).is_optimal() {
        return Ok(unmoved(it));
    }
    let g = gradient(inst, it);
    // Entries with |g| inside the tolerance band stay put; resolving the
    // linear-minimizer tie any other way can unfix coordinates of a stable
    // input and break the fixpoint contract.
    let d: Vec<f64> = it
        .x()
        .iter()
        .zip(&g)
        .zip(inst.u())
        .map(|((&x, &gi), &u)| {
            if gi > opt_tol {
                -x
            } else if gi < -opt_tol {
                u - x
            } else {
                0.0
            }
        })
        .collect();
    let fw_gap = -linalg::dot(&g, &d);
    if fw_gap <= 0.0 {
        return Err(Error::NumericalFault(
            "frank-wolfe gap not positive at a non-optimal point".into(),
        ));
    }
    step_along(inst, it, &d, fw_gap, None, snap_tol)
}

/// Single-coordinate update. NNLS: move the coordinate with the largest
/// clipped gradient entry to its one-dimensional minimizer (smallest index
/// on ties). Capacitated: pick the worst violated bound coordinate and move
/// it to the clamped one-dimensional minimizer.
pub fn coordinate_update(
    inst: &Instance,
    it: &Iterate,
    opt_tol: f64,
    snap_tol: f64,
) -> Result<UpdateResult> {
    if check_optimality(inst, it, opt_tol).is_optimal() {
        return Ok(unmoved(it));
    }
    let g = gradient(inst, it);
    if inst.is_uncapacitated() {
        let z: Vec<f64> = g.iter().map(|&gi| (-gi).max(0.0)).collect();
        let (j, &zj) = z
            .iter()
            .enumerate()
            .max_by(|(i, a), (k, b)| a.partial_cmp(b).unwrap().then(k.cmp(i)))
            .expect("n >= 1");
        if zj <= 0.0 {
            return Err(Error::NumericalFault(
                "coordinate direction vanished at a non-optimal point".into(),
            ));
        }
        let col_sq = inst.a().col_norm_sq(j);
        if col_sq == 0.0 {
            return Err(Error::DegenerateDirection(format!(
                "column {j} of A is zero"
            )));
        }
        let mut y = it.x().to_vec();
        y[j] += zj / col_sq;
        let iterate = make_iterate(inst, &y, snap_tol)?;
        return Ok(UpdateResult {
            iterate,
            moved: true,
            direction_norm: zj,
            predicted_drop: Some(zj * zj / (2.0 * col_sq)),
        });
    }
    // Capacitated: eligible coordinates sit at a bound with the gradient
    // pointing inward; at a stable point the free gradient vanishes, so
    // these are the only candidates.
    let mut best: Option<(usize, f64)> = None;
    for &i in &it.partition().lower {
        if g[i] < -opt_tol && best.is_none_or(|(_, s)| -g[i] > s) {
            best = Some((i, -g[i]));
        }
    }
    for &i in &it.partition().upper {
        if g[i] > opt_tol && best.is_none_or(|(_, s)| g[i] > s) {
            best = Some((i, g[i]));
        }
    }
    let (j, score) = best.ok_or_else(|| {
        Error::NumericalFault("no eligible coordinate at a non-optimal stable point".into())
    })?;
    let col_sq = inst.a().col_norm_sq(j);
    if col_sq == 0.0 {
        return Err(Error::DegenerateDirection(format!(
            "column {j} of A is zero"
        )));
    }
    let target = it.x()[j] - g[j] / col_sq;
    let clamped = target.clamp(0.0, inst.u()[j]);
    let mut y = it.x().to_vec();
    y[j] = clamped;
    let iterate = make_iterate(inst, &y, snap_tol)?;
    let predicted = if clamped == target {
        Some(g[j] * g[j] / (2.0 * col_sq))
    } else {
        None
    };
    Ok(UpdateResult {
        iterate,
        moved: true,
        direction_norm: score,
        predicted_drop: predicted,
    })
}

/// Exact line search from `it` along direction `d`, clamped to `[0, 1]`.
fn step_along(
    inst: &Instance,
    it: &Iterate,
    d: &[f64],
    direction_norm: f64,
    predicted_drop: Option<f64>,
    snap_tol: f64,
) -> Result<UpdateResult> {
    let ad = mat_vec(inst.a(), d)?;
    let ad_sq = linalg::norm_sq(&ad);
    if ad_sq == 0.0 {
        return Err(Error::DegenerateDirection(
            "update direction lies in the kernel of A".into(),
        ));
    }
    let slope = linalg::dot(&ad, it.residual());
    let t = (-slope / ad_sq).clamp(0.0, 1.0);
    if t == 0.0 {
        return Err(Error::NumericalFault(
            "line search stalled on a descent direction".into(),
        ));
    }
    let y: Vec<f64> = it.x().iter().zip(d).map(|(x, di)| x + t * di).collect();
    let iterate = make_iterate(inst, &y, snap_tol)?;
    Ok(UpdateResult {
        iterate,
        moved: true,
        direction_norm,
        predicted_drop,
    })
}

/// Dispatches the configured rule. `lambda` is the fixed projected-gradient
/// step used when an optimal line search is unavailable (capacitated
/// instances); callers typically pass `1/‖A‖²`.
pub fn apply(
    inst: &Instance,
    it: &Iterate,
    rule: &UpdateRule,
    lambda: f64,
    opt_tol: f64,
    snap_tol: f64,
) -> Result<UpdateResult> {
    match rule.kind {
        UpdateRuleKind::FrankWolfe => fw_update(inst, it, opt_tol, snap_tol),
        UpdateRuleKind::Coordinate => coordinate_update(inst, it, opt_tol, snap_tol),
        UpdateRuleKind::ProjectedGradient => match rule.pg_step {
            PgStep::OptimalLineSearch if inst.is_uncapacitated() => {
                pg_update(inst, it, opt_tol, snap_tol)
            }
            PgStep::OptimalLineSearch => capacitated_pg_update(inst, it, lambda, opt_tol, snap_tol),
            PgStep::Fixed(l) => capacitated_pg_update(inst, it, l, opt_tol, snap_tol),
        },
    }
}

/// Stabilizes an iterate for tests: repeatedly apply the centroid mapping
/// with boundary clamping until it no longer moves.
#[cfg(test)]
pub(crate) fn stabilize_for_tests(
    inst: &Instance,
    mut it: Iterate,
    mapping: crate::centroid::CentroidMapping,
) -> Iterate {
    use crate::centroid;
    for _ in 0..inst.n() + 2 {
        let w = centroid::centroid(inst, &it, mapping).unwrap();
        let diff: Vec<f64> = w.iter().zip(it.x()).map(|(a, b)| a - b).collect();
        if linalg::norm_inf(&diff) <= 1e-12 * (1.0 + linalg::norm_inf(it.x())) {
            break;
        }
        let alpha = crate::solver::alpha_star(it.x(), &w, inst.u());
        let y: Vec<f64> = it
            .x()
            .iter()
            .zip(&w)
            .map(|(x, wi)| x + alpha * (wi - x))
            .collect();
        it = make_iterate(inst, &y, 1e-12).unwrap();
    }
    it
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::centroid::CentroidMapping;
    use crate::linalg::Matrix;
    use proptest::prelude::*;

    const TOL: f64 = 1e-9;

    fn nnls(a: Matrix, b: Vec<f64>) -> Instance {
        let n = a.cols();
        Instance::new(a, b, vec![f64::INFINITY; n]).unwrap()
    }

    fn boxed(a: Matrix, b: Vec<f64>, u: f64) -> Instance {
        let n = a.cols();
        Instance::new(a, b, vec![u; n]).unwrap()
    }

    fn at(inst: &Instance, x: &[f64]) -> Iterate {
        make_iterate(inst, x, 1e-12).unwrap()
    }

    #[test]
    fn pg_direction_clips_gradient() {
        // A = I3, b chosen so g = (-1, 2, 0) at the origin... g = -b, so
        // b = (1, -2, 0).
        let inst = nnls(Matrix::identity(3), vec![1.0, -2.0, 0.0]);
        let it = at(&inst, &[0.0; 3]);
        assert_eq!(pg_direction(&inst, &it).unwrap(), vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn pg_direction_zero_at_optimum() {
        let inst = nnls(Matrix::identity(2), vec![-1.0, -2.0]);
        let it = at(&inst, &[0.0, 0.0]);
        assert_eq!(pg_direction(&inst, &it).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn pg_direction_rejects_capacitated() {
        let inst = boxed(Matrix::identity(2), vec![1.0, 1.0], 1.0);
        let it = at(&inst, &[0.0, 0.0]);
        assert!(matches!(
            pg_direction(&inst, &it),
            Err(Error::RequiresUncapacitated)
        ));
    }

    #[test]
    fn pg_update_identity_reaches_optimum() {
        let inst = nnls(Matrix::identity(2), vec![1.0, 0.0]);
        let it = at(&inst, &[0.0, 0.0]);
        let res = pg_update(&inst, &it, TOL, 1e-12).unwrap();
        assert!(res.moved);
        assert_eq!(res.iterate.x(), &[1.0, 0.0]);
        assert!(res.iterate.objective() <= 1e-16);
    }

    #[test]
    fn pg_update_unmoved_at_optimum() {
        let inst = nnls(Matrix::identity(2), vec![-1.0, -2.0]);
        let it = at(&inst, &[0.0, 0.0]);
        let res = pg_update(&inst, &it, TOL, 1e-12).unwrap();
        assert!(!res.moved);
        assert_eq!(res.iterate.x(), it.x());
    }

    #[test]
    fn pg_update_wide_row() {
        // z = (2, 2), step = 8/16, y = (1, 1).
        let inst = nnls(Matrix::from_rows(&[vec![1.0, 1.0]]).unwrap(), vec![2.0]);
        let it = at(&inst, &[0.0, 0.0]);
        let res = pg_update(&inst, &it, TOL, 1e-12).unwrap();
        assert_eq!(res.iterate.x(), &[1.0, 1.0]);
        let drop = it.objective() - res.iterate.objective();
        let predicted = res.predicted_drop.unwrap();
        assert!((drop - predicted).abs() <= 1e-8 * predicted.max(1e-300));
    }

    #[test]
    fn capacitated_pg_clips_and_searches() {
        // 1-D: A = [1], b = 2, u = 1, x = 0, big lambda: clipped target is 1,
        // objective decreasing all the way, so y = 1.
        let inst = boxed(Matrix::from_rows(&[vec![1.0]]).unwrap(), vec![2.0], 1.0);
        let it = at(&inst, &[0.0]);
        let res = capacitated_pg_update(&inst, &it, 10.0, TOL, 1e-12).unwrap();
        assert_eq!(res.iterate.x(), &[1.0]);
    }

    #[test]
    fn capacitated_pg_unmoved_when_gradient_zero() {
        let inst = boxed(Matrix::identity(2), vec![0.5, 0.5], 1.0);
        let it = at(&inst, &[0.5, 0.5]);
        let res = capacitated_pg_update(&inst, &it, 1.0, TOL, 1e-12).unwrap();
        assert!(!res.moved);
    }

    #[test]
    fn fw_vertex_follows_sign_rule_with_keep() {
        // Want g = (-1, 2, 0) at x = (0.3, 0.7, 0.4) under A = I3:
        // g = x - b, so b = x - g = (1.3, -1.3, 0.4).
        let inst = boxed(Matrix::identity(3), vec![1.3, -1.3, 0.4], 1.0);
        let it = at(&inst, &[0.3, 0.7, 0.4]);
        let res = fw_update(&inst, &it, TOL, 1e-12).unwrap();
        assert!(res.moved);
        // Direction toward the vertex (1, 0, keep 0.4): line search may stop
        // early, but coordinate 2 must not move at all.
        assert_eq!(res.iterate.x()[2], 0.4);
        assert!(res.iterate.x()[0] > 0.3);
        assert!(res.iterate.x()[1] < 0.7);
    }

    #[test]
    fn fw_unmoved_at_optimum() {
        let inst = boxed(Matrix::identity(2), vec![-1.0, 2.0], 1.0);
        let it = at(&inst, &[0.0, 1.0]);
        let res = fw_update(&inst, &it, TOL, 1e-12).unwrap();
        assert!(!res.moved);
    }

    #[test]
    fn fw_full_step_to_vertex() {
        let inst = boxed(Matrix::identity(1), vec![1.0], 1.0);
        let it = at(&inst, &[0.0]);
        let res = fw_update(&inst, &it, TOL, 1e-12).unwrap();
        assert_eq!(res.iterate.x(), &[1.0]);
    }

    #[test]
    fn fw_rejects_infinite_bounds() {
        let inst = nnls(Matrix::identity(2), vec![1.0, 1.0]);
        let it = at(&inst, &[0.0, 0.0]);
        assert!(matches!(
            fw_update(&inst, &it, TOL, 1e-12),
            Err(Error::InfiniteBound)
        ));
    }

    #[test]
    fn coordinate_nnls_picks_largest_entry() {
        let inst = nnls(Matrix::identity(2), vec![1.0, 0.0]);
        let it = at(&inst, &[0.0, 0.0]);
        let res = coordinate_update(&inst, &it, TOL, 1e-12).unwrap();
        assert_eq!(res.iterate.x(), &[1.0, 0.0]);
        assert_eq!(res.direction_norm, 1.0);
    }

    #[test]
    fn coordinate_unmoved_at_optimum() {
        let inst = nnls(Matrix::identity(2), vec![-1.0, -1.0]);
        let it = at(&inst, &[0.0, 0.0]);
        assert!(!coordinate_update(&inst, &it, TOL, 1e-12).unwrap().moved);
    }

    #[test]
    fn coordinate_tie_breaks_to_smallest_index() {
        // z = (2, 2): pick j = 0, step 2/1, y = (2, 0).
        let inst = nnls(Matrix::from_rows(&[vec![1.0, 1.0]]).unwrap(), vec![2.0]);
        let it = at(&inst, &[0.0, 0.0]);
        let res = coordinate_update(&inst, &it, TOL, 1e-12).unwrap();
        assert_eq!(res.iterate.x(), &[2.0, 0.0]);
        let drop = it.objective() - res.iterate.objective();
        let predicted = res.predicted_drop.unwrap();
        assert!((drop - predicted).abs() <= 1e-8 * predicted.max(1e-300));
    }

    #[test]
    fn coordinate_capacitated_clamps_to_upper_bound() {
        let inst = boxed(Matrix::from_rows(&[vec![1.0]]).unwrap(), vec![5.0], 1.0);
        let it = at(&inst, &[0.0]);
        let res = coordinate_update(&inst, &it, TOL, 1e-12).unwrap();
        assert_eq!(res.iterate.x(), &[1.0]);
        assert!(res.predicted_drop.is_none());
    }

    // Property checks for the update contract on random instances. Inputs
    // are stabilized first, matching how the solver invokes the rules.
    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn update_contract_holds(
            entries in proptest::collection::vec(-1.0f64..1.0, 6),
            b in proptest::collection::vec(-1.0f64..1.0, 2),
            x0 in proptest::collection::vec(0.0f64..1.0, 3),
            capacitated in proptest::bool::ANY,
        ) {
            let a = Matrix::new(2, 3, entries).unwrap();
            let u = if capacitated { 1.0 } else { f64::INFINITY };
            let inst = Instance::new(a, b, vec![u; 3]).unwrap();
            let start = make_iterate(&inst, &x0, 1e-12).unwrap();
            let it = stabilize_for_tests(&inst, start, CentroidMapping::LocalNorm);
            let lambda = {
                let s = crate::linalg::spectral_norm(inst.a());
                if s > 0.0 { 1.0 / (s * s) } else { 1.0 }
            };
            let mut rules: Vec<UpdateRule> = vec![
                UpdateRule::projected_gradient(),
                UpdateRule::coordinate(),
                UpdateRule { kind: UpdateRuleKind::ProjectedGradient, pg_step: PgStep::Fixed(lambda) },
            ];
            if capacitated {
                rules.push(UpdateRule::frank_wolfe());
            }
            for rule in rules {
                let res = apply(&inst, &it, &rule, lambda, TOL, 1e-12).unwrap();
                let optimal = check_optimality(&inst, &it, TOL).is_optimal();
                prop_assert_eq!(res.moved, !optimal, "rule {:?}", rule.kind);
                if !res.moved {
                    prop_assert_eq!(res.iterate.x(), it.x());
                    continue;
                }
                // (U1) strict decrease.
                prop_assert!(
                    res.iterate.objective() < it.objective(),
                    "rule {:?}: {} !< {}", rule.kind, res.iterate.objective(), it.objective()
                );
                // (U2) optimality on the segment at off-grid interior points.
                for &lam in &[0.0, 0.13, 0.29, 0.41, 0.57, 0.73, 0.89] {
                    let z: Vec<f64> = it.x().iter().zip(res.iterate.x())
                        .map(|(xa, ya)| lam * ya + (1.0 - lam) * xa)
                        .collect();
                    let fz = make_iterate(&inst, &z, 1e-12).unwrap().objective();
                    prop_assert!(
                        fz >= res.iterate.objective() - 1e-12 * (1.0 + fz),
                        "rule {:?} at lambda {}", rule.kind, lam
                    );
                }
                // Cycle-free consequence: the move conforms to -g.
                let g = gradient(&inst, &it);
                for i in 0..3 {
                    let delta = res.iterate.x()[i] - it.x()[i];
                    if delta != 0.0 {
                        prop_assert!(
                            delta.signum() * g[i] <= TOL,
                            "rule {:?}: coordinate {} moved against the gradient", rule.kind, i
                        );
                    }
                }
                // Update-move inequality ‖Ax − Ay‖² ≤ ‖Ax − b‖² − ‖Ay − b‖².
                let move_sq: f64 = it.residual().iter().zip(res.iterate.residual())
                    .map(|(p, q)| (p - q) * (p - q)).sum();
                let obj_drop_sq = 2.0 * it.objective() - 2.0 * res.iterate.objective();
                prop_assert!(move_sq <= obj_drop_sq + 1e-8 * (1.0 + obj_drop_sq.abs()));
                // Projected-gradient progress bound: the squared-norm drop
                // is at least ‖z‖²/‖A‖².
                if !capacitated
                    && rule.kind == UpdateRuleKind::ProjectedGradient
                    && matches!(rule.pg_step, PgStep::OptimalLineSearch)
                {
                    let z_sq = res.direction_norm * res.direction_norm;
                    let a_norm = crate::linalg::spectral_norm(inst.a());
                    prop_assert!(
                        obj_drop_sq >= z_sq / (a_norm * a_norm) - 1e-8 * (1.0 + z_sq)
                    );
                }
            }
        }
    }
}
