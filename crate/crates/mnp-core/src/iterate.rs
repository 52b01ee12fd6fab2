//! Feasible points with their bound partition, cached residual and
//! objective, plus the gradient and the first-order optimality check.

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::linalg::{self, mat_t_vec, mat_vec};

/// Index partition of a feasible point: coordinates at the lower bound, at a
/// finite upper bound, and strictly between.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    pub lower: Vec<usize>,
    pub upper: Vec<usize>,
    pub free: Vec<usize>,
}

impl Partition {
    pub fn sizes(&self) -> (usize, usize, usize) {
        (self.lower.len(), self.upper.len(), self.free.len())
    }

    /// Bitmask signature `(lower, upper)` for duplicate detection; only
    /// available for n ≤ 64.
    pub fn signature(&self, n: usize) -> Option<(u64, u64)> {
        if n > 64 {
            return None;
        }
        let mut lo = 0u64;
        let mut up = 0u64;
        for &i in &self.lower {
            lo |= 1 << i;
        }
        for &i in &self.upper {
            up |= 1 << i;
        }
        Some((lo, up))
    }
}

/// A feasible point with bounds snapped exactly, its partition, and the
/// cached residual `Ax − b` and objective `½‖Ax − b‖²`.
#[derive(Clone, Debug)]
pub struct Iterate {
    x: Vec<f64>,
    partition: Partition,
    residual: Vec<f64>,
    objective: f64,
}

impl Iterate {
    #[inline]
    pub fn x(&self) -> &[f64] {
        &self.x
    }

    #[inline]
    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    #[inline]
    pub fn residual(&self) -> &[f64] {
        &self.residual
    }

    #[inline]
    pub fn objective(&self) -> f64 {
        self.objective
    }
}

/// Per-coordinate snap scale: `snap_tol` is relative to `max(1, u(i))` for
/// finite bounds and absolute otherwise.
#[inline]
pub(crate) fn snap_scale(snap_tol: f64, ui: f64) -> f64 {
    if ui.is_finite() {
        snap_tol * ui.max(1.0)
    } else {
        snap_tol
    }
}

/// Builds an [`Iterate`] from a raw point. Coordinates within the snap
/// tolerance of a bound are set exactly to that bound; anything violating a
/// bound by more than the tolerance is an error. The partition is derived
/// from the snapped point and the residual computed fresh.
pub fn make_iterate(inst: &Instance, x_raw: &[f64], snap_tol: f64) -> Result<Iterate> {
    let n = inst.n();
    if x_raw.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "point has length {}, instance has n = {n}",
            x_raw.len()
        )));
    }
    let mut x = vec![0.0; n];
    let mut partition = Partition {
        lower: Vec::new(),
        upper: Vec::new(),
        free: Vec::new(),
    };
    for i in 0..n {
        let ui = inst.u()[i];
        let tol = snap_scale(snap_tol, ui);
        let v = x_raw[i];
        if !v.is_finite() {
            return Err(Error::InvalidValue(format!(
                "coordinate {i} is not finite: {v}"
            )));
        }
        if v < -tol {
            return Err(Error::OutOfBounds {
                index: i,
                amount: -v,
            });
        }
        if ui.is_finite() && v > ui + tol {
            return Err(Error::OutOfBounds {
                index: i,
                amount: v - ui,
            });
        }
        if v.abs() <= tol {
            x[i] = 0.0;
            partition.lower.push(i);
        } else if ui.is_finite() && (v - ui).abs() <= tol {
            x[i] = ui;
            partition.upper.push(i);
        } else {
            x[i] = v;
            partition.free.push(i);
        }
    }
    let mut residual = mat_vec(inst.a(), &x)?;
    for (r, b) in residual.iter_mut().zip(inst.b()) {
        *r -= b;
    }
    let objective = 0.5 * linalg::norm_sq(&residual);
    Ok(Iterate {
        x,
        partition,
        residual,
        objective,
    })
}

/// Gradient `g = Aᵀ(Ax − b)` of the objective at the iterate.
pub fn gradient(inst: &Instance, it: &Iterate) -> Vec<f64> {
    mat_t_vec(inst.a(), it.residual()).expect("cached residual has m entries")
}

/// Which first-order optimality condition a coordinate violates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    /// `i ∈ I0` with `g(i) < -tol`.
    LowerGradientNegative,
    /// `i ∈ I1` with `g(i) > tol`.
    UpperGradientPositive,
    /// `i ∈ J` with `|g(i)| > tol`.
    FreeGradientNonzero,
}

/// Outcome of [`check_optimality`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OptimalityCheck {
    Optimal,
    Violated {
        index: usize,
        kind: ViolationKind,
        amount: f64,
    },
}

impl OptimalityCheck {
    pub fn is_optimal(&self) -> bool {
        matches!(self, OptimalityCheck::Optimal)
    }
}

/// First-order optimality test: `g ≥ -tol` on the lower set, `g ≤ tol` on
/// the upper set, `|g| ≤ tol` on the free set. On failure reports the worst
/// violating coordinate.
pub fn check_optimality(inst: &Instance, it: &Iterate, tol: f64) -> OptimalityCheck {
    let g = gradient(inst, it);
    let mut worst = tol;
    let mut hit: Option<(usize, ViolationKind)> = None;
    for &i in &it.partition().lower {
        if -g[i] > worst {
            worst = -g[i];
            hit = Some((i, ViolationKind::LowerGradientNegative));
        }
    }
    for &i in &it.partition().upper {
        if g[i] > worst {
            worst = g[i];
            hit = Some((i, ViolationKind::UpperGradientPositive));
        }
    }
    for &i in &it.partition().free {
        if g[i].abs() > worst {
            worst = g[i].abs();
            hit = Some((i, ViolationKind::FreeGradientNonzero));
        }
    }
    match hit {
        None => OptimalityCheck::Optimal,
        Some((index, kind)) => OptimalityCheck::Violated {
            index,
            kind,
            amount: worst,
        },
    }
}

/// Worst first-order violation, useful as a KKT residual. Zero at optimal
/// points.
pub fn kkt_residual(inst: &Instance, it: &Iterate) -> f64 {
    match check_optimality(inst, it, 0.0) {
        OptimalityCheck::Optimal => 0.0,
        OptimalityCheck::Violated { amount, .. } => amount,
    }
}
