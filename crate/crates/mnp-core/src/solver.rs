//! The main solve loop: major cycles apply the configured first-order
//! update, minor cycles repeatedly move toward the centroid of the current
//! bound partition, clamped to the box, until the point is stable. The
//! objective never increases, each clamped minor step fixes at least one new
//! coordinate at a bound, and no stable partition can recur, so the solver
//! terminates with an exact first-order optimal point.

use std::time::{Duration, Instant};

use crate::centroid::{centroid, CentroidMapping};
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::iterate::{make_iterate, Iterate};
use crate::linalg::{self, spectral_norm};
use crate::update::{self, PgStep, UpdateRule, UpdateRuleKind};

/// Initial point selection. `Interior` starts at `u(i)/2` for finite bounds
/// and 1 otherwise, giving the first stabilization a full free set (useful
/// for the gradient-style rules; the coordinate rule should start at zero
/// to keep its free columns independent).
#[derive(Clone, Debug, PartialEq)]
pub enum StartPoint {
    Zero,
    Interior,
    Custom(Vec<f64>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    IterationCap,
    TimeLimit,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::IterationCap => "iteration_cap",
            SolveStatus::TimeLimit => "time_limit",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CycleKind {
    MajorUpdate,
    MinorCentroid,
}

/// One recorded cycle. Objective values are non-increasing along the trace;
/// the extra diagnostic fields feed the verification oracles.
#[derive(Clone, Debug)]
pub struct TraceEvent {
    pub cycle_kind: CycleKind,
    pub objective_after: f64,
    /// `(|I0|, |I1|, |J|)` after the cycle.
    pub partition_sizes: (usize, usize, usize),
    /// Boundary step fraction; minor cycles only.
    pub alpha_star: Option<f64>,
    /// Direction magnitude reported by the update; major cycles only.
    pub direction_norm: Option<f64>,
    /// Closed-form objective decrease where the rule has one; major cycles.
    pub predicted_drop: Option<f64>,
    /// `‖A(x_new − x_old)‖²` for the cycle's move.
    pub image_move_sq: Option<f64>,
}

/// Solver configuration. `opt_tol` and `snap_tol` are relative knobs: the
/// effective optimality tolerance is `opt_tol · (1 + ‖b‖)` and the snap
/// tolerance is `snap_tol · max(1, u(i))` per coordinate.
#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub rule: UpdateRule,
    pub mapping: CentroidMapping,
    pub start: StartPoint,
    pub opt_tol: f64,
    pub snap_tol: f64,
    pub max_major: usize,
    pub max_minor_total: usize,
    pub time_limit: Duration,
    pub record_trace: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            rule: UpdateRule::projected_gradient(),
            mapping: CentroidMapping::LocalNorm,
            start: StartPoint::Zero,
            opt_tol: 1e-9,
            snap_tol: 1e-12,
            max_major: 1_000_000,
            max_minor_total: 10_000_000,
            time_limit: Duration::from_secs(60),
            record_trace: true,
        }
    }
}

/// Result of a solve. When `record_trace` is set, the trace holds one event
/// per major and minor cycle, in order. `stable_partitions` records the
/// `(I0, I1)` bitmask at the end of every completed major cycle for n ≤ 64;
/// no pair may repeat.
#[derive(Clone, Debug)]
pub struct SolveReport {
    pub x_final: Vec<f64>,
    pub objective: f64,
    pub status: SolveStatus,
    pub major_cycles: usize,
    pub minor_cycles_total: usize,
    pub trace: Vec<TraceEvent>,
    pub stable_partitions: Option<Vec<(u64, u64)>>,
}

/// Largest `α ∈ [0, 1]` keeping `x + α(w − x)` inside `[0, u]`; 1 when `w`
/// is already feasible.
pub fn alpha_star(x: &[f64], w: &[f64], u: &[f64]) -> f64 {
    alpha_star_blocking(x, w, u).0
}

/// As [`alpha_star`], also returning the coordinates whose bound attains the
/// minimum ratio (empty when α = 1).
pub(crate) fn alpha_star_blocking(x: &[f64], w: &[f64], u: &[f64]) -> (f64, Vec<usize>) {
    let mut alpha = 1.0f64;
    for i in 0..x.len() {
        let d = w[i] - x[i];
        let ratio = if d < 0.0 {
            x[i] / -d
        } else if d > 0.0 && u[i].is_finite() {
            (u[i] - x[i]) / d
        } else {
            continue;
        };
        if ratio < alpha {
            alpha = ratio;
        }
    }
    if alpha >= 1.0 {
        return (1.0, Vec::new());
    }
    let mut blockers = Vec::new();
    for i in 0..x.len() {
        let d = w[i] - x[i];
        let ratio = if d < 0.0 {
            x[i] / -d
        } else if d > 0.0 && u[i].is_finite() {
            (u[i] - x[i]) / d
        } else {
            continue;
        };
        if ratio <= alpha {
            blockers.push(i);
        }
    }
    (alpha, blockers)
}

struct Recorder {
    on: bool,
    events: Vec<TraceEvent>,
}

impl Recorder {
    fn push(&mut self, ev: TraceEvent) {
        if self.on {
            self.events.push(ev);
        }
    }
}

fn image_move_sq(prev: &Iterate, next: &Iterate) -> f64 {
    prev.residual()
        .iter()
        .zip(next.residual())
        .map(|(p, q)| (p - q) * (p - q))
        .sum()
}

/// Runs the update-and-stabilize loop on `inst` under `cfg`.
pub fn solve(inst: &Instance, cfg: &SolverConfig) -> Result<SolveReport> {
    let n = inst.n();
    let start_vec = match &cfg.start {
        StartPoint::Zero => vec![0.0; n],
        StartPoint::Interior => inst
            .u()
            .iter()
            .map(|&ui| if ui.is_finite() { 0.5 * ui } else { 1.0 })
            .collect(),
        StartPoint::Custom(v) => v.clone(),
    };
    let mut it = make_iterate(inst, &start_vec, cfg.snap_tol)?;
    let b_norm = linalg::norm2(inst.b());
    let eff_opt = cfg.opt_tol * (1.0 + b_norm);
    let mono_slack = 1e-8 * (1.0 + linalg::norm_sq(inst.b()));
    // Fixed step for capacitated projected gradient; computed on demand.
    let mut lambda_cache: Option<f64> = None;
    let needs_lambda = cfg.rule.kind == UpdateRuleKind::ProjectedGradient
        && (!inst.is_uncapacitated() || matches!(cfg.rule.pg_step, PgStep::Fixed(_)));
    let mut lambda = 1.0;
    if needs_lambda {
        lambda = *lambda_cache.get_or_insert_with(|| {
            if let PgStep::Fixed(l) = cfg.rule.pg_step {
                l
            } else {
                let s = spectral_norm(inst.a());
                if s > 0.0 {
                    1.0 / (s * s)
                } else {
                    1.0
                }
            }
        });
    }

    let clock = Instant::now();
    let mut rec = Recorder {
        on: cfg.record_trace,
        events: Vec::new(),
    };
    let mut majors = 0usize;
    let mut minors = 0usize;
    let mut stable_partitions: Option<Vec<(u64, u64)>> =
        if n <= 64 { Some(Vec::new()) } else { None };
    let status;

    'outer: loop {
        if majors >= cfg.max_major || minors >= cfg.max_minor_total {
            status = SolveStatus::IterationCap;
            break;
        }
        if clock.elapsed() > cfg.time_limit {
            status = SolveStatus::TimeLimit;
            break;
        }
        let res = update::apply(inst, &it, &cfg.rule, lambda, eff_opt, cfg.snap_tol)?;
        majors += 1;
        if !res.moved {
            rec.push(TraceEvent {
                cycle_kind: CycleKind::MajorUpdate,
                objective_after: it.objective(),
                partition_sizes: it.partition().sizes(),
                alpha_star: None,
                direction_norm: Some(0.0),
                predicted_drop: None,
                image_move_sq: Some(0.0),
            });
            status = SolveStatus::Optimal;
            break;
        }
        if res.iterate.objective() > it.objective() + mono_slack {
            return Err(Error::NumericalFault(format!(
                "objective increased across an update step: {} -> {}",
                it.objective(),
                res.iterate.objective()
            )));
        }
        if res.iterate.x() == it.x() {
            // A moved update must change the point; a bitwise-identical
            // iterate (e.g. a step below the snap tolerance) would loop
            // forever.
            return Err(Error::NumericalFault(
                "update reported progress but left the iterate unchanged".into(),
            ));
        }
        rec.push(TraceEvent {
            cycle_kind: CycleKind::MajorUpdate,
            objective_after: res.iterate.objective(),
            partition_sizes: res.iterate.partition().sizes(),
            alpha_star: None,
            direction_norm: Some(res.direction_norm),
            predicted_drop: res.predicted_drop,
            image_move_sq: Some(image_move_sq(&it, &res.iterate)),
        });
        it = res.iterate;

        // Minor cycles: project to the centroid of the current partition,
        // clamp to the box, repeat. At most n per major cycle.
        let mut minors_this_major = 0usize;
        loop {
            if minors >= cfg.max_minor_total {
                status = SolveStatus::IterationCap;
                break 'outer;
            }
            if clock.elapsed() > cfg.time_limit {
                status = SolveStatus::TimeLimit;
                break 'outer;
            }
            let w = centroid(inst, &it, cfg.mapping)?;
            let diff_inf = w
                .iter()
                .zip(it.x())
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            if diff_inf <= cfg.snap_tol * (1.0 + linalg::norm_inf(it.x())) {
                // Stable. Adopt the centroid output (clamped to the box) so
                // the stable point satisfies the free-column normal
                // equations to solver precision, but only if that does not
                // disturb the partition.
                let clamped: Vec<f64> = w
                    .iter()
                    .zip(inst.u())
                    .map(|(&v, &ui)| v.clamp(0.0, ui))
                    .collect();
                let adopted = make_iterate(inst, &clamped, cfg.snap_tol)?;
                if adopted.partition() == it.partition() {
                    it = adopted;
                }
                break;
            }
            if minors_this_major >= n {
                return Err(Error::NumericalFault(
                    "minor cycles exceeded n within one major cycle".into(),
                ));
            }
            let (alpha, blockers) = alpha_star_blocking(it.x(), &w, inst.u());
            let mut y: Vec<f64> = it
                .x()
                .iter()
                .zip(&w)
                .map(|(x, wi)| x + alpha * (wi - x))
                .collect();
            // Land blocking coordinates exactly on their bound.
            for &i in &blockers {
                y[i] = if w[i] < it.x()[i] { 0.0 } else { inst.u()[i] };
            }
            let next = make_iterate(inst, &y, cfg.snap_tol)?;
            if next.objective() > it.objective() + mono_slack {
                return Err(Error::NumericalFault(format!(
                    "objective increased across a minor cycle: {} -> {}",
                    it.objective(),
                    next.objective()
                )));
            }
            minors += 1;
            minors_this_major += 1;
            rec.push(TraceEvent {
                cycle_kind: CycleKind::MinorCentroid,
                objective_after: next.objective(),
                partition_sizes: next.partition().sizes(),
                alpha_star: Some(alpha),
                direction_norm: None,
                predicted_drop: None,
                image_move_sq: Some(image_move_sq(&it, &next)),
            });
            let same_partition = next.partition() == it.partition();
            it = next;
            if alpha >= 1.0 {
                if same_partition {
                    // Full move onto the centroid: stable by idempotence.
                    break;
                }
            } else if same_partition {
                return Err(Error::NumericalFault(
                    "boundary-clamped minor cycle did not extend the bound set".into(),
                ));
            }
        }
        if let Some(parts) = stable_partitions.as_mut() {
            if let Some(sig) = it.partition().signature(n) {
                parts.push(sig);
            }
        }
    }

    Ok(SolveReport {
        x_final: it.x().to_vec(),
        objective: it.objective(),
        status,
        major_cycles: majors,
        minor_cycles_total: minors,
        trace: rec.events,
        stable_partitions,
    })
}
