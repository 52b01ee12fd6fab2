//! Pure first-order reference methods with epsilon stopping, for comparison
//! runs: projected gradient, accelerated projected gradient with restarts,
//! and the conditional-gradient pair (Frank-Wolfe and away-step
//! Frank-Wolfe). None of these terminate finitely; they stop once the
//! projected-gradient stationarity residual `‖x − Π(x − g)‖∞` drops below
//! the threshold, or when a cap is hit.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::iterate::make_iterate;
use crate::linalg::{self, mat_t_vec, mat_vec, spectral_norm};
use crate::solver::{CycleKind, SolveReport, SolveStatus, TraceEvent};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BaselineMethod {
    Pg,
    Pfg,
    Fw,
    Afw,
}

impl BaselineMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            BaselineMethod::Pg => "base-pg",
            BaselineMethod::Pfg => "base-pfg",
            BaselineMethod::Fw => "base-fw",
            BaselineMethod::Afw => "base-afw",
        }
    }
}

/// Configuration for [`run_baseline`]. `eps` is relative: the stopping
/// threshold is `eps · (1 + ‖b‖)`. The gradient steps use the fixed length
/// `1/‖A‖²`.
#[derive(Clone, Debug)]
pub struct BaselineConfig {
    pub method: BaselineMethod,
    pub eps: f64,
    pub max_iters: usize,
    pub time_limit: Duration,
    pub record_trace: bool,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            method: BaselineMethod::Pg,
            eps: 1e-8,
            max_iters: 10_000_000,
            time_limit: Duration::from_secs(60),
            record_trace: false,
        }
    }
}

#[inline]
fn clip(x: f64, u: f64) -> f64 {
    x.clamp(0.0, u)
}

/// `‖x − Π(x − g)‖∞`, the standard computable stationarity surrogate.
fn stationarity(x: &[f64], g: &[f64], u: &[f64]) -> f64 {
    x.iter().zip(g).zip(u).fold(0.0f64, |m, ((&xi, &gi), &ui)| {
        m.max((xi - clip(xi - gi, ui)).abs())
    })
}

fn partition_sizes(x: &[f64], u: &[f64]) -> (usize, usize, usize) {
    let mut lower = 0;
    let mut upper = 0;
    for (&xi, &ui) in x.iter().zip(u) {
        if xi <= 0.0 {
            lower += 1;
        } else if ui.is_finite() && xi >= ui {
            upper += 1;
        }
    }
    (lower, upper, x.len() - lower - upper)
}

struct Run<'a> {
    inst: &'a Instance,
    u: &'a [f64],
    eps: f64,
    clock: Instant,
    limit: Duration,
    max_iters: usize,
    record: bool,
    trace: Vec<TraceEvent>,
    iters: usize,
}

impl<'a> Run<'a> {
    fn record_step(&mut self, x: &[f64], objective: f64) {
        if self.record {
            self.trace.push(TraceEvent {
                cycle_kind: CycleKind::MajorUpdate,
                objective_after: objective,
                partition_sizes: partition_sizes(x, self.u),
                alpha_star: None,
                direction_norm: None,
                predicted_drop: None,
                image_move_sq: None,
            });
        }
    }

    fn stopped(&self) -> Option<SolveStatus> {
        if self.iters >= self.max_iters {
            Some(SolveStatus::IterationCap)
        } else if self.clock.elapsed() > self.limit {
            Some(SolveStatus::TimeLimit)
        } else {
            None
        }
    }

    fn finish(self, x: Vec<f64>, status: SolveStatus) -> Result<SolveReport> {
        // Recompute the objective from scratch; the incremental residual can
        // drift over millions of iterations.
        let it = make_iterate(self.inst, &x, 1e-9)?;
        Ok(SolveReport {
            objective: it.objective(),
            x_final: it.x().to_vec(),
            status,
            major_cycles: self.iters,
            minor_cycles_total: 0,
            trace: self.trace,
            stable_partitions: None,
        })
    }
}

/// Runs the configured baseline from the origin.
pub fn run_baseline(inst: &Instance, cfg: &BaselineConfig) -> Result<SolveReport> {
    if matches!(cfg.method, BaselineMethod::Fw | BaselineMethod::Afw) && !inst.all_bounds_finite() {
        return Err(Error::InfiniteBound);
    }
    let eps = cfg.eps * (1.0 + linalg::norm2(inst.b()));
    let run = Run {
        inst,
        u: inst.u(),
        eps,
        clock: Instant::now(),
        limit: cfg.time_limit,
        max_iters: cfg.max_iters,
        record: cfg.record_trace,
        trace: Vec::new(),
        iters: 0,
    };
    match cfg.method {
        BaselineMethod::Pg => projected_gradient(run),
        BaselineMethod::Pfg => accelerated_projected_gradient(run),
        BaselineMethod::Fw => frank_wolfe(run),
        BaselineMethod::Afw => away_step_frank_wolfe(run),
    }
}

fn step_length(inst: &Instance) -> f64 {
    let s = spectral_norm(inst.a());
    if s > 0.0 {
        1.0 / (s * s)
    } else {
        1.0
    }
}

fn objective_of(r: &[f64]) -> f64 {
    0.5 * linalg::norm_sq(r)
}

/// Projected gradient with exact line search on each projected segment.
fn projected_gradient(mut run: Run) -> Result<SolveReport> {
    let inst = run.inst;
    let lambda = step_length(inst);
    let n = inst.n();
    let mut x = vec![0.0; n];
    let mut r: Vec<f64> = inst.b().iter().map(|b| -b).collect();
    loop {
        let g = mat_t_vec(inst.a(), &r)?;
        if stationarity(&x, &g, run.u) <= run.eps {
            return run.finish(x, SolveStatus::Optimal);
        }
        if let Some(status) = run.stopped() {
            return run.finish(x, status);
        }
        let d: Vec<f64> = x
            .iter()
            .zip(&g)
            .zip(run.u)
            .map(|((&xi, &gi), &ui)| clip(xi - lambda * gi, ui) - xi)
            .collect();
        let ad = mat_vec(inst.a(), &d)?;
        let ad_sq = linalg::norm_sq(&ad);
        if ad_sq == 0.0 {
            return run.finish(x, SolveStatus::Optimal);
        }
        let t = (-linalg::dot(&ad, &r) / ad_sq).clamp(0.0, 1.0);
        for (xi, di) in x.iter_mut().zip(&d) {
            *xi += t * di;
        }
        for (xi, ui) in x.iter_mut().zip(run.u) {
            *xi = clip(*xi, *ui);
        }
        for (ri, adi) in r.iter_mut().zip(&ad) {
            *ri += t * adi;
        }
        run.iters += 1;
        let obj = objective_of(&r);
        run.record_step(&x, obj);
    }
}

/// Nesterov-accelerated projected gradient with a function-value restart.
/// Reports the best iterate seen, so the recorded answer is monotone even
/// though individual iterates may oscillate.
fn accelerated_projected_gradient(mut run: Run) -> Result<SolveReport> {
    let inst = run.inst;
    let lambda = step_length(inst);
    let n = inst.n();
    let mut x = vec![0.0; n];
    let mut x_prev = x.clone();
    let mut ax = mat_vec(inst.a(), &x)?;
    let mut ax_prev = ax.clone();
    let mut theta = 1.0f64;
    let mut f_curr = objective_of(&sub(&ax, inst.b()));
    let mut best_x = x.clone();
    let mut best_f = f_curr;
    loop {
        let theta_next = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
        let beta = (theta - 1.0) / theta_next;
        let y: Vec<f64> = x
            .iter()
            .zip(&x_prev)
            .map(|(&a, &b)| a + beta * (a - b))
            .collect();
        let ay: Vec<f64> = ax
            .iter()
            .zip(&ax_prev)
            .map(|(&a, &b)| a + beta * (a - b))
            .collect();
        let ry = sub(&ay, inst.b());
        let gy = mat_t_vec(inst.a(), &ry)?;
        let x_next: Vec<f64> = y
            .iter()
            .zip(&gy)
            .zip(run.u)
            .map(|((&yi, &gi), &ui)| clip(yi - lambda * gi, ui))
            .collect();
        let ax_next = mat_vec(inst.a(), &x_next)?;
        let f_next = objective_of(&sub(&ax_next, inst.b()));
        run.iters += 1;
        if f_next < best_f {
            best_f = f_next;
            best_x = x_next.clone();
        }
        run.record_step(&x_next, f_next);
        let restart = f_next > f_curr;
        x_prev = x.clone();
        ax_prev = ax.clone();
        x = x_next;
        ax = ax_next;
        theta = if restart { 1.0 } else { theta_next };
        f_curr = f_next;
        let g = mat_t_vec(inst.a(), &sub(&ax, inst.b()))?;
        if stationarity(&x, &g, run.u) <= run.eps {
            return run.finish(x, SolveStatus::Optimal);
        }
        if let Some(status) = run.stopped() {
            // Hand back the recorded best rather than the possibly
            // oscillating current iterate.
            return run.finish(best_x, status);
        }
    }
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Conditional gradient with exact line search on `[x, ȳ]`.
fn frank_wolfe(mut run: Run) -> Result<SolveReport> {
    let inst = run.inst;
    let n = inst.n();
    let mut x = vec![0.0; n];
    let mut r: Vec<f64> = inst.b().iter().map(|b| -b).collect();
    loop {
        let g = mat_t_vec(inst.a(), &r)?;
        if stationarity(&x, &g, run.u) <= run.eps {
            return run.finish(x, SolveStatus::Optimal);
        }
        if let Some(status) = run.stopped() {
            return run.finish(x, status);
        }
        let d: Vec<f64> = x
            .iter()
            .zip(&g)
            .zip(run.u)
            .map(|((&xi, &gi), &ui)| if gi < 0.0 { ui - xi } else { -xi })
            .collect();
        let ad = mat_vec(inst.a(), &d)?;
        let ad_sq = linalg::norm_sq(&ad);
        if ad_sq == 0.0 {
            return run.finish(x, SolveStatus::Optimal);
        }
        let t = (-linalg::dot(&ad, &r) / ad_sq).clamp(0.0, 1.0);
        for (xi, di) in x.iter_mut().zip(&d) {
            *xi += t * di;
        }
        for (ri, adi) in r.iter_mut().zip(&ad) {
            *ri += t * adi;
        }
        run.iters += 1;
        let obj = objective_of(&r);
        run.record_step(&x, obj);
    }
}

/// Vertex of the box encoded by the set of coordinates at their upper bound.
type VertexKey = Vec<u64>;

fn vertex_key(at_upper: &[bool]) -> VertexKey {
    let mut key = vec![0u64; at_upper.len().div_ceil(64)];
    for (i, &up) in at_upper.iter().enumerate() {
        if up {
            key[i / 64] |= 1 << (i % 64);
        }
    }
    key
}

/// Away-step Frank-Wolfe keeping an explicit convex-combination
/// representation of the iterate over box vertices.
fn away_step_frank_wolfe(mut run: Run) -> Result<SolveReport> {
    let inst = run.inst;
    let n = inst.n();
    let u = inst.u();
    let mut x = vec![0.0; n];
    let mut r: Vec<f64> = inst.b().iter().map(|b| -b).collect();
    // Active set: vertex key -> (vertex coordinates, weight). Start at the
    // origin vertex with weight one.
    let origin: Vec<bool> = vec![false; n];
    let mut active: HashMap<VertexKey, (Vec<f64>, f64)> = HashMap::new();
    active.insert(vertex_key(&origin), (vec![0.0; n], 1.0));
    loop {
        let g = mat_t_vec(inst.a(), &r)?;
        if stationarity(&x, &g, u) <= run.eps {
            return run.finish(x, SolveStatus::Optimal);
        }
        if let Some(status) = run.stopped() {
            return run.finish(x, status);
        }
        // Frank-Wolfe vertex.
        let fw_at_upper: Vec<bool> = g.iter().map(|&gi| gi < 0.0).collect();
        let fw_vertex: Vec<f64> = fw_at_upper
            .iter()
            .zip(u)
            .map(|(&up, &ui)| if up { ui } else { 0.0 })
            .collect();
        let d_fw: Vec<f64> = fw_vertex.iter().zip(&x).map(|(v, xi)| v - xi).collect();
        let gap_fw = -linalg::dot(&g, &d_fw);
        // Away vertex: the active vertex most aligned with the gradient.
        let (away_key, (away_vertex, away_weight)) = active
            .iter()
            .max_by(|(_, (va, _)), (_, (vb, _))| {
                linalg::dot(&g, va)
                    .partial_cmp(&linalg::dot(&g, vb))
                    .unwrap()
            })
            .map(|(k, v)| (k.clone(), v.clone()))
            .expect("active set never empty");
        let d_away: Vec<f64> = x.iter().zip(&away_vertex).map(|(xi, v)| xi - v).collect();
        let gap_away = -linalg::dot(&g, &d_away);
        let use_fw = gap_fw >= gap_away || active.len() == 1;
        let (d, gamma_max) = if use_fw {
            (d_fw, 1.0)
        } else {
            let gm = away_weight / (1.0 - away_weight).max(f64::MIN_POSITIVE);
            (d_away, gm)
        };
        let ad = mat_vec(inst.a(), &d)?;
        let ad_sq = linalg::norm_sq(&ad);
        if ad_sq == 0.0 {
            return run.finish(x, SolveStatus::Optimal);
        }
        let gamma = (-linalg::dot(&ad, &r) / ad_sq).clamp(0.0, gamma_max);
        if gamma == 0.0 {
            return run.finish(x, SolveStatus::Optimal);
        }
        if use_fw {
            for (_, wv) in active.values_mut() {
                *wv *= 1.0 - gamma;
            }
            let key = vertex_key(&fw_at_upper);
            active
                .entry(key)
                .or_insert_with(|| (fw_vertex.clone(), 0.0))
                .1 += gamma;
        } else {
            for (_, wv) in active.values_mut() {
                *wv *= 1.0 + gamma;
            }
            if let Some(e) = active.get_mut(&away_key) {
                e.1 -= gamma;
            }
        }
        active.retain(|_, (_, wv)| *wv > 1e-14);
        for (xi, di) in x.iter_mut().zip(&d) {
            *xi += gamma * di;
        }
        for (xi, ui) in x.iter_mut().zip(u) {
            *xi = clip(*xi, *ui);
        }
        for (ri, adi) in r.iter_mut().zip(&ad) {
            *ri += gamma * adi;
        }
        run.iters += 1;
        let obj = objective_of(&r);
        run.record_step(&x, obj);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;

    fn nnls(a: Matrix, b: Vec<f64>) -> Instance {
        let n = a.cols();
        Instance::new(a, b, vec![f64::INFINITY; n]).unwrap()
    }

    fn boxed(a: Matrix, b: Vec<f64>) -> Instance {
        let n = a.cols();
        Instance::new(a, b, vec![1.0; n]).unwrap()
    }

    #[test]
    fn pg_solves_separable_quadratic() {
        let inst = nnls(Matrix::identity(2), vec![1.0, 2.0]);
        let report = run_baseline(&inst, &BaselineConfig::default()).unwrap();
        assert_eq!(report.status, SolveStatus::Optimal);
        assert!((report.x_final[0] - 1.0).abs() <= 1e-6);
        assert!((report.x_final[1] - 2.0).abs() <= 1e-6);
    }

    #[test]
    fn huge_eps_stops_immediately() {
        let inst = nnls(Matrix::identity(2), vec![1.0, 2.0]);
        let cfg = BaselineConfig {
            eps: 1e9,
            ..BaselineConfig::default()
        };
        let report = run_baseline(&inst, &cfg).unwrap();
        assert_eq!(report.major_cycles, 0);
        assert_eq!(report.x_final, vec![0.0, 0.0]);
    }

    #[test]
    fn fw_drives_planted_objective_to_zero_monotonically() {
        let a = Matrix::from_rows(&[vec![0.3, -0.2], vec![0.1, 0.4]]).unwrap();
        let b = mat_vec(&a, &[1.0, 1.0]).unwrap();
        let inst = boxed(a, b);
        let cfg = BaselineConfig {
            method: BaselineMethod::Fw,
            eps: 1e-6,
            record_trace: true,
            max_iters: 100_000,
            ..BaselineConfig::default()
        };
        let report = run_baseline(&inst, &cfg).unwrap();
        assert_eq!(report.status, SolveStatus::Optimal);
        assert!(report.objective <= 1e-10);
        let mut prev = f64::INFINITY;
        for ev in &report.trace {
            assert!(ev.objective_after <= prev + 1e-12);
            prev = ev.objective_after;
        }
    }

    #[test]
    fn fw_rejects_infinite_bounds() {
        let inst = nnls(Matrix::identity(2), vec![1.0, 1.0]);
        let cfg = BaselineConfig {
            method: BaselineMethod::Fw,
            ..BaselineConfig::default()
        };
        assert!(matches!(
            run_baseline(&inst, &cfg),
            Err(Error::InfiniteBound)
        ));
    }

    #[test]
    fn all_baselines_reach_small_gap_on_capacitated_instance() {
        let a = Matrix::from_rows(&[vec![0.4, -0.1, 0.2, 0.3], vec![-0.3, 0.5, 0.0, 0.1]]).unwrap();
        let b = vec![0.3, 0.2];
        let inst = boxed(a, b);
        for method in [
            BaselineMethod::Pg,
            BaselineMethod::Pfg,
            BaselineMethod::Fw,
            BaselineMethod::Afw,
        ] {
            let cfg = BaselineConfig {
                method,
                eps: 1e-9,
                ..BaselineConfig::default()
            };
            let report = run_baseline(&inst, &cfg).unwrap();
            assert_eq!(report.status, SolveStatus::Optimal, "{method:?}");
        }
    }

    #[test]
    fn pfg_converges_on_nnls() {
        let a = Matrix::from_rows(&[vec![0.5, 0.2, -0.1], vec![0.1, -0.3, 0.4]]).unwrap();
        let inst = nnls(a, vec![0.4, -0.2]);
        let cfg = BaselineConfig {
            method: BaselineMethod::Pfg,
            ..BaselineConfig::default()
        };
        let report = run_baseline(&inst, &cfg).unwrap();
        assert_eq!(report.status, SolveStatus::Optimal);
    }

    #[test]
    fn baselines_reach_oracle_gap() {
        use crate::instance::{generate, Feasibility, GeneratorSpec, Shape};
        use crate::oracle::brute_force_optimum;
        for (seed, capacitated) in [(31u64, false), (32, true)] {
            let inst = generate(&GeneratorSpec {
                shape: Shape::Rectangular,
                m: 3,
                n: 7,
                capacitated,
                feasibility: Feasibility::RandomRhs,
                seed,
            })
            .unwrap();
            let cert = brute_force_optimum(&inst).unwrap();
            let methods: &[BaselineMethod] = if capacitated {
                &[
                    BaselineMethod::Pg,
                    BaselineMethod::Pfg,
                    BaselineMethod::Fw,
                    BaselineMethod::Afw,
                ]
            } else {
                &[BaselineMethod::Pg, BaselineMethod::Pfg]
            };
            for &method in methods {
                let cfg = BaselineConfig {
                    method,
                    ..BaselineConfig::default()
                };
                let report = run_baseline(&inst, &cfg).unwrap();
                assert!(
                    report.objective - cert.p_star <= 1e-6,
                    "{method:?}: gap {}",
                    report.objective - cert.p_star
                );
            }
        }
    }
}
