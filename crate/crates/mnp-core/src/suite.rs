//! Seeded verification suite: random small instances are solved by every
//! framework variant and certified against the brute-force oracle, the
//! finiteness and monotonicity guarantees are checked on the traces, and
//! the circuit-based contraction/proximity bounds are verified with
//! enumerated imbalance measures. The CLI `verify` subcommand runs
//! [`run_all`]; the acceptance tests run the sections at full scale.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::centroid::CentroidMapping;
use crate::error::Result;
use crate::instance::{incidence_instance, Instance};
use crate::iterate::{check_optimality, make_iterate};
use crate::linalg::{self, Matrix};
use crate::oracle::{
    brute_force_optimum, enumerate_circuits, verify_contraction, verify_proximity, CheckReport,
};
use crate::solver::{solve, CycleKind, SolveStatus, SolverConfig};
use crate::update::{UpdateRule, UpdateRuleKind};

/// Section sizes. Defaults are sized for an interactive `verify` run; the
/// acceptance suite scales them up.
#[derive(Clone, Debug)]
pub struct SuiteConfig {
    pub seed: u64,
    /// Instances for the oracle-equivalence / finiteness / identity checks.
    pub equivalence_instances: usize,
    /// Maximum n for brute-force-certified instances (hard cap 12).
    pub max_n: usize,
    /// NNLS instances for the contraction section.
    pub contraction_instances: usize,
    /// Incidence instances for the proximity section.
    pub incidence_instances: usize,
    /// Random feasible points per instance in the proximity section.
    pub proximity_points: usize,
    /// Random TU incidence matrices for the circuit section.
    pub tu_matrices: usize,
    /// Instances and size cap for the coordinate independence section.
    pub independence_instances: usize,
    pub independence_max_n: usize,
    /// Random small conformal-decomposition cases.
    pub conformal_cases: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            equivalence_instances: 40,
            max_n: 8,
            contraction_instances: 12,
            incidence_instances: 8,
            proximity_points: 20,
            tu_matrices: 8,
            independence_instances: 20,
            independence_max_n: 50,
            conformal_cases: 10,
        }
    }
}

fn rng_for(cfg: &SuiteConfig, section: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
    rng.set_stream(section);
    rng
}

/// Random dense instance with uniform `[-0.5, 0.5]` entries and a mixed
/// right-hand side: planted feasible for even draws, random otherwise.
fn random_small_instance(rng: &mut ChaCha12Rng, max_n: usize, capacitated: bool) -> Instance {
    let n = rng.random_range(1..=max_n);
    let m = rng.random_range(1..=max_n.min(6));
    let data: Vec<f64> = (0..m * n).map(|_| rng.random_range(-0.5..0.5)).collect();
    let a = Matrix::new(m, n, data).unwrap();
    let planted = rng.random::<bool>();
    let b: Vec<f64> = if planted {
        let chi = if rng.random::<bool>() { 0.5 } else { 1.0 };
        let mut b = vec![0.0; m];
        for j in 0..n {
            if rng.random::<f64>() < chi {
                let z: f64 = rng.random_range(0.0..1.0);
                for (i, bi) in b.iter_mut().enumerate() {
                    *bi += a.get(i, j) * z;
                }
            }
        }
        b
    } else {
        (0..m).map(|_| rng.random_range(-0.5..0.5)).collect()
    };
    let u = if capacitated {
        vec![1.0; n]
    } else {
        vec![f64::INFINITY; n]
    };
    Instance::new(a, b, u).unwrap()
}

fn framework_variants(inst: &Instance) -> Vec<(UpdateRule, CentroidMapping)> {
    let mut rules = vec![UpdateRule::projected_gradient(), UpdateRule::coordinate()];
    if inst.all_bounds_finite() {
        rules.push(UpdateRule::frank_wolfe());
    }
    let mut out = Vec::new();
    for rule in rules {
        for mapping in [CentroidMapping::Oblivious, CentroidMapping::LocalNorm] {
            out.push((rule, mapping));
        }
    }
    out
}

/// Oracle equivalence plus the finiteness, monotonicity, and step-identity
/// checks gathered from the same solver traces.
pub fn run_equivalence(cfg: &SuiteConfig) -> Result<CheckReport> {
    let mut rng = rng_for(cfg, 0);
    let mut worst_rel_obj = 0.0f64;
    let mut worst_kkt = 0.0f64;
    let mut minor_excess = 0i64;
    let mut partition_repeats = 0usize;
    let mut major_cap_violations = 0usize;
    let mut monotonicity_violations = 0usize;
    let mut pythagorean_violations = 0usize;
    let mut pg_drop_violations = 0usize;
    let mut non_optimal_statuses = 0usize;
    for _ in 0..cfg.equivalence_instances {
        let capacitated = rng.random::<bool>();
        let inst = random_small_instance(&mut rng, cfg.max_n, capacitated);
        let cert = brute_force_optimum(&inst)?;
        for (rule, mapping) in framework_variants(&inst) {
            let solver_cfg = SolverConfig {
                rule,
                mapping,
                ..SolverConfig::default()
            };
            let report = solve(&inst, &solver_cfg)?;
            if report.status != SolveStatus::Optimal {
                non_optimal_statuses += 1;
                continue;
            }
            let rel = (report.objective - cert.p_star).abs() / (1.0 + cert.p_star);
            worst_rel_obj = worst_rel_obj.max(rel);
            let final_it = make_iterate(&inst, &report.x_final, 1e-12)?;
            if !check_optimality(&inst, &final_it, 1e-8).is_optimal() {
                worst_kkt = worst_kkt.max(crate::iterate::kkt_residual(&inst, &final_it));
            }
            // Finiteness: minor cycles per major cycle, distinct stable
            // partitions, and the 3^n bound on major cycles.
            let mut in_major = 0i64;
            for ev in &report.trace {
                match ev.cycle_kind {
                    CycleKind::MajorUpdate => in_major = 0,
                    CycleKind::MinorCentroid => {
                        in_major += 1;
                        minor_excess = minor_excess.max(in_major - inst.n() as i64);
                    }
                }
            }
            if let Some(parts) = &report.stable_partitions {
                let mut seen = std::collections::HashSet::new();
                for p in parts {
                    if !seen.insert(*p) {
                        partition_repeats += 1;
                    }
                }
            }
            if inst.n() <= 20 && report.major_cycles > 3usize.pow(inst.n() as u32) {
                major_cap_violations += 1;
            }
            // Trace identities.
            let slack = 1e-8 * (1.0 + linalg::norm_sq(inst.b()));
            let mut obj_prev = 0.5 * linalg::norm_sq(inst.b());
            for ev in &report.trace {
                if ev.objective_after > obj_prev + slack {
                    monotonicity_violations += 1;
                }
                if ev.cycle_kind == CycleKind::MinorCentroid {
                    if let (Some(alpha), Some(move_sq)) = (ev.alpha_star, ev.image_move_sq) {
                        if alpha >= 1.0 {
                            let drop_sq = 2.0 * obj_prev - 2.0 * ev.objective_after;
                            if (move_sq - drop_sq).abs() > slack {
                                pythagorean_violations += 1;
                            }
                        }
                    }
                }
                if ev.cycle_kind == CycleKind::MajorUpdate {
                    if let Some(predicted) = ev.predicted_drop {
                        let actual = obj_prev - ev.objective_after;
                        if (actual - predicted).abs()
                            > 1e-8 * predicted + 1e-13 * (1.0 + linalg::norm_sq(inst.b()))
                        {
                            pg_drop_violations += 1;
                        }
                    }
                }
                obj_prev = ev.objective_after;
            }
        }
    }
    let mut out = CheckReport::default();
    out.push_le("solver-status-optimal", non_optimal_statuses as f64, 0.0);
    out.push_le("solver-objective-matches-oracle", worst_rel_obj, 1e-7);
    out.push_le("solver-kkt-at-oracle-tolerance", worst_kkt, 1e-8);
    out.push_le(
        "finiteness-minor-cycles-per-major",
        minor_excess as f64,
        0.0,
    );
    out.push_le(
        "finiteness-stable-partition-repeats",
        partition_repeats as f64,
        0.0,
    );
    out.push_le(
        "finiteness-major-cycle-cap",
        major_cap_violations as f64,
        0.0,
    );
    out.push_le("trace-monotonicity", monotonicity_violations as f64, 0.0);
    out.push_le(
        "centroid-pythagorean-identity",
        pythagorean_violations as f64,
        0.0,
    );
    out.push_le("update-drop-identity", pg_drop_violations as f64, 0.0);
    Ok(out)
}

fn random_contraction_instance(rng: &mut ChaCha12Rng) -> Instance {
    // NNLS, small enough for circuit enumeration: n + m <= 12.
    let m = rng.random_range(2..=4usize);
    let n = rng.random_range((m + 1).max(3)..=8.min(12 - m));
    let data: Vec<f64> = (0..m * n).map(|_| rng.random_range(-0.5..0.5)).collect();
    let a = Matrix::new(m, n, data).unwrap();
    let b: Vec<f64> = (0..m).map(|_| rng.random_range(-0.5..0.5)).collect();
    Instance::new(a, b, vec![f64::INFINITY; n]).unwrap()
}

/// Geometric contraction of the gap at every major update, for the
/// projected-gradient and coordinate rules, with the enumerated circuit
/// imbalance in the factor.
pub fn run_contraction(cfg: &SuiteConfig) -> Result<CheckReport> {
    let mut rng = rng_for(cfg, 1);
    let mut worst_pg = f64::NEG_INFINITY;
    let mut worst_coord = f64::NEG_INFINITY;
    let mut worst_zbound = f64::NEG_INFINITY;
    for _ in 0..cfg.contraction_instances {
        let inst = random_contraction_instance(&mut rng);
        let cert = brute_force_optimum(&inst)?;
        let catalog = enumerate_circuits(inst.a())?;
        for rule in [UpdateRule::projected_gradient(), UpdateRule::coordinate()] {
            let solver_cfg = SolverConfig {
                rule,
                mapping: CentroidMapping::LocalNorm,
                ..SolverConfig::default()
            };
            let report = solve(&inst, &solver_cfg)?;
            let check = verify_contraction(&inst, rule.kind, &report, &cert, &catalog)?;
            for line in &check.checks {
                match (line.name.as_str(), rule.kind) {
                    ("contraction-factor-pg", _) => worst_pg = worst_pg.max(line.measured),
                    ("contraction-factor-coordinate", _) => {
                        worst_coord = worst_coord.max(line.measured)
                    }
                    ("pg-z-lower-bound", UpdateRuleKind::ProjectedGradient) => {
                        worst_zbound = worst_zbound.max(line.measured)
                    }
                    _ => {}
                }
            }
        }
    }
    let mut out = CheckReport::default();
    out.push_le("contraction-factor-pg", finite_or_zero(worst_pg), 1e-10);
    out.push_le(
        "contraction-factor-coordinate",
        finite_or_zero(worst_coord),
        1e-10,
    );
    out.push_le("pg-z-lower-bound", finite_or_zero(worst_zbound), 1e-10);
    Ok(out)
}

fn finite_or_zero(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        0.0
    }
}

fn random_incidence_instance(rng: &mut ChaCha12Rng) -> Instance {
    let m = rng.random_range(3..=4usize);
    let n = rng.random_range(m..=(12 - m));
    let mut arcs = Vec::with_capacity(n);
    for _ in 0..n {
        let tail = rng.random_range(0..m);
        let mut head = rng.random_range(0..m - 1);
        if head >= tail {
            head += 1;
        }
        arcs.push((tail, head));
    }
    let demands: Vec<f64> = (0..m).map(|_| rng.random_range(-0.5..0.5)).collect();
    incidence_instance(&arcs, &demands, None).unwrap()
}

/// Proximity bounds on random feasible points of the contraction suite's
/// instances plus network-incidence instances (where `kappa = 1` exactly).
pub fn run_proximity(cfg: &SuiteConfig) -> Result<CheckReport> {
    let mut rng = rng_for(cfg, 2);
    let mut worst_inf = f64::NEG_INFINITY;
    let mut worst_l2 = f64::NEG_INFINITY;
    let mut instances = Vec::new();
    for _ in 0..cfg.contraction_instances {
        instances.push(random_contraction_instance(&mut rng));
    }
    for _ in 0..cfg.incidence_instances {
        instances.push(random_incidence_instance(&mut rng));
    }
    for inst in &instances {
        let cert = brute_force_optimum(inst)?;
        let catalog = enumerate_circuits(inst.a())?;
        for _ in 0..cfg.proximity_points {
            let x: Vec<f64> = inst
                .u()
                .iter()
                .map(|&ui| {
                    if ui.is_finite() {
                        rng.random_range(0.0..ui)
                    } else {
                        rng.random_range(0.0..2.0)
                    }
                })
                .collect();
            let report = verify_proximity(inst, &x, &cert, &catalog)?;
            for line in &report.checks {
                let margin = line.measured - line.bound;
                match line.name.as_str() {
                    "proximity-inf-l1" => worst_inf = worst_inf.max(margin),
                    "proximity-l2" => worst_l2 = worst_l2.max(margin),
                    _ => {}
                }
            }
        }
    }
    let mut out = CheckReport::default();
    out.push_le("proximity-inf-l1", finite_or_zero(worst_inf), 0.0);
    out.push_le("proximity-l2", finite_or_zero(worst_l2), 0.0);
    Ok(out)
}

/// Circuit oracle spot values: `kappa = 1` on random TU incidence matrices
/// and on the directed triangle, `kappa = |c|` for `A = [1 c]`.
pub fn run_circuit_values(cfg: &SuiteConfig) -> Result<CheckReport> {
    let mut rng = rng_for(cfg, 3);
    let mut worst_tu = 0.0f64;
    for _ in 0..cfg.tu_matrices {
        let inst = random_incidence_instance(&mut rng);
        let catalog = enumerate_circuits(inst.a())?;
        worst_tu = worst_tu.max((catalog.kappa - 1.0).abs());
    }
    let triangle = incidence_instance(&[(0, 1), (1, 2), (2, 0)], &[0.0; 3], None)?;
    worst_tu = worst_tu.max((enumerate_circuits(triangle.a())?.kappa - 1.0).abs());
    let mut worst_ratio = 0.0f64;
    for c in [2.0, 3.0, 10.0] {
        let a = Matrix::from_rows(&[vec![1.0, c]])?;
        let catalog = enumerate_circuits(&a)?;
        worst_ratio = worst_ratio.max((catalog.kappa - c).abs());
    }
    let mut out = CheckReport::default();
    out.push_le("circuit-kappa-tu", worst_tu, 1e-12);
    out.push_le("circuit-kappa-ratio", worst_ratio, 1e-12);
    Ok(out)
}

/// Independence of the passive columns under coordinate updates from a zero
/// start: `A^J` must have full column rank at every stable point.
pub fn run_independence(cfg: &SuiteConfig) -> Result<CheckReport> {
    let mut rng = rng_for(cfg, 4);
    let mut violations = 0usize;
    for _ in 0..cfg.independence_instances {
        let n = rng.random_range(4..=cfg.independence_max_n.max(4));
        let m = rng.random_range(2..=n.clamp(2, 20));
        let data: Vec<f64> = (0..m * n).map(|_| rng.random_range(-0.5..0.5)).collect();
        let a = Matrix::new(m, n, data).unwrap();
        let b: Vec<f64> = (0..m).map(|_| rng.random_range(-0.5..0.5)).collect();
        let inst = Instance::new(a, b, vec![f64::INFINITY; n]).unwrap();
        let solver_cfg = SolverConfig {
            rule: UpdateRule::coordinate(),
            record_trace: false,
            ..SolverConfig::default()
        };
        let report = solve(&inst, &solver_cfg)?;
        let parts = report.stable_partitions.as_ref().expect("n <= 64");
        for &(lo, up) in parts {
            let free: Vec<usize> = (0..inst.n())
                .filter(|i| lo >> i & 1 == 0 && up >> i & 1 == 0)
                .collect();
            if free.is_empty() {
                continue;
            }
            let a_j = inst.a().columns(&free);
            if linalg::rank(&a_j) != free.len() {
                violations += 1;
            }
        }
    }
    let mut out = CheckReport::default();
    out.push_le("coordinate-independent-columns", violations as f64, 0.0);
    Ok(out)
}

/// Conformal decomposition identities on random small matrices: parts sum
/// to the input and sign-conform to it, with at most n parts.
pub fn run_conformal(cfg: &SuiteConfig) -> Result<CheckReport> {
    let mut rng = rng_for(cfg, 5);
    let mut sum_violations = 0usize;
    let mut sign_violations = 0usize;
    let mut length_excess = 0i64;
    for _ in 0..cfg.conformal_cases {
        let m = rng.random_range(1..=3usize);
        let n = rng.random_range(2..=5usize);
        let data: Vec<f64> = (0..m * n).map(|_| rng.random_range(-0.5..0.5)).collect();
        let a = Matrix::new(m, n, data).unwrap();
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let av = crate::linalg::mat_vec(&a, &v)?;
        let parts = crate::oracle::conformal_decomposition(&a, &v)?;
        length_excess = length_excess.max(parts.len() as i64 - n as i64);
        let mut sum = vec![0.0; n];
        for h in &parts {
            let ah = crate::linalg::mat_vec(&a, h)?;
            for i in 0..n {
                sum[i] += h[i];
                if h[i] * v[i] < 0.0 {
                    sign_violations += 1;
                }
            }
            for j in 0..m {
                if ah[j] * av[j] < -1e-12 * (1.0 + av[j].abs()) {
                    sign_violations += 1;
                }
            }
        }
        for i in 0..n {
            if (sum[i] - v[i]).abs() > 1e-10 * (1.0 + v[i].abs()) {
                sum_violations += 1;
            }
        }
    }
    let mut out = CheckReport::default();
    out.push_le("conformal-sum", sum_violations as f64, 0.0);
    out.push_le("conformal-signs", sign_violations as f64, 0.0);
    out.push_le("conformal-length", length_excess as f64, 0.0);
    Ok(out)
}

/// Runs every section with the given configuration.
pub fn run_all(cfg: &SuiteConfig) -> Result<CheckReport> {
    let mut out = CheckReport::default();
    out.merge(run_equivalence(cfg)?);
    out.merge(run_contraction(cfg)?);
    out.merge(run_proximity(cfg)?);
    out.merge(run_circuit_values(cfg)?);
    out.merge(run_independence(cfg)?);
    out.merge(run_conformal(cfg)?);
    Ok(out)
}
