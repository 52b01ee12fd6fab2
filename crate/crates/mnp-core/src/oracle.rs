//! Ground-truth machinery for small instances: exact optima by partition
//! enumeration, elementary-vector enumeration with the circuit imbalance
//! measure, conformal decompositions, and checkers for the proximity and
//! per-step contraction guarantees.
//!
//! Everything here is exponential in the instance size and guarded by hard
//! caps; it exists to certify the solver, not to compete with it. The
//! enumeration loops run on rayon when the `parallel` feature is enabled,
//! with results merged in deterministic index order.

use std::fmt;

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::iterate::{check_optimality, kkt_residual, make_iterate};
use crate::linalg::{
    self, mat_t_vec, mat_vec, min_norm_least_squares, one_dim_kernel, spectral_norm, Matrix,
};
use crate::par;
use crate::solver::{CycleKind, SolveReport};
use crate::update::UpdateRuleKind;

/// Partition enumeration visits `3^n` cases.
pub const BRUTE_FORCE_MAX_N: usize = 12;
/// Support enumeration visits `2^(n+m)` cases.
pub const CIRCUIT_MAX_DIM: usize = 16;

/// Exact optimum of a small instance, with the worst first-order violation
/// of the certified point.
#[derive(Clone, Debug)]
pub struct OptimumCertificate {
    pub p_star: f64,
    pub b_star: Vec<f64>,
    pub x_star: Vec<f64>,
    pub kkt_residual: f64,
}

/// All elementary vectors of the extended kernel `ker(A | -I_m)`, one per
/// sign class, scaled so the largest-magnitude entry is +1, and the derived
/// circuit imbalance `kappa`.
#[derive(Clone, Debug)]
pub struct CircuitCatalog {
    pub elementary_vectors: Vec<Vec<f64>>,
    pub kappa: f64,
}

/// One verification check: `PASS/FAIL <name> measured=<v> bound=<v>`.
#[derive(Clone, Debug)]
pub struct CheckLine {
    pub name: String,
    pub pass: bool,
    pub measured: f64,
    pub bound: f64,
}

impl fmt::Display for CheckLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} measured={:.6e} bound={:.6e}",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.measured,
            self.bound
        )
    }
}

/// A list of check lines; passes only if every line passes.
#[derive(Clone, Debug, Default)]
pub struct CheckReport {
    pub checks: Vec<CheckLine>,
}

impl CheckReport {
    pub fn push(&mut self, name: impl Into<String>, pass: bool, measured: f64, bound: f64) {
        self.checks.push(CheckLine {
            name: name.into(),
            pass,
            measured,
            bound,
        });
    }

    /// Convenience for `measured <= bound` checks.
    pub fn push_le(&mut self, name: impl Into<String>, measured: f64, bound: f64) {
        self.push(name, measured <= bound, measured, bound);
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn merge(&mut self, other: CheckReport) {
        self.checks.extend(other.checks);
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for line in &self.checks {
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}

fn vec_sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Decodes a base-3 partition code; digit 0 puts the coordinate at the
/// lower bound, 1 at a finite upper bound, 2 leaves it free. Codes placing
/// an infinitely bounded coordinate at its upper bound are invalid.
fn decode_partition(
    mut code: usize,
    n: usize,
    u: &[f64],
) -> Option<(Vec<usize>, Vec<usize>, Vec<usize>)> {
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    let mut free = Vec::new();
    for i in 0..n {
        match code % 3 {
            0 => lower.push(i),
            1 => {
                if u[i].is_infinite() {
                    return None;
                }
                upper.push(i);
            }
            _ => free.push(i),
        }
        code /= 3;
    }
    Some((lower, upper, free))
}

/// Least-squares candidate for one partition, kept only if it is feasible
/// and passes the first-order optimality check.
fn partition_candidate(
    inst: &Instance,
    lower: &[usize],
    upper: &[usize],
    free: &[usize],
    kkt_tol: f64,
) -> Option<(f64, Vec<f64>)> {
    let mut rhs = inst.b().to_vec();
    for &i in upper {
        let ui = inst.u()[i];
        for (row, r) in rhs.iter_mut().enumerate() {
            *r -= ui * inst.a().get(row, i);
        }
    }
    let a_f = inst.a().columns(free);
    let y = min_norm_least_squares(&a_f, &rhs).ok()?;
    let mut x = vec![0.0; inst.n()];
    for &i in lower {
        x[i] = 0.0;
    }
    for &i in upper {
        x[i] = inst.u()[i];
    }
    for (k, &i) in free.iter().enumerate() {
        x[i] = y[k];
    }
    let it = make_iterate(inst, &x, 1e-9).ok()?;
    if check_optimality(inst, &it, kkt_tol).is_optimal() {
        Some((it.objective(), it.x().to_vec()))
    } else {
        None
    }
}

/// Exact optimum by enumeration of all bound partitions (`n ≤ 12`). Every
/// partition contributes its equality-constrained least-squares point when
/// feasible; candidates passing the first-order check are optimal by
/// convexity, must all share the same image `b* = Ax*`, and the best one is
/// returned.
pub fn brute_force_optimum(inst: &Instance) -> Result<OptimumCertificate> {
    let n = inst.n();
    if n > BRUTE_FORCE_MAX_N {
        return Err(Error::SizeCap(format!(
            "brute_force_optimum handles n <= {BRUTE_FORCE_MAX_N}, got n = {n}"
        )));
    }
    let total = 3usize.pow(n as u32);
    let kkt_tol = 1e-8 * (1.0 + linalg::norm2(inst.b()));
    let u = inst.u().to_vec();
    let candidates: Vec<Option<(f64, Vec<f64>)>> = par::map_collect(total, |code| {
        let (lower, upper, free) = decode_partition(code, n, &u)?;
        partition_candidate(inst, &lower, &upper, &free, kkt_tol)
    });
    let mut best: Option<&(f64, Vec<f64>)> = None;
    for cand in candidates.iter().flatten() {
        if best.is_none_or(|(bo, _)| cand.0 < *bo) {
            best = Some(cand);
        }
    }
    let (p_star, x_star) = best
        .cloned()
        .ok_or_else(|| Error::NumericalFault("partition enumeration found no KKT point".into()))?;
    let b_star = mat_vec(inst.a(), &x_star)?;
    let agree_tol = 1e-8 * (1.0 + linalg::norm2(inst.b()));
    for (obj, x) in candidates.iter().flatten() {
        let img = mat_vec(inst.a(), x)?;
        let dev = linalg::norm_inf(&vec_sub(&img, &b_star));
        if dev > agree_tol {
            return Err(Error::NumericalFault(format!(
                "optimal image differs across partitions by {dev:e} (objectives {obj} vs {p_star})"
            )));
        }
    }
    let it = make_iterate(inst, &x_star, 1e-12)?;
    let kkt = kkt_residual(inst, &it);
    Ok(OptimumCertificate {
        p_star,
        b_star,
        x_star,
        kkt_residual: kkt,
    })
}

/// Enumerates the elementary vectors of `ker(A | -I_m)` over all supports
/// of size at most `rank + 1 = m + 1` (`n + m ≤ 16`). A support qualifies
/// when its columns have a one-dimensional kernel whose vector has no zero
/// entry on the support. `kappa` is the largest within-vector entry ratio,
/// at least 1.
pub fn enumerate_circuits(a: &Matrix) -> Result<CircuitCatalog> {
    let (m, n) = (a.rows(), a.cols());
    let dim = n + m;
    if dim > CIRCUIT_MAX_DIM {
        return Err(Error::SizeCap(format!(
            "enumerate_circuits handles n + m <= {CIRCUIT_MAX_DIM}, got {dim}"
        )));
    }
    let mut ext = Matrix::zeros(m, dim);
    for i in 0..m {
        for j in 0..n {
            ext.set(i, j, a.get(i, j));
        }
        ext.set(i, n + i, -1.0);
    }
    let max_support = m + 1;
    let total = 1usize << dim;
    let found: Vec<Option<Vec<f64>>> = par::map_collect(total, |mask| {
        let pc = mask.count_ones() as usize;
        if pc == 0 || pc > max_support {
            return None;
        }
        let support: Vec<usize> = (0..dim).filter(|i| mask >> i & 1 == 1).collect();
        let sub = ext.columns(&support);
        let v = one_dim_kernel(&sub)?;
        let maxabs = v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
        if v.iter().any(|x| x.abs() <= 1e-10 * maxabs) {
            return None; // kernel vector not fully supported: not a circuit
        }
        let pivot = v
            .iter()
            .copied()
            .max_by(|p, q| p.abs().partial_cmp(&q.abs()).unwrap())
            .unwrap();
        let mut full = vec![0.0; dim];
        for (k, &i) in support.iter().enumerate() {
            full[i] = v[k] / pivot;
        }
        Some(full)
    });
    let elementary_vectors: Vec<Vec<f64>> = found.into_iter().flatten().collect();
    let mut kappa = 1.0f64;
    for v in &elementary_vectors {
        let mut mx = 0.0f64;
        let mut mn = f64::INFINITY;
        for &x in v {
            if x != 0.0 {
                mx = mx.max(x.abs());
                mn = mn.min(x.abs());
            }
        }
        kappa = kappa.max(mx / mn);
    }
    Ok(CircuitCatalog {
        elementary_vectors,
        kappa,
    })
}

fn conforms(e: &[f64], sign: f64, target: &[f64], ztol: f64) -> bool {
    e.iter().zip(target).all(|(&ei, &ti)| {
        let ei = sign * ei;
        ei == 0.0 || (ti.abs() > ztol && ti * ei > 0.0)
    })
}

/// Greedy conformal decomposition of `v` against the extended kernel: each
/// returned part is a scaled elementary vector (restricted to the first `n`
/// coordinates) whose extension sign-conforms to `(v, Av)`, and the parts
/// sum to `v`. Subtracting the largest conforming multiple zeroes at least
/// one extended coordinate per step.
pub fn conformal_decomposition(a: &Matrix, v: &[f64]) -> Result<Vec<Vec<f64>>> {
    if v.len() != a.cols() {
        return Err(Error::DimensionMismatch(format!(
            "vector has length {}, matrix has {} columns",
            v.len(),
            a.cols()
        )));
    }
    let catalog = enumerate_circuits(a)?;
    let av = mat_vec(a, v)?;
    let mut target: Vec<f64> = v.iter().chain(av.iter()).copied().collect();
    let ztol = 1e-12 * (1.0 + linalg::norm_inf(&target));
    let mut parts: Vec<Vec<f64>> = Vec::new();
    for _ in 0..target.len() + 1 {
        if linalg::norm_inf(&target) <= ztol {
            // Flush sub-tolerance residue so the parts sum to v exactly up
            // to the tolerance.
            return Ok(parts);
        }
        let mut found = None;
        'search: for e in &catalog.elementary_vectors {
            for sign in [1.0, -1.0] {
                if conforms(e, sign, &target, ztol) {
                    found = Some((e, sign));
                    break 'search;
                }
            }
        }
        let (e, sign) = found.ok_or_else(|| {
            Error::NumericalFault(
                "no conforming elementary vector; conformal decomposition failed".into(),
            )
        })?;
        let mut t = f64::INFINITY;
        for (i, &raw) in e.iter().enumerate() {
            let ei = sign * raw;
            if ei != 0.0 {
                t = t.min(target[i] / ei);
            }
        }
        for (i, &raw) in e.iter().enumerate() {
            let ei = sign * raw;
            if ei != 0.0 {
                let rem = target[i] - t * ei;
                // Coordinates attaining the ratio land exactly on zero.
                target[i] = if rem.abs() <= ztol { 0.0 } else { rem };
            }
        }
        parts.push(e[..a.cols()].iter().map(|x| sign * t * x).collect());
    }
    Err(Error::NumericalFault(
        "conformal decomposition did not terminate".into(),
    ))
}

/// Nearest optimal point to `x`: minimizes `‖x − y‖` over the optimal face
/// `{y ∈ B(u) : Ay = b*}` by enumerating sub-partitions of the coordinates
/// whose optimal gradient vanishes.
fn nearest_optimal_point(
    inst: &Instance,
    x: &[f64],
    cert: &OptimumCertificate,
) -> Result<Vec<f64>> {
    let n = inst.n();
    let g_star = {
        let diff = vec_sub(&cert.b_star, inst.b());
        mat_t_vec(inst.a(), &diff)?
    };
    let gtol = 1e-9 * (1.0 + linalg::norm_inf(&g_star));
    let mut fixed0 = Vec::new();
    let mut fixed1 = Vec::new();
    let mut loose = Vec::new();
    for i in 0..n {
        if g_star[i] > gtol {
            fixed0.push(i);
        } else if g_star[i] < -gtol {
            fixed1.push(i);
        } else {
            loose.push(i);
        }
    }
    let cons_tol = 1e-8 * (1.0 + linalg::norm2(inst.b()));
    let mut best: Option<(f64, Vec<f64>)> = None;
    let codes = 3usize.pow(loose.len() as u32);
    for code in 0..codes {
        let mut c = code;
        let mut free = Vec::new();
        let mut at0 = fixed0.clone();
        let mut at1 = fixed1.clone();
        let mut valid = true;
        for &i in &loose {
            match c % 3 {
                0 => at0.push(i),
                1 => {
                    if inst.u()[i].is_infinite() {
                        valid = false;
                        break;
                    }
                    at1.push(i);
                }
                _ => free.push(i),
            }
            c /= 3;
        }
        if !valid {
            continue;
        }
        let mut c_rhs = cert.b_star.clone();
        for &i in &at1 {
            let ui = inst.u()[i];
            for (row, r) in c_rhs.iter_mut().enumerate() {
                *r -= ui * inst.a().get(row, i);
            }
        }
        let mut y = vec![0.0; n];
        for &i in &at1 {
            y[i] = inst.u()[i];
        }
        if free.is_empty() {
            if linalg::norm_inf(&c_rhs) > cons_tol {
                continue;
            }
        } else {
            let a_f = inst.a().columns(&free);
            let x_f: Vec<f64> = free.iter().map(|&i| x[i]).collect();
            let shift = {
                let ax_f = mat_vec(&a_f, &x_f)?;
                vec_sub(&c_rhs, &ax_f)
            };
            let d = min_norm_least_squares(&a_f, &shift)?;
            let y_f: Vec<f64> = x_f.iter().zip(&d).map(|(a, b)| a + b).collect();
            let achieved = mat_vec(&a_f, &y_f)?;
            if linalg::norm_inf(&vec_sub(&achieved, &c_rhs)) > cons_tol {
                continue; // b* not reachable with this free set
            }
            let mut feasible = true;
            for (k, &i) in free.iter().enumerate() {
                let ui = inst.u()[i];
                let ftol = 1e-9 * if ui.is_finite() { ui.max(1.0) } else { 1.0 };
                if y_f[k] < -ftol || (ui.is_finite() && y_f[k] > ui + ftol) {
                    feasible = false;
                    break;
                }
                y[i] = y_f[k].clamp(0.0, ui);
            }
            if !feasible {
                continue;
            }
        }
        let dist = linalg::norm2(&vec_sub(x, &y));
        if best.as_ref().is_none_or(|(d, _)| dist < *d) {
            best = Some((dist, y));
        }
    }
    best.map(|(_, y)| y)
        .ok_or_else(|| Error::NumericalFault("no feasible point of the optimal face found".into()))
}

/// Checks the proximity bounds `‖x − x*‖∞ ≤ κ‖Ax − b*‖₁` and
/// `‖x − x*‖₂ ≤ m κ ‖Ax − b*‖₂` against the nearest optimal point, with
/// absolute slack 1e-8.
pub fn verify_proximity(
    inst: &Instance,
    x: &[f64],
    cert: &OptimumCertificate,
    catalog: &CircuitCatalog,
) -> Result<CheckReport> {
    if inst.n() > BRUTE_FORCE_MAX_N {
        return Err(Error::SizeCap(format!(
            "verify_proximity handles n <= {BRUTE_FORCE_MAX_N}, got n = {}",
            inst.n()
        )));
    }
    let nearest = nearest_optimal_point(inst, x, cert)?;
    let diff = vec_sub(x, &nearest);
    let ax = mat_vec(inst.a(), x)?;
    let img_diff = vec_sub(&ax, &cert.b_star);
    let mut report = CheckReport::default();
    report.push_le(
        "proximity-inf-l1",
        linalg::norm_inf(&diff),
        catalog.kappa * linalg::norm1(&img_diff) + 1e-8,
    );
    report.push_le(
        "proximity-l2",
        linalg::norm2(&diff),
        (inst.m() as f64) * catalog.kappa * linalg::norm2(&img_diff) + 1e-8,
    );
    Ok(report)
}

/// Checks the per-update geometric contraction of the optimality gap along
/// a solver trace, and the lower bound on the projected-gradient direction
/// norm. The trace must come from a zero-start solve on an NNLS instance
/// with the given rule.
pub fn verify_contraction(
    inst: &Instance,
    rule: UpdateRuleKind,
    report: &SolveReport,
    cert: &OptimumCertificate,
    catalog: &CircuitCatalog,
) -> Result<CheckReport> {
    if !inst.is_uncapacitated() {
        return Err(Error::InvalidValue(
            "contraction bounds apply to uncapacitated (NNLS) instances".into(),
        ));
    }
    let m = inst.m() as f64;
    let n = inst.n() as f64;
    let kappa = catalog.kappa;
    let a_norm = spectral_norm(inst.a());
    let denom = match rule {
        UpdateRuleKind::ProjectedGradient => 2.0 * m * m * kappa * kappa * a_norm * a_norm,
        UpdateRuleKind::Coordinate => 2.0 * n * m * m * kappa * kappa * a_norm * a_norm,
        UpdateRuleKind::FrankWolfe => {
            return Err(Error::InvalidValue(
                "contraction bounds are stated for projected-gradient and coordinate updates"
                    .into(),
            ));
        }
    };
    let rho = 1.0 - 1.0 / denom;
    let mut obj_prev = 0.5 * linalg::norm_sq(inst.b());
    let mut worst_contraction = f64::NEG_INFINITY;
    let mut worst_zbound = f64::NEG_INFINITY;
    let mut majors_checked = 0usize;
    for ev in &report.trace {
        if ev.cycle_kind == CycleKind::MajorUpdate {
            let gap_before = obj_prev - cert.p_star;
            let gap_after = ev.objective_after - cert.p_star;
            worst_contraction = worst_contraction.max(gap_after - rho * gap_before);
            majors_checked += 1;
            if rule == UpdateRuleKind::ProjectedGradient {
                if let Some(z_norm) = ev.direction_norm {
                    if z_norm > 0.0 {
                        let lower =
                            gap_before.max(0.0).sqrt() / (std::f64::consts::SQRT_2 * m * kappa);
                        worst_zbound = worst_zbound.max(lower - z_norm);
                    }
                }
            }
        }
        obj_prev = ev.objective_after;
    }
    let mut out = CheckReport::default();
    let name = match rule {
        UpdateRuleKind::ProjectedGradient => "contraction-factor-pg",
        _ => "contraction-factor-coordinate",
    };
    if majors_checked == 0 {
        worst_contraction = 0.0;
    }
    out.push_le(name, worst_contraction, 1e-10);
    if rule == UpdateRuleKind::ProjectedGradient {
        if worst_zbound == f64::NEG_INFINITY {
            worst_zbound = 0.0;
        }
        out.push_le("pg-z-lower-bound", worst_zbound, 1e-10);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::centroid::CentroidMapping;
    use crate::instance::{generate, incidence_instance, Feasibility, GeneratorSpec, Shape};
    use crate::solver::{solve, SolverConfig};
    use crate::update::UpdateRule;

    fn nnls(a: Matrix, b: Vec<f64>) -> Instance {
        let n = a.cols();
        Instance::new(a, b, vec![f64::INFINITY; n]).unwrap()
    }

    #[test]
    fn brute_force_1d_inactive() {
        let inst = nnls(Matrix::from_rows(&[vec![1.0]]).unwrap(), vec![-1.0]);
        let cert = brute_force_optimum(&inst).unwrap();
        assert_eq!(cert.x_star, vec![0.0]);
        assert!((cert.p_star - 0.5).abs() <= 1e-14);
    }

    #[test]
    fn brute_force_exact_fit() {
        let inst = nnls(Matrix::identity(2), vec![1.0, 2.0]);
        let cert = brute_force_optimum(&inst).unwrap();
        assert!((cert.x_star[0] - 1.0).abs() <= 1e-12);
        assert!((cert.x_star[1] - 2.0).abs() <= 1e-12);
        assert!(cert.p_star <= 1e-14);
        assert!(cert.kkt_residual <= 1e-8);
    }

    #[test]
    fn brute_force_capacitated_boundary() {
        let inst = Instance::new(
            Matrix::from_rows(&[vec![1.0]]).unwrap(),
            vec![5.0],
            vec![1.0],
        )
        .unwrap();
        let cert = brute_force_optimum(&inst).unwrap();
        assert_eq!(cert.x_star, vec![1.0]);
        assert!((cert.p_star - 8.0).abs() <= 1e-12);
    }

    #[test]
    fn brute_force_planted_is_feasible() {
        let inst = generate(&GeneratorSpec {
            shape: Shape::Rectangular,
            m: 3,
            n: 6,
            capacitated: false,
            feasibility: Feasibility::Planted { chi: 1.0 },
            seed: 4,
        })
        .unwrap();
        let cert = brute_force_optimum(&inst).unwrap();
        assert!(cert.p_star <= 1e-12, "p* = {}", cert.p_star);
    }

    #[test]
    fn circuits_of_triangle_incidence() {
        let inst = incidence_instance(&[(0, 1), (1, 2), (2, 0)], &[0.0; 3], None).unwrap();
        let catalog = enumerate_circuits(inst.a()).unwrap();
        assert!(
            (catalog.kappa - 1.0).abs() <= 1e-12,
            "kappa = {}",
            catalog.kappa
        );
        assert!(!catalog.elementary_vectors.is_empty());
    }

    #[test]
    fn circuits_of_one_row_ratio() {
        for c in [2.0, 3.0, 10.0] {
            let a = Matrix::from_rows(&[vec![1.0, c]]).unwrap();
            let catalog = enumerate_circuits(&a).unwrap();
            assert!(
                (catalog.kappa - c).abs() <= 1e-12,
                "kappa = {} for c = {c}",
                catalog.kappa
            );
        }
    }

    #[test]
    fn circuits_vectors_lie_in_extended_kernel() {
        let a = Matrix::from_rows(&[vec![0.5, -0.25, 0.125], vec![0.0, 0.5, 0.25]]).unwrap();
        let catalog = enumerate_circuits(&a).unwrap();
        for v in &catalog.elementary_vectors {
            let h = &v[..3];
            let tail = &v[3..];
            let ah = mat_vec(&a, h).unwrap();
            for (p, q) in ah.iter().zip(tail) {
                assert!((p - q).abs() <= 1e-10, "extension mismatch: {v:?}");
            }
            let maxabs = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            assert!((maxabs - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn circuit_size_cap_enforced() {
        let a = Matrix::zeros(9, 9);
        assert!(matches!(enumerate_circuits(&a), Err(Error::SizeCap(_))));
    }

    #[test]
    fn conformal_of_zero_is_empty() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0]]).unwrap();
        assert!(conformal_decomposition(&a, &[0.0, 0.0]).unwrap().is_empty());
    }

    #[test]
    fn conformal_of_elementary_vector_is_single() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0]]).unwrap();
        // (2, -1) is in ker(A), and (2, -1, 0) is elementary in the extended
        // kernel.
        let parts = conformal_decomposition(&a, &[2.0, -1.0]).unwrap();
        assert_eq!(parts.len(), 1);
        assert!((parts[0][0] - 2.0).abs() <= 1e-12);
        assert!((parts[0][1] + 1.0).abs() <= 1e-12);
    }

    #[test]
    fn conformal_two_path_flow_uses_outer_vectors() {
        // Arcs 0->1, 1->2, 0->2 on three nodes; v routes one unit along each
        // path from 0 to 2.
        let inst = incidence_instance(&[(0, 1), (1, 2), (0, 2)], &[0.0; 3], None).unwrap();
        let v = [1.0, 1.0, 1.0];
        let parts = conformal_decomposition(inst.a(), &v).unwrap();
        assert!(parts.len() <= 3);
        let mut sum = [0.0; 3];
        for h in &parts {
            let ah = mat_vec(inst.a(), h).unwrap();
            assert!(
                linalg::norm_inf(&ah) > 1e-12,
                "inner vector in decomposition"
            );
            for (s, hi) in sum.iter_mut().zip(h) {
                *s += hi;
            }
            // Sign conformity against v and Av.
            let av = mat_vec(inst.a(), &v).unwrap();
            for i in 0..3 {
                assert!(h[i] * v[i] >= 0.0);
                assert!(ah[i] * av[i] >= -1e-12);
            }
        }
        for (s, vi) in sum.iter().zip(&v) {
            assert!((s - vi).abs() <= 1e-10);
        }
    }

    #[test]
    fn proximity_at_optimum_is_tight() {
        let inst = nnls(Matrix::identity(2), vec![1.0, 2.0]);
        let cert = brute_force_optimum(&inst).unwrap();
        let catalog = enumerate_circuits(inst.a()).unwrap();
        let report = verify_proximity(&inst, &cert.x_star.clone(), &cert, &catalog).unwrap();
        assert!(report.all_pass(), "{report}");
    }

    #[test]
    fn proximity_on_triangle_incidence() {
        let inst =
            incidence_instance(&[(0, 1), (1, 2), (2, 0)], &[0.5, -0.25, -0.25], None).unwrap();
        let cert = brute_force_optimum(&inst).unwrap();
        let catalog = enumerate_circuits(inst.a()).unwrap();
        for k in 0..10 {
            let x: Vec<f64> = (0..3)
                .map(|i| ((k * 7 + i * 3) % 11) as f64 / 5.0)
                .collect();
            let report = verify_proximity(&inst, &x, &cert, &catalog).unwrap();
            assert!(report.all_pass(), "point {k}: {report}");
        }
    }

    #[test]
    fn contraction_holds_on_identity_instances() {
        for m in 1..=4usize {
            let inst = nnls(Matrix::identity(m), vec![1.0; m]);
            let cert = brute_force_optimum(&inst).unwrap();
            let catalog = enumerate_circuits(inst.a()).unwrap();
            for rule in [UpdateRule::projected_gradient(), UpdateRule::coordinate()] {
                let cfg = SolverConfig {
                    rule,
                    mapping: CentroidMapping::LocalNorm,
                    ..SolverConfig::default()
                };
                let report = solve(&inst, &cfg).unwrap();
                let check = verify_contraction(&inst, rule.kind, &report, &cert, &catalog).unwrap();
                assert!(check.all_pass(), "m = {m} rule {:?}: {check}", rule.kind);
            }
        }
    }

    #[test]
    fn stable_zeroing_identity() {
        // For a stable NNLS point, zeroing any subset of positive
        // coordinates satisfies ‖Ax̂−b‖² = ‖Ax−b‖² + ‖Ax̂−Ax‖².
        let inst = generate(&GeneratorSpec {
            shape: Shape::Rectangular,
            m: 3,
            n: 7,
            capacitated: false,
            feasibility: Feasibility::RandomRhs,
            seed: 17,
        })
        .unwrap();
        let report = solve(&inst, &SolverConfig::default()).unwrap();
        let x = report.x_final.clone();
        let base = make_iterate(&inst, &x, 1e-12).unwrap();
        let positives: Vec<usize> = (0..inst.n()).filter(|&i| x[i] > 0.0).collect();
        for mask in 0..(1usize << positives.len().min(6)) {
            let mut hat = x.clone();
            for (k, &i) in positives.iter().enumerate() {
                if mask >> k & 1 == 1 {
                    hat[i] = 0.0;
                }
            }
            let hat_it = make_iterate(&inst, &hat, 1e-12).unwrap();
            let move_sq: f64 = base
                .residual()
                .iter()
                .zip(hat_it.residual())
                .map(|(p, q)| (p - q) * (p - q))
                .sum();
            let lhs = 2.0 * hat_it.objective();
            let rhs = 2.0 * base.objective() + move_sq;
            assert!(
                (lhs - rhs).abs() <= 1e-8 * (1.0 + rhs),
                "mask {mask}: {lhs} vs {rhs}"
            );
        }
    }
}
