//! Problem instances: the data `(A, b, u)`, random generators for the two
//! experiment families (rectangular and near-square), node-arc incidence
//! instances, and a plain-text file format.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// One minimum-norm-point problem: minimize `½‖Ax − b‖²` over `0 ≤ x ≤ u`.
/// Upper bounds may be `f64::INFINITY`; all-infinite `u` is the NNLS case.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    a: Matrix,
    b: Vec<f64>,
    u: Vec<f64>,
}

impl Instance {
    pub fn new(a: Matrix, b: Vec<f64>, u: Vec<f64>) -> Result<Self> {
        if b.len() != a.rows() {
            return Err(Error::DimensionMismatch(format!(
                "b has length {}, matrix has {} rows",
                b.len(),
                a.rows()
            )));
        }
        if u.len() != a.cols() {
            return Err(Error::DimensionMismatch(format!(
                "u has length {}, matrix has {} columns",
                u.len(),
                a.cols()
            )));
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidValue("b entries must be finite".into()));
        }
        if u.iter().any(|v| v.is_nan() || *v <= 0.0) {
            return Err(Error::InvalidValue(
                "u entries must be positive (possibly inf)".into(),
            ));
        }
        Ok(Self { a, b, u })
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.a.rows()
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.a.cols()
    }

    #[inline]
    pub fn a(&self) -> &Matrix {
        &self.a
    }

    #[inline]
    pub fn b(&self) -> &[f64] {
        &self.b
    }

    #[inline]
    pub fn u(&self) -> &[f64] {
        &self.u
    }

    /// True when every upper bound is infinite (the NNLS case).
    pub fn is_uncapacitated(&self) -> bool {
        self.u.iter().all(|v| v.is_infinite())
    }

    /// True when every upper bound is finite (required by Frank-Wolfe).
    pub fn all_bounds_finite(&self) -> bool {
        self.u.iter().all(|v| v.is_finite())
    }
}

/// Aspect-ratio family of the generated instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shape {
    /// `n ≥ 2m`.
    Rectangular,
    /// `m ≤ n ≤ round(1.1 m)`.
    NearSquare,
}

/// How the right-hand side is produced.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Feasibility {
    /// `b` entries i.i.d. uniform on `[-0.5, 0.5]`.
    RandomRhs,
    /// `b = Σ_{j∈J} A^j z_j` for a random support `J` (each index kept with
    /// probability `chi`) and coefficients `z_j` uniform on `[0, 1]`, so
    /// `Ax = b, x ≥ 0` is feasible by construction.
    Planted { chi: f64 },
}

/// Parameters of [`generate`]. Deterministic given `seed`: substream 0 of a
/// ChaCha12 generator seeded with `seed` fills `A` row-major, substream 1
/// fills a random `b`, substream 2 samples the planted support `J`, and
/// substream 3 the planted coefficients `z`.
#[derive(Clone, Debug)]
pub struct GeneratorSpec {
    pub shape: Shape,
    pub m: usize,
    pub n: usize,
    pub capacitated: bool,
    pub feasibility: Feasibility,
    pub seed: u64,
}

impl GeneratorSpec {
    fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n == 0 {
            return Err(Error::InvalidSpec("m and n must be positive".into()));
        }
        match self.shape {
            Shape::Rectangular => {
                if self.n < 2 * self.m {
                    return Err(Error::InvalidSpec(format!(
                        "rectangular shape requires n >= 2m (m={}, n={})",
                        self.m, self.n
                    )));
                }
            }
            Shape::NearSquare => {
                let hi = (1.1 * self.m as f64).round() as usize;
                if self.n < self.m || self.n > hi {
                    return Err(Error::InvalidSpec(format!(
                        "near-square shape requires m <= n <= round(1.1 m) = {} (m={}, n={})",
                        hi, self.m, self.n
                    )));
                }
            }
        }
        if let Feasibility::Planted { chi } = self.feasibility {
            if !(chi > 0.0 && chi <= 1.0) {
                return Err(Error::InvalidSpec(format!(
                    "sparsity chi={chi} must lie in (0, 1]"
                )));
            }
        }
        Ok(())
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Generates a random instance per `spec`. `A` entries are i.i.d. uniform on
/// `[-0.5, 0.5]`; `b` is either random on the same interval or planted
/// feasible; `u` is all ones (capacitated) or all infinite.
pub fn generate(spec: &GeneratorSpec) -> Result<Instance> {
    spec.validate()?;
    let (m, n) = (spec.m, spec.n);
    let mut rng_a = stream_rng(spec.seed, 0);
    let data: Vec<f64> = (0..m * n).map(|_| rng_a.random_range(-0.5..0.5)).collect();
    let a = Matrix::new(m, n, data)?;
    let b = match spec.feasibility {
        Feasibility::RandomRhs => {
            let mut rng_b = stream_rng(spec.seed, 1);
            (0..m).map(|_| rng_b.random_range(-0.5..0.5)).collect()
        }
        Feasibility::Planted { chi } => {
            let mut rng_j = stream_rng(spec.seed, 2);
            let support: Vec<usize> = (0..n).filter(|_| rng_j.random::<f64>() < chi).collect();
            let mut rng_z = stream_rng(spec.seed, 3);
            let mut b = vec![0.0; m];
            for j in support {
                let z: f64 = rng_z.random_range(0.0..1.0);
                for (i, bi) in b.iter_mut().enumerate() {
                    *bi += a.get(i, j) * z;
                }
            }
            b
        }
    };
    let u = if spec.capacitated {
        vec![1.0; n]
    } else {
        vec![f64::INFINITY; n]
    };
    Instance::new(a, b, u)
}

/// Node-arc incidence instance: `A(i, j) = +1` if arc `j` enters node `i`,
/// `-1` if it leaves it. Node ids are 0-based and must be `< demands.len()`.
/// Upper bounds default to infinity unless `capacities` is given.
pub fn incidence_instance(
    arcs: &[(usize, usize)],
    demands: &[f64],
    capacities: Option<&[f64]>,
) -> Result<Instance> {
    let m = demands.len();
    let n = arcs.len();
    if m == 0 || n == 0 {
        return Err(Error::InvalidSpec(
            "need at least one node and one arc".into(),
        ));
    }
    let mut a = Matrix::zeros(m, n);
    for (j, &(tail, head)) in arcs.iter().enumerate() {
        if tail == head {
            return Err(Error::InvalidSpec(format!(
                "arc {j} is a self-loop at node {tail}"
            )));
        }
        if tail >= m || head >= m {
            return Err(Error::InvalidSpec(format!(
                "arc {j} = ({tail}, {head}) references a node >= {m}"
            )));
        }
        a.set(head, j, 1.0);
        a.set(tail, j, -1.0);
    }
    let u = match capacities {
        Some(c) => c.to_vec(),
        None => vec![f64::INFINITY; n],
    };
    Instance::new(a, demands.to_vec(), u)
}

fn fmt_real(v: f64) -> String {
    if v.is_infinite() {
        "inf".to_string()
    } else {
        // 17 significant digits round-trip f64 exactly.
        format!("{v:.16e}")
    }
}

/// Serializes an instance in the `MNP 1` text format:
///
/// ```text
/// MNP 1
/// <m> <n>
/// <m rows of A, n reals each>
/// <b: m reals>
/// <u: n reals or `inf`>
/// ```
pub fn write_instance(inst: &Instance) -> String {
    let (m, n) = (inst.m(), inst.n());
    let mut out = String::new();
    out.push_str("MNP 1\n");
    out.push_str(&format!("{m} {n}\n"));
    for i in 0..m {
        let row: Vec<String> = inst.a().row(i).iter().map(|&v| fmt_real(v)).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    let b: Vec<String> = inst.b().iter().map(|&v| fmt_real(v)).collect();
    out.push_str(&b.join(" "));
    out.push('\n');
    let u: Vec<String> = inst.u().iter().map(|&v| fmt_real(v)).collect();
    out.push_str(&u.join(" "));
    out.push('\n');
    out
}

fn parse_reals(line: &str, lineno: usize, expected: usize, what: &str) -> Result<Vec<f64>> {
    let toks: Vec<&str> = line.split_whitespace().collect();
    if toks.len() != expected {
        return Err(Error::Parse {
            line: lineno,
            msg: format!(
                "expected {expected} values for {what}, found {}",
                toks.len()
            ),
        });
    }
    toks.iter()
        .map(|t| {
            t.parse::<f64>().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("invalid numeric token '{t}'"),
            })
        })
        .collect()
}

/// Parses the text format written by [`write_instance`]. Errors carry
/// 1-based line numbers.
pub fn read_instance(text: &str) -> Result<Instance> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "empty file".into(),
    })?;
    if header.trim() != "MNP 1" {
        return Err(Error::Parse {
            line: 1,
            msg: format!("expected 'MNP 1', found '{header}'"),
        });
    }
    let (_, dims) = lines.next().ok_or(Error::Parse {
        line: 2,
        msg: "missing dimension line".into(),
    })?;
    let toks: Vec<&str> = dims.split_whitespace().collect();
    if toks.len() != 2 {
        return Err(Error::Parse {
            line: 2,
            msg: "expected '<m> <n>'".into(),
        });
    }
    let m: usize = toks[0].parse().map_err(|_| Error::Parse {
        line: 2,
        msg: format!("invalid dimension '{}'", toks[0]),
    })?;
    let n: usize = toks[1].parse().map_err(|_| Error::Parse {
        line: 2,
        msg: format!("invalid dimension '{}'", toks[1]),
    })?;
    if m == 0 || n == 0 {
        return Err(Error::Parse {
            line: 2,
            msg: "dimensions must be positive".into(),
        });
    }
    let mut data = Vec::with_capacity(m * n);
    for i in 0..m {
        let (idx, line) = lines.next().ok_or(Error::Parse {
            line: 3 + i,
            msg: format!("missing row {} of A", i + 1),
        })?;
        data.extend(parse_reals(line, idx + 1, n, "a row of A")?);
    }
    let (bidx, bline) = lines.next().ok_or(Error::Parse {
        line: m + 3,
        msg: "missing b line".into(),
    })?;
    let b = parse_reals(bline, bidx + 1, m, "b")?;
    let (uidx, uline) = lines.next().ok_or(Error::Parse {
        line: m + 4,
        msg: "missing u line".into(),
    })?;
    let utoks: Vec<&str> = uline.split_whitespace().collect();
    if utoks.len() != n {
        return Err(Error::Parse {
            line: uidx + 1,
            msg: format!("expected {n} values for u, found {}", utoks.len()),
        });
    }
    let mut u = Vec::with_capacity(n);
    for t in utoks {
        if t == "inf" {
            u.push(f64::INFINITY);
        } else {
            u.push(t.parse::<f64>().map_err(|_| Error::Parse {
                line: uidx + 1,
                msg: format!("invalid numeric token '{t}'"),
            })?);
        }
    }
    for (idx, rest) in lines {
        if !rest.trim().is_empty() {
            return Err(Error::Parse {
                line: idx + 1,
                msg: "unexpected trailing content".into(),
            });
        }
    }
    let a = Matrix::new(m, n, data).map_err(|e| Error::Parse {
        line: 3,
        msg: format!("bad matrix data: {e}"),
    })?;
    Instance::new(a, b, u).map_err(|e| Error::Parse {
        line: 2,
        msg: format!("{e}"),
    })
}
