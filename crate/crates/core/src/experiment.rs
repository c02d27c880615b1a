//! The heat-type benchmark `∂_t u − Δu + |x|²u = f` with exact solution
//! `u(x, t) = (Σ_i x_i + sin t)·e^{−|x|²/2}`, plus the count and abscissa
//! tables.

use std::fmt::Write as _;
use std::sync::Arc;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::galerkin::{
    assemble, integrate_leapfrog, source_project, OperatorSpec, SourceSpec, SparseOperator, SpatialFactor,
};
use crate::multi_index::{IndexSet, LevelMap, SetKind, DEFAULT_SIZE_CAP};
use crate::quadrature::{cross_point_union, gauss_hermite_rule, tensor_point_set, SparseQuadrature};
use crate::spectral::{
    project_separable, squared_error_with, BasisParams, CoeffVector, SeparableCoefficients, SeparableFunction,
    SeparableSum,
};

pub const DEFAULT_DT: f64 = 1e-5;
pub const DEFAULT_T_FINAL: f64 = 0.1;
pub const DEFAULT_ALPHA: f64 = 1.01;

/// Published errors of the benchmark by `(dim, level)`.
pub const REFERENCE_ERRORS: &[(usize, usize, f64)] = &[
    (2, 2, 2.24e-3),
    (2, 3, 3.99e-4),
    (2, 4, 4.75e-6),
    (2, 5, 2.72e-7),
    (3, 2, 7.99e-3),
    (3, 3, 5.44e-3),
    (3, 4, 1.93e-3),
    (3, 5, 2.66e-4),
    (4, 3, 2.10e-2),
    (4, 4, 1.14e-2),
    (4, 5, 4.11e-3),
];

pub fn reference_error(dim: usize, level: usize) -> Option<f64> {
    REFERENCE_ERRORS
        .iter()
        .find(|r| r.0 == dim && r.1 == level)
        .map(|r| r.2)
}

/// Level pairs that the published table leaves empty.
pub fn is_skipped(dim: usize, level: usize) -> bool {
    dim == 4 && level == 2
}

/// Published abscissa counts for 31-point rules by `(kind, dim)`.
pub const REFERENCE_ABSCISSAS: &[(&str, usize, usize)] = &[
    ("full", 2, 961),
    ("full", 3, 29791),
    ("full", 4, 923521),
    ("rhc", 2, 298),
    ("rhc", 3, 6612),
    ("rhc", 4, 82704),
    ("ohc", 2, 108),
    ("ohc", 3, 3348),
    ("ohc", 4, 28944),
];

pub fn reference_abscissas(kind: &str, dim: usize) -> Option<usize> {
    REFERENCE_ABSCISSAS
        .iter()
        .find(|r| r.0 == kind && r.1 == dim)
        .map(|r| r.2)
}

/// Rule orders used when forming abscissa unions of cross-type sets.
pub const ABSCISSA_LADDER: [usize; 5] = [1, 3, 7, 15, 31];

/// Smolyak index set and quadrature for a table level: level `ℓ` in `d`
/// dimensions is the Smolyak sum `|i|₁ ≤ ℓ + d` over rules with `2^i − 1`
/// points, and the index set is the union of the matching coefficient boxes.
pub fn benchmark_kind(dim: usize, level: usize) -> SetKind {
    SetKind::SmolyakUnion {
        level: level + dim,
        map: LevelMap::Doubling,
    }
}

/// One solved benchmark instance.
#[derive(Debug, Clone)]
pub struct BenchmarkRun {
    pub coeffs: CoeffVector,
    pub operator: SparseOperator,
    /// `√|Q[(u_N − u)²]|` with the sparse quadrature that built the projections.
    pub error: f64,
    /// `‖u_N − u‖` from the exact expansion of `u`: in-set differences plus tail.
    pub coefficient_error: f64,
    pub steps: usize,
    pub seconds: f64,
}

/// Time-stepping and basis settings for [`solve_benchmark`].
#[derive(Debug, Clone)]
pub struct BenchmarkSettings {
    pub params: BasisParams,
    pub dt: f64,
    pub t_final: f64,
}

impl BenchmarkSettings {
    pub fn new(dim: usize, alpha: f64) -> Result<Self> {
        Ok(Self {
            params: BasisParams::isotropic(dim, alpha, 0.0)?,
            dt: DEFAULT_DT,
            t_final: DEFAULT_T_FINAL,
        })
    }
}

fn gaussian(dim: usize) -> SeparableFunction {
    SeparableFunction::repeated(dim, |x| (-0.5 * x * x).exp())
}

/// `Σ_i x_i·e^{−|x|²/2}`
fn linear_gaussian(dim: usize) -> SeparableSum {
    let mut s = SeparableSum::new();
    for i in 0..dim {
        s.push(1.0, gaussian(dim).with_factor(i, |x| x * (-0.5 * x * x).exp()));
    }
    s
}

/// Exact benchmark solution `(x_1 + ... + x_d + sin t) exp(-|x|^2 / 2)`.
pub fn exact_solution(x: &[f64], t: f64) -> f64 {
    let r2: f64 = x.iter().map(|v| v * v).sum();
    (x.iter().sum::<f64>() + t.sin()) * (-0.5 * r2).exp()
}

/// The benchmark source split into time profiles `cos t`, `sin t` and `1`.
pub fn benchmark_source(dim: usize) -> SourceSpec {
    let d = dim as f64;
    let g = || SpatialFactor::Separable(SeparableSum::new().with(1.0, gaussian(dim)));
    let mut lin = SeparableSum::new();
    for (c, f) in linear_gaussian(dim).terms() {
        lin.push((d + 2.0) * c, f.clone());
    }
    SourceSpec::new()
        .with(f64::cos, g())
        .with(move |t: f64| d * t.sin(), g())
        .with(|_| 1.0, SpatialFactor::Separable(lin))
}

/// Quadrature used for projections and the error of a benchmark set: the
/// Smolyak rule itself for Smolyak unions, otherwise a tensor rule with
/// `maxdeg + 1` points per coordinate.  Rules use the unit weight `e^{−x²}`.
pub fn benchmark_quadrature(kind: &SetKind, set: &IndexSet) -> Result<SparseQuadrature> {
    match kind {
        SetKind::SmolyakUnion { level, map } => SparseQuadrature::smolyak(*level, set.dim(), map, None),
        _ => {
            let rule = Arc::new(gauss_hermite_rule(set.max_degree() + 1)?);
            Ok(SparseQuadrature::tensor(vec![rule; set.dim()]))
        }
    }
}

/// Builds, projects, assembles and integrates the benchmark on one index set.
pub fn solve_benchmark(kind: &SetKind, dim: usize, settings: &BenchmarkSettings) -> Result<BenchmarkRun> {
    let start = Instant::now();
    if settings.params.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: settings.params.dim(),
        });
    }
    let set = Arc::new(IndexSet::build(kind.clone(), dim, DEFAULT_SIZE_CAP)?);
    let q = benchmark_quadrature(kind, &set)?;
    let p = &settings.params;

    let a0 = project_separable(&linear_gaussian(dim), set.clone(), p, &q)?;
    let source = source_project(&benchmark_source(dim), set.clone(), p, &q)?;
    let operator = assemble(&OperatorSpec::harmonic_oscillator(dim), &set, p)?;
    let coeffs = integrate_leapfrog(&operator, &source, &a0, settings.dt, settings.t_final)?;

    let t = settings.t_final;
    let err_sq = squared_error_with(&coeffs, p, |x| exact_solution(x, t), &q)?;

    let exact = exact_coefficients(dim, t, p, set.max_degree())?;
    let coefficient_error = exact.error_sq(&coeffs)?.max(0.0).sqrt();

    Ok(BenchmarkRun {
        coeffs,
        operator,
        error: err_sq.abs().sqrt(),
        coefficient_error,
        steps: (settings.t_final / settings.dt).ceil() as usize,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Expansion of the exact solution at time `t`, accurate far past `maxdeg`.
fn exact_coefficients(dim: usize, t: f64, p: &BasisParams, maxdeg: usize) -> Result<SeparableCoefficients> {
    let f = linear_gaussian(dim).with(t.sin(), gaussian(dim));
    let nmax = (maxdeg + 80).min(300);
    SeparableCoefficients::from_functions(&f, p, nmax, 400)
}

/// Plain-text CSV table.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i128),
    Real(f64),
    Text(String),
    Missing,
}

impl Cell {
    fn render(&self, out: &mut String) {
        match self {
            Cell::Int(v) => {
                let _ = write!(out, "{v}");
            }
            Cell::Real(v) => {
                let _ = write!(out, "{v:.16e}");
            }
            Cell::Text(s) => {
                if s.contains([',', '"', '\n']) {
                    let _ = write!(out, "\"{}\"", s.replace('"', "\"\""));
                } else {
                    out.push_str(s);
                }
            }
            Cell::Missing => out.push_str("n/a"),
        }
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i128)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v as i128)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Missing, Into::into)
    }
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            for (k, c) in row.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                c.render(&mut out);
            }
            out.push('\n');
        }
        out
    }
}

/// Cardinality of each requested set.
pub fn counts_table(entries: &[(usize, SetKind)]) -> Result<Table> {
    let mut t = Table::new(["d", "kind", "params", "cardinality"]);
    for (d, kind) in entries {
        let s = IndexSet::build(kind.clone(), *d, DEFAULT_SIZE_CAP)?;
        t.push(vec![(*d).into(), kind.name().into(), kind.params_string().into(), s.len().into()]);
    }
    Ok(t)
}

/// Distinct quadrature points for each request: full grids are tensor rules
/// of `order` points, cross-type sets are unions over [`ABSCISSA_LADDER`]
/// order tuples admitted by the set's inequality (with `N = order`).
pub fn abscissas_table(entries: &[(usize, SetKind)], order: usize) -> Result<Table> {
    let mut t = Table::new(["d", "kind", "params", "points", "reference", "delta"]);
    for (d, kind) in entries {
        let count = match kind {
            SetKind::Full { .. } => {
                let r = gauss_hermite_rule(order)?;
                let rules = vec![&r; *d];
                if (order as f64).powi(*d as i32) <= 4e6 {
                    tensor_point_set(&rules).len()
                } else {
                    order.pow(*d as u32)
                }
            }
            SetKind::SmolyakUnion { level, map } => {
                crate::quadrature::sparse_point_union(*level, *d, map, None)?.len()
            }
            _ => cross_point_union(kind, *d, &ABSCISSA_LADDER, None)?.len(),
        };
        let reference = (order == 31).then(|| reference_abscissas(kind.name(), *d)).flatten();
        let delta = reference.map(|r| count as i64 - r as i64);
        t.push(vec![
            (*d).into(),
            kind.name().into(),
            kind.params_string().into(),
            count.into(),
            reference.into(),
            delta.into(),
        ]);
    }
    Ok(t)
}

/// One convergence row; `None` for skipped pairs.
#[derive(Debug, Clone)]
pub struct ConvergenceRow {
    pub dim: usize,
    pub level: usize,
    pub run: Option<BenchmarkRun>,
    pub dof: Option<usize>,
}

/// Solves every `(dim, level)` pair except the skipped ones.
pub fn convergence_rows(pairs: &[(usize, usize)], alpha: &[f64], beta: &[f64], dt: f64, t_final: f64) -> Result<Vec<ConvergenceRow>> {
    let mut out = Vec::with_capacity(pairs.len());
    for &(dim, level) in pairs {
        if is_skipped(dim, level) {
            out.push(ConvergenceRow {
                dim,
                level,
                run: None,
                dof: None,
            });
            continue;
        }
        let settings = BenchmarkSettings {
            params: expand_params(dim, alpha, beta)?,
            dt,
            t_final,
        };
        let run = solve_benchmark(&benchmark_kind(dim, level), dim, &settings)?;
        out.push(ConvergenceRow {
            dim,
            level,
            dof: Some(run.coeffs.len()),
            run: Some(run),
        });
    }
    Ok(out)
}

/// Per-coordinate parameters from either one value or one value per coordinate.
pub fn expand_params(dim: usize, alpha: &[f64], beta: &[f64]) -> Result<BasisParams> {
    let widen = |v: &[f64], what: &str| -> Result<Vec<f64>> {
        match v.len() {
            1 => Ok(vec![v[0]; dim]),
            n if n == dim => Ok(v.to_vec()),
            n => Err(Error::InvalidParameter(format!(
                "{what} needs 1 or {dim} values, got {n}"
            ))),
        }
    };
    BasisParams::new(&widen(alpha, "alpha")?, &widen(beta, "beta")?)
}

pub fn convergence_table(rows: &[ConvergenceRow], timing: bool) -> Table {
    let mut header = vec!["d", "level", "dof", "error", "coefficient_error", "reference"];
    if timing {
        header.push("wall_time");
    }
    let mut t = Table::new(header);
    for r in rows {
        let mut row: Vec<Cell> = vec![
            r.dim.into(),
            r.level.into(),
            r.dof.into(),
            r.run.as_ref().map(|x| x.error).into(),
            r.run.as_ref().map(|x| x.coefficient_error).into(),
            reference_error(r.dim, r.level).into(),
        ];
        if timing {
            row.push(r.run.as_ref().map(|x| x.seconds).into());
        }
        t.push(row);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_format() {
        let mut t = Table::new(["a", "b", "c", "d"]);
        t.push(vec![3usize.into(), 0.1f64.into(), "x,y".into(), Cell::Missing]);
        assert_eq!(t.to_csv(), "a,b,c,d\n3,1.0000000000000001e-1,\"x,y\",n/a\n");
    }

    #[test]
    fn source_has_three_terms() {
        assert_eq!(benchmark_source(2).len(), 3);
    }

    #[test]
    fn source_at_zero_matches_direct_projection() {
        let dim = 2;
        let kind = benchmark_kind(dim, 3);
        let set = Arc::new(IndexSet::build(kind.clone(), dim, 1 << 20).unwrap());
        let q = benchmark_quadrature(&kind, &set).unwrap();
        let p = BasisParams::isotropic(dim, 1.01, 0.0).unwrap();
        let src = source_project(&benchmark_source(dim), set.clone(), &p, &q).unwrap();
        let direct = crate::spectral::project_with(
            |x| {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                (1.0 + 4.0 * x.iter().sum::<f64>()) * (-0.5 * r2).exp()
            },
            set,
            &p,
            &q,
        )
        .unwrap();
        for (a, b) in src.eval(0.0).iter().zip(direct.values()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn exact_resolution_with_unit_scale() {
        let s = BenchmarkSettings::new(2, 1.0).unwrap();
        let run = solve_benchmark(&benchmark_kind(2, 2), 2, &s).unwrap();
        assert!(run.error < 1e-10, "{}", run.error);
        assert!(run.coefficient_error < 1e-10);
    }

    #[test]
    fn skipped_pair_is_missing() {
        let rows = convergence_rows(&[(4, 2)], &[1.01], &[0.0], 1e-3, 0.01).unwrap();
        let csv = convergence_table(&rows, false).to_csv();
        assert!(csv.lines().nth(1).unwrap().starts_with("4,2,n/a,n/a,n/a,n/a"));
    }

    #[test]
    fn abscissa_rows() {
        let t = abscissas_table(&[(1, SetKind::Full { n: 30 }), (2, SetKind::Full { n: 30 })], 31).unwrap();
        let csv = t.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert!(lines[1].starts_with("1,full,N=30,31,n/a,n/a"));
        assert!(lines[2].starts_with("2,full,N=30,961,961,0"));
    }
}
