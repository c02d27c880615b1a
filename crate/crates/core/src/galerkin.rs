//! Galerkin discretization of `∂_t u + Lu = f` with
//! `Lu = −∇·(A∇u) + b·∇u + cu`, constant `A` and polynomial `b`, `c`.
//!
//! The assembled matrix is `M[m][n] = ⟨−L H_n, H_m⟩`, so the semidiscrete
//! system reads `a' = M a + f̂`.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::Arc;

use log::warn;
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hermite::{derivative_action, multiply_x_action};
use crate::multi_index::IndexSet;
use crate::quadrature::SparseQuadrature;
use crate::spectral::{project_separable, project_with, BasisParams, CoeffVector, SeparableSum};

/// Largest polynomial degree accepted in drift and potential.
pub const MAX_POLY_DEGREE: usize = 8;

/// Relative size below which an assembled entry is treated as cancellation
/// residue and dropped.
const DROP_TOL: f64 = 1e-14;

/// Polynomial in `d` variables stored by monomial exponent.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Polynomial {
    dim: usize,
    terms: Vec<(Vec<usize>, f64)>,
}

impl Polynomial {
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            terms: Vec::new(),
        }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        Self::zero(dim).plus_term(vec![0; dim], c)
    }

    /// `c·x_j`
    pub fn linear(dim: usize, j: usize, c: f64) -> Self {
        let mut e = vec![0; dim];
        e[j] = 1;
        Self::zero(dim).plus_term(e, c)
    }

    /// `c·|x|²`
    pub fn squared_norm(dim: usize, c: f64) -> Self {
        let mut p = Self::zero(dim);
        for j in 0..dim {
            let mut e = vec![0; dim];
            e[j] = 2;
            p = p.plus_term(e, c);
        }
        p
    }

    /// Adds `c·x^exponent`, merging with an existing monomial.
    pub fn plus_term(mut self, exponent: Vec<usize>, c: f64) -> Self {
        assert_eq!(exponent.len(), self.dim, "monomial arity must match the dimension");
        if let Some(t) = self.terms.iter_mut().find(|t| t.0 == exponent) {
            t.1 += c;
        } else {
            self.terms.push((exponent, c));
        }
        self.terms.retain(|t| t.1 != 0.0);
        self
    }

    pub fn plus(mut self, other: &Polynomial) -> Self {
        for (e, c) in &other.terms {
            self = self.plus_term(e.clone(), *c);
        }
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[(Vec<usize>, f64)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; zero for the zero polynomial.
    pub fn degree(&self) -> usize {
        self.terms
            .iter()
            .map(|(e, _)| e.iter().sum())
            .max()
            .unwrap_or(0)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| c * e.iter().zip(x).map(|(&k, &v)| v.powi(k as i32)).product::<f64>())
            .sum()
    }
}

/// Coefficients of `L = −∇·(A∇·) + b·∇ + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSpec {
    dim: usize,
    /// Row-major `d×d`.
    diffusion: Vec<f64>,
    drift: Vec<Polynomial>,
    potential: Polynomial,
}

impl OperatorSpec {
    pub fn new(
        diffusion: Vec<f64>,
        drift: Vec<Polynomial>,
        potential: Polynomial,
    ) -> Result<Self> {
        let dim = potential.dim();
        let spec = Self {
            dim,
            diffusion,
            drift,
            potential,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// `L = −Δ`
    pub fn laplacian(dim: usize) -> Self {
        let mut a = vec![0.0; dim * dim];
        for j in 0..dim {
            a[j * dim + j] = 1.0;
        }
        Self {
            dim,
            diffusion: a,
            drift: vec![Polynomial::zero(dim); dim],
            potential: Polynomial::zero(dim),
        }
    }

    /// `L = −Δ + |x|²`
    pub fn harmonic_oscillator(dim: usize) -> Self {
        let mut s = Self::laplacian(dim);
        s.potential = Polynomial::squared_norm(dim, 1.0);
        s
    }

    /// The zero operator.
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            diffusion: vec![0.0; dim * dim],
            drift: vec![Polynomial::zero(dim); dim],
            potential: Polynomial::zero(dim),
        }
    }

    pub fn with_drift(mut self, drift: Vec<Polynomial>) -> Result<Self> {
        self.drift = drift;
        self.validate()?;
        Ok(self)
    }

    pub fn with_potential(mut self, potential: Polynomial) -> Result<Self> {
        self.potential = potential;
        self.validate()?;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn diffusion(&self, i: usize, j: usize) -> f64 {
        self.diffusion[i * self.dim + j]
    }

    pub fn drift(&self) -> &[Polynomial] {
        &self.drift
    }

    pub fn potential(&self) -> &Polynomial {
        &self.potential
    }

    pub fn has_drift(&self) -> bool {
        self.drift.iter().any(|b| !b.is_zero())
    }

    /// Symmetric, positive semidefinite diffusion and bounded polynomial degrees.
    pub fn validate(&self) -> Result<()> {
        let d = self.dim;
        if d == 0 {
            return Err(Error::InvalidParameter("dimension must be at least 1".into()));
        }
        if self.diffusion.len() != d * d {
            return Err(Error::DimensionMismatch {
                expected: d * d,
                got: self.diffusion.len(),
            });
        }
        if self.diffusion.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("diffusion entries must be finite".into()));
        }
        let scale = self.diffusion.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for i in 0..d {
            for j in 0..i {
                if (self.diffusion[i * d + j] - self.diffusion[j * d + i]).abs() > 1e-14 * scale {
                    return Err(Error::InvalidParameter(format!(
                        "diffusion matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        let a = DMatrix::from_row_slice(d, d, &self.diffusion);
        let min_eig = SymmetricEigen::new(a)
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if min_eig < -1e-12 {
            return Err(Error::InvalidParameter(format!(
                "diffusion matrix is not positive semidefinite (eigenvalue {min_eig:e})"
            )));
        }
        if self.drift.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: self.drift.len(),
            });
        }
        for p in self.drift.iter().chain(std::iter::once(&self.potential)) {
            if p.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: p.dim(),
                });
            }
            if p.degree() > MAX_POLY_DEGREE {
                return Err(Error::InvalidParameter(format!(
                    "polynomial degree {} exceeds the limit of {MAX_POLY_DEGREE}",
                    p.degree()
                )));
            }
            if p.terms().iter().any(|t| !t.1.is_finite()) {
                return Err(Error::InvalidParameter("polynomial coefficients must be finite".into()));
            }
        }
        Ok(())
    }
}

/// Sparse coefficient vector over the unbounded index lattice.
type Sparse = HashMap<Vec<usize>, f64>;

fn apply_derivative(v: &Sparse, j: usize, p: &BasisParams) -> Sparse {
    let mut out = Sparse::with_capacity(v.len() * 2);
    for (n, &c) in v {
        for (m, w) in derivative_action(n[j], p.get(j)) {
            if w != 0.0 {
                let mut k = n.clone();
                k[j] = m;
                *out.entry(k).or_insert(0.0) += w * c;
            }
        }
    }
    out
}

fn apply_multiply_x(v: &Sparse, j: usize, p: &BasisParams) -> Sparse {
    let mut out = Sparse::with_capacity(v.len() * 3);
    for (n, &c) in v {
        for (m, w) in multiply_x_action(n[j], p.get(j)) {
            if w != 0.0 {
                let mut k = n.clone();
                k[j] = m;
                *out.entry(k).or_insert(0.0) += w * c;
            }
        }
    }
    out
}

fn apply_polynomial(v: &Sparse, poly: &Polynomial, p: &BasisParams) -> Sparse {
    let mut out = Sparse::new();
    for (e, c) in poly.terms() {
        let mut w = v.clone();
        for (j, &k) in e.iter().enumerate() {
            for _ in 0..k {
                w = apply_multiply_x(&w, j, p);
            }
        }
        for (n, val) in w {
            *out.entry(n).or_insert(0.0) += c * val;
        }
    }
    out
}

fn accumulate(into: &mut Sparse, from: Sparse, scale: f64) {
    for (n, v) in from {
        *into.entry(n).or_insert(0.0) += scale * v;
    }
}

/// `−L` applied to one basis function, without truncation.
fn minus_l_column(op: &OperatorSpec, p: &BasisParams, n: &[usize]) -> Sparse {
    let d = op.dim();
    let mut e = Sparse::new();
    e.insert(n.to_vec(), 1.0);
    let mut out = Sparse::new();
    let first: Vec<Sparse> = (0..d).map(|j| apply_derivative(&e, j, p)).collect();
    for i in 0..d {
        for j in 0..d {
            let a = op.diffusion(i, j);
            if a != 0.0 {
                accumulate(&mut out, apply_derivative(&first[j], i, p), a);
            }
        }
    }
    for (i, b) in op.drift().iter().enumerate() {
        if !b.is_zero() {
            accumulate(&mut out, apply_polynomial(&first[i], b, p), -1.0);
        }
    }
    if !op.potential().is_zero() {
        accumulate(&mut out, apply_polynomial(&e, op.potential(), p), -1.0);
    }
    out
}

/// Square sparse matrix in compressed row form.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseOperator {
    /// Builds from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Result<Self> {
        if let Some(t) = triplets.iter().find(|t| t.0 >= n || t.1 >= n) {
            return Err(Error::InvalidParameter(format!(
                "entry ({}, {}) outside a {n}×{n} matrix",
                t.0, t.1
            )));
        }
        if triplets.iter().any(|t| !t.2.is_finite()) {
            return Err(Error::OutOfRange("non-finite matrix entry".into()));
        }
        triplets.sort_by_key(|a| (a.0, a.1));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
                continue;
            }
            last = Some((r, c));
            row_ptr[r + 1] += 1;
            cols.push(c);
            vals.push(v);
        }
        for r in 0..n {
            row_ptr[r + 1] += row_ptr[r];
        }
        Ok(Self {
            n,
            row_ptr,
            cols,
            vals,
        })
    }

    pub fn zero(n: usize) -> Self {
        Self {
            n,
            row_ptr: vec![0; n + 1],
            cols: Vec::new(),
            vals: Vec::new(),
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// `(column, value)` pairs of one row, columns ascending.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[range.clone()].iter().copied().zip(self.vals[range].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.cols[range.clone()].binary_search(&c) {
            Ok(k) => self.vals[range.start + k],
            Err(_) => 0.0,
        }
    }

    /// Row-major `(row, col, value)` triplets.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn max_row_nnz(&self) -> usize {
        self.row_ptr.windows(2).map(|w| w[1] - w[0]).max().unwrap_or(0)
    }

    /// `y = M x`
    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        let body = |(r, out): (usize, &mut f64)| {
            let mut s = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                s += self.vals[k] * x[self.cols[k]];
            }
            *out = s;
        };
        if self.n >= 4096 {
            y.par_iter_mut().enumerate().for_each(body);
        } else {
            y.iter_mut().enumerate().for_each(body);
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec_into(x, &mut y);
        y
    }

    /// Largest `|M[r][c] − M[c][r]|`.
    pub fn asymmetry(&self) -> f64 {
        self.triplets()
            .map(|(r, c, v)| (v - self.get(c, r)).abs())
            .fold(0.0, f64::max)
    }

    /// One `row col value` line per nonzero, row-major.
    pub fn to_coo_text(&self) -> String {
        let mut s = String::with_capacity(self.nnz() * 32);
        for (r, c, v) in self.triplets() {
            let _ = writeln!(s, "{r} {c} {v:.16e}");
        }
        s
    }

    pub fn from_coo_text(n: usize, text: &str) -> Result<Self> {
        let mut t = Vec::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let mut it = line.split_whitespace();
            let mut next = |what: &str| {
                it.next()
                    .ok_or_else(|| Error::Parse(format!("missing {what} in '{line}'")))
            };
            let r = next("row")?.parse::<usize>().map_err(|e| Error::Parse(e.to_string()))?;
            let c = next("col")?.parse::<usize>().map_err(|e| Error::Parse(e.to_string()))?;
            let v = next("value")?.parse::<f64>().map_err(|e| Error::Parse(e.to_string()))?;
            t.push((r, c, v));
        }
        Self::from_triplets(n, t)
    }

    /// Power-iteration estimate of the spectral radius.
    pub fn spectral_radius_estimate(&self, iterations: usize) -> f64 {
        if self.n == 0 || self.nnz() == 0 {
            return 0.0;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let mut x: Vec<f64> = (0..self.n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut rho = 0.0;
        for _ in 0..iterations {
            let nx = norm(&x);
            if nx == 0.0 {
                return 0.0;
            }
            x.iter_mut().for_each(|v| *v /= nx);
            let y = self.matvec(&x);
            rho = norm(&y);
            x = y;
        }
        rho
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Galerkin matrix on `s`; columns are assembled independently in parallel.
pub fn assemble(op: &OperatorSpec, s: &IndexSet, p: &BasisParams) -> Result<SparseOperator> {
    op.validate()?;
    if op.dim() != s.dim() || p.dim() != s.dim() {
        return Err(Error::DimensionMismatch {
            expected: s.dim(),
            got: if op.dim() != s.dim() { op.dim() } else { p.dim() },
        });
    }
    s.check_downward_closed()?;
    let columns: Vec<Vec<(usize, usize, f64)>> = (0..s.len())
        .into_par_iter()
        .map(|col| {
            let image = minus_l_column(op, p, s.get(col));
            let scale = image.values().fold(0.0f64, |m, v| m.max(v.abs()));
            let mut out: Vec<(usize, usize, f64)> = image
                .into_iter()
                .filter(|(_, v)| v.abs() > DROP_TOL * scale)
                .filter_map(|(m, v)| s.position(&m).map(|row| (row, col, v)))
                .collect();
            out.sort_by_key(|t| t.0);
            out
        })
        .collect();
    SparseOperator::from_triplets(s.len(), columns.concat())
}

/// Scalar function of time.
pub type TimeProfile = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Spatial part of one source term.
#[derive(Clone)]
pub enum SpatialFactor {
    Separable(SeparableSum),
    General(Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>),
}

/// `f(x, t) = Σ_k θ_k(t) g_k(x)` before projection.
#[derive(Clone, Default)]
pub struct SourceSpec {
    pub terms: Vec<(TimeProfile, SpatialFactor)>,
}

impl SourceSpec {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with<T: Fn(f64) -> f64 + Send + Sync + 'static>(mut self, profile: T, g: SpatialFactor) -> Self {
        self.terms.push((Arc::new(profile), g));
        self
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

/// Projected source: time profiles with coefficient vectors on one index set.
#[derive(Clone)]
pub struct SeparableSource {
    set: Arc<IndexSet>,
    terms: Vec<(TimeProfile, CoeffVector)>,
}

impl SeparableSource {
    pub fn empty(set: Arc<IndexSet>) -> Self {
        Self {
            set,
            terms: Vec::new(),
        }
    }

    pub fn new(set: Arc<IndexSet>, terms: Vec<(TimeProfile, CoeffVector)>) -> Result<Self> {
        if terms.iter().any(|(_, c)| !Arc::ptr_eq(c.set(), &set) && **c.set() != *set) {
            return Err(Error::InvalidParameter(
                "source terms must share one index set".into(),
            ));
        }
        Ok(Self { set, terms })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[(TimeProfile, CoeffVector)] {
        &self.terms
    }

    /// `f̂(t)` into `out`.
    pub fn eval_into(&self, t: f64, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (theta, c) in &self.terms {
            let w = theta(t);
            if w != 0.0 {
                for (o, v) in out.iter_mut().zip(c.values()) {
                    *o += w * v;
                }
            }
        }
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.set.len()];
        self.eval_into(t, &mut out);
        out
    }
}

/// Projects each spatial factor once with the given quadrature.
pub fn source_project(
    f: &SourceSpec,
    s: Arc<IndexSet>,
    p: &BasisParams,
    q: &SparseQuadrature,
) -> Result<SeparableSource> {
    let mut terms = Vec::with_capacity(f.len());
    for (theta, g) in &f.terms {
        let c = match g {
            SpatialFactor::Separable(sum) => project_separable(sum, s.clone(), p, q)?,
            SpatialFactor::General(fun) => project_with(|x| fun(x), s.clone(), p, q)?,
        };
        terms.push((theta.clone(), c));
    }
    SeparableSource::new(s, terms)
}

/// Leapfrog integration of `a' = M a + f̂(t)` from `0` to `T`.
///
/// The first step is a second-order Taylor step; when `T/dt` is not an
/// integer the last state is interpolated linearly between the two
/// surrounding steps.
pub fn integrate_leapfrog(
    m: &SparseOperator,
    src: &SeparableSource,
    a0: &CoeffVector,
    dt: f64,
    t_final: f64,
) -> Result<CoeffVector> {
    if !(dt > 0.0) || !dt.is_finite() || !(t_final > 0.0) || !t_final.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "time step and final time must be positive and finite (dt = {dt}, T = {t_final})"
        )));
    }
    let n = a0.len();
    if m.size() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: m.size(),
        });
    }
    if src.set.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: src.set.len(),
        });
    }
    let ratio = t_final / dt;
    if ratio > 1e9 {
        return Err(Error::InvalidParameter(format!(
            "{ratio:.3e} steps exceed the limit of 1e9"
        )));
    }
    let rho = m.spectral_radius_estimate(20);
    if dt * rho > 2.0 {
        warn!("leapfrog step may be unstable: dt·ρ(M) ≈ {:.3}", dt * rho);
    }

    let mut whole = ratio.floor() as usize;
    let mut frac = ratio - whole as f64;
    if frac > 1.0 - 1e-9 {
        whole += 1;
        frac = 0.0;
    } else if frac < 1e-9 {
        frac = 0.0;
    }
    let steps = whole + usize::from(frac > 0.0);

    let limit = 1e6 * (norm(a0.values()) + 1.0);
    let mut prev = a0.values().to_vec();
    let mut scratch = vec![0.0; n];
    let mut forcing = vec![0.0; n];

    // Taylor start: a¹ = a⁰ + dt F + dt²/2 (M F + f̂'(0)), F = M a⁰ + f̂(0)
    let mut f0 = m.matvec(&prev);
    src.eval_into(0.0, &mut forcing);
    for (a, b) in f0.iter_mut().zip(&forcing) {
        *a += b;
    }
    let fp = src.eval(dt);
    let fm = src.eval(-dt);
    m.matvec_into(&f0, &mut scratch);
    let mut cur: Vec<f64> = (0..n)
        .map(|k| {
            let fdot = (fp[k] - fm[k]) / (2.0 * dt);
            prev[k] + dt * f0[k] + 0.5 * dt * dt * (scratch[k] + fdot)
        })
        .collect();
    check_growth(&cur, limit, 1, dt)?;

    for step in 1..steps {
        let t = step as f64 * dt;
        m.matvec_into(&cur, &mut scratch);
        src.eval_into(t, &mut forcing);
        for k in 0..n {
            prev[k] += 2.0 * dt * (scratch[k] + forcing[k]);
        }
        std::mem::swap(&mut prev, &mut cur);
        check_growth(&cur, limit, step + 1, dt)?;
    }

    let out = if frac > 0.0 {
        // prev = a^{steps−1}, cur = a^{steps}
        prev.iter()
            .zip(&cur)
            .map(|(a, b)| a + frac * (b - a))
            .collect()
    } else {
        cur
    };
    CoeffVector::new(a0.set().clone(), out)
}

fn check_growth(a: &[f64], limit: f64, step: usize, dt: f64) -> Result<()> {
    let nrm = norm(a);
    if !(nrm <= limit) {
        return Err(Error::Unstable {
            step,
            time: step as f64 * dt,
            norm: nrm,
        });
    }
    Ok(())
}

/// Extremes of the Rayleigh quotient `−xᵀ S x / xᵀx` of the symmetric part
/// `S` of `M` over random vectors: a numeric look at coercivity of `L`.
pub fn rayleigh_spot_check(m: &SparseOperator, samples: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for _ in 0..samples {
        let x: Vec<f64> = (0..m.size()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y = m.matvec(&x);
        let num: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        let den: f64 = x.iter().map(|v| v * v).sum();
        if den > 0.0 {
            let q = -num / den;
            lo = lo.min(q);
            hi = hi.max(q);
        }
    }
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multi_index::{build_full, build_rhc, l1_norm};

    #[test]
    fn spec_validation() {
        assert!(OperatorSpec::new(vec![1.0, 0.5, 0.4, 1.0], vec![Polynomial::zero(2); 2], Polynomial::zero(2)).is_err());
        assert!(OperatorSpec::new(vec![1.0, 2.0, 2.0, 1.0], vec![Polynomial::zero(2); 2], Polynomial::zero(2)).is_err());
        let mut big = vec![0; 2];
        big[0] = 9;
        assert!(OperatorSpec::laplacian(2)
            .with_potential(Polynomial::zero(2).plus_term(big, 1.0))
            .is_err());
        assert!(OperatorSpec::new(vec![2.0, 1.0, 1.0, 2.0], vec![Polynomial::zero(2); 2], Polynomial::constant(2, 1.0)).is_ok());
    }

    #[test]
    fn oscillator_is_diagonal() {
        for d in 1..=2 {
            let s = build_full(8, d).unwrap();
            let p = BasisParams::isotropic(d, 1.0, 0.0).unwrap();
            let m = assemble(&OperatorSpec::harmonic_oscillator(d), &s, &p).unwrap();
            for (r, c, v) in m.triplets() {
                if r == c {
                    let expect = -(2.0 * l1_norm(s.get(r)) as f64 + d as f64);
                    assert!((v - expect).abs() < 1e-12);
                } else {
                    assert!(v.abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn zero_operator() {
        let s = build_rhc(10, 2).unwrap();
        let p = BasisParams::isotropic(2, 1.3, 0.2).unwrap();
        assert_eq!(assemble(&OperatorSpec::zero(2), &s, &p).unwrap().nnz(), 0);
    }

    #[test]
    fn rejects_non_downward_closed() {
        let s = IndexSet::from_members(1, [[0usize], [2]]).unwrap();
        let p = BasisParams::isotropic(1, 1.0, 0.0).unwrap();
        assert!(matches!(
            assemble(&OperatorSpec::laplacian(1), &s, &p),
            Err(Error::NotDownwardClosed(_))
        ));
    }

    #[test]
    fn stencil_and_symmetry() {
        for d in 2..=3 {
            let s = build_rhc(12, d).unwrap();
            let p = BasisParams::isotropic(d, 1.01, 0.0).unwrap();
            let m = assemble(&OperatorSpec::harmonic_oscillator(d), &s, &p).unwrap();
            assert!(m.asymmetry() < 1e-12);
            assert!(m.max_row_nnz() <= 1 + 2 * d);
            for (r, c, _) in m.triplets() {
                let a = s.get(r);
                let b = s.get(c);
                let diff: Vec<i64> = a.iter().zip(b).map(|(x, y)| *x as i64 - *y as i64).collect();
                let nonzero: Vec<i64> = diff.iter().copied().filter(|&v| v != 0).collect();
                assert!(nonzero.is_empty() || (nonzero.len() == 1 && nonzero[0].abs() == 2));
            }
        }
    }

    #[test]
    fn coo_round_trip() {
        let s = build_rhc(6, 2).unwrap();
        let p = BasisParams::isotropic(2, 1.01, 0.0).unwrap();
        let m = assemble(&OperatorSpec::harmonic_oscillator(2), &s, &p).unwrap();
        let text = m.to_coo_text();
        assert_eq!(SparseOperator::from_coo_text(m.size(), &text).unwrap(), m);
    }

    fn scalar_decay(dt: f64, t: f64) -> f64 {
        let set = Arc::new(build_full(0, 1).unwrap());
        let m = SparseOperator::from_triplets(1, vec![(0, 0, -1.0)]).unwrap();
        let a0 = CoeffVector::new(set.clone(), vec![1.0]).unwrap();
        integrate_leapfrog(&m, &SeparableSource::empty(set), &a0, dt, t).unwrap().values()[0]
    }

    #[test]
    fn leapfrog_examples() {
        let set = Arc::new(build_full(3, 1).unwrap());
        let a0 = CoeffVector::new(set.clone(), vec![1.0, -2.0, 0.5, 3.0]).unwrap();
        let out = integrate_leapfrog(&SparseOperator::zero(4), &SeparableSource::empty(set), &a0, 0.01, 1.0).unwrap();
        assert_eq!(out.values(), a0.values());
        assert!((scalar_decay(1e-4, 1.0) - (-1.0f64).exp()).abs() < 1e-7);
    }

    #[test]
    fn leapfrog_second_order() {
        let exact = (-1.0f64).exp();
        let e1 = (scalar_decay(2e-2, 1.0) - exact).abs();
        let e2 = (scalar_decay(1e-2, 1.0) - exact).abs();
        let ratio = e1 / e2;
        assert!((3.0..=5.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn leapfrog_partial_final_step() {
        // T/dt = 1234.5: interpolation error stays O(dt²)
        let v = scalar_decay(1e-4, 0.12345);
        assert!((v - (-0.12345f64).exp()).abs() < 1e-8);
    }

    #[test]
    fn leapfrog_forced() {
        // a' = −a + cos t + sin t has solution a = sin t for a(0) = 0
        let set = Arc::new(build_full(0, 1).unwrap());
        let m = SparseOperator::from_triplets(1, vec![(0, 0, -1.0)]).unwrap();
        let unit = CoeffVector::new(set.clone(), vec![1.0]).unwrap();
        let src = SeparableSource::new(
            set.clone(),
            vec![
                (Arc::new(f64::cos) as TimeProfile, unit.clone()),
                (Arc::new(f64::sin) as TimeProfile, unit),
            ],
        )
        .unwrap();
        let a0 = CoeffVector::zeros(set);
        let out = integrate_leapfrog(&m, &src, &a0, 1e-4, 1.0).unwrap();
        assert!((out.values()[0] - 1f64.sin()).abs() < 1e-7);
    }

    #[test]
    fn leapfrog_instability_detected() {
        let set = Arc::new(build_full(0, 1).unwrap());
        let m = SparseOperator::from_triplets(1, vec![(0, 0, -100.0)]).unwrap();
        let a0 = CoeffVector::new(set.clone(), vec![1.0]).unwrap();
        let r = integrate_leapfrog(&m, &SeparableSource::empty(set), &a0, 0.05, 10.0);
        assert!(matches!(r, Err(Error::Unstable { .. })));
    }

    #[test]
    fn rayleigh_of_oscillator() {
        let s = build_full(6, 2).unwrap();
        let p = BasisParams::isotropic(2, 1.0, 0.0).unwrap();
        let m = assemble(&OperatorSpec::harmonic_oscillator(2), &s, &p).unwrap();
        let (lo, hi) = rayleigh_spot_check(&m, 50, 1);
        assert!(lo >= 2.0 && hi <= 26.0);
        assert!((m.spectral_radius_estimate(200) - 26.0).abs() < 0.5);
    }
}
