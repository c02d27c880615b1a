//! Tensor Hermite expansions on an index set: projection, evaluation, norms.

use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hermite::{basis_values, basis_values_with_log_factor, mu_factor, BasisParams1D};
use crate::multi_index::IndexSet;
use crate::quadrature::{QuadratureRule1D, RuleCache, RuleMapping, SparseQuadrature};

/// Per-coordinate scaling and translation.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisParams {
    dims: Vec<BasisParams1D>,
}

impl BasisParams {
    pub fn new(alpha: &[f64], beta: &[f64]) -> Result<Self> {
        if alpha.len() != beta.len() {
            return Err(Error::DimensionMismatch {
                expected: alpha.len(),
                got: beta.len(),
            });
        }
        if alpha.is_empty() {
            return Err(Error::InvalidParameter("dimension must be at least 1".into()));
        }
        let dims = alpha
            .iter()
            .zip(beta)
            .map(|(&a, &b)| BasisParams1D::new(a, b))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { dims })
    }

    pub fn isotropic(dim: usize, alpha: f64, beta: f64) -> Result<Self> {
        Self::new(&vec![alpha; dim], &vec![beta; dim])
    }

    pub fn from_1d(dims: Vec<BasisParams1D>) -> Self {
        Self { dims }
    }

    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    pub fn get(&self, j: usize) -> &BasisParams1D {
        &self.dims[j]
    }

    pub fn as_slice(&self) -> &[BasisParams1D] {
        &self.dims
    }

    fn check(&self, set: &IndexSet) -> Result<()> {
        if self.dim() != set.dim() {
            return Err(Error::DimensionMismatch {
                expected: set.dim(),
                got: self.dim(),
            });
        }
        Ok(())
    }
}

/// Expansion coefficients aligned with the iteration order of an index set.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffVector {
    set: Arc<IndexSet>,
    values: Vec<f64>,
}

impl CoeffVector {
    pub fn new(set: Arc<IndexSet>, values: Vec<f64>) -> Result<Self> {
        if values.len() != set.len() {
            return Err(Error::DimensionMismatch {
                expected: set.len(),
                got: values.len(),
            });
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::OutOfRange(format!(
                "coefficient {k} is not finite ({})",
                values[k]
            )));
        }
        Ok(Self { set, values })
    }

    pub fn zeros(set: Arc<IndexSet>) -> Self {
        let n = set.len();
        Self {
            set,
            values: vec![0.0; n],
        }
    }

    /// Unit vector of the basis function `n`.
    pub fn unit(set: Arc<IndexSet>, n: &[usize]) -> Result<Self> {
        let k = set.position(n).ok_or_else(|| {
            Error::InvalidParameter(format!("{n:?} is not a member of the index set"))
        })?;
        let mut c = Self::zeros(set);
        c.values[k] = 1.0;
        Ok(c)
    }

    pub fn set(&self) -> &Arc<IndexSet> {
        &self.set
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Coefficient of `n`, zero outside the set.
    pub fn get(&self, n: &[usize]) -> f64 {
        self.set.position(n).map_or(0.0, |k| self.values[k])
    }

    /// The index set text followed by one coefficient per line.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        self.set.write_text(&mut s);
        for v in &self.values {
            let _ = writeln!(s, "{v:.16e}");
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty coefficient text".into()))?;
        let body: Vec<&str> = lines.collect();
        let members = body
            .iter()
            .take_while(|l| l.chars().all(|c| c.is_ascii_digit() || c == ' '))
            .count();
        let mut it = body.iter().copied();
        let (set, _) = IndexSet::parse_with_lines(header, &mut it, Some(members))?;
        let values = it
            .map(|l| {
                l.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("bad coefficient '{l}': {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(Arc::new(set), values)
    }
}

/// A product of one-dimensional factors `Π_j g_j(x_j)`.
#[derive(Clone)]
pub struct SeparableFunction {
    factors: Vec<Arc<dyn Fn(f64) -> f64 + Send + Sync>>,
}

impl std::fmt::Debug for SeparableFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "SeparableFunction({} factors)", self.factors.len())
    }
}

impl SeparableFunction {
    pub fn new(factors: Vec<Arc<dyn Fn(f64) -> f64 + Send + Sync>>) -> Self {
        Self { factors }
    }

    /// The same factor in every coordinate.
    pub fn repeated<F: Fn(f64) -> f64 + Send + Sync + 'static>(dim: usize, g: F) -> Self {
        let g: Arc<dyn Fn(f64) -> f64 + Send + Sync> = Arc::new(g);
        Self {
            factors: vec![g; dim],
        }
    }

    /// Replaces the factor of coordinate `j`.
    pub fn with_factor<F: Fn(f64) -> f64 + Send + Sync + 'static>(mut self, j: usize, g: F) -> Self {
        self.factors[j] = Arc::new(g);
        self
    }

    pub fn dim(&self) -> usize {
        self.factors.len()
    }

    pub fn factor(&self, j: usize) -> &(dyn Fn(f64) -> f64 + Send + Sync) {
        self.factors[j].as_ref()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.factors.iter().zip(x).map(|(g, &v)| g(v)).product()
    }
}

/// Linear combination of separable functions.
#[derive(Debug, Clone, Default)]
pub struct SeparableSum {
    terms: Vec<(f64, SeparableFunction)>,
}

impl SeparableSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, coefficient: f64, f: SeparableFunction) {
        self.terms.push((coefficient, f));
    }

    pub fn with(mut self, coefficient: f64, f: SeparableFunction) -> Self {
        self.push(coefficient, f);
        self
    }

    pub fn terms(&self) -> &[(f64, SeparableFunction)] {
        &self.terms
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|(c, f)| c * f.eval(x)).sum()
    }
}

/// Tensor rule of one order in every coordinate.
pub fn tensor_quadrature(
    p: &BasisParams,
    order: usize,
    mapping: RuleMapping,
) -> Result<SparseQuadrature> {
    let rules = p
        .as_slice()
        .iter()
        .map(|q| {
            let mut cache = RuleCache::new(match mapping {
                RuleMapping::Basis => Some(*q),
                RuleMapping::Standard => None,
            });
            cache.get(order)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SparseQuadrature::tensor(rules))
}

/// Basis values times the inverse rule weight at every node of a rule:
/// `table[k][n] = H_n(x_k)·exp(s²(x_k−c)²)`.
fn weighted_tables(rule: &QuadratureRule1D, p: &BasisParams1D, nmax: usize) -> Vec<Vec<f64>> {
    rule.nodes()
        .iter()
        .map(|&x| basis_values_with_log_factor(nmax, p, x, -rule.log_weight(x)))
        .collect()
}

/// `û_n = ∫ f·H_n` by a tensor Gauss–Hermite rule of `quad_order` points per
/// coordinate, mapped to the basis weight so the Gaussian envelope of `H_n`
/// cancels analytically against the rule weight.
pub fn project<F>(f: F, s: Arc<IndexSet>, p: &BasisParams, quad_order: usize) -> Result<CoeffVector>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    p.check(&s)?;
    let required = s.max_degree() + 1;
    if quad_order < required {
        return Err(Error::QuadratureOrder {
            given: quad_order,
            required,
        });
    }
    let q = tensor_quadrature(p, quad_order, RuleMapping::Basis)?;
    project_with(f, s, p, &q)
}

/// Projection with an arbitrary (possibly signed, sparse) quadrature.
pub fn project_with<F>(f: F, s: Arc<IndexSet>, p: &BasisParams, q: &SparseQuadrature) -> Result<CoeffVector>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    p.check(&s)?;
    if q.dim() != s.dim() {
        return Err(Error::DimensionMismatch {
            expected: s.dim(),
            got: q.dim(),
        });
    }
    let dim = s.dim();
    let maxdeg = s.max_degree_per_dim();
    let mut total = vec![0.0; s.len()];
    for (coef, rules) in q.terms() {
        let tables: Vec<Vec<Vec<f64>>> = (0..dim)
            .map(|j| weighted_tables(&rules[j], p.get(j), maxdeg[j]))
            .collect();
        // split on the first coordinate's nodes
        let partial: Vec<f64> = (0..rules[0].order())
            .into_par_iter()
            .fold(
                || vec![0.0; s.len()],
                |mut acc, k0| {
                    let sub: Vec<Arc<QuadratureRule1D>> = rules[1..].to_vec();
                    let mut x = vec![0.0; dim];
                    let mut nodes = vec![0usize; dim];
                    let x0 = rules[0].nodes()[k0];
                    let w0 = rules[0].weights()[k0];
                    let mut visit = |xs: &[f64], w: f64, idx: &[usize]| {
                        x[0] = x0;
                        x[1..].copy_from_slice(xs);
                        let fw = f(&x) * w * w0;
                        if fw == 0.0 {
                            return;
                        }
                        nodes[0] = k0;
                        nodes[1..].copy_from_slice(idx);
                        for (a, m) in acc.iter_mut().zip(s.iter()) {
                            let mut v = fw;
                            for j in 0..dim {
                                v *= tables[j][nodes[j]][m[j]];
                            }
                            *a += v;
                        }
                    };
                    for_each_tensor_node_indexed(&sub, &mut visit);
                    acc
                },
            )
            .reduce(|| vec![0.0; s.len()], add_vectors);
        for (t, v) in total.iter_mut().zip(partial) {
            *t += coef * v;
        }
    }
    CoeffVector::new(s, total)
}

fn add_vectors(mut a: Vec<f64>, b: Vec<f64>) -> Vec<f64> {
    for (x, y) in a.iter_mut().zip(b) {
        *x += y;
    }
    a
}

/// Like [`crate::quadrature::for_each_tensor_node`] but also hands out node indices; with no
/// rules the single empty node of weight one is visited.
fn for_each_tensor_node_indexed<F: FnMut(&[f64], f64, &[usize])>(rules: &[Arc<QuadratureRule1D>], f: &mut F) {
    let dim = rules.len();
    if dim == 0 {
        f(&[], 1.0, &[]);
        return;
    }
    let lens: Vec<usize> = rules.iter().map(|r| r.order()).collect();
    let mut idx = vec![0usize; dim];
    let mut x = vec![0.0; dim];
    loop {
        let mut w = 1.0;
        for j in 0..dim {
            x[j] = rules[j].nodes()[idx[j]];
            w *= rules[j].weights()[idx[j]];
        }
        f(&x, w, &idx);
        if !crate::quadrature::odometer_next(&mut idx, &lens) {
            break;
        }
    }
}

/// One-dimensional projections `⟨g, H_n⟩`, `n = 0..=nmax`, by the given rule.
pub fn project_1d<G: Fn(f64) -> f64>(g: G, p: &BasisParams1D, nmax: usize, rule: &QuadratureRule1D) -> Vec<f64> {
    let mut out = vec![0.0; nmax + 1];
    for (&x, &w) in rule.nodes().iter().zip(rule.weights()) {
        let gw = g(x) * w;
        if gw == 0.0 {
            continue;
        }
        let h = basis_values_with_log_factor(nmax, p, x, -rule.log_weight(x));
        for (o, v) in out.iter_mut().zip(h) {
            *o += gw * v;
        }
    }
    out
}

/// Projection of a sum of separable functions; each term costs only
/// one-dimensional quadratures per coordinate and quadrature term.
pub fn project_separable(
    f: &SeparableSum,
    s: Arc<IndexSet>,
    p: &BasisParams,
    q: &SparseQuadrature,
) -> Result<CoeffVector> {
    p.check(&s)?;
    let dim = s.dim();
    for (_, g) in f.terms() {
        if g.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: g.dim(),
            });
        }
    }
    let maxdeg = s.max_degree_per_dim();
    let mut total = vec![0.0; s.len()];
    for (coef, rules) in q.terms() {
        for (c, g) in f.terms() {
            let lines: Vec<Vec<f64>> = (0..dim)
                .map(|j| project_1d(g.factor(j), p.get(j), maxdeg[j], &rules[j]))
                .collect();
            let scale = coef * c;
            for (t, m) in total.iter_mut().zip(s.iter()) {
                let mut v = scale;
                for j in 0..dim {
                    v *= lines[j][m[j]];
                }
                *t += v;
            }
        }
    }
    CoeffVector::new(s, total)
}

/// `Σ_n û_n Π_j H_{n_j}(x_j)`.
pub fn evaluate(c: &CoeffVector, p: &BasisParams, x: &[f64]) -> f64 {
    let maxdeg = c.set.max_degree_per_dim();
    evaluate_scaled(c, p, x, &maxdeg, None)
}

/// Evaluation with an optional per-coordinate log factor folded into the
/// basis values, i.e. `u(x)·exp(Σ_j log_factor_j)`.
fn evaluate_scaled(c: &CoeffVector, p: &BasisParams, x: &[f64], maxdeg: &[usize], log_factor: Option<&[f64]>) -> f64 {
    let dim = c.set.dim();
    let tables: Vec<Vec<f64>> = (0..dim)
        .map(|j| match log_factor {
            Some(l) => basis_values_with_log_factor(maxdeg[j], p.get(j), x[j], l[j]),
            None => basis_values(maxdeg[j], p.get(j), x[j]),
        })
        .collect();
    c.set
        .iter()
        .zip(&c.values)
        .map(|(m, &a)| {
            let mut v = a;
            for j in 0..dim {
                v *= tables[j][m[j]];
            }
            v
        })
        .sum()
}

/// `√Σ |û_n|²`
pub fn l2_norm(c: &CoeffVector) -> f64 {
    c.values.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `(Σ_j Σ_n μ_{n_j,m} |û_n|²)^{1/2}`
pub fn sobolev_seminorm(c: &CoeffVector, p: &BasisParams, m: usize) -> f64 {
    let dim = c.set.dim();
    c.set
        .iter()
        .zip(&c.values)
        .map(|(n, &a)| {
            let w: f64 = (0..dim).map(|j| mu_factor(n[j], m, p.get(j).alpha())).sum();
            w * a * a
        })
        .sum::<f64>()
        .sqrt()
}

/// `(Σ_{|k|₁ ≤ m} ‖D^k u‖²)^{1/2}`, summing the mixed weights through a
/// truncated product of per-coordinate generating polynomials.
pub fn sobolev_norm(c: &CoeffVector, p: &BasisParams, m: usize) -> f64 {
    let dim = c.set.dim();
    c.set
        .iter()
        .zip(&c.values)
        .map(|(n, &a)| {
            let mut poly = vec![0.0; m + 1];
            poly[0] = 1.0;
            for j in 0..dim {
                let alpha = p.get(j).alpha();
                let factor: Vec<f64> = (0..=m).map(|k| mu_factor(n[j], k, alpha)).collect();
                let mut next = vec![0.0; m + 1];
                for (i, &pi) in poly.iter().enumerate() {
                    if pi == 0.0 {
                        continue;
                    }
                    for (k, &fk) in factor.iter().enumerate().take(m + 1 - i) {
                        next[i + k] += pi * fk;
                    }
                }
                poly = next;
            }
            poly.iter().sum::<f64>() * a * a
        })
        .sum::<f64>()
        .sqrt()
}

fn mu_partial_sum(n: usize, r: usize, alpha: f64) -> f64 {
    (0..=r).map(|k| mu_factor(n, k, alpha)).sum()
}

/// `(Σ_{|k|∞ = r} Σ_n Π_j μ_{n_j,k_j} |û_n|²)^{1/2}`.
///
/// Summing over the box `[0,r]^d` factorizes into `Π_j S_j(r)` with
/// `S_j(r) = Σ_{k≤r} μ_{n_j,k}`; removing the inner box `[0,r−1]^d` leaves
/// exactly the shell `|k|∞ = r`.
pub fn korobov_seminorm(c: &CoeffVector, p: &BasisParams, r: usize) -> f64 {
    let dim = c.set.dim();
    c.set
        .iter()
        .zip(&c.values)
        .map(|(n, &a)| {
            let mut outer = 1.0;
            let mut inner = 1.0;
            for j in 0..dim {
                let alpha = p.get(j).alpha();
                let below = if r == 0 { 0.0 } else { mu_partial_sum(n[j], r - 1, alpha) };
                outer *= below + mu_factor(n[j], r, alpha);
                inner *= below;
            }
            (outer - inner) * a * a
        })
        .sum::<f64>()
        .sqrt()
}

/// `(Σ_{|k|∞ ≤ r} ‖D^k u‖²)^{1/2}`.
pub fn korobov_norm(c: &CoeffVector, p: &BasisParams, r: usize) -> f64 {
    let dim = c.set.dim();
    c.set
        .iter()
        .zip(&c.values)
        .map(|(n, &a)| {
            let w: f64 = (0..dim).map(|j| mu_partial_sum(n[j], r, p.get(j).alpha())).product();
            w * a * a
        })
        .sum::<f64>()
        .sqrt()
}

/// `√∫|u_N − f|²` by a tensor rule of `quad_order` points per coordinate.
pub fn l2_error_vs_function<F>(c: &CoeffVector, p: &BasisParams, f_exact: F, quad_order: usize) -> Result<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    p.check(&c.set)?;
    let required = 2 * c.set.max_degree();
    if quad_order < required.max(1) {
        return Err(Error::QuadratureOrder {
            given: quad_order,
            required,
        });
    }
    let q = tensor_quadrature(p, quad_order, RuleMapping::Basis)?;
    Ok(squared_error_with(c, p, f_exact, &q)?.abs().sqrt())
}

/// Signed quadrature estimate of `∫|u_N − f|²`; a signed (sparse) rule can
/// return a slightly negative value once the error nears its resolution.
pub fn squared_error_with<F>(c: &CoeffVector, p: &BasisParams, f_exact: F, q: &SparseQuadrature) -> Result<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    p.check(&c.set)?;
    let dim = c.set.dim();
    let maxdeg = c.set.max_degree_per_dim();
    let mut total = 0.0;
    for (coef, rules) in q.terms() {
        let tables: Vec<Vec<Vec<f64>>> = (0..dim)
            .map(|j| {
                // half the inverse weight goes on each factor of the square
                rules[j]
                    .nodes()
                    .iter()
                    .map(|&x| basis_values_with_log_factor(maxdeg[j], p.get(j), x, -0.5 * rules[j].log_weight(x)))
                    .collect()
            })
            .collect();
        let part: f64 = (0..rules[0].order())
            .into_par_iter()
            .map(|k0| {
                let sub: Vec<Arc<QuadratureRule1D>> = rules[1..].to_vec();
                let mut x = vec![0.0; dim];
                let mut nodes = vec![0usize; dim];
                let x0 = rules[0].nodes()[k0];
                let w0 = rules[0].weights()[k0];
                let mut acc = 0.0;
                let mut visit = |xs: &[f64], w: f64, idx: &[usize]| {
                    x[0] = x0;
                    x[1..].copy_from_slice(xs);
                    nodes[0] = k0;
                    nodes[1..].copy_from_slice(idx);
                    let mut u = 0.0;
                    for (m, &a) in c.set.iter().zip(&c.values) {
                        let mut v = a;
                        for j in 0..dim {
                            v *= tables[j][nodes[j]][m[j]];
                        }
                        u += v;
                    }
                    let half: f64 = (0..dim).map(|j| -0.5 * rules[j].log_weight(x[j])).sum();
                    let fx = f_exact(&x);
                    let fe = if fx == 0.0 { 0.0 } else { fx * half.exp() };
                    let diff = u - fe;
                    acc += w * w0 * diff * diff;
                };
                for_each_tensor_node_indexed(&sub, &mut visit);
                acc
            })
            .sum();
        total += coef * part;
    }
    Ok(total)
}

/// Expansion known through its one-dimensional coefficient sequences:
/// `û_n = Σ_t c_t Π_j a_{t,j}[n_j]`, entries past the stored length being zero.
#[derive(Debug, Clone, Default)]
pub struct SeparableCoefficients {
    terms: Vec<(f64, Vec<Vec<f64>>)>,
}

impl SeparableCoefficients {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, coefficient: f64, factors: Vec<Vec<f64>>) {
        self.terms.push((coefficient, factors));
    }

    pub fn with(mut self, coefficient: f64, factors: Vec<Vec<f64>>) -> Self {
        self.push(coefficient, factors);
        self
    }

    /// Computes the sequences of a separable sum by a mapped rule per
    /// coordinate of `order` points, keeping degrees `0..=nmax`.
    pub fn from_functions(f: &SeparableSum, p: &BasisParams, nmax: usize, order: usize) -> Result<Self> {
        let mut caches: Vec<RuleCache> = p.as_slice().iter().map(|q| RuleCache::new(Some(*q))).collect();
        let rules = caches.iter_mut().map(|c| c.get(order)).collect::<Result<Vec<_>>>()?;
        let mut out = Self::new();
        for (c, g) in f.terms() {
            if g.dim() != p.dim() {
                return Err(Error::DimensionMismatch {
                    expected: p.dim(),
                    got: g.dim(),
                });
            }
            let factors = (0..p.dim())
                .map(|j| project_1d(g.factor(j), p.get(j), nmax, &rules[j]))
                .collect();
            out.push(*c, factors);
        }
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.terms.first().map_or(0, |t| t.1.len())
    }

    pub fn value(&self, n: &[usize]) -> f64 {
        self.terms
            .iter()
            .map(|(c, fs)| c * fs.iter().zip(n).map(|(f, &k)| f.get(k).copied().unwrap_or(0.0)).product::<f64>())
            .sum()
    }

    /// Coefficients restricted to an index set.
    pub fn restrict(&self, s: Arc<IndexSet>) -> Result<CoeffVector> {
        let v = s.iter().map(|n| self.value(n)).collect();
        CoeffVector::new(s, v)
    }

    /// `Σ_n |û_n|²` over all indices.
    pub fn norm_sq(&self) -> f64 {
        let mut total = 0.0;
        for (ca, fa) in &self.terms {
            for (cb, fb) in &self.terms {
                let prod: f64 = fa.iter().zip(fb).map(|(a, b)| dot(a, b)).product();
                total += ca * cb * prod;
            }
        }
        total
    }

    /// `Σ_{n ∉ s} |û_n|²` for a downward-closed `s`.
    ///
    /// The complement is walked as a union of whole subtrees hanging off the
    /// members of `s`, each contributing a product of one-dimensional tail sums,
    /// so no large total is ever differenced against a nearly equal sum.
    pub fn tail_sq(&self, s: &IndexSet) -> Result<f64> {
        s.check_downward_closed()?;
        if s.dim() != self.dim() && !self.terms.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: s.dim(),
                got: self.dim(),
            });
        }
        let dim = s.dim();
        let mut total = 0.0;
        for (ca, fa) in &self.terms {
            for (cb, fb) in &self.terms {
                let w: Vec<Vec<f64>> = fa
                    .iter()
                    .zip(fb)
                    .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x * y).collect())
                    .collect();
                let full: Vec<f64> = w.iter().map(|v| v.iter().sum()).collect();
                // suffix products of full sums
                let mut after = vec![1.0; dim + 1];
                for j in (0..dim).rev() {
                    after[j] = after[j + 1] * full[j];
                }
                let mut prefix = vec![0usize; dim];
                total += ca * cb * complement_sum(s, &w, &after, 0, 1.0, &mut prefix);
            }
        }
        Ok(total)
    }

    /// `‖c − u‖²` split as in-set differences plus the out-of-set tail.
    pub fn error_sq(&self, c: &CoeffVector) -> Result<f64> {
        let inside: f64 = c
            .set()
            .iter()
            .zip(c.values())
            .map(|(n, &a)| {
                let d = a - self.value(n);
                d * d
            })
            .sum();
        Ok(inside + self.tail_sq(c.set())?)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn complement_sum(s: &IndexSet, w: &[Vec<f64>], after: &[f64], j: usize, weight: f64, prefix: &mut Vec<usize>) -> f64 {
    let dim = s.dim();
    if j == dim {
        return 0.0;
    }
    let mut total = 0.0;
    let mut v = 0;
    loop {
        prefix[j] = v;
        if !s.contains(prefix) {
            break;
        }
        let wv = w[j].get(v).copied().unwrap_or(0.0);
        if wv != 0.0 {
            total += complement_sum(s, w, after, j + 1, weight * wv, prefix);
        }
        v += 1;
    }
    prefix[j] = 0;
    let tail: f64 = w[j].iter().skip(v).sum();
    total + weight * tail * after[j + 1]
}
