//! Gauss–Hermite rules, tensor and Smolyak point sets, sparse quadrature.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::hermite::{basis_values, BasisParams1D};
use crate::multi_index::{build_smolyak, LevelMap, SetKind};

/// Highest supported rule order.
pub const MAX_RULE_ORDER: usize = 500;
/// Absolute tolerance under which two mapped nodes count as the same point.
pub const DEDUP_TOL: f64 = 1e-12;

/// A Gauss rule for the weight `exp(−s²(x−c)²)`.
///
/// The unmapped rule has `s = 1`, `c = 0`.  Weights too small for the double
/// range (extreme nodes of rules above order ~360) are stored as zero.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule1D {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    scale: f64,
    center: f64,
}

impl QuadratureRule1D {
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// `s` in the weight `exp(−s²(x−c)²)`.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// `c` in the weight `exp(−s²(x−c)²)`.
    pub fn center(&self) -> f64 {
        self.center
    }

    /// Logarithm of the weight function at `x`.
    #[inline]
    pub fn log_weight(&self, x: f64) -> f64 {
        let t = self.scale * (x - self.center);
        -t * t
    }

    /// Adapts the unit rule to the weight `exp(−α²(x−β)²)`:
    /// nodes `β + t/α`, weights `w/α`.
    pub fn map(&self, p: &BasisParams1D) -> Self {
        let (a, b) = (p.alpha(), p.beta());
        // compose with any existing mapping
        let s = self.scale * a;
        let c = b + self.center / a;
        Self {
            nodes: self.nodes.iter().map(|&t| b + t / a).collect(),
            weights: self.weights.iter().map(|&w| w / a).collect(),
            scale: s,
            center: c,
        }
    }

    /// `Σ w_i g(x_i)`, approximating `∫ g(x) exp(−s²(x−c)²) dx`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, g: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * g(x))
            .sum()
    }
}

/// `order`-point Gauss–Hermite rule for the weight `exp(−x²)`.
///
/// Nodes are eigenvalues of the Jacobi matrix, refined by one Newton step on
/// the normalized Hermite recurrence; weights come from the
/// Christoffel–Darboux form `w_i = exp(−x_i²) / Σ_{k<n} h_k(x_i)²` with `h_k`
/// the Hermite functions, which stays in range where the polynomials would not.
pub fn gauss_hermite_rule(order: usize) -> Result<QuadratureRule1D> {
    if order == 0 || order > MAX_RULE_ORDER {
        return Err(Error::InvalidParameter(format!(
            "rule order must lie in 1..={MAX_RULE_ORDER}, got {order}"
        )));
    }
    let n = order;
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let off = (k as f64 / 2.0).sqrt();
        jac[(k, k - 1)] = off;
        jac[(k - 1, k)] = off;
    }
    let mut nodes: Vec<f64> = SymmetricEigen::new(jac).eigenvalues.iter().copied().collect();
    nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let unit = BasisParams1D::standard();
    for x in nodes.iter_mut() {
        let h = basis_values(n, &unit, *x);
        // h_n' / h_n-ratio on the polynomial part: p_n' = √(2n) p_{n−1}
        let denom = (2.0 * n as f64).sqrt() * h[n - 1];
        if denom != 0.0 && denom.is_finite() {
            *x -= h[n] / denom;
        }
    }
    // enforce exact symmetry
    for i in 0..n / 2 {
        let v = 0.5 * (nodes[n - 1 - i] - nodes[i]);
        nodes[i] = -v;
        nodes[n - 1 - i] = v;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }

    let mut weights: Vec<f64> = nodes
        .iter()
        .map(|&x| {
            let h = basis_values(n - 1, &unit, x);
            let s: f64 = h.iter().map(|v| v * v).sum();
            (-x * x - s.ln()).exp()
        })
        .collect();
    for i in 0..n / 2 {
        let w = 0.5 * (weights[i] + weights[n - 1 - i]);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    Ok(QuadratureRule1D {
        nodes,
        weights,
        scale: 1.0,
        center: 0.0,
    })
}

/// `map_rule(r, p)`: see [`QuadratureRule1D::map`].
pub fn map_rule(r: &QuadratureRule1D, p: &BasisParams1D) -> QuadratureRule1D {
    r.map(p)
}

/// Which weight the rules of a grid are built for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RuleMapping {
    /// Nodes of the unit weight `exp(−x²)` in every coordinate.
    Standard,
    /// Nodes mapped to `exp(−α_j²(x−β_j)²)` per coordinate.
    #[default]
    Basis,
}

/// Builds and caches rules by order for one coordinate.
#[derive(Debug, Clone)]
pub struct RuleCache {
    params: Option<BasisParams1D>,
    rules: Vec<Option<Arc<QuadratureRule1D>>>,
}

impl RuleCache {
    /// `params = None` keeps unit rules.
    pub fn new(params: Option<BasisParams1D>) -> Self {
        Self {
            params,
            rules: Vec::new(),
        }
    }

    pub fn get(&mut self, order: usize) -> Result<Arc<QuadratureRule1D>> {
        if self.rules.len() <= order {
            self.rules.resize(order + 1, None);
        }
        if let Some(r) = &self.rules[order] {
            return Ok(r.clone());
        }
        let base = gauss_hermite_rule(order)?;
        let r = Arc::new(match &self.params {
            Some(p) => base.map(p),
            None => base,
        });
        self.rules[order] = Some(r.clone());
        Ok(r)
    }
}

/// Deduplicated collection of points in `ℝ^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
    description: String,
}

fn quantize(x: f64) -> i64 {
    (x / DEDUP_TOL).round() as i64
}

impl PointSet {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.coords.len() / self.dim
        }
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn get(&self, k: usize) -> &[f64] {
        &self.coords[k * self.dim..(k + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim.max(1))
    }

    /// One point per row, coordinates comma separated, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let header: Vec<String> = (1..=self.dim).map(|j| format!("x{j}")).collect();
        s.push_str(&header.join(","));
        s.push('\n');
        for p in self.iter() {
            for (j, v) in p.iter().enumerate() {
                if j > 0 {
                    s.push(',');
                }
                let _ = write!(s, "{v:.16e}");
            }
            s.push('\n');
        }
        s
    }

    /// Union of tensor grids, each given as one node list per coordinate.
    pub fn union_of_tensor_grids<'a, I>(dim: usize, grids: I, description: String) -> Self
    where
        I: IntoIterator<Item = Vec<&'a [f64]>>,
    {
        let mut seen: HashSet<Vec<i64>> = HashSet::new();
        let mut coords = Vec::new();
        let mut point = vec![0.0; dim];
        let mut key = vec![0i64; dim];
        for grid in grids {
            assert_eq!(grid.len(), dim, "grid arity must match the dimension");
            if grid.iter().any(|g| g.is_empty()) {
                continue;
            }
            let lens: Vec<usize> = grid.iter().map(|g| g.len()).collect();
            let mut idx = vec![0usize; dim];
            loop {
                for j in 0..dim {
                    point[j] = grid[j][idx[j]];
                    key[j] = quantize(point[j]);
                }
                if seen.insert(key.clone()) {
                    coords.extend_from_slice(&point);
                }
                if !odometer_next(&mut idx, &lens) {
                    break;
                }
            }
        }
        Self {
            dim,
            coords,
            description,
        }
    }
}

/// Tensor grid of one rule per coordinate.
pub fn tensor_point_set(rules: &[&QuadratureRule1D]) -> PointSet {
    let orders: Vec<String> = rules.iter().map(|r| r.order().to_string()).collect();
    PointSet::union_of_tensor_grids(
        rules.len(),
        std::iter::once(rules.iter().map(|r| r.nodes()).collect()),
        format!("tensor orders={}", orders.join("x")),
    )
}

fn cache_set(dim: usize, params: Option<&[BasisParams1D]>) -> Result<Vec<RuleCache>> {
    match params {
        Some(p) if p.len() != dim => Err(Error::DimensionMismatch {
            expected: dim,
            got: p.len(),
        }),
        Some(p) => Ok(p.iter().map(|q| RuleCache::new(Some(*q))).collect()),
        None => Ok((0..dim).map(|_| RuleCache::new(None)).collect()),
    }
}

/// Union of the tensor grids of a Smolyak combination, level `i` using a rule
/// of `map.order(i)` points.  `params = None` uses unit rules.
pub fn sparse_point_union(
    level: usize,
    dim: usize,
    map: &LevelMap,
    params: Option<&[BasisParams1D]>,
) -> Result<PointSet> {
    let mut caches = cache_set(dim, params)?;
    let mut grids: Vec<Vec<Arc<QuadratureRule1D>>> = Vec::new();
    for t in build_smolyak(level, dim) {
        let mut g = Vec::with_capacity(dim);
        for (j, &i) in t.levels.iter().enumerate() {
            g.push(caches[j].get(map.order(i))?);
        }
        grids.push(g);
    }
    Ok(PointSet::union_of_tensor_grids(
        dim,
        grids.iter().map(|g| g.iter().map(|r| r.nodes()).collect()),
        format!("smolyak L={level} map={map}"),
    ))
}

/// Point union for a hyperbolic-cross style set: every tuple of rule orders
/// drawn from `ladder` whose order tuple satisfies the set's defining
/// inequality contributes its tensor grid.
pub fn cross_point_union(
    kind: &SetKind,
    dim: usize,
    ladder: &[usize],
    params: Option<&[BasisParams1D]>,
) -> Result<PointSet> {
    if ladder.is_empty() || ladder.contains(&0) {
        return Err(Error::InvalidParameter(
            "order ladder must be nonempty and positive".into(),
        ));
    }
    let mut caches = cache_set(dim, params)?;
    let mut grids: Vec<Vec<Arc<QuadratureRule1D>>> = Vec::new();
    let mut pick = vec![0usize; dim];
    loop {
        let orders: Vec<usize> = pick.iter().map(|&k| ladder[k]).collect();
        let admitted = kind.admits(&orders).ok_or_else(|| {
            Error::InvalidParameter(format!("{} sets have no defining inequality", kind.name()))
        })?;
        if admitted {
            let mut g = Vec::with_capacity(dim);
            for (j, &o) in orders.iter().enumerate() {
                g.push(caches[j].get(o)?);
            }
            grids.push(g);
        }
        let mut j = 0;
        while j < dim {
            pick[j] += 1;
            if pick[j] < ladder.len() {
                break;
            }
            pick[j] = 0;
            j += 1;
        }
        if j == dim {
            break;
        }
    }
    let lad: Vec<String> = ladder.iter().map(|v| v.to_string()).collect();
    Ok(PointSet::union_of_tensor_grids(
        dim,
        grids.iter().map(|g| g.iter().map(|r| r.nodes()).collect()),
        format!("{} {} ladder={}", kind.name(), kind.params_string(), lad.join(":")),
    ))
}

/// Signed combination of tensor Gauss–Hermite rules.
#[derive(Debug, Clone)]
pub struct SparseQuadrature {
    dim: usize,
    terms: Vec<(f64, Vec<Arc<QuadratureRule1D>>)>,
}

impl SparseQuadrature {
    /// Smolyak quadrature of level `L`; `params = None` gives unit rules.
    pub fn smolyak(
        level: usize,
        dim: usize,
        map: &LevelMap,
        params: Option<&[BasisParams1D]>,
    ) -> Result<Self> {
        let mut caches = cache_set(dim, params)?;
        let mut terms = Vec::new();
        for t in build_smolyak(level, dim) {
            let mut g = Vec::with_capacity(dim);
            for (j, &i) in t.levels.iter().enumerate() {
                g.push(caches[j].get(map.order(i))?);
            }
            terms.push((t.coefficient as f64, g));
        }
        Ok(Self { dim, terms })
    }

    /// A single tensor rule.
    pub fn tensor(rules: Vec<Arc<QuadratureRule1D>>) -> Self {
        Self {
            dim: rules.len(),
            terms: vec![(1.0, rules)],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `(coefficient, rule per coordinate)` pairs.
    pub fn terms(&self) -> &[(f64, Vec<Arc<QuadratureRule1D>>)] {
        &self.terms
    }

    /// Total number of tensor nodes visited, counting repeats across terms.
    pub fn work(&self) -> usize {
        self.terms
            .iter()
            .map(|(_, r)| r.iter().map(|q| q.order()).product::<usize>())
            .sum()
    }

    /// Applies the rule to `g`, where the integrand is `g(x)·Π_j weight_j(x_j)`.
    pub fn integrate<F: Fn(&[f64]) -> f64>(&self, g: F) -> f64 {
        let mut total = 0.0;
        let mut x = vec![0.0; self.dim];
        for (c, rules) in &self.terms {
            let mut acc = 0.0;
            for_each_tensor_node(rules, &mut x, |x, w| acc += w * g(x));
            total += c * acc;
        }
        total
    }
}

/// Visits every node of a tensor rule with its product weight.
pub fn for_each_tensor_node<F: FnMut(&[f64], f64)>(
    rules: &[Arc<QuadratureRule1D>],
    x: &mut [f64],
    mut f: F,
) {
    let dim = rules.len();
    if rules.iter().any(|r| r.order() == 0) {
        return;
    }
    let lens: Vec<usize> = rules.iter().map(|r| r.order()).collect();
    let mut idx = vec![0usize; dim];
    loop {
        let mut w = 1.0;
        for j in 0..dim {
            x[j] = rules[j].nodes[idx[j]];
            w *= rules[j].weights[idx[j]];
        }
        f(x, w);
        if !odometer_next(&mut idx, &lens) {
            break;
        }
    }
}

/// Advances `idx` to the next tuple below `lens` in lexicographic order;
/// returns false after the last one.
pub(crate) fn odometer_next(idx: &mut [usize], lens: &[usize]) -> bool {
    for j in (0..idx.len()).rev() {
        idx[j] += 1;
        if idx[j] < lens[j] {
            return true;
        }
        idx[j] = 0;
    }
    false
}
