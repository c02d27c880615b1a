//! Multi-indices and the index sets built from them.
//!
//! Every analytic index set here (full grid, regular and optimized hyperbolic
//! crosses, the two-block dimension-adaptive set, unions of Smolyak boxes) is
//! downward closed, which lets a single depth-first enumerator build all of
//! them without visiting a single index outside the result.

use std::cmp::Ordering;
use std::fmt;
use std::ops::Deref;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Default upper bound on the number of members of a constructed set.
pub const DEFAULT_SIZE_CAP: usize = 100_000_000;

/// Relative slack applied to the optimized-cross inequality so that boundary
/// cases that are equal in exact arithmetic are not lost to rounding.
const OHC_REL_TOL: f64 = 1e-12;

/// A tuple of nonnegative integers.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(pub Vec<usize>);

impl MultiIndex {
    pub fn zeros(dim: usize) -> Self {
        Self(vec![0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

impl Deref for MultiIndex {
    type Target = [usize];
    fn deref(&self) -> &[usize] {
        &self.0
    }
}

impl From<Vec<usize>> for MultiIndex {
    fn from(v: Vec<usize>) -> Self {
        Self(v)
    }
}

impl From<&[usize]> for MultiIndex {
    fn from(v: &[usize]) -> Self {
        Self(v.to_vec())
    }
}

/// `|n|₁`
pub fn l1_norm(n: &[usize]) -> usize {
    n.iter().sum()
}

/// `|n|∞`, zero for the empty tuple.
pub fn linf_norm(n: &[usize]) -> usize {
    n.iter().copied().max().unwrap_or(0)
}

/// `|n|_mix = Π max(1, n_j)`, saturating.
pub fn mix_norm(n: &[usize]) -> u128 {
    n.iter()
        .fold(1u128, |acc, &v| acc.saturating_mul(v.max(1) as u128))
}

/// Componentwise `m ≤ n`.
pub fn dominated_by(m: &[usize], n: &[usize]) -> bool {
    m.len() == n.len() && m.iter().zip(n).all(|(a, b)| a <= b)
}

/// How Smolyak levels translate into the number of one-dimensional modes
/// (equivalently quadrature points) per coordinate.
#[derive(Debug, Clone, PartialEq, Eq)]
#[derive(Default)]
pub enum LevelMap {
    /// Level `i` keeps `i` modes, degrees `0..i`.
    #[default]
    Linear,
    /// Level `i` keeps `2^i − 1` modes.
    Doubling,
    /// Level `i` keeps `table[i − 1]` modes; levels past the end reuse the last entry.
    Table(Vec<usize>),
}


impl LevelMap {
    /// Number of modes for a one-dimensional level `i ≥ 1`.
    pub fn order(&self, level: usize) -> usize {
        match self {
            LevelMap::Linear => level,
            LevelMap::Doubling => {
                if level >= usize::BITS as usize {
                    usize::MAX
                } else {
                    (1usize << level) - 1
                }
            }
            LevelMap::Table(t) => {
                if level == 0 || t.is_empty() {
                    return 0;
                }
                t[(level - 1).min(t.len() - 1)]
            }
        }
    }

    fn validate(&self) -> Result<()> {
        if let LevelMap::Table(t) = self {
            if t.is_empty() || t[0] == 0 || t.windows(2).any(|w| w[1] < w[0]) {
                return Err(Error::InvalidParameter(format!(
                    "level table must be nonempty, positive and nondecreasing: {t:?}"
                )));
            }
        }
        Ok(())
    }
}

impl fmt::Display for LevelMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LevelMap::Linear => write!(f, "linear"),
            LevelMap::Doubling => write!(f, "doubling"),
            LevelMap::Table(t) => {
                write!(f, "table")?;
                for v in t {
                    write!(f, ":{v}")?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for LevelMap {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(LevelMap::Linear),
            "doubling" => Ok(LevelMap::Doubling),
            _ => {
                let rest = s
                    .strip_prefix("table")
                    .ok_or_else(|| Error::Parse(format!("unknown level map '{s}'")))?;
                let t = rest
                    .split(':')
                    .skip(1)
                    .map(|v| v.parse::<usize>().map_err(|e| Error::Parse(format!("{v}: {e}"))))
                    .collect::<Result<Vec<_>>>()?;
                let map = LevelMap::Table(t);
                map.validate()?;
                Ok(map)
            }
        }
    }
}

/// One tensor box of a Smolyak combination.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmolyakTerm {
    pub levels: MultiIndex,
    pub coefficient: i64,
}

fn binomial(n: usize, k: usize) -> i64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: i128 = 1;
    for j in 0..k {
        acc = acc * (n - j) as i128 / (j + 1) as i128;
    }
    acc as i64
}

/// Level vectors `i ≥ 1` with `L−d+1 ≤ |i|₁ ≤ L` and their combination
/// coefficients `(−1)^{L−|i|₁}·C(d−1, L−|i|₁)`, in lexicographic order.
pub fn build_smolyak(level: usize, dim: usize) -> Vec<SmolyakTerm> {
    if dim == 0 || level < dim {
        return Vec::new();
    }
    let lo = (level + 1).saturating_sub(dim);
    let mut out = Vec::new();
    let mut cur = vec![1usize; dim];
    fn rec(
        j: usize,
        sum: usize,
        cur: &mut Vec<usize>,
        level: usize,
        lo: usize,
        out: &mut Vec<SmolyakTerm>,
    ) {
        let dim = cur.len();
        if j == dim {
            if sum >= lo {
                let gap = level - sum;
                let sign = if gap.is_multiple_of(2) { 1 } else { -1 };
                out.push(SmolyakTerm {
                    levels: MultiIndex(cur.clone()),
                    coefficient: sign * binomial(dim - 1, gap),
                });
            }
            return;
        }
        // remaining coordinates need at least one each
        let remaining = dim - j - 1;
        let mut v = 1;
        while sum + v + remaining <= level {
            cur[j] = v;
            rec(j + 1, sum + v, cur, level, lo, out);
            v += 1;
        }
        cur[j] = 1;
    }
    rec(0, 0, &mut cur, level, lo, &mut out);
    out
}

/// Defining parameters of an index set.
#[derive(Debug, Clone, PartialEq)]
pub enum SetKind {
    /// `|n|∞ ≤ n`
    Full { n: usize },
    /// `|n|_mix ≤ n`
    Rhc { n: usize },
    /// `|n|_mix · |n|∞^{−γ} ≤ n^{1−γ}`, zero index always included.
    Ohc { n: usize, gamma: f64 },
    /// Full grid of bound `n1` on the first `d1` coordinates, optimized cross
    /// of bound `n2` on the rest.
    DimAdaptive {
        n1: usize,
        d1: usize,
        n2: usize,
        gamma: f64,
    },
    /// Union of the tensor boxes of a Smolyak combination.
    SmolyakUnion { level: usize, map: LevelMap },
    /// Arbitrary member list.
    Explicit,
}

impl SetKind {
    pub fn name(&self) -> &'static str {
        match self {
            SetKind::Full { .. } => "full",
            SetKind::Rhc { .. } => "rhc",
            SetKind::Ohc { .. } => "ohc",
            SetKind::DimAdaptive { .. } => "dim_adaptive",
            SetKind::SmolyakUnion { .. } => "smolyak_union",
            SetKind::Explicit => "explicit",
        }
    }

    /// Comma-separated `key=value` parameter list used by serialization.
    pub fn params_string(&self) -> String {
        match self {
            SetKind::Full { n } | SetKind::Rhc { n } => format!("N={n}"),
            SetKind::Ohc { n, gamma } => format!("N={n},gamma={gamma}"),
            SetKind::DimAdaptive { n1, d1, n2, gamma } => {
                format!("N1={n1},d1={d1},N2={n2},gamma={gamma}")
            }
            SetKind::SmolyakUnion { level, map } => format!("L={level},map={map}"),
            SetKind::Explicit => "-".to_string(),
        }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be at least 1".into()));
        }
        let check_gamma = |g: f64| {
            if g.is_nan() || g >= 1.0 {
                Err(Error::InvalidParameter(format!(
                    "gamma must be below 1, got {g}"
                )))
            } else {
                Ok(())
            }
        };
        match self {
            SetKind::Rhc { n } if *n == 0 => Err(Error::InvalidParameter(
                "hyperbolic cross bound must be positive".into(),
            )),
            SetKind::Ohc { n, gamma } => {
                if *n == 0 {
                    return Err(Error::InvalidParameter(
                        "hyperbolic cross bound must be positive".into(),
                    ));
                }
                check_gamma(*gamma)
            }
            SetKind::DimAdaptive { d1, n2, gamma, .. } => {
                if *d1 > dim {
                    return Err(Error::InvalidParameter(format!(
                        "full-grid block of {d1} coordinates exceeds dimension {dim}"
                    )));
                }
                if *n2 == 0 && *d1 < dim {
                    return Err(Error::InvalidParameter(
                        "cross bound of the adaptive block must be positive".into(),
                    ));
                }
                check_gamma(*gamma)
            }
            SetKind::SmolyakUnion { map, .. } => map.validate(),
            _ => Ok(()),
        }
    }

    /// Evaluates the defining inequality; `None` for explicit sets.
    pub fn admits(&self, idx: &[usize]) -> Option<bool> {
        Some(match self {
            SetKind::Full { n } => linf_norm(idx) <= *n,
            SetKind::Rhc { n } => mix_norm(idx) <= *n as u128,
            SetKind::Ohc { n, gamma } => ohc_admits(idx, *n, *gamma),
            SetKind::DimAdaptive { n1, d1, n2, gamma } => {
                let (head, tail) = idx.split_at((*d1).min(idx.len()));
                linf_norm(head) <= *n1 && (tail.is_empty() || ohc_admits(tail, *n2, *gamma))
            }
            SetKind::SmolyakUnion { .. } | SetKind::Explicit => return None,
        })
    }
}

fn ohc_admits(idx: &[usize], n: usize, gamma: f64) -> bool {
    if gamma == f64::NEG_INFINITY {
        return linf_norm(idx) <= n;
    }
    let inf = linf_norm(idx);
    if inf == 0 {
        return true;
    }
    let mix = mix_norm(idx);
    if gamma == 0.0 {
        return mix <= n as u128;
    }
    let lhs = mix as f64 * (inf as f64).powf(-gamma);
    let rhs = (n as f64).powf(1.0 - gamma);
    lhs <= rhs * (1.0 + OHC_REL_TOL)
}

/// Immutable, lexicographically ordered, duplicate-free set of multi-indices.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexSet {
    dim: usize,
    kind: SetKind,
    /// Members stored back to back, `dim` entries each.
    flat: Vec<usize>,
}

impl IndexSet {
    /// Builds an analytic set with the given size cap.
    pub fn build(kind: SetKind, dim: usize, cap: usize) -> Result<Self> {
        kind.validate(dim)?;
        match &kind {
            SetKind::Full { n } => {
                let requested = (*n as u128 + 1).checked_pow(dim as u32).unwrap_or(u128::MAX);
                if requested > cap as u128 {
                    return Err(Error::SizeCap { requested, cap });
                }
                let k = kind.clone();
                Self::enumerate(kind, dim, cap, move |p| k.admits(p).unwrap())
            }
            SetKind::Rhc { .. } | SetKind::Ohc { .. } | SetKind::DimAdaptive { .. } => {
                let k = kind.clone();
                Self::enumerate(kind, dim, cap, move |p| k.admits(p).unwrap())
            }
            SetKind::SmolyakUnion { level, map } => {
                let boxes: Vec<Vec<usize>> = build_smolyak(*level, dim)
                    .iter()
                    .map(|t| t.levels.iter().map(|&i| map.order(i)).collect())
                    .collect();
                if boxes.is_empty() {
                    return Ok(Self {
                        dim,
                        kind,
                        flat: Vec::new(),
                    });
                }
                Self::enumerate(kind, dim, cap, move |p| {
                    boxes
                        .iter()
                        .any(|b| b.iter().zip(p).all(|(&order, &v)| v < order))
                })
            }
            SetKind::Explicit => Err(Error::InvalidParameter(
                "explicit sets are built from a member list".into(),
            )),
        }
    }

    /// Depth-first enumeration of a downward-closed predicate.
    fn enumerate<F>(kind: SetKind, dim: usize, cap: usize, pred: F) -> Result<Self>
    where
        F: Fn(&[usize]) -> bool,
    {
        let mut flat = Vec::new();
        let mut cur = vec![0usize; dim];
        let mut count = 0usize;
        if !pred(&cur) {
            return Ok(Self { dim, kind, flat });
        }
        fn rec<F: Fn(&[usize]) -> bool>(
            j: usize,
            cur: &mut Vec<usize>,
            pred: &F,
            flat: &mut Vec<usize>,
            count: &mut usize,
            cap: usize,
        ) -> Result<()> {
            if j == cur.len() {
                *count += 1;
                if *count > cap {
                    return Err(Error::SizeCap {
                        requested: *count as u128,
                        cap,
                    });
                }
                flat.extend_from_slice(cur);
                return Ok(());
            }
            let mut v = 0;
            loop {
                cur[j] = v;
                // later coordinates are still zero here
                if v > 0 && !pred(cur) {
                    break;
                }
                rec(j + 1, cur, pred, flat, count, cap)?;
                v += 1;
            }
            cur[j] = 0;
            Ok(())
        }
        rec(0, &mut cur, &pred, &mut flat, &mut count, cap)?;
        Ok(Self { dim, kind, flat })
    }

    /// Builds an explicit set; members are sorted and deduplicated.
    pub fn from_members<I>(dim: usize, members: I) -> Result<Self>
    where
        I: IntoIterator,
        I::Item: AsRef<[usize]>,
    {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be at least 1".into()));
        }
        let mut v: Vec<Vec<usize>> = Vec::new();
        for m in members {
            let m = m.as_ref();
            if m.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: m.len(),
                });
            }
            v.push(m.to_vec());
        }
        v.sort();
        v.dedup();
        Ok(Self {
            dim,
            kind: SetKind::Explicit,
            flat: v.concat(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &SetKind {
        &self.kind
    }

    pub fn len(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.flat.len() / self.dim
        }
    }

    pub fn is_empty(&self) -> bool {
        self.flat.is_empty()
    }

    /// The `k`-th member in lexicographic order.
    pub fn get(&self, k: usize) -> &[usize] {
        &self.flat[k * self.dim..(k + 1) * self.dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[usize]> + '_ {
        self.flat.chunks_exact(self.dim.max(1))
    }

    /// Position of `idx` in iteration order.
    pub fn position(&self, idx: &[usize]) -> Option<usize> {
        if idx.len() != self.dim {
            return None;
        }
        let (mut lo, mut hi) = (0, self.len());
        while lo < hi {
            let mid = (lo + hi) / 2;
            match self.get(mid).cmp(idx) {
                Ordering::Less => lo = mid + 1,
                Ordering::Greater => hi = mid,
                Ordering::Equal => return Some(mid),
            }
        }
        None
    }

    pub fn contains(&self, idx: &[usize]) -> bool {
        self.position(idx).is_some()
    }

    /// Largest entry in any coordinate.
    pub fn max_degree(&self) -> usize {
        self.flat.iter().copied().max().unwrap_or(0)
    }

    /// Largest entry per coordinate.
    pub fn max_degree_per_dim(&self) -> Vec<usize> {
        let mut out = vec![0; self.dim];
        for m in self.iter() {
            for (o, &v) in out.iter_mut().zip(m) {
                *o = (*o).max(v);
            }
        }
        out
    }

    /// Checks that every unit-step predecessor of every member is present.
    pub fn check_downward_closed(&self) -> Result<()> {
        let mut probe = vec![0; self.dim];
        for m in self.iter() {
            probe.copy_from_slice(m);
            for j in 0..self.dim {
                if probe[j] > 0 {
                    probe[j] -= 1;
                    let ok = self.contains(&probe);
                    probe[j] += 1;
                    if !ok {
                        return Err(Error::NotDownwardClosed(m.to_vec()));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn is_subset_of(&self, other: &IndexSet) -> bool {
        self.dim == other.dim && self.iter().all(|m| other.contains(m))
    }

    /// Line-oriented text form: a header line, then one member per line.
    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity(self.flat.len() * 3 + 64);
        self.write_text(&mut s);
        s
    }

    pub(crate) fn write_text(&self, s: &mut String) {
        use std::fmt::Write;
        let _ = writeln!(
            s,
            "dim={} kind={} params={}",
            self.dim,
            self.kind.name(),
            self.kind.params_string()
        );
        for m in self.iter() {
            let mut first = true;
            for v in m {
                if !first {
                    s.push(' ');
                }
                first = false;
                let _ = write!(s, "{v}");
            }
            s.push('\n');
        }
    }

    /// Parses [`IndexSet::to_text`] output.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty index set text".into()))?;
        let (set, _) = Self::parse_with_lines(header, &mut lines, None)?;
        Ok(set)
    }

    /// Parses a header plus member lines; with `count` set, stops after that many
    /// members, otherwise at the end of input. Returns the set and the number of
    /// lines consumed.
    pub(crate) fn parse_with_lines<'a, I>(
        header: &str,
        lines: &mut I,
        count: Option<usize>,
    ) -> Result<(Self, usize)>
    where
        I: Iterator<Item = &'a str>,
    {
        let (dim, kind) = parse_header(header)?;
        let mut flat = Vec::new();
        let mut consumed = 0;
        let mut members = 0;
        while count.is_none_or(|c| members < c) {
            let Some(line) = lines.next() else { break };
            consumed += 1;
            let before = flat.len();
            for tok in line.split_whitespace() {
                flat.push(
                    tok.parse::<usize>()
                        .map_err(|e| Error::Parse(format!("bad index entry '{tok}': {e}")))?,
                );
            }
            if flat.len() - before != dim {
                return Err(Error::Parse(format!(
                    "index line '{line}' has {} entries, expected {dim}",
                    flat.len() - before
                )));
            }
            members += 1;
        }
        if let Some(c) = count {
            if members != c {
                return Err(Error::Parse(format!("expected {c} members, found {members}")));
            }
        }
        let set = Self { dim, kind, flat };
        if set.iter().zip(set.iter().skip(1)).any(|(a, b)| a >= b) {
            return Err(Error::Parse("members not in strict lexicographic order".into()));
        }
        Ok((set, consumed))
    }
}

fn parse_header(header: &str) -> Result<(usize, SetKind)> {
    let mut dim = None;
    let mut kind = None;
    let mut params = None;
    for tok in header.split_whitespace() {
        if let Some(v) = tok.strip_prefix("dim=") {
            dim = Some(v.parse::<usize>().map_err(|e| Error::Parse(format!("dim: {e}")))?);
        } else if let Some(v) = tok.strip_prefix("kind=") {
            kind = Some(v);
        } else if let Some(v) = tok.strip_prefix("params=") {
            params = Some(v);
        }
    }
    let dim = dim.ok_or_else(|| Error::Parse(format!("missing dim in header '{header}'")))?;
    if dim == 0 {
        return Err(Error::Parse("dimension must be at least 1".into()));
    }
    let kind = kind.ok_or_else(|| Error::Parse(format!("missing kind in header '{header}'")))?;
    let params = params.unwrap_or("-");
    let lookup = |key: &str| -> Result<&str> {
        params
            .split(',')
            .find_map(|kv| kv.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
            .ok_or_else(|| Error::Parse(format!("missing parameter {key} in '{params}'")))
    };
    fn num<T: FromStr>(s: &str) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        s.parse::<T>().map_err(|e| Error::Parse(format!("'{s}': {e}")))
    }
    let kind = match kind {
        "full" => SetKind::Full { n: num(lookup("N")?)? },
        "rhc" => SetKind::Rhc { n: num(lookup("N")?)? },
        "ohc" => SetKind::Ohc {
            n: num(lookup("N")?)?,
            gamma: num(lookup("gamma")?)?,
        },
        "dim_adaptive" => SetKind::DimAdaptive {
            n1: num(lookup("N1")?)?,
            d1: num(lookup("d1")?)?,
            n2: num(lookup("N2")?)?,
            gamma: num(lookup("gamma")?)?,
        },
        "smolyak_union" => SetKind::SmolyakUnion {
            level: num(lookup("L")?)?,
            map: lookup("map")?.parse()?,
        },
        "explicit" => SetKind::Explicit,
        other => return Err(Error::Parse(format!("unknown index set kind '{other}'"))),
    };
    Ok((dim, kind))
}

/// `{ n : |n|∞ ≤ N }`
pub fn build_full(n: usize, dim: usize) -> Result<IndexSet> {
    IndexSet::build(SetKind::Full { n }, dim, DEFAULT_SIZE_CAP)
}

/// `{ n : |n|_mix ≤ N }`
pub fn build_rhc(n: usize, dim: usize) -> Result<IndexSet> {
    IndexSet::build(SetKind::Rhc { n }, dim, DEFAULT_SIZE_CAP)
}

/// `{ n : |n|_mix·|n|∞^{−γ} ≤ N^{1−γ} }`; `γ = −∞` gives the full grid.
pub fn build_ohc(n: usize, gamma: f64, dim: usize) -> Result<IndexSet> {
    IndexSet::build(SetKind::Ohc { n, gamma }, dim, DEFAULT_SIZE_CAP)
}

/// Full grid in the leading `d1` coordinates, optimized cross in the rest.
pub fn build_dim_adaptive(
    n1: usize,
    d1: usize,
    n2: usize,
    gamma: f64,
    dim: usize,
) -> Result<IndexSet> {
    IndexSet::build(
        SetKind::DimAdaptive { n1, d1, n2, gamma },
        dim,
        DEFAULT_SIZE_CAP,
    )
}

/// Union of the degree boxes `Π [0, order(i_j))` over the Smolyak terms of
/// level `L`.
pub fn smolyak_union_index_set(level: usize, dim: usize, map: &LevelMap) -> Result<IndexSet> {
    IndexSet::build(
        SetKind::SmolyakUnion {
            level,
            map: map.clone(),
        },
        dim,
        DEFAULT_SIZE_CAP,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn boxed(dim: usize, n: usize) -> Vec<Vec<usize>> {
        let mut out = vec![vec![]];
        for _ in 0..dim {
            out = out
                .into_iter()
                .flat_map(|p| {
                    (0..=n).map(move |v| {
                        let mut q = p.clone();
                        q.push(v);
                        q
                    })
                })
                .collect();
        }
        out
    }

    #[test]
    fn norms() {
        assert_eq!(l1_norm(&[3, 0, 2]), 5);
        assert_eq!(linf_norm(&[3, 0, 2]), 3);
        assert_eq!(mix_norm(&[3, 0, 2]), 6);
        assert_eq!(mix_norm(&[0, 0]), 1);
        assert_eq!(linf_norm(&[]), 0);
    }

    #[test]
    fn full_examples() {
        let s = build_full(1, 2).unwrap();
        let v: Vec<_> = s.iter().map(|m| m.to_vec()).collect();
        assert_eq!(v, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
        assert_eq!(build_full(31, 3).unwrap().len(), 32768);
        let z = build_full(0, 5).unwrap();
        assert_eq!(z.len(), 1);
        assert_eq!(z.get(0), &[0; 5]);
    }

    #[test]
    fn full_grid_size_cap() {
        match IndexSet::build(SetKind::Full { n: 99 }, 6, DEFAULT_SIZE_CAP) {
            Err(Error::SizeCap { requested, .. }) => assert_eq!(requested, 100u128.pow(6)),
            other => panic!("expected size cap error, got {other:?}"),
        }
        assert!(matches!(
            IndexSet::build(SetKind::Rhc { n: 50 }, 3, 100),
            Err(Error::SizeCap { .. })
        ));
    }

    #[test]
    fn cross_examples() {
        assert_eq!(build_rhc(31, 2).unwrap().len(), 176);
        assert_eq!(build_rhc(31, 3).unwrap().len(), 712);
        assert_eq!(build_rhc(31, 5).unwrap().len(), 7922);
        let s = build_rhc(3, 1).unwrap();
        assert_eq!(s.iter().map(|m| m[0]).collect::<Vec<_>>(), vec![0, 1, 2, 3]);
        assert_eq!(build_ohc(31, 0.5, 2).unwrap().len(), 136);
        assert_eq!(build_ohc(31, 0.5, 5).unwrap().len(), 3392);
        assert_eq!(build_ohc(31, 0.0, 4).unwrap().flat, build_rhc(31, 4).unwrap().flat);
        let o = build_ohc(31, 0.5, 2).unwrap();
        assert!(o.contains(&[31, 0]));
        assert!(!o.contains(&[2, 31]));
        assert!(build_ohc(4, 1.0, 2).is_err());
        assert_eq!(build_ohc(5, f64::NEG_INFINITY, 3).unwrap().flat, build_full(5, 3).unwrap().flat);
    }

    #[test]
    fn dim_adaptive_examples() {
        assert_eq!(
            build_dim_adaptive(4, 3, 9, 0.5, 3).unwrap().flat,
            build_full(4, 3).unwrap().flat
        );
        assert_eq!(
            build_dim_adaptive(4, 0, 9, 0.5, 3).unwrap().flat,
            build_ohc(9, 0.5, 3).unwrap().flat
        );
        let s = build_dim_adaptive(3, 1, 7, 0.5, 3).unwrap();
        let brute = boxed(3, 7)
            .into_iter()
            .filter(|m| m[0] <= 3 && ohc_admits(&m[1..], 7, 0.5))
            .count();
        assert_eq!(s.len(), brute);
    }

    #[test]
    fn predicate_enumeration_agreement() {
        let cases: Vec<(SetKind, usize, usize)> = vec![
            (SetKind::Full { n: 6 }, 3, 6),
            (SetKind::Rhc { n: 31 }, 2, 31),
            (SetKind::Rhc { n: 20 }, 4, 20),
            (SetKind::Ohc { n: 31, gamma: 0.5 }, 2, 31),
            (SetKind::Ohc { n: 15, gamma: 0.25 }, 3, 15),
            (SetKind::Ohc { n: 12, gamma: -0.5 }, 3, 12),
            (SetKind::Ohc { n: 9, gamma: 0.75 }, 4, 9),
            (SetKind::DimAdaptive { n1: 4, d1: 2, n2: 10, gamma: 0.3 }, 4, 10),
        ];
        for (kind, dim, bound) in cases {
            let s = IndexSet::build(kind.clone(), dim, DEFAULT_SIZE_CAP).unwrap();
            let brute: Vec<usize> = boxed(dim, bound)
                .into_iter()
                .filter(|m| kind.admits(m).unwrap())
                .flatten()
                .collect();
            assert_eq!(s.flat, brute, "{kind:?} d={dim}");
            s.check_downward_closed().unwrap();
        }
    }

    #[test]
    fn membership_agrees_on_random_non_members() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let kinds = [
            SetKind::Rhc { n: 31 },
            SetKind::Ohc { n: 31, gamma: 0.5 },
            SetKind::DimAdaptive { n1: 3, d1: 1, n2: 7, gamma: 0.5 },
            SetKind::Full { n: 5 },
        ];
        for kind in kinds {
            let s = IndexSet::build(kind.clone(), 3, DEFAULT_SIZE_CAP).unwrap();
            for m in s.iter() {
                assert_eq!(kind.admits(m), Some(true));
            }
            let mut found = 0;
            while found < 1000 {
                let m: Vec<usize> = (0..3).map(|_| rng.gen_range(0..40)).collect();
                if !s.contains(&m) {
                    assert_eq!(kind.admits(&m), Some(false), "{kind:?} {m:?}");
                    found += 1;
                }
            }
        }
    }

    #[test]
    fn nesting_and_monotonicity() {
        for dim in 1..=4 {
            for &n in &[1usize, 4, 9, 17, 31] {
                let full = build_full(n, dim).unwrap();
                let rhc = build_rhc(n, dim).unwrap();
                assert!(rhc.is_subset_of(&full));
                let mut prev = rhc.clone();
                for &g in &[0.1, 0.25, 0.5, 0.75, 0.9] {
                    let o = build_ohc(n, g, dim).unwrap();
                    assert!(o.is_subset_of(&prev), "d={dim} N={n} γ={g}");
                    prev = o;
                }
                for &g in &[-1.0, 0.0, 0.5] {
                    let small = build_ohc(n, g, dim).unwrap();
                    let big = build_ohc(n + 3, g, dim).unwrap();
                    assert!(small.is_subset_of(&big));
                }
            }
        }
    }

    #[test]
    fn rhc_growth_band() {
        for dim in [2usize, 3] {
            let ratios: Vec<f64> = [8usize, 16, 32, 64, 128]
                .iter()
                .map(|&n| {
                    let card = build_rhc(n, dim).unwrap().len() as f64;
                    card / (n as f64 * (n as f64).ln().powi(dim as i32 - 1))
                })
                .collect();
            let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = ratios.iter().cloned().fold(0.0, f64::max);
            assert!(hi / lo < 3.0, "d={dim}: {ratios:?}");
        }
    }

    #[test]
    fn smolyak_examples() {
        let t = build_smolyak(4, 1);
        assert_eq!(t, vec![SmolyakTerm { levels: MultiIndex(vec![4]), coefficient: 1 }]);
        let t = build_smolyak(3, 2);
        let got: Vec<(Vec<usize>, i64)> = t.iter().map(|t| (t.levels.0.clone(), t.coefficient)).collect();
        assert_eq!(got, vec![(vec![1, 1], -1), (vec![1, 2], 1), (vec![2, 1], 1)]);
        assert!(build_smolyak(2, 3).is_empty());
        for t in build_smolyak(7, 3) {
            let s = l1_norm(&t.levels);
            assert!((5..=7).contains(&s) && t.coefficient != 0);
        }
    }

    /// Sum of coefficients of boxes containing each point equals one.
    fn check_telescoping(level: usize, dim: usize) {
        let terms = build_smolyak(level, dim);
        let union = smolyak_union_index_set(level, dim, &LevelMap::Linear).unwrap();
        let mut weighted = 0i64;
        for m in union.iter() {
            let tot: i64 = terms
                .iter()
                .filter(|t| t.levels.iter().zip(m).all(|(&i, &v)| v < i))
                .map(|t| t.coefficient)
                .sum();
            assert_eq!(tot, 1, "L={level} d={dim} at {m:?}");
        }
        for t in &terms {
            weighted += t.coefficient * t.levels.iter().map(|&i| i as i64).product::<i64>();
        }
        assert_eq!(weighted as usize, union.len());
    }

    #[test]
    fn smolyak_telescoping() {
        for dim in 1..=4 {
            for level in dim..=dim + 5 {
                check_telescoping(level, dim);
            }
        }
    }

    #[test]
    fn smolyak_union_examples() {
        let s = smolyak_union_index_set(3, 1, &LevelMap::Linear).unwrap();
        assert_eq!(s.flat, vec![0, 1, 2]);
        let s = smolyak_union_index_set(2, 2, &LevelMap::Linear).unwrap();
        assert_eq!(s.flat, vec![0, 0]);
        for map in [LevelMap::Linear, LevelMap::Doubling, LevelMap::Table(vec![1, 2, 4, 4, 9])] {
            let s = smolyak_union_index_set(4, 2, &map).unwrap();
            let mut brute: Vec<Vec<usize>> = Vec::new();
            for t in build_smolyak(4, 2) {
                for a in 0..map.order(t.levels[0]) {
                    for b in 0..map.order(t.levels[1]) {
                        brute.push(vec![a, b]);
                    }
                }
            }
            brute.sort();
            brute.dedup();
            assert_eq!(s.flat, brute.concat());
            s.check_downward_closed().unwrap();
        }
    }

    #[test]
    fn level_maps() {
        assert_eq!(LevelMap::Doubling.order(1), 1);
        assert_eq!(LevelMap::Doubling.order(5), 31);
        assert_eq!(LevelMap::Table(vec![1, 3, 7]).order(9), 7);
        for s in ["linear", "doubling", "table:1:3:5"] {
            assert_eq!(s.parse::<LevelMap>().unwrap().to_string(), s);
        }
        assert!("table:3:1".parse::<LevelMap>().is_err());
    }

    #[test]
    fn downward_closed_detection() {
        let s = IndexSet::from_members(2, [[0, 0], [0, 2]]).unwrap();
        assert!(matches!(s.check_downward_closed(), Err(Error::NotDownwardClosed(_))));
        let s = IndexSet::from_members(2, [[0, 1], [0, 0], [0, 1]]).unwrap();
        assert_eq!(s.len(), 2);
        s.check_downward_closed().unwrap();
    }

    #[test]
    fn text_round_trip() {
        let sets = vec![
            build_full(3, 2).unwrap(),
            build_rhc(31, 3).unwrap(),
            build_ohc(31, 0.5, 3).unwrap(),
            build_ohc(6, f64::NEG_INFINITY, 2).unwrap(),
            build_dim_adaptive(3, 1, 7, 0.1 + 0.2, 3).unwrap(),
            smolyak_union_index_set(6, 3, &LevelMap::Table(vec![1, 3, 7])).unwrap(),
            IndexSet::from_members(2, [[4, 0], [1, 9]]).unwrap(),
        ];
        for s in sets {
            let text = s.to_text();
            let back = IndexSet::from_text(&text).unwrap();
            assert_eq!(back, s);
            assert_eq!(back.to_text(), text);
        }
        assert!(IndexSet::from_text("dim=2 kind=full params=N=1\n0 0\n0\n").is_err());
        assert!(IndexSet::from_text("dim=2 kind=bogus params=-\n").is_err());
    }

    proptest! {
        #[test]
        fn analytic_sets_are_downward_closed(dim in 1usize..4, n in 1usize..25,
                                             gamma in -1.0f64..0.95, d1 in 0usize..4) {
            let d1 = d1.min(dim);
            for kind in [SetKind::Rhc { n }, SetKind::Ohc { n, gamma },
                         SetKind::DimAdaptive { n1: n / 3, d1, n2: n, gamma }] {
                let s = IndexSet::build(kind, dim, DEFAULT_SIZE_CAP).unwrap();
                prop_assert!(s.check_downward_closed().is_ok());
                for (k, m) in s.iter().enumerate() {
                    prop_assert_eq!(s.position(m), Some(k));
                }
            }
        }

        #[test]
        fn ohc_monotone_in_gamma(dim in 1usize..4, n in 1usize..31,
                                 g1 in -1.0f64..0.95, g2 in -1.0f64..0.95) {
            let (lo, hi) = if g1 <= g2 { (g1, g2) } else { (g2, g1) };
            let a = build_ohc(n, hi, dim).unwrap();
            let b = build_ohc(n, lo, dim).unwrap();
            prop_assert!(a.is_subset_of(&b));
        }

        #[test]
        fn explicit_round_trip(members in proptest::collection::vec(proptest::collection::vec(0usize..50, 3), 0..40)) {
            let s = IndexSet::from_members(3, &members).unwrap();
            prop_assert_eq!(IndexSet::from_text(&s.to_text()).unwrap(), s);
        }
    }
}
