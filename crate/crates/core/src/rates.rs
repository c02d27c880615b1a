//! Projection-error decay suites and norm inequality checks.
//!
//! Every suite measures errors of the orthogonal projection exactly, from the
//! coefficient sequences of a separable test function, and reports a pass
//! flag next to the data it was decided on.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::experiment::{Cell, Table};
use crate::hermite::{derivative_coeffs, multiply_x_coeffs};
use crate::multi_index::{IndexSet, SetKind, DEFAULT_SIZE_CAP};
use crate::spectral::{
    korobov_norm, korobov_seminorm, l2_norm, sobolev_norm, sobolev_seminorm, BasisParams, CoeffVector,
    SeparableCoefficients, SeparableFunction, SeparableSum,
};

/// Alpha of every projection suite.
pub const SUITE_ALPHA: f64 = 1.01;

/// Least-squares line through `(x, y)` with the standard error of its slope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
}

impl LineFit {
    /// Two-sided 95% interval for the slope.
    pub fn slope_interval(&self, points: usize) -> (f64, f64) {
        let h = student_t95(points.saturating_sub(2)) * self.slope_stderr;
        (self.slope - h, self.slope + h)
    }
}

fn student_t95(dof: usize) -> f64 {
    const T: [f64; 10] = [f64::INFINITY, 12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262];
    T.get(dof).copied().unwrap_or(1.96)
}

pub fn fit_line(x: &[f64], y: &[f64]) -> LineFit {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let slope_stderr = if x.len() > 2 {
        (rss / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    LineFit {
        slope,
        intercept,
        slope_stderr,
    }
}

/// `log y` against `log x`.
pub fn fit_loglog(x: &[f64], y: &[f64]) -> LineFit {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    fit_line(&lx, &ly)
}

/// Outcome of one suite.
#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub name: &'static str,
    /// Diagnostic suites are reported but decide nothing.
    pub diagnostic: bool,
    pub passed: bool,
    pub summary: String,
    pub table: Table,
}

/// `e^{−|x|²/2}·Π_j sin x_j`
pub fn sine_gaussian(dim: usize) -> SeparableSum {
    SeparableSum::new().with(1.0, SeparableFunction::repeated(dim, |x| x.sin() * (-0.5 * x * x).exp()))
}

/// Coefficient sequences of [`sine_gaussian`] at [`SUITE_ALPHA`].
pub fn sine_gaussian_coefficients(dim: usize, nmax: usize) -> Result<(SeparableCoefficients, BasisParams)> {
    let p = BasisParams::isotropic(dim, SUITE_ALPHA, 0.0)?;
    let c = SeparableCoefficients::from_functions(&sine_gaussian(dim), &p, nmax, 400)?;
    Ok((c, p))
}

/// Product expansion with the given sequence in every coordinate.
fn product_sequence(factors: Vec<Vec<f64>>) -> SeparableCoefficients {
    SeparableCoefficients::new().with(1.0, factors)
}

fn build(kind: SetKind, dim: usize) -> Result<IndexSet> {
    IndexSet::build(kind, dim, DEFAULT_SIZE_CAP)
}

fn projection_error(u: &SeparableCoefficients, s: &IndexSet) -> Result<f64> {
    Ok(u.tail_sq(s)?.max(0.0).sqrt())
}

/// Error of the full grid at cardinality `m`, interpolated log-log between
/// the bracketing measured sizes.
fn interpolate_loglog(sizes: &[f64], errors: &[f64], m: f64) -> Option<f64> {
    let k = sizes.windows(2).position(|w| w[0] <= m && m <= w[1])?;
    let (x0, x1) = (sizes[k].ln(), sizes[k + 1].ln());
    let (y0, y1) = (errors[k].ln(), errors[k + 1].ln());
    let t = if x1 > x0 { (m.ln() - x0) / (x1 - x0) } else { 0.0 };
    Some((y0 + t * (y1 - y0)).exp())
}

/// Full-grid decay in `d = 2` over `N ∈ {4, 8, 16, 32}`: the entire
/// sine-Gaussian and functions of finite smoothness `(n+1)^{−m}` per
/// coordinate; every slope must be at most −1 and slopes must fall as the
/// smoothness order rises.
pub fn full_grid_suite() -> Result<SuiteReport> {
    let dim = 2;
    let ns = [4usize, 8, 16, 32];
    let (sg, _) = sine_gaussian_coefficients(dim, 200)?;
    let mut funcs: Vec<(String, SeparableCoefficients)> = vec![("sine_gaussian".into(), sg)];
    for m in [2usize, 3, 4] {
        let seq: Vec<f64> = (0..4000).map(|n| ((n + 1) as f64).powi(-(m as i32))).collect();
        funcs.push((format!("algebraic_m{m}"), product_sequence(vec![seq; dim])));
    }
    let sets: Vec<IndexSet> = ns.iter().map(|&n| build(SetKind::Full { n }, dim)).collect::<Result<_>>()?;

    let mut table = Table::new(["function", "N", "cardinality", "error", "slope", "slope_lo", "slope_hi"]);
    let mut slopes = Vec::new();
    for (name, u) in &funcs {
        let errs: Vec<f64> = sets.iter().map(|s| projection_error(u, s)).collect::<Result<_>>()?;
        // values at the round-off floor carry no rate information
        let usable: Vec<usize> = (0..ns.len()).filter(|&k| errs[k] > 1e-14).collect();
        let xs: Vec<f64> = usable.iter().map(|&k| ns[k] as f64).collect();
        let ys: Vec<f64> = usable.iter().map(|&k| errs[k]).collect();
        let fit = fit_loglog(&xs, &ys);
        let (lo, hi) = fit.slope_interval(xs.len());
        for (k, s) in sets.iter().enumerate() {
            table.push(vec![
                name.as_str().into(),
                ns[k].into(),
                s.len().into(),
                errs[k].into(),
                fit.slope.into(),
                lo.into(),
                hi.into(),
            ]);
        }
        slopes.push(fit.slope);
    }
    let all_steep = slopes.iter().all(|&s| s <= -1.0);
    let ordered = slopes[1..].windows(2).all(|w| w[1] < w[0]);
    Ok(SuiteReport {
        name: "full_grid_rate",
        diagnostic: false,
        passed: all_steep && ordered,
        summary: format!(
            "slopes {} (sine_gaussian, m = 2, 3, 4)",
            slopes.iter().map(|s| format!("{s:.2}")).collect::<Vec<_>>().join(", ")
        ),
        table,
    })
}

/// `Π_j (n_j + 1)^{−2}` in `d` coordinates: finite mixed smoothness.
fn mixed_algebraic(dim: usize) -> SeparableCoefficients {
    let seq: Vec<f64> = (0..4000).map(|n| ((n + 1) as f64).powi(-2)).collect();
    product_sequence(vec![seq; dim])
}

/// Compares a cross-type family against a reference family at equal
/// cardinality in `d = 3` over the cardinality `range`.
#[allow(clippy::too_many_arguments)]
fn equal_cardinality_suite(
    name: &'static str,
    u: &SeparableCoefficients,
    family: &dyn Fn(usize) -> SetKind,
    reference: &dyn Fn(usize) -> SetKind,
    family_ns: &[usize],
    reference_ns: &[usize],
    range: (f64, f64),
    factor: f64,
) -> Result<SuiteReport> {
    let dim = 3;
    let mut ref_sizes = Vec::new();
    let mut ref_errs = Vec::new();
    for &n in reference_ns {
        let s = build(reference(n), dim)?;
        ref_sizes.push(s.len() as f64);
        ref_errs.push(projection_error(u, &s)?);
    }
    let mut table = Table::new(["kind", "params", "cardinality", "error", "reference_error", "ratio"]);
    let mut worst: f64 = 0.0;
    let mut compared = 0;
    for &n in family_ns {
        let kind = family(n);
        let s = build(kind.clone(), dim)?;
        let m = s.len() as f64;
        if m < range.0 || m > range.1 {
            continue;
        }
        let e = projection_error(u, &s)?;
        let r = interpolate_loglog(&ref_sizes, &ref_errs, m);
        let ratio = r.map(|r| e / r);
        if let Some(q) = ratio {
            worst = worst.max(q);
            compared += 1;
        }
        table.push(vec![
            kind.name().into(),
            kind.params_string().into(),
            s.len().into(),
            e.into(),
            r.into(),
            ratio.into(),
        ]);
    }
    Ok(SuiteReport {
        name,
        diagnostic: false,
        passed: compared > 0 && worst <= factor,
        summary: format!("worst error ratio {worst:.3e} over {compared} sizes (limit {factor})"),
        table,
    })
}

fn rhc_ns() -> Vec<usize> {
    (4..=160).step_by(4).collect()
}

fn ohc_ns() -> Vec<usize> {
    (4..=200).step_by(4).collect()
}

/// Regular hyperbolic cross against the full grid at equal cardinality for
/// the sine-Gaussian, `d = 3`, cardinalities in `[10², 10⁴]`, ratio at most 10.
pub fn rhc_vs_full_suite() -> Result<SuiteReport> {
    let (u, _) = sine_gaussian_coefficients(3, 200)?;
    let full_ns: Vec<usize> = (2..=24).collect();
    equal_cardinality_suite(
        "rhc_vs_full",
        &u,
        &|n| SetKind::Rhc { n },
        &|n| SetKind::Full { n },
        &rhc_ns(),
        &full_ns,
        (1e2, 1e4),
        10.0,
    )
}

/// Optimized cross with `γ = 0.25` against the regular cross at equal
/// cardinality for the sine-Gaussian, `d = 3`, ratio at most 10.
pub fn ohc_vs_rhc_suite() -> Result<SuiteReport> {
    let (u, _) = sine_gaussian_coefficients(3, 200)?;
    let rhc_all: Vec<usize> = (1..=400).collect();
    equal_cardinality_suite(
        "ohc_vs_rhc",
        &u,
        &|n| SetKind::Ohc { n, gamma: 0.25 },
        &|n| SetKind::Rhc { n },
        &ohc_ns(),
        &rhc_all,
        (1e2, 1e4),
        10.0,
    )
}

/// Both equal-cardinality comparisons repeated for `Π_j (n_j+1)^{−2}`,
/// whose smoothness is of mixed type.
pub fn mixed_smoothness_suites() -> Result<Vec<SuiteReport>> {
    let u = mixed_algebraic(3);
    let full_ns: Vec<usize> = (2..=24).collect();
    let rhc_all: Vec<usize> = (1..=400).collect();
    let mut a = equal_cardinality_suite(
        "rhc_vs_full_mixed",
        &u,
        &|n| SetKind::Rhc { n },
        &|n| SetKind::Full { n },
        &rhc_ns(),
        &full_ns,
        (1e2, 1e4),
        10.0,
    )?;
    let mut b = equal_cardinality_suite(
        "ohc_vs_rhc_mixed",
        &u,
        &|n| SetKind::Ohc { n, gamma: 0.25 },
        &|n| SetKind::Rhc { n },
        &ohc_ns(),
        &rhc_all,
        (1e2, 1e4),
        10.0,
    )?;
    a.diagnostic = true;
    b.diagnostic = true;
    Ok(vec![a, b])
}

/// `γ = 0` optimized crosses coincide with regular crosses, so their fitted
/// slopes agree.
pub fn ohc_gamma_zero_suite() -> Result<SuiteReport> {
    let dim = 2;
    let (u, _) = sine_gaussian_coefficients(dim, 200)?;
    let ns = [4usize, 8, 16, 32];
    let mut table = Table::new(["kind", "N", "cardinality", "error"]);
    let mut err = [Vec::new(), Vec::new()];
    let mut same = true;
    for &n in &ns {
        let a = build(SetKind::Rhc { n }, dim)?;
        let b = build(SetKind::Ohc { n, gamma: 0.0 }, dim)?;
        same &= a.iter().eq(b.iter());
        for (k, s) in [a, b].iter().enumerate() {
            let e = projection_error(&u, s)?;
            err[k].push(e);
            table.push(vec![s.kind().name().into(), n.into(), s.len().into(), e.into()]);
        }
    }
    let xs: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let fa = fit_loglog(&xs, &err[0]);
    let fb = fit_loglog(&xs, &err[1]);
    Ok(SuiteReport {
        name: "ohc_gamma_zero",
        diagnostic: false,
        passed: same && (fa.slope - fb.slope).abs() <= 1e-12 * fa.slope.abs().max(1.0),
        summary: format!("slopes {:.4} and {:.4}, identical sets: {same}", fa.slope, fb.slope),
        table,
    })
}

/// Dimension-adaptive sets in `d = 3` with one full-grid coordinate, for a
/// function rough in that coordinate (`(n+1)^{−2}`) and smooth in the
/// others (`e^{−n}`): the error must fall strictly along both parameters of
/// a 4×4 grid.
pub fn dim_adaptive_suite() -> Result<SuiteReport> {
    let dim = 3;
    let grid = [2usize, 4, 8, 16];
    let rough: Vec<f64> = (0..4000).map(|n| ((n + 1) as f64).powi(-2)).collect();
    let smooth: Vec<f64> = (0..200).map(|n| (-(n as f64)).exp()).collect();
    let u = product_sequence(vec![rough, smooth.clone(), smooth]);
    let mut table = Table::new(["N1", "N2", "cardinality", "error"]);
    let mut errs = [[0.0f64; 4]; 4];
    for (a, &n1) in grid.iter().enumerate() {
        for (b, &n2) in grid.iter().enumerate() {
            let s = build(
                SetKind::DimAdaptive {
                    n1,
                    d1: 1,
                    n2,
                    gamma: 0.5,
                },
                dim,
            )?;
            errs[a][b] = projection_error(&u, &s)?;
            table.push(vec![n1.into(), n2.into(), s.len().into(), errs[a][b].into()]);
        }
    }
    let mut monotone = true;
    for a in 0..4 {
        for b in 0..4 {
            if a + 1 < 4 {
                monotone &= errs[a + 1][b] < errs[a][b];
            }
            if b + 1 < 4 {
                monotone &= errs[a][b + 1] < errs[a][b];
            }
        }
    }
    Ok(SuiteReport {
        name: "dim_adaptive_monotone",
        diagnostic: false,
        passed: monotone,
        summary: format!("monotone in N1 and N2: {monotone}"),
        table,
    })
}

/// Random coefficients in `[-1, 1)` on `s`.
pub fn random_coefficients(s: Arc<IndexSet>, rng: &mut ChaCha8Rng) -> CoeffVector {
    let v = (0..s.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    CoeffVector::new(s, v).expect("length matches")
}

/// Moment inequality `‖x^r ∂^k u‖ ≤ C α^{−r} √max(1, k+r) ‖u‖_{W^{k+r}}` in one
/// dimension: the smallest admissible `C` over 20 random expansions of degree
/// 12 and `k, r ∈ {0, 1, 2}` must not exceed 10, for each tested α.
pub fn moment_inequality_suite(seed: u64) -> Result<SuiteReport> {
    let set = Arc::new(build(SetKind::Full { n: 12 }, 1)?);
    let mut table = Table::new(["alpha", "k", "r", "max_ratio"]);
    let mut worst: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for alpha in [1.0, 1.01, 2.0] {
        let p = BasisParams::isotropic(1, alpha, 0.0)?;
        let p1 = *p.get(0);
        let samples: Vec<CoeffVector> = (0..20).map(|_| random_coefficients(set.clone(), &mut rng)).collect();
        for k in 0..=2usize {
            for r in 0..=2usize {
                let mut c_max: f64 = 0.0;
                for u in &samples {
                    let mut v = u.values().to_vec();
                    for _ in 0..k {
                        v = derivative_coeffs(&v, &p1);
                    }
                    for _ in 0..r {
                        v = multiply_x_coeffs(&v, &p1);
                    }
                    let lhs = v.iter().map(|a| a * a).sum::<f64>().sqrt();
                    let rhs = alpha.powi(-(r as i32)) * ((k + r).max(1) as f64).sqrt() * sobolev_norm(u, &p, k + r);
                    c_max = c_max.max(lhs / rhs);
                }
                worst = worst.max(c_max);
                table.push(vec![alpha.into(), k.into(), r.into(), c_max.into()]);
            }
        }
    }
    Ok(SuiteReport {
        name: "moment_inequality",
        diagnostic: false,
        passed: worst <= 10.0,
        summary: format!("fitted constant {worst:.4} (limit 10)"),
        table,
    })
}

/// Chain `|u|_{W^l} ≤ |u|_{K^l}`, `|u|_{K^l} ≤ ‖u‖_{W^{dl}}` and
/// `|u|_{W^l} ≤ ‖u‖_{K^l}` on random expansions in `d = 2`; each holds by
/// inclusion of the summed derivative orders.
pub fn embedding_suite(seed: u64) -> Result<SuiteReport> {
    let dim = 2;
    let set = Arc::new(build(SetKind::Full { n: 10 }, dim)?);
    let p = BasisParams::isotropic(dim, SUITE_ALPHA, 0.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut table = Table::new(["l", "sample", "sobolev_semi", "korobov_semi", "sobolev_dl", "korobov"]);
    let mut ok = true;
    for l in 1..=2usize {
        for k in 0..10usize {
            let c = random_coefficients(set.clone(), &mut rng);
            let ws = sobolev_seminorm(&c, &p, l);
            let ks = korobov_seminorm(&c, &p, l);
            let wd = sobolev_norm(&c, &p, dim * l);
            let kn = korobov_norm(&c, &p, l);
            let tol = 1e-12 * wd;
            ok &= ws <= ks + tol && ks <= wd + tol && ws <= kn + tol && l2_norm(&c) <= kn + tol;
            table.push(vec![l.into(), k.into(), ws.into(), ks.into(), wd.into(), kn.into()]);
        }
    }
    Ok(SuiteReport {
        name: "norm_embedding",
        diagnostic: false,
        passed: ok,
        summary: format!("all inequalities hold: {ok}"),
        table,
    })
}

/// Every suite in a fixed order.
pub fn all_suites(seed: u64) -> Result<Vec<SuiteReport>> {
    let mut out = vec![
        full_grid_suite()?,
        rhc_vs_full_suite()?,
        ohc_vs_rhc_suite()?,
        ohc_gamma_zero_suite()?,
        dim_adaptive_suite()?,
        moment_inequality_suite(seed)?,
        embedding_suite(seed)?,
    ];
    out.extend(mixed_smoothness_suites()?);
    Ok(out)
}

/// One row per suite.
pub fn summary_table(reports: &[SuiteReport]) -> Table {
    let mut t = Table::new(["suite", "diagnostic", "passed", "summary"]);
    for r in reports {
        t.push(vec![
            r.name.into(),
            Cell::Text(r.diagnostic.to_string()),
            Cell::Text(r.passed.to_string()),
            r.summary.clone().into(),
        ]);
    }
    t
}
