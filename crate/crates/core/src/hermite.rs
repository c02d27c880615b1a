//! One-dimensional generalized Hermite functions
//!
//! ```text
//! H_n^{α,β}(x) = (α / (2ⁿ n! √π))^{1/2} · H_n(α(x−β)) · exp(−α²(x−β)²/2)
//! ```
//!
//! The family is orthonormal on the real line for every `α > 0` and `β`.  Besides
//! pointwise evaluation this module provides the coefficient-space actions that
//! the Galerkin assembly is built from: differentiation, multiplication by `x`
//! and powers of the lowering operator `D = ∂ + α²(x−β)`.
//!
//! Coefficient sequences are plain slices `c[0..=N]` holding the expansion
//! `u = Σ c_n H_n^{α,β}`.  Lowering shrinks the sequence by `k`, the raising
//! operations grow it by one; callers truncate explicitly.

use crate::error::{Error, Result};

/// `π^{-1/4}`
const PI_FOURTH_ROOT_INV: f64 = 0.751_125_544_464_942_5;
/// Rescaling threshold used by the normalized recurrence.
const RESCALE: f64 = 1e150;

/// Scaling and translation of a generalized Hermite family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisParams1D {
    alpha: f64,
    beta: f64,
}

impl BasisParams1D {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "scaling factor must be positive and finite, got {alpha}"
            )));
        }
        if !beta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "translation must be finite, got {beta}"
            )));
        }
        Ok(Self { alpha, beta })
    }

    /// The classical Hermite functions, `α = 1`, `β = 0`.
    pub fn standard() -> Self {
        Self {
            alpha: 1.0,
            beta: 0.0,
        }
    }

    #[inline]
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    #[inline]
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Maps a physical coordinate to the reference variable `α(x−β)`.
    #[inline]
    pub fn reference(&self, x: f64) -> f64 {
        self.alpha * (x - self.beta)
    }
}

impl Default for BasisParams1D {
    fn default() -> Self {
        Self::standard()
    }
}

/// Physicists' Hermite polynomial `H_n(x)` from the three-term recurrence.
///
/// Returns [`Error::OutOfRange`] when the value leaves the double range.
pub fn hermite_poly(n: usize, x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::InvalidParameter(format!("non-finite argument {x}")));
    }
    let mut prev = 1.0;
    if n == 0 {
        return Ok(prev);
    }
    let mut cur = 2.0 * x;
    for k in 1..n {
        let next = 2.0 * x * cur - 2.0 * k as f64 * prev;
        prev = cur;
        cur = next;
        if !cur.is_finite() {
            return Err(Error::OutOfRange(format!(
                "H_{n}({x}) overflows at degree {}",
                k + 1
            )));
        }
    }
    Ok(cur)
}

/// Sturm–Liouville eigenvalue `λ_n = 2α²n`.
#[inline]
pub fn eigenvalue(n: usize, alpha: f64) -> f64 {
    2.0 * alpha * alpha * n as f64
}

/// `μ_{n,k}`: `1` for `k = 0`, `0` for `k > n`, else `Π_{j<k} λ_{n−j}`.
pub fn mu_factor(n: usize, k: usize, alpha: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if k > n {
        return 0.0;
    }
    (0..k).map(|j| eigenvalue(n - j, alpha)).product()
}

/// Evaluates `H_n^{α,β}(x)`.
pub fn basis_eval(n: usize, p: &BasisParams1D, x: f64) -> f64 {
    basis_values(n, p, x)[n]
}

/// All values `H_0^{α,β}(x), …, H_nmax^{α,β}(x)`.
///
/// The polynomial part is carried through the normalized recurrence
/// `h_{n+1} = √(2/(n+1)) t h_n − √(n/(n+1)) h_{n−1}` with periodic rescaling,
/// and the Gaussian envelope is applied once per output in log space, so large
/// degrees and far-out arguments neither overflow nor underflow prematurely.
pub fn basis_values(nmax: usize, p: &BasisParams1D, x: f64) -> Vec<f64> {
    let t = p.reference(x);
    normalized_recurrence(nmax, t, p.alpha.sqrt(), -0.5 * t * t)
}

/// Polynomial parts `H_n^{α,β}(x) · exp(+α²(x−β)²/2)` for `n = 0..=nmax`.
///
/// These are what quadrature against the weight `exp(−α²(x−β)²)` needs: the
/// envelope is folded into the weight analytically instead of being divided
/// out of sampled values.
pub fn basis_poly_values(nmax: usize, p: &BasisParams1D, x: f64) -> Vec<f64> {
    let t = p.reference(x);
    normalized_recurrence(nmax, t, p.alpha.sqrt(), 0.0)
}

/// Values of `H_n^{α,β}(x)·exp(shift)` computed as `poly_n · exp(shift − t²/2)`.
///
/// Used where a known exponential weight multiplies the basis function and
/// combining the exponents first keeps the product representable.
pub fn basis_values_with_log_factor(
    nmax: usize,
    p: &BasisParams1D,
    x: f64,
    log_factor: f64,
) -> Vec<f64> {
    let t = p.reference(x);
    normalized_recurrence(nmax, t, p.alpha.sqrt(), log_factor - 0.5 * t * t)
}

fn normalized_recurrence(nmax: usize, t: f64, amplitude: f64, log_env: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(nmax + 1);
    let mut log_scale = 0.0_f64;
    let mut factor = log_env.exp();

    let mut prev = amplitude * PI_FOURTH_ROOT_INV;
    out.push(prev * factor);
    if nmax == 0 {
        return out;
    }
    let mut cur = std::f64::consts::SQRT_2 * t * prev;
    out.push(cur * factor);
    for n in 1..nmax {
        let nf = n as f64;
        let mut next = (2.0 / (nf + 1.0)).sqrt() * t * cur - (nf / (nf + 1.0)).sqrt() * prev;
        if next.abs() > RESCALE {
            next /= RESCALE;
            cur /= RESCALE;
            log_scale += RESCALE.ln();
            factor = (log_scale + log_env).exp();
        }
        prev = cur;
        cur = next;
        out.push(cur * factor);
    }
    out
}

/// Coefficients of `D^k u` where `D = ∂ + α²(x−β)`.
///
/// Output length is `N + 1 − k` (empty when `k > N`), entry `n − k` holding
/// `√μ_{n,k} c_n`.
pub fn lower_d_coeffs(c: &[f64], k: usize, p: &BasisParams1D) -> Vec<f64> {
    if k == 0 {
        return c.to_vec();
    }
    if k >= c.len() {
        return Vec::new();
    }
    (k..c.len())
        .map(|n| {
            let root_mu: f64 = (0..k).map(|j| eigenvalue(n - j, p.alpha).sqrt()).product();
            root_mu * c[n]
        })
        .collect()
}

/// Image of the single basis function `H_n` under multiplication by `x`, as
/// `(index, coefficient)` pairs.
///
/// From `2α²(x−β)H_n = √λ_n H_{n−1} + √λ_{n+1} H_{n+1}`.
pub fn multiply_x_action(n: usize, p: &BasisParams1D) -> [(usize, f64); 3] {
    let inv = 1.0 / (2.0 * p.alpha * p.alpha);
    let down = if n > 0 {
        (n - 1, eigenvalue(n, p.alpha).sqrt() * inv)
    } else {
        (0, 0.0)
    };
    [down, (n, p.beta), (n + 1, eigenvalue(n + 1, p.alpha).sqrt() * inv)]
}

/// Image of `H_n` under `∂_x`, as `(index, coefficient)` pairs.
///
/// From `∂H_n = ½√λ_n H_{n−1} − ½√λ_{n+1} H_{n+1}`.
pub fn derivative_action(n: usize, p: &BasisParams1D) -> [(usize, f64); 2] {
    let down = if n > 0 {
        (n - 1, 0.5 * eigenvalue(n, p.alpha).sqrt())
    } else {
        (0, 0.0)
    };
    [down, (n + 1, -0.5 * eigenvalue(n + 1, p.alpha).sqrt())]
}

fn apply_action<const K: usize>(
    c: &[f64],
    action: impl Fn(usize) -> [(usize, f64); K],
) -> Vec<f64> {
    if c.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; c.len() + 1];
    for (n, &cn) in c.iter().enumerate() {
        if cn == 0.0 {
            continue;
        }
        for (m, w) in action(n) {
            if w != 0.0 {
                out[m] += w * cn;
            }
        }
    }
    out
}

/// Coefficients of `x·u`; output length `N + 2`.
pub fn multiply_x_coeffs(c: &[f64], p: &BasisParams1D) -> Vec<f64> {
    apply_action(c, |n| multiply_x_action(n, p))
}

/// Coefficients of `∂_x u`; output length `N + 2`.
pub fn derivative_coeffs(c: &[f64], p: &BasisParams1D) -> Vec<f64> {
    apply_action(c, |n| derivative_action(n, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::gauss_hermite_rule;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit(n: usize, len: usize) -> Vec<f64> {
        let mut v = vec![0.0; len];
        v[n] = 1.0;
        v
    }

    /// Direct evaluation with explicit factorials, valid for small n.
    fn basis_direct(n: usize, p: &BasisParams1D, x: f64) -> f64 {
        let t = p.reference(x);
        let fact: f64 = (1..=n).map(|k| k as f64).product();
        let norm = (p.alpha() / (2f64.powi(n as i32) * fact * std::f64::consts::PI.sqrt())).sqrt();
        norm * hermite_poly(n, t).unwrap() * (-0.5 * t * t).exp()
    }

    #[test]
    fn hermite_poly_examples() {
        assert_eq!(hermite_poly(0, 3.7).unwrap(), 1.0);
        assert_eq!(hermite_poly(1, 0.5).unwrap(), 1.0);
        assert_eq!(hermite_poly(2, 1.0).unwrap(), 2.0);
        // H_3 = 8x³ − 12x
        assert!((hermite_poly(3, 0.7).unwrap() - (8.0 * 0.343 - 12.0 * 0.7)).abs() < 1e-14);
    }

    #[test]
    fn hermite_poly_overflow_is_signalled() {
        assert!(matches!(hermite_poly(400, 50.0), Err(Error::OutOfRange(_))));
        assert!(hermite_poly(3, f64::NAN).is_err());
    }

    #[test]
    fn basis_eval_examples() {
        let p = BasisParams1D::standard();
        assert!((basis_eval(0, &p, 0.0) - 0.751_126).abs() < 1e-6);
        let p = BasisParams1D::new(2.0, 0.3).unwrap();
        assert_eq!(basis_eval(1, &p, 0.3), 0.0);
        let shifted = BasisParams1D::new(1.5, -1.0).unwrap();
        let centred = BasisParams1D::new(1.5, 0.0).unwrap();
        let a = basis_eval(5, &shifted, 0.2);
        let b = basis_eval(5, &centred, 1.2);
        assert!((a - b).abs() < 1e-15 * a.abs().max(1.0));
    }

    #[test]
    fn basis_matches_closed_form_for_small_degree() {
        for &(alpha, beta) in &[(1.0, 0.0), (1.01, 0.0), (2.0, -0.4), (0.6, 1.3)] {
            let p = BasisParams1D::new(alpha, beta).unwrap();
            for &x in &[-3.1, -0.4, 0.0, 0.9, 2.5] {
                let vals = basis_values(20, &p, x);
                for n in 0..=20 {
                    let d = basis_direct(n, &p, x);
                    assert!((vals[n] - d).abs() < 1e-12, "n={n} x={x}: {} vs {d}", vals[n]);
                }
            }
        }
    }

    #[test]
    fn high_degree_is_finite() {
        let p = BasisParams1D::new(1.3, 0.2).unwrap();
        for &x in &[0.0, 5.0, 15.0, 40.0, -60.0] {
            let vals = basis_values(250, &p, x);
            assert!(vals.iter().all(|v| v.is_finite()), "x={x}");
            // |H_n| ≤ π^{-1/4}√α for all n, x
            assert!(vals.iter().all(|v| v.abs() <= 0.76 * 1.3f64.sqrt() + 1e-12));
        }
        // far tail genuinely small but not flushed for n where the turning point reaches it
        let v = basis_values(200, &BasisParams1D::standard(), 19.0);
        assert!(v[200].abs() > 1e-10);
    }

    #[test]
    fn eigenvalue_and_mu_examples() {
        assert_eq!(eigenvalue(0, 7.3), 0.0);
        assert_eq!(eigenvalue(5, 1.0), 10.0);
        assert_eq!(eigenvalue(2, 2.0), 16.0);
        assert_eq!(mu_factor(4, 0, 0.5), 1.0);
        assert_eq!(mu_factor(1, 3, 1.0), 0.0);
        assert_eq!(mu_factor(3, 2, 1.0), 24.0);
        // closed form 2^k α^{2k} n!/(n−k)!
        let a: f64 = 1.7;
        let closed = 2f64.powi(3) * a.powi(6) * (6.0 * 5.0 * 4.0);
        assert!((mu_factor(6, 3, a) - closed).abs() < 1e-10 * closed);
    }

    #[test]
    fn lower_d_examples() {
        let p = BasisParams1D::standard();
        let out = lower_d_coeffs(&unit(3, 5), 1, &p);
        assert_eq!(out.len(), 4);
        assert!((out[2] - 6f64.sqrt()).abs() < 1e-15);
        assert!(lower_d_coeffs(&unit(0, 4), 1, &p)[..].iter().all(|&v| v == 0.0));
        let out = lower_d_coeffs(&unit(2, 3), 2, &p);
        assert_eq!(out.len(), 1);
        assert!((out[0] - 8f64.sqrt()).abs() < 1e-14);
        assert!(lower_d_coeffs(&[1.0, 2.0], 3, &p).is_empty());
    }

    #[test]
    fn multiply_x_examples() {
        let p = BasisParams1D::standard();
        let out = multiply_x_coeffs(&[1.0], &p);
        assert_eq!(out.len(), 2);
        assert_eq!(out[0], 0.0);
        assert!((out[1] - 0.5f64.sqrt()).abs() < 1e-15);

        let p = BasisParams1D::new(1.0, 5.0).unwrap();
        let out = multiply_x_coeffs(&[1.0], &p);
        assert!((out[0] - 5.0).abs() < 1e-15);
        assert!((out[1] - 0.5f64.sqrt()).abs() < 1e-15);

        assert!(multiply_x_coeffs(&[0.0; 4], &p).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn derivative_examples() {
        let p = BasisParams1D::standard();
        let out = derivative_coeffs(&unit(1, 2), &p);
        assert!((out[0] - 2f64.sqrt() / 2.0).abs() < 1e-15);
        assert!((out[2] + 1.0).abs() < 1e-15);
        let out = derivative_coeffs(&[1.0], &p);
        assert!((out[1] + 2f64.sqrt() / 2.0).abs() < 1e-15);
        assert!(derivative_coeffs(&[0.0; 3], &p).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn orthonormality_by_quadrature() {
        let rule = gauss_hermite_rule(48).unwrap();
        for &(alpha, beta) in &[(1.0, 0.0), (1.01, 0.0), (2.0, 0.5), (0.7, -1.2)] {
            let p = BasisParams1D::new(alpha, beta).unwrap();
            let mapped = rule.map(&p);
            let tables: Vec<Vec<f64>> =
                mapped.nodes().iter().map(|&x| basis_poly_values(12, &p, x)).collect();
            for n in 0..=12 {
                for m in 0..=12 {
                    let s: f64 = tables
                        .iter()
                        .zip(mapped.weights())
                        .map(|(v, w)| w * v[n] * v[m])
                        .sum();
                    let expect = if n == m { 1.0 } else { 0.0 };
                    assert!((s - expect).abs() < 1e-10, "α={alpha} n={n} m={m}: {s}");
                }
            }
        }
    }

    #[test]
    fn lowering_operator_orthogonality() {
        // ∫ D^k H_n · D^k H_m = μ_{n,k} δ_{nm}; D^k applied pointwise via
        // D = ∂ + α²(x−β) with ∂ from the polynomial identity
        // ∂H_n = α(√(2n) H_{n−1} − t H_n).
        let rule = gauss_hermite_rule(60).unwrap();
        for &(alpha, beta) in &[(1.0, 0.0), (1.4, 0.3)] {
            let p = BasisParams1D::new(alpha, beta).unwrap();
            let mapped = rule.map(&p);
            for k in 0..=3 {
                // D^k H_n evaluated pointwise (polynomial part only) by repeated application.
                let vals: Vec<Vec<f64>> = mapped
                    .nodes()
                    .iter()
                    .map(|&x| {
                        let t = p.reference(x);
                        let mut v = basis_poly_values(10 + k, &p, x);
                        for _ in 0..k {
                            // On poly parts: D acting on q·e^{−t²/2} gives
                            // α(√(2n)q_{n−1} − t q_n) + α t q_n = α√(2n) q_{n−1}.
                            let next: Vec<f64> = (0..v.len())
                                .map(|n| {
                                    let dq = if n > 0 {
                                        alpha * (2.0 * n as f64).sqrt() * v[n - 1]
                                    } else {
                                        0.0
                                    };
                                    // ∂ contributes dq − αt·q_n, the x-term adds αt·q_n back
                                    dq - alpha * t * v[n] + alpha * t * v[n]
                                })
                                .collect();
                            v = next;
                        }
                        v
                    })
                    .collect();
                for n in 0..=10 {
                    for m in 0..=10 {
                        let s: f64 = vals
                            .iter()
                            .zip(mapped.weights())
                            .map(|(v, w)| w * v[n] * v[m])
                            .sum();
                        let expect = if n == m { mu_factor(n, k, alpha) } else { 0.0 };
                        assert!(
                            (s - expect).abs() < 1e-8 * expect.max(1.0),
                            "k={k} n={n} m={m}: {s} vs {expect}"
                        );
                    }
                }
            }
        }
    }

    fn eval_series(c: &[f64], p: &BasisParams1D, x: f64) -> f64 {
        if c.is_empty() {
            return 0.0;
        }
        let v = basis_values(c.len() - 1, p, x);
        c.iter().zip(&v).map(|(a, b)| a * b).sum()
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = 1e-5;
        for &(alpha, beta) in &[(1.0, 0.0), (1.3, -0.5)] {
            let p = BasisParams1D::new(alpha, beta).unwrap();
            for n in 0..=15 {
                let d = derivative_coeffs(&unit(n, n + 1), &p);
                for _ in 0..100 {
                    let x = beta + rng.gen_range(-4.0..4.0) / alpha;
                    let fd = (basis_eval(n, &p, x + h) - basis_eval(n, &p, x - h)) / (2.0 * h);
                    let an = eval_series(&d, &p, x);
                    assert!((fd - an).abs() < 1e-6, "n={n} x={x}: {fd} vs {an}");
                }
            }
        }
    }

    #[test]
    fn sturm_liouville_residual() {
        // e^{t²/2} ∂(e^{−t²}∂(e^{t²/2}u)) + λ_n u = 0, t = α(x−β); derivatives by
        // Richardson-refined central differences on the smooth inner factors.
        let d1 = |f: &dyn Fn(f64) -> f64, x: f64| {
            let c = |h: f64| (f(x + h) - f(x - h)) / (2.0 * h);
            let h = 1e-3;
            (4.0 * c(h / 2.0) - c(h)) / 3.0
        };
        for &alpha in &[1.0, 1.01, 2.0] {
            let p = BasisParams1D::new(alpha, 0.25).unwrap();
            for n in 0..=8 {
                let inner = |x: f64| {
                    let t = p.reference(x);
                    (0.5 * t * t).exp() * basis_eval(n, &p, x)
                };
                let flux = |x: f64| {
                    let t = p.reference(x);
                    (-t * t).exp() * d1(&inner, x)
                };
                for k in 0..50 {
                    let x = 0.25 + (-2.5 + 5.0 * k as f64 / 49.0) / alpha;
                    let t = p.reference(x);
                    let lhs = (0.5 * t * t).exp() * d1(&flux, x);
                    let res = lhs + eigenvalue(n, alpha) * basis_eval(n, &p, x);
                    assert!(res.abs() < 1e-6, "α={alpha} n={n} x={x}: residual {res}");
                }
            }
        }
    }

    proptest! {
        #[test]
        fn lowering_identity(coeffs in proptest::collection::vec(-1.0f64..1.0, 20),
                             alpha in 0.3f64..3.0, beta in -2.0f64..2.0) {
            let p = BasisParams1D::new(alpha, beta).unwrap();
            let lowered = lower_d_coeffs(&coeffs, 1, &p);
            let d = derivative_coeffs(&coeffs, &p);
            let x = multiply_x_coeffs(&coeffs, &p);
            let scale: f64 = coeffs.iter().map(|v| v.abs()).sum::<f64>() * (alpha * alpha + 1.0) * 10.0;
            for m in 0..d.len() {
                let shifted = x[m] - beta * coeffs.get(m).copied().unwrap_or(0.0);
                let rhs = d[m] + alpha * alpha * shifted;
                let lhs = lowered.get(m).copied().unwrap_or(0.0);
                prop_assert!((lhs - rhs).abs() <= 1e-13 * scale, "m={} {} vs {}", m, lhs, rhs);
            }
        }
    }

    #[test]
    fn rejects_nonpositive_alpha() {
        assert!(BasisParams1D::new(0.0, 0.0).is_err());
        assert!(BasisParams1D::new(-1.0, 0.0).is_err());
        assert!(BasisParams1D::new(f64::NAN, 0.0).is_err());
        assert!(BasisParams1D::new(1.0, f64::INFINITY).is_err());
    }
}
