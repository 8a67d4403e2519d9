//! Closed-form scalar functions of the model: the double-well potential,
//! the kinetic penalty of the time derivative, the entropy term that
//! telescopes into boundary costs, optimal flip rates, and the Hamiltonian.
//!
//! Everything here is a pure function of scalars and safe to call from any
//! number of workers.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Inverse-temperature-like cost coefficient and total kernel mass.
///
/// The phase transition sits at `beta * j_hat = 1`; above it two stable
/// constant equilibria `±s_star` exist.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialParams {
    pub beta: f64,
    pub j_hat: f64,
}

/// Stationary equilibrium data derived from the parameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EquilibriumInfo {
    /// Equilibrium magnetization `s_star = sqrt(1 - 1/(beta j_hat)^2)`,
    /// zero in the subcritical regime.
    pub s_star: f64,
    /// Running cost of the stationary equilibria, subtracted from the cost
    /// so that the equilibria have zero normalized cost.
    pub lambda_const: f64,
    /// Stationary costate magnitude, `cosh(beta p_star) = beta j_hat`.
    pub p_star: f64,
}

impl PotentialParams {
    pub fn new(beta: f64, j_hat: f64) -> Result<Self> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::Parameter(format!("beta must be positive, got {beta}")));
        }
        if !(j_hat > 0.0) || !j_hat.is_finite() {
            return Err(Error::Parameter(format!("j_hat must be positive, got {j_hat}")));
        }
        Ok(Self { beta, j_hat })
    }

    /// Two stable phases exist exactly when `beta * j_hat > 1`.
    pub fn supercritical(&self) -> bool {
        self.beta * self.j_hat > 1.0
    }

    /// Normalization constant: running cost density of the constant equilibria.
    pub fn lambda_const(&self) -> f64 {
        -0.5 * self.j_hat - 0.5 / (self.beta * self.beta * self.j_hat)
    }

    /// Equilibrium magnetization; 0 when subcritical.
    pub fn s_star(&self) -> f64 {
        let bj = self.beta * self.j_hat;
        if bj > 1.0 {
            (1.0 - 1.0 / (bj * bj)).sqrt()
        } else {
            0.0
        }
    }

    /// Stationary costate magnitude; 0 when subcritical.
    pub fn p_star(&self) -> f64 {
        let bj = self.beta * self.j_hat;
        if bj > 1.0 {
            bj.acosh() / self.beta
        } else {
            0.0
        }
    }

    /// Bound on admissible terminal data, `(1/2 beta) phi_prime(s_star)`.
    /// Coincides with `p_star`.
    pub fn g_bound(&self) -> f64 {
        if self.supercritical() {
            phi_prime(self.s_star()) / (2.0 * self.beta)
        } else {
            0.0
        }
    }

    pub fn equilibrium(&self) -> EquilibriumInfo {
        EquilibriumInfo {
            s_star: self.s_star(),
            lambda_const: self.lambda_const(),
            p_star: self.p_star(),
        }
    }

    /// Zero-velocity potential `-sqrt(1-s^2)/beta - j_hat s^2/2 - lambda_const`.
    /// Nonnegative with zeros at `±s_star` when supercritical.
    #[inline]
    pub fn w_double_well(&self, s: f64) -> f64 {
        -(1.0 - s * s).sqrt() / self.beta - 0.5 * self.j_hat * s * s - self.lambda_const()
    }

    /// First derivative of the double well.
    #[inline]
    pub fn w_double_well_d(&self, s: f64) -> f64 {
        s / (self.beta * (1.0 - s * s).sqrt()) - self.j_hat * s
    }

    /// Second derivative; sign at a critical point gives its stability tag.
    #[inline]
    pub fn w_double_well_dd(&self, s: f64) -> f64 {
        1.0 / (self.beta * (1.0 - s * s).powf(1.5)) - self.j_hat
    }
}

#[inline]
fn check_spin(s: f64) -> Result<()> {
    if s.abs() >= 1.0 || !s.is_finite() {
        return Err(Error::Domain(format!("spin value must satisfy |s| < 1, got {s}")));
    }
    Ok(())
}

/// `sigma^2 = (1-s)(1+s)`, written in the product form to keep precision
/// near `|s| = 1`.
#[inline]
pub fn sigma2(s: f64) -> f64 {
    (1.0 - s) * (1.0 + s)
}

/// Double-well potential with domain check. Subcritical parameters evaluate
/// the same formula; equilibrium-specific guarantees are gated on
/// [`PotentialParams::supercritical`].
pub fn double_well(s: f64, params: &PotentialParams) -> Result<f64> {
    check_spin(s)?;
    Ok(params.w_double_well(s))
}

/// Kinetic penalty `Psi(s, v) = (1/2) \int_0^v (v-z)/sqrt(z^2 + sigma^2) dz`
/// in closed form. Even and strictly convex in `v`, even in `s`, zero at `v = 0`.
#[inline]
pub fn psi_unchecked(s: f64, v: f64) -> f64 {
    let sg2 = sigma2(s);
    let sg = sg2.sqrt();
    let x = v / sg;
    if x.abs() < 0.02 {
        // series in x = v/sigma; the direct form cancels to O(x^2).
        let x2 = x * x;
        sg * x2 * (0.25 + x2 * (-1.0 / 48.0 + x2 / 160.0))
    } else {
        0.5 * (v * (v / sg).asinh() - v.hypot(sg) + sg)
    }
}

pub fn psi(s: f64, v: f64) -> Result<f64> {
    check_spin(s)?;
    Ok(psi_unchecked(s, v))
}

/// `d Psi / d v = (1/2) asinh(v / sigma)`; odd in `v`, concave on `v >= 0`.
#[inline]
pub fn psi_v_unchecked(s: f64, v: f64) -> f64 {
    0.5 * (v / sigma2(s).sqrt()).asinh()
}

pub fn psi_v(s: f64, v: f64) -> Result<f64> {
    check_spin(s)?;
    Ok(psi_v_unchecked(s, v))
}

/// `d Psi / d s = s (sqrt(v^2 + sigma^2) - sigma) / (2 sigma^2)`.
#[inline]
pub fn psi_s_unchecked(s: f64, v: f64) -> f64 {
    let sg2 = sigma2(s);
    let sg = sg2.sqrt();
    s * (v.hypot(sg) - sg) / (2.0 * sg2)
}

/// Second derivatives `(Psi_ss, Psi_sv, Psi_vv)`, used by the Newton
/// polish of the one-dimensional layer problems.
#[inline]
pub fn psi_second_unchecked(s: f64, v: f64) -> (f64, f64, f64) {
    let sg2 = sigma2(s);
    let sg = sg2.sqrt();
    let f = v.hypot(sg);
    let ss = (f - sg) * (0.5 / sg2 + s * s / (2.0 * sg2 * sg * f) + s * s / (sg2 * sg2));
    let sv = v * s / (2.0 * sg2 * f);
    let vv = 0.5 / f;
    (ss, sv, vv)
}

/// Entropy term `Phi(s) = (1+s) ln(1+s) + (1-s) ln(1-s)`, extended
/// continuously to `|s| = 1` with value `2 ln 2`.
#[inline]
pub fn phi(s: f64) -> f64 {
    let xlogx = |x: f64| if x > 0.0 { x * x.ln() } else { 0.0 };
    xlogx(1.0 + s) + xlogx(1.0 - s)
}

/// `Phi'(s) = ln((1+s)/(1-s)) = 2 atanh(s)`; diverges at `|s| = 1` where the
/// sentinel `±inf` is returned.
#[inline]
pub fn phi_prime(s: f64) -> f64 {
    2.0 * s.atanh()
}

/// Checked variants used at validation boundaries; strict about `|s| >= 1`.
pub fn phi_checked(s: f64) -> Result<f64> {
    check_spin(s)?;
    Ok(phi(s))
}

pub fn phi_prime_checked(s: f64) -> Result<f64> {
    check_spin(s)?;
    Ok(phi_prime(s))
}

/// Optimal flip rates at state `s` and velocity `v`:
/// `(1 ± s) a_± = sqrt(v^2 + sigma^2) ∓ v`. Their product is 1 and they
/// reproduce `v` through the evolution constraint
/// `v = a_- (1-s)/2 - a_+ (1+s)/2`.
#[inline]
pub fn optimal_controls_unchecked(s: f64, v: f64) -> (f64, f64) {
    let sg2 = sigma2(s);
    let r = v.hypot(sg2.sqrt());
    // r - |v| is evaluated as sigma^2/(r + |v|) to avoid cancellation.
    let (num_plus, num_minus) = if v >= 0.0 {
        (sg2 / (r + v), r + v)
    } else {
        (r - v, sg2 / (r - v))
    };
    (num_plus / (1.0 + s), num_minus / (1.0 - s))
}

pub fn optimal_controls(s: f64, v: f64) -> Result<(f64, f64)> {
    check_spin(s)?;
    Ok(optimal_controls_unchecked(s, v))
}

/// Running control cost
/// `L(s, a±) = a_+(ln a_+ - 1)(1+s)/(2 beta) + a_-(ln a_- - 1)(1-s)/(2 beta)`.
#[inline]
pub fn lagrangian(s: f64, a_plus: f64, a_minus: f64, beta: f64) -> f64 {
    (a_plus * (a_plus.ln() - 1.0) * (1.0 + s) + a_minus * (a_minus.ln() - 1.0) * (1.0 - s))
        / (2.0 * beta)
}

/// Local cost `W(s, v)`: the Lagrangian at the optimal flip rates with the
/// interaction's local part and the equilibrium constant subtracted.
/// Computed directly through the controls; debug builds assert agreement
/// with the decomposed route to 1e-10 relative.
pub fn local_cost_w(s: f64, v: f64, params: &PotentialParams) -> Result<f64> {
    check_spin(s)?;
    let direct = local_cost_w_unchecked(s, v, params);
    debug_assert!({
        let dec = local_cost_w_decomposed(s, v, params);
        (direct - dec).abs() <= 1e-10 * (1.0 + direct.abs())
    });
    Ok(direct)
}

#[inline]
pub fn local_cost_w_unchecked(s: f64, v: f64, params: &PotentialParams) -> f64 {
    let (a_plus, a_minus) = optimal_controls_unchecked(s, v);
    lagrangian(s, a_plus, a_minus, params.beta) - 0.5 * params.j_hat * s * s
        - params.lambda_const()
}

/// The decomposition route
/// `W = W_beta(s) + v Phi'(s)/(2 beta) + 2 Psi(s, v)/beta`.
///
/// The kinetic coefficient is pinned by the identity itself (and by the
/// costate relation `dW/dv = Phi'(s)/(2 beta) + asinh(v/sigma)/beta`),
/// which the randomized identity test enforces at machine precision.
#[inline]
pub fn local_cost_w_decomposed(s: f64, v: f64, params: &PotentialParams) -> f64 {
    params.w_double_well(s)
        + v * phi_prime(s) / (2.0 * params.beta)
        + kinetic_penalty(s, v, params.beta)
}

/// Kinetic penalty of the running cost: the Legendre remainder of `W` in
/// the velocity, `2 Psi(s, v) / beta`. Nonnegative, strictly convex and
/// even in `v`, zero at `v = 0`.
#[inline]
pub fn kinetic_penalty(s: f64, v: f64, beta: f64) -> f64 {
    2.0 * psi_unchecked(s, v) / beta
}

/// Velocity derivative of the kinetic penalty, `asinh(v/sigma)/beta`.
#[inline]
pub fn kinetic_penalty_v(s: f64, v: f64, beta: f64) -> f64 {
    2.0 * psi_v_unchecked(s, v) / beta
}

/// Hamiltonian `H(s, p) = cosh(beta p)/beta - s sinh(beta p)/beta`,
/// evaluated in the factored exponential form so that states near `|s| = 1`
/// do not overflow spuriously for large `|beta p|`.
pub fn hamiltonian(s: f64, p: f64, params: &PotentialParams) -> f64 {
    let bp = params.beta * p;
    // cosh - s sinh = e^{bp}(1-s)/2 + e^{-bp}(1+s)/2, with each product
    // formed in log space so tiny prefactors suppress large exponentials
    let plus = bp + (-s).ln_1p();
    let minus = -bp + s.ln_1p();
    (plus.exp() + minus.exp()) / (2.0 * params.beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn params() -> PotentialParams {
        PotentialParams::new(1.0 / 0.9, 1.0).unwrap()
    }

    /// Adaptive Simpson quadrature of the defining integral of Psi;
    /// independent of the closed form used by the implementation.
    fn psi_quadrature(s: f64, v: f64) -> f64 {
        let sg2 = sigma2(s);
        let f = |z: f64| (v - z) / (z * z + sg2).sqrt();
        fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, eps: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let lm = 0.5 * (a + m);
            let rm = 0.5 * (m + b);
            let flm = f(lm);
            let frm = f(rm);
            let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if depth == 0 || (left + right - whole).abs() < 15.0 * eps {
                left + right + (left + right - whole) / 15.0
            } else {
                simpson(f, a, m, fa, flm, fm, eps / 2.0, depth - 1)
                    + simpson(f, m, b, fm, frm, fb, eps / 2.0, depth - 1)
            }
        }
        let (a, b) = (0.0, v);
        let m = 0.5 * (a + b);
        0.5 * simpson(&f, a, b, f(a), f(m), f(b), 1e-14, 40)
    }

    #[test]
    fn equilibrium_values_match_closed_forms() {
        let p = params();
        let eq = p.equilibrium();
        assert!((eq.s_star - 0.19f64.sqrt()).abs() < 1e-15);
        assert!((eq.lambda_const - (-0.905)).abs() < 1e-15);
        // cosh(beta p*) = beta j_hat and tanh(beta p*) = s_star
        assert!(((p.beta * eq.p_star).cosh() - p.beta * p.j_hat).abs() < 1e-14);
        assert!(((p.beta * eq.p_star).tanh() - eq.s_star).abs() < 1e-15);
        // potential vanishes at both minima
        assert!(p.w_double_well(eq.s_star).abs() < 1e-15);
        assert!(p.w_double_well(-eq.s_star).abs() < 1e-15);
    }

    #[test]
    fn double_well_at_zero_matches_minimized_lagrangian() {
        let p = params();
        assert!((double_well(0.0, &p).unwrap() - 0.005).abs() < 1e-15);
        // independent oracle: minimize L(s, a+, a-) - j s^2/2 - Lambda over
        // a+ > 0 with a- forced by the zero-velocity constraint.
        let s = 0.0;
        let constrained = |a_plus: f64| {
            let a_minus = a_plus * (1.0 + s) / (1.0 - s);
            lagrangian(s, a_plus, a_minus, p.beta) - 0.5 * p.j_hat * s * s - p.lambda_const()
        };
        // golden-section search on [1e-3, 10]
        let (mut lo, mut hi) = (1e-3f64, 10.0f64);
        let gr = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..200 {
            let c = hi - gr * (hi - lo);
            let d = lo + gr * (hi - lo);
            if constrained(c) < constrained(d) {
                hi = d;
            } else {
                lo = c;
            }
        }
        let min_val = constrained(0.5 * (lo + hi));
        assert!((min_val - 0.005).abs() < 1e-10, "minimized W(0,0) = {min_val}");
    }

    #[test]
    fn double_well_even_and_domain_checked() {
        let p = params();
        assert_eq!(
            double_well(0.3, &p).unwrap(),
            double_well(-0.3, &p).unwrap()
        );
        assert!(double_well(1.0, &p).is_err());
        assert!(double_well(-1.2, &p).is_err());
    }

    #[test]
    fn psi_matches_quadrature_oracle() {
        // frozen from the closed antiderivative, checked against quadrature
        let v = psi(0.0, 1.0).unwrap();
        assert!((v - 0.233_580_012_323_224_0).abs() < 1e-14);
        assert!((v - psi_quadrature(0.0, 1.0)).abs() < 1e-12);
        for &(s, w) in &[(0.5, 2.0), (-0.7, 0.3), (0.1, -4.0), (0.9, 1.5)] {
            let a = psi(s, w).unwrap();
            let b = psi_quadrature(s, w);
            assert!((a - b).abs() < 1e-11 * (1.0 + a.abs()), "psi({s},{w}): {a} vs {b}");
        }
        assert_eq!(psi(0.4, 0.0).unwrap(), 0.0);
        assert_eq!(psi(-0.8, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn psi_series_branch_is_continuous() {
        // straddle the series/direct threshold at |v/sigma| = 0.02
        for &x in &[0.019_999, 0.020_001, -0.019_999, -0.020_001] {
            let s = 0.3;
            let v = x * sigma2(s).sqrt();
            let a = psi_unchecked(s, v);
            let b = psi_quadrature(s, v);
            assert!((a - b).abs() < 1e-14 + 1e-10 * a.abs());
        }
    }

    #[test]
    fn psi_v_values_and_subadditivity() {
        assert_eq!(psi_v(0.2, 0.0).unwrap(), 0.0);
        assert!((psi_v(0.0, 1.0).unwrap() - 0.440_686_793_509_771_5).abs() < 1e-14);
        let f = |v: f64| psi_v(0.0, v).unwrap();
        assert!(f(3.0) <= f(1.0) + f(2.0));
    }

    #[test]
    fn psi_v_matches_centered_differences_at_second_order() {
        let (s, v) = (0.35, 1.4);
        let exact = psi_v_unchecked(s, v);
        let err_at = |h: f64| {
            let fd = (psi_unchecked(s, v + h) - psi_unchecked(s, v - h)) / (2.0 * h);
            (fd - exact).abs()
        };
        let (e1, e2) = (err_at(1e-3), err_at(5e-4));
        assert!(e1 < 1e-6);
        // halving h should shrink the error by about 4
        assert!(e2 < e1 / 2.5, "e1={e1}, e2={e2}");
    }

    #[test]
    fn psi_second_derivatives_match_finite_differences() {
        for &(s, v) in &[(0.3, 0.7), (-0.6, 1.9), (0.1, -2.5), (0.8, 0.3)] {
            let h = 1e-5;
            let (ss, sv, vv) = psi_second_unchecked(s, v);
            let fss = (psi_unchecked(s + h, v) - 2.0 * psi_unchecked(s, v) + psi_unchecked(s - h, v)) / (h * h);
            let fvv = (psi_unchecked(s, v + h) - 2.0 * psi_unchecked(s, v) + psi_unchecked(s, v - h)) / (h * h);
            let fsv = (psi_unchecked(s + h, v + h) - psi_unchecked(s + h, v - h)
                - psi_unchecked(s - h, v + h)
                + psi_unchecked(s - h, v - h))
                / (4.0 * h * h);
            assert!((ss - fss).abs() < 1e-4 * (1.0 + fss.abs()), "ss at ({s},{v})");
            assert!((sv - fsv).abs() < 1e-5 * (1.0 + fsv.abs()), "sv at ({s},{v})");
            assert!((vv - fvv).abs() < 1e-5 * (1.0 + fvv.abs()), "vv at ({s},{v})");
        }
    }

    #[test]
    fn phi_values() {
        assert_eq!(phi(0.0), 0.0);
        assert_eq!(phi_prime(0.0), 0.0);
        // frozen high-precision evaluation at s_star for beta = 1/0.9
        let s_star = params().s_star();
        assert!((phi(s_star) - 0.196_526_806_678_605_65).abs() < 1e-14);
        // continuous limit at the endpoints; derivative sentinel diverges
        assert!((phi(1.0) - 2.0 * 2f64.ln()).abs() < 1e-15);
        assert!(phi_prime(1.0).is_infinite());
        assert!(phi_checked(1.0).is_err());
        // (1/2 beta) Phi'(s_star) coincides with p_star
        let p = params();
        assert!((p.g_bound() - p.p_star()).abs() < 1e-14);
    }

    #[test]
    fn optimal_controls_examples() {
        let (ap, am) = optimal_controls(0.0, 0.0).unwrap();
        assert!((ap - 1.0).abs() < 1e-15 && (am - 1.0).abs() < 1e-15);
        let (ap, am) = optimal_controls(0.5, 0.0).unwrap();
        assert!((ap - (1f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!((am - 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn controls_reproduce_velocity_and_unit_product() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let s: f64 = rng.gen_range(-0.99..0.99);
            let v: f64 = rng.gen_range(-10.0..10.0);
            let (ap, am) = optimal_controls_unchecked(s, v);
            let recon = am * (1.0 - s) / 2.0 - ap * (1.0 + s) / 2.0;
            assert!((recon - v).abs() < 1e-12 * (1.0 + v.abs()), "s={s} v={v}");
            assert!((ap * am - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn local_cost_w_examples() {
        let p = params();
        let s_star = p.s_star();
        assert!(local_cost_w(s_star, 0.0, &p).unwrap().abs() < 1e-15);
        assert!(local_cost_w(-s_star, 0.0, &p).unwrap().abs() < 1e-15);
        assert!((local_cost_w(0.0, 0.0, &p).unwrap() - 0.005).abs() < 1e-15);
        let a = local_cost_w(0.2, 0.7, &p).unwrap();
        let b = local_cost_w_decomposed(0.2, 0.7, &p);
        assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()));
    }

    #[test]
    fn decomposition_identity_random_sample() {
        let p = params();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for _ in 0..10_000 {
            let s: f64 = rng.gen_range(-0.99..0.99);
            let v: f64 = rng.gen_range(-10.0..10.0);
            let direct = local_cost_w_unchecked(s, v, &p);
            let dec = local_cost_w_decomposed(s, v, &p);
            assert!(
                (direct - dec).abs() <= 1e-10 * (1.0 + direct.abs()),
                "identity failed at s={s}, v={v}: {direct} vs {dec}"
            );
        }
    }

    #[test]
    fn psi_envelope_bounds_with_frozen_constants() {
        // c1 |v| k(v/sigma) <= Psi <= c2 |v| k(v/sigma), k(r) = min(|r|, ln(2+|r|));
        // constants fitted once over (-0.99,0.99)x(-10,10) and frozen.
        const C1: f64 = 0.22;
        const C2: f64 = 0.47;
        let k = |r: f64| r.abs().min((2.0 + r.abs()).ln());
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10_000 {
            let s: f64 = rng.gen_range(-0.99..0.99);
            let v: f64 = rng.gen_range(-10.0..10.0);
            if v.abs() < 1e-8 {
                continue;
            }
            let envelope = v.abs() * k(v / sigma2(s).sqrt());
            let val = psi_unchecked(s, v);
            assert!(val >= C1 * envelope, "lower envelope failed at s={s} v={v}");
            assert!(val <= C2 * envelope, "upper envelope failed at s={s} v={v}");
        }
    }

    #[test]
    fn double_well_coercivity_near_minima() {
        // W_beta(s) >= c (s - s*)^2 for |s - s*| <= s*/2, fitted c frozen.
        const C: f64 = 0.06;
        let p = params();
        let s_star = p.s_star();
        for i in 0..=1000 {
            let ds = -0.5 * s_star + i as f64 / 1000.0 * s_star;
            for sign in [-1.0, 1.0] {
                let s = sign * s_star + ds;
                assert!(p.w_double_well(s) >= C * ds * ds - 1e-15, "s={s}");
            }
        }
    }

    #[test]
    fn hamiltonian_examples() {
        let p = params();
        assert!((hamiltonian(0.3, 0.0, &p) - 1.0 / p.beta).abs() < 1e-15);
        assert_eq!(hamiltonian(0.0, 0.7, &p), hamiltonian(0.0, -0.7, &p));
        // stationarity at the equilibrium pair
        let eq = p.equilibrium();
        let res = (p.beta * eq.p_star).sinh() - eq.s_star * (p.beta * eq.p_star).cosh();
        assert!(res.abs() < 1e-12);
        // log-space form stays finite where cosh alone would overflow
        let h = hamiltonian(1.0 - 1e-12, 650.0, &p);
        assert!(h.is_finite(), "H = {h}");
        assert!((p.beta * 650.0).cosh().is_infinite());
    }

    #[test]
    fn subcritical_parameters_have_single_equilibrium() {
        let p = PotentialParams::new(1.0 / 1.1, 1.0).unwrap();
        assert!(!p.supercritical());
        assert_eq!(p.s_star(), 0.0);
        assert_eq!(p.p_star(), 0.0);
    }

    proptest! {
        #[test]
        fn symmetries(s in -0.98f64..0.98, v in -8.0f64..8.0) {
            let p = params();
            prop_assert!((p.w_double_well(s) - p.w_double_well(-s)).abs() < 1e-13);
            prop_assert!((phi(s) - phi(-s)).abs() < 1e-13);
            prop_assert!((phi_prime(s) + phi_prime(-s)).abs() < 1e-13);
            // Psi even in each argument separately
            prop_assert!((psi_unchecked(s, v) - psi_unchecked(s, -v)).abs() < 1e-13);
            prop_assert!((psi_unchecked(s, v) - psi_unchecked(-s, v)).abs() < 1e-13);
            prop_assert!(psi_unchecked(s, v) >= 0.0);
        }
    }
}
