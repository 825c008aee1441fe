//! Closed-form scalar functions of slope vectors.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack applied to closed-interval domain checks so grid values computed as
/// `i * step` are not rejected at the endpoints.
const DOMAIN_SLACK: f64 = 1e-12;

/// A vector in the closed positive quadrant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeVector {
    pub x1: f64,
    pub x2: f64,
}

impl SlopeVector {
    pub fn new(x1: f64, x2: f64) -> Result<Self> {
        if !(x1 >= 0.0 && x2 >= 0.0 && x1.is_finite() && x2.is_finite()) {
            return Err(Error::input(format!(
                "slope vector ({x1}, {x2}) must be finite and nonnegative"
            )));
        }
        Ok(SlopeVector { x1, x2 })
    }

    pub fn norm(&self) -> f64 {
        self.x1.hypot(self.x2)
    }

    /// `arctan(x2 / x1)`, with `pi/2` on the `x2` axis (including the origin).
    pub fn theta(&self) -> f64 {
        if self.x1 == 0.0 {
            FRAC_PI_2
        } else {
            self.x2.atan2(self.x1)
        }
    }

    pub fn is_zero(&self) -> bool {
        self.x1 == 0.0 && self.x2 == 0.0
    }

    pub fn scale(&self, c: f64) -> SlopeVector {
        SlopeVector { x1: c * self.x1, x2: c * self.x2 }
    }

    /// `t * self + (1 - t) * other`.
    pub fn mix(&self, other: &SlopeVector, t: f64) -> SlopeVector {
        SlopeVector {
            x1: t * self.x1 + (1.0 - t) * other.x1,
            x2: t * self.x2 + (1.0 - t) * other.x2,
        }
    }
}

fn check_angle(gamma: f64, what: &str) -> Result<()> {
    if !(-DOMAIN_SLACK..=FRAC_PI_2 + DOMAIN_SLACK).contains(&gamma) {
        return Err(Error::input(format!("{what} = {gamma} outside [0, pi/2]")));
    }
    Ok(())
}

/// Unit vector `(cos gamma, sin gamma)`.
pub fn h_vec(gamma: f64) -> Result<SlopeVector> {
    check_angle(gamma, "gamma")?;
    let (s, c) = gamma.sin_cos();
    Ok(SlopeVector { x1: c.max(0.0), x2: s.max(0.0) })
}

fn check_tau_args(t: f64, beta: f64, theta: f64) -> Result<()> {
    check_angle(beta, "beta")?;
    check_angle(theta, "theta")?;
    if beta >= theta {
        return Err(Error::input(format!("need beta < theta, got beta = {beta}, theta = {theta}")));
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::input(format!("t = {t} outside [0, 1]")));
    }
    Ok(())
}

/// Angle of `t H_theta + (1 - t) H_beta`.
///
/// Evaluated relative to the nearer endpoint, so `tau(0) = beta` and `tau(1) = theta` exactly.
pub fn tau(t: f64, beta: f64, theta: f64) -> Result<f64> {
    check_tau_args(t, beta, theta)?;
    let (s, c) = (theta - beta).sin_cos();
    Ok(if t <= 0.5 {
        beta + (t * s).atan2(1.0 - t + t * c)
    } else {
        theta - ((1.0 - t) * s).atan2(t + (1.0 - t) * c)
    })
}

/// Derivative of [`tau`] in `t`, from the quotient rule applied to the arctangent form.
pub fn tau_prime(t: f64, beta: f64, theta: f64) -> Result<f64> {
    check_tau_args(t, beta, theta)?;
    let (sb, cb) = beta.sin_cos();
    let (st, ct) = theta.sin_cos();
    let num = t * st + (1.0 - t) * sb;
    let den = t * ct + (1.0 - t) * cb;
    let numerator = (st - sb) * den - num * (ct - cb);
    Ok(numerator / (num * num + den * den))
}

/// The `t` with `t H_{pi/2} + (1 - t) H_0` parallel to `H_theta`: `sin / (sin + cos)`.
pub fn mixing_parameter(theta: f64) -> Result<f64> {
    check_angle(theta, "theta")?;
    let theta = theta.clamp(0.0, FRAC_PI_2);
    if theta == FRAC_PI_2 {
        return Ok(1.0);
    }
    let (s, c) = theta.sin_cos();
    Ok(s / (s + c))
}

/// The half-angle tangent `sin / (1 + cos)`, kept for comparison with [`mixing_parameter`].
pub fn half_angle_parameter(theta: f64) -> Result<f64> {
    check_angle(theta, "theta")?;
    let (s, c) = theta.sin_cos();
    Ok(s / (1.0 + c))
}

/// `|| t H_{pi/2} + (1 - t) H_0 - (t^2 + (1 - t)^2)^{1/2} H_theta ||`.
pub fn mixing_residual(theta: f64, t: f64) -> Result<f64> {
    let h = h_vec(theta)?;
    let scale = (t * t + (1.0 - t) * (1.0 - t)).sqrt();
    Ok(((1.0 - t) - scale * h.x1).hypot(t - scale * h.x2))
}

/// `||z|| sin theta(z) - (t ||x|| sin theta(x) + (1 - t) ||y|| sin theta(y))` for `z = t x + (1 - t) y`.
pub fn second_coordinate_identity_residual(x: SlopeVector, y: SlopeVector, t: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::input(format!("t = {t} outside [0, 1]")));
    }
    let height = |v: &SlopeVector| v.norm() * v.theta().sin();
    let z = x.mix(&y, t);
    Ok(height(&z) - (t * height(&x) + (1.0 - t) * height(&y)))
}

/// Closed-form slope rate of the rank-`n` example on `[pi/4, pi/2]`:
/// `log(2(N-2)-1) sin theta - (log(2(N-2)-1) - log 3) cos theta`.
pub fn example51_formula(n: u32, theta: f64) -> Result<f64> {
    if n < 3 {
        return Err(Error::input(format!("N must be at least 3, got {n}")));
    }
    if !(FRAC_PI_4 - DOMAIN_SLACK..=FRAC_PI_2 + DOMAIN_SLACK).contains(&theta) {
        return Err(Error::domain(format!(
            "formula is stated on [pi/4, pi/2], got theta = {theta}"
        )));
    }
    let l = ((2 * (n - 2) - 1) as f64).ln();
    let (s, c) = theta.sin_cos();
    Ok(l * s - (l - 3f64.ln()) * c)
}

/// `tan theta` of an element with `n` letters `x^{+-1}` and `m` letters `y^{+-1}`: `(n + 2m) / (n + m)`.
pub fn example41_tan(n: u64, m: u64) -> Result<f64> {
    if n + m == 0 {
        return Err(Error::domain("slope of the identity element is undefined"));
    }
    Ok((n + 2 * m) as f64 / (n + m) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::SQRT_2;

    fn grid() -> Vec<f64> {
        (0..=90).map(|i| if i == 90 { FRAC_PI_2 } else { i as f64 * FRAC_PI_2 / 90.0 }).collect()
    }

    #[test]
    fn h_vec_examples() {
        assert_eq!(h_vec(0.0).unwrap(), SlopeVector { x1: 1.0, x2: 0.0 });
        let top = h_vec(FRAC_PI_2).unwrap();
        assert!(top.x1.abs() < 1e-16 && top.x2 == 1.0);
        let d = h_vec(FRAC_PI_4).unwrap();
        assert!((d.x1 - SQRT_2 / 2.0).abs() < 1e-15 && (d.norm() - 1.0).abs() < 1e-15);
        assert!(h_vec(-0.1).is_err() && h_vec(1.6).is_err());
    }

    #[test]
    fn h_vec_is_unit_with_matching_angle() {
        for g in grid() {
            let h = h_vec(g).unwrap();
            assert!((h.norm() - 1.0).abs() < 1e-15);
            assert!((h.theta() - g).abs() < 1e-15);
        }
    }

    #[test]
    fn theta_axis_conventions() {
        assert_eq!(SlopeVector::new(0.0, 3.0).unwrap().theta(), FRAC_PI_2);
        assert_eq!(SlopeVector::new(2.0, 0.0).unwrap().theta(), 0.0);
        assert!(SlopeVector::new(-1.0, 0.0).is_err());
    }

    #[test]
    fn tau_endpoints_are_exact() {
        assert_eq!(tau(0.0, 0.3, 1.2).unwrap(), 0.3);
        assert_eq!(tau(1.0, 0.3, 1.2).unwrap(), 1.2);
        assert!((tau(0.5, 0.0, FRAC_PI_2).unwrap() - FRAC_PI_4).abs() < 1e-15);
        assert!(tau(0.5, 1.2, 0.3).is_err());
        assert!(tau(1.5, 0.3, 1.2).is_err());
    }

    #[test]
    fn tau_matches_arctangent_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..500 {
            let beta = rng.gen_range(0.0..1.5);
            let theta = rng.gen_range(beta + 1e-3..FRAC_PI_2);
            let t: f64 = rng.gen_range(0.0..1.0);
            let num = t * theta.sin() + (1.0 - t) * beta.sin();
            let den = t * theta.cos() + (1.0 - t) * beta.cos();
            assert!((tau(t, beta, theta).unwrap() - num.atan2(den)).abs() < 1e-13);
        }
    }

    #[test]
    fn tau_prime_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = 1e-6;
        for _ in 0..50 {
            let beta = rng.gen_range(0.0..1.4);
            let theta = rng.gen_range(beta + 0.05..FRAC_PI_2);
            let t = rng.gen_range(h..1.0 - h);
            let fd = (tau(t + h, beta, theta).unwrap() - tau(t - h, beta, theta).unwrap()) / (2.0 * h);
            let d = tau_prime(t, beta, theta).unwrap();
            assert!(d > 0.0);
            assert!((d - fd).abs() < 1e-6, "t={t} beta={beta} theta={theta}: {d} vs {fd}");
        }
    }

    #[test]
    fn mixing_parameter_examples() {
        assert_eq!(mixing_parameter(0.0).unwrap(), 0.0);
        assert_eq!(mixing_parameter(FRAC_PI_2).unwrap(), 1.0);
        let third = std::f64::consts::FRAC_PI_3;
        let t = mixing_parameter(third).unwrap();
        assert!((t - 3f64.sqrt() / (3f64.sqrt() + 1.0)).abs() < 1e-15);
        assert!(mixing_residual(third, t).unwrap() < 1e-12);
    }

    #[test]
    fn mixing_residual_vanishes_on_grid() {
        for g in grid() {
            let t = mixing_parameter(g).unwrap();
            assert!(mixing_residual(g, t).unwrap() < 1e-12, "theta {g}");
        }
    }

    #[test]
    fn half_angle_parameter_does_not_satisfy_the_identity() {
        let third = std::f64::consts::FRAC_PI_3;
        let t = half_angle_parameter(third).unwrap();
        assert!((t - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert!(mixing_residual(third, t).unwrap() > 0.05);
    }

    #[test]
    fn second_coordinate_identity() {
        let e1 = SlopeVector::new(1.0, 0.0).unwrap();
        let e2 = SlopeVector::new(0.0, 1.0).unwrap();
        assert_eq!(second_coordinate_identity_residual(e1, e2, 0.5).unwrap(), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let x = SlopeVector::new(rng.gen_range(0.0..5.0), rng.gen_range(0.0..5.0)).unwrap();
            let y = SlopeVector::new(rng.gen_range(0.0..5.0), rng.gen_range(0.0..5.0)).unwrap();
            let t = rng.gen_range(0.0..=1.0);
            assert!(second_coordinate_identity_residual(x, y, t).unwrap().abs() < 1e-12);
            assert!(second_coordinate_identity_residual(x, x, t).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn example51_formula_values() {
        let l3 = 3f64.ln();
        assert!((example51_formula(4, FRAC_PI_2).unwrap() - l3).abs() < 1e-15);
        assert!((example51_formula(4, FRAC_PI_4).unwrap() - l3 / SQRT_2).abs() < 1e-15);
        assert!((example51_formula(5, FRAC_PI_2).unwrap() - 5f64.ln()).abs() < 1e-15);
        assert!(matches!(example51_formula(4, 0.5), Err(Error::Domain(_))));
        assert!(example51_formula(2, 1.0).is_err());
        for g in grid().into_iter().filter(|g| *g >= FRAC_PI_4 - 1e-12) {
            assert!((example51_formula(4, g).unwrap() - l3 * g.sin()).abs() < 1e-12);
        }
    }

    #[test]
    fn example41_tan_values() {
        assert_eq!(example41_tan(1, 0).unwrap(), 1.0);
        assert_eq!(example41_tan(0, 1).unwrap(), 2.0);
        assert_eq!(example41_tan(1, 1).unwrap(), 1.5);
        assert!(example41_tan(0, 0).is_err());
    }

    proptest! {
        #[test]
        fn tau_is_strictly_increasing(beta in 0.0f64..1.5, gap in 1e-3f64..1.5, t1 in 0.0f64..1.0, dt in 1e-6f64..1.0) {
            let theta = (beta + gap).min(FRAC_PI_2);
            prop_assume!(beta < theta);
            let t2 = (t1 + dt).min(1.0);
            prop_assume!(t1 < t2);
            prop_assert!(tau(t1, beta, theta).unwrap() < tau(t2, beta, theta).unwrap());
            prop_assert!(tau_prime(t1, beta, theta).unwrap() > 0.0);
        }

        #[test]
        fn example41_tan_stays_in_band(n in 0u64..1000, m in 0u64..1000) {
            prop_assume!(n + m > 0);
            let v = example41_tan(n, m).unwrap();
            prop_assert!((1.0..=2.0).contains(&v));
        }
    }
}
