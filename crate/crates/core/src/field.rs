//! External field θ: each component a finite sum of Gaussian bumps
//! `c·exp(−(s−μ)²/(2w²))`, with closed-form derivative, integrals and L²
//! norms.

use std::f64::consts::PI;

use crate::error::{invalid, Result};
use crate::specfun::{erf, erfc};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bump {
    pub c: f64,
    pub mu: f64,
    pub w: f64,
}

impl Bump {
    pub fn new(c: f64, mu: f64, w: f64) -> Result<Self> {
        if !(w > 0.0) || !c.is_finite() || !mu.is_finite() || !w.is_finite() {
            return Err(invalid(format!("bump needs finite c, mu and w > 0 (got c={c}, mu={mu}, w={w})")));
        }
        Ok(Self { c, mu, w })
    }

    fn eval(&self, s: f64) -> f64 {
        let u = (s - self.mu) / self.w;
        self.c * (-0.5 * u * u).exp()
    }
}

/// ∫_a^b exp(−(s−m)²/(2v)) ds for `a ≤ b`, infinite endpoints allowed.
/// Uses erfc on whichever side keeps the difference well conditioned.
fn gauss_mass(m: f64, v: f64, a: f64, b: f64) -> f64 {
    let sd = v.sqrt();
    let scale = sd * (PI / 2.0).sqrt();
    let u = (a - m) / (std::f64::consts::SQRT_2 * sd);
    let z = (b - m) / (std::f64::consts::SQRT_2 * sd);
    if u >= 0.0 {
        scale * (erfc(u) - erfc(z))
    } else if z <= 0.0 {
        scale * (erfc(-z) - erfc(-u))
    } else {
        scale * (erf(z) - erf(u))
    }
}

/// Product of two bumps as (amplitude, center, variance) of one Gaussian.
fn product(p: &Bump, q: &Bump) -> (f64, f64, f64) {
    let (vp, vq) = (p.w * p.w, q.w * q.w);
    let sum = vp + vq;
    let d = p.mu - q.mu;
    let amp = p.c * q.c * (-0.5 * d * d / sum).exp();
    let center = (p.mu * vq + q.mu * vp) / sum;
    (amp, center, vp * vq / sum)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction {
    components: Vec<Vec<Bump>>,
}

impl TestFunction {
    /// θ ≡ 0 in `dim` components.
    pub fn zero(dim: usize) -> Self {
        Self { components: vec![Vec::new(); dim] }
    }

    pub fn new(components: Vec<Vec<Bump>>) -> Result<Self> {
        if components.is_empty() {
            return Err(invalid("test function needs at least one component"));
        }
        for b in components.iter().flatten() {
            Bump::new(b.c, b.mu, b.w)?;
        }
        Ok(Self { components })
    }

    pub fn with_bump(mut self, component: usize, bump: Bump) -> Result<Self> {
        let dim = self.dim();
        let slot = self
            .components
            .get_mut(component)
            .ok_or_else(|| invalid(format!("component {component} out of range for dimension {dim}")))?;
        slot.push(Bump::new(bump.c, bump.mu, bump.w)?);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Vec<Bump>] {
        &self.components
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().flatten().all(|b| b.c == 0.0)
    }

    /// θ multiplied by `f`.
    pub fn scaled(&self, f: f64) -> Self {
        let components =
            self.components.iter().map(|bs| bs.iter().map(|b| Bump { c: b.c * f, ..*b }).collect()).collect();
        Self { components }
    }

    pub fn eval(&self, s: f64) -> Vec<f64> {
        self.components.iter().map(|bs| bs.iter().map(|b| b.eval(s)).sum()).collect()
    }

    pub fn deriv(&self, s: f64) -> Vec<f64> {
        self.components.iter().map(|bs| bs.iter().map(|b| -(s - b.mu) / (b.w * b.w) * b.eval(s)).sum()).collect()
    }

    /// ∫_a^b θ(s) ds per component; `a`, `b` may be infinite.
    pub fn integral(&self, a: f64, b: f64) -> Result<Vec<f64>> {
        if a > b || a.is_nan() || b.is_nan() {
            return Err(invalid(format!("integral needs a <= b, got [{a}, {b}]")));
        }
        Ok(self.integral_unchecked(a, b))
    }

    pub(crate) fn integral_unchecked(&self, a: f64, b: f64) -> Vec<f64> {
        self.components.iter().map(|bs| bs.iter().map(|p| p.c * gauss_mass(p.mu, p.w * p.w, a, b)).sum()).collect()
    }

    /// ∫_a^b |θ(s)|² ds summed over components.
    pub fn l2_norm_sq(&self, a: f64, b: f64) -> Result<f64> {
        if a > b || a.is_nan() || b.is_nan() {
            return Err(invalid(format!("norm needs a <= b, got [{a}, {b}]")));
        }
        Ok(self.pair_sum(|m, v| gauss_mass(m, v, a, b)))
    }

    /// |θ|₀² over the whole line.
    pub fn l2_norm_sq_full(&self) -> f64 {
        self.pair_sum(|_, v| (2.0 * PI * v).sqrt())
    }

    /// ∫ over the complement of `[a, b]`.
    pub fn l2_norm_sq_complement(&self, a: f64, b: f64) -> Result<f64> {
        if a > b || a.is_nan() || b.is_nan() {
            return Err(invalid(format!("norm needs a <= b, got [{a}, {b}]")));
        }
        Ok(self.pair_sum(|m, v| gauss_mass(m, v, f64::NEG_INFINITY, a) + gauss_mass(m, v, b, f64::INFINITY)))
    }

    fn pair_sum<F: Fn(f64, f64) -> f64>(&self, mass: F) -> f64 {
        let mut acc = crate::sum::KahanSum::new();
        for bs in &self.components {
            for p in bs {
                for q in bs {
                    let (amp, m, v) = product(p, q);
                    if amp != 0.0 {
                        acc.add(amp * mass(m, v));
                    }
                }
            }
        }
        acc.value()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bump(c: f64, mu: f64, w: f64) -> TestFunction {
        TestFunction::zero(1).with_bump(0, Bump::new(c, mu, w).unwrap()).unwrap()
    }

    #[test]
    fn eval_and_deriv_examples() {
        let z = TestFunction::zero(2);
        assert_eq!(z.eval(1.3), vec![0.0, 0.0]);
        let b = bump(1.0, 0.0, 1.0);
        assert_eq!(b.eval(0.0), vec![1.0]);
        assert_eq!(b.deriv(0.0)[0], 0.0);
        let b = bump(2.0, 1.0, 0.5);
        let v = 2.0 * (-0.5f64).exp();
        assert!((b.eval(1.5)[0] - v).abs() < 1e-15);
        assert!((b.eval(1.5)[0] - 1.21306).abs() < 1e-5);
        assert!((b.deriv(1.5)[0] + 2.0 * v).abs() < 1e-14);
    }

    #[test]
    fn integral_examples() {
        assert_eq!(TestFunction::zero(1).integral(0.0, 1.0).unwrap(), vec![0.0]);
        let (c, mu, w) = (1.7, 0.4, 0.3);
        let b = bump(c, mu, w);
        let full = b.integral(f64::NEG_INFINITY, f64::INFINITY).unwrap()[0];
        assert!((full - c * w * (2.0 * PI).sqrt()).abs() < 1e-14);
        let half = b.integral(f64::NEG_INFINITY, mu).unwrap()[0];
        assert!((half - full / 2.0).abs() < 1e-15);
        assert!(b.integral(1.0, 0.0).is_err());
    }

    #[test]
    fn norm_examples() {
        assert_eq!(TestFunction::zero(1).l2_norm_sq_full(), 0.0);
        assert!((bump(1.0, 0.0, 1.0).l2_norm_sq_full() - PI.sqrt()).abs() < 1e-15);
        let two = TestFunction::zero(1)
            .with_bump(0, Bump::new(1.0, 0.0, 1.0).unwrap())
            .unwrap()
            .with_bump(0, Bump::new(0.5, 100.0, 2.0).unwrap())
            .unwrap();
        let sep = bump(1.0, 0.0, 1.0).l2_norm_sq_full() + bump(0.5, 100.0, 2.0).l2_norm_sq_full();
        assert!((two.l2_norm_sq_full() - sep).abs() <= 1e-12 * sep);
    }

    #[test]
    fn norm_matches_quadrature() {
        let th = TestFunction::zero(1)
            .with_bump(0, Bump::new(0.8, 0.2, 0.3).unwrap())
            .unwrap()
            .with_bump(0, Bump::new(-0.5, 0.6, 0.15).unwrap())
            .unwrap();
        let exact = th.l2_norm_sq(-0.1, 0.9).unwrap();
        let q = crate::quad::integrate(|s| th.eval(s)[0].powi(2), -0.1, 0.9, 200, 10);
        assert!((exact - q).abs() < 1e-13);
        let iq = crate::quad::integrate(|s| th.eval(s)[0], -0.1, 0.9, 200, 10);
        assert!((th.integral(-0.1, 0.9).unwrap()[0] - iq).abs() < 1e-14);
    }
}
