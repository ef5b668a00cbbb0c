//! Free propagator, its T-transform with an external field, and the free
//! kernel in the presence of the homogeneous force `x·θ̇(t)`. Natural units
//! (ħ = mass = 1).

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{invalid, Result};
use crate::field::TestFunction;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, PartialEq)]
pub struct SpacetimePair {
    pub x: Vec<f64>,
    pub x0: Vec<f64>,
    pub t: f64,
    pub t0: f64,
}

impl SpacetimePair {
    pub fn new(x: Vec<f64>, x0: Vec<f64>, t: f64, t0: f64) -> Result<Self> {
        if x.is_empty() || x.len() != x0.len() {
            return Err(invalid(format!("x and x0 need equal positive length, got {} and {}", x.len(), x0.len())));
        }
        if !(t0 < t) || !t.is_finite() || !t0.is_finite() {
            return Err(invalid(format!("need t0 < t, got t0={t0}, t={t}")));
        }
        if x.iter().chain(&x0).any(|v| !v.is_finite()) {
            return Err(invalid("positions must be finite"));
        }
        Ok(Self { x, x0, t, t0 })
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn duration(&self) -> f64 {
        self.t - self.t0
    }

    pub fn displacement(&self) -> Vec<f64> {
        self.x.iter().zip(&self.x0).map(|(a, b)| a - b).collect()
    }

    pub(crate) fn check_dim(&self, d: usize, what: &str) -> Result<()> {
        if self.dim() != d {
            return Err(invalid(format!("{what} has dimension {d}, positions have {}", self.dim())));
        }
        Ok(())
    }
}

/// (2πiT)^{−d/2} on the principal branch, e^{−iπd/4}(2πT)^{−d/2}.
pub(crate) fn prefactor(d: usize, duration: f64) -> Complex64 {
    let phase = Complex64::from_polar(1.0, -PI * d as f64 / 4.0);
    phase * (2.0 * PI * duration).powf(-(d as f64) / 2.0)
}

/// prefactor · exp(−(1/(2iT))·v·v + extra), with the bilinear square.
pub(crate) fn gaussian_kernel(d: usize, duration: f64, v: &[Complex64], extra: Complex64) -> Complex64 {
    let sq: Complex64 = v.iter().map(|z| z * z).sum();
    prefactor(d, duration) * (I * sq / (2.0 * duration) + extra).exp()
}

/// K₀(x,t|x0,t0).
pub fn free_kernel(p: &SpacetimePair) -> Result<Complex64> {
    SpacetimePair::new(p.x.clone(), p.x0.clone(), p.t, p.t0)?;
    let v: Vec<Complex64> = p.displacement().into_iter().map(|r| Complex64::new(r, 0.0)).collect();
    Ok(gaussian_kernel(p.dim(), p.duration(), &v, Complex64::new(0.0, 0.0)))
}

/// T-transform of the free Feynman integrand at θ.
pub fn t_transform_free(theta: &TestFunction, p: &SpacetimePair) -> Result<Complex64> {
    SpacetimePair::new(p.x.clone(), p.x0.clone(), p.t, p.t0)?;
    p.check_dim(theta.dim(), "field")?;
    let int = theta.integral_unchecked(p.t0, p.t);
    let v: Vec<Complex64> = int.iter().zip(p.displacement()).map(|(a, r)| Complex64::new(a + r, 0.0)).collect();
    let extra = -I * 0.5 * theta.l2_norm_sq_full();
    Ok(gaussian_kernel(p.dim(), p.duration(), &v, extra))
}

/// exp((i/2)∫_{[t0,t]^c} θ²) · exp(i x0·θ(t0) − i x·θ(t)).
pub fn field_correction(theta: &TestFunction, p: &SpacetimePair) -> Result<Complex64> {
    p.check_dim(theta.dim(), "field")?;
    let comp = theta.l2_norm_sq_complement(p.t0, p.t)?;
    let dot = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(p, q)| p * q).sum() };
    let lin = dot(&p.x0, &theta.eval(p.t0)) - dot(&p.x, &theta.eval(p.t));
    Ok((I * (0.5 * comp + lin)).exp())
}

/// K₀^{(θ)}: the free kernel with external force `x·θ̇(t)`.
pub fn free_kernel_with_field(theta: &TestFunction, p: &SpacetimePair) -> Result<Complex64> {
    Ok(t_transform_free(theta, p)? * field_correction(theta, p)?)
}
