//! The imaginary-mass continuation `mass → i·mass` of the series. The
//! bridge exponent turns real and nonnegative, `−(ħ/2m)T·Q ≥ 0`, and for a
//! positive measure with support off the origin the terms grow without
//! bound. Terms are kept as (ln|term|, phase).

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::dyson::{advance, factorial, mix_seed, multisets, QuadratureSpec, SCRAMBLINGS};
use crate::error::{invalid, Result};
use crate::measure::{Atom, ExponentialMeasure};
use crate::quad::{ScrambledHalton, SimplexRule};
use crate::specfun::ln_gamma;

#[derive(Debug, Clone, PartialEq)]
pub struct HeatQuery {
    pub x: f64,
    pub x0: f64,
    pub t: f64,
    pub t0: f64,
    pub g: Complex64,
    pub hbar: f64,
    pub mass: f64,
    measure: ExponentialMeasure,
}

impl HeatQuery {
    /// Checks the conditions under which the series diverges: d = 1, all weights
    /// real and positive, at least one atom with α ≠ 0.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        x: f64,
        x0: f64,
        t: f64,
        t0: f64,
        g: Complex64,
        hbar: f64,
        mass: f64,
        measure: ExponentialMeasure,
    ) -> Result<Self> {
        let q = Self::new_unchecked(x, x0, t, t0, g, hbar, mass, measure)?;
        if q.measure.atoms().iter().all(|a| a.alpha[0] == 0.0) {
            return Err(invalid("heat continuation needs an atom with alpha != 0"));
        }
        Ok(q)
    }

    /// As [`HeatQuery::new`] without the α ≠ 0 requirement.
    #[allow(clippy::too_many_arguments)]
    pub fn new_unchecked(
        x: f64,
        x0: f64,
        t: f64,
        t0: f64,
        g: Complex64,
        hbar: f64,
        mass: f64,
        measure: ExponentialMeasure,
    ) -> Result<Self> {
        if measure.dim() != 1 {
            return Err(invalid("heat continuation is one-dimensional"));
        }
        if measure.is_empty() || measure.atoms().iter().any(|a| !(a.weight.re > 0.0) || a.weight.im != 0.0) {
            return Err(invalid("heat continuation needs a nonempty measure with positive real weights"));
        }
        if !(t0 < t) || !(hbar > 0.0) || !(mass > 0.0) {
            return Err(invalid("need t0 < t and positive hbar, mass"));
        }
        if ![x, x0, t, t0, g.re, g.im, hbar, mass].iter().all(|v| v.is_finite()) {
            return Err(invalid("heat query entries must be finite"));
        }
        Ok(Self { x, x0, t, t0, g, hbar, mass, measure })
    }

    pub fn measure(&self) -> &ExponentialMeasure {
        &self.measure
    }

    pub fn duration(&self) -> f64 {
        self.t - self.t0
    }

    /// Mirror image under x → −x (α → −α); heat terms are unchanged.
    pub fn reflected(&self) -> Self {
        let atoms = self.measure.atoms().iter().map(|a| Atom::new(a.weight, vec![-a.alpha[0]])).collect();
        Self {
            x: -self.x,
            x0: -self.x0,
            measure: ExponentialMeasure::new(1, atoms).expect("reflection keeps dimension"),
            ..self.clone()
        }
    }

    /// Orientation with support on α > 0, reflecting when needed.
    fn oriented(&self) -> Self {
        if self.measure.atoms().iter().any(|a| a.alpha[0] > 0.0) {
            self.clone()
        } else {
            self.reflected()
        }
    }

    /// Smallest positive atom location after orientation.
    pub fn default_a0(&self) -> Option<f64> {
        self.oriented().measure.atoms().iter().map(|a| a.alpha[0]).filter(|a| *a > 0.0).min_by(|a, b| a.total_cmp(b))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatTerm {
    pub n: usize,
    pub ln_abs: f64,
    pub phase: f64,
    /// Relative quadrature error estimate of |term|.
    pub rel_error: f64,
}

impl HeatTerm {
    pub fn abs(&self) -> f64 {
        self.ln_abs.exp()
    }

    pub fn log10_abs(&self) -> f64 {
        self.ln_abs / std::f64::consts::LN_10
    }

    pub fn value(&self) -> Complex64 {
        Complex64::from_polar(self.abs(), self.phase)
    }
}

/// Running log-sum-exp of positive addends given by their logarithms.
#[derive(Debug, Clone, Copy)]
struct LogSum {
    max: f64,
    sum: f64,
}

impl LogSum {
    fn new() -> Self {
        Self { max: f64::NEG_INFINITY, sum: 0.0 }
    }

    fn add(&mut self, l: f64) {
        if l == f64::NEG_INFINITY {
            return;
        }
        if l > self.max {
            self.sum = self.sum * (self.max - l).exp() + 1.0;
            self.max = l;
        } else {
            self.sum += (l - self.max).exp();
        }
    }

    fn value(&self) -> f64 {
        self.max + self.sum.ln()
    }
}

struct HeatAtoms {
    ln_w: Vec<f64>,
    alpha: Vec<f64>,
}

fn heat_atoms(hq: &HeatQuery) -> HeatAtoms {
    let atoms = hq.measure.canonical_atoms();
    HeatAtoms {
        ln_w: atoms.iter().map(|a| a.weight.re.ln()).collect(),
        alpha: atoms.iter().map(|a| a.alpha[0]).collect(),
    }
}

/// n-th term of the continued series.
pub fn heat_term(n: usize, hq: &HeatQuery, quad: &QuadratureSpec) -> Result<HeatTerm> {
    quad.validate()?;
    let base = Complex64::new(0.0, -1.0) * hq.g * hq.duration() / hq.hbar;
    if n == 0 {
        return Ok(HeatTerm { n, ln_abs: 0.0, phase: 0.0, rel_error: 0.0 });
    }
    let phase = (n as f64 * base.arg()).rem_euclid(2.0 * PI);
    if hq.g == Complex64::new(0.0, 0.0) {
        return Ok(HeatTerm { n, ln_abs: f64::NEG_INFINITY, phase: 0.0, rel_error: 0.0 });
    }
    let at = heat_atoms(hq);
    let k = at.alpha.len();
    let c = hq.hbar / (2.0 * hq.mass) * hq.duration();
    // exponent −c·Q + Σ α_j(σ_j x + (1−σ_j)x0) for a tuple at a node
    let exponent = |tuple: &[usize], s: &[f64], sorted: bool| -> f64 {
        let mut q = 0.0;
        let mut e = 0.0;
        for j in 0..n {
            let aj = at.alpha[tuple[j]];
            e += at.ln_w[tuple[j]] + aj * (s[j] * hq.x + (1.0 - s[j]) * hq.x0);
            q += aj * aj * (s[j] * s[j] - s[j]);
            for l in j + 1..n {
                let m = if sorted { s[j] } else { s[j].min(s[l]) };
                q += 2.0 * aj * at.alpha[tuple[l]] * (s[j] * s[l] - m);
            }
        }
        e - c * q
    };
    let ln_base = n as f64 * base.norm().ln();
    if n < quad.switch_order {
        let integrate = |points: usize| -> f64 {
            let mut acc = LogSum::new();
            let mut tuple = vec![0usize; n];
            SimplexRule::new(n, points).for_each(|s, w| {
                tuple.iter_mut().for_each(|v| *v = 0);
                loop {
                    acc.add(w.ln() + exponent(&tuple, s, true));
                    if !advance(&mut tuple, k) {
                        break;
                    }
                }
            });
            acc.value()
        };
        let fine = integrate(quad.points);
        let coarse = integrate((quad.points / 2).max(2));
        Ok(HeatTerm { n, ln_abs: ln_base + fine, phase, rel_error: (coarse - fine).exp_m1().abs() })
    } else {
        if n > ScrambledHalton::MAX_DIM {
            return Err(invalid(format!("order {n} exceeds the sampler dimension limit")));
        }
        let sets = multisets(k, n);
        let mut s = vec![0.0; n];
        let estimates: Vec<f64> = (0..SCRAMBLINGS)
            .map(|r| {
                let h = ScrambledHalton::new(n, mix_seed(quad.seed, n as u64, r as u64 + 1000));
                let mut acc = LogSum::new();
                for i in 0..quad.samples as u64 {
                    h.point(i, &mut s);
                    for (tuple, count) in &sets {
                        acc.add(count.ln() + exponent(tuple, &s, false));
                    }
                }
                acc.value() - (quad.samples as f64).ln()
            })
            .collect();
        let top = estimates.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let rel: Vec<f64> = estimates.iter().map(|l| (l - top).exp()).collect();
        let r = rel.len() as f64;
        let mean = rel.iter().sum::<f64>() / r;
        let var = rel.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (r - 1.0);
        let ln_mean = top + mean.ln();
        Ok(HeatTerm { n, ln_abs: ln_base - factorial(n).ln() + ln_mean, phase, rel_error: (var / r).sqrt() / mean })
    }
}

fn lower_bound_parts(hq: &HeatQuery, a0: f64) -> Result<(f64, f64)> {
    if !(a0 > 0.0) {
        return Err(invalid("a0 must be positive"));
    }
    let o = hq.oriented();
    let spread = o.x0.abs() + o.x.abs();
    let i_a0: f64 = o
        .measure
        .atoms()
        .iter()
        .filter(|a| a.alpha[0] >= a0)
        .map(|a| a.weight.re * (-a.alpha[0].abs() * spread).exp())
        .sum();
    if !(i_a0 > 0.0) {
        return Err(invalid(format!("measure has no mass on [{a0}, inf)")));
    }
    let base = hq.g.norm() * hq.duration() * i_a0 / (16.0 * hq.hbar);
    let quad = hq.hbar / (32.0 * hq.mass) * hq.duration() * a0 * a0;
    Ok((base, quad))
}

/// ln of [`divergence_lower_bound`].
pub fn ln_divergence_lower_bound(n: usize, hq: &HeatQuery, a0: f64) -> Result<f64> {
    let (base, c) = lower_bound_parts(hq, a0)?;
    let nf = n as f64;
    let ln_fact = ln_gamma(Complex64::new(nf + 1.0, 0.0))?.re;
    let ln_pow = if n == 0 { 0.0 } else { nf * base.ln() };
    Ok(ln_pow - ln_fact + c * nf * nf)
}

/// `(1/n!) (|g|T I(a0)/(16ħ))ⁿ exp((ħ/(32m)) T a0² n²)` with
/// `I(a0) = Σ_{α_k ≥ a0} w_k e^{−|α_k|(|x0|+|x|)}`, a lower bound for
/// |heat_term(n)|.
pub fn divergence_lower_bound(n: usize, hq: &HeatQuery, a0: f64) -> Result<f64> {
    Ok(ln_divergence_lower_bound(n, hq, a0)?.exp())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivergenceCertificate {
    /// First n from which ln L(n+1) − ln L(n) > 0.
    pub threshold: usize,
    /// Positivity of the log-ratio has been checked on [threshold, checked_up_to].
    pub checked_up_to: usize,
}

/// Order beyond which the closed-form lower bound increases. The log-ratio
/// `r(n) = ln(base) − ln(n+1) + c(2n+1)` is convex in n, so once positive
/// past its minimum it stays positive; this is also checked numerically up to
/// `max(check_to, threshold)`.
pub fn divergence_threshold(hq: &HeatQuery, a0: f64, check_to: usize) -> Result<DivergenceCertificate> {
    let (base, c) = lower_bound_parts(hq, a0)?;
    let r = |n: f64| base.ln() - (n + 1.0).ln() + c * (2.0 * n + 1.0);
    let argmin = (1.0 / (2.0 * c) - 1.0).max(0.0);
    let mut lo = argmin.floor();
    let mut hi = lo.max(1.0);
    while r(hi) <= 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e15 {
            return Err(invalid("lower bound does not grow within 1e15 orders"));
        }
    }
    // first integer n ≥ argmin with r(n) > 0
    let mut lo = lo as u64;
    let mut hi = hi as u64;
    if r(lo as f64) > 0.0 {
        hi = lo;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if r(mid as f64) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let threshold = hi as usize;
    let end = check_to.max(threshold);
    for n in threshold..=end {
        let exact = ln_divergence_lower_bound(n + 1, hq, a0)? - ln_divergence_lower_bound(n, hq, a0)?;
        if !(exact > 0.0) {
            return Err(invalid(format!("log-ratio not positive at n = {n}")));
        }
    }
    Ok(DivergenceCertificate { threshold, checked_up_to: end })
}
