//! The Morse potential `V(x) = g(e^{−2ax} − 2γe^{−ax})`: its measure, bound
//! states, Green function in Whittaker and ₁F₁ form, and the series
//! specialized to the two atoms. Natural units (ħ = mass = 1).

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::dyson::{advance, factorial, mean_and_stderr, mix_seed, QuadratureSpec, SCRAMBLINGS};
use crate::error::{invalid, Error, Result};
use crate::field::TestFunction;
use crate::freeprop::SpacetimePair;
use crate::measure::{Atom, ExponentialMeasure};
use crate::quad::{self, ScrambledHalton, SimplexRule};
use crate::specfun::{gamma, kummer_m_regularized, laguerre, ln_gamma, rgamma, sin_pi, whittaker_m, whittaker_w};
use crate::sum::ComplexKahanSum;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MorseParams {
    pub g: f64,
    pub gamma: f64,
    pub a: f64,
}

impl MorseParams {
    pub fn new(g: f64, gamma: f64, a: f64) -> Result<Self> {
        if !(a != 0.0) || !a.is_finite() {
            return Err(invalid("Morse parameter a must be nonzero and finite"));
        }
        if !(gamma > 0.0) || !gamma.is_finite() || !g.is_finite() {
            return Err(invalid("Morse parameters need finite g and gamma > 0"));
        }
        Ok(Self { g, gamma, a })
    }

    /// ω = 2√(2g)/|a|; NaN for g < 0.
    pub fn omega(&self) -> f64 {
        2.0 * (2.0 * self.g).sqrt() / self.a.abs()
    }

    pub fn potential(&self, x: f64) -> f64 {
        let e = (-self.a * x).exp();
        self.g * (e * e - 2.0 * self.gamma * e)
    }

    fn require_bound(&self) -> Result<()> {
        if !(self.g > 0.0) {
            return Err(Error::Unsupported(format!("closed forms need g > 0, got {}", self.g)));
        }
        Ok(())
    }
}

/// Atoms {(1, −2a), (−2γ, −a)}; g stays the external coupling.
pub fn morse_measure(p: &MorseParams) -> Result<ExponentialMeasure> {
    if p.a == 0.0 {
        return Err(invalid("Morse parameter a must be nonzero"));
    }
    ExponentialMeasure::new(1, vec![Atom::real(1.0, vec![-2.0 * p.a]), Atom::real(-2.0 * p.gamma, vec![-p.a])])
}

/// (x*, V(x*)) = (−ln γ / a, −gγ²).
pub fn potential_minimum(p: &MorseParams) -> (f64, f64) {
    (-p.gamma.ln() / p.a, -p.g * p.gamma * p.gamma)
}

/// E_n = −(a²/8)(γω − 2n − 1)² for every n with γω − 2n − 1 > 0, ascending.
pub fn morse_spectrum(p: &MorseParams) -> Result<Vec<f64>> {
    p.require_bound()?;
    let gw = p.gamma * p.omega();
    let mut out = Vec::new();
    let mut n = 0usize;
    loop {
        let s = gw - 2.0 * n as f64 - 1.0;
        if !(s > 0.0) {
            break;
        }
        out.push(-p.a * p.a / 8.0 * s * s);
        n += 1;
    }
    Ok(out)
}

/// Normalized bound state Ψ_n with `y = ω e^{−ax}`, `s = γω − 2n − 1`:
/// `Ψ_n = √(|a| s n!/Γ(γω−n)) ω^{s/2} e^{−(a/2)s x} e^{−y/2} L_n^{(s)}(y)`.
///
/// `norm_correction` is 1 when the closed-form constant gives unit norm to
/// within 1e-6; otherwise it is the rescaling that was applied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MorseEigenstate {
    pub n: usize,
    pub energy: f64,
    pub norm_correction: f64,
    params: MorseParams,
    ln_const: f64,
}

impl MorseEigenstate {
    pub fn new(n: usize, p: &MorseParams) -> Result<Self> {
        let spec = morse_spectrum(p)?;
        if n >= spec.len() {
            return Err(Error::OutOfRange(format!("bound state {n} requested, {} exist", spec.len())));
        }
        let w = p.omega();
        let gw = p.gamma * w;
        let s = gw - 2.0 * n as f64 - 1.0;
        let ln_gamma_real = |v: f64| -> Result<f64> { Ok(ln_gamma(Complex64::new(v, 0.0))?.re) };
        let ln_const = 0.5 * ((p.a.abs() * s).ln() + ln_gamma_real(n as f64 + 1.0)? - ln_gamma_real(gw - n as f64)?)
            + (gw / 2.0 - (2 * n + 1) as f64 / 2.0) * w.ln();
        let mut st = Self { n, energy: spec[n], norm_correction: 1.0, params: *p, ln_const };
        let norm = st.norm_sq();
        if (norm - 1.0).abs() > 1e-6 {
            st.norm_correction = 1.0 / norm.sqrt();
        }
        Ok(st)
    }

    pub fn params(&self) -> &MorseParams {
        &self.params
    }

    fn s(&self) -> f64 {
        self.params.gamma * self.params.omega() - 2.0 * self.n as f64 - 1.0
    }

    pub fn value(&self, x: f64) -> f64 {
        let p = &self.params;
        let w = p.omega();
        let s = self.s();
        let y = w * (-p.a * x).exp();
        let lg = self.ln_const - 0.5 * p.a * s * x - 0.5 * y;
        self.norm_correction * lg.exp() * laguerre(self.n, s, y)
    }

    /// ∫Ψ² dx, integrated in u = ln y where dx = du/|a|.
    pub fn norm_sq(&self) -> f64 {
        let p = &self.params;
        let w = p.omega();
        let s = self.s();
        let u_lo = (-50.0 * std::f64::consts::LN_10 / s).max(-700.0);
        let u_hi = (2.0 * (s + 2.0 * self.n as f64) + 80.0).ln();
        let f = |u: f64| {
            let x = (w.ln() - u) / p.a;
            self.value(x).powi(2) / p.a.abs()
        };
        quad::integrate(f, u_lo, u_hi, 400, 10)
    }
}

pub fn morse_eigenfunction(n: usize, x: f64, p: &MorseParams) -> Result<f64> {
    Ok(MorseEigenstate::new(n, p)?.value(x))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreenQuery {
    pub params: MorseParams,
    pub energy: Complex64,
}

impl GreenQuery {
    pub fn new(params: MorseParams, energy: Complex64) -> Result<Self> {
        params.require_bound()?;
        if energy.im == 0.0 && energy.re >= 0.0 {
            return Err(Error::Domain {
                form: "green",
                reason: format!("energy {energy} lies on the continuum [0, inf)"),
            });
        }
        if !energy.re.is_finite() || !energy.im.is_finite() {
            return Err(invalid("energy must be finite"));
        }
        Ok(Self { params, energy })
    }

    /// ν = 2√(−2E)/|a| on the principal branch.
    pub fn nu(&self) -> Complex64 {
        2.0 * (-2.0 * self.energy).sqrt() / self.params.a.abs()
    }
}

fn heaviside(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        0.0
    } else {
        0.5
    }
}

/// G(x′, x; E) = ⟨x′|(H − E)^{-1}|x⟩ from Whittaker functions.
pub fn green_whittaker(xp: f64, x: f64, q: &GreenQuery) -> Result<Complex64> {
    let p = &q.params;
    let w = p.omega();
    let nu = q.nu();
    let kappa = Complex64::new(p.gamma * w / 2.0, 0.0);
    let mu = nu / 2.0;
    let domain = |e: Error| match e {
        Error::Pole { .. } => {
            Error::Domain { form: "whittaker", reason: format!("energy {} is a bound state", q.energy) }
        }
        other => other,
    };
    let num = gamma((1.0 + nu - p.gamma * w) / 2.0).map_err(domain)?;
    let pref = num * rgamma(nu + 1.0) / (w * p.a.abs() / 2.0) * (p.a / 2.0 * (x + xp)).exp();
    let zp = Complex64::new(w * (-p.a * xp).exp(), 0.0);
    let z = Complex64::new(w * (-p.a * x).exp(), 0.0);
    let fwd = heaviside(p.a * (x - xp));
    let bwd = heaviside(p.a * (xp - x));
    let mut acc = Complex64::new(0.0, 0.0);
    if fwd != 0.0 {
        acc += fwd * whittaker_w(kappa, mu, zp)? * whittaker_m(kappa, mu, z)?;
    }
    if bwd != 0.0 {
        acc += bwd * whittaker_m(kappa, mu, zp)? * whittaker_w(kappa, mu, z)?;
    }
    Ok(pref * acc)
}

/// The same Green function written with regularized ₁F₁ functions.
pub fn green_kummer(xp: f64, x: f64, q: &GreenQuery) -> Result<Complex64> {
    let p = &q.params;
    let w = p.omega();
    let nu = q.nu();
    let gw = p.gamma * w;
    let dist = (nu - Complex64::new(nu.re.round(), 0.0)).norm();
    if dist < 1e-8 {
        return Err(Error::Domain { form: "kummer", reason: format!("nu = {nu} is within 1e-8 of an integer") });
    }
    let a_plus = (1.0 + nu - gw) / 2.0;
    let a_minus = (1.0 - nu - gw) / 2.0;
    let ratio = gamma(a_plus)
        .map_err(|_| Error::Domain { form: "kummer", reason: format!("energy {} is a bound state", q.energy) })?
        * rgamma(a_minus);
    let ep = (-p.a * xp).exp();
    let e = (-p.a * x).exp();
    let zp = Complex64::new(w * ep, 0.0);
    let z = Complex64::new(w * e, 0.0);
    let fp = |zz: Complex64| kummer_m_regularized(a_plus, 1.0 + nu, zz);
    let fm = |zz: Complex64| kummer_m_regularized(a_minus, 1.0 - nu, zz);
    let w_nu = Complex64::new(w, 0.0).powc(nu) * (-nu * p.a * (x + xp) / 2.0).exp();
    let pref = 2.0 * PI / (p.a.abs() * sin_pi(nu)) * (-w / 2.0 * (ep + e)).exp();
    let fwd = heaviside(p.a * (x - xp));
    let bwd = heaviside(p.a * (xp - x));
    let mut acc = Complex64::new(0.0, 0.0);
    if fwd != 0.0 {
        let bracket = -w_nu * ratio * fp(zp)? + (nu * p.a * (xp - x) / 2.0).exp() * fm(zp)?;
        acc += fwd * fp(z)? * bracket;
    }
    if bwd != 0.0 {
        let bracket = -w_nu * ratio * fp(z)? + (nu * p.a * (x - xp) / 2.0).exp() * fm(z)?;
        acc += bwd * fp(zp)? * bracket;
    }
    Ok(pref * acc)
}

/// |f(ω) − f(−ω)|/|f(ω)| for f(ω) = Γ((1+ν−γω)/2) ω^ν, principal powers.
/// For non-integer ν this stays away from 0 as ω → 0⁺.
pub fn nonanalyticity_ratio(nu: Complex64, gamma_param: f64, omegas: &[f64]) -> Result<Vec<(f64, f64)>> {
    omegas
        .iter()
        .map(|&w| {
            if !(w > 0.0) {
                return Err(invalid("omega samples must be positive"));
            }
            let f = |om: f64| -> Result<Complex64> {
                Ok(gamma((1.0 + nu - gamma_param * om) / 2.0)? * Complex64::new(om, 0.0).powc(nu))
            };
            let plus = f(w)?;
            let minus = f(-w)?;
            Ok((w, (plus - minus).norm() / plus.norm()))
        })
        .collect()
}

/// θ = 0 series query for the Morse potential, natural units.
#[derive(Debug, Clone, PartialEq)]
pub struct MorseSeriesQuery {
    pub params: MorseParams,
    pub pair: SpacetimePair,
    pub theta: TestFunction,
}

impl MorseSeriesQuery {
    pub fn new(params: MorseParams, x: f64, x0: f64, t: f64, t0: f64) -> Result<Self> {
        Ok(Self { params, pair: SpacetimePair::new(vec![x], vec![x0], t, t0)?, theta: TestFunction::zero(1) })
    }
}

/// n-th term of the series factor from the expansion over j ∈ {1, 2}ⁿ
/// with weights (−2γ)^{2n − Σj}.
pub fn morse_series_term(n: usize, q: &MorseSeriesQuery, quad: &QuadratureSpec) -> Result<Complex64> {
    quad.validate()?;
    if q.pair.dim() != 1 || q.theta.dim() != 1 {
        return Err(Error::Unsupported("Morse series is one-dimensional".into()));
    }
    if !q.theta.is_zero() {
        return Err(Error::Unsupported("Morse series expansion needs theta = 0".into()));
    }
    if n == 0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let p = &q.params;
    let (x, x0) = (q.pair.x[0], q.pair.x0[0]);
    let big_t = q.pair.duration();
    let a = p.a;
    let pre = (-I * p.g * big_t).powu(n as u32);
    let exponent = |j: &[f64], s: &[f64], sorted: bool| -> Complex64 {
        let mut lin = 0.0;
        let mut quad_form = 0.0;
        for l in 0..n {
            lin += j[l] * (s[l] * x + (1.0 - s[l]) * x0);
            for k in 0..n {
                let m = if sorted { s[l.min(k)] } else { s[l].min(s[k]) };
                quad_form += j[k] * j[l] * (s[l] * s[k] - m);
            }
        }
        Complex64::new(-a * lin, -0.5 * big_t * a * a * quad_form)
    };
    if n < quad.switch_order {
        let mut idx = vec![0usize; n];
        let mut j = vec![0.0; n];
        let mut acc = ComplexKahanSum::new();
        SimplexRule::new(n, quad.points).for_each(|s, wt| {
            idx.iter_mut().for_each(|v| *v = 0);
            loop {
                let mut ones = 0;
                for (jl, &i) in j.iter_mut().zip(&idx) {
                    *jl = if i == 0 { 1.0 } else { 2.0 };
                    ones += (i == 0) as i32;
                }
                let weight = (-2.0 * p.gamma).powi(ones);
                acc.add(wt * weight * exponent(&j, s, true).exp());
                if !advance(&mut idx, 2) {
                    break;
                }
            }
        });
        Ok(pre * acc.value())
    } else {
        if n > ScrambledHalton::MAX_DIM {
            return Err(invalid(format!("order {n} exceeds the sampler dimension limit")));
        }
        // Group j-tuples by the number of 2s: binomial multiplicity.
        let mut s = vec![0.0; n];
        let mut j = vec![0.0; n];
        let estimates: Vec<Complex64> = (0..SCRAMBLINGS)
            .map(|r| {
                let h = ScrambledHalton::new(n, mix_seed(quad.seed, n as u64, r as u64 + 2000));
                let mut acc = ComplexKahanSum::new();
                for i in 0..quad.samples as u64 {
                    h.point(i, &mut s);
                    for twos in 0..=n {
                        for (l, jl) in j.iter_mut().enumerate() {
                            *jl = if l < twos { 2.0 } else { 1.0 };
                        }
                        let mult = factorial(n) / (factorial(twos) * factorial(n - twos));
                        let weight = (-2.0 * p.gamma).powi((n - twos) as i32);
                        acc.add(mult * weight * exponent(&j, &s, false).exp());
                    }
                }
                acc.value() / quad.samples as f64
            })
            .collect();
        let (mean, _) = mean_and_stderr(&estimates);
        Ok(pre / factorial(n) * mean)
    }
}

/// `(1/n!)|t−t0|ⁿ(1+2|γ|)ⁿ e^{2n|a|(|x−x0|+|x0|)}`, a bound on the modulus of
/// the coefficient of gⁿ.
pub fn morse_coefficient_bound(n: usize, q: &MorseSeriesQuery) -> f64 {
    let p = &q.params;
    let (x, x0) = (q.pair.x[0], q.pair.x0[0]);
    let nf = n as f64;
    q.pair.duration().powi(n as i32) * (1.0 + 2.0 * p.gamma.abs()).powi(n as i32) / factorial(n)
        * (2.0 * nf * p.a.abs() * ((x - x0).abs() + x0.abs())).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bench() -> MorseParams {
        MorseParams::new(2.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn measure_and_minimum() {
        let p = MorseParams::new(0.3, 1.0, 1.0).unwrap();
        let m = morse_measure(&p).unwrap();
        assert_eq!(m.atoms()[0], Atom::real(1.0, vec![-2.0]));
        assert_eq!(m.atoms()[1], Atom::real(-2.0, vec![-1.0]));
        assert_eq!(p.g * m.potential(&[0.0]).unwrap().re, -0.3);
        let q = MorseParams::new(0.7, 1.6, 0.8).unwrap();
        let (xs, vs) = potential_minimum(&q);
        assert!((q.potential(xs) - vs).abs() < 1e-14);
        for dx in [-1e-3, 1e-3] {
            assert!(q.potential(xs + dx) > vs);
        }
        assert!(MorseParams::new(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn spectrum_examples() {
        assert_eq!(morse_spectrum(&bench()).unwrap(), vec![-1.125, -0.125]);
        assert_eq!(morse_spectrum(&MorseParams::new(0.5, 1.0, 1.0).unwrap()).unwrap(), vec![-0.125]);
        assert!(morse_spectrum(&MorseParams::new(0.1, 1.0, 1.0).unwrap()).unwrap().is_empty());
        assert!(matches!(morse_spectrum(&MorseParams::new(-1.0, 1.0, 1.0).unwrap()), Err(Error::Unsupported(_))));
    }

    #[test]
    fn eigenstates_are_normalized_by_the_closed_form() {
        for n in 0..2 {
            let st = MorseEigenstate::new(n, &bench()).unwrap();
            assert_eq!(st.norm_correction, 1.0);
            assert!((st.norm_sq() - 1.0).abs() < 1e-8);
        }
        assert!(matches!(MorseEigenstate::new(2, &bench()), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn ground_state_has_no_node() {
        let st = MorseEigenstate::new(0, &bench()).unwrap();
        let sign = st.value(0.0).signum();
        for i in 0..=90 {
            let x = -3.0 + 0.1 * i as f64;
            assert_eq!(st.value(x).signum(), sign);
        }
    }

    #[test]
    fn green_is_symmetric_and_rejects_continuum() {
        let q = GreenQuery::new(bench(), Complex64::new(-0.6, 0.0)).unwrap();
        let a = green_whittaker(0.3, -0.4, &q).unwrap();
        let b = green_whittaker(-0.4, 0.3, &q).unwrap();
        assert!((a - b).norm() < 1e-12 * a.norm());
        assert!(GreenQuery::new(bench(), Complex64::new(0.5, 0.0)).is_err());
    }

    #[test]
    fn green_forms_agree() {
        let q = GreenQuery::new(bench(), Complex64::new(-0.6, 0.1)).unwrap();
        for (xp, x) in [(0.3, -0.4), (1.2, 0.5), (-0.2, -0.2)] {
            let a = green_whittaker(xp, x, &q).unwrap();
            let b = green_kummer(xp, x, &q).unwrap();
            assert!((a - b).norm() < 1e-9 * a.norm(), "{a} vs {b}");
        }
    }

    #[test]
    fn coefficient_bound_holds() {
        let q = MorseSeriesQuery::new(MorseParams::new(1.0, 1.0, 1.0).unwrap(), 0.0, 0.0, 1.0, 0.0).unwrap();
        let quad = QuadratureSpec::default();
        for n in 0..5 {
            let t = morse_series_term(n, &q, &quad).unwrap();
            assert!(t.norm() <= morse_coefficient_bound(n, &q));
        }
    }
}
