//! Perturbation series for the propagator with potential `g·V` and
//! external force `x·θ̇(t)`:
//!
//! ```text
//! K = K₀^{(θ)} · Σ_n ((−igT/ħ)ⁿ/n!) Σ_tuples Π w ∫_{[0,1]ⁿ} exp{−(i/2)(ħ/mass) T Q(α,σ) + Σ_j α_j·b_j(σ_j)} dσ
//! ```
//!
//! with `T = t − t0`, the bridge form `Q = Σ α_j·α_k (σ_jσ_k − σ_j∧σ_k)` and
//! `b_j` the straight line from `x0` to `x` shifted by the field integrals.
//!
//! Everything is evaluated in natural units: positions are divided by
//! `λ = √(ħ/mass)`, α multiplied by λ and θ divided by `√(ħ·mass)`; the
//! kernel picks up the density factor `λ^{−d}`.
//!
//! `σ ↦ σ_j∧σ_k` has a kink on the diagonals of the cube, so the tensor rule
//! integrates over the ordered simplex (summing all ordered atom tuples);
//! high orders use scrambled Halton points on the cube, summed over
//! multisets of atoms.

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::field::TestFunction;
use crate::freeprop::{self, SpacetimePair};
use crate::measure::{ExponentialMeasure, TimeDependentMeasure, TimeProfile};
use crate::quad::{ScrambledHalton, SimplexRule};
use crate::specfun::ln_gamma;
use crate::sum::{ComplexKahanSum, KahanSum};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Hard cap on the truncation order.
pub const N_MAX: usize = 30;

/// Independent scramblings used for the Monte Carlo error estimate.
pub const SCRAMBLINGS: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub enum Potential {
    Static(ExponentialMeasure),
    TimeDependent(TimeDependentMeasure),
}

impl Potential {
    pub fn dim(&self) -> usize {
        match self {
            Self::Static(m) => m.dim(),
            Self::TimeDependent(m) => m.dim(),
        }
    }

    /// V(x, τ).
    pub fn eval(&self, x: &[f64], tau: f64) -> Result<Complex64> {
        match self {
            Self::Static(m) => m.potential(x),
            Self::TimeDependent(m) => m.potential(x, tau),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropagatorQuery {
    pub pair: SpacetimePair,
    pub g: Complex64,
    pub hbar: f64,
    pub mass: f64,
    pub theta: TestFunction,
    pub potential: Potential,
}

impl PropagatorQuery {
    /// Query with ħ = mass = 1 and no external field.
    pub fn new(pair: SpacetimePair, g: f64, measure: ExponentialMeasure) -> Self {
        let d = pair.dim();
        Self {
            pair,
            g: Complex64::new(g, 0.0),
            hbar: 1.0,
            mass: 1.0,
            theta: TestFunction::zero(d),
            potential: Potential::Static(measure),
        }
    }

    pub fn with_theta(mut self, theta: TestFunction) -> Self {
        self.theta = theta;
        self
    }

    pub fn with_units(mut self, hbar: f64, mass: f64) -> Self {
        self.hbar = hbar;
        self.mass = mass;
        self
    }

    pub fn with_g(mut self, g: Complex64) -> Self {
        self.g = g;
        self
    }

    pub fn with_pair(mut self, pair: SpacetimePair) -> Self {
        self.pair = pair;
        self
    }

    pub fn with_potential(mut self, potential: Potential) -> Self {
        self.potential = potential;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.pair;
        SpacetimePair::new(p.x.clone(), p.x0.clone(), p.t, p.t0)?;
        if !(self.hbar > 0.0) || !(self.mass > 0.0) || !self.hbar.is_finite() || !self.mass.is_finite() {
            return Err(invalid("hbar and mass must be positive and finite"));
        }
        if !self.g.re.is_finite() || !self.g.im.is_finite() {
            return Err(invalid("coupling must be finite"));
        }
        p.check_dim(self.theta.dim(), "field")?;
        p.check_dim(self.potential.dim(), "measure")?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadratureSpec {
    /// Gauss–Legendre points per axis for orders below `switch_order`.
    pub points: usize,
    /// Halton points per scrambling for orders at or above `switch_order`.
    pub samples: usize,
    pub seed: u64,
    pub switch_order: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { points: 32, samples: 4096, seed: 0x5eed_2024, switch_order: 5 }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.points < 2 {
            return Err(invalid("quadrature needs at least 2 points per axis"));
        }
        if self.samples < 1000 {
            return Err(invalid("low-discrepancy sampling needs at least 1000 samples"));
        }
        if self.switch_order < 1 {
            return Err(invalid("switch order must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesResult {
    pub value: Complex64,
    /// Contribution of each order to `value`, K₀^{(θ)} included.
    pub terms: Vec<Complex64>,
    pub order_used: usize,
    /// Bound on |value − exact| from the truncation, absolute.
    pub tail_bound: f64,
    /// Quadrature error estimate for `value`, absolute.
    pub quad_error_estimate: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct PAtom {
    pub weight: Complex64,
    pub alpha: Vec<f64>,
    pub component: usize,
}

/// A query rescaled to natural units with canonically ordered atoms.
#[derive(Debug, Clone)]
pub(crate) struct Prepared {
    pub y: Vec<f64>,
    pub y0: Vec<f64>,
    pub t: f64,
    pub t0: f64,
    pub big_t: f64,
    pub coupling: Complex64,
    pub theta: TestFunction,
    pub atoms: Vec<PAtom>,
    pub profiles: Option<Vec<TimeProfile>>,
    pub gram: Vec<f64>,
    /// α_k·y and α_k·y0 per atom.
    pub ay: Vec<f64>,
    pub ay0: Vec<f64>,
    pub density: f64,
}

impl Prepared {
    pub fn new(q: &PropagatorQuery) -> Result<Self> {
        q.validate()?;
        let lambda = (q.hbar / q.mass).sqrt();
        let d = q.pair.dim();
        let comps: Vec<(ExponentialMeasure, Option<TimeProfile>)> = match &q.potential {
            Potential::Static(m) => vec![(m.clone(), None)],
            Potential::TimeDependent(td) => td.components().iter().map(|(m, p)| (m.clone(), Some(p.clone()))).collect(),
        };
        let mut atoms = Vec::new();
        for (c, (m, _)) in comps.iter().enumerate() {
            for a in m.canonical_atoms() {
                atoms.push(PAtom {
                    weight: a.weight,
                    alpha: a.alpha.iter().map(|v| v * lambda).collect(),
                    component: c,
                });
            }
        }
        let profiles = match &q.potential {
            Potential::Static(_) => None,
            Potential::TimeDependent(_) => Some(comps.into_iter().map(|(_, p)| p.unwrap()).collect()),
        };
        let k = atoms.len();
        let mut gram = vec![0.0; k * k];
        for i in 0..k {
            for j in 0..k {
                gram[i * k + j] = dot(&atoms[i].alpha, &atoms[j].alpha);
            }
        }
        let y: Vec<f64> = q.pair.x.iter().map(|v| v / lambda).collect();
        let y0: Vec<f64> = q.pair.x0.iter().map(|v| v / lambda).collect();
        let ay = atoms.iter().map(|a| dot(&a.alpha, &y)).collect();
        let ay0 = atoms.iter().map(|a| dot(&a.alpha, &y0)).collect();
        Ok(Self {
            y,
            y0,
            t: q.pair.t,
            t0: q.pair.t0,
            big_t: q.pair.duration(),
            coupling: q.g / q.hbar,
            theta: q.theta.scaled(1.0 / (q.hbar * q.mass).sqrt()),
            atoms,
            profiles,
            gram,
            ay,
            ay0,
            density: lambda.powi(-(d as i32)),
        })
    }

    pub fn pair(&self) -> SpacetimePair {
        SpacetimePair { x: self.y.clone(), x0: self.y0.clone(), t: self.t, t0: self.t0 }
    }

    /// λ^{−d} K₀^{(θ)} in physical units.
    pub fn kernel(&self) -> Result<Complex64> {
        Ok(freeprop::free_kernel_with_field(&self.theta, &self.pair())? * self.density)
    }

    fn rho(&self, component: usize, tau: f64) -> f64 {
        match &self.profiles {
            None => 1.0,
            Some(p) => p[component].eval(tau),
        }
    }

    /// Per-position tables at node `s`: `lin[j*K+k] = α_k·b_j` and
    /// `wr[j*K+k] = w_k ρ_k(τ_j)`.
    fn tables(&self, s: &[f64], lin: &mut [f64], wr: &mut [Complex64]) {
        let k = self.atoms.len();
        let zero_field = self.theta.is_zero();
        for (j, &sj) in s.iter().enumerate() {
            let tau = self.t0 + self.big_t * sj;
            for (a, atom) in self.atoms.iter().enumerate() {
                lin[j * k + a] = sj * self.ay[a] + (1.0 - sj) * self.ay0[a];
                wr[j * k + a] = atom.weight * self.rho(atom.component, tau);
            }
            if !zero_field {
                let j1 = self.theta.integral_unchecked(tau, self.t);
                let j0 = self.theta.integral_unchecked(self.t0, tau);
                for (a, atom) in self.atoms.iter().enumerate() {
                    let shift: Vec<f64> = j1.iter().zip(&j0).map(|(u, v)| sj * u - (1.0 - sj) * v).collect();
                    lin[j * k + a] += dot(&atom.alpha, &shift);
                }
            }
        }
    }

    /// Σ over all ordered tuples of ∫ over the ordered simplex (tensor rule).
    fn simplex_integral(&self, n: usize, points: usize) -> Complex64 {
        let k = self.atoms.len();
        let rule = SimplexRule::new(n, points);
        let mut lin = vec![0.0; n * k];
        let mut wr = vec![Complex64::new(0.0, 0.0); n * k];
        let mut coef = vec![0.0; n * n];
        let mut tuple = vec![0usize; n];
        let mut acc = ComplexKahanSum::new();
        let half_t = 0.5 * self.big_t;
        rule.for_each(|s, w| {
            self.tables(s, &mut lin, &mut wr);
            // s is ascending, so σ_j∧σ_l = σ_min(j,l).
            for j in 0..n {
                for l in j..n {
                    coef[j * n + l] = s[j] * s[l] - s[j];
                }
            }
            tuple.iter_mut().for_each(|v| *v = 0);
            loop {
                let mut q = 0.0;
                let mut e = 0.0;
                let mut amp = Complex64::new(w, 0.0);
                for j in 0..n {
                    let kj = tuple[j];
                    e += lin[j * k + kj];
                    amp *= wr[j * k + kj];
                    q += self.gram[kj * k + kj] * coef[j * n + j];
                    for l in j + 1..n {
                        q += 2.0 * self.gram[kj * k + tuple[l]] * coef[j * n + l];
                    }
                }
                acc.add(amp * Complex64::new(e, -half_t * q).exp());
                if !advance(&mut tuple, k) {
                    break;
                }
            }
        });
        acc.value()
    }

    /// Cube estimate summed over multisets; returns one estimate per
    /// scrambling of Σ_tuples ∫_cube.
    fn cube_estimates(&self, n: usize, samples: usize, seed: u64) -> Vec<Complex64> {
        let k = self.atoms.len();
        let sets = multisets(k, n);
        // Coordinate j of a tuple entry with atom a is drawn with density
        // ∝ exp(c_a σ), c_a = α_a·(y − y0), which flattens the e^{α·b} weight.
        let rates: Vec<f64> = self.ay.iter().zip(&self.ay0).map(|(u, v)| u - v).collect();
        let mut u = vec![0.0; n];
        let mut sig = vec![0.0; n * k];
        let mut ln_jac = vec![0.0; n * k];
        let mut s = vec![0.0; n];
        let mut lin = vec![0.0; n * k];
        let mut wr = vec![Complex64::new(0.0, 0.0); n * k];
        let mut lin_a = vec![0.0; n * k];
        let mut wr_a = vec![Complex64::new(0.0, 0.0); n * k];
        let half_t = 0.5 * self.big_t;
        (0..SCRAMBLINGS)
            .map(|r| {
                let h = ScrambledHalton::new(n, mix_seed(seed, n as u64, r as u64));
                let mut acc = ComplexKahanSum::new();
                for i in 0..samples as u64 {
                    h.point(i, &mut u);
                    for (a, &c) in rates.iter().enumerate() {
                        for j in 0..n {
                            let (x, lj) = exp_warp(c, u[j]);
                            s[j] = x;
                            sig[j * k + a] = x;
                            ln_jac[j * k + a] = lj;
                        }
                        self.tables(&s, &mut lin_a, &mut wr_a);
                        for j in 0..n {
                            lin[j * k + a] = lin_a[j * k + a];
                            wr[j * k + a] = wr_a[j * k + a];
                        }
                    }
                    for (tuple, count) in &sets {
                        let mut q = 0.0;
                        let mut e = 0.0;
                        let mut amp = Complex64::new(*count, 0.0);
                        for j in 0..n {
                            let kj = tuple[j];
                            let sj = sig[j * k + kj];
                            e += lin[j * k + kj] + ln_jac[j * k + kj];
                            amp *= wr[j * k + kj];
                            q += self.gram[kj * k + kj] * (sj * sj - sj);
                            for l in j + 1..n {
                                let sl = sig[l * k + tuple[l]];
                                q += 2.0 * self.gram[kj * k + tuple[l]] * (sj * sl - sj.min(sl));
                            }
                        }
                        acc.add(amp * Complex64::new(e, -half_t * q).exp());
                    }
                }
                acc.value() / samples as f64
            })
            .collect()
    }

    /// Order-n series term (K₀ excluded) and its quadrature error estimate.
    pub fn order_term(&self, n: usize, quad: &QuadratureSpec) -> (Complex64, f64) {
        if n == 0 {
            return (Complex64::new(1.0, 0.0), 0.0);
        }
        if self.atoms.is_empty() {
            return (Complex64::new(0.0, 0.0), 0.0);
        }
        let base = -I * self.coupling * self.big_t;
        let pre = base.powu(n as u32);
        if n < quad.switch_order {
            let fine = self.simplex_integral(n, quad.points);
            let coarse = self.simplex_integral(n, (quad.points / 2).max(2));
            (pre * fine, pre.norm() * (fine - coarse).norm())
        } else {
            let est = self.cube_estimates(n, quad.samples, quad.seed);
            let (mean, stderr) = mean_and_stderr(&est);
            let scale = pre / factorial(n);
            (scale * mean, scale.norm() * stderr)
        }
    }

    /// Per-atom sharp factors |w| sup|ρ| exp(max(α·y, α·y0) + √T|θ|₀|α|).
    fn sharp_mass(&self) -> f64 {
        let th = self.theta.l2_norm_sq_full().sqrt();
        let mut acc = KahanSum::new();
        for a in &self.atoms {
            let norm = dot(&a.alpha, &a.alpha).sqrt();
            let e = dot(&a.alpha, &self.y).max(dot(&a.alpha, &self.y0)) + self.big_t.sqrt() * th * norm;
            acc.add(a.weight.norm() * self.rho_sup(a.component) * e.exp());
        }
        self.coupling.norm() * self.big_t * acc.value()
    }

    fn rho_sup(&self, component: usize) -> f64 {
        match &self.profiles {
            None => 1.0,
            Some(p) => p[component].sup_abs(self.t0, self.t),
        }
    }

    fn moment_bound(&self) -> (f64, f64) {
        let th = self.theta.l2_norm_sq_full().sqrt();
        let disp = dot_diff_norm(&self.y, &self.y0);
        let y0n = dot(&self.y0, &self.y0).sqrt();
        let st = self.big_t.sqrt();
        let c = disp + y0n + 2.0 * st * th;
        let mut acc = KahanSum::new();
        for a in &self.atoms {
            let norm = dot(&a.alpha, &a.alpha).sqrt();
            acc.add(a.weight.norm() * self.rho_sup(a.component) * (c * norm).exp());
        }
        let m = self.coupling.norm() * self.big_t * acc.value();
        let p = (th * th + disp * th / st).exp();
        (m, p)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

fn dot_diff_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Odometer over `{0..k}^n`; false once it wraps.
pub(crate) fn advance(tuple: &mut [usize], k: usize) -> bool {
    for v in tuple.iter_mut() {
        *v += 1;
        if *v < k {
            return true;
        }
        *v = 0;
    }
    false
}

/// Every multiset of size `n` from `k` atoms as a nondecreasing
/// representative tuple together with its multinomial count.
pub(crate) fn multisets(k: usize, n: usize) -> Vec<(Vec<usize>, f64)> {
    fn rec(k: usize, left: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for a in start..k {
            cur.push(a);
            rec(k, left - 1, a, cur, out);
            cur.pop();
        }
    }
    let mut reps = Vec::new();
    rec(k, n, 0, &mut Vec::with_capacity(n), &mut reps);
    reps.into_iter()
        .map(|t| {
            let mut denom = 1.0;
            let mut run = 1;
            for w in t.windows(2) {
                if w[0] == w[1] {
                    run += 1;
                    denom *= run as f64;
                } else {
                    run = 1;
                }
            }
            (t, factorial(n) / denom)
        })
        .collect()
}

pub(crate) fn mix_seed(seed: u64, n: u64, r: u64) -> u64 {
    // splitmix64 finalizer over the combined key
    let mut z = seed ^ n.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ r.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub(crate) fn mean_and_stderr(est: &[Complex64]) -> (Complex64, f64) {
    let r = est.len() as f64;
    let mean = est.iter().sum::<Complex64>() / r;
    let var = est.iter().map(|e| (e - mean).norm_sqr()).sum::<f64>() / (r - 1.0);
    (mean, (var / r).sqrt())
}

/// Σ_{n>N} Mⁿ/n!, summed directly so small tails keep full relative accuracy.
pub(crate) fn exp_tail(m: f64, n: usize) -> f64 {
    if m == 0.0 {
        return 0.0;
    }
    if !m.is_finite() || m > 700.0 {
        return f64::INFINITY;
    }
    let k0 = n + 1;
    let mut term =
        (k0 as f64 * m.ln() - ln_gamma(Complex64::new(k0 as f64 + 1.0, 0.0)).map(|z| z.re).unwrap_or(0.0)).exp();
    let mut sum = KahanSum::new();
    let mut k = k0;
    loop {
        sum.add(term);
        k += 1;
        term *= m / k as f64;
        if (k as f64 > m && term <= 1e-17 * sum.value()) || term == 0.0 {
            break;
        }
    }
    sum.value()
}

/// Q(α, σ) = Σ_{j,k} α_j·α_k (σ_jσ_k − σ_j∧σ_k).
pub fn bridge_quadratic(alphas: &[Vec<f64>], sigmas: &[f64]) -> Result<f64> {
    if alphas.is_empty() || alphas.len() != sigmas.len() {
        return Err(invalid("bridge form needs equal, nonzero numbers of alphas and sigmas"));
    }
    if sigmas.iter().any(|s| !(0.0..=1.0).contains(s)) {
        return Err(invalid("sigmas must lie in [0, 1]"));
    }
    let mut acc = KahanSum::new();
    for (aj, sj) in alphas.iter().zip(sigmas) {
        for (ak, sk) in alphas.iter().zip(sigmas) {
            acc.add(dot(aj, ak) * (sj * sk - sj.min(*sk)));
        }
    }
    Ok(acc.value())
}

/// Order-n term of the series factor, K₀^{(θ)} excluded.
pub fn order_term_sigma(n: usize, q: &PropagatorQuery, quad: &QuadratureSpec) -> Result<Complex64> {
    Ok(order_term_sigma_with_error(n, q, quad)?.0)
}

/// As [`order_term_sigma`], also returning the quadrature error estimate.
pub fn order_term_sigma_with_error(n: usize, q: &PropagatorQuery, quad: &QuadratureSpec) -> Result<(Complex64, f64)> {
    quad.validate()?;
    let p = Prepared::new(q)?;
    if n >= quad.switch_order && n > ScrambledHalton::MAX_DIM {
        return Err(invalid(format!("order {n} exceeds the sampler dimension limit")));
    }
    Ok(p.order_term(n, quad))
}

/// Closed-form T-transform of the n-fold product of shifted free integrands,
/// natural units: the free transform at ξ = θ + iΣ_j α_j 1_{(τ_j, t]},
/// times exp(Σ_j α_j·x).
pub fn t_transform_product(
    alphas: &[Vec<f64>],
    taus: &[f64],
    theta: &TestFunction,
    p: &SpacetimePair,
) -> Result<Complex64> {
    SpacetimePair::new(p.x.clone(), p.x0.clone(), p.t, p.t0)?;
    p.check_dim(theta.dim(), "field")?;
    if alphas.len() != taus.len() {
        return Err(invalid("alphas and taus must have equal length"));
    }
    if taus.iter().any(|tau| !(p.t0..=p.t).contains(tau)) {
        return Err(invalid("every tau must lie in [t0, t]"));
    }
    for a in alphas {
        p.check_dim(a.len(), "alpha")?;
    }
    let d = p.dim();
    let big_t = p.duration();
    let mut e1 = -I * 0.5 * theta.l2_norm_sq_full();
    for (a, &tau) in alphas.iter().zip(taus) {
        e1 += dot(a, &theta.integral_unchecked(tau, p.t));
    }
    let mut cross = KahanSum::new();
    for (aj, tj) in alphas.iter().zip(taus) {
        for (ak, tk) in alphas.iter().zip(taus) {
            cross.add(dot(aj, ak) * (p.t - tj.max(*tk)));
        }
    }
    e1 += I * 0.5 * cross.value();
    let int = theta.integral_unchecked(p.t0, p.t);
    let mut v: Vec<Complex64> = (0..d).map(|i| Complex64::new(int[i] + p.x[i] - p.x0[i], 0.0)).collect();
    for (a, &tau) in alphas.iter().zip(taus) {
        for i in 0..d {
            v[i] += I * a[i] * (p.t - tau);
        }
    }
    let lin: f64 = alphas.iter().map(|a| dot(a, &p.x)).sum();
    Ok(freeprop::gaussian_kernel(d, big_t, &v, e1 + lin))
}

/// Order-n contribution in the time parameterization,
/// `((−ig/ħ)ⁿ/n!) ∫_{[t0,t]ⁿ} Σ Πw ρ · T(Φ_n) · (field correction) dⁿτ`,
/// integrated over the time-ordered simplex with a collapsed tensor rule of
/// `points` per axis. K₀^{(θ)} is included, so this equals
/// `free_kernel_with_field · order_term_sigma(n)`.
pub fn order_term_tau(n: usize, q: &PropagatorQuery, points: usize) -> Result<Complex64> {
    if points < 2 {
        return Err(invalid("quadrature needs at least 2 points per axis"));
    }
    let p = Prepared::new(q)?;
    let pair = p.pair();
    let corr = freeprop::field_correction(&p.theta, &pair)?;
    if n == 0 {
        return Ok(freeprop::t_transform_free(&p.theta, &pair)? * corr * p.density);
    }
    let k = p.atoms.len();
    let rule = SimplexRule::new(n, points);
    let mut tuple = vec![0usize; n];
    let mut taus = vec![0.0; n];
    let mut alphas = vec![Vec::new(); n];
    let mut acc = ComplexKahanSum::new();
    let mut failure = None;
    rule.for_each(|s, w| {
        for (tau, sj) in taus.iter_mut().zip(s) {
            *tau = p.t0 + p.big_t * sj;
        }
        if k == 0 {
            return;
        }
        tuple.iter_mut().for_each(|v| *v = 0);
        loop {
            let mut amp = Complex64::new(w, 0.0);
            for j in 0..n {
                let a = &p.atoms[tuple[j]];
                alphas[j].clone_from(&a.alpha);
                amp *= a.weight * p.rho(a.component, taus[j]);
            }
            match t_transform_product(&alphas, &taus, &p.theta, &pair) {
                Ok(v) => acc.add(amp * v),
                Err(e) => failure = Some(e),
            }
            if !advance(&mut tuple, k) {
                break;
            }
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    // ∫_{[t0,t]ⁿ} of a symmetric sum is n! times the ordered integral, and dτ = T dσ.
    let pre = (-I * p.coupling * p.big_t).powu(n as u32);
    Ok(pre * acc.value() * corr * p.density)
}

/// Closed-form bound on the modulus of Σ_{n>N} of the series factor:
/// `P·Σ_{n>N} Mⁿ/n!` with
/// `M = (|g|T/ħ) Σ|w| exp[(|x−x0| + |x0| + 2√T|θ|₀/mass)|α|]` and
/// `P = exp(|θ|₀²/(ħ·mass) + |x−x0||θ|₀/(ħ√T))`.
pub fn tail_bound(n: usize, q: &PropagatorQuery) -> Result<f64> {
    let p = Prepared::new(q)?;
    let (m, pref) = p.moment_bound();
    Ok(pref * exp_tail(m, n))
}

/// Tighter rigorous bound `Σ_{n>N} Mₛⁿ/n!` with
/// `Mₛ = (|g|T/ħ) Σ|w| sup|ρ| exp(max(α·x, α·x0) + √T|θ'|₀|α'|)` (primes in
/// natural units). It follows from bounding each straight-line exponent by
/// its endpoint values and each field integral by Cauchy–Schwarz.
pub fn sharp_tail_bound(n: usize, q: &PropagatorQuery) -> Result<f64> {
    let p = Prepared::new(q)?;
    Ok(exp_tail(p.sharp_mass(), n))
}

fn combined_tail(p: &Prepared, n: usize) -> f64 {
    let (m, pref) = p.moment_bound();
    (pref * exp_tail(m, n)).min(exp_tail(p.sharp_mass(), n))
}

fn assemble(p: &Prepared, order: usize, quad: &QuadratureSpec) -> Result<SeriesResult> {
    let k0 = p.kernel()?;
    let mut acc = ComplexKahanSum::new();
    let mut terms = Vec::with_capacity(order + 1);
    let mut qerr = KahanSum::new();
    for n in 0..=order {
        let (t, e) = p.order_term(n, quad);
        let term = k0 * t;
        terms.push(term);
        acc.add(term);
        qerr.add(k0.norm() * e);
    }
    Ok(SeriesResult {
        value: acc.value(),
        terms,
        order_used: order,
        tail_bound: k0.norm() * combined_tail(p, order),
        quad_error_estimate: qerr.value(),
    })
}

/// Truncated series S_N at a fixed order.
pub fn propagator_fixed_order(q: &PropagatorQuery, order: usize, quad: &QuadratureSpec) -> Result<SeriesResult> {
    quad.validate()?;
    check_order(order, quad)?;
    let p = Prepared::new(q)?;
    assemble(&p, order, quad)
}

fn check_order(order: usize, quad: &QuadratureSpec) -> Result<()> {
    if order >= quad.switch_order && order > ScrambledHalton::MAX_DIM {
        return Err(invalid(format!("order {order} exceeds the sampler dimension limit")));
    }
    Ok(())
}

/// K(x,t|x0,t0) with the smallest order N ≤ [`N_MAX`] whose bound on the
/// series-factor tail is at most `tol`.
pub fn propagator(q: &PropagatorQuery, tol: f64, quad: &QuadratureSpec) -> Result<SeriesResult> {
    if !(tol > 0.0) {
        return Err(invalid("tolerance must be positive"));
    }
    quad.validate()?;
    let p = Prepared::new(q)?;
    let chosen = (0..=N_MAX).find(|&n| combined_tail(&p, n) <= tol);
    match chosen {
        Some(n) => assemble(&p, n, quad),
        None => {
            let partial = assemble(&p, N_MAX, quad)?;
            Err(Error::ConvergenceBudgetExceeded {
                order: N_MAX,
                tail_bound: combined_tail(&p, N_MAX),
                tol,
                partial: Box::new(partial),
            })
        }
    }
}

/// Propagator for a time-dependent potential; a static measure is treated
/// as a single component with profile ≡ 1.
pub fn propagator_timedep(q: &PropagatorQuery, tol: f64, quad: &QuadratureSpec) -> Result<SeriesResult> {
    let q = match &q.potential {
        Potential::TimeDependent(_) => q.clone(),
        Potential::Static(m) => {
            q.clone().with_potential(Potential::TimeDependent(TimeDependentMeasure::from_static(m.clone())))
        }
    };
    propagator(&q, tol, quad)
}

/// Series-factor coefficients c_n with term_n = gⁿ c_n, n = 0..=order.
pub fn series_coefficients(q: &PropagatorQuery, order: usize, quad: &QuadratureSpec) -> Result<Vec<Complex64>> {
    quad.validate()?;
    check_order(order, quad)?;
    let unit = q.clone().with_g(Complex64::new(1.0, 0.0));
    let p = Prepared::new(&unit)?;
    Ok((0..=order).map(|n| p.order_term(n, quad).0).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualReport {
    /// R_N = (i∂_t + (ħ/2m)Δ − (g/ħ)V − x·θ̇/ħ) S_N by central differences.
    pub residual: Complex64,
    /// −(g/ħ) V(x) T_N, the value the recursion predicts for R_N.
    pub predicted: Complex64,
    /// |R_N − predicted|.
    pub defect: f64,
    /// |S_N| at the evaluation point.
    pub kernel_modulus: f64,
}

/// Finite-difference Schrödinger residual of the order-N truncation.
pub fn schrodinger_residual(
    q: &PropagatorQuery,
    order: usize,
    h: f64,
    dt: f64,
    quad: &QuadratureSpec,
) -> Result<ResidualReport> {
    if !(h > 0.0) || !(dt > 0.0) {
        return Err(invalid("finite-difference steps must be positive"));
    }
    q.validate()?;
    if !(q.pair.t - q.pair.t0 > 2.0 * dt) {
        return Err(invalid("need t - t0 > 2 dt for the time stencil"));
    }
    let eval = |x: Vec<f64>, t: f64| -> Result<SeriesResult> {
        let pair = SpacetimePair { x, x0: q.pair.x0.clone(), t, t0: q.pair.t0 };
        propagator_fixed_order(&q.clone().with_pair(pair), order, quad)
    };
    let x = q.pair.x.clone();
    let t = q.pair.t;
    let centre = eval(x.clone(), t)?;
    let s = centre.value;
    let dtp = eval(x.clone(), t + dt)?.value;
    let dtm = eval(x.clone(), t - dt)?.value;
    let mut lap = Complex64::new(0.0, 0.0);
    for i in 0..x.len() {
        let mut xp = x.clone();
        xp[i] += h;
        let mut xm = x.clone();
        xm[i] -= h;
        lap += (eval(xp, t)?.value - 2.0 * s + eval(xm, t)?.value) / (h * h);
    }
    let v = q.potential.eval(&x, t)?;
    let force: f64 = dot(&x, &q.theta.deriv(t));
    let gv = q.g / q.hbar * v;
    let residual = I * (dtp - dtm) / (2.0 * dt) + q.hbar / (2.0 * q.mass) * lap - gv * s - force / q.hbar * s;
    let predicted = -gv * centre.terms[order];
    Ok(ResidualReport { residual, predicted, defect: (residual - predicted).norm(), kernel_modulus: s.norm() })
}

/// Inverse CDF of the density ∝ e^{cσ} on [0, 1] at `u`, with the log of
/// the Jacobian dσ/du.
pub(crate) fn exp_warp(c: f64, u: f64) -> (f64, f64) {
    if c.abs() < 1e-9 {
        return (u, 0.0);
    }
    let c_abs = c.abs();
    let v = if c > 0.0 { u } else { 1.0 - u };
    let s = 1.0 + (v + (1.0 - v) * (-c_abs).exp()).ln() / c_abs;
    let (sigma, ln_norm) = if c > 0.0 {
        (s, c + (-(-c).exp_m1() / c).ln())
    } else {
        // mirror image of the c > 0 map
        (1.0 - s, (c.exp_m1() / c).ln())
    };
    let sigma = sigma.clamp(0.0, 1.0);
    (sigma, ln_norm - c * sigma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::Atom;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn single(w: f64, alpha: f64) -> ExponentialMeasure {
        ExponentialMeasure::new(1, vec![Atom::real(w, vec![alpha])]).unwrap()
    }

    #[test]
    fn bridge_examples() {
        assert_eq!(bridge_quadratic(&[vec![1.0]], &[0.5]).unwrap(), -0.25);
        let q = bridge_quadratic(&[vec![1.0], vec![1.0]], &[0.25, 0.75]).unwrap();
        assert!((q + 0.5).abs() < 1e-15);
        let a = vec![vec![1.3], vec![-0.2], vec![2.0]];
        assert_eq!(bridge_quadratic(&a, &[0.0, 1.0, 1.0]).unwrap(), 0.0);
        assert!(bridge_quadratic(&a, &[0.0, 1.1, 1.0]).is_err());
    }

    #[test]
    fn exp_warp_is_a_change_of_variables() {
        for &c in &[-30.0, -2.5, 1e-12, 0.7, 12.0] {
            // ∫_0^1 g(σ) dσ with g = cos σ, via the warped variable.
            let (nodes, weights) = crate::quad::gauss_legendre_unit(40);
            let mut acc = 0.0;
            for (u, w) in nodes.iter().zip(&weights) {
                let (s, lj) = exp_warp(c, *u);
                acc += w * s.cos() * lj.exp();
                assert!((0.0..=1.0).contains(&s));
            }
            if c.abs() < 3.0 {
                assert!((acc - 1f64.sin()).abs() < 1e-12, "c={c}: {acc}");
            }
            let (s0, _) = exp_warp(c, 0.0);
            let (s1, _) = exp_warp(c, 1.0);
            assert!(s0.abs() < 1e-12 && (s1 - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn multisets_count_all_tuples() {
        for (k, n) in [(2, 4), (3, 3), (1, 5), (4, 2)] {
            let total: f64 = multisets(k, n).iter().map(|(_, c)| c).sum();
            assert_eq!(total, (k as f64).powi(n as i32));
        }
    }

    #[test]
    fn exp_tail_matches_direct_difference() {
        let m: f64 = 1.7;
        let direct = m.exp() - (0..=3).map(|k| m.powi(k) / factorial(k as usize)).sum::<f64>();
        assert!((exp_tail(m, 3) - direct).abs() < 1e-14);
        assert_eq!(exp_tail(0.0, 5), 0.0);
    }

    #[test]
    fn constant_potential_terms() {
        let pair = SpacetimePair::new(vec![0.3], vec![-0.1], 1.2, 0.0).unwrap();
        let q = PropagatorQuery::new(pair, 0.8, single(1.5, 0.0));
        let quad = QuadratureSpec::default();
        for n in 0..4 {
            let t = order_term_sigma(n, &q, &quad).unwrap();
            let exact = (-I * 0.8 * 1.5 * 1.2).powu(n as u32) / factorial(n);
            assert!((t - exact).norm() < 1e-13 * exact.norm(), "n={n}");
        }
    }

    #[test]
    fn first_order_unit_atom() {
        let pair = SpacetimePair::new(vec![0.0], vec![0.0], 1.0, 0.0).unwrap();
        let q = PropagatorQuery::new(pair, 1.0, single(1.0, 1.0));
        let t = order_term_sigma(1, &q, &QuadratureSpec::default()).unwrap();
        let oracle = -I
            * c(
                crate::quad::integrate(|s| (0.5 * (s - s * s)).cos(), 0.0, 1.0, 50, 10),
                crate::quad::integrate(|s| (0.5 * (s - s * s)).sin(), 0.0, 1.0, 50, 10),
            );
        assert!((t - oracle).norm() < 1e-12);
        assert!((t.re - 0.0832).abs() < 1e-3 && (t.im + 0.9958).abs() < 1e-3, "{t}");
    }

    #[test]
    fn zero_coupling_is_free() {
        let pair = SpacetimePair::new(vec![0.4], vec![0.1], 0.7, 0.0).unwrap();
        let q = PropagatorQuery::new(pair.clone(), 0.0, single(1.0, -1.0));
        let r = propagator(&q, 1e-10, &QuadratureSpec::default()).unwrap();
        assert_eq!(r.order_used, 0);
        assert_eq!(r.value, freeprop::free_kernel(&pair).unwrap());
        assert_eq!(tail_bound(7, &q).unwrap(), 0.0);
    }

    #[test]
    fn units_scale_like_free_particle() {
        // Free kernel with ħ, m: sqrt(m/(2πiħT)) exp(i m r²/(2ħT)).
        let pair = SpacetimePair::new(vec![0.9], vec![0.2], 1.1, 0.3).unwrap();
        let (hbar, mass) = (0.7, 1.9);
        let q = PropagatorQuery::new(pair, 0.0, single(1.0, 0.0)).with_units(hbar, mass);
        let v = propagator(&q, 1e-12, &QuadratureSpec::default()).unwrap().value;
        let t = 0.8;
        let r: f64 = 0.7;
        let exact = Complex64::from_polar(
            (mass / (2.0 * std::f64::consts::PI * hbar * t)).sqrt(),
            -std::f64::consts::FRAC_PI_4,
        ) * (I * mass * r * r / (2.0 * hbar * t)).exp();
        assert!((v - exact).norm() < 1e-14 * exact.norm());
    }

    #[test]
    fn tau_form_matches_sigma_form_order_one() {
        let pair = SpacetimePair::new(vec![0.2], vec![-0.1], 0.8, 0.1).unwrap();
        let th = TestFunction::zero(1).with_bump(0, crate::field::Bump::new(0.3, 0.5, 0.2).unwrap()).unwrap();
        let m = ExponentialMeasure::new(1, vec![Atom::real(1.0, vec![-2.0]), Atom::real(-2.0, vec![-1.0])]).unwrap();
        let q = PropagatorQuery::new(pair.clone(), 0.4, m).with_theta(th.clone());
        let quad = QuadratureSpec { points: 24, ..Default::default() };
        let sigma = order_term_sigma(1, &q, &quad).unwrap() * freeprop::free_kernel_with_field(&th, &pair).unwrap();
        let tau = order_term_tau(1, &q, 24).unwrap();
        assert!((sigma - tau).norm() < 1e-12 * tau.norm(), "{sigma} vs {tau}");
    }
}
