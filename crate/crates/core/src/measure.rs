//! Finite atomic complex measures `m = Σ_k w_k δ_{α_k}` on R^d and the
//! potentials `V(x) = ∫ e^{α·x} dm(α)` they define.

use num_complex::Complex64;

use crate::error::{invalid, Result};

/// One point mass of the measure.
#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub weight: Complex64,
    pub alpha: Vec<f64>,
}

impl Atom {
    pub fn new(weight: Complex64, alpha: Vec<f64>) -> Self {
        Self { weight, alpha }
    }

    pub fn real(weight: f64, alpha: Vec<f64>) -> Self {
        Self { weight: Complex64::new(weight, 0.0), alpha }
    }

    /// Euclidean norm |α|.
    pub fn alpha_norm(&self) -> f64 {
        self.alpha.iter().map(|a| a * a).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExponentialMeasure {
    dim: usize,
    atoms: Vec<Atom>,
}

impl ExponentialMeasure {
    pub fn new(dim: usize, atoms: Vec<Atom>) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("measure dimension must be at least 1"));
        }
        for (i, a) in atoms.iter().enumerate() {
            if a.alpha.len() != dim {
                return Err(invalid(format!("atom {i} has alpha of length {}, expected {dim}", a.alpha.len())));
            }
            if !a.weight.re.is_finite() || !a.weight.im.is_finite() || a.alpha.iter().any(|v| !v.is_finite()) {
                return Err(invalid(format!("atom {i} has a non-finite entry")));
            }
        }
        Ok(Self { dim, atoms })
    }

    pub fn empty(dim: usize) -> Result<Self> {
        Self::new(dim, Vec::new())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Atoms sorted by (α, Re w, Im w). Evaluations iterate in this order so
    /// that relabeling the atoms cannot change a result.
    pub fn canonical_atoms(&self) -> Vec<Atom> {
        let mut atoms = self.atoms.clone();
        atoms.sort_by(|a, b| {
            a.alpha
                .iter()
                .zip(&b.alpha)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.weight.re.total_cmp(&b.weight.re))
                .then(a.weight.im.total_cmp(&b.weight.im))
        });
        atoms
    }

    /// Measure with the atoms of both operands.
    pub fn union(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(invalid("cannot join measures of different dimension"));
        }
        let mut atoms = self.atoms.clone();
        atoms.extend(other.atoms.iter().cloned());
        Self::new(self.dim, atoms)
    }

    /// V(x) = Σ_k w_k e^{α_k·x}.
    pub fn potential(&self, x: &[f64]) -> Result<Complex64> {
        if x.len() != self.dim {
            return Err(invalid(format!("point has dimension {}, measure has {}", x.len(), self.dim)));
        }
        let mut acc = crate::sum::ComplexKahanSum::new();
        for a in &self.atoms {
            let e: f64 = a.alpha.iter().zip(x).map(|(p, q)| p * q).sum();
            acc.add(a.weight * e.exp());
        }
        Ok(acc.value())
    }

    /// Σ_k |w_k| e^{C|α_k|}.
    pub fn exponential_moment(&self, c: f64) -> Result<f64> {
        if !(c >= 0.0) {
            return Err(invalid(format!("exponential moment needs C >= 0, got {c}")));
        }
        let mut acc = crate::sum::KahanSum::new();
        for a in &self.atoms {
            acc.add(a.weight.norm() * (c * a.alpha_norm()).exp());
        }
        Ok(acc.value())
    }

    /// Σ_k |w_k| e^{c1|α_k|}; the prefactor `c0` is left to the caller.
    pub fn weighted_moment(&self, _c0: f64, c1: f64) -> Result<f64> {
        self.exponential_moment(c1)
    }

    pub fn total_variation(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight.norm()).sum()
    }
}

/// Time modulation ρ(τ) of one component of a time-dependent measure.
#[derive(Debug, Clone, PartialEq)]
pub enum TimeProfile {
    Constant(f64),
    /// Σ_k c_k τ^k, degree at most 4.
    Polynomial(Vec<f64>),
    GaussianBump {
        amplitude: f64,
        center: f64,
        width: f64,
    },
    /// amplitude · cos(ωτ + phase)
    Cosine {
        amplitude: f64,
        omega: f64,
        phase: f64,
    },
}

impl TimeProfile {
    pub fn validate(&self) -> Result<()> {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match self {
            Self::Constant(c) if !c.is_finite() => Err(invalid("constant profile must be finite")),
            Self::Polynomial(c) if c.len() > 5 => Err(invalid("polynomial profile degree must be at most 4")),
            Self::Polynomial(c) if !finite(c) => Err(invalid("polynomial coefficients must be finite")),
            Self::GaussianBump { width, .. } if !(*width > 0.0) => {
                Err(invalid("gaussian profile width must be positive"))
            }
            Self::GaussianBump { amplitude, center, width } if !finite(&[*amplitude, *center, *width]) => {
                Err(invalid("gaussian profile parameters must be finite"))
            }
            Self::Cosine { amplitude, omega, phase } if !finite(&[*amplitude, *omega, *phase]) => {
                Err(invalid("cosine profile parameters must be finite"))
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, tau: f64) -> f64 {
        match self {
            Self::Constant(c) => *c,
            Self::Polynomial(c) => c.iter().rev().fold(0.0, |acc, k| acc * tau + k),
            Self::GaussianBump { amplitude, center, width } => {
                let u = (tau - center) / width;
                amplitude * (-0.5 * u * u).exp()
            }
            Self::Cosine { amplitude, omega, phase } => amplitude * (omega * tau + phase).cos(),
        }
    }

    /// An upper bound for |ρ| on `[a, b]`.
    pub fn sup_abs(&self, a: f64, b: f64) -> f64 {
        match self {
            Self::Constant(c) => c.abs(),
            Self::Polynomial(c) => {
                let r = a.abs().max(b.abs());
                c.iter().enumerate().map(|(k, v)| v.abs() * r.powi(k as i32)).sum()
            }
            Self::GaussianBump { amplitude, .. } | Self::Cosine { amplitude, .. } => amplitude.abs(),
        }
    }
}

/// `dm(α, τ) = Σ_j dm_j(α) ρ_j(τ) dτ`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeDependentMeasure {
    dim: usize,
    components: Vec<(ExponentialMeasure, TimeProfile)>,
}

impl TimeDependentMeasure {
    pub fn new(components: Vec<(ExponentialMeasure, TimeProfile)>) -> Result<Self> {
        let dim = components
            .first()
            .map(|(m, _)| m.dim())
            .ok_or_else(|| invalid("time-dependent measure needs at least one component"))?;
        for (m, p) in &components {
            if m.dim() != dim {
                return Err(invalid("all components must share one dimension"));
            }
            p.validate()?;
        }
        Ok(Self { dim, components })
    }

    /// Static measure with profile ≡ 1.
    pub fn from_static(m: ExponentialMeasure) -> Self {
        Self { dim: m.dim(), components: vec![(m, TimeProfile::Constant(1.0))] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self) -> &[(ExponentialMeasure, TimeProfile)] {
        &self.components
    }

    /// Σ_j V_j(x) ρ_j(τ).
    pub fn potential(&self, x: &[f64], tau: f64) -> Result<Complex64> {
        let mut acc = crate::sum::ComplexKahanSum::new();
        for (m, p) in &self.components {
            acc.add(m.potential(x)? * p.eval(tau));
        }
        Ok(acc.value())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn morse() -> ExponentialMeasure {
        ExponentialMeasure::new(1, vec![Atom::real(1.0, vec![-2.0]), Atom::real(-2.0, vec![-1.0])]).unwrap()
    }

    #[test]
    fn potential_examples() {
        assert_eq!(morse().potential(&[0.0]).unwrap(), Complex64::new(-1.0, 0.0));
        let c = ExponentialMeasure::new(2, vec![Atom::real(5.0, vec![0.0, 0.0])]).unwrap();
        assert_eq!(c.potential(&[3.0, -7.0]).unwrap().re, 5.0);
        let v = morse().potential(&[2f64.ln()]).unwrap();
        assert!((v.re + 0.75).abs() < 1e-15);
        assert!(morse().potential(&[0.0, 1.0]).is_err());
    }

    #[test]
    fn moment_examples() {
        let e = std::f64::consts::E;
        assert_eq!(ExponentialMeasure::empty(1).unwrap().exponential_moment(4.0).unwrap(), 0.0);
        let m3 = ExponentialMeasure::new(1, vec![Atom::real(3.0, vec![0.0])]).unwrap();
        assert_eq!(m3.exponential_moment(10.0).unwrap(), 3.0);
        let v = morse().exponential_moment(1.0).unwrap();
        assert!((v - (e * e + 2.0 * e)).abs() < 1e-13);
        assert!((v - 12.8256).abs() < 1e-4);
        let w = morse().weighted_moment(0.3, 2.5).unwrap();
        assert!((w - (5f64.exp() + 2.0 * 2.5f64.exp())).abs() < 1e-12);
        assert!(morse().exponential_moment(-1.0).is_err());
        assert_eq!(morse().exponential_moment(0.0).unwrap(), morse().total_variation());
    }

    #[test]
    fn timedep_examples() {
        let td =
            TimeDependentMeasure::new(vec![(morse(), TimeProfile::Cosine { amplitude: 1.0, omega: 1.0, phase: 0.0 })])
                .unwrap();
        assert_eq!(td.potential(&[0.0], 0.0).unwrap().re, -1.0);
        let one = TimeDependentMeasure::from_static(morse());
        assert_eq!(one.potential(&[0.4], 3.0).unwrap(), morse().potential(&[0.4]).unwrap());
        let zero = TimeDependentMeasure::new(vec![(morse(), TimeProfile::Constant(0.0))]).unwrap();
        assert_eq!(zero.potential(&[0.4], 3.0).unwrap().norm(), 0.0);
    }

    #[test]
    fn profile_bounds_hold() {
        let p = TimeProfile::Polynomial(vec![1.0, -2.0, 0.5]);
        for i in 0..=100 {
            let t = -1.0 + 0.03 * i as f64;
            assert!(p.eval(t).abs() <= p.sup_abs(-1.0, 2.0));
        }
        assert!(TimeProfile::Polynomial(vec![0.0; 6]).validate().is_err());
        assert!(TimeProfile::GaussianBump { amplitude: 1.0, center: 0.0, width: 0.0 }.validate().is_err());
    }

    #[test]
    fn canonical_order_ignores_labels() {
        let a = morse();
        let b = ExponentialMeasure::new(1, a.atoms().iter().rev().cloned().collect()).unwrap();
        assert_eq!(a.canonical_atoms(), b.canonical_atoms());
    }
}
