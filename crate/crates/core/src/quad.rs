//! Quadrature building blocks: Gauss–Legendre rules, the collapsed tensor
//! rule on the ordered simplex, and a digit-scrambled Halton sequence.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::sum::KahanSum;

/// Gauss–Legendre nodes and weights on `[0, 1]`, nodes ascending.
pub fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            // Legendre recurrence for P_n and its derivative.
            let mut p0 = 1.0;
            let mut p1 = z;
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        // z is the i-th largest root on [-1, 1].
        nodes[n - 1 - i] = 0.5 * (1.0 + z);
        nodes[i] = 0.5 * (1.0 - z);
        weights[n - 1 - i] = 0.5 * w;
        weights[i] = 0.5 * w;
    }
    (nodes, weights)
}

/// Composite Gauss–Legendre integral of `f` over `[a, b]`.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, panels: usize, order: usize) -> f64 {
    let (nodes, weights) = gauss_legendre_unit(order);
    let h = (b - a) / panels as f64;
    let mut acc = KahanSum::new();
    for p in 0..panels {
        let lo = a + h * p as f64;
        for (x, w) in nodes.iter().zip(&weights) {
            acc.add(w * h * f(lo + h * x));
        }
    }
    acc.value()
}

/// Tensor Gauss–Legendre rule on the ordered simplex
/// `0 ≤ s_1 ≤ s_2 ≤ … ≤ s_n ≤ 1`, obtained from the cube through the
/// collapsed map `s_k = u_k u_{k+1} ⋯ u_n`. The pulled-back integrand stays
/// analytic, so the rule converges geometrically for smooth integrands.
#[derive(Debug, Clone)]
pub struct SimplexRule {
    dim: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl SimplexRule {
    pub fn new(dim: usize, points: usize) -> Self {
        let (nodes, weights) = gauss_legendre_unit(points);
        Self { dim, nodes, weights }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.nodes.len().pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Visit every node; `s` is sorted ascending. Total weight is `1/n!`.
    pub fn for_each<F: FnMut(&[f64], f64)>(&self, mut f: F) {
        let n = self.dim;
        if n == 0 {
            f(&[], 1.0);
            return;
        }
        let p = self.nodes.len();
        let mut idx = vec![0usize; n];
        let mut s = vec![0.0; n];
        loop {
            let mut w = 1.0;
            let mut prod = 1.0;
            for k in (0..n).rev() {
                let u = self.nodes[idx[k]];
                prod *= u;
                s[k] = prod;
                w *= self.weights[idx[k]] * u.powi(k as i32);
            }
            f(&s, w);
            let mut k = 0;
            loop {
                idx[k] += 1;
                if idx[k] < p {
                    break;
                }
                idx[k] = 0;
                k += 1;
                if k == n {
                    return;
                }
            }
        }
    }
}

const PRIMES: [u32; 40] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97, 101, 103, 107, 109,
    113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173,
];

/// Halton sequence with independent random digit permutations per dimension
/// and digit position.
#[derive(Debug, Clone)]
pub struct ScrambledHalton {
    perms: Vec<Vec<Vec<u32>>>,
}

impl ScrambledHalton {
    pub const MAX_DIM: usize = PRIMES.len();

    pub fn new(dim: usize, seed: u64) -> Self {
        assert!(dim <= Self::MAX_DIM, "scrambled Halton supports at most {} dimensions", Self::MAX_DIM);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let perms = (0..dim)
            .map(|d| {
                let b = PRIMES[d];
                // Enough digits to resolve below 1e-16.
                let levels = (53.0 * std::f64::consts::LN_2 / (b as f64).ln()).ceil() as usize;
                (0..levels)
                    .map(|_| {
                        let mut p: Vec<u32> = (0..b).collect();
                        p.shuffle(&mut rng);
                        p
                    })
                    .collect()
            })
            .collect();
        Self { perms }
    }

    pub fn dim(&self) -> usize {
        self.perms.len()
    }

    /// Write point `index` into `out`, each coordinate in `(0, 1)`.
    pub fn point(&self, index: u64, out: &mut [f64]) {
        for (d, slot) in out.iter_mut().enumerate().take(self.perms.len()) {
            let b = PRIMES[d] as u64;
            let inv_b = 1.0 / b as f64;
            let mut i = index;
            let mut scale = inv_b;
            let mut v = 0.0;
            for perm in &self.perms[d] {
                let digit = (i % b) as usize;
                i /= b;
                v += perm[digit] as f64 * scale;
                scale *= inv_b;
            }
            *slot = v.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for n in [1, 2, 5, 16, 32] {
            let (x, w) = gauss_legendre_unit(n);
            let max_deg = 2 * n - 1;
            for deg in 0..=max_deg.min(40) {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = 1.0 / (deg as f64 + 1.0);
                assert!((q - exact).abs() < 1e-14, "n={n} deg={deg}: {q} vs {exact}");
            }
            assert!(x.windows(2).all(|p| p[0] < p[1]));
        }
    }

    #[test]
    fn simplex_rule_volume_and_moment() {
        for n in 1..=4 {
            let rule = SimplexRule::new(n, 6);
            let mut vol = 0.0;
            let mut first = 0.0;
            rule.for_each(|s, w| {
                assert!(s.windows(2).all(|p| p[0] <= p[1]));
                vol += w;
                first += w * s[0];
            });
            let fact: f64 = (1..=n).map(|k| k as f64).product();
            assert!((vol - 1.0 / fact).abs() < 1e-14);
            // E[min of n uniforms] = 1/(n+1), so the ordered-simplex moment is that over n!.
            assert!((first - 1.0 / ((n + 1) as f64 * fact)).abs() < 1e-14);
        }
    }

    #[test]
    fn halton_is_reproducible_and_in_range() {
        let a = ScrambledHalton::new(10, 42);
        let b = ScrambledHalton::new(10, 42);
        let mut pa = vec![0.0; 10];
        let mut pb = vec![0.0; 10];
        let mut mean = vec![0.0; 10];
        let count = 4096;
        for i in 0..count {
            a.point(i, &mut pa);
            b.point(i, &mut pb);
            assert_eq!(pa, pb);
            for (m, v) in mean.iter_mut().zip(&pa) {
                assert!(*v > 0.0 && *v < 1.0);
                *m += v / count as f64;
            }
        }
        for m in mean {
            assert!((m - 0.5).abs() < 5e-3, "mean {m}");
        }
    }
}
