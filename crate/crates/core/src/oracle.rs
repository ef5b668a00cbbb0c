//! Independent reference computations: Crank–Nicolson evolution on a
//! uniform grid, eigenvalues of the finite-difference Hamiltonian, and
//! composite Simpson quadrature on `[0,1]ⁿ`, n ≤ 3.

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::sum::{ComplexKahanSum, KahanSum};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    pub xmin: f64,
    pub xmax: f64,
    pub npoints: usize,
}

impl Grid1D {
    pub fn new(xmin: f64, xmax: f64, npoints: usize) -> Result<Self> {
        if npoints < 16 {
            return Err(invalid("grid needs at least 16 points"));
        }
        if !(xmax > xmin) || !xmin.is_finite() || !xmax.is_finite() {
            return Err(invalid("grid needs finite xmax > xmin"));
        }
        Ok(Self { xmin, xmax, npoints })
    }

    /// Grid with spacing as close to `h` as an integer point count allows.
    pub fn with_spacing(xmin: f64, xmax: f64, h: f64) -> Result<Self> {
        if !(h > 0.0) {
            return Err(invalid("spacing must be positive"));
        }
        Self::new(xmin, xmax, ((xmax - xmin) / h).round() as usize + 1)
    }

    pub fn spacing(&self) -> f64 {
        (self.xmax - self.xmin) / (self.npoints - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.xmin + self.spacing() * i as f64
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.npoints).map(|i| self.x(i)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    pub grid: Grid1D,
    pub values: Vec<Complex64>,
}

impl WaveFunction {
    pub fn new(grid: Grid1D, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.npoints {
            return Err(invalid(format!("{} values for {} grid points", values.len(), grid.npoints)));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn<F: Fn(f64) -> Complex64>(grid: Grid1D, f: F) -> Self {
        let values = grid.points().into_iter().map(f).collect();
        Self { grid, values }
    }

    /// Discrete L² norm √(h Σ|ψ_i|²).
    pub fn norm(&self) -> f64 {
        let mut acc = KahanSum::new();
        for v in &self.values {
            acc.add(v.norm_sqr());
        }
        (acc.value() * self.grid.spacing()).sqrt()
    }

    /// Relative discrete L² distance ‖self − other‖/‖other‖.
    pub fn rel_l2_distance(&self, other: &WaveFunction) -> f64 {
        let mut num = KahanSum::new();
        let mut den = KahanSum::new();
        for (a, b) in self.values.iter().zip(&other.values) {
            num.add((a - b).norm_sqr());
            den.add(b.norm_sqr());
        }
        (num.value() / den.value()).sqrt()
    }
}

/// Solve a complex tridiagonal system with constant off-diagonal `off`.
fn thomas(diag: &[Complex64], off: Complex64, rhs: &mut [Complex64], scratch: &mut [Complex64]) {
    let n = diag.len();
    scratch[0] = off / diag[0];
    rhs[0] /= diag[0];
    for i in 1..n {
        let m = diag[i] - off * scratch[i - 1];
        scratch[i] = off / m;
        rhs[i] = (rhs[i] - off * rhs[i - 1]) / m;
    }
    for i in (0..n - 1).rev() {
        let next = rhs[i + 1];
        rhs[i] -= scratch[i] * next;
    }
}

/// Crank–Nicolson evolution from t0 to t with Dirichlet boundaries:
/// `(1 + i dt H/(2ħ)) ψ_{k+1} = (1 − i dt H/(2ħ)) ψ_k` with
/// `H = −(ħ²/2m)Δ_h + V(x, τ_k + dt/2)`.
pub fn cn_evolve<V: Fn(f64, f64) -> Complex64>(
    psi0: &WaveFunction,
    v: V,
    t0: f64,
    t: f64,
    dt: f64,
    hbar: f64,
    mass: f64,
) -> Result<WaveFunction> {
    if !(dt > 0.0) || !(t >= t0) || !(hbar > 0.0) || !(mass > 0.0) {
        return Err(invalid("cn_evolve needs dt > 0, t >= t0, hbar > 0, mass > 0"));
    }
    let grid = psi0.grid;
    let h = grid.spacing();
    let steps = ((t - t0) / dt).round().max(if t > t0 { 1.0 } else { 0.0 }) as usize;
    let dt = if steps > 0 { (t - t0) / steps as f64 } else { dt };
    let n = grid.npoints - 2;
    let xs: Vec<f64> = (1..=n).map(|i| grid.x(i)).collect();
    let kin = hbar * hbar / (2.0 * mass * h * h);
    let c = Complex64::new(0.0, dt / (2.0 * hbar));
    let off_h = Complex64::new(-kin, 0.0);
    let mut psi: Vec<Complex64> = psi0.values[1..=n].to_vec();
    let initial_norm = psi0.norm();
    let mut real_v = true;
    let mut diag_l = vec![Complex64::new(0.0, 0.0); n];
    let mut rhs = vec![Complex64::new(0.0, 0.0); n];
    let mut scratch = vec![Complex64::new(0.0, 0.0); n];
    for k in 0..steps {
        let tau = t0 + (k as f64 + 0.5) * dt;
        for i in 0..n {
            let vi = v(xs[i], tau);
            if vi.im != 0.0 {
                real_v = false;
            }
            let hd = 2.0 * kin + vi;
            diag_l[i] = 1.0 + c * hd;
            let left = if i > 0 { psi[i - 1] } else { Complex64::new(0.0, 0.0) };
            let right = if i + 1 < n { psi[i + 1] } else { Complex64::new(0.0, 0.0) };
            rhs[i] = (1.0 - c * hd) * psi[i] - c * off_h * (left + right);
        }
        thomas(&diag_l, c * off_h, &mut rhs, &mut scratch);
        std::mem::swap(&mut psi, &mut rhs);
    }
    let mut values = Vec::with_capacity(grid.npoints);
    values.push(Complex64::new(0.0, 0.0));
    values.extend_from_slice(&psi);
    values.push(Complex64::new(0.0, 0.0));
    let out = WaveFunction { grid, values };
    let peak = out.values.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let edge = 8.min(n);
    let boundary =
        out.values[1..=edge].iter().chain(&out.values[n + 1 - edge..=n]).map(|z| z.norm()).fold(0.0, f64::max);
    if peak > 0.0 && boundary > 1e-8 * peak {
        return Err(Error::DomainTooSmall(format!("boundary amplitude {:.2e} of peak {:.2e}", boundary, peak)));
    }
    if real_v && initial_norm > 0.0 && ((out.norm() - initial_norm) / initial_norm).abs() > 1e-6 {
        return Err(Error::DomainTooSmall(format!("norm drifted from {initial_norm} to {}", out.norm())));
    }
    Ok(out)
}

/// Diagonal and off-diagonal of the FD Hamiltonian on interior points.
fn fd_matrix<V: Fn(f64) -> f64>(grid: &Grid1D, v: &V, hbar: f64, mass: f64) -> (Vec<f64>, f64) {
    let h = grid.spacing();
    let kin = hbar * hbar / (2.0 * mass * h * h);
    let diag = (1..grid.npoints - 1).map(|i| 2.0 * kin + v(grid.x(i))).collect();
    (diag, -kin)
}

/// Number of eigenvalues below `lam` by Sturm sequence count.
fn sturm_count(diag: &[f64], off: f64, lam: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    let off2 = off * off;
    for (i, d) in diag.iter().enumerate() {
        q = d - lam - if i == 0 { 0.0 } else { off2 / q };
        if q == 0.0 {
            q = -f64::EPSILON * (d.abs() + off.abs());
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// The k lowest eigenvalues of the FD Hamiltonian with Dirichlet ends,
/// ascending, by bisection on Sturm counts.
pub fn hamiltonian_eigs<V: Fn(f64) -> f64>(grid: &Grid1D, v: V, k: usize, hbar: f64, mass: f64) -> Result<Vec<f64>> {
    let (diag, off) = fd_matrix(grid, &v, hbar, mass);
    if k == 0 || k > diag.len() {
        return Err(invalid(format!("requested {k} eigenvalues of a {}-point operator", diag.len())));
    }
    if diag.iter().any(|d| !d.is_finite()) {
        return Err(invalid("potential is not finite on the grid"));
    }
    let lo0 = diag.iter().cloned().fold(f64::INFINITY, f64::min) - 2.0 * off.abs();
    let hi0 = diag.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 2.0 * off.abs();
    let mut out = Vec::with_capacity(k);
    for j in 0..k {
        let (mut lo, mut hi) = (lo0, hi0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if sturm_count(&diag, off, mid) > j {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        out.push(0.5 * (lo + hi));
    }
    Ok(out)
}

/// Eigenpairs by bisection plus inverse iteration; eigenvectors are
/// normalized to unit discrete L² norm (interior points only).
pub fn hamiltonian_eigenpairs<V: Fn(f64) -> f64>(
    grid: &Grid1D,
    v: V,
    k: usize,
    hbar: f64,
    mass: f64,
) -> Result<Vec<(f64, Vec<f64>)>> {
    let eigs = hamiltonian_eigs(grid, &v, k, hbar, mass)?;
    let (diag, off) = fd_matrix(grid, &v, hbar, mass);
    let n = diag.len();
    let h = grid.spacing();
    let mut out = Vec::with_capacity(k);
    for (j, &lam) in eigs.iter().enumerate() {
        let shift = lam + 1e-10 * (1.0 + lam.abs());
        let mut vec: Vec<f64> = (0..n).map(|i| 1.0 + 0.01 * ((i * (j + 3)) % 7) as f64).collect();
        for _ in 0..4 {
            // real tridiagonal solve (T − shift) y = vec
            let mut c = vec![0.0; n];
            let mut d = vec![0.0; n];
            let m0 = diag[0] - shift;
            c[0] = off / m0;
            d[0] = vec[0] / m0;
            for i in 1..n {
                let m = diag[i] - shift - off * c[i - 1];
                c[i] = off / m;
                d[i] = (vec[i] - off * d[i - 1]) / m;
            }
            for i in (0..n - 1).rev() {
                d[i] -= c[i] * d[i + 1];
            }
            let norm = (d.iter().map(|v| v * v).sum::<f64>() * h).sqrt();
            vec = d.into_iter().map(|v| v / norm).collect();
        }
        out.push((lam, vec));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadEstimate {
    pub value: Complex64,
    /// |S(panels) − S(panels/2)|.
    pub error: f64,
}

fn simpson_weights(panels: usize) -> Vec<f64> {
    let h = 1.0 / panels as f64;
    (0..=panels)
        .map(|i| {
            let c = if i == 0 || i == panels {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            c * h / 3.0
        })
        .collect()
}

fn simpson_tensor<F: Fn(&[f64]) -> Complex64>(f: &F, n: usize, panels: usize) -> Complex64 {
    if n == 0 {
        return f(&[]);
    }
    let w = simpson_weights(panels);
    let h = 1.0 / panels as f64;
    let mut idx = vec![0usize; n];
    let mut x = vec![0.0; n];
    let mut acc = ComplexKahanSum::new();
    loop {
        let mut wt = 1.0;
        for (j, &i) in idx.iter().enumerate() {
            x[j] = i as f64 * h;
            wt *= w[i];
        }
        acc.add(wt * f(&x));
        let mut j = 0;
        loop {
            idx[j] += 1;
            if idx[j] <= panels {
                break;
            }
            idx[j] = 0;
            j += 1;
            if j == n {
                return acc.value();
            }
        }
    }
}

/// Composite Simpson tensor rule on `[0,1]ⁿ`, `panels` (even) per axis.
pub fn brute_quad<F: Fn(&[f64]) -> Complex64>(f: F, n: usize, panels: usize) -> Result<QuadEstimate> {
    if n > 3 {
        return Err(Error::Unsupported(format!("brute quadrature is limited to n <= 3, got {n}")));
    }
    if panels < 4 || !panels.is_multiple_of(4) {
        return Err(invalid("panels must be a positive multiple of 4"));
    }
    let fine = simpson_tensor(&f, n, panels);
    let coarse = simpson_tensor(&f, n, panels / 2);
    Ok(QuadEstimate { value: fine, error: (fine - coarse).norm() })
}

/// Free evolution of ψ0(x) = exp(−(x−c)²/(4σ²)):
/// `ψ(x,t) = (1 + iħt/(2mσ²))^{−1/2} exp(−(x−c)²/(4σ²(1 + iħt/(2mσ²))))`.
pub fn free_gaussian_packet(x: f64, t: f64, sigma: f64, center: f64, hbar: f64, mass: f64) -> Complex64 {
    let s = Complex64::new(1.0, hbar * t / (2.0 * mass * sigma * sigma));
    let d = x - center;
    (-(d * d) / (4.0 * sigma * sigma * s)).exp() / s.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cn_free_norm_is_conserved() {
        let grid = Grid1D::with_spacing(-10.0, 10.0, 0.02).unwrap();
        let psi0 = WaveFunction::from_fn(grid, |x| free_gaussian_packet(x, 0.0, 0.5, 0.0, 1.0, 1.0));
        let out = cn_evolve(&psi0, |_, _| Complex64::new(0.0, 0.0), 0.0, 0.1, 1e-4, 1.0, 1.0).unwrap();
        assert!(((out.norm() - psi0.norm()) / psi0.norm()).abs() < 1e-12);
    }

    #[test]
    fn particle_in_a_box() {
        let grid = Grid1D::with_spacing(0.0, 10.0, 0.01).unwrap();
        let e = hamiltonian_eigs(&grid, |_| 0.0, 3, 1.0, 1.0).unwrap();
        let exact = std::f64::consts::PI.powi(2) / (2.0 * 100.0);
        assert!((e[0] - exact).abs() < 0.01 * exact);
        assert!(e.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn brute_quad_examples() {
        let one = brute_quad(|_| Complex64::new(1.0, 0.0), 2, 8).unwrap();
        assert!((one.value - 1.0).norm() < 1e-14);
        let lin = brute_quad(|s| Complex64::new(s[0], 0.0), 1, 8).unwrap();
        assert!((lin.value.re - 0.5).abs() < 1e-12);
        assert!(brute_quad(|_| Complex64::new(1.0, 0.0), 4, 8).is_err());
    }

    #[test]
    fn eigenvector_satisfies_equation() {
        let grid = Grid1D::with_spacing(-6.0, 6.0, 0.02).unwrap();
        let v = |x: f64| 0.5 * x * x;
        let pairs = hamiltonian_eigenpairs(&grid, v, 2, 1.0, 1.0).unwrap();
        assert!((pairs[0].0 - 0.5).abs() < 1e-3);
        assert!((pairs[1].0 - 1.5).abs() < 1e-3);
        let (lam, vec) = &pairs[0];
        let h = grid.spacing();
        let mut res = 0.0f64;
        for i in 1..vec.len() - 1 {
            let hv = -(vec[i + 1] - 2.0 * vec[i] + vec[i - 1]) / (2.0 * h * h) + v(grid.x(i + 1)) * vec[i];
            res = res.max((hv - lam * vec[i]).abs());
        }
        assert!(res < 1e-6, "{res}");
    }
}
