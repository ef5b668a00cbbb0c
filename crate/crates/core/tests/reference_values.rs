//! Special-function values frozen from 30-digit mpmath evaluations.
#![allow(clippy::excessive_precision)]

use feynprop::specfun::{erf, gamma, kummer_m_regularized, laguerre, ln_gamma, whittaker_m, whittaker_w};
use feynprop::Complex64;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn close(got: Complex64, want: Complex64, tol: f64) {
    let r = (got - want).norm() / want.norm();
    assert!(r < tol, "{got} vs {want}: rel {r:e}");
}

#[test]
fn whittaker_w_values() {
    close(whittaker_w(c(0.3, 0.0), c(0.4, 0.0), c(2.0, 0.0)).unwrap(), c(0.474722803955426563, 0.0), 1e-10);
    close(whittaker_w(c(2.0, 0.0), c(1.5, 0.0), c(4.0, 0.0)).unwrap(), c(2.16536453178580307, 0.0), 1e-10);
    close(
        whittaker_w(c(0.5, 0.2), c(0.7, -0.1), c(3.0, 1.0)).unwrap(),
        c(0.417863171048004136, -0.0767369756766649966),
        1e-10,
    );
}

#[test]
fn whittaker_m_values() {
    close(whittaker_m(c(0.3, 0.0), c(0.4, 0.0), c(2.0, 0.0)).unwrap(), c(1.58896754632216516, 0.0), 1e-12);
    close(
        whittaker_m(c(-0.4, 0.3), c(0.25, 0.0), c(1.5, -0.5)).unwrap(),
        c(1.64648735717385824, -1.32855668280586650),
        1e-12,
    );
}

#[test]
fn gamma_values() {
    close(gamma(c(0.3, 0.7)).unwrap(), c(0.309686256743749156, -0.856787752939270573), 1e-13);
    close(ln_gamma(c(-2.5, 3.1)).unwrap(), c(-7.71325897079206683, -5.58075398289012742), 1e-13);
}

#[test]
fn kummer_values() {
    close(
        kummer_m_regularized(c(0.5, 1.0), c(2.5, 0.0), c(-3.0, 0.5)).unwrap(),
        c(0.301813159079634771, -0.361123289541664455),
        1e-12,
    );
    close(kummer_m_regularized(c(-1.7, 0.0), c(-2.3, 0.0), c(4.0, 0.0)).unwrap(), c(20.6376149910936076, 0.0), 1e-12);
}

#[test]
fn real_values() {
    assert!((erf(1.0) - 0.842700792949714869).abs() < 1e-15);
    assert!((erf(0.3) - 0.328626759459127416).abs() < 1e-15);
    assert!((erf(2.5) - 0.999593047982555041).abs() < 1e-15);
    assert!((laguerre(5, 1.5, 2.2) + 0.804546416666666164).abs() < 1e-13);
}
