//! Root finding for square-free polynomials: simultaneous (Aberth–Ehrlich)
//! iteration, Newton polishing, and recovery of exact Gaussian-rational roots.

use num::complex::Complex64;
use num::Zero;

use crate::error::{Error, Result};
use crate::gauss::GaussRat;
use crate::poly::{eval_c64, Poly};
use crate::rat::rationalize;

/// Relative backward-error bound every returned root must meet.
pub const RESIDUAL_BOUND: f64 = 1e-12;

const MAX_ITER: usize = 500;

fn derivative_c64(c: &[Complex64]) -> Vec<Complex64> {
    c.iter()
        .enumerate()
        .skip(1)
        .map(|(i, a)| a * i as f64)
        .collect()
}

/// `|p(z)| / sum |a_i| |z|^i`
pub fn relative_residual(coeffs: &[Complex64], z: Complex64) -> f64 {
    let r = z.norm();
    let scale = coeffs
        .iter()
        .rev()
        .fold(0.0f64, |acc, c| acc * r + c.norm());
    if scale == 0.0 {
        return 0.0;
    }
    eval_c64(coeffs, z).norm() / scale
}

/// All roots of the polynomial with the given (constant-first) coefficients.
pub fn aberth(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = coeffs.len().saturating_sub(1);
    if n == 0 {
        return Ok(Vec::new());
    }
    let lead = coeffs[n];
    if lead.is_zero() {
        return Err(Error::RootFinding("zero leading coefficient".into()));
    }
    if n == 1 {
        return Ok(vec![-coeffs[0] / lead]);
    }
    let dc = derivative_c64(coeffs);

    // Fujiwara-style bound for the initial circle.
    let radius = (0..n)
        .map(|i| (coeffs[i] / lead).norm().powf(1.0 / (n - i) as f64))
        .fold(0.0f64, f64::max)
        .max(1e-3);
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / n as f64 + 0.4;
            Complex64::from_polar(radius * 0.5, theta)
        })
        .collect();

    for _ in 0..MAX_ITER {
        let mut max_step = 0.0f64;
        for k in 0..n {
            let pk = eval_c64(coeffs, z[k]);
            if pk.is_zero() {
                continue;
            }
            let ratio = pk / eval_c64(&dc, z[k]);
            let repulsion: Complex64 = (0..n)
                .filter(|&j| j != k)
                .map(|j| Complex64::new(1.0, 0.0) / (z[k] - z[j]))
                .sum();
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
            if step.is_finite() {
                z[k] -= step;
                max_step = max_step.max(step.norm() / (1.0 + z[k].norm()));
            }
        }
        if max_step < 1e-15 {
            break;
        }
    }

    for r in z.iter_mut() {
        *r = newton_polish(coeffs, &dc, *r);
        let res = relative_residual(coeffs, *r);
        if !res.is_finite() || res > RESIDUAL_BOUND {
            return Err(Error::RootFinding(format!(
                "root {r} has relative residual {res:e}"
            )));
        }
    }
    Ok(z)
}

fn newton_polish(coeffs: &[Complex64], dc: &[Complex64], mut z: Complex64) -> Complex64 {
    let mut best = (relative_residual(coeffs, z), z);
    for _ in 0..8 {
        let d = eval_c64(dc, z);
        if d.is_zero() {
            break;
        }
        z -= eval_c64(coeffs, z) / d;
        let res = relative_residual(coeffs, z);
        if res < best.0 {
            best = (res, z);
        }
    }
    best.1
}

/// Coefficients of the monic version of `p` as doubles.
pub fn monic_c64(p: &Poly) -> Vec<Complex64> {
    p.monic().to_c64()
}

/// Tries to recognise `z` as a Gaussian rational that is an exact root of `p`.
pub fn exact_root_near(p: &Poly, z: Complex64) -> Option<GaussRat> {
    let tol = |x: f64| 1e-9 * x.abs().max(1.0);
    let re = rationalize(z.re, tol(z.re), 1_000_000)?;
    let im = rationalize(z.im, tol(z.im), 1_000_000)?;
    let cand = GaussRat::new(re, im);
    p.eval(&cand).is_zero().then_some(cand)
}

/// Splits a square-free polynomial into its exact Gaussian-rational roots and
/// the remaining cofactor together with numeric approximations of its roots.
pub struct SplitRoots {
    pub exact: Vec<GaussRat>,
    pub rest: Poly,
    pub numeric: Vec<Complex64>,
}

pub fn split_square_free(p: &Poly) -> Result<SplitRoots> {
    let mut rest = p.monic();
    let mut exact = Vec::new();
    if rest.degree() == 1 {
        exact.push(-&rest.coeff(0));
        return Ok(SplitRoots {
            exact,
            rest: Poly::one(),
            numeric: Vec::new(),
        });
    }
    let approx = aberth(&monic_c64(&rest))?;
    for z in approx {
        if let Some(r) = exact_root_near(&rest, z) {
            if exact.contains(&r) {
                continue;
            }
            rest = rest.div_linear(&r).0;
            exact.push(r);
        }
    }
    let numeric = if rest.is_constant() {
        Vec::new()
    } else {
        aberth(&monic_c64(&rest))?
    };
    Ok(SplitRoots {
        exact,
        rest: rest.monic(),
        numeric,
    })
}
