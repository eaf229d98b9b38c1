//! Conformal factors `e^{u_k}` of the Toda solution induced by a curve, PDE
//! residuals on grids, cone-angle fits and CSV export.

use std::io::Write;
use std::path::Path;

use num::complex::Complex64;
use num::Zero;
use rayon::prelude::*;

use crate::curve::Curve;
use crate::gauss::GaussRat;
use crate::error::{Error, Result};
use crate::rat::to_f64;
use crate::singularity::classify_all;
use crate::twisted::Point;

/// Number of angles averaged per radius in [`cone_angle_fit`].
pub const FIT_ANGLES: usize = 64;

struct Entry {
    numer: Vec<Complex64>,
    denom: Vec<i32>,
}

/// Double-precision evaluator of the derivative rows `f, f', ..., f^(n)`.
pub struct MetricEvaluator {
    n: usize,
    locus: Vec<Complex64>,
    twist: Vec<Vec<f64>>,
    weights: Vec<f64>,
    entries: Vec<Vec<Option<Entry>>>,
}

impl MetricEvaluator {
    pub fn new(c: &Curve) -> MetricEvaluator {
        let table = c.derivative_table();
        let locus = c.locus().points().iter().map(|p| p.to_c64()).collect();
        let twist = c
            .components()
            .iter()
            .map(|f| f.twist().iter().map(to_f64).collect())
            .collect();
        let entries = table
            .iter()
            .map(|row| {
                row.iter()
                    .map(|f| {
                        (!f.is_zero()).then(|| Entry {
                            numer: f.numer().to_c64(),
                            denom: f.denom_exp().iter().map(|&k| k as i32).collect(),
                        })
                    })
                    .collect()
            })
            .collect();
        MetricEvaluator {
            n: c.n(),
            locus,
            twist,
            weights: c.weights().to_vec(),
            entries,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Matrix `M[r][j] = |T_j(z)| w_j f_j^{(r)}(z) / T_j(z)`; the unit-modulus
    /// part of the twist factor is irrelevant to every Gram determinant.
    pub fn rows(&self, z: Complex64) -> Result<Vec<Vec<Complex64>>> {
        let m = self.n + 1;
        let diffs: Vec<Complex64> = self.locus.iter().map(|p| z - p).collect();
        if diffs.iter().any(|d| d.is_zero()) {
            return Err(Error::EvalAtSingularity(format!("{z}")));
        }
        let scale: Vec<f64> = (0..m)
            .map(|j| {
                self.weights[j]
                    * diffs
                        .iter()
                        .zip(&self.twist[j])
                        .filter(|(_, mu)| **mu != 0.0)
                        .map(|(d, mu)| d.norm().powf(*mu))
                        .product::<f64>()
            })
            .collect();
        Ok(self
            .entries
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .map(|(j, e)| match e {
                        None => Complex64::zero(),
                        Some(e) => {
                            let mut v = crate::poly::eval_c64(&e.numer, z) * scale[j];
                            for (d, &k) in diffs.iter().zip(&e.denom) {
                                if k != 0 {
                                    v /= d.powi(k);
                                }
                            }
                            v
                        }
                    })
                    .collect()
            })
            .collect())
    }

    /// `log |Lambda_k|^2` for `k = 0..=n`.
    pub fn log_lambda_norms(&self, z: Complex64) -> Result<Vec<f64>> {
        log_gram_levels(&self.rows(z)?)
    }

    /// `u_k = log(|Lambda_k|^2 |Lambda_{k-2}|^2 / |Lambda_{k-1}|^4)`, `k = 1..=n`.
    pub fn u(&self, z: Complex64) -> Result<Vec<f64>> {
        Ok(u_from_log_norms(&self.log_lambda_norms(z)?))
    }

    pub fn conformal_factors(&self, z: Complex64) -> Result<Vec<f64>> {
        Ok(self.u(z)?.into_iter().map(f64::exp).collect())
    }
}

/// Logarithms of the leading Gram determinants `det(R_k R_k^*)` of the rows
/// `R_k = rows[..=k]`, from a Householder QR: `det = prod_{i <= k} |R_ii|^2`.
pub fn log_gram_levels(rows: &[Vec<Complex64>]) -> Result<Vec<f64>> {
    let mut cols = rows.to_vec();
    let m = cols.len();
    let mut out = Vec::with_capacity(m);
    let mut acc = 0.0;
    for k in 0..m {
        let norm2: f64 = cols[k].get(k..).unwrap_or(&[]).iter().map(|x| x.norm_sqr()).sum();
        if !(norm2 > 0.0 && norm2.is_finite()) {
            return Err(Error::NonPositiveGram { level: k });
        }
        acc += norm2.ln();
        out.push(acc);
        if k + 1 == m {
            break;
        }
        let norm = norm2.sqrt();
        let x0 = cols[k][k];
        let phase = if x0.is_zero() { Complex64::new(1.0, 0.0) } else { x0 / x0.norm() };
        let alpha = -phase * norm;
        let mut v: Vec<Complex64> = cols[k][k..].to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x.norm_sqr()).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        for col in cols.iter_mut().skip(k + 1) {
            let dot: Complex64 = v.iter().zip(&col[k..]).map(|(a, b)| a.conj() * b).sum();
            let f = dot * (2.0 / vnorm2);
            for (x, a) in col[k..].iter_mut().zip(&v) {
                *x -= f * a;
            }
        }
    }
    Ok(out)
}

pub fn conformal_factors(c: &Curve, z: Complex64) -> Result<Vec<f64>> {
    MetricEvaluator::new(c).conformal_factors(z)
}

/// `sum_{S} |Lambda_k[S]|^2` over the exact wedge coordinates; agrees with the
/// Gram determinant by Cauchy-Binet.
pub fn lambda_norm_sq_from_minors(c: &Curve, k: usize, z: Complex64) -> Result<f64> {
    let w = c.weights();
    let a = c.associated(k);
    let mut acc = 0.0;
    for (s, f) in a.subsets.iter().zip(&a.coords) {
        if f.is_zero() {
            continue;
        }
        let scale: f64 = s.iter().map(|&j| w[j] * w[j]).product();
        acc += f.eval_abs2(z)? * scale;
    }
    Ok(acc)
}

/// Five-point Laplacian of a vector-valued function.
fn laplacian<F>(f: F, z: Complex64, h: f64) -> Result<(Vec<f64>, Vec<f64>)>
where
    F: Fn(Complex64) -> Result<Vec<f64>>,
{
    let c = f(z)?;
    let mut acc: Vec<f64> = c.iter().map(|v| -4.0 * v).collect();
    for d in [
        Complex64::new(h, 0.0),
        Complex64::new(-h, 0.0),
        Complex64::new(0.0, h),
        Complex64::new(0.0, -h),
    ] {
        for (a, v) in acc.iter_mut().zip(f(z + d)?) {
            *a += v;
        }
    }
    Ok((c, acc.into_iter().map(|a| a / (h * h)).collect()))
}

/// `Delta log|Lambda_k|^2 - 4 |Lambda_{k+1}|^2 |Lambda_{k-1}|^2 / |Lambda_k|^4`
/// for `k = 0..n-1`, by finite differences with step `h`.
pub fn plucker_defect(c: &Curve, z: Complex64, h: f64) -> Result<Vec<f64>> {
    let ev = MetricEvaluator::new(c);
    let (l, lap) = laplacian(|w| ev.log_lambda_norms(w), z, h)?;
    let at = |k: isize| if k < 0 { 0.0 } else { l[k as usize] };
    Ok((0..c.n() as isize)
        .map(|k| {
            let rhs = 4.0 * (at(k + 1) + at(k - 1) - 2.0 * at(k)).exp();
            lap[k as usize] - rhs
        })
        .collect())
}

/// `r_i = Delta u_i + 4 sum_j a_ij e^{u_j}` at `z`, together with `u`.
pub fn toda_residual_at(ev: &MetricEvaluator, z: Complex64, h: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let (u, lap) = laplacian(|w| ev.u(w), z, h)?;
    let n = u.len();
    let eu: Vec<f64> = u.iter().map(|v| v.exp()).collect();
    let r = (0..n)
        .map(|i| {
            let mut s = 2.0 * eu[i];
            if i > 0 {
                s -= eu[i - 1];
            }
            if i + 1 < n {
                s -= eu[i + 1];
            }
            lap[i] + 4.0 * s
        })
        .collect();
    Ok((u, r))
}

/// Rectangle `re x im`, sampled on `nodes` (default: spacing `h`), with
/// finite-difference step `h`. Points closer than `safety` to a singular
/// point get no residual.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    pub re: [f64; 2],
    pub im: [f64; 2],
    pub h: f64,
    pub safety: Option<f64>,
    pub nodes: Option<[usize; 2]>,
}

/// Upper bound on grid nodes per axis.
pub const MAX_NODES_PER_AXIS: usize = 100_000;
/// Upper bound on total grid nodes.
pub const MAX_NODES: usize = 50_000_000;

impl GridSpec {
    pub fn square(half_width: f64, h: f64, nodes: usize) -> GridSpec {
        GridSpec {
            re: [-half_width, half_width],
            im: [-half_width, half_width],
            h,
            safety: None,
            nodes: Some([nodes, nodes]),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite();
        if !(ok(self.re[0]) && ok(self.re[1]) && ok(self.im[0]) && ok(self.im[1])) {
            return Err(Error::invalid("grid bounds must be finite"));
        }
        if self.re[0] >= self.re[1] || self.im[0] >= self.im[1] {
            return Err(Error::invalid("grid bounds must be increasing"));
        }
        if !(self.h.is_finite() && self.h > 0.0) {
            return Err(Error::invalid("h must be positive"));
        }
        if let Some(s) = self.safety {
            if !(s.is_finite() && s >= 0.0) {
                return Err(Error::invalid("safety radius must be non-negative"));
            }
        }
        let (nx, ny) = self.node_counts();
        if nx < 1 || ny < 1 || nx > MAX_NODES_PER_AXIS || ny > MAX_NODES_PER_AXIS || nx * ny > MAX_NODES {
            return Err(Error::invalid(format!("grid of {nx} x {ny} nodes is out of range")));
        }
        Ok(())
    }

    pub fn node_counts(&self) -> (usize, usize) {
        match self.nodes {
            Some([nx, ny]) => (nx, ny),
            None => {
                let count = |a: f64, b: f64| {
                    let c = ((b - a) / self.h).round() + 1.0;
                    if c.is_finite() && c >= 1.0 && c < 1e9 {
                        c as usize
                    } else {
                        usize::MAX
                    }
                };
                (count(self.re[0], self.re[1]), count(self.im[0], self.im[1]))
            }
        }
    }

    pub fn diameter(&self) -> f64 {
        (self.re[1] - self.re[0]).hypot(self.im[1] - self.im[0])
    }

    pub fn safety_radius(&self) -> f64 {
        self.safety.unwrap_or(0.05 * self.diameter())
    }

    /// Nodes in row-major order: imaginary part outer, real part inner.
    pub fn points(&self) -> Vec<Complex64> {
        let (nx, ny) = self.node_counts();
        let coord = |a: f64, b: f64, i: usize, n: usize| {
            if n == 1 {
                a
            } else {
                a + (b - a) * i as f64 / (n - 1) as f64
            }
        };
        (0..ny)
            .flat_map(|iy| {
                (0..nx).map(move |ix| {
                    Complex64::new(
                        coord(self.re[0], self.re[1], ix, nx),
                        coord(self.im[0], self.im[1], iy, ny),
                    )
                })
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridRow {
    pub z: Complex64,
    pub u: Option<Vec<f64>>,
    pub residual: Option<Vec<f64>>,
}

/// Approximate positions of the finite singular points.
pub fn finite_singular_points(c: &Curve) -> Result<Vec<Complex64>> {
    Ok(classify_all(c)?
        .iter()
        .filter_map(|d| match &d.point {
            Point::Infinity => None,
            p => p.approx(),
        })
        .collect())
}

pub fn evaluate_grid(c: &Curve, grid: &GridSpec) -> Result<Vec<GridRow>> {
    grid.validate()?;
    let sing = finite_singular_points(c)?;
    let safety = grid.safety_radius();
    let ev = MetricEvaluator::new(c);
    grid.points()
        .par_iter()
        .map(|&z| {
            let near = sing.iter().any(|s| (z - s).norm() < safety);
            if near {
                return Ok(GridRow {
                    z,
                    u: ev.u(z).ok(),
                    residual: None,
                });
            }
            let (u, r) = toda_residual_at(&ev, z, grid.h)?;
            Ok(GridRow {
                z,
                u: Some(u),
                residual: Some(r),
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct PdeReport {
    pub max_abs: Vec<f64>,
    pub rms: Vec<f64>,
    pub max_eu: f64,
    pub relative_max: f64,
    pub evaluated: usize,
    pub excluded: usize,
}

pub fn summarize(rows: &[GridRow], n: usize) -> PdeReport {
    let mut max_abs = vec![0.0f64; n];
    let mut sum_sq = vec![0.0f64; n];
    let mut max_eu = 0.0f64;
    let mut evaluated = 0;
    for row in rows {
        let Some(r) = &row.residual else { continue };
        evaluated += 1;
        for i in 0..n {
            max_abs[i] = max_abs[i].max(r[i].abs());
            sum_sq[i] += r[i] * r[i];
        }
        if let Some(u) = &row.u {
            for v in u {
                max_eu = max_eu.max(v.exp());
            }
        }
    }
    let rms = sum_sq
        .iter()
        .map(|s| if evaluated > 0 { (s / evaluated as f64).sqrt() } else { 0.0 })
        .collect();
    let worst = max_abs.iter().cloned().fold(0.0, f64::max);
    PdeReport {
        relative_max: if max_eu > 0.0 { worst / max_eu } else { 0.0 },
        max_abs,
        rms,
        max_eu,
        evaluated,
        excluded: rows.len() - evaluated,
    }
}

pub fn toda_residual(c: &Curve, grid: &GridSpec) -> Result<PdeReport> {
    let rows = evaluate_grid(c, grid)?;
    Ok(summarize(&rows, c.n()))
}

/// Radii `10^{-3}, ..., 10^{-6}` in half-decade steps.
pub fn default_fit_radii() -> Vec<f64> {
    (0..7).map(|i| 10f64.powf(-3.0 - 0.5 * i as f64)).collect()
}

struct LocalTerm {
    scale: f64,
    twist: Vec<f64>,
    denom: Vec<i32>,
    numer: Vec<Complex64>,
}

/// `u` near an exact point, from the wedge coordinates with numerators
/// re-expanded exactly about that point; stays accurate at high-order zeros
/// where the derivative rows cancel in floating point.
pub struct LocalEvaluator {
    center: Complex64,
    locus: Vec<Complex64>,
    levels: Vec<Vec<LocalTerm>>,
}

impl LocalEvaluator {
    pub fn new(c: &Curve, p: &GaussRat) -> Result<LocalEvaluator> {
        c.require_nondegenerate()?;
        let w = c.weights();
        let levels = (0..=c.n())
            .map(|k| {
                let a = c.associated(k);
                a.subsets
                    .iter()
                    .zip(&a.coords)
                    .filter(|(_, f)| !f.is_zero())
                    .map(|(s, f)| LocalTerm {
                        scale: s.iter().map(|&j| w[j] * w[j]).product(),
                        twist: f.twist().iter().map(to_f64).collect(),
                        denom: f.denom_exp().iter().map(|&k| k as i32).collect(),
                        numer: f.numer().taylor_shift(p).to_c64(),
                    })
                    .collect()
            })
            .collect();
        Ok(LocalEvaluator {
            center: p.to_c64(),
            locus: c.locus().points().iter().map(|q| q.to_c64()).collect(),
            levels,
        })
    }

    /// `log |Lambda_k|^2` at `center + t`.
    pub fn log_lambda_norms(&self, t: Complex64) -> Result<Vec<f64>> {
        let z = self.center + t;
        let dist: Vec<f64> = self
            .locus
            .iter()
            .map(|q| if *q == self.center { t.norm() } else { (z - q).norm() })
            .collect();
        if dist.iter().any(|d| *d == 0.0) {
            return Err(Error::EvalAtSingularity(format!("{z}")));
        }
        self.levels
            .iter()
            .enumerate()
            .map(|(k, terms)| {
                let total: f64 = terms
                    .iter()
                    .map(|term| {
                        let mut v = crate::poly::eval_c64(&term.numer, t).norm_sqr() * term.scale;
                        for ((d, mu), kk) in dist.iter().zip(&term.twist).zip(&term.denom) {
                            v *= d.powf(2.0 * (mu - *kk as f64));
                        }
                        v
                    })
                    .sum();
                if total > 0.0 && total.is_finite() {
                    Ok(total.ln())
                } else {
                    Err(Error::NonPositiveGram { level: k })
                }
            })
            .collect()
    }

    pub fn u(&self, t: Complex64) -> Result<Vec<f64>> {
        Ok(u_from_log_norms(&self.log_lambda_norms(t)?))
    }
}

fn u_from_log_norms(l: &[f64]) -> Vec<f64> {
    let at = |k: isize| if k < 0 { 0.0 } else { l[k as usize] };
    (1..l.len() as isize).map(|k| at(k) + at(k - 2) - 2.0 * at(k - 1)).collect()
}

/// Least-squares slope of the angular mean of `u_i` on circles around `p`
/// against `2 log r`; estimates `gamma_{p,i}`. Exact points use
/// [`LocalEvaluator`], numeric points the Gram evaluator, infinity the
/// inverted curve at 0.
pub fn cone_angle_fit(c: &Curve, p: &Point, radii: &[f64]) -> Result<Vec<f64>> {
    if radii.len() < 2 {
        return Err(Error::invalid("at least two radii required"));
    }
    if radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
        return Err(Error::invalid("radii must be positive"));
    }
    match p {
        Point::Infinity => cone_angle_fit(&c.invert_coordinate(), &Point::Finite(GaussRat::zero()), radii),
        Point::Finite(q) => {
            let ev = LocalEvaluator::new(c, q)?;
            fit_slopes(|t| ev.u(t), c.n(), radii)
        }
        Point::Numeric(np) => {
            let ev = MetricEvaluator::new(c);
            fit_slopes(|t| ev.u(np.approx + t), c.n(), radii)
        }
    }
}

fn fit_slopes<F>(u: F, n: usize, radii: &[f64]) -> Result<Vec<f64>>
where
    F: Fn(Complex64) -> Result<Vec<f64>>,
{
    let mut xs = Vec::with_capacity(radii.len());
    let mut ys: Vec<Vec<f64>> = vec![Vec::with_capacity(radii.len()); n];
    for &r in radii {
        let mut mean = vec![0.0; n];
        for a in 0..FIT_ANGLES {
            let theta = 2.0 * std::f64::consts::PI * (a as f64 + 0.5) / FIT_ANGLES as f64;
            for (m, v) in mean.iter_mut().zip(u(Complex64::from_polar(r, theta))?) {
                *m += v / FIT_ANGLES as f64;
            }
        }
        xs.push(2.0 * r.ln());
        for (y, m) in ys.iter_mut().zip(mean) {
            y.push(m);
        }
    }
    let xm = xs.iter().sum::<f64>() / xs.len() as f64;
    let sxx: f64 = xs.iter().map(|x| (x - xm).powi(2)).sum();
    Ok(ys
        .iter()
        .map(|y| {
            let ym = y.iter().sum::<f64>() / y.len() as f64;
            xs.iter().zip(y).map(|(x, v)| (x - xm) * (v - ym)).sum::<f64>() / sxx
        })
        .collect())
}

fn fmt_f64(v: f64) -> String {
    format!("{v:e}")
}

/// CSV with columns `re, im, u_1..u_n, eu_1..eu_n, res_1..res_n`.
pub fn write_grid_csv<W: Write>(rows: &[GridRow], n: usize, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["re".to_string(), "im".to_string()];
    for prefix in ["u", "eu", "res"] {
        header.extend((1..=n).map(|i| format!("{prefix}_{i}")));
    }
    let csv_err = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(&header).map_err(csv_err)?;
    for row in rows {
        let mut rec = vec![fmt_f64(row.z.re), fmt_f64(row.z.im)];
        match &row.u {
            Some(u) => {
                rec.extend(u.iter().map(|v| fmt_f64(*v)));
                rec.extend(u.iter().map(|v| fmt_f64(v.exp())));
            }
            None => rec.extend(std::iter::repeat(String::new()).take(2 * n)),
        }
        match &row.residual {
            Some(r) => rec.extend(r.iter().map(|v| fmt_f64(*v))),
            None => rec.extend(std::iter::repeat(String::new()).take(n)),
        }
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn export_grid(c: &Curve, grid: &GridSpec, path: &Path) -> Result<()> {
    let rows = evaluate_grid(c, grid)?;
    let file = std::fs::File::create(path)?;
    write_grid_csv(&rows, c.n(), std::io::BufWriter::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauss::GaussRat;
    use crate::poly::Poly;
    use crate::rat::{int, rat};
    use crate::twisted::{BranchLocus, TwistedFn};
    use std::sync::Arc;

    fn poly_curve(comps: &[&[i64]]) -> Curve {
        let l = Arc::new(BranchLocus::empty());
        Curve::new(
            comps
                .iter()
                .map(|c| TwistedFn::polynomial(l.clone(), Poly::from_i64s(c)))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn fubini_study_factor() {
        let c = poly_curve(&[&[1], &[0, 1]]);
        for z in [Complex64::new(0.0, 0.0), Complex64::new(0.3, -0.7), Complex64::new(2.0, 1.0)] {
            let e = conformal_factors(&c, z).unwrap()[0];
            let expect = 1.0 / (1.0 + z.norm_sqr()).powi(2);
            assert!((e - expect).abs() <= 1e-14 * expect);
        }
    }

    #[test]
    fn conic_at_origin() {
        let c = poly_curve(&[&[1], &[0, 1], &[0, 0, 1]]);
        let e = conformal_factors(&c, Complex64::new(0.0, 0.0)).unwrap();
        assert!((e[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn gram_matches_cauchy_binet() {
        let c = poly_curve(&[&[1, 1], &[0, 2, 1], &[3, 0, 0, 1]]);
        let ev = MetricEvaluator::new(&c);
        let z = Complex64::new(0.4, 0.9);
        let l = ev.log_lambda_norms(z).unwrap();
        for k in 0..=2 {
            let direct = lambda_norm_sq_from_minors(&c, k, z).unwrap();
            assert!((l[k].exp() - direct).abs() <= 1e-12 * direct, "level {k}");
        }
    }

    #[test]
    fn gram_levels_unitary_invariant() {
        let c = poly_curve(&[&[1, 1], &[0, 2, 1], &[3, 0, 0, 1]]);
        let ev = MetricEvaluator::new(&c);
        let rows = ev.rows(Complex64::new(-0.3, 0.5)).unwrap();
        // product of a Householder reflector and a diagonal phase
        let v = [Complex64::new(0.3, 0.1), Complex64::new(-0.5, 0.7), Complex64::new(0.2, -0.4)];
        let vv: f64 = v.iter().map(|x| x.norm_sqr()).sum();
        let phases = [0.3f64, 1.7, -2.2];
        let u = |i: usize, j: usize| {
            let delta = if i == j { 1.0 } else { 0.0 };
            (Complex64::new(delta, 0.0) - v[i] * v[j].conj() * (2.0 / vv)) * Complex64::from_polar(1.0, phases[j])
        };
        let rotated: Vec<Vec<Complex64>> = rows
            .iter()
            .map(|r| (0..3).map(|i| (0..3).map(|j| u(i, j) * r[j]).sum()).collect())
            .collect();
        let a = log_gram_levels(&rows).unwrap();
        let b = log_gram_levels(&rotated).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x.exp() - y.exp()).abs() <= 1e-10 * x.exp());
        }
    }

    #[test]
    fn evaluation_at_branch_point_fails() {
        let c = Curve::power_curve(&[int(0), rat(1, 2)]).unwrap();
        assert!(matches!(
            conformal_factors(&c, Complex64::new(0.0, 0.0)),
            Err(Error::EvalAtSingularity(_))
        ));
    }

    #[test]
    fn torus_action_leaves_factors_unchanged() {
        let l = Arc::new(BranchLocus::new(vec![GaussRat::from_i64(0)]).unwrap());
        let base = Curve::new(vec![
            TwistedFn::one(l.clone()),
            TwistedFn::locus_power(l.clone(), 0, rat(1, 3)),
            TwistedFn::polynomial(l.clone(), Poly::from_i64s(&[1, 0, 1])),
        ])
        .unwrap();
        let unit = GaussRat::new(rat(3, 5), rat(4, 5));
        let mut comps = base.components().to_vec();
        comps[1] = comps[1].scale(&unit);
        let rot = Curve::new(comps).unwrap();
        let z = Complex64::new(0.7, 0.2);
        let a = conformal_factors(&base, z).unwrap();
        let b = conformal_factors(&rot, z).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= 1e-13 * x.abs());
        }
    }

    #[test]
    fn residual_is_small_for_line() {
        let c = poly_curve(&[&[1], &[0, 1]]);
        let r = toda_residual(&c, &GridSpec::square(1.0, 1e-3, 21)).unwrap();
        assert!(r.relative_max < 1e-5, "{r:?}");
        assert_eq!(r.excluded, 0);
    }

    #[test]
    fn plucker_defect_small() {
        let c = poly_curve(&[&[1], &[0, 1], &[1, 0, 0, 1]]);
        for d in plucker_defect(&c, Complex64::new(0.3, 0.4), 1e-3).unwrap() {
            assert!(d.abs() < 1e-4, "{d}");
        }
    }

    #[test]
    fn cone_fit_half_power() {
        let c = Curve::power_curve(&[int(0), rat(1, 2)]).unwrap();
        let g = cone_angle_fit(&c, &Point::Finite(GaussRat::zero()), &default_fit_radii()).unwrap();
        assert!((g[0] + 0.5).abs() < 0.005, "{g:?}");
        let g = cone_angle_fit(&c, &Point::Infinity, &default_fit_radii()).unwrap();
        assert!((g[0] + 0.5).abs() < 0.005, "{g:?}");
    }

    #[test]
    fn local_evaluator_agrees_with_gram() {
        let c = poly_curve(&[&[1], &[0, 1], &[1, 0, 0, 1]]);
        let p = GaussRat::from_i64(1);
        let local = LocalEvaluator::new(&c, &p).unwrap();
        let ev = MetricEvaluator::new(&c);
        let t = Complex64::new(0.2, -0.1);
        for (a, b) in local.u(t).unwrap().iter().zip(ev.u(p.to_c64() + t).unwrap()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn csv_shape_and_determinism() {
        let c = poly_curve(&[&[1], &[0, 1]]);
        let mut g = GridSpec::square(1.0, 1e-3, 10);
        let rows = evaluate_grid(&c, &g).unwrap();
        let mut a = Vec::new();
        write_grid_csv(&rows, 1, &mut a).unwrap();
        let text = String::from_utf8(a.clone()).unwrap();
        assert_eq!(text.lines().count(), 101);
        assert_eq!(text.lines().next().unwrap(), "re,im,u_1,eu_1,res_1");
        let mut b = Vec::new();
        write_grid_csv(&evaluate_grid(&c, &g).unwrap(), 1, &mut b).unwrap();
        assert_eq!(a, b);

        let branch = Curve::power_curve(&[int(0), rat(1, 2)]).unwrap();
        g.safety = Some(0.3);
        let rows = evaluate_grid(&branch, &g).unwrap();
        let mut out = Vec::new();
        write_grid_csv(&rows, 1, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.lines().any(|l| l.ends_with(',')));
    }

    #[test]
    fn grid_validation() {
        let mut g = GridSpec::square(1.0, 1e-3, 10);
        g.re = [1.0, -1.0];
        assert!(g.validate().is_err());
        let g = GridSpec { nodes: None, ..GridSpec::square(1.0, 0.5, 0) };
        assert_eq!(g.node_counts(), (5, 5));
    }
}
