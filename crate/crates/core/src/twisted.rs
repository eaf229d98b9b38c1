//! Twisted rational functions `prod_j (z - p_j)^{mu_j} * N(z) / prod_j (z - p_j)^{k_j}`
//! over a fixed branch locus, kept in a unique normal form.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use num::complex::Complex64;
use num::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::gauss::GaussRat;
use crate::poly::{eval_c64, Poly};
use crate::rat::{binomial, fmt_rat, frac, int, Rat};
use crate::roots::aberth;

/// Largest integer exponent folded into a polynomial during normalisation.
pub const MAX_FOLDED_EXPONENT: i64 = 1 << 16;

/// Ordered set of distinct finite branch points.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct BranchLocus {
    points: Vec<GaussRat>,
}

impl BranchLocus {
    pub fn new(points: Vec<GaussRat>) -> Result<Self> {
        for (i, p) in points.iter().enumerate() {
            if points[..i].contains(p) {
                return Err(Error::invalid(format!("locus point {p} repeated")));
            }
        }
        Ok(BranchLocus { points })
    }

    pub fn empty() -> Self {
        BranchLocus { points: Vec::new() }
    }

    pub fn points(&self) -> &[GaussRat] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn index_of(&self, p: &GaussRat) -> Option<usize> {
        self.points.iter().position(|q| q == p)
    }

    /// Locus in the coordinate `w = 1/z`: `0` (the image of infinity) first,
    /// followed by `1/p_j` for every nonzero `p_j`.
    pub fn inverted(&self) -> BranchLocus {
        let mut points = vec![GaussRat::zero()];
        points.extend(self.points.iter().filter(|p| !p.is_zero()).map(|p| p.inv()));
        BranchLocus { points }
    }
}

/// A root of a square-free polynomial known only numerically, together with
/// the exact factor that defines it.
#[derive(Clone, Debug, PartialEq)]
pub struct NumericPoint {
    pub approx: Complex64,
    pub residual: f64,
    factor: Poly,
    siblings: Vec<Complex64>,
    index: usize,
}

impl NumericPoint {
    pub fn new(factor: Poly, siblings: Vec<Complex64>, index: usize, residual: f64) -> Self {
        NumericPoint {
            approx: siblings[index],
            residual,
            factor,
            siblings,
            index,
        }
    }

    pub fn factor(&self) -> &Poly {
        &self.factor
    }

    fn nearest_sibling(&self, z: Complex64) -> usize {
        self.siblings
            .iter()
            .enumerate()
            .min_by(|a, b| {
                (a.1 - z)
                    .norm()
                    .partial_cmp(&(b.1 - z).norm())
                    .unwrap_or(Ordering::Equal)
            })
            .map(|(i, _)| i)
            .unwrap_or(usize::MAX)
    }

    /// Whether this point is a root of `h`, where `h` divides the defining
    /// factor. Decided by matching the roots of `h` to the factor's roots.
    fn is_root_of_divisor(&self, h: &Poly) -> bool {
        if h.is_constant() {
            return false;
        }
        if h.degree() == self.factor.degree() {
            return true;
        }
        match aberth(&h.monic().to_c64()) {
            Ok(rs) => rs.iter().any(|&r| self.nearest_sibling(r) == self.index),
            // fall back to the nearest-root test on the factor itself
            Err(_) => {
                let v = eval_c64(&h.monic().to_c64(), self.approx).norm();
                v < 1e-8
            }
        }
    }

    /// Multiplicity of this point as a root of `n`, computed from exact gcds
    /// `gcd(factor, n, n', ..., n^(e-1))`.
    pub fn multiplicity_in(&self, n: &Poly) -> usize {
        if n.is_zero() {
            return usize::MAX;
        }
        let mut h = self.factor.clone();
        let mut d = n.clone();
        let mut m = 0;
        loop {
            h = Poly::gcd(&h, &d);
            if !self.is_root_of_divisor(&h) {
                return m;
            }
            m += 1;
            d = d.derivative();
        }
    }
}

/// A point of the Riemann sphere.
#[derive(Clone, Debug, PartialEq)]
pub enum Point {
    Finite(GaussRat),
    Numeric(NumericPoint),
    Infinity,
}

impl Point {
    pub fn approx(&self) -> Option<Complex64> {
        match self {
            Point::Finite(p) => Some(p.to_c64()),
            Point::Numeric(np) => Some(np.approx),
            Point::Infinity => None,
        }
    }

    /// Exact points lexicographically, then numeric by (re, im), infinity last.
    pub fn display_cmp(&self, other: &Point) -> Ordering {
        use Point::*;
        match (self, other) {
            (Finite(a), Finite(b)) => a.lex_cmp(b),
            (Finite(_), _) => Ordering::Less,
            (_, Finite(_)) => Ordering::Greater,
            (Numeric(a), Numeric(b)) => a
                .approx
                .re
                .total_cmp(&b.approx.re)
                .then(a.approx.im.total_cmp(&b.approx.im)),
            (Numeric(_), Infinity) => Ordering::Less,
            (Infinity, Numeric(_)) => Ordering::Greater,
            (Infinity, Infinity) => Ordering::Equal,
        }
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Point::Finite(p) => write!(f, "{p}"),
            Point::Numeric(np) => write!(f, "~{}", np.approx),
            Point::Infinity => write!(f, "infinity"),
        }
    }
}

/// Leading exponent and coefficients of a local expansion
/// `prod(base^exp) * t^lead_exp * (c_0 + c_1 t + ...)`, where `t = z - p`
/// (or `t = 1/z` at infinity). `branch_factors` collects the constants
/// `(p - p_i)^{mu_i}` that are not Gaussian rationals.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalSeries {
    pub lead_exp: Rat,
    pub coeffs: Vec<GaussRat>,
    pub branch_factors: Vec<(GaussRat, Rat)>,
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct TwistedFn {
    locus: Arc<BranchLocus>,
    twist: Vec<Rat>,
    numer: Poly,
    denom_exp: Vec<u32>,
}

impl TwistedFn {
    pub fn zero(locus: Arc<BranchLocus>) -> Self {
        let m = locus.len();
        TwistedFn {
            locus,
            twist: vec![Rat::zero(); m],
            numer: Poly::zero(),
            denom_exp: vec![0; m],
        }
    }

    pub fn polynomial(locus: Arc<BranchLocus>, numer: Poly) -> Self {
        let m = locus.len();
        Self::from_parts(locus, vec![Rat::zero(); m], numer, vec![0; m])
    }

    pub fn constant(locus: Arc<BranchLocus>, c: GaussRat) -> Self {
        Self::polynomial(locus, Poly::constant(c))
    }

    pub fn one(locus: Arc<BranchLocus>) -> Self {
        Self::constant(locus, GaussRat::one())
    }

    /// `(z - p_j)^e` for the `j`-th locus point.
    pub fn locus_power(locus: Arc<BranchLocus>, j: usize, e: Rat) -> Self {
        let m = locus.len();
        let mut twist = vec![Rat::zero(); m];
        twist[j] = e;
        Self::from_parts(locus, twist, Poly::one(), vec![0; m])
    }

    /// Builds the normal form of `prod (z-p_j)^{twist_j} * numer / prod (z-p_j)^{denom_j}`
    /// for arbitrary rational twists and (possibly negative) integer denominators.
    ///
    /// Panics if an integer exponent exceeds [`MAX_FOLDED_EXPONENT`]; parsers
    /// validate their inputs against that bound first.
    pub fn from_parts(
        locus: Arc<BranchLocus>,
        twist: Vec<Rat>,
        numer: Poly,
        denom: Vec<i64>,
    ) -> Self {
        let m = locus.len();
        assert_eq!(twist.len(), m, "twist length must match the locus");
        assert_eq!(denom.len(), m, "denominator length must match the locus");
        if numer.is_zero() {
            return Self::zero(locus);
        }
        let mut numer = numer;
        let mut mu = Vec::with_capacity(m);
        let mut k = Vec::with_capacity(m);
        for j in 0..m {
            let fl = twist[j].floor().to_integer();
            let net = fl.to_i64().expect("twist exponent out of range") - denom[j];
            assert!(net.abs() <= MAX_FOLDED_EXPONENT, "exponent {net} too large");
            mu.push(frac(&twist[j]));
            if net >= 0 {
                if net > 0 {
                    numer = &numer * &Poly::linear_pow(&locus.points()[j], net as u32);
                }
                k.push(0u32);
            } else {
                k.push((-net) as u32);
            }
        }
        for j in 0..m {
            while k[j] > 0 {
                let (q, r) = numer.div_linear(&locus.points()[j]);
                if !r.is_zero() {
                    break;
                }
                numer = q;
                k[j] -= 1;
            }
        }
        TwistedFn {
            locus,
            twist: mu,
            numer,
            denom_exp: k,
        }
    }

    pub fn locus(&self) -> &Arc<BranchLocus> {
        &self.locus
    }

    pub fn twist(&self) -> &[Rat] {
        &self.twist
    }

    pub fn numer(&self) -> &Poly {
        &self.numer
    }

    pub fn denom_exp(&self) -> &[u32] {
        &self.denom_exp
    }

    pub fn is_zero(&self) -> bool {
        self.numer.is_zero()
    }

    pub fn same_locus(&self, other: &TwistedFn) -> bool {
        Arc::ptr_eq(&self.locus, &other.locus) || *self.locus == *other.locus
    }

    fn check_locus(&self, other: &TwistedFn) -> Result<()> {
        if self.same_locus(other) {
            Ok(())
        } else {
            Err(Error::LocusMismatch)
        }
    }

    /// Net rational exponent `mu_j - k_j` at every locus point.
    pub fn locus_exponents(&self) -> Vec<Rat> {
        self.twist
            .iter()
            .zip(&self.denom_exp)
            .map(|(mu, &k)| mu - int(k as i64))
            .collect()
    }

    pub fn add(&self, other: &TwistedFn) -> Result<TwistedFn> {
        self.check_locus(other)?;
        if self.is_zero() {
            return Ok(other.clone());
        }
        if other.is_zero() {
            return Ok(self.clone());
        }
        if self.twist != other.twist {
            return Err(Error::TwistMismatch);
        }
        let pts = self.locus.points();
        let mut a = self.numer.clone();
        let mut b = other.numer.clone();
        let mut k = Vec::with_capacity(pts.len());
        for (j, p) in pts.iter().enumerate() {
            let (ka, kb) = (self.denom_exp[j], other.denom_exp[j]);
            let kk = ka.max(kb);
            if kk > ka {
                a = &a * &Poly::linear_pow(p, kk - ka);
            }
            if kk > kb {
                b = &b * &Poly::linear_pow(p, kk - kb);
            }
            k.push(kk as i64);
        }
        Ok(Self::from_parts(
            self.locus.clone(),
            self.twist.clone(),
            &a + &b,
            k,
        ))
    }

    pub fn neg(&self) -> TwistedFn {
        self.scale(&-GaussRat::one())
    }

    pub fn sub(&self, other: &TwistedFn) -> Result<TwistedFn> {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &GaussRat) -> TwistedFn {
        if c.is_zero() {
            return Self::zero(self.locus.clone());
        }
        TwistedFn {
            numer: self.numer.scale(c),
            ..self.clone()
        }
    }

    pub fn mul(&self, other: &TwistedFn) -> Result<TwistedFn> {
        self.check_locus(other)?;
        if self.is_zero() || other.is_zero() {
            return Ok(Self::zero(self.locus.clone()));
        }
        let twist = self
            .twist
            .iter()
            .zip(&other.twist)
            .map(|(a, b)| a + b)
            .collect();
        let denom = self
            .denom_exp
            .iter()
            .zip(&other.denom_exp)
            .map(|(&a, &b)| a as i64 + b as i64)
            .collect();
        Ok(Self::from_parts(
            self.locus.clone(),
            twist,
            &self.numer * &other.numer,
            denom,
        ))
    }

    /// Exact derivative. With `L = prod_{j active} (z - p_j)`,
    /// `F' = T * (N' L + sum_j (mu_j - k_j) N L/(z - p_j)) / (D L)`.
    pub fn derivative(&self) -> TwistedFn {
        if self.is_zero() {
            return self.clone();
        }
        let pts = self.locus.points();
        let active: Vec<usize> = (0..pts.len())
            .filter(|&j| !self.twist[j].is_zero() || self.denom_exp[j] > 0)
            .collect();
        let mut lin_all = Poly::one();
        for &j in &active {
            lin_all = &lin_all * &Poly::linear(&pts[j]);
        }
        let mut numer = &self.numer.derivative() * &lin_all;
        for &j in &active {
            let coeff = &self.twist[j] - int(self.denom_exp[j] as i64);
            let others = lin_all.div_linear(&pts[j]).0;
            let term = (&self.numer * &others).scale(&GaussRat::real(coeff));
            numer = &numer + &term;
        }
        let denom = (0..pts.len())
            .map(|j| self.denom_exp[j] as i64 + i64::from(active.contains(&j)))
            .collect();
        Self::from_parts(self.locus.clone(), self.twist.clone(), numer, denom)
    }

    /// Exponent of the leading term of the local expansion at `p`.
    /// At infinity the order is taken in the coordinate `w = 1/z`.
    pub fn order_at(&self, p: &Point) -> Result<Rat> {
        if self.is_zero() {
            return Err(Error::ZeroFunction);
        }
        Ok(match p {
            Point::Finite(pt) => match self.locus.index_of(pt) {
                Some(j) => {
                    &self.twist[j] + int(self.numer.root_multiplicity(pt) as i64)
                        - int(self.denom_exp[j] as i64)
                }
                None => int(self.numer.root_multiplicity(pt) as i64),
            },
            Point::Numeric(np) => int(np.multiplicity_in(&self.numer) as i64),
            Point::Infinity => {
                let mu_sum: Rat = self.twist.iter().sum();
                let k_sum: i64 = self.denom_exp.iter().map(|&k| k as i64).sum();
                -mu_sum - int(self.numer.degree() as i64) + int(k_sum)
            }
        })
    }

    /// Local expansion with `len` coefficients at an exact point or infinity.
    pub fn local_series(&self, p: &Point, len: usize) -> Result<LocalSeries> {
        if self.is_zero() {
            return Err(Error::ZeroFunction);
        }
        if len == 0 {
            return Err(Error::invalid("series length must be at least 1"));
        }
        let pts = self.locus.points();
        match p {
            Point::Numeric(_) => Err(Error::invalid(
                "local series requires an exact point or infinity",
            )),
            Point::Infinity => {
                let lead = self.order_at(p)?;
                let mut series = self.numer.reversed().truncate(len).coeffs().to_vec();
                for (j, pj) in pts.iter().enumerate() {
                    let e = &self.twist[j] - int(self.denom_exp[j] as i64);
                    if e.is_zero() || pj.is_zero() {
                        continue;
                    }
                    // (1 - p_j w)^e
                    let neg = -pj;
                    let factor: Vec<GaussRat> = (0..len)
                        .map(|m| &neg.pow(m as u32) * &binomial(&e, m))
                        .collect();
                    series = mul_trunc(&series, &factor, len);
                }
                series.resize(len, GaussRat::zero());
                Ok(LocalSeries {
                    lead_exp: lead,
                    coeffs: series,
                    branch_factors: Vec::new(),
                })
            }
            Point::Finite(pt) => {
                let here = self.locus.index_of(pt);
                let shifted = self.numer.taylor_shift(pt);
                let ord = shifted.coeffs().iter().take_while(|c| c.is_zero()).count();
                let mut series: Vec<GaussRat> =
                    shifted.coeffs().iter().skip(ord).take(len).cloned().collect();
                let mut lead = int(ord as i64);
                let mut branch_factors = Vec::new();
                for (j, pj) in pts.iter().enumerate() {
                    let e = &self.twist[j] - int(self.denom_exp[j] as i64);
                    if Some(j) == here {
                        lead += e;
                        continue;
                    }
                    if e.is_zero() {
                        continue;
                    }
                    // (a + t)^e = a^mu * a^-k * (1 + t/a)^e with a = p - p_j
                    let a = pt - pj;
                    if !self.twist[j].is_zero() {
                        branch_factors.push((a.clone(), self.twist[j].clone()));
                    }
                    let a_inv = a.inv();
                    let scale = a.powi(-(self.denom_exp[j] as i64));
                    let factor: Vec<GaussRat> = (0..len)
                        .map(|m| &(&a_inv.pow(m as u32) * &binomial(&e, m)) * &scale)
                        .collect();
                    series = mul_trunc(&series, &factor, len);
                }
                series.resize(len, GaussRat::zero());
                Ok(LocalSeries {
                    lead_exp: lead,
                    coeffs: series,
                    branch_factors,
                })
            }
        }
    }

    /// `|F(z)|^2` in double precision; independent of the branch.
    pub fn eval_abs2(&self, z: Complex64) -> Result<f64> {
        let mut val = eval_c64(&self.numer.to_c64(), z).norm_sqr();
        for (j, p) in self.locus.points().iter().enumerate() {
            let e = &self.twist[j] - int(self.denom_exp[j] as i64);
            if e.is_zero() {
                continue;
            }
            let d = (z - p.to_c64()).norm_sqr();
            if d == 0.0 {
                return Err(Error::EvalAtSingularity(format!("{z}")));
            }
            val *= d.powf(crate::rat::to_f64(&e));
        }
        Ok(val)
    }

    /// Rewrites the function in the coordinate `w = 1/z` over `new_locus`
    /// (which must be `self.locus().inverted()`). The constants
    /// `(-p_j)^{mu_j}` are dropped; orders and all `w`-expansions up to that
    /// per-function constant are exact.
    pub fn invert_coordinate(&self, new_locus: &Arc<BranchLocus>) -> TwistedFn {
        if self.is_zero() {
            return Self::zero(new_locus.clone());
        }
        let pts = self.locus.points();
        let m = new_locus.len();
        let mut twist = vec![Rat::zero(); m];
        let mut scale = GaussRat::one();
        let mut w_exp = -int(self.numer.degree() as i64);
        for (j, p) in pts.iter().enumerate() {
            let e = &self.twist[j] - int(self.denom_exp[j] as i64);
            w_exp -= &e;
            if p.is_zero() {
                continue;
            }
            let idx = new_locus
                .index_of(&p.inv())
                .expect("inverted locus must contain 1/p_j");
            twist[idx] = e;
            scale = &scale * &(-p).powi(-(self.denom_exp[j] as i64));
        }
        twist[0] += w_exp;
        let numer = self.numer.reversed().scale(&scale);
        Self::from_parts(new_locus.clone(), twist, numer, vec![0; m])
    }

    pub fn fmt_compact(&self) -> String {
        let mut s = String::new();
        for (j, p) in self.locus.points().iter().enumerate() {
            if !self.twist[j].is_zero() {
                s.push_str(&format!("(z-({p}))^({}) ", fmt_rat(&self.twist[j])));
            }
        }
        s.push_str(&format!("[{}]", self.numer));
        for (j, p) in self.locus.points().iter().enumerate() {
            if self.denom_exp[j] > 0 {
                s.push_str(&format!(" / (z-({p}))^{}", self.denom_exp[j]));
            }
        }
        s
    }

    /// Whether every locus exponent is an integer and no denominator remains.
    pub fn is_polynomial(&self) -> bool {
        self.twist.iter().all(Zero::is_zero) && self.denom_exp.iter().all(|&k| k == 0)
    }

    /// Sign of the leading coefficient is irrelevant here; used for sorting.
    pub fn has_negative_exponent(&self) -> bool {
        self.locus_exponents().iter().any(Signed::is_negative)
    }
}

/// Solves `d/dz (z^alpha Q) = z^(alpha-1) P` for the polynomial `Q`.
pub fn solve_euler_ode(alpha: &Rat, p: &Poly) -> Result<Poly> {
    if !alpha.is_positive() {
        return Err(Error::invalid(format!("alpha = {} must be positive", fmt_rat(alpha))));
    }
    Ok(Poly::new(
        p.coeffs()
            .iter()
            .enumerate()
            .map(|(j, c)| c * &(alpha + int(j as i64)).recip())
            .collect(),
    ))
}

fn mul_trunc(a: &[GaussRat], b: &[GaussRat], len: usize) -> Vec<GaussRat> {
    let mut out = vec![GaussRat::zero(); len.min(a.len() + b.len())];
    for (i, x) in a.iter().enumerate().take(len) {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            if i + j >= out.len() {
                break;
            }
            let t = x * y;
            out[i + j] += &t;
        }
    }
    out
}
