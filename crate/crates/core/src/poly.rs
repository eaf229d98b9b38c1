//! Dense univariate polynomials over the Gaussian rationals.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num::complex::Complex64;
use num::{One, Zero};

use crate::gauss::GaussRat;
use crate::rat::{int, Rat};

/// Coefficients stored from the constant term upward, without trailing zeros.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct Poly {
    coeffs: Vec<GaussRat>,
}

impl Poly {
    pub fn new(mut coeffs: Vec<GaussRat>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    pub fn zero() -> Self {
        Poly { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Poly::constant(GaussRat::one())
    }

    pub fn constant(c: GaussRat) -> Self {
        Poly::new(vec![c])
    }

    pub fn from_i64s(cs: &[i64]) -> Self {
        Poly::new(cs.iter().map(|&c| GaussRat::from_i64(c)).collect())
    }

    pub fn monomial(c: GaussRat, degree: usize) -> Self {
        let mut coeffs = vec![GaussRat::zero(); degree];
        coeffs.push(c);
        Poly::new(coeffs)
    }

    /// `z - p`
    pub fn linear(p: &GaussRat) -> Self {
        Poly::new(vec![-p, GaussRat::one()])
    }

    pub fn coeffs(&self) -> &[GaussRat] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.len() <= 1
    }

    /// Degree; the zero polynomial reports 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn coeff(&self, i: usize) -> GaussRat {
        self.coeffs.get(i).cloned().unwrap_or_else(GaussRat::zero)
    }

    pub fn lead(&self) -> GaussRat {
        self.coeffs.last().cloned().unwrap_or_else(GaussRat::zero)
    }

    pub fn scale(&self, c: &GaussRat) -> Self {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly::new(self.coeffs.iter().map(|a| a * c).collect())
    }

    pub fn scale_rat(&self, c: &Rat) -> Self {
        Poly::new(self.coeffs.iter().map(|a| a * c).collect())
    }

    pub fn monic(&self) -> Self {
        if self.is_zero() {
            return Poly::zero();
        }
        let inv = self.lead().inv();
        self.scale(&inv)
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Poly::one();
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// `(z - p)^e`, expanded through the binomial theorem.
    pub fn linear_pow(p: &GaussRat, e: u32) -> Self {
        let mut coeffs = Vec::with_capacity(e as usize + 1);
        let neg_p = -p;
        let mut binom = Rat::one();
        for k in 0..=e {
            // coefficient of z^k is C(e, k) (-p)^(e-k)
            coeffs.push(&neg_p.pow(e - k) * &binom);
            binom = binom * int((e - k) as i64) / int(k as i64 + 1);
        }
        Poly::new(coeffs)
    }

    pub fn eval(&self, z: &GaussRat) -> GaussRat {
        let mut acc = GaussRat::zero();
        for c in self.coeffs.iter().rev() {
            acc = &(&acc * z) + c;
        }
        acc
    }

    pub fn derivative(&self) -> Self {
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * &int(i as i64))
                .collect(),
        )
    }

    /// Synthetic division by `z - p`: returns quotient and remainder `self(p)`.
    pub fn div_linear(&self, p: &GaussRat) -> (Poly, GaussRat) {
        if self.is_zero() {
            return (Poly::zero(), GaussRat::zero());
        }
        let n = self.coeffs.len();
        let mut q = vec![GaussRat::zero(); n - 1];
        let mut acc = GaussRat::zero();
        for i in (0..n).rev() {
            acc = &(&acc * p) + &self.coeffs[i];
            if i > 0 {
                q[i - 1] = acc.clone();
            }
        }
        (Poly::new(q), acc)
    }

    /// Multiplicity of `p` as a root; `usize::MAX` for the zero polynomial.
    pub fn root_multiplicity(&self, p: &GaussRat) -> usize {
        if self.is_zero() {
            return usize::MAX;
        }
        let mut cur = self.clone();
        let mut m = 0;
        loop {
            let (q, r) = cur.div_linear(p);
            if !r.is_zero() {
                return m;
            }
            m += 1;
            cur = q;
        }
    }

    /// Strips every factor `z - p`, returning the cofactor and the multiplicity.
    pub fn strip_root(&self, p: &GaussRat) -> (Poly, usize) {
        let mut cur = self.clone();
        let mut m = 0;
        while !cur.is_zero() {
            let (q, r) = cur.div_linear(p);
            if !r.is_zero() {
                break;
            }
            m += 1;
            cur = q;
        }
        (cur, m)
    }

    /// Euclidean division; panics if `d` is zero.
    pub fn div_rem(&self, d: &Poly) -> (Poly, Poly) {
        assert!(!d.is_zero(), "polynomial division by zero");
        if self.coeffs.len() < d.coeffs.len() {
            return (Poly::zero(), self.clone());
        }
        let mut rem = self.coeffs.clone();
        let dl = d.coeffs.len();
        let lead_inv = d.lead().inv();
        let mut q = vec![GaussRat::zero(); rem.len() - dl + 1];
        for i in (0..q.len()).rev() {
            let c = &rem[i + dl - 1] * &lead_inv;
            if c.is_zero() {
                continue;
            }
            for (j, dc) in d.coeffs.iter().enumerate() {
                let t = dc * &c;
                rem[i + j] -= &t;
            }
            q[i] = c;
        }
        rem.truncate(dl - 1);
        (Poly::new(q), Poly::new(rem))
    }

    /// Division known to be exact.
    pub fn exact_div(&self, d: &Poly) -> Poly {
        let (q, r) = self.div_rem(d);
        debug_assert!(r.is_zero(), "inexact polynomial division");
        q
    }

    /// Monic greatest common divisor; `gcd(0, 0) = 0`.
    pub fn gcd(a: &Poly, b: &Poly) -> Poly {
        let mut a = a.monic();
        let mut b = b.monic();
        while !b.is_zero() {
            let (_, r) = a.div_rem(&b);
            a = b;
            b = r.monic();
        }
        a
    }

    /// Yun's square-free decomposition: `monic(self) = prod f_i^i` with each
    /// `f_i` square-free and pairwise coprime. Constant factors are omitted.
    pub fn square_free_decomposition(&self) -> Vec<(Poly, usize)> {
        let mut out = Vec::new();
        if self.is_constant() {
            return out;
        }
        let f = self.monic();
        let df = f.derivative();
        let a0 = Poly::gcd(&f, &df);
        let mut b = f.exact_div(&a0).monic();
        let mut c = df.exact_div(&a0);
        let mut d = &c - &b.derivative();
        let mut i = 1;
        while !b.is_constant() {
            let a = Poly::gcd(&b, &d);
            if !a.is_constant() {
                out.push((a.clone(), i));
            }
            b = b.exact_div(&a).monic();
            c = d.exact_div(&a);
            d = &c - &b.derivative();
            i += 1;
        }
        out
    }

    /// Coefficients of `self(p + t)` as a polynomial in `t`.
    pub fn taylor_shift(&self, p: &GaussRat) -> Poly {
        let mut out = Vec::with_capacity(self.coeffs.len());
        let mut cur = self.clone();
        while !cur.is_zero() {
            let (q, r) = cur.div_linear(p);
            out.push(r);
            cur = q;
        }
        Poly::new(out)
    }

    /// `t^deg * self(1/t)`.
    pub fn reversed(&self) -> Poly {
        let mut c = self.coeffs.clone();
        c.reverse();
        Poly::new(c)
    }

    pub fn to_c64(&self) -> Vec<Complex64> {
        self.coeffs.iter().map(GaussRat::to_c64).collect()
    }

    pub fn truncate(&self, len: usize) -> Poly {
        Poly::new(self.coeffs.iter().take(len).cloned().collect())
    }
}

pub fn eval_c64(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    coeffs
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c)
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| match i {
                0 => format!("({c})"),
                1 => format!("({c})z"),
                _ => format!("({c})z^{i}"),
            })
            .collect();
        write!(f, "{}", terms.join(" + "))
    }
}

impl<'a> Add<&'a Poly> for &'a Poly {
    type Output = Poly;
    fn add(self, o: &Poly) -> Poly {
        let n = self.coeffs.len().max(o.coeffs.len());
        Poly::new((0..n).map(|i| &self.coeff(i) + &o.coeff(i)).collect())
    }
}

impl<'a> Sub<&'a Poly> for &'a Poly {
    type Output = Poly;
    fn sub(self, o: &Poly) -> Poly {
        let n = self.coeffs.len().max(o.coeffs.len());
        Poly::new((0..n).map(|i| &self.coeff(i) - &o.coeff(i)).collect())
    }
}

impl<'a> Mul<&'a Poly> for &'a Poly {
    type Output = Poly;
    fn mul(self, o: &Poly) -> Poly {
        if self.is_zero() || o.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![GaussRat::zero(); self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.coeffs.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                let t = a * b;
                out[i + j] += &t;
            }
        }
        Poly::new(out)
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly::new(self.coeffs.iter().map(|c| -c).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat;
    use proptest::prelude::*;

    fn p(cs: &[i64]) -> Poly {
        Poly::from_i64s(cs)
    }

    #[test]
    fn division_and_gcd() {
        let a = &p(&[-1, 1]) * &p(&[2, 0, 1]); // (z-1)(z^2+2)
        let b = &p(&[-1, 1]) * &p(&[3, 1]); // (z-1)(z+3)
        assert_eq!(Poly::gcd(&a, &b), p(&[-1, 1]));
        let (q, r) = a.div_rem(&p(&[-1, 1]));
        assert!(r.is_zero());
        assert_eq!(q, p(&[2, 0, 1]));
    }

    #[test]
    fn linear_pow_matches_repeated_product() {
        let pt = GaussRat::new(rat(1, 2), int(-2));
        assert_eq!(Poly::linear_pow(&pt, 5), Poly::linear(&pt).pow(5));
        assert_eq!(Poly::linear_pow(&pt, 0), Poly::one());
    }

    #[test]
    fn square_free_parts() {
        // z^3 (z-1)^2 (z+2)
        let f = &(&p(&[0, 1]).pow(3) * &p(&[-1, 1]).pow(2)) * &p(&[2, 1]);
        let sf = f.square_free_decomposition();
        assert_eq!(sf, vec![(p(&[2, 1]), 1), (p(&[-1, 1]), 2), (p(&[0, 1]), 3)]);
    }

    #[test]
    fn multiplicity_and_shift() {
        let f = &p(&[-1, 1]).pow(3) * &p(&[5, 1]);
        assert_eq!(f.root_multiplicity(&GaussRat::one()), 3);
        assert_eq!(f.root_multiplicity(&GaussRat::from_i64(2)), 0);
        let shifted = f.taylor_shift(&GaussRat::one());
        // (t)^3 (t + 6)
        assert_eq!(shifted, p(&[0, 0, 0, 6, 1]));
    }

    fn arb_poly() -> impl Strategy<Value = Poly> {
        prop::collection::vec((-5i64..5, -3i64..3), 0..6).prop_map(|v| {
            Poly::new(
                v.into_iter()
                    .map(|(a, b)| GaussRat::new(int(a), int(b)))
                    .collect(),
            )
        })
    }

    proptest! {
        #[test]
        fn div_rem_reconstructs(a in arb_poly(), b in arb_poly()) {
            prop_assume!(!b.is_zero());
            let (q, r) = a.div_rem(&b);
            prop_assert_eq!(&(&q * &b) + &r, a);
            prop_assert!(r.is_zero() || r.degree() < b.degree());
        }

        #[test]
        fn square_free_product_recovers_monic(a in arb_poly(), b in arb_poly()) {
            let f = &(&a * &a) * &b;
            prop_assume!(!f.is_constant());
            let prod = f
                .square_free_decomposition()
                .into_iter()
                .fold(Poly::one(), |acc, (g, e)| &acc * &g.pow(e as u32));
            prop_assert_eq!(prod, f.monic());
        }
    }
}
