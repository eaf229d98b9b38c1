//! Curves `[f_0 : ... : f_n]` of twisted rational functions and their
//! associated curves `f ^ f' ^ ... ^ f^(k)`.

use std::sync::{Arc, OnceLock};

use num::Zero;

use crate::error::{Error, Result};
use crate::gauss::GaussRat;
use crate::poly::Poly;
use crate::rat::{int, to_f64, Rat};
use crate::roots::{monic_c64, relative_residual, split_square_free};
use crate::twisted::{BranchLocus, NumericPoint, Point, TwistedFn};

/// Roots closer than this to a locus point are rejected as ill-conditioned.
pub const LOCUS_SEPARATION: f64 = 1e-9;

/// Coordinates of `Lambda_k`, indexed by the lexicographically ordered
/// `(k+1)`-subsets of `{0, ..., n}`.
#[derive(Clone, Debug, PartialEq)]
pub struct AssociatedCurve {
    pub k: usize,
    pub subsets: Vec<Vec<usize>>,
    pub coords: Vec<TwistedFn>,
}

impl AssociatedCurve {
    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(TwistedFn::is_zero)
    }
}

/// A point where `Lambda_n` vanishes off the branch locus.
#[derive(Clone, Debug, PartialEq)]
pub struct RamificationPoint {
    pub point: Point,
    pub multiplicity: usize,
}

#[derive(Clone, Debug)]
pub struct Curve {
    components: Vec<TwistedFn>,
    weights: Vec<f64>,
    assoc: OnceLock<Vec<AssociatedCurve>>,
}

impl PartialEq for Curve {
    fn eq(&self, other: &Self) -> bool {
        self.components == other.components && self.weights == other.weights
    }
}

/// All `size`-subsets of `0..m` in lexicographic order.
pub fn subsets(m: usize, size: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, m: usize, size: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for i in start..m {
            cur.push(i);
            rec(i + 1, m, size, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, m, size, &mut Vec::new(), &mut out);
    out
}

impl Curve {
    pub fn new(components: Vec<TwistedFn>) -> Result<Curve> {
        if components.len() < 2 {
            return Err(Error::invalid("a curve needs at least two components"));
        }
        if components.iter().any(|c| !c.same_locus(&components[0])) {
            return Err(Error::LocusMismatch);
        }
        if components.iter().all(TwistedFn::is_zero) {
            return Err(Error::invalid("all components vanish"));
        }
        let locus = components[0].locus().clone();
        // share one allocation of the locus
        let components = components
            .into_iter()
            .map(|c| {
                TwistedFn::from_parts(
                    locus.clone(),
                    c.twist().to_vec(),
                    c.numer().clone(),
                    c.denom_exp().iter().map(|&k| k as i64).collect(),
                )
            })
            .collect::<Vec<_>>();
        let weights = vec![1.0; components.len()];
        Ok(Curve {
            components,
            weights,
            assoc: OnceLock::new(),
        })
    }

    /// Attaches positive modulus factors `|f_k| -> w_k |f_k|` used by the
    /// metric evaluation; exact order data ignores them.
    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Curve> {
        if weights.len() != self.components.len() {
            return Err(Error::invalid("one weight per component required"));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::invalid("weights must be positive and finite"));
        }
        self.weights = weights;
        Ok(self)
    }

    /// `(z^{e_0}, ..., z^{e_n})` over the locus `{0}`.
    pub fn power_curve(exps: &[Rat]) -> Result<Curve> {
        let locus = Arc::new(BranchLocus::new(vec![GaussRat::zero()])?);
        Curve::new(
            exps.iter()
                .map(|e| TwistedFn::locus_power(locus.clone(), 0, e.clone()))
                .collect(),
        )
    }

    pub fn n(&self) -> usize {
        self.components.len() - 1
    }

    pub fn components(&self) -> &[TwistedFn] {
        &self.components
    }

    pub fn locus(&self) -> &Arc<BranchLocus> {
        self.components[0].locus()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn has_unit_weights(&self) -> bool {
        self.weights.iter().all(|&w| w == 1.0)
    }

    /// `table[r][j] = f_j^{(r)}` for `r = 0..=n`.
    pub fn derivative_table(&self) -> Vec<Vec<TwistedFn>> {
        let mut rows = vec![self.components.clone()];
        for _ in 0..self.n() {
            let next = rows.last().unwrap().iter().map(TwistedFn::derivative).collect();
            rows.push(next);
        }
        rows
    }

    fn compute_associated(&self) -> Vec<AssociatedCurve> {
        let m = self.components.len();
        let locus = self.locus().clone();
        let pts = locus.points();
        let table = self.derivative_table();

        // Lift every column to a common denominator.
        let mut lifted: Vec<Vec<Poly>> = vec![vec![Poly::zero(); m]; m];
        let mut col_denom: Vec<Vec<i64>> = vec![vec![0; pts.len()]; m];
        for j in 0..m {
            for i in 0..pts.len() {
                col_denom[j][i] = (0..m)
                    .map(|r| table[r][j].denom_exp()[i] as i64)
                    .max()
                    .unwrap_or(0);
            }
            for r in 0..m {
                let e = &table[r][j];
                if e.is_zero() {
                    continue;
                }
                let mut p = e.numer().clone();
                for (i, pt) in pts.iter().enumerate() {
                    let extra = col_denom[j][i] - e.denom_exp()[i] as i64;
                    if extra > 0 {
                        p = &p * &Poly::linear_pow(pt, extra as u32);
                    }
                }
                lifted[r][j] = p;
            }
        }

        // minor(mask) = det(rows 0..|mask|, columns mask), expanded along the last row
        let mut minors: Vec<Poly> = vec![Poly::zero(); 1 << m];
        minors[0] = Poly::one();
        for mask in 1usize..(1 << m) {
            let r = mask.count_ones() as usize - 1;
            let mut acc = Poly::zero();
            let mut pos = 0;
            for c in 0..m {
                if mask & (1 << c) == 0 {
                    continue;
                }
                let sub = &minors[mask & !(1 << c)];
                if !lifted[r][c].is_zero() && !sub.is_zero() {
                    let term = &lifted[r][c] * sub;
                    acc = if (r + pos) % 2 == 0 { &acc + &term } else { &acc - &term };
                }
                pos += 1;
            }
            minors[mask] = acc;
        }

        (0..m)
            .map(|k| {
                let subsets = subsets(m, k + 1);
                let coords = subsets
                    .iter()
                    .map(|s| {
                        if s.iter().any(|&j| self.components[j].is_zero()) {
                            return TwistedFn::zero(locus.clone());
                        }
                        let mask = s.iter().fold(0usize, |acc, &j| acc | (1 << j));
                        let mut twist = vec![Rat::zero(); pts.len()];
                        let mut denom = vec![0i64; pts.len()];
                        for &j in s {
                            for i in 0..pts.len() {
                                twist[i] += &self.components[j].twist()[i];
                                denom[i] += col_denom[j][i];
                            }
                        }
                        TwistedFn::from_parts(locus.clone(), twist, minors[mask].clone(), denom)
                    })
                    .collect();
                AssociatedCurve { k, subsets, coords }
            })
            .collect()
    }

    /// `Lambda_k`; `Lambda_0` is the curve itself.
    pub fn associated(&self, k: usize) -> &AssociatedCurve {
        assert!(k <= self.n(), "level {k} exceeds n = {}", self.n());
        &self.assoc.get_or_init(|| self.compute_associated())[k]
    }

    /// The Wronskian `Lambda_n`.
    pub fn wronskian(&self) -> &TwistedFn {
        &self.associated(self.n()).coords[0]
    }

    pub fn nondegenerate(&self) -> bool {
        !self.wronskian().is_zero()
    }

    pub fn require_nondegenerate(&self) -> Result<()> {
        if self.nondegenerate() {
            Ok(())
        } else {
            Err(Error::DegenerateCurve)
        }
    }

    /// Vanishing order of `Lambda_k` at `p`: the minimum order of its coordinates.
    pub fn lambda_order_at(&self, k: usize, p: &Point) -> Result<Rat> {
        self.require_nondegenerate()?;
        if k > self.n() {
            return Err(Error::invalid(format!("level {k} exceeds n = {}", self.n())));
        }
        let mut best: Option<Rat> = None;
        for c in &self.associated(k).coords {
            if c.is_zero() {
                continue;
            }
            let o = c.order_at(p)?;
            best = Some(match best {
                Some(b) if b <= o => b,
                _ => o,
            });
        }
        best.ok_or(Error::DegenerateCurve)
    }

    /// Zeros of `Lambda_n` away from the branch locus, with multiplicities.
    pub fn ramification_locus(&self) -> Result<Vec<RamificationPoint>> {
        self.require_nondegenerate()?;
        let locus = self.locus();
        let mut q = self.wronskian().numer().clone();
        for p in locus.points() {
            q = q.strip_root(p).0;
        }
        let mut out = Vec::new();
        for (factor, multiplicity) in q.square_free_decomposition() {
            if factor.is_constant() {
                continue;
            }
            let split = split_square_free(&factor)?;
            for r in split.exact {
                out.push(RamificationPoint {
                    point: Point::Finite(r),
                    multiplicity,
                });
            }
            let rest_c = monic_c64(&split.rest);
            for (idx, z) in split.numeric.iter().enumerate() {
                for p in locus.points() {
                    let distance = (z - p.to_c64()).norm();
                    if distance < LOCUS_SEPARATION {
                        return Err(Error::IllConditionedRoot {
                            approx: format!("{z}"),
                            locus: p.clone(),
                            distance,
                        });
                    }
                }
                let residual = relative_residual(&rest_c, *z);
                out.push(RamificationPoint {
                    point: Point::Numeric(NumericPoint::new(
                        split.rest.clone(),
                        split.numeric.clone(),
                        idx,
                        residual,
                    )),
                    multiplicity,
                });
            }
        }
        out.sort_by(|a, b| a.point.display_cmp(&b.point));
        Ok(out)
    }

    /// The same curve in the coordinate `w = 1/z`. The moduli of the dropped
    /// branch constants are folded into the weights.
    pub fn invert_coordinate(&self) -> Curve {
        let new_locus = Arc::new(self.locus().inverted());
        let components = self
            .components
            .iter()
            .map(|c| c.invert_coordinate(&new_locus))
            .collect();
        let weights = self
            .components
            .iter()
            .zip(&self.weights)
            .map(|(c, w)| w * inversion_modulus(c))
            .collect();
        Curve {
            components,
            weights,
            assoc: OnceLock::new(),
        }
    }

    /// Divides out the common factors `(z - p_j)^{e_j}` at locus points and
    /// the gcd of the numerators.
    pub fn reduced(&self) -> Curve {
        let locus = self.locus().clone();
        let mut comps = self.components.clone();
        for (j, p) in locus.points().iter().enumerate() {
            let e = comps
                .iter()
                .filter(|c| !c.is_zero())
                .map(|c| c.order_at(&Point::Finite(p.clone())).unwrap())
                .min()
                .unwrap_or_else(|| int(0));
            if e.is_zero() {
                continue;
            }
            let shift = TwistedFn::locus_power(locus.clone(), j, -e);
            comps = comps.iter().map(|c| c.mul(&shift).unwrap()).collect();
        }
        let g = comps
            .iter()
            .filter(|c| !c.is_zero())
            .fold(Poly::zero(), |acc, c| Poly::gcd(&acc, c.numer()));
        if g.degree() > 0 {
            comps = comps
                .iter()
                .map(|c| {
                    TwistedFn::from_parts(
                        locus.clone(),
                        c.twist().to_vec(),
                        c.numer().exact_div(&g),
                        c.denom_exp().iter().map(|&k| k as i64).collect(),
                    )
                })
                .collect();
        }
        Curve {
            components: comps,
            weights: self.weights.clone(),
            assoc: OnceLock::new(),
        }
    }

    /// Componentwise `T * c` for a constant square matrix `T`.
    pub fn recombine(&self, t: &[Vec<GaussRat>]) -> Result<Curve> {
        let m = self.components.len();
        if t.len() != m || t.iter().any(|row| row.len() != m) {
            return Err(Error::invalid("matrix size must match the number of components"));
        }
        if !self.has_unit_weights() {
            return Err(Error::invalid("recombination requires unit weights"));
        }
        let locus = self.locus().clone();
        let mut comps = Vec::with_capacity(m);
        for row in t {
            let mut acc = TwistedFn::zero(locus.clone());
            for (c, f) in row.iter().zip(&self.components) {
                if c.is_zero() {
                    continue;
                }
                acc = acc.add(&f.scale(c))?;
            }
            comps.push(acc);
        }
        Curve::new(comps)
    }
}

/// `prod_{p_j != 0} |p_j|^{mu_j}`: modulus of the constant dropped by
/// [`TwistedFn::invert_coordinate`].
pub fn inversion_modulus(f: &TwistedFn) -> f64 {
    f.locus()
        .points()
        .iter()
        .zip(f.twist())
        .filter(|(p, mu)| !p.is_zero() && !mu.is_zero())
        .map(|(p, mu)| p.to_c64().norm().powf(to_f64(mu)))
        .product()
}
