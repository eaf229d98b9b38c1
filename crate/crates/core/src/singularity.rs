//! Canonical exponents and indices of regular singularities.

use std::fmt;
use std::sync::Arc;

use num::{One, Signed, Zero};
use rayon::prelude::*;

use crate::curve::Curve;
use crate::error::{Error, Result};
use crate::gauss::GaussRat;
use crate::poly::Poly;
use crate::rat::{fmt_rat, int, Rat};
use crate::twisted::{BranchLocus, Point, TwistedFn};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Kind {
    Branch,
    Ramification,
    Unramified,
}

impl Kind {
    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Branch => "branch",
            Kind::Ramification => "ramification",
            Kind::Unramified => "unramified",
        }
    }

    pub fn parse(s: &str) -> Option<Kind> {
        match s {
            "branch" => Some(Kind::Branch),
            "ramification" => Some(Kind::Ramification),
            "unramified" => Some(Kind::Unramified),
            _ => None,
        }
    }

    pub fn of_gamma(gamma: &[Rat]) -> Kind {
        if gamma.iter().any(|g| !g.is_integer()) {
            Kind::Branch
        } else if gamma.iter().all(Zero::is_zero) {
            Kind::Unramified
        } else {
            Kind::Ramification
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SingularityDatum {
    pub point: Point,
    pub b: Vec<Rat>,
    pub gamma: Vec<Rat>,
    pub kind: Kind,
}

impl SingularityDatum {
    /// From the orders `o_0, ..., o_n` of the associated curves at a point.
    pub fn from_lambda_orders(point: Point, orders: &[Rat]) -> Result<SingularityDatum> {
        let mut b = Vec::with_capacity(orders.len());
        for (k, o) in orders.iter().enumerate() {
            b.push(if k == 0 {
                o.clone()
            } else {
                o - &orders[k - 1] + int(k as i64)
            });
        }
        Self::from_exponents(point, b)
    }

    /// From canonical exponents `b_0 < ... < b_n`.
    pub fn from_exponents(point: Point, b: Vec<Rat>) -> Result<SingularityDatum> {
        if b.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::NonIncreasingExponents(point.to_string()));
        }
        let gamma: Vec<Rat> = b.windows(2).map(|w| &w[1] - &w[0] - Rat::one()).collect();
        let kind = Kind::of_gamma(&gamma);
        Ok(SingularityDatum {
            point,
            b,
            gamma,
            kind,
        })
    }

    /// `sum_i b_i - n(n+1)/2`, the order of the Wronskian in the local coordinate.
    pub fn wronskian_order(&self) -> Rat {
        let n = self.b.len() as i64 - 1;
        self.b.iter().sum::<Rat>() - Rat::new((n * (n + 1)).into(), 2.into())
    }
}

impl fmt::Display for SingularityDatum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let g: Vec<String> = self.gamma.iter().map(fmt_rat).collect();
        write!(f, "{} {} gamma=({})", self.point, self.kind, g.join(", "))
    }
}

pub fn classify_at(c: &Curve, p: &Point) -> Result<SingularityDatum> {
    if let Point::Infinity = p {
        return classify_at_infinity(c);
    }
    c.require_nondegenerate()?;
    let orders = (0..=c.n())
        .map(|k| c.lambda_order_at(k, p))
        .collect::<Result<Vec<_>>>()?;
    SingularityDatum::from_lambda_orders(p.clone(), &orders)
}

pub fn classify_at_infinity(c: &Curve) -> Result<SingularityDatum> {
    c.require_nondegenerate()?;
    let w = c.invert_coordinate();
    let mut d = classify_at(&w, &Point::Finite(GaussRat::zero()))?;
    d.point = Point::Infinity;
    Ok(d)
}

/// Locus points, ramification points and infinity.
pub fn candidate_points(c: &Curve) -> Result<Vec<Point>> {
    let mut pts: Vec<Point> = c
        .locus()
        .points()
        .iter()
        .cloned()
        .map(Point::Finite)
        .collect();
    pts.extend(c.ramification_locus()?.into_iter().map(|r| r.point));
    pts.push(Point::Infinity);
    pts.sort_by(|a, b| a.display_cmp(b));
    Ok(pts)
}

/// Classification at every candidate point, unramified ones included.
pub fn classify_candidates(c: &Curve) -> Result<Vec<SingularityDatum>> {
    c.require_nondegenerate()?;
    let pts = candidate_points(c)?;
    pts.par_iter().map(|p| classify_at(c, p)).collect()
}

/// The singular points of `c`, sorted: exact points, numeric points, infinity.
pub fn classify_all(c: &Curve) -> Result<Vec<SingularityDatum>> {
    Ok(classify_candidates(c)?
        .into_iter()
        .filter(|d| d.kind != Kind::Unramified)
        .collect())
}

/// `sum_p (sum_i b_{p,i} - n(n+1)/2)` over the given data; equals `-n(n+1)`
/// when the data cover every candidate point.
pub fn divisor_balance(data: &[SingularityDatum]) -> Rat {
    data.iter().map(SingularityDatum::wronskian_order).sum()
}

/// `(beta, psi)` with `f = z^beta psi(z)`, `psi(0) != 0`, for a component
/// whose only possible twist point is 0.
pub fn power_form(f: &TwistedFn) -> Option<(Rat, Poly)> {
    if f.is_zero() {
        return None;
    }
    let zero = GaussRat::zero();
    for (j, p) in f.locus().points().iter().enumerate() {
        if *p != zero && (!f.twist()[j].is_zero() || f.denom_exp()[j] != 0) {
            return None;
        }
    }
    let (psi, ord) = f.numer().strip_root(&zero);
    let beta = match f.locus().index_of(&zero) {
        Some(j) => &f.twist()[j] + int(ord as i64) - int(f.denom_exp()[j] as i64),
        None => int(ord as i64),
    };
    Some((beta, psi))
}

/// Quasi-degrees `beta_i + deg psi_i` of the components.
pub fn quasi_degrees(c: &Curve) -> Result<Vec<Rat>> {
    c.components()
        .iter()
        .enumerate()
        .map(|(i, f)| {
            power_form(f)
                .map(|(b, psi)| b + int(psi.degree() as i64))
                .ok_or(Error::NotPurePowerForm(i))
        })
        .collect()
}

fn from_power_form(locus: &Arc<BranchLocus>, beta: &Rat, psi: &Poly) -> TwistedFn {
    let m = locus.len();
    match locus.index_of(&GaussRat::zero()) {
        Some(j) => {
            let mut twist = vec![Rat::zero(); m];
            twist[j] = beta.clone();
            TwistedFn::from_parts(locus.clone(), twist, psi.clone(), vec![0; m])
        }
        None => {
            let e = beta.to_integer();
            let shift = u32::try_from(&e).expect("integral non-negative exponent off the locus");
            let z = Poly::monomial(GaussRat::one(), shift as usize);
            TwistedFn::polynomial(locus.clone(), &z * psi)
        }
    }
}

/// Recombines the components of a curve of the form `z^{beta_i} psi_i` so
/// that the quasi-degrees become pairwise distinct. Returns `(c', T)` with
/// `c' = T c`.
pub fn normalize_quasi_degrees(c: &Curve) -> Result<(Curve, Vec<Vec<GaussRat>>)> {
    let m = c.components().len();
    let mut forms = Vec::with_capacity(m);
    for (i, f) in c.components().iter().enumerate() {
        forms.push(power_form(f).ok_or(Error::NotPurePowerForm(i))?);
    }
    let mut t: Vec<Vec<GaussRat>> = (0..m)
        .map(|i| {
            (0..m)
                .map(|j| if i == j { GaussRat::one() } else { GaussRat::zero() })
                .collect()
        })
        .collect();
    let qd = |f: &(Rat, Poly)| &f.0 + int(f.1.degree() as i64);
    loop {
        let tie = (0..m).find_map(|i| {
            let group: Vec<usize> = (0..m).filter(|&j| qd(&forms[j]) == qd(&forms[i])).collect();
            (group.len() > 1).then_some(group)
        });
        let Some(group) = tie else { break };
        let pivot = *group
            .iter()
            .max_by(|&&a, &&b| forms[a].0.cmp(&forms[b].0).then(a.cmp(&b)))
            .unwrap();
        for &i in &group {
            if i == pivot {
                continue;
            }
            let gap = (&forms[pivot].0 - &forms[i].0).to_integer();
            let gap = usize::try_from(&gap).expect("quasi-degree ties have integral gaps");
            let coef = &forms[i].1.lead() / &forms[pivot].1.lead();
            let shifted = &Poly::monomial(coef.clone(), gap) * &forms[pivot].1;
            let reduced = &forms[i].1 - &shifted;
            if reduced.is_zero() {
                return Err(Error::DegenerateCurve);
            }
            let (psi, ord) = reduced.strip_root(&GaussRat::zero());
            forms[i] = (&forms[i].0 + int(ord as i64), psi);
            let prow = t[pivot].clone();
            for (x, y) in t[i].iter_mut().zip(&prow) {
                *x -= &(&coef * y);
            }
        }
    }
    let locus = c.locus().clone();
    let comps = forms.iter().map(|(b, psi)| from_power_form(&locus, b, psi)).collect();
    Ok((Curve::new(comps)?, t))
}

/// Data at infinity read off the sorted quasi-degrees of a curve whose
/// quasi-degrees are pairwise distinct.
pub fn infinity_from_quasi_degrees(c: &Curve) -> Result<SingularityDatum> {
    let mut exps: Vec<Rat> = quasi_degrees(c)?.into_iter().map(|q| -q).collect();
    exps.sort();
    SingularityDatum::from_exponents(Point::Infinity, exps)
}

/// True when some `gamma_j` is negative; only possible at branch points.
pub fn has_negative_gamma(d: &SingularityDatum) -> bool {
    d.gamma.iter().any(Signed::is_negative)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat;
    use proptest::prelude::*;

    fn g(v: i64) -> GaussRat {
        GaussRat::from_i64(v)
    }

    fn poly_curve(locus: &[i64], comps: &[&[i64]]) -> Curve {
        let l = Arc::new(BranchLocus::new(locus.iter().map(|&p| g(p)).collect()).unwrap());
        Curve::new(
            comps
                .iter()
                .map(|c| TwistedFn::polynomial(l.clone(), Poly::from_i64s(c)))
                .collect(),
        )
        .unwrap()
    }

    fn ints(v: &[i64]) -> Vec<Rat> {
        v.iter().map(|&x| int(x)).collect()
    }

    #[test]
    fn ramified_monomial_curve_at_zero() {
        for n in 2..=4usize {
            let mut exps: Vec<i64> = (0..n as i64).collect();
            exps.push(n as i64 + 1);
            let c = Curve::power_curve(&ints(&exps)).unwrap();
            let d = classify_at(&c, &Point::Finite(g(0))).unwrap();
            let mut expect = vec![int(0); n];
            expect[n - 1] = int(1);
            assert_eq!(d.gamma, expect);
            assert_eq!(d.kind, Kind::Ramification);
        }
    }

    #[test]
    fn half_power_is_branch_at_both_ends() {
        let c = Curve::power_curve(&[int(0), rat(1, 2)]).unwrap();
        let d = classify_at(&c, &Point::Finite(g(0))).unwrap();
        assert_eq!(d.b, vec![int(0), rat(1, 2)]);
        assert_eq!(d.gamma, vec![rat(-1, 2)]);
        assert_eq!(d.kind, Kind::Branch);
        let inf = classify_at_infinity(&c).unwrap();
        assert_eq!(inf.gamma, vec![rat(-1, 2)]);
        let all = classify_all(&c).unwrap();
        assert_eq!(all.len(), 2);
        assert_eq!(all[0].point, Point::Finite(g(0)));
        assert_eq!(all[1].point, Point::Infinity);
        assert!(all.iter().all(|d| d.kind == Kind::Branch));
    }

    #[test]
    fn rational_normal_curve_is_unramified() {
        let c = poly_curve(&[], &[&[1], &[0, 1], &[0, 0, 1]]);
        for p in [Point::Finite(g(3)), Point::Finite(g(0)), Point::Infinity] {
            let d = classify_at(&c, &p).unwrap();
            assert_eq!(d.gamma, ints(&[0, 0]));
            assert_eq!(d.kind, Kind::Unramified);
        }
        assert!(classify_all(&c).unwrap().is_empty());
        let line = poly_curve(&[], &[&[1], &[0, 1]]);
        assert_eq!(classify_at_infinity(&line).unwrap().gamma, ints(&[0]));
    }

    #[test]
    fn cubic_curve_singularities() {
        let c = poly_curve(&[0], &[&[1], &[0, 1], &[0, 0, 0, 1]]);
        let all = classify_all(&c).unwrap();
        assert_eq!(all.len(), 2);
        assert_eq!(all[0].gamma, ints(&[0, 1]));
        assert_eq!(all[1].point, Point::Infinity);
        assert_eq!(all[1].b, ints(&[-3, -1, 0]));
        assert_eq!(all[1].gamma, ints(&[1, 0]));
    }

    #[test]
    fn global_balance_on_line() {
        let c = poly_curve(&[], &[&[1], &[0, 1]]);
        let data = classify_candidates(&c).unwrap();
        assert_eq!(divisor_balance(&data), int(-2));
    }

    #[test]
    fn quasi_degree_examples() {
        let c = poly_curve(&[], &[&[1], &[1, 1]]);
        let (c2, t) = normalize_quasi_degrees(&c).unwrap();
        assert_eq!(c2, c);
        assert_eq!(t, vec![vec![g(1), g(0)], vec![g(0), g(1)]]);

        let c = poly_curve(&[], &[&[1, 1], &[0, 1]]);
        let (c2, t) = normalize_quasi_degrees(&c).unwrap();
        assert_eq!(c2, poly_curve(&[], &[&[1], &[0, 1]]));
        assert_eq!(c.recombine(&t).unwrap(), c2);

        let l = Arc::new(BranchLocus::new(vec![g(0)]).unwrap());
        let half = TwistedFn::locus_power(l.clone(), 0, rat(1, 2));
        let a = half.mul(&TwistedFn::polynomial(l.clone(), Poly::from_i64s(&[1, 1]))).unwrap();
        let b = TwistedFn::locus_power(l.clone(), 0, rat(3, 2));
        let c = Curve::new(vec![a, b.clone()]).unwrap();
        let (c2, _) = normalize_quasi_degrees(&c).unwrap();
        assert_eq!(c2, Curve::new(vec![half, b]).unwrap());
        assert_eq!(quasi_degrees(&c2).unwrap(), vec![rat(1, 2), rat(3, 2)]);
    }

    #[test]
    fn non_power_form_rejected() {
        let c = poly_curve(&[1], &[&[1], &[0, 1]]);
        assert!(normalize_quasi_degrees(&c).is_ok());
        let l = Arc::new(BranchLocus::new(vec![g(1)]).unwrap());
        let c = Curve::new(vec![
            TwistedFn::one(l.clone()),
            TwistedFn::locus_power(l, 0, rat(1, 2)),
        ])
        .unwrap();
        assert_eq!(normalize_quasi_degrees(&c), Err(Error::NotPurePowerForm(1)));
    }

    proptest! {
        #[test]
        fn order_sums_round_trip(a in 1i64..5, b in 1i64..5, p in 1i64..4) {
            let c = poly_curve(&[0], &[&[1], &[0, a, 0, 1], &[p, 0, 0, 0, b, 1]]);
            prop_assume!(c.nondegenerate());
            for d in classify_candidates(&c).unwrap() {
                let n = c.n();
                let mut acc = Rat::zero();
                for k in 0..=n {
                    acc += &d.b[k];
                    let o = if d.point == Point::Infinity {
                        c.invert_coordinate().lambda_order_at(k, &Point::Finite(GaussRat::zero())).unwrap()
                    } else {
                        c.lambda_order_at(k, &d.point).unwrap()
                    };
                    prop_assert_eq!(&acc - int((k * (k + 1) / 2) as i64), o);
                }
            }
        }

        #[test]
        fn global_balance(a in -3i64..4, b in 1i64..4, p in 1i64..4) {
            let c = poly_curve(&[1], &[&[1, a], &[0, 1, 0, b], &[p, 0, 0, 0, 0, 1]]);
            prop_assume!(c.nondegenerate());
            let data = classify_candidates(&c).unwrap();
            prop_assert_eq!(divisor_balance(&data), int(-6));
        }
    }
}
