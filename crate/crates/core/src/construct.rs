//! Curves with prescribed singularity data at 0, at finitely many
//! ramification points, and the resulting data at infinity.

use std::sync::Arc;

use num::{One, Zero};

use crate::curve::Curve;
use crate::error::{Error, Result};
use crate::gauss::GaussRat;
use crate::poly::Poly;
use crate::rat::{fmt_rat, int, Rat};
use crate::twisted::{solve_euler_ode, BranchLocus, TwistedFn};

/// Largest number of compositions [`enumerate_degree_vectors`] will list.
pub const MAX_ENUMERATION: u128 = 2_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct PrescribedData {
    pub n: usize,
    pub gamma0: Vec<Rat>,
    pub points: Vec<GaussRat>,
    pub ram: Vec<Vec<u32>>,
}

impl PrescribedData {
    pub fn new(
        n: usize,
        gamma0: Vec<Rat>,
        points: Vec<GaussRat>,
        ram: Vec<Vec<u32>>,
    ) -> Result<PrescribedData> {
        let d = PrescribedData {
            n,
            gamma0,
            points,
            ram,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::invalid("n must be at least 1"));
        }
        if self.gamma0.len() != self.n {
            return Err(Error::invalid(format!(
                "gamma0 has {} entries, expected {}",
                self.gamma0.len(),
                self.n
            )));
        }
        betas_from_gammas(&self.gamma0)?;
        if self.ram.len() != self.points.len() {
            return Err(Error::invalid("one ram row per point required"));
        }
        for (i, p) in self.points.iter().enumerate() {
            if p.is_zero() {
                return Err(Error::invalid(format!("point {i} is 0")));
            }
            if self.points[..i].contains(p) {
                return Err(Error::invalid(format!("point {p} repeated")));
            }
            if self.ram[i].len() != self.n {
                return Err(Error::invalid(format!("ram row {i} must have {} entries", self.n)));
            }
        }
        Ok(())
    }

    pub fn m(&self) -> usize {
        self.points.len()
    }

    /// `P_k = prod_l (z - z_l)^{gamma_{l,k}}` for `k = 1..=n`.
    fn level_poly(&self, k: usize) -> Poly {
        self.points
            .iter()
            .zip(&self.ram)
            .fold(Poly::one(), |acc, (z, row)| &acc * &Poly::linear_pow(z, row[k - 1]))
    }
}

/// `beta_0 = 0`, `beta_j - beta_{j-1} = 1 + gamma_j`.
pub fn betas_from_gammas(gamma: &[Rat]) -> Result<Vec<Rat>> {
    let mut betas = vec![Rat::zero()];
    for (j, g) in gamma.iter().enumerate() {
        if *g <= -Rat::one() {
            return Err(Error::GammaOutOfRange {
                index: j + 1,
                value: fmt_rat(g),
            });
        }
        let next = betas.last().unwrap() + Rat::one() + g;
        betas.push(next);
    }
    Ok(betas)
}

/// Result of the construction: `f_0 = 1`, `f_j = z^{beta_j} phi_j`.
#[derive(Clone, Debug)]
pub struct Construction {
    pub betas: Vec<Rat>,
    pub phis: Vec<Poly>,
    pub curve: Curve,
}

impl Construction {
    pub fn degrees(&self) -> Vec<usize> {
        self.phis.iter().map(Poly::degree).collect()
    }
}

pub fn construct(d: &PrescribedData) -> Result<Construction> {
    d.validate()?;
    let n = d.n;
    let betas = betas_from_gammas(&d.gamma0)?;
    let levels: Vec<Poly> = (1..=n).map(|k| d.level_poly(k)).collect();
    let mut phis = vec![Poly::one()];
    for j in 1..=n {
        let mut phi = Poly::one();
        for k in (1..=j).rev() {
            let alpha = &betas[j] - &betas[k - 1];
            phi = solve_euler_ode(&alpha, &(&levels[k - 1] * &phi))?;
        }
        phis.push(phi);
    }
    let locus = Arc::new(BranchLocus::new(vec![GaussRat::zero()])?);
    let comps = betas
        .iter()
        .zip(&phis)
        .map(|(b, phi)| TwistedFn::from_parts(locus.clone(), vec![b.clone()], phi.clone(), vec![0]))
        .collect();
    let curve = Curve::new(comps)?;
    Ok(Construction { betas, phis, curve })
}

pub fn construct_curve(d: &PrescribedData) -> Result<Curve> {
    Ok(construct(d)?.curve)
}

/// `deg phi_k = sum_{j <= k} sum_l gamma_{l,j}`.
pub fn expected_degrees(d: &PrescribedData) -> Vec<usize> {
    (0..=d.n)
        .map(|k| {
            d.ram
                .iter()
                .map(|row| row[..k].iter().map(|&g| g as usize).sum::<usize>())
                .sum()
        })
        .collect()
}

/// `A = sum_l sum_j (n + 1 - j) gamma_{l,j}`.
pub fn total_ram_weight(d: &PrescribedData) -> u64 {
    d.ram
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .map(|(j, &g)| (d.n - j) as u64 * g as u64)
                .sum::<u64>()
        })
        .sum()
}

/// `ord_{z_l} Lambda_k = k gamma_{l,1} + (k-1) gamma_{l,2} + ... + gamma_{l,k}`.
pub fn expected_lambda_order(row: &[u32], k: usize) -> u64 {
    row[..k]
        .iter()
        .enumerate()
        .map(|(j, &g)| (k - j) as u64 * g as u64)
        .sum()
}

/// `gamma_{inf,i} = beta_{n+1-i} - beta_{n-i} - 1 + sum_l gamma_{l,n+1-i}`.
pub fn infinity_data_closed_form(d: &PrescribedData) -> Result<Vec<Rat>> {
    let betas = betas_from_gammas(&d.gamma0)?;
    let n = d.n;
    Ok((1..=n)
        .map(|i| {
            let col = n + 1 - i;
            let ram: u64 = d.ram.iter().map(|row| row[col - 1] as u64).sum();
            &betas[col] - &betas[col - 1] - Rat::one() + int(ram as i64)
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct DegreeCandidate {
    pub degrees: Vec<u64>,
    pub gamma_infinity: Vec<Rat>,
}

/// `binom(a, b)` as `u128`, saturating.
pub fn binomial_u128(a: u64, b: u64) -> u128 {
    if b > a {
        return 0;
    }
    let b = b.min(a - b);
    let mut acc: u128 = 1;
    for i in 0..b {
        acc = acc.saturating_mul((a - i) as u128) / (i as u128 + 1);
    }
    acc
}

/// Upper bound `binom(A + n + 1, n)` on the number of admissible degree vectors.
pub fn degree_vector_bound(d: &PrescribedData) -> u128 {
    binomial_u128(total_ram_weight(d) + d.n as u64 + 1, d.n as u64)
}

/// All `(d_0, ..., d_n)` with `sum d_j = A` and pairwise distinct
/// quasi-degrees `beta_j + d_j`, each with the induced data at infinity.
pub fn enumerate_degree_vectors(d: &PrescribedData) -> Result<Vec<DegreeCandidate>> {
    d.validate()?;
    let betas = betas_from_gammas(&d.gamma0)?;
    let a = total_ram_weight(d);
    let parts = d.n + 1;
    if binomial_u128(a + d.n as u64, d.n as u64) > MAX_ENUMERATION {
        return Err(Error::invalid(format!(
            "too many degree vectors to enumerate (A = {a}, n = {})",
            d.n
        )));
    }
    let mut out = Vec::new();
    let mut cur = vec![0u64; parts];
    fn rec(
        i: usize,
        left: u64,
        cur: &mut Vec<u64>,
        betas: &[Rat],
        out: &mut Vec<DegreeCandidate>,
    ) {
        let parts = cur.len();
        if i + 1 == parts {
            cur[i] = left;
            let qd: Vec<Rat> = (0..parts)
                .map(|j| &betas[j] + int(cur[j] as i64))
                .collect();
            for x in 0..parts {
                for y in x + 1..parts {
                    if qd[x] == qd[y] {
                        return;
                    }
                }
            }
            let mut exps: Vec<Rat> = qd.iter().map(|q| -q).collect();
            exps.sort();
            let gamma_infinity = exps.windows(2).map(|w| &w[1] - &w[0] - Rat::one()).collect();
            out.push(DegreeCandidate {
                degrees: cur.clone(),
                gamma_infinity,
            });
            return;
        }
        for v in 0..=left {
            cur[i] = v;
            rec(i + 1, left - v, cur, betas, out);
        }
    }
    rec(0, a, &mut cur, &betas, &mut out);
    Ok(out)
}

/// Lists the entries of `gamma0` that violate `gamma > -1`.
pub fn invalid_gamma_entries(gamma: &[Rat]) -> Vec<usize> {
    gamma
        .iter()
        .enumerate()
        .filter(|(_, g)| **g <= -Rat::one())
        .map(|(i, _)| i + 1)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat;
    use crate::singularity::{classify_at, classify_at_infinity, power_form, Kind};
    use crate::twisted::Point;

    fn g(v: i64) -> GaussRat {
        GaussRat::from_i64(v)
    }

    fn exponents(c: &Curve) -> Vec<Rat> {
        c.components()
            .iter()
            .map(|f| {
                let (beta, psi) = power_form(f).unwrap();
                assert!(psi.is_constant());
                beta
            })
            .collect()
    }

    #[test]
    fn betas() {
        assert_eq!(betas_from_gammas(&[int(0), int(0)]).unwrap(), vec![int(0), int(1), int(2)]);
        assert_eq!(
            betas_from_gammas(&[rat(1, 2), rat(1, 2)]).unwrap(),
            vec![int(0), rat(3, 2), int(3)]
        );
        assert_eq!(betas_from_gammas(&[rat(-1, 2)]).unwrap(), vec![int(0), rat(1, 2)]);
        assert_eq!(
            betas_from_gammas(&[int(0), int(-1)]),
            Err(Error::GammaOutOfRange {
                index: 2,
                value: "-1/1".into()
            })
        );
    }

    #[test]
    fn single_component_without_ramification() {
        let d = PrescribedData::new(1, vec![rat(1, 3)], vec![], vec![]).unwrap();
        let c = construct_curve(&d).unwrap();
        assert_eq!(exponents(&c), vec![int(0), rat(4, 3)]);
        assert_eq!(c.components()[1].numer(), &Poly::new(vec![g(0), GaussRat::real(rat(3, 4))]));
        let z = classify_at(&c, &Point::Finite(g(0))).unwrap();
        assert_eq!(z.kind, Kind::Branch);
        assert_eq!(classify_at_infinity(&c).unwrap().kind, Kind::Branch);
    }

    #[test]
    fn n2_one_point() {
        let d = PrescribedData::new(2, vec![rat(1, 2), rat(1, 2)], vec![g(1)], vec![vec![1, 1]])
            .unwrap();
        let k = construct(&d).unwrap();
        assert_eq!(k.degrees(), vec![0, 1, 2]);
        assert_eq!(expected_degrees(&d), vec![0, 1, 2]);
        let one = Point::Finite(g(1));
        assert_eq!(k.curve.lambda_order_at(1, &one).unwrap(), int(1));
        assert_eq!(k.curve.lambda_order_at(2, &one).unwrap(), int(3));
        assert_eq!(total_ram_weight(&d), 3);
        assert_eq!(k.degrees().iter().sum::<usize>(), 3);
        assert_eq!(
            classify_at_infinity(&k.curve).unwrap().gamma,
            infinity_data_closed_form(&d).unwrap()
        );
        assert!(k.phis.iter().all(|p| !p.coeff(0).is_zero()));
    }

    #[test]
    fn no_ramification_gives_power_curve() {
        let d = PrescribedData::new(2, vec![rat(1, 3), rat(2, 5)], vec![], vec![]).unwrap();
        let c = construct_curve(&d).unwrap();
        let b = betas_from_gammas(&d.gamma0).unwrap();
        assert_eq!(exponents(&c), b);
        assert_eq!(
            infinity_data_closed_form(&d).unwrap(),
            vec![rat(2, 5), rat(1, 3)]
        );
    }

    #[test]
    fn closed_form_with_one_point() {
        let d = PrescribedData::new(1, vec![rat(1, 4)], vec![g(2)], vec![vec![3]]).unwrap();
        assert_eq!(infinity_data_closed_form(&d).unwrap(), vec![rat(13, 4)]);
        assert_eq!(total_ram_weight(&PrescribedData::new(1, vec![int(0)], vec![], vec![]).unwrap()), 0);
    }

    #[test]
    fn enumeration_examples() {
        let d0 = PrescribedData::new(2, vec![int(0), int(0)], vec![], vec![]).unwrap();
        let e = enumerate_degree_vectors(&d0).unwrap();
        assert_eq!(e.len(), 1);
        assert_eq!(e[0].degrees, vec![0, 0, 0]);

        // beta = (0, 3/2), A = 1
        let d = PrescribedData::new(1, vec![rat(1, 2)], vec![g(1)], vec![vec![1]]).unwrap();
        let e = enumerate_degree_vectors(&d).unwrap();
        let degs: Vec<_> = e.iter().map(|c| c.degrees.clone()).collect();
        assert_eq!(degs, vec![vec![0, 1], vec![1, 0]]);
        assert!(e.len() as u128 <= degree_vector_bound(&d));
        assert_eq!(degree_vector_bound(&d), 3);
    }

    #[test]
    fn validation_errors() {
        assert!(PrescribedData::new(1, vec![int(0)], vec![g(0)], vec![vec![1]]).is_err());
        assert!(PrescribedData::new(1, vec![int(0)], vec![g(1), g(1)], vec![vec![1], vec![1]]).is_err());
        assert!(PrescribedData::new(2, vec![int(0)], vec![], vec![]).is_err());
        assert!(PrescribedData::new(1, vec![int(0)], vec![g(1)], vec![vec![1, 2]]).is_err());
        assert_eq!(invalid_gamma_entries(&[int(0), int(-1), int(-3)]), vec![2, 3]);
    }
}
