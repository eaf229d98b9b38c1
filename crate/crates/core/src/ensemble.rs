//! Character ensembles of logarithmic one-forms on the sphere and the curves
//! they generate.

use std::collections::BTreeMap;
use std::sync::Arc;

use num::complex::Complex64;
use num::{One, Signed, Zero};

use crate::curve::Curve;
use crate::error::{Error, Result};
use crate::gauss::GaussRat;
use crate::poly::{eval_c64, Poly};
use crate::rat::{fmt_rat, frac, int, is_nonneg_integer, Rat};
use crate::roots::split_square_free;
use crate::twisted::{BranchLocus, Point, TwistedFn};

/// Simple poles at the roots of a monic square-free polynomial without
/// Gaussian-rational roots, all carrying the same integer residue.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FactorPole {
    pub factor: Poly,
    pub residue: i64,
}

/// `sum_p a_p dz/(z - p) + sum_q r_q q'(z)/q(z) dz`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct OneForm {
    poles: Vec<(GaussRat, Rat)>,
    factors: Vec<FactorPole>,
}

impl OneForm {
    /// Validates and brings the form to canonical order: exact poles sorted,
    /// exact roots of factor poles moved to the exact list, factor poles with
    /// equal residue merged.
    pub fn new(poles: Vec<(GaussRat, Rat)>, factors: Vec<FactorPole>) -> Result<OneForm> {
        let mut exact = poles;
        for (p, a) in &exact {
            if a.is_zero() {
                return Err(Error::invalid(format!("zero residue at {p}")));
            }
        }
        let mut merged: BTreeMap<i64, Poly> = BTreeMap::new();
        for f in factors {
            if f.residue == 0 {
                return Err(Error::invalid("factor pole with zero residue"));
            }
            if f.factor.is_constant() {
                return Err(Error::invalid("factor pole polynomial must be nonconstant"));
            }
            let q = f.factor.monic();
            if Poly::gcd(&q, &q.derivative()).degree() > 0 {
                return Err(Error::invalid("factor pole polynomial must be square-free"));
            }
            let split = split_square_free(&q)?;
            for r in split.exact {
                exact.push((r, int(f.residue)));
            }
            if split.rest.degree() > 0 {
                let acc = merged.entry(f.residue).or_insert_with(Poly::one);
                if Poly::gcd(acc, &split.rest).degree() > 0 {
                    return Err(Error::invalid("factor poles share a root"));
                }
                *acc = &*acc * &split.rest;
            }
        }
        exact.sort_by(|a, b| a.0.lex_cmp(&b.0));
        if exact.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::invalid("pole listed twice"));
        }
        let factors: Vec<FactorPole> = merged
            .into_iter()
            .map(|(residue, factor)| FactorPole { factor, residue })
            .collect();
        for (i, f) in factors.iter().enumerate() {
            for g in &factors[..i] {
                if Poly::gcd(&f.factor, &g.factor).degree() > 0 {
                    return Err(Error::invalid("factor poles share a root"));
                }
            }
        }
        Ok(OneForm {
            poles: exact,
            factors,
        })
    }

    pub fn simple(poles: Vec<(GaussRat, Rat)>) -> Result<OneForm> {
        OneForm::new(poles, Vec::new())
    }

    /// `a dz/(z - p)`.
    pub fn log(p: GaussRat, a: Rat) -> Result<OneForm> {
        OneForm::simple(vec![(p, a)])
    }

    pub fn poles(&self) -> &[(GaussRat, Rat)] {
        &self.poles
    }

    pub fn factor_poles(&self) -> &[FactorPole] {
        &self.factors
    }

    pub fn is_zero(&self) -> bool {
        self.poles.is_empty() && self.factors.is_empty()
    }

    pub fn residue_at(&self, p: &GaussRat) -> Rat {
        self.poles
            .iter()
            .find(|(q, _)| q == p)
            .map(|(_, a)| a.clone())
            .unwrap_or_else(Rat::zero)
    }

    pub fn has_pole_at(&self, p: &GaussRat) -> bool {
        self.poles.iter().any(|(q, _)| q == p) || self.factors.iter().any(|f| f.factor.eval(p).is_zero())
    }

    /// `-sum` of all finite residues.
    pub fn residue_at_infinity(&self) -> Rat {
        let exact: Rat = self.poles.iter().map(|(_, a)| a.clone()).sum();
        let fac: i64 = self
            .factors
            .iter()
            .map(|f| f.residue * f.factor.degree() as i64)
            .sum();
        -(exact + int(fac))
    }

    pub fn scaled(&self, lambda: &Rat) -> Result<OneForm> {
        let poles = self.poles.iter().map(|(p, a)| (p.clone(), a * lambda)).collect();
        let mut factors = Vec::with_capacity(self.factors.len());
        for f in &self.factors {
            let r = lambda * int(f.residue);
            if !r.is_integer() {
                return Err(Error::invalid(format!(
                    "scaling a factor pole by {} leaves integer residues",
                    fmt_rat(lambda)
                )));
            }
            factors.push(FactorPole {
                factor: f.factor.clone(),
                residue: i64::try_from(r.to_integer()).map_err(|_| Error::invalid("residue too large"))?,
            });
        }
        OneForm::new(poles, factors)
    }

    /// `(R, S)` with the form equal to `R(z)/S(z) dz`.
    pub fn rational_form(&self) -> (Poly, Poly) {
        let mut s = Poly::one();
        for (p, _) in &self.poles {
            s = &s * &Poly::linear(p);
        }
        for f in &self.factors {
            s = &s * &f.factor;
        }
        let mut r = Poly::zero();
        for (p, a) in &self.poles {
            let term = s.div_linear(p).0.scale(&GaussRat::real(a.clone()));
            r = &r + &term;
        }
        for f in &self.factors {
            let rest = s.exact_div(&f.factor);
            let term = (&f.factor.derivative() * &rest).scale(&GaussRat::from_i64(f.residue));
            r = &r + &term;
        }
        (r, s)
    }

    /// Vanishing order of the coefficient of `dz` at a non-pole.
    pub fn zero_order_at(&self, q: &GaussRat) -> usize {
        self.rational_form().0.root_multiplicity(q)
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::zero();
        for (p, a) in &self.poles {
            acc += crate::rat::to_f64(a) / (z - p.to_c64());
        }
        for f in &self.factors {
            let c = f.factor.to_c64();
            let d = f.factor.derivative().to_c64();
            acc += f.residue as f64 * eval_c64(&d, z) / eval_c64(&c, z);
        }
        acc
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Ensemble {
    forms: Vec<OneForm>,
}

impl Ensemble {
    pub fn new(forms: Vec<OneForm>) -> Result<Ensemble> {
        if forms.is_empty() {
            return Err(Error::invalid("an ensemble needs at least one form"));
        }
        Ok(Ensemble { forms })
    }

    pub fn n(&self) -> usize {
        self.forms.len()
    }

    pub fn forms(&self) -> &[OneForm] {
        &self.forms
    }

    /// Union of exact poles, sorted.
    pub fn exact_poles(&self) -> Vec<GaussRat> {
        let mut pts: Vec<GaussRat> = self
            .forms
            .iter()
            .flat_map(|f| f.poles.iter().map(|(p, _)| p.clone()))
            .collect();
        pts.sort_by(|a, b| a.lex_cmp(b));
        pts.dedup();
        pts
    }

    pub fn has_pole_at(&self, p: &GaussRat) -> bool {
        self.forms.iter().any(|f| f.has_pole_at(p))
    }

    /// Components `exp(int Omega_k)` over the exact pole locus with
    /// denominators from negative factor poles cleared.
    fn exact_components(&self, rho: &[Rat]) -> Result<Vec<TwistedFn>> {
        let locus = Arc::new(BranchLocus::new(self.exact_poles())?);
        let pts = locus.points();
        let mut pos = Vec::with_capacity(self.n());
        let mut neg = Vec::with_capacity(self.n());
        for f in &self.forms {
            let mut p = Poly::one();
            let mut q = Poly::one();
            for fp in &f.factors {
                let e = fp.residue.unsigned_abs();
                if e > crate::twisted::MAX_FOLDED_EXPONENT as u64 {
                    return Err(Error::invalid("factor residue too large"));
                }
                if fp.residue > 0 {
                    p = &p * &fp.factor.pow(e as u32);
                } else {
                    q = &q * &fp.factor.pow(e as u32);
                }
            }
            pos.push(p);
            neg.push(q);
        }
        let mut d = Poly::one();
        for q in &neg {
            let g = Poly::gcd(&d, q);
            d = (&d * q).exact_div(&g);
        }
        let mut comps = vec![TwistedFn::polynomial(locus.clone(), d.clone())];
        for (k, f) in self.forms.iter().enumerate() {
            for (_, a) in &f.poles {
                if a.abs() > int(crate::twisted::MAX_FOLDED_EXPONENT) {
                    return Err(Error::invalid("residue too large"));
                }
            }
            let twist: Vec<Rat> = pts.iter().map(|p| f.residue_at(p)).collect();
            let numer = (&pos[k] * &d.exact_div(&neg[k])).scale(&GaussRat::real(rho[k].clone()));
            comps.push(TwistedFn::from_parts(locus.clone(), twist, numer, vec![0; pts.len()]));
        }
        Ok(comps)
    }
}

/// `[1 : rho_1 exp(int_b Omega_1) : ...]`, normalised so that
/// `|f_k(b) / f_0(b)| = rho_k`. The positive constants that are not
/// Gaussian rationals are carried as curve weights.
pub fn ensemble_to_curve(e: &Ensemble, rho: &[Rat], basepoint: &GaussRat) -> Result<Curve> {
    if rho.len() != e.n() {
        return Err(Error::invalid(format!("expected {} scale factors", e.n())));
    }
    if rho.iter().any(|r| !r.is_positive()) {
        return Err(Error::invalid("scale factors must be positive"));
    }
    if e.has_pole_at(basepoint) {
        return Err(Error::BasepointIsPole(basepoint.clone()));
    }
    let comps = e.exact_components(rho)?;
    let b = basepoint.to_c64();
    let base0 = comps[0].eval_abs2(b)?;
    let mut weights = vec![1.0];
    for (k, c) in comps.iter().enumerate().skip(1) {
        let target = crate::rat::to_f64(&rho[k - 1]);
        let actual = (c.eval_abs2(b)? / base0).sqrt();
        weights.push(target / actual);
    }
    Curve::new(comps)?.with_weights(weights)
}

/// [`ensemble_to_curve`] restricted to character ensembles.
pub fn character_curve(e: &Ensemble, rho: &[Rat], basepoint: &GaussRat) -> Result<Curve> {
    let c = ensemble_to_curve(e, rho, basepoint)?;
    c.require_nondegenerate()?;
    Ok(c)
}

/// A basepoint that is not a pole: the first of `1, 2, 3, ...`.
pub fn default_basepoint(e: &Ensemble) -> GaussRat {
    (1..)
        .map(GaussRat::from_i64)
        .find(|p| !e.has_pole_at(p))
        .unwrap()
}

pub fn is_character_ensemble(e: &Ensemble) -> bool {
    let rho = vec![Rat::one(); e.n()];
    e.exact_components(&rho)
        .and_then(Curve::new)
        .map(|c| c.nondegenerate())
        .unwrap_or(false)
}

/// The ensemble's generated curve with unit scales, as used for exact checks.
pub fn exact_curve(e: &Ensemble) -> Result<Curve> {
    let rho = vec![Rat::one(); e.n()];
    Curve::new(e.exact_components(&rho)?)
}

/// Appends the poles of `sign * log(p)` for a polynomial `p` with no roots
/// on the locus.
fn log_poles(p: &Poly, sign: i64, poles: &mut Vec<(GaussRat, Rat)>, factors: &mut Vec<FactorPole>) -> Result<()> {
    for (f, mult) in p.square_free_decomposition() {
        if f.is_constant() {
            continue;
        }
        let split = split_square_free(&f)?;
        let r = sign * mult as i64;
        for x in split.exact {
            poles.push((x, int(r)));
        }
        if split.rest.degree() > 0 {
            factors.push(FactorPole {
                factor: split.rest,
                residue: r,
            });
        }
    }
    Ok(())
}

/// `Omega_k = d log(f_k / f_0)`.
pub fn curve_to_ensemble(c: &Curve) -> Result<Ensemble> {
    c.require_nondegenerate()?;
    let f0 = &c.components()[0];
    if f0.is_zero() {
        return Err(Error::ZeroReference);
    }
    let locus = c.locus();
    let strip = |p: &Poly| {
        locus
            .points()
            .iter()
            .fold(p.clone(), |acc, x| acc.strip_root(x).0)
    };
    let b0 = strip(f0.numer());
    let mut forms = Vec::with_capacity(c.n());
    for fk in &c.components()[1..] {
        let mut poles = Vec::new();
        for p in locus.points() {
            let pt = Point::Finite(p.clone());
            let r = fk.order_at(&pt)? - f0.order_at(&pt)?;
            if !r.is_zero() {
                poles.push((p.clone(), r));
            }
        }
        let a = strip(fk.numer());
        let g = Poly::gcd(&a, &b0);
        let mut factors = Vec::new();
        log_poles(&a.exact_div(&g), 1, &mut poles, &mut factors)?;
        log_poles(&b0.exact_div(&g), -1, &mut poles, &mut factors)?;
        forms.push(OneForm::new(poles, factors)?);
    }
    Ensemble::new(forms)
}

/// `(lambda_1 Omega, ..., lambda_n Omega)`.
pub fn scaled_ensemble(base: &OneForm, lambdas: &[Rat]) -> Result<Ensemble> {
    for (i, l) in lambdas.iter().enumerate() {
        if l.is_zero() {
            return Err(Error::ZeroLambda);
        }
        if lambdas[..i].contains(l) {
            return Err(Error::DuplicateLambda(fmt_rat(l)));
        }
    }
    Ensemble::new(
        lambdas
            .iter()
            .map(|l| base.scaled(l))
            .collect::<Result<Vec<_>>>()?,
    )
}

/// Rotation numbers in `[0, 1)`: the phase of the k-th component after one
/// positive loop around `p` is `exp(2 pi i * turns[k])`.
pub fn monodromy_at(e: &Ensemble, p: &GaussRat) -> Result<Vec<Rat>> {
    if !e.forms.iter().any(|f| f.poles.iter().any(|(q, _)| q == p)) {
        return Err(Error::NotAPole(p.to_string()));
    }
    Ok(e.forms.iter().map(|f| frac(&f.residue_at(p))).collect())
}

/// True iff some form has a non-integer residue at `p`.
pub fn branch_test_residue(e: &Ensemble, p: &GaussRat) -> Result<bool> {
    if !e.forms.iter().any(|f| f.poles.iter().any(|(q, _)| q == p)) {
        return Err(Error::NotAPole(p.to_string()));
    }
    Ok(e.forms.iter().any(|f| !f.residue_at(p).is_integer()))
}

/// Vanishing order of each form at a point that is not a pole.
pub fn ensemble_zero_orders(e: &Ensemble, q: &GaussRat) -> Result<Vec<usize>> {
    if e.has_pole_at(q) {
        return Err(Error::invalid(format!("{q} is a pole")));
    }
    Ok(e.forms.iter().map(|f| f.zero_order_at(q)).collect())
}

/// True if every form vanishes at `q`, which makes `q` a ramification point.
pub fn ensemble_zero_is_ramification(e: &Ensemble, q: &GaussRat) -> Result<bool> {
    Ok(ensemble_zero_orders(e, q)?.iter().all(|&k| k > 0))
}

/// Approximate positions of all poles, exact and factor.
pub fn pole_positions(e: &Ensemble) -> Result<Vec<Complex64>> {
    let mut pts: Vec<Complex64> = e.exact_poles().iter().map(|p| p.to_c64()).collect();
    for f in &e.forms {
        for fp in &f.factors {
            pts.extend(crate::roots::aberth(&fp.factor.to_c64())?);
        }
    }
    Ok(pts)
}

/// Multipliers `exp(oint Omega_k)` of one positive loop around `p`, with the
/// integral taken by the trapezoid rule on a circle that encloses no other pole.
pub fn numeric_monodromy(e: &Ensemble, p: &GaussRat, steps: usize) -> Result<Vec<Complex64>> {
    if !e.has_pole_at(p) {
        return Err(Error::NotAPole(p.to_string()));
    }
    if steps == 0 {
        return Err(Error::invalid("steps must be positive"));
    }
    let c = p.to_c64();
    let gap = pole_positions(e)?
        .iter()
        .map(|q| (q - c).norm())
        .filter(|d| *d > 1e-12)
        .fold(f64::INFINITY, f64::min);
    let r = (0.5 * gap).min(1.0);
    let dt = 2.0 * std::f64::consts::PI / steps as f64;
    Ok(e.forms
        .iter()
        .map(|f| {
            let integral: Complex64 = (0..steps)
                .map(|s| {
                    let w = Complex64::from_polar(r, s as f64 * dt);
                    f.eval(c + w) * Complex64::i() * w * dt
                })
                .sum();
            integral.exp()
        })
        .collect())
}

/// Cartan matrix of `su(n+1)`.
pub fn cartan(n: usize) -> Vec<Vec<i64>> {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| match i.abs_diff(j) {
                    0 => 2,
                    1 => -1,
                    _ => 0,
                })
                .collect()
        })
        .collect()
}

/// `a^{ij} = min(i,j) (n+1-max(i,j)) / (n+1)`, indices from 1.
pub fn inverse_cartan(n: usize) -> Vec<Vec<Rat>> {
    (1..=n)
        .map(|i| {
            (1..=n)
                .map(|j| Rat::new((i.min(j) * (n + 1 - i.max(j))).into(), (n + 1).into()))
                .collect()
        })
        .collect()
}

/// `j (n+1-i) / (n+1)` for all `i, j`: agrees with [`inverse_cartan`] only for `j <= i`.
pub fn lower_formula_matrix(n: usize) -> Vec<Vec<Rat>> {
    (1..=n)
        .map(|i| {
            (1..=n)
                .map(|j| Rat::new((j * (n + 1 - i)).into(), (n + 1).into()))
                .collect()
        })
        .collect()
}

/// `rho_i / pi` with a flag for membership in `4 pi N` (`N` including 0).
#[derive(Clone, Debug, PartialEq)]
pub struct RhoVector {
    pub over_pi: Vec<Rat>,
    pub in_4pi_n: Vec<bool>,
}

impl RhoVector {
    fn from_over_pi(over_pi: Vec<Rat>) -> RhoVector {
        let in_4pi_n = over_pi
            .iter()
            .map(|r| is_nonneg_integer(&(r / int(4))))
            .collect();
        RhoVector { over_pi, in_4pi_n }
    }
}

fn rho_with_matrix(a: &[Vec<Rat>], gamma: &[Vec<Rat>], genus: u64) -> RhoVector {
    let n = a.len();
    let euler = int(2) * (int(2) - int(2 * genus as i64));
    let over_pi = (0..n)
        .map(|i| {
            let mut acc = Rat::zero();
            for row in gamma {
                for j in 0..n {
                    acc += int(4) * &a[i][j] * &row[j];
                }
            }
            for j in 0..n {
                acc += &a[i][j] * &euler;
            }
            acc
        })
        .collect();
    RhoVector::from_over_pi(over_pi)
}

/// `rho_i = 4 pi sum_k sum_j a^{ij} gamma_{k,j} + 2 pi (2 - 2g) sum_j a^{ij}`.
pub fn compute_rho(gamma: &[Vec<Rat>], genus: u64, n: usize) -> Result<RhoVector> {
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    if let Some(i) = gamma.iter().position(|row| row.len() != n) {
        return Err(Error::invalid(format!("gamma row {i} must have {n} entries")));
    }
    Ok(rho_with_matrix(&inverse_cartan(n), gamma, genus))
}

/// Singular data of the scaled ensemble `lambda Omega` on a surface of genus
/// `g`: two poles of residue `a`, `-a`, and zeros of orders `k_3, ..., k_m`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScaledFamily {
    pub a: Rat,
    pub lambdas: Vec<Rat>,
    pub zero_orders: Vec<u32>,
    pub genus: u64,
}

impl ScaledFamily {
    pub fn n(&self) -> usize {
        self.lambdas.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambdas.is_empty() {
            return Err(Error::invalid("at least one lambda required"));
        }
        if self.a.is_zero() {
            return Err(Error::invalid("residue a must be nonzero"));
        }
        let mut prev = Rat::zero();
        for l in &self.lambdas {
            if *l <= prev {
                return Err(Error::invalid("lambdas must satisfy 0 < lambda_1 < ... < lambda_n"));
            }
            prev = l.clone();
        }
        Ok(())
    }

    pub fn gamma_matrix(&self) -> Vec<Vec<Rat>> {
        let n = self.n();
        let lam = |j: usize| if j == 0 { Rat::zero() } else { self.lambdas[j - 1].clone() };
        let row1 = (1..=n).map(|j| (lam(j) - lam(j - 1)) * &self.a - Rat::one()).collect();
        let row2 = (1..=n)
            .map(|j| (lam(n - j + 1) - lam(n - j)) * &self.a - Rat::one())
            .collect();
        let mut rows = vec![row1, row2];
        for &k in &self.zero_orders {
            rows.push(vec![int(k as i64); n]);
        }
        rows
    }

    /// `4 (n+1-i) a lambda_n + 4 (sum k - 1 - g) n (n+1-i)`, in units of pi.
    pub fn closed_form_over_pi(&self) -> Vec<Rat> {
        let n = self.n() as i64;
        let lam_n = self.lambdas.last().cloned().unwrap_or_else(Rat::zero);
        let ksum: i64 = self.zero_orders.iter().map(|&k| k as i64).sum();
        (1..=n)
            .map(|i| {
                int(4 * (n + 1 - i)) * &self.a * &lam_n
                    + int(4 * (ksum - 1 - self.genus as i64) * n * (n + 1 - i))
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FamilyRho {
    pub definition: RhoVector,
    pub lower_formula: RhoVector,
    pub closed_form: RhoVector,
}

impl FamilyRho {
    pub fn closed_form_matches(&self) -> bool {
        self.definition.over_pi == self.closed_form.over_pi
    }
}

/// `rho` for a [`ScaledFamily`] from the definition (symmetric inverse Cartan
/// matrix), from the lower-triangle formula extended to all entries, and from
/// the closed form.
pub fn scaled_family_rho(f: &ScaledFamily) -> Result<FamilyRho> {
    f.validate()?;
    let n = f.n();
    let gamma = f.gamma_matrix();
    Ok(FamilyRho {
        definition: compute_rho(&gamma, f.genus, n)?,
        lower_formula: rho_with_matrix(&lower_formula_matrix(n), &gamma, f.genus),
        closed_form: RhoVector::from_over_pi(f.closed_form_over_pi()),
    })
}
