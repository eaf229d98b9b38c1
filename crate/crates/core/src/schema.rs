//! JSON wire formats. Every parser bounds the sizes it accepts so that
//! untrusted input cannot trigger unbounded exact arithmetic.

use std::sync::Arc;

use num::{Signed, ToPrimitive, Zero};
use serde_json::{json, Map, Value};

use crate::construct::PrescribedData;
use crate::curve::Curve;
use crate::ensemble::{Ensemble, FactorPole, OneForm, RhoVector, ScaledFamily};
use crate::error::{Error, Result};
use crate::gauss::GaussRat;
use crate::metrics::GridSpec;
use crate::poly::Poly;
use crate::rat::{fmt_rat, int, parse_rat, Rat};
use crate::singularity::SingularityDatum;
use crate::twisted::{BranchLocus, Point, TwistedFn};

pub const MAX_N: usize = 8;
pub const MAX_LOCUS: usize = 64;
pub const MAX_EXPONENT: i64 = 512;
pub const MAX_TOTAL_EXPONENT: i64 = 2048;
pub const MAX_DEGREE: usize = 1024;
pub const MAX_POINTS: usize = 16;
pub const MAX_RAM: u32 = 64;
pub const MAX_POLES_PER_FORM: usize = 64;
pub const MAX_FACTOR_DEGREE: usize = 16;
pub const MAX_FACTOR_RESIDUE: i64 = 64;
pub const MAX_GENUS: u64 = 1 << 20;

fn perr(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

fn obj<'a>(v: &'a Value, what: &str) -> Result<&'a Map<String, Value>> {
    v.as_object().ok_or_else(|| perr(format!("{what}: expected an object")))
}

fn arr<'a>(v: &'a Value, what: &str) -> Result<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| perr(format!("{what}: expected an array")))
}

fn field<'a>(m: &'a Map<String, Value>, key: &str) -> Result<&'a Value> {
    m.get(key).ok_or_else(|| perr(format!("missing field {key:?}")))
}

fn bounded_arr<'a>(v: &'a Value, what: &str, max: usize) -> Result<&'a Vec<Value>> {
    let a = arr(v, what)?;
    if a.len() > max {
        return Err(perr(format!("{what}: at most {max} entries allowed")));
    }
    Ok(a)
}

fn usize_of(v: &Value, what: &str) -> Result<usize> {
    v.as_u64()
        .and_then(|x| usize::try_from(x).ok())
        .ok_or_else(|| perr(format!("{what}: expected a non-negative integer")))
}

fn f64_of(v: &Value, what: &str) -> Result<f64> {
    v.as_f64()
        .filter(|x| x.is_finite())
        .ok_or_else(|| perr(format!("{what}: expected a finite number")))
}

pub fn parse_json(text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| perr(format!("malformed JSON: {e}")))
}

pub fn rat_to_json(r: &Rat) -> Value {
    Value::String(fmt_rat(r))
}

/// A string `"p/q"` or a JSON integer.
pub fn rat_from_json(v: &Value) -> Result<Rat> {
    match v {
        Value::String(s) => parse_rat(s),
        Value::Number(n) => n
            .as_i64()
            .map(int)
            .ok_or_else(|| perr(format!("non-integer number {n}; use a \"p/q\" string"))),
        _ => Err(perr("expected a rational")),
    }
}

fn rats_from_json(v: &Value, what: &str, max: usize) -> Result<Vec<Rat>> {
    bounded_arr(v, what, max)?.iter().map(rat_from_json).collect()
}

fn bounded_rat(v: &Value, what: &str) -> Result<Rat> {
    let r = rat_from_json(v)?;
    if r.abs() > int(MAX_EXPONENT) {
        return Err(perr(format!("{what}: magnitude above {MAX_EXPONENT}")));
    }
    Ok(r)
}

pub fn gauss_to_json(g: &GaussRat) -> Value {
    json!({"re": rat_to_json(&g.re), "im": rat_to_json(&g.im)})
}

/// `{"re": .., "im": ..}` (missing parts are zero) or a bare rational.
pub fn gauss_from_json(v: &Value) -> Result<GaussRat> {
    match v {
        Value::Object(m) => {
            for k in m.keys() {
                if k != "re" && k != "im" {
                    return Err(perr(format!("unknown field {k:?} in Gaussian rational")));
                }
            }
            let part = |k: &str| m.get(k).map(rat_from_json).unwrap_or_else(|| Ok(Rat::zero()));
            Ok(GaussRat::new(part("re")?, part("im")?))
        }
        _ => Ok(GaussRat::real(rat_from_json(v)?)),
    }
}

pub fn poly_to_json(p: &Poly) -> Value {
    Value::Array(p.coeffs().iter().map(gauss_to_json).collect())
}

pub fn poly_from_json(v: &Value, max_degree: usize) -> Result<Poly> {
    let a = bounded_arr(v, "polynomial", max_degree + 1)?;
    Ok(Poly::new(a.iter().map(gauss_from_json).collect::<Result<_>>()?))
}

pub fn locus_from_json(v: &Value) -> Result<Arc<BranchLocus>> {
    let pts = bounded_arr(v, "locus", MAX_LOCUS)?
        .iter()
        .map(gauss_from_json)
        .collect::<Result<Vec<_>>>()?;
    Ok(Arc::new(BranchLocus::new(pts)?))
}

pub fn twisted_to_json(f: &TwistedFn) -> Value {
    json!({
        "locus": f.locus().points().iter().map(gauss_to_json).collect::<Vec<_>>(),
        "twist": f.twist().iter().map(rat_to_json).collect::<Vec<_>>(),
        "numer": poly_to_json(f.numer()),
        "denomExp": f.denom_exp().to_vec(),
    })
}

fn twisted_on_locus(m: &Map<String, Value>, locus: Arc<BranchLocus>) -> Result<TwistedFn> {
    let len = locus.len();
    let twist = match m.get("twist") {
        Some(v) => bounded_arr(v, "twist", MAX_LOCUS)?
            .iter()
            .map(|t| bounded_rat(t, "twist"))
            .collect::<Result<Vec<_>>>()?,
        None => vec![Rat::zero(); len],
    };
    let denom = match m.get("denomExp") {
        Some(v) => bounded_arr(v, "denomExp", MAX_LOCUS)?
            .iter()
            .map(|d| {
                d.as_i64()
                    .filter(|x| x.abs() <= MAX_EXPONENT)
                    .ok_or_else(|| perr(format!("denomExp entries must be integers of magnitude <= {MAX_EXPONENT}")))
            })
            .collect::<Result<Vec<_>>>()?,
        None => vec![0; len],
    };
    if twist.len() != len || denom.len() != len {
        return Err(perr("twist and denomExp must match the locus length"));
    }
    let budget: Rat = twist.iter().map(|t| t.abs()).sum::<Rat>() + int(denom.iter().map(|d| d.abs()).sum());
    if budget > int(MAX_TOTAL_EXPONENT) {
        return Err(perr(format!("total exponent magnitude above {MAX_TOTAL_EXPONENT}")));
    }
    let numer = poly_from_json(field(m, "numer")?, MAX_DEGREE)?;
    Ok(TwistedFn::from_parts(locus, twist, numer, denom))
}

pub fn twisted_from_json(v: &Value) -> Result<TwistedFn> {
    let m = obj(v, "twisted function")?;
    let locus = match m.get("locus") {
        Some(l) => locus_from_json(l)?,
        None => Arc::new(BranchLocus::empty()),
    };
    twisted_on_locus(m, locus)
}

pub fn curve_to_json(c: &Curve) -> Value {
    let mut m = Map::new();
    m.insert("n".into(), json!(c.n()));
    m.insert(
        "components".into(),
        Value::Array(c.components().iter().map(twisted_to_json).collect()),
    );
    if !c.has_unit_weights() {
        m.insert("weights".into(), json!(c.weights()));
    }
    Value::Object(m)
}

pub fn curve_from_json(v: &Value) -> Result<Curve> {
    let m = obj(v, "curve")?;
    let comps = bounded_arr(field(m, "components")?, "components", MAX_N + 1)?;
    if let Some(n) = m.get("n") {
        if usize_of(n, "n")? + 1 != comps.len() {
            return Err(perr("n must equal the number of components minus one"));
        }
    }
    let first = comps.first().ok_or_else(|| perr("no components"))?;
    let locus = match obj(first, "component")?.get("locus") {
        Some(l) => locus_from_json(l)?,
        None => Arc::new(BranchLocus::empty()),
    };
    let mut out = Vec::with_capacity(comps.len());
    for c in comps {
        let cm = obj(c, "component")?;
        if let Some(l) = cm.get("locus") {
            if locus_from_json(l)?.points() != locus.points() {
                return Err(Error::LocusMismatch);
            }
        } else if locus.len() != 0 {
            return Err(Error::LocusMismatch);
        }
        out.push(twisted_on_locus(cm, locus.clone())?);
    }
    let curve = Curve::new(out)?;
    match m.get("weights") {
        Some(w) => {
            let w = bounded_arr(w, "weights", MAX_N + 1)?
                .iter()
                .map(|x| f64_of(x, "weight"))
                .collect::<Result<Vec<_>>>()?;
            curve.with_weights(w)
        }
        None => Ok(curve),
    }
}

pub fn point_to_json(p: &Point) -> Value {
    match p {
        Point::Finite(g) => gauss_to_json(g),
        Point::Numeric(np) => json!({"approx": [np.approx.re, np.approx.im], "residual": np.residual}),
        Point::Infinity => json!("infinity"),
    }
}

pub fn datum_to_json(d: &SingularityDatum) -> Value {
    json!({
        "point": point_to_json(&d.point),
        "b": d.b.iter().map(rat_to_json).collect::<Vec<_>>(),
        "gamma": d.gamma.iter().map(rat_to_json).collect::<Vec<_>>(),
        "kind": d.kind.as_str(),
    })
}

pub fn prescribed_to_json(d: &PrescribedData) -> Value {
    json!({
        "n": d.n,
        "gamma0": d.gamma0.iter().map(rat_to_json).collect::<Vec<_>>(),
        "points": d.points.iter().map(gauss_to_json).collect::<Vec<_>>(),
        "ram": d.ram,
    })
}

pub fn prescribed_from_json(v: &Value) -> Result<PrescribedData> {
    let m = obj(v, "prescribed data")?;
    let n = usize_of(field(m, "n")?, "n")?;
    if n == 0 || n > MAX_N {
        return Err(perr(format!("n must lie in 1..={MAX_N}")));
    }
    let gamma0 = bounded_arr(field(m, "gamma0")?, "gamma0", MAX_N)?
        .iter()
        .map(|g| bounded_rat(g, "gamma0"))
        .collect::<Result<Vec<_>>>()?;
    let points = match m.get("points") {
        Some(p) => bounded_arr(p, "points", MAX_POINTS)?
            .iter()
            .map(gauss_from_json)
            .collect::<Result<Vec<_>>>()?,
        None => Vec::new(),
    };
    let ram = match m.get("ram") {
        Some(r) => bounded_arr(r, "ram", MAX_POINTS)?
            .iter()
            .map(|row| {
                bounded_arr(row, "ram row", MAX_N)?
                    .iter()
                    .map(|x| {
                        x.as_u64()
                            .filter(|&k| k <= MAX_RAM as u64)
                            .map(|k| k as u32)
                            .ok_or_else(|| perr(format!("ram entries must be integers in 0..={MAX_RAM}")))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?,
        None => Vec::new(),
    };
    PrescribedData::new(n, gamma0, points, ram)
}

pub fn form_to_json(f: &OneForm) -> Value {
    let mut out: Vec<Value> = f
        .poles()
        .iter()
        .map(|(p, a)| json!({"pole": gauss_to_json(p), "residue": rat_to_json(a)}))
        .collect();
    out.extend(
        f.factor_poles()
            .iter()
            .map(|fp| json!({"factor": poly_to_json(&fp.factor), "residue": rat_to_json(&int(fp.residue))})),
    );
    Value::Array(out)
}

pub fn ensemble_to_json(e: &Ensemble) -> Value {
    json!({"n": e.n(), "forms": e.forms().iter().map(form_to_json).collect::<Vec<_>>()})
}

fn form_from_json(v: &Value) -> Result<OneForm> {
    let mut poles = Vec::new();
    let mut factors = Vec::new();
    for entry in bounded_arr(v, "form", MAX_POLES_PER_FORM)? {
        let m = obj(entry, "pole entry")?;
        let residue = bounded_rat(field(m, "residue")?, "residue")?;
        match (m.get("pole"), m.get("factor")) {
            (Some(p), None) => poles.push((gauss_from_json(p)?, residue)),
            (None, Some(q)) => {
                let r = residue
                    .is_integer()
                    .then(|| residue.to_integer().to_i64())
                    .flatten()
                    .filter(|r| r.abs() <= MAX_FACTOR_RESIDUE)
                    .ok_or_else(|| {
                        perr(format!("factor residues must be integers of magnitude <= {MAX_FACTOR_RESIDUE}"))
                    })?;
                factors.push(FactorPole {
                    factor: poly_from_json(q, MAX_FACTOR_DEGREE)?,
                    residue: r,
                });
            }
            _ => return Err(perr("each entry needs exactly one of \"pole\" or \"factor\"")),
        }
    }
    OneForm::new(poles, factors)
}

pub fn ensemble_from_json(v: &Value) -> Result<Ensemble> {
    let m = obj(v, "ensemble")?;
    let forms = bounded_arr(field(m, "forms")?, "forms", MAX_N)?
        .iter()
        .map(form_from_json)
        .collect::<Result<Vec<_>>>()?;
    if let Some(n) = m.get("n") {
        if usize_of(n, "n")? != forms.len() {
            return Err(perr("n must equal the number of forms"));
        }
    }
    Ensemble::new(forms)
}

/// An ensemble file with optional scale factors and basepoint.
#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleInput {
    pub ensemble: Ensemble,
    pub rho: Option<Vec<Rat>>,
    pub basepoint: Option<GaussRat>,
}

pub fn ensemble_input_from_json(v: &Value) -> Result<EnsembleInput> {
    let ensemble = ensemble_from_json(v)?;
    let m = obj(v, "ensemble")?;
    let rho = m.get("rho").map(|r| rats_from_json(r, "rho", MAX_N)).transpose()?;
    let basepoint = m.get("basepoint").map(gauss_from_json).transpose()?;
    Ok(EnsembleInput {
        ensemble,
        rho,
        basepoint,
    })
}

pub fn grid_from_json(v: &Value) -> Result<GridSpec> {
    let m = obj(v, "grid")?;
    let pair = |k: &str| -> Result<[f64; 2]> {
        let a = arr(field(m, k)?, k)?;
        if a.len() != 2 {
            return Err(perr(format!("{k} must be [min, max]")));
        }
        Ok([f64_of(&a[0], k)?, f64_of(&a[1], k)?])
    };
    let nodes = match m.get("nodes") {
        Some(v) => {
            let a = arr(v, "nodes")?;
            if a.len() != 2 {
                return Err(perr("nodes must be [nx, ny]"));
            }
            Some([usize_of(&a[0], "nodes")?, usize_of(&a[1], "nodes")?])
        }
        None => None,
    };
    let g = GridSpec {
        re: pair("re")?,
        im: pair("im")?,
        h: m.get("h").map(|h| f64_of(h, "h")).transpose()?.unwrap_or(1e-3),
        safety: m.get("safety").map(|s| f64_of(s, "safety")).transpose()?,
        nodes,
    };
    g.validate()?;
    Ok(g)
}

/// `"re0,re1,im0,im1"` or `"re0,re1,im0,im1,nx,ny"`.
pub fn grid_from_arg(s: &str, h: f64, safety: Option<f64>) -> Result<GridSpec> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 4 && parts.len() != 6 {
        return Err(perr("grid must be re0,re1,im0,im1[,nx,ny]"));
    }
    let num = |t: &str| -> Result<f64> {
        t.parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| perr(format!("bad grid bound {t:?}")))
    };
    let count = |t: &str| -> Result<usize> { t.parse::<usize>().map_err(|_| perr(format!("bad node count {t:?}"))) };
    let nodes = if parts.len() == 6 {
        Some([count(parts[4])?, count(parts[5])?])
    } else {
        None
    };
    let g = GridSpec {
        re: [num(parts[0])?, num(parts[1])?],
        im: [num(parts[2])?, num(parts[3])?],
        h,
        safety,
        nodes,
    };
    g.validate()?;
    Ok(g)
}

/// Input of the rho calculator.
#[derive(Clone, Debug, PartialEq)]
pub enum RhoInput {
    Gamma { n: usize, genus: u64, gamma: Vec<Vec<Rat>> },
    Family(ScaledFamily),
}

pub fn rho_input_from_json(v: &Value) -> Result<RhoInput> {
    let m = obj(v, "rho input")?;
    let genus_of = |m: &Map<String, Value>| -> Result<u64> {
        match m.get("genus") {
            Some(g) => g
                .as_u64()
                .filter(|&g| g <= MAX_GENUS)
                .ok_or_else(|| perr("genus must be a small non-negative integer")),
            None => Ok(0),
        }
    };
    if let Some(f) = m.get("family") {
        let fm = obj(f, "family")?;
        let lambdas = rats_from_json(field(fm, "lambdas")?, "lambdas", MAX_N)?;
        let zero_orders = match fm.get("k") {
            Some(k) => bounded_arr(k, "k", 1024)?
                .iter()
                .map(|x| {
                    x.as_u64()
                        .and_then(|k| u32::try_from(k).ok())
                        .ok_or_else(|| perr("zero orders must be non-negative integers"))
                })
                .collect::<Result<Vec<_>>>()?,
            None => Vec::new(),
        };
        let fam = ScaledFamily {
            a: rat_from_json(field(fm, "a")?)?,
            lambdas,
            zero_orders,
            genus: genus_of(fm)?,
        };
        fam.validate()?;
        return Ok(RhoInput::Family(fam));
    }
    let n = usize_of(field(m, "n")?, "n")?;
    if n == 0 || n > MAX_N {
        return Err(perr(format!("n must lie in 1..={MAX_N}")));
    }
    let gamma = bounded_arr(field(m, "gamma")?, "gamma", 1024)?
        .iter()
        .map(|row| rats_from_json(row, "gamma row", MAX_N))
        .collect::<Result<Vec<_>>>()?;
    Ok(RhoInput::Gamma {
        n,
        genus: genus_of(m)?,
        gamma,
    })
}

pub fn rho_vector_to_json(r: &RhoVector) -> Value {
    json!({
        "rhoOverPi": r.over_pi.iter().map(rat_to_json).collect::<Vec<_>>(),
        "rho": r.over_pi.iter().map(|x| crate::rat::to_f64(x) * std::f64::consts::PI).collect::<Vec<_>>(),
        "in4piN": r.in_4pi_n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat;

    #[test]
    fn rational_forms() {
        assert_eq!(rat_from_json(&json!("3/6")).unwrap(), rat(1, 2));
        assert_eq!(rat_from_json(&json!(-4)).unwrap(), int(-4));
        assert!(rat_from_json(&json!(0.5)).is_err());
        assert!(rat_from_json(&json!("1/0")).is_err());
        assert_eq!(rat_to_json(&int(3)), json!("3/1"));
    }

    #[test]
    fn twisted_roundtrip() {
        let v = json!({
            "locus": [{"re": "0/1", "im": "0/1"}, {"re": "1/1", "im": "1/2"}],
            "twist": ["7/3", "-1/2"],
            "numer": [{"re": "1/1"}, "2/1"],
            "denomExp": [1, 0]
        });
        let f = twisted_from_json(&v).unwrap();
        assert_eq!(twisted_from_json(&twisted_to_json(&f)).unwrap(), f);
    }

    #[test]
    fn exponent_cap() {
        let v = json!({"locus": [0], "twist": ["100000/1"], "numer": [1], "denomExp": [0]});
        assert!(matches!(twisted_from_json(&v), Err(Error::Parse(_))));
    }

    #[test]
    fn curve_roundtrip_and_locus_check() {
        let c = Curve::power_curve(&[int(0), rat(1, 2), rat(5, 3)]).unwrap();
        let back = curve_from_json(&curve_to_json(&c)).unwrap();
        assert_eq!(back, c);
        let mut v = curve_to_json(&c);
        v["components"][1]["locus"] = json!([1]);
        assert!(curve_from_json(&v).is_err());
    }

    #[test]
    fn prescribed_roundtrip() {
        let v = json!({"n": 2, "gamma0": ["1/2", "1/3"], "points": [{"re": "1/1", "im": "0/1"}], "ram": [[1, 0]]});
        let d = prescribed_from_json(&v).unwrap();
        assert_eq!(prescribed_from_json(&prescribed_to_json(&d)).unwrap(), d);
        let bad = json!({"n": 2, "gamma0": ["-1/1", "0/1"], "points": [], "ram": []});
        assert!(matches!(prescribed_from_json(&bad), Err(Error::GammaOutOfRange { index: 1, .. })));
    }

    #[test]
    fn ensemble_roundtrip() {
        let v = json!({"n": 2, "forms": [
            [{"pole": {"re": "0/1", "im": "0/1"}, "residue": "1/2"}, {"factor": [1, 0, 1], "residue": "1/1"}],
            [{"pole": {"re": "-1/1", "im": "0/1"}, "residue": "1/1"}]
        ]});
        let e = ensemble_from_json(&v).unwrap();
        // z^2 + 1 splits over the Gaussian rationals
        assert_eq!(e.forms()[0].poles().len(), 3);
        assert_eq!(ensemble_from_json(&ensemble_to_json(&e)).unwrap(), e);
        let e2 = ensemble_from_json(&json!({"forms": [[{"factor": [-2, 0, 1], "residue": 2}]]})).unwrap();
        assert_eq!(e2.forms()[0].factor_poles().len(), 1);
        assert_eq!(ensemble_from_json(&ensemble_to_json(&e2)).unwrap(), e2);
    }

    #[test]
    fn grid_forms() {
        let g = grid_from_json(&json!({"re": [-1.0, 1.0], "im": [-1, 1], "h": 0.5})).unwrap();
        assert_eq!(g.node_counts(), (5, 5));
        let g = grid_from_arg("-1,1,-1,1,11,21", 1e-3, Some(0.1)).unwrap();
        assert_eq!(g.node_counts(), (11, 21));
        assert!(grid_from_arg("1,-1,0,1", 1e-3, None).is_err());
    }

    #[test]
    fn rho_inputs() {
        let r = rho_input_from_json(&json!({"n": 2, "genus": 0, "gamma": [["1/2", "0/1"]]})).unwrap();
        assert!(matches!(r, RhoInput::Gamma { n: 2, .. }));
        let f = rho_input_from_json(&json!({"family": {"a": "1/1", "lambdas": [1, 2], "k": [1]}})).unwrap();
        assert!(matches!(f, RhoInput::Family(_)));
    }
}
