use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use toric_core::construct::{
    construct as build, degree_vector_bound, enumerate_degree_vectors, expected_degrees, expected_lambda_order,
    infinity_data_closed_form, total_ram_weight, PrescribedData,
};
use toric_core::ensemble::{
    branch_test_residue, character_curve, compute_rho, default_basepoint, monodromy_at, scaled_family_rho,
};
use toric_core::metrics::{cone_angle_fit, default_fit_radii, evaluate_grid, summarize, write_grid_csv, GridSpec};
use toric_core::rat::{int, Rat};
use toric_core::schema::{
    curve_from_json, curve_to_json, datum_to_json, ensemble_input_from_json, ensemble_to_json, gauss_to_json,
    grid_from_arg, grid_from_json, parse_json, point_to_json, prescribed_from_json, prescribed_to_json, rat_to_json,
    rho_input_from_json, rho_vector_to_json, RhoInput,
};
use toric_core::singularity::{classify_all, classify_at_infinity, classify_at, divisor_balance};
use toric_core::{Curve, Error, GaussRat, Point, Result};

use crate::{Common, EnsembleArgs, MetricsArgs};

struct Input {
    value: Value,
    sha256: String,
}

fn read_input(path: &Path) -> Result<Input> {
    let bytes = fs::read(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let text = std::str::from_utf8(&bytes).map_err(|_| Error::Parse("input is not UTF-8".into()))?;
    Ok(Input {
        value: parse_json(text)?,
        sha256: hex::encode(Sha256::digest(&bytes)),
    })
}

fn distinct_paths(paths: &[&Path]) -> Result<()> {
    for (i, a) in paths.iter().enumerate() {
        for b in &paths[..i] {
            if a == b {
                return Err(Error::invalid(format!("path {} used twice", a.display())));
            }
        }
    }
    Ok(())
}

fn report_path(out: &Path, explicit: &Option<PathBuf>) -> PathBuf {
    explicit.clone().unwrap_or_else(|| {
        let mut s = out.as_os_str().to_owned();
        s.push(".report.json");
        PathBuf::from(s)
    })
}

fn header(command: &str, input: &Input) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("command".into(), json!(command));
    m.insert("inputSha256".into(), json!(input.sha256));
    m.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    m
}

fn write_json(path: &Path, v: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(v).map_err(|e| Error::Io(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn rats(v: &[Rat]) -> Value {
    Value::Array(v.iter().map(rat_to_json).collect())
}

fn data_json(c: &Curve) -> Result<Value> {
    Ok(Value::Array(classify_all(c)?.iter().map(datum_to_json).collect()))
}

/// Unimodular `L U` with small random Gaussian-integer entries, mixing only
/// indices that share a class.
fn random_unimodular(rng: &mut ChaCha8Rng, class: &[usize]) -> Vec<Vec<GaussRat>> {
    let m = class.len();
    let entry = |rng: &mut ChaCha8Rng| GaussRat::new(int(rng.gen_range(-2..=2)), int(rng.gen_range(-1..=1)));
    let mut l = vec![vec![GaussRat::from_i64(0); m]; m];
    let mut u = l.clone();
    for i in 0..m {
        l[i][i] = GaussRat::from_i64(1);
        u[i][i] = GaussRat::from_i64(1);
        for j in 0..i {
            if class[i] == class[j] {
                l[i][j] = entry(rng);
                u[j][i] = entry(rng);
            }
        }
    }
    (0..m)
        .map(|i| {
            (0..m)
                .map(|j| (0..m).fold(GaussRat::from_i64(0), |acc, k| acc + l[i][k].clone() * u[k][j].clone()))
                .collect()
        })
        .collect()
}

/// Singular data are invariant under a random unimodular recombination.
fn recombination_check(c: &Curve, seed: u64) -> Result<Value> {
    if !c.has_unit_weights() {
        return Ok(json!({"seed": seed, "skipped": "curve carries weights"}));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let comps = c.components();
    let class: Vec<usize> = comps
        .iter()
        .map(|f| comps.iter().position(|g| g.twist() == f.twist()).unwrap())
        .collect();
    let t = random_unimodular(&mut rng, &class);
    let moved = c.recombine(&t)?;
    let ok = data_json(&moved)? == data_json(c)?;
    Ok(json!({"seed": seed, "ok": ok}))
}

pub fn construct(a: &Common) -> Result<()> {
    distinct_paths(&[&a.config, &a.out])?;
    let input = read_input(&a.config)?;
    let d = prescribed_from_json(&input.value)?;
    let built = build(&d)?;
    let c = &built.curve;
    let mut ok = true;

    let expected = expected_degrees(&d);
    let actual = built.degrees();
    ok &= expected == actual;
    let total: usize = actual.iter().sum();
    let weight = total_ram_weight(&d);
    ok &= total as u64 == weight;

    let at0 = classify_at(c, &Point::Finite(GaussRat::from_i64(0)))?;
    let at0_ok = at0.gamma == d.gamma0;
    ok &= at0_ok;

    let mut points = Vec::new();
    for (row, z) in d.ram.iter().zip(&d.points) {
        let p = Point::Finite(z.clone());
        let dat = classify_at(c, &p)?;
        let gamma_ok = dat.gamma == row.iter().map(|&v| int(v as i64)).collect::<Vec<_>>();
        let mut orders = Vec::new();
        for k in 1..=d.n {
            let got = c.lambda_order_at(k, &p)?;
            let want = int(expected_lambda_order(row, k) as i64);
            let level_ok = got == want;
            ok &= level_ok;
            orders.push(json!({"k": k, "expected": rat_to_json(&want), "actual": rat_to_json(&got), "ok": level_ok}));
        }
        ok &= gamma_ok;
        points.push(json!({
            "point": gauss_to_json(z),
            "gamma": rats(&dat.gamma),
            "gammaOk": gamma_ok,
            "lambdaOrders": orders,
        }));
    }

    let mut unexpected = Vec::new();
    for r in c.ramification_locus()? {
        let prescribed = matches!(&r.point, Point::Finite(p) if d.points.contains(p));
        if !prescribed {
            unexpected.push(point_to_json(&r.point));
        }
    }
    ok &= unexpected.is_empty();

    let closed = infinity_data_closed_form(&d)?;
    let inf = classify_at_infinity(c)?;
    let inf_ok = inf.gamma == closed;
    ok &= inf_ok;

    let recombination = recombination_check(c, a.seed)?;
    ok &= recombination["ok"] != json!(false);

    let mut r = header("construct", &input);
    r.insert("input".into(), prescribed_to_json(&d));
    r.insert("betas".into(), rats(&built.betas));
    r.insert("curve".into(), curve_to_json(c));
    r.insert("singularities".into(), data_json(c)?);
    r.insert(
        "verification".into(),
        json!({
            "degrees": {"expected": expected, "actual": actual, "ok": expected == actual},
            "totalRamWeight": {"formula": weight, "sumOfDegrees": total, "ok": total as u64 == weight},
            "gammaAtZero": {"expected": rats(&d.gamma0), "classified": rats(&at0.gamma), "ok": at0_ok},
            "points": points,
            "unexpectedRamification": unexpected,
            "infinity": {"closedForm": rats(&closed), "classified": rats(&inf.gamma), "ok": inf_ok},
            "recombination": recombination,
        }),
    );
    r.insert("ok".into(), json!(ok));
    write_json(&a.out, &Value::Object(r))?;
    if !ok {
        eprintln!("warning: verification failed; see {}", a.out.display());
    }
    Ok(())
}

pub fn ensemble(a: &EnsembleArgs) -> Result<()> {
    let report = report_path(&a.common.out, &a.report);
    distinct_paths(&[&a.common.config, &a.common.out, &report])?;
    let input = read_input(&a.common.config)?;
    let parsed = ensemble_input_from_json(&input.value)?;
    let e = &parsed.ensemble;
    let rho = parsed.rho.clone().unwrap_or_else(|| vec![int(1); e.n()]);
    let basepoint = parsed.basepoint.clone().unwrap_or_else(|| default_basepoint(e));
    let c = match character_curve(e, &rho, &basepoint) {
        Ok(c) => c,
        Err(Error::DegenerateCurve) => {
            let witness = toric_core::ensemble::exact_curve(e)?;
            eprintln!(
                "degenerate ensemble: Lambda_{} vanishes identically for the generated components {}",
                e.n(),
                serde_json::to_string(&curve_to_json(&witness)).unwrap_or_default()
            );
            return Err(Error::DegenerateCurve);
        }
        Err(err) => return Err(err),
    };
    write_json(&a.common.out, &curve_to_json(&c))?;

    let mut poles = Vec::new();
    for p in e.exact_poles() {
        let turns = monodromy_at(e, &p)?;
        let branch = branch_test_residue(e, &p)?;
        let kind = classify_at(&c, &Point::Finite(p.clone()))?.kind;
        poles.push(json!({
            "pole": gauss_to_json(&p),
            "turns": rats(&turns),
            "branchByResidue": branch,
            "kind": kind.as_str(),
            "consistent": branch == (kind == toric_core::Kind::Branch),
        }));
    }
    let mut r = header("ensemble", &input);
    r.insert("ensemble".into(), ensemble_to_json(e));
    r.insert("rho".into(), rats(&rho));
    r.insert("basepoint".into(), gauss_to_json(&basepoint));
    r.insert("character".into(), json!(true));
    r.insert("singularities".into(), data_json(&c)?);
    r.insert("poles".into(), Value::Array(poles));
    r.insert("recombination".into(), recombination_check(&c.clone().with_weights(vec![1.0; c.n() + 1])?, a.common.seed)?);
    write_json(&report, &Value::Object(r))
}

pub fn classify(a: &Common) -> Result<()> {
    distinct_paths(&[&a.config, &a.out])?;
    let input = read_input(&a.config)?;
    let c = curve_from_json(&input.value)?;
    let data = classify_all(&c)?;
    let all = toric_core::singularity::classify_candidates(&c)?;
    let n = c.n() as i64;
    let balance = divisor_balance(&all);
    let mut r = header("classify", &input);
    r.insert("n".into(), json!(c.n()));
    r.insert("singularities".into(), Value::Array(data.iter().map(datum_to_json).collect()));
    r.insert(
        "balance".into(),
        json!({"sum": rat_to_json(&balance), "expected": rat_to_json(&int(-n * (n + 1))), "ok": balance == int(-n * (n + 1))}),
    );
    r.insert("recombination".into(), recombination_check(&c, a.seed)?);
    write_json(&a.out, &Value::Object(r))
}

fn parse_grid(a: &MetricsArgs) -> Result<GridSpec> {
    let h = a.h.unwrap_or(1e-3);
    let mut g = match &a.grid {
        None => GridSpec {
            re: [-1.0, 1.0],
            im: [-1.0, 1.0],
            h,
            safety: None,
            nodes: Some([101, 101]),
        },
        Some(s) if s.trim_start().starts_with('{') => grid_from_json(&parse_json(s)?)?,
        Some(s) if Path::new(s).is_file() => {
            let text = fs::read_to_string(s).map_err(|e| Error::Io(format!("{s}: {e}")))?;
            grid_from_json(&parse_json(&text)?)?
        }
        Some(s) => grid_from_arg(s, h, None)?,
    };
    if let Some(h) = a.h {
        g.h = h;
    }
    if a.safety.is_some() {
        g.safety = a.safety;
    }
    g.validate()?;
    Ok(g)
}

fn parse_radii(s: &Option<String>) -> Result<Vec<f64>> {
    match s {
        None => Ok(default_fit_radii()),
        Some(s) => s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|r| r.is_finite() && *r > 0.0)
                    .ok_or_else(|| Error::Parse(format!("bad radius {t:?}")))
            })
            .collect(),
    }
}

pub fn metrics(a: &MetricsArgs) -> Result<()> {
    let report = report_path(&a.common.out, &a.report);
    distinct_paths(&[&a.common.config, &a.common.out, &report])?;
    let grid = parse_grid(a)?;
    let radii = parse_radii(&a.radii)?;
    let input = read_input(&a.common.config)?;
    let c = curve_from_json(&input.value)?;
    c.require_nondegenerate()?;
    let rows = evaluate_grid(&c, &grid)?;
    let file = fs::File::create(&a.common.out).map_err(|e| Error::Io(format!("{}: {e}", a.common.out.display())))?;
    write_grid_csv(&rows, c.n(), std::io::BufWriter::new(file))?;
    let pde = summarize(&rows, c.n());

    let fits: Vec<Value> = classify_all(&c)?
        .iter()
        .map(|d| {
            let mut m = Map::new();
            m.insert("point".into(), point_to_json(&d.point));
            m.insert("gamma".into(), rats(&d.gamma));
            match cone_angle_fit(&c, &d.point, &radii) {
                Ok(f) => {
                    m.insert("fitted".into(), json!(f));
                }
                Err(e) => {
                    m.insert("error".into(), json!(e.to_string()));
                }
            }
            Value::Object(m)
        })
        .collect();
    let (nx, ny) = grid.node_counts();
    let mut r = header("metrics", &input);
    r.insert(
        "grid".into(),
        json!({"re": grid.re, "im": grid.im, "h": grid.h, "safety": grid.safety_radius(), "nodes": [nx, ny]}),
    );
    r.insert(
        "residual".into(),
        json!({
            "maxAbs": pde.max_abs,
            "rms": pde.rms,
            "maxEu": pde.max_eu,
            "relativeMax": pde.relative_max,
            "evaluated": pde.evaluated,
            "excluded": pde.excluded,
        }),
    );
    r.insert("radii".into(), json!(radii));
    r.insert("coneFits".into(), Value::Array(fits));
    write_json(&report, &Value::Object(r))
}

pub fn enumerate_infinity(a: &Common) -> Result<()> {
    distinct_paths(&[&a.config, &a.out])?;
    let input = read_input(&a.config)?;
    let d: PrescribedData = prescribed_from_json(&input.value)?;
    let cands = enumerate_degree_vectors(&d)?;
    let realized: Vec<u64> = build(&d)?.degrees().iter().map(|&k| k as u64).collect();
    let bound = degree_vector_bound(&d);
    let mut r = header("enumerate-infinity", &input);
    r.insert("input".into(), prescribed_to_json(&d));
    r.insert("totalRamWeight".into(), json!(total_ram_weight(&d)));
    r.insert("bound".into(), json!(bound.to_string()));
    r.insert("count".into(), json!(cands.len()));
    r.insert("withinBound".into(), json!((cands.len() as u128) <= bound));
    r.insert("closedForm".into(), rats(&infinity_data_closed_form(&d)?));
    r.insert(
        "realized".into(),
        json!({"degrees": realized, "enumerated": cands.iter().any(|c| c.degrees == realized)}),
    );
    r.insert(
        "candidates".into(),
        Value::Array(
            cands
                .iter()
                .map(|c| json!({"degrees": c.degrees, "gammaInfinity": rats(&c.gamma_infinity)}))
                .collect(),
        ),
    );
    write_json(&a.out, &Value::Object(r))
}

pub fn rho(a: &Common) -> Result<()> {
    distinct_paths(&[&a.config, &a.out])?;
    let input = read_input(&a.config)?;
    let mut r = header("rho", &input);
    match rho_input_from_json(&input.value)? {
        RhoInput::Gamma { n, genus, gamma } => {
            r.insert("rho".into(), rho_vector_to_json(&compute_rho(&gamma, genus, n)?));
        }
        RhoInput::Family(f) => {
            let res = scaled_family_rho(&f)?;
            let a_lambda = &f.a * f.lambdas.last().unwrap();
            let natural = a_lambda.is_integer() && a_lambda >= int(0);
            r.insert("aLambdaN".into(), rat_to_json(&a_lambda));
            r.insert("aLambdaNIsNatural".into(), json!(natural));
            r.insert("rho".into(), rho_vector_to_json(&res.definition));
            r.insert("allIn4piN".into(), json!(res.definition.in_4pi_n.iter().all(|&b| b)));
            r.insert("lowerTriangleFormula".into(), rho_vector_to_json(&res.lower_formula));
            r.insert("closedForm".into(), rho_vector_to_json(&res.closed_form));
            r.insert("closedFormMatches".into(), json!(res.closed_form_matches()));
        }
    }
    write_json(&a.out, &Value::Object(r))
}
