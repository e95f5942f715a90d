//! The verification commands. Each returns a [`Report`]; library errors that
//! are not check outcomes propagate as internal errors.

use anyhow::Result;
use num_complex::Complex64 as C64;
use serde_json::{json, Value};

use quatsphere::fock::{entry_deviation, format_expr, DiagFn, Mode, OperatorExpr, Primitive};
use quatsphere::fredholm::{am_index, calibrate_sign, index, IndexResult, SIGMA_GLOBAL};
use quatsphere::qgroup::{assignment_search, elementary_rep, eta, CircleMode, GeneratorAssignment};
use quatsphere::relations::{
    build_presentation, calibrate_rho_eps, compare_q0, q_zero_presentation, verify, Generators, PresentationParams,
};
use quatsphere::report::{num, Record, Report};
use quatsphere::spheres::{
    am_generators, circle_samples, homogeneity_probe, qds_to_sphere_convention, qds_tower, sigma_check,
    sphere_generators, AmGenerators,
};

use crate::config::{AssignmentChoice, ParamsChoice, RunConfig};

fn new_report(command: &str, cfg: &RunConfig) -> Report {
    Report::new(command, cfg.raw.clone())
}

fn assignment(cfg: &RunConfig, report: &mut Report) -> Result<GeneratorAssignment> {
    Ok(match &cfg.assignment {
        AssignmentChoice::Default => GeneratorAssignment::default_for(cfg.n)?,
        AssignmentChoice::Fixed(a) => a.clone(),
        AssignmentChoice::Search => {
            let s =
                assignment_search(cfg.n, cfg.d, if cfg.q == 0.0 { 0.5 } else { cfg.q }, cfg.band, cfg.residual_tol)?;
            report.push(Record::new(
                "assignment-search",
                json!({ "n": s.n, "d": s.d, "q": s.q, "band": s.band }),
                json!({ "winner": s.winner, "residual": num(s.winner_residual), "runner_up": num(s.runner_up_residual) }),
                json!(0.0),
                Some(cfg.residual_tol),
                s.winner_residual <= cfg.residual_tol,
            ));
            s.winner.parse()?
        }
    })
}

fn params(cfg: &RunConfig, a: &GeneratorAssignment, report: &mut Report) -> Result<PresentationParams> {
    Ok(match &cfg.params {
        ParamsChoice::Calibrated => PresentationParams::calibrated(cfg.n),
        ParamsChoice::Fixed(p) => p.clone(),
        ParamsChoice::Search => {
            let gens = Generators::new(eta(2 * cfg.n, cfg.n, CircleMode::Bilateral, a)?)?;
            let q = if cfg.q == 0.0 { 0.5 } else { cfg.q };
            let c = calibrate_rho_eps(cfg.n, &gens, q, cfg.d, cfg.band)?;
            report.push(Record::new(
                "rho-eps-calibration",
                json!({ "n": c.n, "d": c.d, "q": c.q, "band": c.band }),
                json!({
                    "rho": c.winner.rho,
                    "eps": c.winner.eps,
                    "residual": num(c.winner_residual),
                    "runner_up": num(c.runner_up_residual),
                }),
                json!(0.0),
                Some(cfg.residual_tol),
                c.separated && c.winner_residual <= cfg.residual_tol,
            ));
            c.winner
        }
    })
}

pub fn relations_verify(cfg: &RunConfig) -> Result<Report> {
    let mut report = new_report("relations-verify", cfg);
    let a = assignment(cfg, &mut report)?;
    let p = params(cfg, &a, &mut report)?;
    if cfg.band == 0 {
        report.push(Record::new("band", json!({ "band": 0 }), json!("diagnostic-only"), Value::Null, None, true));
    }
    let rels = if cfg.q == 0.0 { q_zero_presentation(cfg.n)? } else { build_presentation(cfg.n) };
    for k in cfg.ks() {
        let mut images = eta(k, cfg.n, CircleMode::Bilateral, &a)?;
        if cfg.q == 0.0 {
            images = images.iter().map(|y| y.at_q_zero()).collect::<Result<_, _>>()?;
        }
        let gens = Generators::new(images)?;
        for r in verify(&rels, &gens, &p, cfg.q, cfg.d, cfg.band)? {
            report.push(Record::new(
                format!("k={k}/{}", r.id),
                json!({ "k": k, "family": r.family.to_string(), "symbolic_zero": r.symbolic_zero }),
                num(r.value),
                json!(0.0),
                Some(cfg.residual_tol),
                r.value <= cfg.residual_tol,
            ));
        }
    }
    Ok(report)
}

fn index_record(id: &str, res: Result<IndexResult, quatsphere::fredholm::FredholmError>, m: i64, ell: usize) -> Record {
    let params = json!({ "m": m, "ell": ell });
    match res {
        Ok(r) => {
            let ok = r.stabilized && r.pairing == m && r.winding.abs() == r.index.abs();
            Record::new(
                id,
                params,
                json!({
                    "pairing": r.pairing,
                    "index": r.index,
                    "winding": r.winding,
                    "ladder": r.ladder.iter().map(|g| json!([g.d, g.ker, g.coker])).collect::<Vec<_>>(),
                }),
                json!(m),
                None,
                ok,
            )
        }
        Err(e) => Record::error(id, params, e.to_string()),
    }
}

pub fn index_cmd(cfg: &RunConfig) -> Result<Report> {
    let mut report = new_report("index", cfg);
    match calibrate_sign(&cfg.ladder) {
        Ok(s) => report.push(Record::new(
            "sigma-global",
            json!({ "m": 1, "ell": 1 }),
            json!(s),
            json!(SIGMA_GLOBAL),
            None,
            s == SIGMA_GLOBAL,
        )),
        Err(e) => report.push(Record::error("sigma-global", json!({ "m": 1, "ell": 1 }), e.to_string())),
    }
    for &ell in &cfg.ell {
        for &m in &cfg.m {
            let res = index(m, ell, &cfg.ladder, cfg.rank_tol);
            report.push(index_record(&format!("index[m={m},ell={ell}]"), res, m, ell));
        }
    }
    Ok(report)
}

pub fn ext_check(cfg: &RunConfig) -> Result<Report> {
    let mut report = new_report("ext-check", cfg);
    let n = cfg.n;
    let a = assignment(cfg, &mut report)?;
    let ks: Vec<usize> = match &cfg.k {
        None => (1..2 * n).collect(),
        Some(ks) => ks.iter().copied().filter(|&k| k < 2 * n).collect(),
    };
    for &k in &ks {
        for c in sigma_check(k, n, &a)? {
            report.push(Record::new(
                format!("sigma[k={},l={}]", c.k, c.l),
                json!({ "image": c.image, "expected": c.expected }),
                num(c.deviation),
                json!(0.0),
                Some(cfg.residual_tol),
                c.exact || c.deviation <= cfg.residual_tol,
            ));
        }
    }
    let samples = circle_samples(cfg.t0_samples);
    for &k in &ks {
        let h = homogeneity_probe(k, n, cfg.q, cfg.ess_d, &samples, &cfg.ess_grid, &a)?;
        let worst = h.curves.iter().filter_map(|c| c.values.last().copied()).fold(f64::INFINITY, f64::min);
        report.push(Record::new(
            format!("homogeneity[k={k}]"),
            json!({ "q": h.q, "d": h.d, "grid": cfg.ess_grid, "lift": h.lift }),
            json!({
                "min_final": num(worst),
                "curves": h.curves.iter().map(|c| json!({ "t0": c.t0, "values": c.values, "monotone": c.monotone })).collect::<Vec<_>>(),
            }),
            json!(h.target),
            Some(cfg.ess_tol),
            h.curves.iter().all(|c| c.pass),
        ));
        report.push(Record::new(
            format!("shift-probe[k={k}]"),
            json!({ "m": cfg.ess_grid.iter().max() }),
            num(h.shift_probe),
            json!(0.9),
            None,
            h.shift_pass,
        ));
    }
    for &ell in &cfg.ell {
        let a1 = am_generators(1, ell);
        let sphere = sphere_generators(ell + 1);
        let (head, last) = sphere.split_at(ell + 1);
        let mut dev = if a1.ops.len() == head.len() { 0.0f64 } else { f64::INFINITY };
        for (x, y) in a1.ops.iter().zip(head) {
            dev = dev.max(entry_deviation(x, y, 8, 0.0)?);
        }
        let ideal = AmGenerators::in_ideal(&last[0]);
        report.push(Record::new(
            format!("a1-sphere[ell={ell}]"),
            json!({ "ell": ell, "d": 8, "last_in_ideal": ideal }),
            num(dev),
            json!(0.0),
            None,
            dev == 0.0 && ideal,
        ));
        for m in 0..=2 {
            let res = am_index(m, ell, &cfg.ladder, cfg.rank_tol);
            report.push(index_record(&format!("am-pairing[m={m},ell={ell}]"), res, m, ell));
        }
    }
    Ok(report)
}

pub fn qzero_diff(cfg: &RunConfig) -> Result<Report> {
    let mut report = new_report("qzero-diff", cfg);
    let a = assignment(cfg, &mut report)?;
    let ell = cfg.sphere_ell.unwrap_or(2 * cfg.n - 1);
    let c = compare_q0(cfg.n, cfg.d, ell, &a)?;
    for r in &c.relations {
        report.push(Record::new(
            format!("relation/{}", r.id),
            json!({ "relation": r.relation, "sphere_ell": ell }),
            num(r.value),
            json!(0.0),
            None,
            r.exact,
        ));
    }
    for (j, dev) in c.generator_deviation.iter().enumerate() {
        report.push(Record::new(
            format!("generator/z{}", j + 1),
            json!({ "d": cfg.d, "sphere_ell": ell }),
            num(*dev),
            json!(0.0),
            None,
            *dev == 0.0,
        ));
    }
    Ok(report)
}

pub fn qds_check(cfg: &RunConfig) -> Result<Report> {
    let mut report = new_report("qds-check", cfg);
    for &ell in &cfg.ell {
        let tower = qds_to_sphere_convention(&qds_tower(ell), cfg.reverse);
        let sphere = sphere_generators(ell);
        let mut dev = if tower.len() == sphere.len() { 0.0f64 } else { f64::INFINITY };
        for (x, y) in tower.iter().zip(&sphere) {
            dev = dev.max(entry_deviation(x, y, cfg.d.min(8), 0.0)?);
        }
        report.push(Record::new(
            format!("qds[ell={ell}]"),
            json!({ "ell": ell, "reverse": cfg.reverse, "count": tower.len() }),
            num(dev),
            json!(0.0),
            None,
            dev == 0.0,
        ));
    }
    Ok(report)
}

fn nat(prims: &[Primitive]) -> OperatorExpr {
    OperatorExpr::word(Mode::Nat, prims)
}

fn diag(f: DiagFn) -> Primitive {
    Primitive::Diag(f)
}

pub fn rep_dump(cfg: &RunConfig) -> Result<Report> {
    let mut report = new_report("rep-dump", cfg);
    let n = cfg.n;
    let a = assignment(cfg, &mut report)?;
    for i in 1..=n {
        let rep = elementary_rep(i, n)?;
        for r in 1..=2 * n {
            for c in 1..=2 * n {
                report.push(Record::new(
                    format!("pi_s{i}[{r},{c}]"),
                    json!({ "i": i, "row": r, "col": c }),
                    json!(format_expr(rep.entry(r, c))),
                    Value::Null,
                    None,
                    true,
                ));
            }
        }
    }
    for k in 1..=2 * n {
        for (l, y) in eta(k, n, CircleMode::Bilateral, &a)?.iter().enumerate() {
            report.push(Record::new(
                format!("y[l={},k={k}]", l + 1),
                json!({ "k": k, "l": l + 1 }),
                json!(format_expr(y)),
                Value::Null,
                None,
                true,
            ));
        }
    }

    // The printed table of the last elementary representation.
    let pn = elementary_rep(n, n)?;
    let qp = |s, o| diag(DiagFn::QPow { slope: s, offset: o });
    let root = diag(DiagFn::Sq1m { slope: 4, offset: 4 });
    let printed = [
        ((n, n), nat(&[root, Primitive::Shift])),
        ((n + 1, n + 1), nat(&[Primitive::CoShift, root])),
        ((n, n + 1), nat(&[qp(2, 2)]).scale(C64::new(-1.0, 0.0))),
        ((n + 1, n), nat(&[qp(2, 0)])),
    ];
    for ((r, c), want) in printed {
        let got = pn.entry(r, c);
        report.push(Record::new(
            format!("printed/pi_s{n}[{r},{c}]"),
            json!({ "expected": format_expr(&want) }),
            json!(format_expr(got)),
            json!(format_expr(&want)),
            None,
            *got == want,
        ));
    }

    // y_k^k = t ⊗ q^N ⊗ ⋯ ⊗ q^{2N} ⊗ q^N ⊗ ⋯ for n < k < 2n.
    for k in n + 1..2 * n {
        let mut want = OperatorExpr::word(Mode::Int, &[Primitive::CoShift]);
        for f in 1..k {
            let slope = if f == n { 2 } else { 1 };
            want = want.tensor(&nat(&[qp(slope, 0)]));
        }
        let got = eta(k, n, CircleMode::Bilateral, &a)?[k - 1].clone();
        report.push(Record::new(
            format!("closed-form/y[k={k}]"),
            json!({ "k": k }),
            json!(format_expr(&got)),
            json!(format_expr(&want)),
            None,
            got == want,
        ));
    }

    // η at the first level sends z_j to t δ_{1j}.
    let y1 = eta(1, n, CircleMode::Bilateral, &a)?;
    let ok = y1.iter().enumerate().all(|(j, y)| {
        if j == 0 {
            *y == OperatorExpr::word(Mode::Int, &[Primitive::CoShift])
        } else {
            y.is_zero()
        }
    });
    report.push(Record::new(
        "first-level",
        json!({ "k": 1 }),
        json!(y1.iter().map(format_expr).collect::<Vec<_>>()),
        json!("t δ_{1j}"),
        None,
        ok,
    ));
    Ok(report)
}
