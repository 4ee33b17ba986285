use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde_json::{json, Value};

use nataf_link::baselines::bisection_auto;
use nataf_link::link::DegreeOptions;
use nataf_link::matrix::map_correlation_matrix;
use nataf_link::tables::{run_table, table1, BenchOptions, CaseReport, Table, Table1Row};
use nataf_link::{
    build_link, select_degree, BuildOptions, ClosedFormCase, DegreeSelection, Error, Marginal,
    MatrixSpec, PairLink, PairOptions, PairSpec,
};

use crate::output::{sig10, sink};
use crate::{BenchArgs, CurveArgs, LinkArgs, MatrixArgs, Method, SolveArgs};

pub enum Failure {
    Input(String),
    Infeasible(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Infeasible(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Input(m) | Failure::Infeasible(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_infeasible() {
            Failure::Infeasible(e.to_string())
        } else {
            Failure::Input(e.to_string())
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text =
        fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn pair_options(link: &LinkArgs, closed_form: bool) -> PairOptions {
    let selection = DegreeOptions {
        step: link.step,
        delta: link.delta,
        ..Default::default()
    };
    PairOptions {
        degree: link.degree,
        selection,
        closed_form,
        ..Default::default()
    }
}

/// The link for a pair plus the selection record when the degree was chosen.
struct Prepared {
    link: PairLink,
    selection: Option<DegreeSelection>,
}

fn prepare(mi: &Marginal, mj: &Marginal, opts: &PairOptions) -> Result<Prepared, Failure> {
    if opts.closed_form {
        if let Some(case) = ClosedFormCase::detect(mi, mj) {
            return Ok(Prepared {
                link: PairLink::ClosedForm(case),
                selection: None,
            });
        }
    }
    Ok(match opts.degree {
        Some(n) => Prepared {
            link: PairLink::Polynomial(build_link(mi, mj, n, opts.build())?),
            selection: None,
        },
        None => {
            let sel = select_degree(mi, mj, &opts.selection)?;
            Prepared {
                link: PairLink::Polynomial(sel.polynomial.clone()),
                selection: Some(sel),
            }
        }
    })
}

fn link_json(p: &Prepared) -> Value {
    match &p.link {
        PairLink::ClosedForm(case) => {
            let mut v = json!({ "route": "closed_form" });
            if let (Some(obj), Value::Object(fields)) = (v.as_object_mut(), json!(case)) {
                obj.extend(fields);
            }
            v
        }
        PairLink::Polynomial(poly) => json!({
            "route": poly.route,
            "degree": poly.degree(),
            "coefficients": poly.b,
            "quadrature_points": poly.meta.quadrature_points,
            "warnings": poly.warnings(),
        }),
    }
}

fn selection_json(sel: &Option<DegreeSelection>) -> Value {
    match sel {
        None => Value::Null,
        Some(s) => json!({ "degree": s.degree, "capped": s.capped, "trace": s.trace }),
    }
}

fn describe_link(p: &Prepared) -> String {
    match (&p.link, &p.selection) {
        (PairLink::ClosedForm(case), _) => format!("closed form {case:?}"),
        (PairLink::Polynomial(poly), Some(sel)) => format!(
            "polynomial, degree {} ({})",
            poly.degree(),
            if sel.capped {
                "selection hit the degree cap"
            } else {
                "selected"
            }
        ),
        (PairLink::Polynomial(poly), None) => {
            format!("polynomial, degree {} (fixed)", poly.degree())
        }
    }
}

fn link_warnings(p: &Prepared) -> Vec<String> {
    p.link
        .polynomial()
        .map(|q| q.warnings().to_vec())
        .unwrap_or_default()
}

pub fn solve(args: &SolveArgs) -> Outcome {
    let spec: PairSpec = read_json(&args.pair)?;
    let targets = match args.rho_x {
        Some(r) if !(-1.0..=1.0).contains(&r) => {
            return Err(Failure::Input(format!("rho_x = {r} is not a correlation")))
        }
        Some(r) => vec![r],
        None => spec.targets()?,
    };
    if targets.is_empty() {
        return Err(Failure::Input(
            "no rho_x given (use --rho-x or the pair file)".into(),
        ));
    }
    let (mi, mj) = spec.build()?;
    let names = format!("{} x {}", mi.name(), mj.name());

    if args.method == Some(Method::Bisect) {
        return solve_bisect(args, &mi, &mj, &names, &targets);
    }
    let closed = match args.method {
        Some(Method::Closed) => {
            if ClosedFormCase::detect(&mi, &mj).is_none() {
                return Err(Failure::Input(format!("{names} has no closed-form link")));
            }
            true
        }
        Some(Method::Poly) => false,
        _ => !args.link.no_closed_form,
    };
    let opts = pair_options(&args.link, closed);
    let prepared = prepare(&mi, &mj, &opts)?;

    let mut results = Vec::new();
    let mut infeasible = Vec::new();
    let mut range = None;
    for &t in &targets {
        match prepared.link.solve(t, opts.tol) {
            Ok(r) => {
                range = Some(r.feasible_range);
                results.push(json!({
                    "rho_x": t,
                    "rho_z": r.rho_z,
                    "residual": r.residual,
                    "method": r.method,
                    "warnings": r.warnings,
                }));
            }
            Err(Error::Infeasible { rho_x, lo, hi }) => {
                range = Some((lo, hi));
                infeasible.push(format!(
                    "rho_x = {rho_x} is infeasible; feasible range [{}, {}]",
                    sig10(lo),
                    sig10(hi)
                ));
                results.push(
                    json!({ "rho_x": rho_x, "error": "infeasible", "feasible_range": [lo, hi] }),
                );
            }
            Err(e) => return Err(e.into()),
        }
    }

    let mut out = std::io::stdout().lock();
    if args.json {
        let doc = json!({
            "pair": [mi.name(), mj.name()],
            "link": link_json(&prepared),
            "selection": selection_json(&prepared.selection),
            "feasible_range": range,
            "results": results,
        });
        writeln!(out, "{}", serde_json::to_string_pretty(&doc).expect("json"))?;
    } else {
        let mut s = String::new();
        writeln!(s, "pair: {names}").unwrap();
        writeln!(s, "link: {}", describe_link(&prepared)).unwrap();
        if let Some((lo, hi)) = range {
            writeln!(s, "feasible range: [{}, {}]", sig10(lo), sig10(hi)).unwrap();
        }
        for r in &results {
            if let Some(z) = r["rho_z"].as_f64() {
                writeln!(
                    s,
                    "rho_x = {} -> rho_z = {} (residual {:.2e})",
                    r["rho_x"],
                    sig10(z),
                    r["residual"].as_f64().unwrap_or(0.0)
                )
                .unwrap();
            }
        }
        if let Some(p) = prepared.link.polynomial() {
            let c: Vec<String> = p.b.iter().map(|&v| sig10(v)).collect();
            writeln!(s, "coefficients (ascending powers): [{}]", c.join(", ")).unwrap();
        }
        for w in link_warnings(&prepared) {
            writeln!(s, "warning: {w}").unwrap();
        }
        write!(out, "{s}")?;
    }
    if infeasible.is_empty() {
        Ok(())
    } else {
        Err(Failure::Infeasible(infeasible.join("\n")))
    }
}

fn solve_bisect(
    args: &SolveArgs,
    mi: &Marginal,
    mj: &Marginal,
    names: &str,
    targets: &[f64],
) -> Outcome {
    let mut results = Vec::new();
    let mut infeasible = Vec::new();
    for &t in targets {
        match bisection_auto(mi, mj, t, args.epsilon) {
            Ok(r) => results.push(json!({
                "rho_x": t,
                "rho_z": r.rho_z,
                "iterations": r.iterations,
                "counters": r.counters,
            })),
            Err(Error::Infeasible { rho_x, lo, hi }) => {
                infeasible.push(format!(
                    "rho_x = {rho_x} is infeasible; feasible range [{}, {}]",
                    sig10(lo),
                    sig10(hi)
                ));
                results.push(
                    json!({ "rho_x": rho_x, "error": "infeasible", "feasible_range": [lo, hi] }),
                );
            }
            Err(e) => return Err(e.into()),
        }
    }
    let mut out = std::io::stdout().lock();
    if args.json {
        let doc = json!({ "pair": [mi.name(), mj.name()], "method": "bisection", "epsilon": args.epsilon, "results": results });
        writeln!(out, "{}", serde_json::to_string_pretty(&doc).expect("json"))?;
    } else {
        writeln!(
            out,
            "pair: {names}\nmethod: bisection (epsilon {})",
            args.epsilon
        )?;
        for r in &results {
            if let Some(z) = r["rho_z"].as_f64() {
                let c = &r["counters"];
                writeln!(
                    out,
                    "rho_x = {} -> rho_z = {} ({} iterations, {} quantile calls, {} bivariate cdf calls)",
                    r["rho_x"], sig10(z), r["iterations"], c["quantile_calls"], c["bivariate_cdf_calls"]
                )?;
            }
        }
    }
    if infeasible.is_empty() {
        Ok(())
    } else {
        Err(Failure::Infeasible(infeasible.join("\n")))
    }
}

pub fn matrix(args: &MatrixArgs) -> Outcome {
    let spec: MatrixSpec = read_json(&args.spec)?;
    let marginals = spec
        .marginals
        .iter()
        .map(|m| m.build())
        .collect::<Result<Vec<_>, _>>()?;
    let opts = pair_options(&args.link, !args.link.no_closed_form);
    let rep = map_correlation_matrix(&marginals, &spec.r_x, &opts)?;
    let mut doc = json!({
        "R_Z": rep.r_z,
        "repaired": rep.repaired,
        "max_perturbation": rep.max_perturbation,
        "min_eigenvalue": rep.min_eigenvalue,
        "pairs": rep.pairs,
    });
    if rep.repaired {
        doc["R_Z_unrepaired"] = json!(rep.r_z_raw);
    }
    let mut w = sink(args.out.as_deref())?;
    writeln!(w, "{}", serde_json::to_string_pretty(&doc).expect("json"))?;
    if let Some(path) = &args.out {
        println!(
            "wrote {}: {}x{} R_Z, {}, min eigenvalue {}",
            path.display(),
            marginals.len(),
            marginals.len(),
            if rep.repaired {
                format!(
                    "repaired by eigenvalue clipping (max change {})",
                    sig10(rep.max_perturbation)
                )
            } else {
                "positive definite as mapped".to_string()
            },
            sig10(rep.min_eigenvalue)
        );
    }
    Ok(())
}

pub fn curve(args: &CurveArgs) -> Outcome {
    if !(args.grid > 0.0 && args.grid <= 1.0) {
        return Err(Failure::Input(format!(
            "grid step {} must lie in (0, 1]",
            args.grid
        )));
    }
    let spec: PairSpec = read_json(&args.pair)?;
    let (mi, mj) = spec.build()?;
    let opts = pair_options(&args.link, !args.link.no_closed_form);
    let prepared = prepare(&mi, &mj, &opts)?;
    let n = (2.0 / args.grid).round() as usize;

    let mut w = sink(args.out.as_deref())?;
    writeln!(w, "# pair: {} x {}", mi.name(), mj.name())?;
    writeln!(w, "# link: {}", describe_link(&prepared))?;
    for warning in link_warnings(&prepared) {
        writeln!(w, "# warning: {warning}")?;
    }
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(["rho_z", "rho_x"])?;
    for k in 0..=n {
        let r = (-1.0 + 2.0 * k as f64 / n as f64).clamp(-1.0, 1.0);
        csv.write_record([sig10(r), sig10(prepared.link.evaluate(r))])?;
    }
    csv.flush()?;
    Ok(())
}

pub fn bench(args: &BenchArgs) -> Outcome {
    let mut out = std::io::stdout().lock();
    if args.table == Table::T1 {
        let rows = table1(&BuildOptions::n_plus_one())?;
        if args.json {
            writeln!(
                out,
                "{}",
                serde_json::to_string_pretty(&rows).expect("json")
            )?;
        } else {
            write!(out, "{}", format_table1(&rows))?;
        }
        return Ok(());
    }
    let opts = BenchOptions {
        epsilon: args.epsilon,
        mc_samples: (args.mc_samples > 0).then_some(args.mc_samples),
        seed: args.seed,
        ..Default::default()
    };
    let reports = run_table(args.table, &opts)?;
    if args.json {
        writeln!(
            out,
            "{}",
            serde_json::to_string_pretty(&reports).expect("json")
        )?;
    } else {
        for r in &reports {
            write!(out, "{}", format_case(r))?;
        }
    }
    Ok(())
}

fn format_table1(rows: &[Table1Row]) -> String {
    let mut s = String::from("uniform01 x uniform01, (j+1)-point rules\n");
    writeln!(
        s,
        "{:>3} {:>12} {:>10} {:>7} {:>12} {:>10} {:>7}",
        "j", "dP_j", "printed", "rel", "dP*_j", "printed", "rel"
    )
    .unwrap();
    for r in rows {
        writeln!(
            s,
            "{:>3} {:>12.4e} {:>10.1e} {:>6.1}% {:>12.4e} {:>10.1e} {:>6.1}%",
            r.j,
            r.delta_p,
            r.ref_delta_p,
            100.0 * (r.delta_p / r.ref_delta_p - 1.0),
            r.delta_p_star,
            r.ref_delta_p_star,
            100.0 * (r.delta_p_star / r.ref_delta_p_star - 1.0)
        )
        .unwrap();
    }
    s
}

fn opt(v: Option<f64>, f: impl Fn(f64) -> String) -> String {
    v.map(f).unwrap_or_else(|| "-".into())
}

fn format_case(r: &CaseReport) -> String {
    let mut s = String::new();
    writeln!(s, "{}", r.label).unwrap();
    writeln!(
        s,
        "  degree used {} (printed {}; selection gives {}{})",
        r.degree_used,
        r.ref_degree.map_or("-".into(), |d| d.to_string()),
        r.auto_degree,
        if r.auto_capped { ", cap reached" } else { "" }
    )
    .unwrap();
    writeln!(
        s,
        "  polynomial route cost: {} quantile calls, {} He/phi rows",
        r.poly_counters.quantile_calls, r.poly_counters.hermite_and_pdf_calls
    )
    .unwrap();
    writeln!(
        s,
        "  {:>6} {:>7} {:>9} {:>9} {:>9} {:>9} {:>7} {:>7} {:>9} {:>6}",
        "rho_x",
        "printed",
        "poly",
        "d_poly",
        "bisect",
        "d_bisect",
        "q_calls",
        "cdf",
        "mc_rho_x",
        "mc_z"
    )
    .unwrap();
    for row in &r.rows {
        let c = row.bisect_counters.unwrap_or_default();
        writeln!(
            s,
            "  {:>6.2} {:>7.3} {:>9} {:>9} {:>9} {:>9} {:>7} {:>7} {:>9} {:>6}",
            row.rho_x,
            row.ref_rho_z,
            opt(row.poly_rho_z, |v| format!("{v:.5}")),
            opt(row.poly_rho_z, |v| format!("{:+.1e}", v - row.ref_rho_z)),
            opt(row.bisect_rho_z, |v| format!("{v:.5}")),
            opt(row.bisect_rho_z, |v| format!("{:+.1e}", v - row.ref_rho_z)),
            c.quantile_calls,
            c.bivariate_cdf_calls,
            opt(row.mc.map(|m| m.rho_hat), |v| format!("{v:.5}")),
            opt(
                row.mc.map(|m| (m.rho_hat - row.rho_x) / m.std_error),
                |v| format!("{v:+.1}")
            ),
        )
        .unwrap();
        for e in &row.errors {
            writeln!(s, "         {e}").unwrap();
        }
    }
    s
}
