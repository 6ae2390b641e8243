//! Subcommand bodies. Each returns the output target and the finished
//! document; JSON documents always carry `inputs`, `result`, `defects` and
//! `tolerances`, with `null` standing for `+∞`.

use std::fs::File;
use std::io::{self, Read};
use std::path::PathBuf;

use serde_json::{json, Value};
use thermosemiring::entropy::{axiom_report, entropy2, entropy_chain};
use thermosemiring::kl_spaces::{cantor_report, multifractal_stats, BitString};
use thermosemiring::legendre::{
    biconjugate, conjugate, convexity_defect, uniform_grid, SampledFunction,
};
use thermosemiring::successor::sample_curve;
use thermosemiring::trees::{parse_tree, parse_tree_bounded, tree_eval, tree_eval_oracle};
use thermosemiring::witt::{commutator, defect_sweep, kl_closed_form_report, oplus, oplus_closed};
use thermosemiring::{Error, Measure, Result, TropicalValue, WittContext};

use crate::{
    AxiomArgs, CantorArgs, Command, CurveArgs, DefectArgs, EntropyArgs, Format, LegendreArgs,
    MultifractalArgs, OplusArgs, Thermo, TreeArgs,
};

/// Oracle agreement expected of trees with at most three leaves, and beyond.
const TREE_TOL_SMALL: f64 = 2e-3;
const TREE_TOL_LARGE: f64 = 5e-3;
const CLOSED_FORM_TOL: f64 = 1e-6;
const MONOTONE_TOL: f64 = 1e-12;

pub type Output = (PathBuf, Vec<u8>);

pub fn run(cmd: &Command) -> Result<Output> {
    match cmd {
        Command::Entropy(a) => entropy(a),
        Command::Oplus(a) => oplus_cmd(a),
        Command::Defect(a) => defect(a),
        Command::SuccessorCurve(a) => successor_curve(a),
        Command::TreeEval(a) => tree(a),
        Command::Legendre(a) => legendre(a),
        Command::Cantor(a) => cantor(a),
        Command::Multifractal(a) => multifractal(a),
        Command::Axioms(a) => axioms(a),
    }
}

fn document(inputs: Value, result: Value, defects: Value, tolerances: Value) -> Vec<u8> {
    let doc = json!({
        "inputs": inputs,
        "result": result,
        "defects": defects,
        "tolerances": tolerances,
    });
    let mut bytes = serde_json::to_vec_pretty(&doc).expect("JSON values always serialise");
    bytes.push(b'\n');
    bytes
}

fn to_json<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types always serialise")
}

fn context(th: &Thermo, deform: Option<f64>) -> Result<WittContext> {
    let ctx = WittContext::new(th.measure, th.t)?;
    match deform {
        Some(a) => ctx.with_deform(a),
        None => Ok(ctx),
    }
}

fn thermo_inputs(th: &Thermo) -> Value {
    json!({ "measure": th.measure.to_string(), "T": th.t })
}

fn tv(x: f64) -> Result<TropicalValue> {
    TropicalValue::new(x)
}

fn entropy(a: &EntropyArgs) -> Result<Output> {
    let m = &a.thermo.measure;
    if a.p.is_empty() && a.probs.is_none() {
        return Err(Error::Unsupported("give --p or --probs".into()));
    }
    let values =
        a.p.iter()
            .map(|&p| Ok(json!({ "p": p, "S": entropy2(m, p)? })))
            .collect::<Result<Vec<_>>>()?;
    let symmetry =
        a.p.iter()
            .map(|&p| (m.eval(p) - m.eval(1.0 - p)).abs())
            .fold(0.0, f64::max);
    let chain = a
        .probs
        .as_deref()
        .map(|ps| entropy_chain(m, ps))
        .transpose()?;
    let doc = document(
        json!({ "measure": m.to_string(), "p": a.p, "probs": a.probs, "seed": a.common.seed }),
        json!({ "values": values, "chain": chain }),
        json!({ "symmetry": symmetry }),
        json!({}),
    );
    Ok((a.common.out.clone(), doc))
}

fn oplus_cmd(a: &OplusArgs) -> Result<Output> {
    let ctx = context(&a.thermo, a.deform)?;
    let (x, y) = (tv(a.x)?, tv(a.y)?);
    let r = oplus(&ctx, x, y)?;
    let comm = commutator(&ctx, x, y)?;
    let closed = if a.deform.is_none() {
        oplus_closed(&ctx, x, y).ok()
    } else {
        None
    };
    let closed_gap = closed.map(|c| {
        if c == r.value {
            0.0
        } else {
            (c.value() - r.value.value()).abs()
        }
    });
    let kl_report = match (ctx.measure(), a.deform) {
        (Measure::Kl { .. }, None) if ctx.temperature() > 0.0 && x.is_finite() && y.is_finite() => {
            Some(to_json(&kl_closed_form_report(&ctx, &[(a.x, a.y)])?))
        }
        _ => None,
    };
    let doc = document(
        json!({ "measure": ctx.measure().to_string(), "T": ctx.temperature(), "deform": a.deform,
                "x": x, "y": y, "seed": a.common.seed }),
        json!({ "value": r.value, "argmin_p": r.argmin_p, "multiplicity_hint": r.multiplicity_hint,
                "closed": closed, "kl_closed_form": kl_report }),
        json!({ "commutator": comm, "closed_gap": closed_gap }),
        json!({ "solver": to_json(ctx.solver()), "closed_form": CLOSED_FORM_TOL }),
    );
    Ok((a.common.out.clone(), doc))
}

fn defect(a: &DefectArgs) -> Result<Output> {
    let ctx = context(&a.thermo, a.deform)?;
    let report = defect_sweep(&ctx, a.kind.into(), a.samples, a.common.seed)?;
    let mut inputs = thermo_inputs(&a.thermo);
    inputs["deform"] = json!(a.deform);
    inputs["kind"] = to_json(&report.kind);
    inputs["samples"] = json!(a.samples);
    inputs["seed"] = json!(a.common.seed);
    let doc = document(
        inputs,
        json!({ "max_defect": report.max_defect, "witness": report.witness }),
        json!({ report_key(&report.kind): report.max_defect }),
        json!({ "solver": to_json(ctx.solver()) }),
    );
    Ok((a.common.out.clone(), doc))
}

fn report_key(kind: &thermosemiring::witt::DefectKind) -> &'static str {
    match kind {
        thermosemiring::witt::DefectKind::Comm => "commutator",
        thermosemiring::witt::DefectKind::Assoc => "associator",
    }
}

fn successor_curve(a: &CurveArgs) -> Result<Output> {
    let ctx = context(&a.thermo, None)?;
    let curve = sample_curve(&ctx, a.xmin, a.xmax, a.step)?;
    let bytes = match a.format {
        Format::Csv => {
            let mut buf = Vec::new();
            curve.write_csv(&mut buf)?;
            buf
        }
        Format::Json => {
            let mut inputs = thermo_inputs(&a.thermo);
            inputs["xmin"] = json!(a.xmin);
            inputs["xmax"] = json!(a.xmax);
            inputs["step"] = json!(a.step);
            inputs["seed"] = json!(a.common.seed);
            document(
                inputs,
                json!({ "x": curve.xs, "lambda": curve.values, "argmin_p": curve.argmins,
                        "nondecreasing": curve.is_nondecreasing(MONOTONE_TOL) }),
                json!({ "max_second_difference": curve.max_second_difference() }),
                json!({ "monotone": MONOTONE_TOL, "solver": to_json(ctx.solver()) }),
            )
        }
    };
    Ok((a.common.out.clone(), bytes))
}

fn tree(a: &TreeArgs) -> Result<Output> {
    let ctx = context(&a.thermo, None)?;
    let t = match a.bound {
        Some(v) => parse_tree_bounded(&a.tree, v)?,
        None => parse_tree(&a.tree)?,
    };
    let xs = a.xs.iter().map(|&x| tv(x)).collect::<Result<Vec<_>>>()?;
    let value = tree_eval(&t, &ctx, &xs)?;
    let oracle = if a.oracle {
        Some(tree_eval_oracle(&t, &ctx, &xs)?)
    } else {
        None
    };
    let gap = oracle.map(|o| {
        if o == value {
            0.0
        } else {
            (o.value() - value.value()).abs()
        }
    });
    let tol = if t.leaf_count() <= 3 {
        TREE_TOL_SMALL
    } else {
        TREE_TOL_LARGE
    };
    let mut inputs = thermo_inputs(&a.thermo);
    inputs["tree"] = json!(t.to_string());
    inputs["bound"] = json!(t.arity_bound());
    inputs["xs"] = json!(xs);
    inputs["seed"] = json!(a.common.seed);
    let doc = document(
        inputs,
        json!({ "value": value, "oracle": oracle }),
        json!({ "oracle_gap": gap }),
        json!({ "oracle": tol }),
    );
    Ok((a.common.out.clone(), doc))
}

fn read_sampled(path: &PathBuf) -> Result<SampledFunction> {
    let io = |e: io::Error| Error::Sampled(format!("cannot read {}: {e}", path.display()));
    if path.as_os_str() == "-" {
        let mut text = Vec::new();
        io::stdin().lock().read_to_end(&mut text).map_err(io)?;
        SampledFunction::read_csv(text.as_slice())
    } else {
        SampledFunction::read_csv(File::open(path).map_err(io)?)
    }
}

fn legendre(a: &LegendreArgs) -> Result<Output> {
    let f = match &a.input {
        Some(p) => read_sampled(p)?,
        None => {
            let m = a.measure.validated()?;
            SampledFunction::from_fn(uniform_grid(0.0, 1.0, a.grid_step), |p| -m.eval(p))?
        }
    };
    let dual = uniform_grid(a.dual_min, a.dual_max, a.dual_step);
    let star = conjugate(&f, &dual)?;
    let bi = biconjugate(&f, &dual, f.grid())?;
    let gap = bi
        .values()
        .iter()
        .zip(f.values())
        .filter(|(_, v)| v.is_finite())
        .map(|(b, v)| (b - v).abs())
        .fold(0.0, f64::max);
    let excess = bi
        .values()
        .iter()
        .zip(f.values())
        .map(|(b, v)| b - v)
        .fold(f64::NEG_INFINITY, f64::max)
        .max(0.0);
    let emitted = if a.biconjugate { &bi } else { &star };
    let bytes = match a.format {
        Format::Csv => {
            let mut buf = Vec::new();
            emitted.write_csv(&mut buf)?;
            buf
        }
        Format::Json => document(
            json!({ "input": a.input.as_ref().map(|p| p.display().to_string()),
                    "measure": a.input.is_none().then(|| a.measure.to_string()),
                    "grid_step": a.grid_step, "dual_min": a.dual_min, "dual_max": a.dual_max,
                    "dual_step": a.dual_step, "biconjugate": a.biconjugate, "seed": a.common.seed }),
            json!({ "x": emitted.grid(), "f": emitted.values() }),
            json!({ "input_convexity": convexity_defect(&f), "conjugate_convexity": convexity_defect(&star),
                    "biconjugate_gap": gap, "biconjugate_excess": excess }),
            json!({ "biconjugate": 2e-3, "conjugate_convexity": 1e-10 }),
        ),
    };
    Ok((a.common.out.clone(), bytes))
}

fn cantor(a: &CantorArgs) -> Result<Output> {
    let prefix: BitString = a.prefix.parse()?;
    let r = cantor_report(&prefix, a.t, tv(a.x)?, tv(a.y)?)?;
    let doc = document(
        json!({ "prefix": a.prefix, "T": a.t, "x": a.x, "y": a.y, "seed": a.common.seed }),
        json!({ "q": r.q, "oplus": r.oplus, "argmin_p": r.argmin_p }),
        json!({ "comm_defect": r.comm_defect, "flipped_check": r.flipped_check }),
        json!({ "fair_coin": 1e-8, "flipped_check": 1e-8 }),
    );
    Ok((a.common.out.clone(), doc))
}

fn multifractal(a: &MultifractalArgs) -> Result<Output> {
    let s = multifractal_stats(a.q, a.p, a.l1, a.l2)?;
    let doc = document(
        json!({ "q": a.q, "p": a.p, "l1": a.l1, "l2": a.l2, "seed": a.common.seed }),
        to_json(&s),
        json!({}),
        json!({}),
    );
    Ok((a.common.out.clone(), doc))
}

fn axioms(a: &AxiomArgs) -> Result<Output> {
    let r = axiom_report(&a.measure, a.grid_step, a.tol, a.alpha)?;
    let mut defects = json!({
        "commutativity": r.commutativity.defect,
        "left_identity": r.left_identity.defect,
        "right_identity": r.right_identity.defect,
        "associativity": r.associativity.defect,
        "khinchin_additivity": r.khinchin_additivity.defect,
    });
    if let Some((_, c)) = &r.alpha_associativity {
        defects["alpha_associativity"] = json!(c.defect);
    }
    let doc = document(
        json!({ "measure": a.measure.to_string(), "alpha": a.alpha, "grid_step": a.grid_step,
                "seed": a.common.seed }),
        to_json(&r),
        defects,
        json!({ "axiom": a.tol }),
    );
    Ok((a.common.out.clone(), doc))
}
