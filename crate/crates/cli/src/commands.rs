// SPDX-License-Identifier: Apache-2.0

use std::f64::consts::PI;
use std::fmt::Display;

use bergman_core::automorphisms::{jacobian_base_slice, jacobian_fd, transform_residual, AutomorphismSpec};
use bergman_core::domain::{inner, DomainSpec};
use bergman_core::error::Error;
use bergman_core::hartogs::{
    frc_eval, frc_restriction_check, sample_pairs, ClosedFormFamily, GramFamily, HartogsDomain, KernelFamily, MAX_TERMS,
};
use bergman_core::json::to_pair;
use bergman_core::kernels::{kernel_eval, kernel_for_weight, kernel_from_gram, KernelModel};
use bergman_core::moments::{gram_auto, gram_exact, gram_montecarlo, gram_quadrature, GramMatrix};
use bergman_core::quadrature::QuadratureScheme;
use bergman_core::uniqueness::{
    boundary_inequality_check, characterize_ch, characterize_fbh, family_condition_check, moment_mismatch,
    recover_weight, sample_points, BoundaryVerdict, CharacterizationReport, CheckOptions, MomentTable, RecoveryBasis,
    Verdict,
};
use bergman_core::weight::Weight;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Basis, KernelSource, Method, RunConfig};
use crate::descriptors::{parse_domain, parse_map, parse_point_list, parse_scheme, parse_weight, spiral};
use crate::report::{num, Outcome, Report, Table};

/// Off-diagonal block bound for finite-difference Jacobians.
const BLOCK_TOL: f64 = 1e-8;

/// Series tolerance for Forelli-Rudin sums.
const FRC_TERM_TOL: f64 = 1e-14;

type CmdResult = Result<Report, String>;

fn fail<E: Display>(e: E) -> String {
    e.to_string()
}

fn to_value<T: Serialize>(v: &T) -> Result<Value, String> {
    serde_json::to_value(v).map_err(fail)
}

fn pairs(v: &[Complex64]) -> Vec<[f64; 2]> {
    v.iter().copied().map(to_pair).collect()
}

fn domain(cfg: &RunConfig) -> Result<Option<DomainSpec>, String> {
    cfg.domain.as_ref().map(parse_domain).transpose()
}

fn weight_with(cfg: &RunConfig, default_base: Option<DomainSpec>) -> Result<Weight, String> {
    let v = cfg.weight.as_ref().ok_or("weight: required")?;
    parse_weight("weight", v, domain(cfg)?.or(default_base), cfg.n)
}

fn weight(cfg: &RunConfig) -> Result<Weight, String> {
    weight_with(cfg, None)
}

fn full_space(cfg: &RunConfig) -> Option<DomainSpec> {
    Some(DomainSpec::FullSpace { n: cfg.n.unwrap_or(1) })
}

fn scheme(cfg: &RunConfig) -> Result<Option<QuadratureScheme>, String> {
    cfg.scheme.as_ref().map(parse_scheme).transpose()
}

fn default_radius(base: &DomainSpec) -> f64 {
    if base.is_bounded() {
        0.5
    } else {
        1.0
    }
}

fn hartogs(cfg: &RunConfig) -> Result<HartogsDomain, String> {
    HartogsDomain::new(weight(cfg)?, cfg.m.unwrap_or(1)).map_err(fail)
}

fn maps(cfg: &RunConfig, h: &HartogsDomain) -> Result<Vec<AutomorphismSpec>, String> {
    if cfg.maps.is_empty() {
        return Err("map: at least one map is required".into());
    }
    cfg.maps.iter().map(|v| parse_map(v, h, cfg.mu)).collect()
}

fn check_options(cfg: &RunConfig) -> Result<CheckOptions, String> {
    let d = CheckOptions::default();
    Ok(CheckOptions {
        match_tol: cfg.tolerance.unwrap_or(d.match_tol),
        mismatch_tol: cfg.mismatch_tolerance.unwrap_or(d.mismatch_tol),
        grid_radius: cfg.radius,
        grid_points: cfg.samples.map_or(d.grid_points, |s| s as usize),
        seed: cfg.seed,
        scheme: scheme(cfg)?,
    })
}

/// `K_{D,w}` in closed form when available, else from the Gram matrix.
fn weighted_kernel(w: &Weight, cfg: &RunConfig, source: Option<KernelSource>) -> Result<KernelModel, String> {
    let series = || -> Result<KernelModel, String> {
        let g = match scheme(cfg)? {
            Some(s) => gram_quadrature(&w.base, w, cfg.degree, &s),
            None => gram_auto(&w.base, w, cfg.degree),
        }
        .map_err(fail)?;
        kernel_from_gram(&g).map_err(fail)
    };
    match source {
        Some(KernelSource::Closed) => kernel_for_weight(w).map_err(fail),
        Some(KernelSource::Series) => series(),
        None => match kernel_for_weight(w) {
            Ok(k) => Ok(k),
            Err(Error::NoClosedForm) => series(),
            Err(e) => Err(fail(e)),
        },
    }
}

fn matrix_table(m: &bergman_core::linalg::CMatrix) -> Table {
    let mut t = Table::new(&["i", "j", "re", "im"]);
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            t.push(vec![i.to_string(), j.to_string(), num(m[(i, j)].re), num(m[(i, j)].im)]);
        }
    }
    t
}

pub fn gram(cfg: &RunConfig) -> CmdResult {
    let w = weight(cfg)?;
    let base = domain(cfg)?.unwrap_or(w.base);
    let g = match cfg.method {
        Method::Auto => gram_auto(&base, &w, cfg.degree),
        Method::Exact => gram_exact(&base, &w, cfg.degree),
        Method::Quadrature => gram_quadrature(&base, &w, cfg.degree, &scheme(cfg)?.unwrap_or_default()),
        Method::Montecarlo => gram_montecarlo(&base, &w, cfg.degree, cfg.samples.unwrap_or(100_000), cfg.seed),
    }
    .map_err(fail)?;
    Ok(Report {
        body: to_value(&g)?,
        table: Some(matrix_table(&g.entries)),
        outcome: Outcome::Computed,
    })
}

fn coordinate_header(n: usize) -> Vec<String> {
    let mut h = Vec::new();
    for name in ["z", "w"] {
        for k in 0..n {
            let label = if n == 1 { name.to_string() } else { format!("{name}{}", k + 1) };
            h.push(format!("re({label})"));
            h.push(format!("im({label})"));
        }
    }
    h.push("re(K)".into());
    h.push("im(K)".into());
    h
}

pub fn kernel_eval_cmd(cfg: &RunConfig) -> CmdResult {
    let model = match &cfg.gram {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| format!("gram: {}: {e}", path.display()))?;
            let g: GramMatrix = serde_json::from_str(&text).map_err(|e| format!("gram: {e}"))?;
            kernel_from_gram(&g).map_err(fail)?
        }
        None => weighted_kernel(&weight(cfg)?, cfg, cfg.kernel)?,
    };
    let base = model.base_domain();
    let n = base.dim();
    let pts = match &cfg.points {
        Some(v) => parse_point_list(v)?,
        None if n == 1 => spiral(cfg.grid.unwrap_or(10), cfg.radius.unwrap_or(default_radius(&base))),
        None => return Err("points: required for more than one variable".into()),
    };
    let rows: Vec<(usize, usize, Complex64)> = (0..pts.len() * pts.len())
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / pts.len(), idx % pts.len());
            kernel_eval(&model, &pts[i], &pts[j]).map(|k| (i, j, k)).map_err(fail)
        })
        .collect::<Result<_, _>>()?;
    let header = coordinate_header(n);
    let mut table = Table {
        header,
        rows: Vec::new(),
    };
    let mut values = Vec::new();
    for &(i, j, k) in &rows {
        let mut row = Vec::new();
        for c in pts[i].iter().chain(&pts[j]) {
            row.push(num(c.re));
            row.push(num(c.im));
        }
        row.push(num(k.re));
        row.push(num(k.im));
        table.push(row);
        values.push(json!({"z": pairs(&pts[i]), "w": pairs(&pts[j]), "k": to_pair(k)}));
    }
    let form = to_value(&model)?.get("form").cloned().unwrap_or(Value::Null);
    Ok(Report {
        body: json!({"model": form, "domain": to_value(&base)?, "values": values}),
        table: Some(table),
        outcome: Outcome::Computed,
    })
}

/// Bergman kernel of the unit ball `B^N`, `N!/π^N (1 − ⟨Z,W⟩)^{−N−1}`.
fn ball_kernel(z: &[Complex64], w: &[Complex64]) -> Complex64 {
    let n = z.len() as i32;
    let fact: f64 = (1..=n).map(f64::from).product();
    (Complex64::new(1.0, 0.0) - inner(z, w)).powi(-n - 1) * (fact / PI.powi(n))
}

pub fn frc_check(cfg: &RunConfig) -> CmdResult {
    let h = hartogs(cfg)?;
    let tol = cfg.tolerance_or(RunConfig::DEFAULT_TOLERANCE);
    let family: Box<dyn KernelFamily> = match ClosedFormFamily::new(h.weight.clone()) {
        Ok(f) => Box::new(f),
        Err(Error::NoClosedForm) => Box::new(GramFamily::new(h.weight.clone(), cfg.degree, scheme(cfg)?)),
        Err(e) => return Err(fail(e)),
    };
    let pts: Vec<(Vec<Complex64>, Vec<Complex64>)> = match &cfg.points {
        Some(v) => {
            let list = parse_point_list(v)?;
            if list.len() % 2 != 0 {
                return Err("points: frc-check takes an even number of points, read as pairs".into());
            }
            list.chunks(2).map(|c| (c[0].clone(), c[1].clone())).collect()
        }
        None => sample_pairs(
            &h,
            cfg.samples.unwrap_or(100) as usize,
            cfg.ratio.unwrap_or(0.5),
            cfg.radius.unwrap_or(if h.base.is_bounded() { 0.9 } else { 1.0 }),
            cfg.seed,
        )
        .map_err(fail)?,
    };
    // Ω is the unit ball when the base is a ball and p = 1 − ‖z‖²
    let is_ball = matches!(h.base, DomainSpec::UnitDisk | DomainSpec::UnitBall { .. })
        && h.weight.as_scaled_norm_power() == Some((1.0, 1.0));
    let n = h.base.dim();
    let reference = family.kernel(h.fiber_dim as u32).map_err(fail)?;
    let omega = |a: &[Complex64], b: &[Complex64]| -> bergman_core::error::Result<Complex64> {
        Ok(frc_eval(&h, a, b, family.as_ref(), MAX_TERMS, FRC_TERM_TOL)?.value)
    };
    let results: Vec<Value> = pts
        .iter()
        .map(|(p, q)| -> Result<Value, String> {
            let r = frc_eval(&h, p, q, family.as_ref(), MAX_TERMS, FRC_TERM_TOL).map_err(fail)?;
            let rest = frc_restriction_check(&h, &p[..n], &q[..n], &omega, &reference).map_err(fail)?;
            let mut v = json!({
                "z": pairs(p),
                "w": pairs(q),
                "value": to_pair(r.value),
                "terms_used": r.terms_used,
                "tail_estimate": r.tail_estimate,
                "converged": r.converged,
                "restriction_residual": rest.residual,
            });
            if is_ball {
                let b = ball_kernel(p, q);
                v["reference_error"] = json!((r.value - b).norm() / b.norm());
            }
            Ok(v)
        })
        .collect::<Result<_, _>>()?;
    let max = |key: &str| results.iter().filter_map(|v| v[key].as_f64()).fold(0.0, f64::max);
    let all_converged = results.iter().all(|v| v["converged"] == json!(true));
    let (max_rest, max_ref) = (max("restriction_residual"), max("reference_error"));
    let pass = all_converged && max_rest <= tol && max_ref <= tol;
    let mut table = Table::new(&["pair", "re(K)", "im(K)", "terms_used", "converged", "restriction_residual", "reference_error"]);
    for (i, v) in results.iter().enumerate() {
        table.push(vec![
            i.to_string(),
            num(v["value"][0].as_f64().unwrap_or(f64::NAN)),
            num(v["value"][1].as_f64().unwrap_or(f64::NAN)),
            v["terms_used"].to_string(),
            v["converged"].to_string(),
            num(v["restriction_residual"].as_f64().unwrap_or(f64::NAN)),
            v.get("reference_error").and_then(Value::as_f64).map_or(String::new(), num),
        ]);
    }
    let mut body = json!({
        "domain": to_value(&h)?,
        "pairs": results,
        "all_converged": all_converged,
        "max_restriction_residual": max_rest,
        "tolerance": tol,
        "pass": pass,
    });
    if is_ball {
        body["max_reference_error"] = json!(max_ref);
    }
    Ok(Report {
        body,
        table: Some(table),
        outcome: Outcome::from_pass(pass),
    })
}

pub fn transform_check(cfg: &RunConfig) -> CmdResult {
    let h = hartogs(cfg)?;
    let maps = maps(cfg, &h)?;
    let tol = cfg.tolerance_or(RunConfig::DEFAULT_TOLERANCE);
    let pts = match &cfg.points {
        Some(v) => parse_point_list(v)?,
        None => sample_points(
            h.base.dim(),
            cfg.radius.unwrap_or(default_radius(&h.base)),
            cfg.samples.unwrap_or(20) as usize,
            cfg.seed,
        ),
    };
    let kernel = weighted_kernel(&h.weight.pow(h.fiber_dim as u32), cfg, cfg.kernel)?;
    let mut table = Table::new(&["map", "residual"]);
    let mut entries = Vec::new();
    for (i, f) in maps.iter().enumerate() {
        let r = transform_residual(f, &kernel, &pts).map_err(fail)?;
        table.push(vec![i.to_string(), num(r)]);
        entries.push(json!({"map": to_value(&f.map)?, "residual": r}));
    }
    let pass = entries.iter().all(|e| e["residual"].as_f64().is_some_and(|r| r <= tol));
    Ok(Report {
        body: json!({"maps": entries, "points": pts.len(), "tolerance": tol, "pass": pass}),
        table: Some(table),
        outcome: Outcome::from_pass(pass),
    })
}

pub fn jacobian_check(cfg: &RunConfig) -> CmdResult {
    let h = hartogs(cfg)?;
    let maps = maps(cfg, &h)?;
    let tol = cfg.tolerance_or(1e-6);
    let step = cfg.step.unwrap_or(1e-5);
    let n = h.base.dim();
    let pts = match &cfg.points {
        Some(v) => parse_point_list(v)?,
        None => sample_points(
            n,
            cfg.radius.unwrap_or(default_radius(&h.base)),
            cfg.samples.unwrap_or(20) as usize,
            cfg.seed,
        ),
    };
    let zeros = vec![Complex64::new(0.0, 0.0); h.fiber_dim];
    let mut table = Table::new(&["map", "point", "det_error", "cauchy_riemann_defect", "block_defect"]);
    let mut entries = Vec::new();
    let mut pass = true;
    for (i, f) in maps.iter().enumerate() {
        let (mut det_err, mut cr, mut block) = (0.0f64, 0.0f64, 0.0f64);
        for (k, z) in pts.iter().enumerate() {
            let full: Vec<Complex64> = z.iter().chain(&zeros).copied().collect();
            let fd = jacobian_fd(f, &full, step).map_err(fail)?;
            let exact = jacobian_base_slice(f, z).map_err(fail)?;
            let e = (fd.determinant - exact).norm() / exact.norm();
            let b = (0..n)
                .flat_map(|r| (n..full.len()).map(move |c| (r, c)))
                .map(|(r, c)| fd.matrix[(r, c)].norm())
                .fold(0.0, f64::max);
            table.push(vec![i.to_string(), k.to_string(), num(e), num(fd.cauchy_riemann_defect), num(b)]);
            det_err = det_err.max(e);
            cr = cr.max(fd.cauchy_riemann_defect);
            block = block.max(b);
        }
        let ok = det_err <= tol && block <= BLOCK_TOL;
        pass &= ok;
        entries.push(json!({
            "map": to_value(&f.map)?,
            "max_det_error": det_err,
            "max_cauchy_riemann_defect": cr,
            "max_block_defect": block,
            "pass": ok,
        }));
    }
    Ok(Report {
        body: json!({"maps": entries, "step": step, "tolerance": tol, "block_tolerance": BLOCK_TOL, "pass": pass}),
        table: Some(table),
        outcome: Outcome::from_pass(pass),
    })
}

pub fn mismatch(cfg: &RunConfig) -> CmdResult {
    let w1 = weight(cfg)?;
    let v2 = cfg.weight2.as_ref().ok_or("weight2: required")?;
    let w2 = parse_weight("weight2", v2, domain(cfg)?.or(Some(w1.base)), cfg.n)?;
    let r = moment_mismatch(&w1, &w2, cfg.degree, cfg.unit_mass).map_err(fail)?;
    Ok(Report {
        body: to_value(&r)?,
        table: Some(matrix_table(&r.difference)),
        outcome: Outcome::Computed,
    })
}

pub fn recover(cfg: &RunConfig) -> CmdResult {
    let table = match &cfg.gram {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| format!("gram: {}: {e}", path.display()))?;
            let g: GramMatrix = serde_json::from_str(&text).map_err(|e| format!("gram: {e}"))?;
            MomentTable::from_gram(g).map_err(fail)?
        }
        None => MomentTable::new(&weight(cfg)?, cfg.degree).map_err(fail)?,
    };
    let basis = match cfg.basis {
        Some(Basis::Legendre) => RecoveryBasis::ShiftedLegendre,
        Some(Basis::Laguerre) => RecoveryBasis::Laguerre,
        None if table.weight.base.is_bounded() => RecoveryBasis::ShiftedLegendre,
        None => RecoveryBasis::Laguerre,
    };
    let degree = cfg.degree.min(table.degree);
    let r = recover_weight(&table, basis, degree, cfg.ridge).map_err(fail)?;
    let mut t = Table::new(&["power", "coefficient"]);
    for (k, c) in r.monomial_coefficients.iter().enumerate() {
        t.push(vec![k.to_string(), num(*c)]);
    }
    Ok(Report {
        body: to_value(&r)?,
        table: Some(t),
        outcome: Outcome::Computed,
    })
}

fn characterization(r: &CharacterizationReport) -> CmdResult {
    let mut t = Table::new(&["name", "identity", "residual"]);
    for c in &r.checks {
        t.push(vec![c.name.clone(), c.identity.clone(), num(c.residual)]);
    }
    Ok(Report {
        body: to_value(r)?,
        table: Some(t),
        outcome: Outcome::from_pass(r.verdict == Verdict::Match),
    })
}

fn power(cfg: &RunConfig) -> Result<u32, String> {
    u32::try_from(cfg.m.unwrap_or(1)).map_err(|_| "m: too large".to_string())
}

pub fn char_fbh(cfg: &RunConfig) -> CmdResult {
    let p = weight_with(cfg, full_space(cfg))?;
    let r = characterize_fbh(&p, power(cfg)?, cfg.mu.unwrap_or(1.0), cfg.degree, &check_options(cfg)?).map_err(fail)?;
    characterization(&r)
}

pub fn char_ch(cfg: &RunConfig) -> CmdResult {
    let q = weight(cfg)?;
    let r = characterize_ch(&q, power(cfg)?, cfg.mu.unwrap_or(1.0), cfg.degree, &check_options(cfg)?).map_err(fail)?;
    characterization(&r)
}

pub fn boundary(cfg: &RunConfig) -> CmdResult {
    let p = weight_with(cfg, full_space(cfg))?;
    let tol = cfg.tolerance_or(RunConfig::DEFAULT_TOLERANCE);
    let pts = match &cfg.points {
        Some(v) => parse_point_list(v)?,
        None => sample_points(
            p.base.dim(),
            cfg.radius.unwrap_or(2.0),
            cfg.samples.unwrap_or(200) as usize,
            cfg.seed,
        ),
    };
    let r = boundary_inequality_check(&p, cfg.mu.unwrap_or(1.0), &pts, tol).map_err(fail)?;
    let mut body = to_value(&r)?;
    body["tolerance"] = json!(tol);
    Ok(Report {
        body,
        table: None,
        outcome: Outcome::from_pass(r.verdict == BoundaryVerdict::Equality),
    })
}

pub fn family(cfg: &RunConfig) -> CmdResult {
    let h = hartogs(cfg)?;
    let maps = maps(cfg, &h)?;
    let tol = cfg.tolerance_or(RunConfig::DEFAULT_TOLERANCE);
    let r = family_condition_check(&h, &maps, cfg.degree, tol, &check_options(cfg)?).map_err(fail)?;
    let mut t = Table::new(&[
        "map",
        "zero_section_defect",
        "slice_law_deviation",
        "constant",
        "constant_deviation",
        "pass",
    ]);
    for e in &r.maps {
        t.push(vec![
            e.index.to_string(),
            num(e.zero_section_defect),
            num(e.slice_law_deviation),
            num(e.constant),
            num(e.constant_deviation),
            e.pass.to_string(),
        ]);
    }
    Ok(Report {
        body: to_value(&r)?,
        table: Some(t),
        outcome: Outcome::from_pass(r.all_pass),
    })
}
