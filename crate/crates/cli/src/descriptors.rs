// SPDX-License-Identifier: Apache-2.0

//! Short textual descriptors for domains, weights, maps and point lists.

use std::f64::consts::PI;

use bergman_core::automorphisms::{AutomorphismSpec, MapKind};
use bergman_core::domain::DomainSpec;
use bergman_core::hartogs::HartogsDomain;
use bergman_core::json::parse_points;
use bergman_core::linalg::CMatrix;
use bergman_core::quadrature::QuadratureScheme;
use bergman_core::weight::{RadialProfile, Weight, WeightForm};
use num_complex::Complex64;
use serde_json::Value;

fn read_source(text: &str) -> Result<String, String> {
    match text.strip_prefix('@') {
        Some(path) => std::fs::read_to_string(path).map_err(|e| format!("{path}: {e}")),
        None => Ok(text.to_string()),
    }
}

fn numbers(key: &str, text: &str) -> Result<Vec<f64>, String> {
    text.split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|e| format!("{key}: bad number `{s}`: {e}")))
        .collect()
}

fn complex(key: &str, text: &str) -> Result<Complex64, String> {
    match numbers(key, text)?.as_slice() {
        [re] => Ok(Complex64::new(*re, 0.0)),
        [re, im] => Ok(Complex64::new(*re, *im)),
        _ => Err(format!("{key}: expected RE or RE,IM, got `{text}`")),
    }
}

fn complex_list(key: &str, text: &str) -> Result<Vec<Complex64>, String> {
    text.split(';').map(|s| complex(key, s)).collect()
}

pub fn parse_domain(v: &Value) -> Result<DomainSpec, String> {
    let d = match v {
        Value::String(s) => {
            let (head, rest) = s.split_once(':').unwrap_or((s.as_str(), ""));
            let ints = |k: usize| -> Result<Vec<usize>, String> {
                let v: Vec<usize> = rest
                    .split(',')
                    .map(|x| x.trim().parse().map_err(|e| format!("domain: bad size `{x}`: {e}")))
                    .collect::<Result<_, _>>()?;
                if v.len() == k {
                    Ok(v)
                } else {
                    Err(format!("domain: `{s}` needs {k} size(s)"))
                }
            };
            match head {
                "disk" => DomainSpec::UnitDisk,
                "ball" => DomainSpec::UnitBall { n: ints(1)?[0] },
                "full" => DomainSpec::FullSpace { n: ints(1)?[0] },
                "type1" => {
                    let v = ints(2)?;
                    DomainSpec::TypeIMatrixBall { p: v[0], q: v[1] }
                }
                _ if s.trim_start().starts_with('{') || s.starts_with('@') => {
                    serde_json::from_str(&read_source(s)?).map_err(|e| format!("domain: {e}"))?
                }
                _ => return Err(format!("domain: unknown descriptor `{s}`")),
            }
        }
        other => serde_json::from_value(other.clone()).map_err(|e| format!("domain: {e}"))?,
    };
    d.validate().map_err(|e| format!("domain: {e}"))?;
    Ok(d)
}

/// Resolves a weight descriptor. Without an explicit domain, Gaussian
/// factors put the weight on `ℂⁿ` (`n` from `--n`, default 1) and anything
/// else on the unit disk.
pub fn parse_weight(key: &str, v: &Value, domain: Option<DomainSpec>, n: Option<usize>) -> Result<Weight, String> {
    let text = match v {
        Value::String(s) => s.clone(),
        other => return serde_json::from_value(other.clone()).map_err(|e| format!("{key}: {e}")),
    };
    if text.trim_start().starts_with('{') || text.starts_with('@') {
        let w: Weight = serde_json::from_str(&read_source(&text)?).map_err(|e| format!("{key}: {e}"))?;
        w.validate().map_err(|e| format!("{key}: {e}"))?;
        return Ok(w);
    }
    let base = domain.unwrap_or_else(|| {
        if text.contains("gaussian") {
            DomainSpec::FullSpace { n: n.unwrap_or(1) }
        } else {
            DomainSpec::UnitDisk
        }
    });
    let mut factors = Vec::new();
    let mut scale = 1.0;
    for part in text.split('*') {
        let part = part.trim();
        let (head, rest) = part.split_once(':').unwrap_or((part, ""));
        match head {
            "gaussian" => factors.push(WeightForm::GaussianPower {
                mu: numbers(key, rest)?[0],
            }),
            "norm" => factors.push(WeightForm::GenericNormPower {
                mu: numbers(key, rest)?[0],
            }),
            "poly" => factors.push(WeightForm::PolynomialRadial {
                coefficients: numbers(key, rest)?,
            }),
            "const" | "scale" => {
                if !rest.is_empty() {
                    scale *= numbers(key, rest)?[0];
                }
            }
            "table" => {
                let profile = RadialProfile::from_csv_path(rest).map_err(|e| format!("{key}: {rest}: {e}"))?;
                factors.push(WeightForm::RadialProfile { profile });
            }
            _ => return Err(format!("{key}: unknown factor `{part}`")),
        }
    }
    let form = match factors.len() {
        0 => WeightForm::PolynomialRadial {
            coefficients: vec![1.0],
        },
        1 => factors.pop().expect("one factor"),
        _ => WeightForm::Product { factors },
    };
    let w = Weight::new(base, form).map_err(|e| format!("{key}: {e}"))?;
    if scale != 1.0 {
        w.scaled(scale).map_err(|e| format!("{key}: {e}"))
    } else {
        Ok(w)
    }
}

fn rotation(k: usize, theta: f64) -> CMatrix {
    CMatrix::from_fn(k, k, |i, j| {
        if i == j {
            Complex64::from_polar(1.0, theta)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

pub fn parse_map(v: &Value, h: &HartogsDomain, mu: Option<f64>) -> Result<AutomorphismSpec, String> {
    let kind: MapKind = match v {
        Value::String(s) if !(s.trim_start().starts_with('{') || s.starts_with('@')) => {
            let (head, rest) = s.split_once(':').unwrap_or((s.as_str(), ""));
            let mu = || mu.ok_or_else(|| format!("map: `{head}` needs --mu"));
            match head {
                "translate" => MapKind::FockTranslation {
                    v: complex_list("map", rest)?,
                    mu: mu()?,
                },
                "thullen" => MapKind::ThullenMobius {
                    a: complex("map", rest)?,
                    mu: mu()?,
                },
                "ch" => MapKind::CartanHartogs {
                    a: complex_list("map", rest)?,
                    fiber_unitary: None,
                    mu: mu()?,
                },
                "base-rotation" => MapKind::BaseUnitary {
                    u: rotation(h.base.dim(), numbers("map", rest)?[0]),
                },
                "fiber-rotation" => MapKind::FiberUnitary {
                    u: rotation(h.fiber_dim, numbers("map", rest)?[0]),
                },
                _ => return Err(format!("map: unknown descriptor `{s}`")),
            }
        }
        Value::String(s) => serde_json::from_str(&read_source(s)?).map_err(|e| format!("map: {e}"))?,
        other => serde_json::from_value(other.clone()).map_err(|e| format!("map: {e}"))?,
    };
    AutomorphismSpec::new(h.clone(), kind).map_err(|e| format!("map: {e}"))
}

pub fn parse_point_list(v: &Value) -> Result<Vec<Vec<Complex64>>, String> {
    let text = match v {
        Value::String(s) if s.trim_start().starts_with('[') => s.clone(),
        Value::String(path) => std::fs::read_to_string(path).map_err(|e| format!("points: {path}: {e}"))?,
        other => other.to_string(),
    };
    parse_points(&text).map_err(|e| format!("points: {e}"))
}

pub fn parse_scheme(v: &Value) -> Result<QuadratureScheme, String> {
    match v {
        Value::String(s) => serde_json::from_str(&read_source(s)?),
        other => serde_json::from_value(other.clone()),
    }
    .map_err(|e| format!("scheme: {e}"))
}

/// `count` points on a spiral inside the disk of the given radius.
pub fn spiral(count: usize, radius: f64) -> Vec<Vec<Complex64>> {
    (0..count)
        .map(|k| {
            let r = radius * (k + 1) as f64 / count as f64;
            vec![Complex64::from_polar(r, 2.0 * PI * k as f64 / count as f64)]
        })
        .collect()
}
