// SPDX-License-Identifier: Apache-2.0

//! Gram matrices of monomials `G[α][β] = ∫_D z^α conj(z^β) p(z) dV(z)`
//! assembled by closed formula, product quadrature or Monte Carlo.

use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{norm_sqr, DomainSpec};
use crate::error::{Error, Result};
use crate::json;
use crate::linalg::{self, CMatrix};
use crate::multiindex::{MonomialBasis, MultiIndex};
use crate::quadrature::{
    gauss_jacobi_unit, gauss_laguerre, gauss_legendre_unit, pairwise_sum, pairwise_sum_complex,
    QuadratureScheme, RadialRule,
};
use crate::weight::{weight_eval, Weight};

/// Default relative tolerance for the PSD test.
pub const PSD_TOL: f64 = 1e-10;

/// How a Gram matrix was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GramMethod {
    Exact,
    Quadrature {
        rule: RadialRule,
        radial_nodes: usize,
        angular_nodes: usize,
        simplex_nodes: usize,
    },
    MonteCarlo { seed: u64, samples: u64 },
}

/// Hermitian Gram matrix of the graded-lexicographic monomial basis.
#[derive(Debug, Clone)]
pub struct GramMatrix {
    pub weight: Weight,
    pub basis: MonomialBasis,
    pub entries: CMatrix,
    pub method: GramMethod,
    /// Per-entry standard errors (Monte Carlo only).
    pub stderr: Option<DMatrix<f64>>,
    /// Frobenius size of an eigenvalue-clipping repair, if one was applied.
    pub psd_repair: Option<f64>,
}

impl GramMatrix {
    pub fn n(&self) -> usize {
        self.basis.n()
    }

    pub fn degree(&self) -> u32 {
        self.basis.degree()
    }

    pub fn size(&self) -> usize {
        self.basis.len()
    }

    /// `⟨1, 1⟩_p`, the total mass of the weight.
    pub fn mass(&self) -> f64 {
        self.entries[(0, 0)].re
    }

    /// Gram matrix of `c · p`.
    pub fn scaled(&self, c: f64) -> Result<GramMatrix> {
        Ok(GramMatrix {
            weight: self.weight.scaled(c)?,
            entries: self.entries.map(|v| v * c),
            stderr: self.stderr.as_ref().map(|s| s * c),
            ..self.clone()
        })
    }

    /// If the Jacobi-scaled minimum eigenvalue lies in `(−tol, 0)`, clip the
    /// spectrum to the PSD cone and record the perturbation; below `−tol`
    /// the matrix is rejected.
    pub fn repair_psd(&mut self, tol: f64) -> Result<f64> {
        let (scaled, d) = linalg::jacobi_scale(&self.entries);
        let lmin = linalg::hermitian_eigenvalues(&scaled)[0];
        if lmin >= 0.0 {
            return Ok(0.0);
        }
        if lmin <= -tol {
            return Err(Error::NotPositiveSemidefinite { lambda_min: lmin });
        }
        let (fixed, change) = linalg::clip_to_psd(&scaled);
        let n = self.size();
        self.entries = CMatrix::from_fn(n, n, |i, j| fixed[(i, j)] * (d[i] * d[j]));
        self.psd_repair = Some(change);
        Ok(change)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GramJson {
    n: usize,
    degree: u32,
    order: String,
    weight: Weight,
    entries: Vec<[f64; 2]>,
    method: GramMethod,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    stderr: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    psd_repair: Option<f64>,
}

impl Serialize for GramMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let n = self.size();
        let entries = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| json::to_pair(self.entries[(i, j)]))
            .collect();
        let stderr = self.stderr.as_ref().map(|m| {
            (0..n)
                .flat_map(|i| (0..n).map(move |j| (i, j)))
                .map(|(i, j)| m[(i, j)])
                .collect()
        });
        let seed = match self.method {
            GramMethod::MonteCarlo { seed, .. } => Some(seed),
            _ => None,
        };
        GramJson {
            n: self.n(),
            degree: self.degree(),
            order: "grlex".into(),
            weight: self.weight.clone(),
            entries,
            method: self.method.clone(),
            seed,
            stderr,
            psd_repair: self.psd_repair,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for GramMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = GramJson::deserialize(d)?;
        if raw.order != "grlex" {
            return Err(D::Error::custom("only grlex ordering is supported"));
        }
        if raw.weight.base.dim() != raw.n {
            return Err(D::Error::custom("weight base dimension does not match n"));
        }
        let basis = MonomialBasis::new(raw.n, raw.degree);
        let b = basis.len();
        if raw.entries.len() != b * b {
            return Err(D::Error::custom(format!(
                "expected {} entries, found {}",
                b * b,
                raw.entries.len()
            )));
        }
        let entries = CMatrix::from_fn(b, b, |i, j| json::from_pair(raw.entries[i * b + j]));
        let stderr = match raw.stderr {
            Some(v) if v.len() == b * b => Some(DMatrix::from_fn(b, b, |i, j| v[i * b + j])),
            Some(_) => return Err(D::Error::custom("stderr has the wrong length")),
            None => None,
        };
        Ok(GramMatrix {
            weight: raw.weight,
            basis,
            entries,
            method: raw.method,
            stderr,
            psd_repair: raw.psd_repair,
        })
    }
}

fn check_pair(domain: &DomainSpec, weight: &Weight) -> Result<()> {
    if *domain != weight.base {
        return Err(Error::Invalid(format!(
            "weight lives on {:?}, not {:?}",
            weight.base, domain
        )));
    }
    weight.validate()
}

/// `∫₀^1 T^j (1−T)^s dT = (j)! / Π_{k=0}^{j} (s+1+k)` for integer `j`.
fn beta_int(j: u32, s: f64) -> f64 {
    let mut acc = 1.0 / (s + 1.0);
    for k in 1..=j {
        acc *= f64::from(k) / (s + 1.0 + f64::from(k));
    }
    acc
}

/// `∫₀^∞ T^j e^{−λT} dT = j! / λ^{j+1}`.
fn gamma_int(j: u32, lambda: f64) -> f64 {
    (1..=j).fold(1.0 / lambda, |acc, k| acc * f64::from(k) / lambda)
}

/// Closed-form moment `⟨z^α, z^β⟩_p`.
///
/// Radial weights make every off-diagonal moment vanish; the diagonal is
/// `πⁿ α! / (|α|+n−1)! · ∫ T^{|α|+n−1} p(T) dT`.
pub fn moment_exact(
    domain: &DomainSpec,
    weight: &Weight,
    alpha: &MultiIndex,
    beta: &MultiIndex,
) -> Result<Complex64> {
    check_pair(domain, weight)?;
    let n = domain.dim();
    if alpha.len() != n || beta.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: alpha.len().max(beta.len()),
        });
    }
    let cf = weight.closed_form().ok_or(Error::NoClosedForm)?;
    let supported = match domain {
        DomainSpec::FullSpace { .. } => cf.gauss_rate > 0.0 && cf.norm_power == 0.0,
        DomainSpec::UnitDisk | DomainSpec::UnitBall { .. } => cf.gauss_rate == 0.0,
        DomainSpec::TypeIMatrixBall { .. } => false,
    };
    if !supported {
        return Err(Error::NoClosedForm);
    }
    if alpha != beta {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let j = alpha.degree() + n as u32 - 1;
    // α! / (|α|+n−1)!
    let mut prefactor = PI.powi(n as i32) * alpha.factorial();
    for k in 1..=j {
        prefactor /= f64::from(k);
    }
    let radial: f64 = cf
        .poly
        .iter()
        .enumerate()
        .filter(|(_, &c)| c != 0.0)
        .map(|(i, &c)| {
            let ji = j + i as u32;
            c * if domain.is_bounded() {
                beta_int(ji, cf.norm_power)
            } else {
                gamma_int(ji, cf.gauss_rate)
            }
        })
        .sum();
    Ok(Complex64::new(prefactor * cf.scale * radial, 0.0))
}

/// Gram matrix from [`moment_exact`].
pub fn gram_exact(domain: &DomainSpec, weight: &Weight, degree: u32) -> Result<GramMatrix> {
    check_pair(domain, weight)?;
    let basis = MonomialBasis::new(domain.dim(), degree);
    let b = basis.len();
    let mut entries = CMatrix::zeros(b, b);
    for (i, a) in basis.indices().iter().enumerate() {
        entries[(i, i)] = moment_exact(domain, weight, a, a)?;
    }
    Ok(GramMatrix {
        weight: weight.clone(),
        basis,
        entries,
        method: GramMethod::Exact,
        stderr: None,
        psd_repair: None,
    })
}

/// Exact Gram when a closed form exists, product quadrature otherwise.
pub fn gram_auto(domain: &DomainSpec, weight: &Weight, degree: u32) -> Result<GramMatrix> {
    match gram_exact(domain, weight, degree) {
        Err(Error::NoClosedForm) => gram_quadrature(domain, weight, degree, &QuadratureScheme::default()),
        other => other,
    }
}

struct RadialNodes {
    // (T, weight · p-factor) pairs
    nodes: Vec<(f64, f64)>,
    rule: RadialRule,
    count: usize,
}

fn radial_nodes(domain: &DomainSpec, weight: &Weight, scheme: &QuadratureScheme) -> Result<RadialNodes> {
    let bounded = domain.is_bounded();
    let alpha = weight.norm_power();
    let rule = match (scheme.radial, bounded) {
        (RadialRule::Auto, true) if alpha.fract() != 0.0 => RadialRule::GaussJacobi,
        (RadialRule::Auto, true) => RadialRule::GaussLegendre,
        (RadialRule::Auto, false) => RadialRule::GaussLaguerre,
        (RadialRule::GaussLaguerre, true) => {
            return Err(Error::IncompatibleScheme("Laguerre rule on a bounded domain".into()))
        }
        (RadialRule::GaussLegendre | RadialRule::GaussJacobi, false) => {
            return Err(Error::IncompatibleScheme(
                "finite-interval rule on the full space".into(),
            ))
        }
        (r, _) => r,
    };
    let count = scheme
        .radial_nodes
        .unwrap_or(if bounded { 64 } else { 96 });
    let nodes = match rule {
        RadialRule::GaussLegendre => gauss_legendre_unit(count)?
            .into_iter()
            .map(|(t, w)| (t, w * weight.radial_eval(t)))
            .collect(),
        RadialRule::GaussJacobi => gauss_jacobi_unit(count, alpha)?
            .into_iter()
            .map(|(t, w)| (t, w * weight.radial_eval(t) / (1.0 - t).powf(alpha)))
            .collect(),
        RadialRule::GaussLaguerre => {
            let lambda = weight.decay_rate();
            if !(lambda > 0.0) {
                return Err(Error::NotIntegrable("weight has no Gaussian decay".into()));
            }
            gauss_laguerre(count)?
                .into_iter()
                .map(|(u, w)| {
                    let t = u / lambda;
                    (t, w * (weight.radial_eval(t).ln() + u).exp() / lambda)
                })
                .collect()
        }
        RadialRule::Auto => unreachable!("resolved above"),
    };
    Ok(RadialNodes { nodes, rule, count })
}

/// Relative mass of `T^a e^{−λT}` beyond the last Laguerre node.
fn laguerre_tail(a: f64, u_max: f64) -> f64 {
    statrs::function::gamma::gamma_ur(a + 1.0, u_max)
}

/// Product-quadrature Gram matrix on the disk, ball or full space.
///
/// Coordinates `zⱼ = √tⱼ e^{iθⱼ}` turn `dV` into `Π ½ dtⱼ dθⱼ`; the
/// angular integrals use equispaced nodes, `t = T·x` splits the radial part
/// into a Gauss rule in `T = ‖z‖²` and a collapsed Gauss-Legendre rule on the
/// simplex of directions `x`.
pub fn gram_quadrature(
    domain: &DomainSpec,
    weight: &Weight,
    degree: u32,
    scheme: &QuadratureScheme,
) -> Result<GramMatrix> {
    check_pair(domain, weight)?;
    if !domain.is_radial_model() {
        return Err(Error::IncompatibleScheme(
            "product quadrature needs a disk, ball or full-space base".into(),
        ));
    }
    let n = domain.dim();
    let basis = MonomialBasis::new(n, degree);
    let angular = scheme.angular_nodes.unwrap_or(2 * degree as usize + 8);
    if angular <= 2 * degree as usize {
        return Err(Error::IncompatibleScheme(format!(
            "{angular} angular nodes cannot resolve degree {degree}"
        )));
    }
    let radial = radial_nodes(domain, weight, scheme)?;
    if radial.rule == RadialRule::GaussLaguerre {
        let u_max = radial.nodes.last().map(|&(t, _)| t * weight.decay_rate()).unwrap_or(0.0);
        let a = 2.0 * f64::from(degree) + n as f64 - 1.0 + weight.poly_degree() as f64;
        let tail = laguerre_tail(a, u_max);
        if !(tail < 1e-16) {
            return Err(Error::NotIntegrable(format!(
                "radial tail beyond the last node is {tail:.2e}"
            )));
        }
    }

    // angular factor A(k) = Σ (2π/N) e^{ikθ}
    let d = degree as i64;
    let angular_factor: HashMap<i64, Complex64> = (-d..=d)
        .map(|k| {
            let terms: Vec<Complex64> = (0..angular)
                .map(|l| {
                    let theta = 2.0 * PI * l as f64 / angular as f64;
                    Complex64::from_polar(2.0 * PI / angular as f64, k as f64 * theta)
                })
                .collect();
            (k, pairwise_sum_complex(&terms))
        })
        .collect();

    // radial factor I(e) = ∫ T^{e+n−1} p(T) dT, keyed by 2e
    let radial_factor = |two_e: u32| -> f64 {
        let power = f64::from(two_e) / 2.0 + n as f64 - 1.0;
        let terms: Vec<f64> = radial.nodes.iter().map(|&(t, w)| w * t.powf(power)).collect();
        pairwise_sum(&terms)
    };
    let radial_cache: Vec<f64> = (0..=4 * degree).map(radial_factor).collect();

    // simplex factor Q(p, q) = ∫₀¹ u^p (1−u)^q du, keyed by (2p, 2q)
    let simplex_rule = if n > 1 {
        gauss_legendre_unit(scheme.simplex_nodes)?
    } else {
        Vec::new()
    };
    let simplex = |two_p: u32, two_q: u32| -> f64 {
        let (p, q) = (f64::from(two_p) / 2.0, f64::from(two_q) / 2.0);
        let terms: Vec<f64> = simplex_rule
            .iter()
            .map(|&(u, w)| w * u.powf(p) * (1.0 - u).powf(q))
            .collect();
        pairwise_sum(&terms)
    };
    let max_two = 4 * degree + 2 * n as u32;
    let simplex_cache: Vec<Vec<f64>> = if n > 1 {
        (0..=4 * degree)
            .map(|p| (0..=max_two).map(|q| simplex(p, q)).collect())
            .collect()
    } else {
        Vec::new()
    };

    let idx = basis.indices();
    let b = basis.len();
    let half_n = 0.5f64.powi(n as i32);
    let rows: Vec<Vec<Complex64>> = (0..b)
        .into_par_iter()
        .map(|i| {
            let a = idx[i].exponents();
            (0..b)
                .map(|j| {
                    let bb = idx[j].exponents();
                    let mut ang = Complex64::new(half_n, 0.0);
                    let mut two_e = 0u32;
                    for k in 0..n {
                        ang *= angular_factor[&(i64::from(a[k]) - i64::from(bb[k]))];
                        two_e += a[k] + bb[k];
                    }
                    let mut dir = 1.0;
                    if n > 1 {
                        // collapsed coordinates: x₁ = u₁, then recurse on the rest
                        let mut rest = two_e;
                        for k in 0..n - 1 {
                            let two_p = a[k] + bb[k];
                            rest -= two_p;
                            let two_q = rest + 2 * (n - 2 - k) as u32;
                            dir *= simplex_cache[two_p as usize][two_q as usize];
                        }
                    }
                    ang * radial_cache[two_e as usize] * dir
                })
                .collect()
        })
        .collect();
    let raw = CMatrix::from_fn(b, b, |i, j| rows[i][j]);
    Ok(GramMatrix {
        weight: weight.clone(),
        basis,
        entries: linalg::hermitize(&raw),
        method: GramMethod::Quadrature {
            rule: radial.rule,
            radial_nodes: radial.count,
            angular_nodes: angular,
            simplex_nodes: if n > 1 { scheme.simplex_nodes } else { 0 },
        },
        stderr: None,
        psd_repair: None,
    })
}

const MC_CHUNK: u64 = 4096;

/// One importance-sampled point: the point and `p(z)/q(z)`.
fn mc_sample(domain: &DomainSpec, weight: &Weight, seed: u64, index: u64) -> Result<(Vec<Complex64>, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let n = domain.dim();
    let mut g: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    if domain.is_bounded() {
        // uniform on the ball: isotropic direction, radius U^{1/(2n)}
        let u: f64 = rng.gen();
        let r = u.powf(1.0 / (2.0 * n as f64)) / norm_sqr(&g).sqrt();
        g.iter_mut().for_each(|c| *c *= r);
        let vol = domain.volume().expect("bounded");
        let w = if norm_sqr(&g) < 1.0 {
            weight_eval(weight, &g)?
        } else {
            0.0
        };
        Ok((g, vol * w))
    } else {
        let lambda = weight.decay_rate();
        if !(lambda > 0.0) {
            return Err(Error::NotIntegrable("weight has no Gaussian decay".into()));
        }
        let s = (2.0 * lambda).sqrt().recip();
        g.iter_mut().for_each(|c| *c *= s);
        // proposal density (λ/π)ⁿ e^{−λ‖z‖²}
        let t = norm_sqr(&g);
        let log_ratio = weight.radial_eval(t).ln() + lambda * t - n as f64 * (lambda / PI).ln();
        Ok((g, log_ratio.exp()))
    }
}

/// Monte Carlo Gram estimate with per-entry standard errors. Each sample
/// draws from its own ChaCha stream `(seed, index)` and partial sums are
/// reduced over fixed chunks, so the result does not depend on the thread
/// count.
pub fn gram_montecarlo(
    domain: &DomainSpec,
    weight: &Weight,
    degree: u32,
    samples: u64,
    seed: u64,
) -> Result<GramMatrix> {
    check_pair(domain, weight)?;
    if samples == 0 {
        return Err(Error::Invalid("Monte Carlo needs at least one sample".into()));
    }
    if !domain.is_radial_model() {
        return Err(Error::UnsupportedDomain("Monte Carlo on matrix balls".into()));
    }
    let basis = MonomialBasis::new(domain.dim(), degree);
    let b = basis.len();
    let chunks = samples.div_ceil(MC_CHUNK);
    let partials: Vec<(Vec<Complex64>, Vec<f64>)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut sum = vec![Complex64::new(0.0, 0.0); b * b];
            let mut sq = vec![0.0; b * b];
            for i in c * MC_CHUNK..((c + 1) * MC_CHUNK).min(samples) {
                let (z, ratio) = mc_sample(domain, weight, seed, i)?;
                let m = basis.eval(&z);
                for a in 0..b {
                    let ma = m[a] * ratio;
                    for bb in 0..b {
                        let f = ma * m[bb].conj();
                        sum[a * b + bb] += f;
                        sq[a * b + bb] += f.norm_sqr();
                    }
                }
            }
            Ok((sum, sq))
        })
        .collect::<Result<_>>()?;
    let n = samples as f64;
    let mut mean = CMatrix::zeros(b, b);
    let mut se = DMatrix::zeros(b, b);
    for k in 0..b * b {
        let s: Vec<Complex64> = partials.iter().map(|p| p.0[k]).collect();
        let q: Vec<f64> = partials.iter().map(|p| p.1[k]).collect();
        let mu = pairwise_sum_complex(&s) / n;
        let var = if samples > 1 {
            ((pairwise_sum(&q) - n * mu.norm_sqr()) / (n - 1.0)).max(0.0)
        } else {
            0.0
        };
        mean[(k / b, k % b)] = mu;
        se[(k / b, k % b)] = (var / n).sqrt();
    }
    Ok(GramMatrix {
        weight: weight.clone(),
        basis,
        entries: linalg::hermitize(&mean),
        method: GramMethod::MonteCarlo { seed, samples },
        stderr: Some(se),
        psd_repair: None,
    })
}

/// Finite-rank diagnostics for a Gram matrix. This is a proxy for
/// admissibility, not a certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GramDiagnostics {
    pub size: usize,
    pub hermitian_defect: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// `λ_max / λ_min` (infinite when `λ_min ≤ 0`).
    pub condition: f64,
    /// Minimum eigenvalue after unit-diagonal (Jacobi) scaling.
    pub scaled_lambda_min: f64,
    pub scaled_condition: f64,
    /// `max |G_ab| / √(G_aa G_bb)` over `a ≠ b`.
    pub radial_defect: f64,
    pub cholesky_ready: bool,
}

pub fn gram_validate(g: &GramMatrix) -> GramDiagnostics {
    validate_matrix(&g.entries, PSD_TOL)
}

pub fn validate_matrix(m: &CMatrix, tol: f64) -> GramDiagnostics {
    let b = m.nrows();
    let ev = linalg::hermitian_eigenvalues(m);
    let (lambda_min, lambda_max) = (ev[0], ev[b - 1]);
    let (scaled, _) = linalg::jacobi_scale(m);
    let sev = linalg::hermitian_eigenvalues(&scaled);
    let mut radial_defect: f64 = 0.0;
    for i in 0..b {
        for j in 0..b {
            if i != j {
                let denom = (m[(i, i)].re * m[(j, j)].re).abs().sqrt();
                let v = m[(i, j)].norm();
                radial_defect = radial_defect.max(if denom > 0.0 { v / denom } else { v });
            }
        }
    }
    let cond = |lo: f64, hi: f64| if lo > 0.0 { hi / lo } else { f64::INFINITY };
    GramDiagnostics {
        size: b,
        hermitian_defect: linalg::hermitian_defect(m),
        lambda_min,
        lambda_max,
        condition: cond(lambda_min, lambda_max),
        scaled_lambda_min: sev[0],
        scaled_condition: cond(sev[0], sev[b - 1]),
        radial_defect,
        cholesky_ready: sev[0] > tol * sev[b - 1].max(1.0) && (0..b).all(|i| m[(i, i)].re > 0.0),
    }
}
