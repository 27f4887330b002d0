// SPDX-License-Identifier: Apache-2.0

//! Moment discrimination, radial weight recovery, and rank-`d` checks that a
//! Hartogs domain is characterized by its automorphisms.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::automorphisms::{apply, base_preimage_of_origin, jacobian_base_slice, AutomorphismSpec};
use crate::domain::{generic_norm_log, genus, norm_sqr, DomainSpec};
use crate::error::{Error, Result};
use crate::hartogs::HartogsDomain;
use crate::json;
use crate::kernels::{kernel_eval, kernel_from_gram, KernelModel};
use crate::linalg::{self, CMatrix};
use crate::moments::{gram_auto, gram_quadrature, GramMatrix};
use crate::quadrature::QuadratureScheme;
use crate::weight::{weight_eval, Weight, WeightForm};

pub const MATCH_TOL: f64 = 1e-8;
pub const MISMATCH_TOL: f64 = 1e-6;

/// Largest condition number accepted by an unregularized recovery.
pub const RECOVERY_CONDITION_LIMIT: f64 = 1e12;

/// Moments `⟨z^α, z^β⟩_p` of a weight up to a degree cap.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MomentTable {
    pub weight: Weight,
    pub degree: u32,
    pub moments: GramMatrix,
    pub mass: f64,
}

impl MomentTable {
    /// Exact moments when available, product quadrature otherwise.
    pub fn new(weight: &Weight, degree: u32) -> Result<Self> {
        let moments = gram_auto(&weight.base, weight, degree)?;
        MomentTable::from_gram(moments)
    }

    pub fn from_gram(moments: GramMatrix) -> Result<Self> {
        let mass = moments.mass();
        if !(mass > 0.0) {
            return Err(Error::NonPositiveWeight { value: mass });
        }
        Ok(MomentTable {
            weight: moments.weight.clone(),
            degree: moments.degree(),
            moments,
            mass,
        })
    }

    /// Diagonal moments `⟨z^k, z^k⟩` for `k = 0..=d` (one variable).
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.moments.size()).map(|i| self.moments.entries[(i, i)].re).collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MismatchReport {
    #[serde(with = "json::complex_matrix")]
    pub difference: CMatrix,
    pub max_abs: f64,
    pub frobenius: f64,
    pub unit_mass: bool,
    pub degree: u32,
}

/// `Gram(w1) − Gram(w2)`, optionally after scaling both weights to unit
/// mass.
pub fn moment_mismatch(w1: &Weight, w2: &Weight, degree: u32, unit_mass: bool) -> Result<MismatchReport> {
    if w1.base != w2.base {
        return Err(Error::Invalid(format!(
            "weights live on different bases: {:?} and {:?}",
            w1.base, w2.base
        )));
    }
    let a = MomentTable::new(w1, degree)?;
    let b = MomentTable::new(w2, degree)?;
    let (sa, sb) = if unit_mass { (1.0 / a.mass, 1.0 / b.mass) } else { (1.0, 1.0) };
    let difference = a.moments.entries.map(|v| v * sa) - b.moments.entries.map(|v| v * sb);
    Ok(MismatchReport {
        max_abs: difference.iter().map(|v| v.norm()).fold(0.0, f64::max),
        frobenius: difference.norm(),
        difference,
        unit_mass,
        degree,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecoveryBasis {
    /// `w(t) = Σ c_j P̃_j(t)` on `[0, 1]`.
    ShiftedLegendre,
    /// `w(t) = e^{−t} Σ c_j L_j(t)` on `[0, ∞)`.
    Laguerre,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub weight: Weight,
    pub basis: RecoveryBasis,
    /// Coefficients in the orthogonal basis.
    pub basis_coefficients: Vec<f64>,
    /// Coefficients of the polynomial factor in powers of `t`.
    pub monomial_coefficients: Vec<f64>,
    /// Largest relative moment residual.
    pub residual: f64,
    pub condition: f64,
    pub ridge: f64,
}

fn binom(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn factorial(k: u64) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Monomial coefficients of `P̃_j(t) = Σ_i (−1)^{j+i} C(j,i) C(j+i,i) tⁱ`.
fn shifted_legendre(j: u64) -> Vec<f64> {
    (0..=j)
        .map(|i| {
            let sign = if (j + i) % 2 == 0 { 1.0 } else { -1.0 };
            sign * binom(j, i) * binom(j + i, i)
        })
        .collect()
}

/// Monomial coefficients of `L_j(t) = Σ_i (−1)^i C(j,i) tⁱ / i!`.
fn laguerre(j: u64) -> Vec<f64> {
    (0..=j)
        .map(|i| {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            sign * binom(j, i) / factorial(i)
        })
        .collect()
}

/// Recovers a radial profile from the diagonal moments of a one-variable
/// table by ridge-regularized least squares in an orthogonal basis. Both
/// moment matrices are lower triangular: `∫₀¹ t^k P̃_j = k!² / ((k−j)!(k+j+1)!)`
/// and `∫₀^∞ t^k e^{−t} L_j = (−1)^j k! C(k,j)`, zero for `j > k`.
pub fn recover_weight(table: &MomentTable, basis: RecoveryBasis, degree: u32, ridge: f64) -> Result<RecoveryReport> {
    let base = table.weight.base;
    if base.dim() != 1 {
        return Err(Error::UnsupportedDomain("weight recovery needs a one-variable base".into()));
    }
    match (basis, base.is_bounded()) {
        (RecoveryBasis::ShiftedLegendre, true) | (RecoveryBasis::Laguerre, false) => {}
        _ => return Err(Error::IncompatibleScheme(format!("{basis:?} basis on {base:?}"))),
    }
    if degree > table.degree {
        return Err(Error::Invalid(format!(
            "recovery degree {degree} exceeds the table degree {}",
            table.degree
        )));
    }
    if !(ridge >= 0.0) {
        return Err(Error::Invalid(format!("ridge must be non-negative, got {ridge}")));
    }
    let d = degree as usize;
    // ⟨z^k, z^k⟩ = π ∫ t^k w(t) dt in one variable
    let diag = table.diagonal();
    let rhs = DVector::from_fn(d + 1, |k, _| diag[k] / PI);
    let a = DMatrix::from_fn(d + 1, d + 1, |k, j| {
        if j > k {
            return 0.0;
        }
        let (k, j) = (k as u64, j as u64);
        match basis {
            RecoveryBasis::ShiftedLegendre => {
                // k!/(k−j)! · k!/(k+j+1)!
                let mut v = 1.0;
                for i in 0..j {
                    v *= (k - i) as f64 / (k + 1 + i) as f64;
                }
                v / (k + 1 + j) as f64
            }
            RecoveryBasis::Laguerre => {
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                sign * factorial(k) * binom(k, j)
            }
        }
    });
    // scale columns and rows so the triangular system is well balanced
    let row: Vec<f64> = (0..=d).map(|k| a.row(k).amax()).collect();
    let col: Vec<f64> = (0..=d).map(|j| a.column(j).amax()).collect();
    let scaled = DMatrix::from_fn(d + 1, d + 1, |k, j| a[(k, j)] / (row[k] * col[j]));
    let srhs = DVector::from_fn(d + 1, |k, _| rhs[k] / row[k]);
    let svd = scaled.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if ridge == 0.0 && !(condition <= RECOVERY_CONDITION_LIMIT) {
        return Err(Error::IllConditioned { condition });
    }
    let (u, vt) = (svd.u.as_ref().expect("u"), svd.v_t.as_ref().expect("v_t"));
    let utb = u.transpose() * &srhs;
    let filtered = DVector::from_fn(d + 1, |i, _| {
        let s = svd.singular_values[i];
        if s == 0.0 {
            0.0
        } else {
            utb[i] * s / (s * s + ridge)
        }
    });
    let y = vt.transpose() * filtered;
    let coeffs: Vec<f64> = (0..=d).map(|j| y[j] / col[j]).collect();

    let fitted = &a * DVector::from_vec(coeffs.clone());
    let residual = (0..=d)
        .map(|k| (fitted[k] - rhs[k]).abs() / rhs[k].abs().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);

    let mut mono = vec![0.0; d + 1];
    for (j, c) in coeffs.iter().enumerate() {
        let p = match basis {
            RecoveryBasis::ShiftedLegendre => shifted_legendre(j as u64),
            RecoveryBasis::Laguerre => laguerre(j as u64),
        };
        for (i, v) in p.iter().enumerate() {
            mono[i] += c * v;
        }
    }
    let poly = WeightForm::PolynomialRadial {
        coefficients: mono.clone(),
    };
    let form = match basis {
        RecoveryBasis::ShiftedLegendre => poly,
        RecoveryBasis::Laguerre => WeightForm::Product {
            factors: vec![WeightForm::GaussianPower { mu: 1.0 }, poly],
        },
    };
    // the recovered profile may dip below zero where the data are noisy, so
    // it is returned without positivity validation
    let weight = Weight { base, form, power: 1 };
    Ok(RecoveryReport {
        weight,
        basis,
        basis_coefficients: coeffs,
        monomial_coefficients: mono,
        residual,
        condition,
        ridge,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Match,
    Mismatch,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubCheck {
    pub name: String,
    /// The identity being tested, in words.
    pub identity: String,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    #[serde(with = "json::complex_vec")]
    pub z: Vec<Complex64>,
    #[serde(with = "json::complex_vec")]
    pub w: Vec<Complex64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    #[serde(rename = "match")]
    pub match_tol: f64,
    #[serde(rename = "mismatch")]
    pub mismatch_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacterizationReport {
    pub verdict: Verdict,
    /// Constant fitted at the origin: `K_{D,p^m}(0,0) / K_ref(0,0)`.
    pub c: f64,
    /// Largest relative deviation of `K_{D,p^m}` from `c · K_ref` on the grid.
    pub deviation: f64,
    pub degree: u32,
    pub tolerances: Tolerances,
    pub checks: Vec<SubCheck>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    pub note: String,
}

/// Options shared by the characterization checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckOptions {
    pub match_tol: f64,
    pub mismatch_tol: f64,
    /// Sample radius; `None` picks 1.0 on `ℂⁿ` and 0.5 on bounded bases.
    pub grid_radius: Option<f64>,
    pub grid_points: usize,
    pub seed: u64,
    /// Gram quadrature; `None` uses exact moments when available.
    pub scheme: Option<QuadratureScheme>,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            match_tol: MATCH_TOL,
            mismatch_tol: MISMATCH_TOL,
            grid_radius: None,
            grid_points: 16,
            seed: 0,
            scheme: None,
        }
    }
}

impl CheckOptions {
    fn radius(&self, base: &DomainSpec) -> f64 {
        self.grid_radius.unwrap_or(if base.is_bounded() { 0.5 } else { 1.0 })
    }
}

/// Origin plus `count` points uniform in the ball of the given radius, drawn
/// from the seeded stream.
pub fn sample_points(n: usize, radius: f64, count: usize, seed: u64) -> Vec<Vec<Complex64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![vec![Complex64::new(0.0, 0.0); n]];
    for _ in 0..count {
        let g: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        let u: f64 = rng.gen();
        let r = radius * u.powf(1.0 / (2.0 * n as f64)) / norm_sqr(&g).sqrt();
        out.push(g.into_iter().map(|c| c * r).collect());
    }
    out
}

fn weighted_kernel(weight: &Weight, degree: u32, scheme: Option<&QuadratureScheme>) -> Result<(KernelModel, GramMatrix)> {
    let g = match scheme {
        Some(s) => gram_quadrature(&weight.base, weight, degree, s)?,
        None => gram_auto(&weight.base, weight, degree)?,
    };
    Ok((kernel_from_gram(&g)?, g))
}

/// Max relative deviation of `K` from `c · R` over all grid pairs, with the
/// first worst pair.
fn proportionality(
    kernel: &KernelModel,
    reference: &(dyn Fn(&[Complex64], &[Complex64]) -> Result<Complex64> + Sync),
    c: f64,
    pts: &[Vec<Complex64>],
) -> Result<(f64, usize, usize)> {
    let rows: Vec<(f64, usize)> = pts
        .par_iter()
        .map(|z| -> Result<(f64, usize)> {
            let mut best = (0.0, 0);
            for (j, w) in pts.iter().enumerate() {
                let k = kernel_eval(kernel, z, w)?;
                let r = reference(z, w)? * c;
                let dev = (k - r).norm() / r.norm();
                if dev > best.0 || dev.is_nan() {
                    best = (dev, j);
                }
            }
            Ok(best)
        })
        .collect::<Result<_>>()?;
    let mut worst = (0.0, 0, 0);
    for (i, &(dev, j)) in rows.iter().enumerate() {
        if dev > worst.0 || dev.is_nan() {
            worst = (dev, i, j);
        }
    }
    Ok(worst)
}

fn gram_membership_check(g: &GramMatrix) -> SubCheck {
    let (s, _) = linalg::jacobi_scale(&g.entries);
    let lmin = linalg::hermitian_eigenvalues(&s)[0];
    SubCheck {
        name: "polynomials_in_space".into(),
        identity: "monomials up to the degree cap have finite, independent moments (scaled Gram λ_min > 0)".into(),
        residual: (-lmin).max(0.0),
    }
}

fn verdict_of(deviation: f64, opts: &CheckOptions) -> Verdict {
    if deviation <= opts.match_tol {
        Verdict::Match
    } else if deviation > opts.mismatch_tol || deviation.is_nan() {
        Verdict::Mismatch
    } else {
        Verdict::Inconclusive
    }
}

#[allow(clippy::too_many_arguments)]
fn build_report(
    kernel: &KernelModel,
    reference: &(dyn Fn(&[Complex64], &[Complex64]) -> Result<Complex64> + Sync),
    gram: &GramMatrix,
    degree: u32,
    pts: &[Vec<Complex64>],
    opts: &CheckOptions,
    proportional_identity: &str,
    diagonal: (&str, &str),
) -> Result<CharacterizationReport> {
    let n = pts[0].len();
    let origin = vec![Complex64::new(0.0, 0.0); n];
    let k00 = kernel_eval(kernel, &origin, &origin)?.re;
    let r00 = reference(&origin, &origin)?.re;
    let c = k00 / r00;
    let (deviation, i, j) = proportionality(kernel, reference, c, pts)?;
    // K(z,z) = K(0,0) R(z,z) / R(0,0) on the diagonal
    let mut diag: f64 = 0.0;
    for z in pts {
        let k = kernel_eval(kernel, z, z)?.re;
        let r = reference(z, z)?.re * c;
        diag = diag.max((k - r).abs() / k);
    }
    let verdict = verdict_of(deviation, opts);
    Ok(CharacterizationReport {
        verdict,
        c,
        deviation,
        degree,
        tolerances: Tolerances {
            match_tol: opts.match_tol,
            mismatch_tol: opts.mismatch_tol,
        },
        checks: vec![
            SubCheck {
                name: "kernel_proportionality".into(),
                identity: proportional_identity.into(),
                residual: deviation,
            },
            SubCheck {
                name: diagonal.0.into(),
                identity: diagonal.1.into(),
                residual: diag,
            },
            gram_membership_check(gram),
        ],
        witness: (verdict == Verdict::Mismatch).then(|| Witness {
            z: pts[i].clone(),
            w: pts[j].clone(),
        }),
        note: format!(
            "verdict holds at truncation rank {degree}: kernels are compared on the span of monomials of degree ≤ {degree}, and polynomial membership is only checked up to that degree"
        ),
    })
}

/// Does `K_{ℂⁿ,p^m}` equal `c · e^{mμ⟨z,w⟩}`? A match means `p^m` is a
/// constant multiple of `e^{−mμ‖z‖²}` at rank `d`.
pub fn characterize_fbh(p: &Weight, m: u32, mu: f64, degree: u32, opts: &CheckOptions) -> Result<CharacterizationReport> {
    if p.base.is_bounded() {
        return Err(Error::UnsupportedDomain("the weight must live on ℂⁿ".into()));
    }
    if m == 0 || !(mu > 0.0) {
        return Err(Error::Invalid(format!("need m ≥ 1 and μ > 0, got m={m}, μ={mu}")));
    }
    let n = p.base.dim();
    let pm = p.pow(m);
    let (kernel, gram) = weighted_kernel(&pm, degree, opts.scheme.as_ref())?;
    let rate = f64::from(m) * mu;
    let reference = move |z: &[Complex64], w: &[Complex64]| -> Result<Complex64> {
        Ok((crate::domain::inner(z, w) * rate).exp())
    };
    let pts = sample_points(n, opts.radius(&p.base), opts.grid_points, opts.seed);
    build_report(
        &kernel,
        &reference,
        &gram,
        degree,
        &pts,
        opts,
        "weighted kernel of p^m equals c times the Fock kernel e^{mμ⟨z,w⟩}",
        (
            "translation_slice_law",
            "K_{p^m}(z,z) = |k_z(z)^m|² K_{p^m}(0,0) = e^{mμ‖z‖²} K_{p^m}(0,0)",
        ),
    )
}

/// Does `K_{D,q^m}` equal `c · N(z,w)^{−mμ−g}`?
pub fn characterize_ch(q: &Weight, m: u32, mu: f64, degree: u32, opts: &CheckOptions) -> Result<CharacterizationReport> {
    let base = q.base;
    if !matches!(base, DomainSpec::UnitDisk | DomainSpec::UnitBall { .. }) {
        return Err(Error::UnsupportedDomain(format!("characterization over {base:?}")));
    }
    if m == 0 || !(mu > 0.0) {
        return Err(Error::Invalid(format!("need m ≥ 1 and μ > 0, got m={m}, μ={mu}")));
    }
    let qm = q.pow(m);
    let (kernel, gram) = weighted_kernel(&qm, degree, opts.scheme.as_ref())?;
    let exponent = -(f64::from(m) * mu + f64::from(genus(&base)?));
    let reference = move |z: &[Complex64], w: &[Complex64]| -> Result<Complex64> {
        Ok((generic_norm_log(&base, z, w)? * exponent).exp())
    };
    let pts = sample_points(base.dim(), opts.radius(&base), opts.grid_points, opts.seed);
    build_report(
        &kernel,
        &reference,
        &gram,
        degree,
        &pts,
        opts,
        "weighted kernel of q^m equals c times N(z,w)^{−mμ−g}",
        (
            "mobius_diagonal_relation",
            "K_{q^m}(z₀,z₀) = K_{q^m}(0,0) N(z₀,z₀)^{−mμ−g}",
        ),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryVerdict {
    Equality,
    Violated,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryReport {
    pub verdict: BoundaryVerdict,
    /// `p(0)`.
    pub reference: f64,
    /// `max |p(z) e^{μ‖z‖²} − p(0)| / p(0)`.
    pub max_deviation: f64,
    /// `max p(z) e^{μ‖z‖²} / p(0) − 1`.
    pub max_excess: f64,
    #[serde(default, with = "json::option_complex_vec", skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<Complex64>>,
}

/// Tests `p(z) e^{μ‖z‖²} ≤ p(0)` on the samples, with equality for the
/// Fock-Bargmann-Hartogs weight.
pub fn boundary_inequality_check(p: &Weight, mu: f64, samples: &[Vec<Complex64>], tol: f64) -> Result<BoundaryReport> {
    if p.base.is_bounded() {
        return Err(Error::UnsupportedDomain("the weight must live on ℂⁿ".into()));
    }
    let n = p.base.dim();
    let p0 = weight_eval(p, &vec![Complex64::new(0.0, 0.0); n])?;
    let mut max_dev: f64 = 0.0;
    let mut max_excess = f64::NEG_INFINITY;
    let mut witness = None;
    for z in samples {
        let t = norm_sqr(z);
        // p(z) e^{μt} without overflowing the exponential
        let g = (weight_eval(p, z)?.ln() + mu * t).exp() / p0;
        max_dev = max_dev.max((g - 1.0).abs());
        if g - 1.0 > max_excess {
            max_excess = g - 1.0;
            if g > 1.0 + tol {
                witness = Some(z.clone());
            }
        }
    }
    let verdict = if max_dev <= tol {
        BoundaryVerdict::Equality
    } else if max_excess > tol {
        BoundaryVerdict::Violated
    } else {
        BoundaryVerdict::Inconclusive
    };
    Ok(BoundaryReport {
        verdict,
        reference: p0,
        max_deviation: max_dev,
        max_excess,
        witness: if verdict == BoundaryVerdict::Violated { witness } else { None },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyEntry {
    pub index: usize,
    /// `max ‖φ₂(z, 0)‖` over the grid.
    pub zero_section_defect: f64,
    /// `max |ρ(z) − 1|` with `ρ(z) = |J(φ,(z,0))|² K(φ₁z,φ₁z) / K(z,z)`.
    pub slice_law_deviation: f64,
    /// `|J(φ,(z₀,0))|² / K(z₀,z₀)` at `z₀ = φ₁⁻¹(0)`.
    pub constant: f64,
    /// Relative deviation of `constant` from the family constant `1/K(0,0)`.
    pub constant_deviation: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyReport {
    pub all_pass: bool,
    pub degree: u32,
    pub tolerance: f64,
    /// `1 / K_{D,P^m}(0,0)`.
    pub family_constant: f64,
    pub maps: Vec<FamilyEntry>,
    pub note: String,
}

/// Checks that each map keeps the zero section, satisfies the slice law
/// `K(z,z) = |J(φ,(z,0))|² K(φ₁z,φ₁z)` for `K = K_{D,P^m}`, and that the
/// constants `|J(φ,(z₀,0))|² / K(z₀,z₀)` at `z₀ = φ₁⁻¹(0)` agree across the
/// family.
pub fn family_condition_check(
    h: &HartogsDomain,
    maps: &[AutomorphismSpec],
    degree: u32,
    tol: f64,
    opts: &CheckOptions,
) -> Result<FamilyReport> {
    let n = h.base.dim();
    let m = h.fiber_dim;
    let (kernel, _) = weighted_kernel(&h.weight.pow(m as u32), degree, opts.scheme.as_ref())?;
    let origin = vec![Complex64::new(0.0, 0.0); n];
    let k00 = kernel_eval(&kernel, &origin, &origin)?.re;
    let family_constant = 1.0 / k00;
    let pts = sample_points(n, opts.radius(&h.base), opts.grid_points, opts.seed);
    let zero_fiber = vec![Complex64::new(0.0, 0.0); m];
    let mut entries = Vec::with_capacity(maps.len());
    for (index, f) in maps.iter().enumerate() {
        if f.target != *h {
            return Err(Error::InvalidMap(format!("map {index} targets a different domain")));
        }
        let rows: Vec<(f64, f64)> = pts
            .par_iter()
            .map(|z| -> Result<(f64, f64)> {
                let full: Vec<Complex64> = z.iter().chain(&zero_fiber).copied().collect();
                let image = apply(f, &full)?;
                let zs = image[n..].iter().map(|c| c.norm()).fold(0.0, f64::max);
                let j = jacobian_base_slice(f, z)?;
                let kz = kernel_eval(&kernel, z, z)?.re;
                let kf = kernel_eval(&kernel, &image[..n], &image[..n])?.re;
                Ok((zs, (j.norm_sqr() * kf / kz - 1.0).abs()))
            })
            .collect::<Result<_>>()?;
        let zero_section_defect = rows.iter().map(|r| r.0).fold(0.0, f64::max);
        if zero_section_defect > 0.0 {
            return Err(Error::ZeroSectionViolated);
        }
        let slice_law_deviation = rows.iter().map(|r| r.1).fold(0.0, f64::max);
        let z0 = base_preimage_of_origin(f)?;
        let j0 = jacobian_base_slice(f, &z0)?;
        let constant = j0.norm_sqr() / kernel_eval(&kernel, &z0, &z0)?.re;
        let constant_deviation = (constant / family_constant - 1.0).abs();
        entries.push(FamilyEntry {
            index,
            zero_section_defect,
            slice_law_deviation,
            constant,
            constant_deviation,
            pass: slice_law_deviation <= tol && constant_deviation <= tol,
        });
    }
    Ok(FamilyReport {
        all_pass: entries.iter().all(|e| e.pass),
        degree,
        tolerance: tol,
        family_constant,
        maps: entries,
        note: format!(
            "membership in the family is verified at truncation rank {degree}; with a transitive family on a homogeneous base this forces K_{{D,Q^m}} = const · K_{{D,P^m}} for any Hartogs domain D_Q admitting the same maps"
        ),
    })
}
