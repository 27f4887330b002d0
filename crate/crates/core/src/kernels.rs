// SPDX-License-Identifier: Apache-2.0

//! Evaluable reproducing kernels: closed forms on the model domains and
//! truncated orthonormal series built from Gram matrices. Everything is in
//! raw Lebesgue measure; normalized conventions appear as explicit scale
//! factors.

use std::f64::consts::PI;

use nalgebra::{DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::domain::{contains, generic_norm_log, genus, hua_normalization, inner, DomainSpec};
use crate::error::{Error, Result};
use crate::json;
use crate::linalg::{self, CMatrix};
use crate::moments::{gram_quadrature, GramMatrix, PSD_TOL};
use crate::multiindex::{MonomialBasis, MultiIndex};
use crate::quadrature::QuadratureScheme;
use crate::weight::Weight;

/// Relative pivot / eigenvalue threshold below which a direction is dropped.
pub const DROP_TOL: f64 = 1e-13;

/// Points on the closed domain are accepted up to this boundary defect.
const CLOSURE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Factorization {
    Cholesky,
    PivotedCholesky,
    Eigen,
}

/// `K_d(z, w) = Σ_k e_k(z) conj(e_k(w))` with `e = C · (z^α)_α`.
#[derive(Debug, Clone)]
pub struct SeriesKernel {
    pub weight: Weight,
    pub basis: MonomialBasis,
    /// `rank × basis` coefficient matrix.
    pub coefficients: CMatrix,
    pub factorization: Factorization,
    pub dropped: usize,
}

impl SeriesKernel {
    pub fn rank(&self) -> usize {
        self.coefficients.nrows()
    }

    /// Orthonormal functions `e_k(z)`.
    pub fn orthonormal_values(&self, z: &[Complex64]) -> DVector<Complex64> {
        let m = DVector::from_vec(self.basis.eval(z));
        &self.coefficients * m
    }

    fn eval(&self, z: &[Complex64], w: &[Complex64]) -> Complex64 {
        let ez = self.orthonormal_values(z);
        if z == w {
            return Complex64::new(ez.iter().map(|v| v.norm_sqr()).sum(), 0.0);
        }
        let ew = self.orthonormal_values(w);
        ez.iter().zip(ew.iter()).map(|(a, b)| a * b.conj()).sum()
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SeriesJson {
    n: usize,
    degree: u32,
    order: String,
    weight: Weight,
    #[serde(with = "json::complex_matrix")]
    coefficients: CMatrix,
    factorization: Factorization,
    rank: usize,
    dropped: usize,
}

impl Serialize for SeriesKernel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SeriesJson {
            n: self.basis.n(),
            degree: self.basis.degree(),
            order: "grlex".into(),
            weight: self.weight.clone(),
            coefficients: self.coefficients.clone(),
            factorization: self.factorization,
            rank: self.rank(),
            dropped: self.dropped,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SeriesKernel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = SeriesJson::deserialize(d)?;
        let basis = MonomialBasis::new(raw.n, raw.degree);
        if raw.coefficients.ncols() != basis.len() || raw.coefficients.nrows() != raw.rank {
            return Err(D::Error::custom("coefficient matrix has the wrong shape"));
        }
        Ok(SeriesKernel {
            weight: raw.weight,
            basis,
            coefficients: raw.coefficients,
            factorization: raw.factorization,
            dropped: raw.dropped,
        })
    }
}

/// An evaluable kernel.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum KernelModel {
    /// `e^{μ⟨z,w⟩}` on `ℂⁿ`.
    FockBargmann { mu: f64, n: usize },
    /// `N(z,w)^{−exponent} / normalization`.
    SymmetricDomainPower {
        domain: DomainSpec,
        exponent: f64,
        normalization: f64,
    },
    TruncatedSeries(SeriesKernel),
    Scaled { c: f64, inner: Box<KernelModel> },
}

/// Requested closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum ClosedFormSpec {
    FockBargmann { mu: f64, n: usize },
    /// `N(z,w)^{−g−μ}` on a bounded symmetric domain.
    SymmetricDomainPower { domain: DomainSpec, mu: f64 },
}

impl KernelModel {
    pub fn base_domain(&self) -> DomainSpec {
        match self {
            KernelModel::FockBargmann { n, .. } => DomainSpec::FullSpace { n: *n },
            KernelModel::SymmetricDomainPower { domain, .. } => *domain,
            KernelModel::TruncatedSeries(s) => s.weight.base,
            KernelModel::Scaled { inner, .. } => inner.base_domain(),
        }
    }

    pub fn scaled(self, c: f64) -> KernelModel {
        KernelModel::Scaled {
            c,
            inner: Box::new(self),
        }
    }

    /// The underlying series, looking through scale wrappers.
    pub fn series(&self) -> Option<&SeriesKernel> {
        match self {
            KernelModel::TruncatedSeries(s) => Some(s),
            KernelModel::Scaled { inner, .. } => inner.series(),
            _ => None,
        }
    }

    fn scale(&self) -> f64 {
        match self {
            KernelModel::Scaled { c, inner } => c * inner.scale(),
            _ => 1.0,
        }
    }
}

/// Bare closed-form kernel `e^{μ⟨z,w⟩}` or `N(z,w)^{−g−μ}`.
pub fn kernel_closed_form(spec: ClosedFormSpec) -> Result<KernelModel> {
    match spec {
        ClosedFormSpec::FockBargmann { mu, n } => {
            if !(mu > 0.0) || n == 0 {
                return Err(Error::Invalid(format!("Fock kernel needs μ > 0 and n ≥ 1, got μ={mu}, n={n}")));
            }
            Ok(KernelModel::FockBargmann { mu, n })
        }
        ClosedFormSpec::SymmetricDomainPower { domain, mu } => {
            domain.validate()?;
            if !(mu > 0.0) {
                return Err(Error::Invalid(format!("power kernel needs μ > 0, got {mu}")));
            }
            Ok(KernelModel::SymmetricDomainPower {
                domain,
                exponent: f64::from(genus(&domain)?) + mu,
                normalization: 1.0,
            })
        }
    }
}

/// Weighted Bergman kernel of `A²(D, p)` in raw measure when `p` is
/// `c·e^{−λ‖z‖²}` on `ℂⁿ` or `c·N(z,z)^s` on a bounded symmetric domain.
pub fn kernel_for_weight(weight: &Weight) -> Result<KernelModel> {
    weight.validate()?;
    let base = weight.base;
    if let Some((c, lambda)) = weight.as_scaled_gaussian() {
        let n = base.dim();
        return Ok(KernelModel::FockBargmann { mu: lambda, n }.scaled((lambda / PI).powi(n as i32) / c));
    }
    if let Some((c, s)) = weight.as_scaled_norm_power() {
        return Ok(KernelModel::SymmetricDomainPower {
            domain: base,
            exponent: f64::from(genus(&base)?) + s,
            normalization: c * hua_normalization(&base, s)?,
        });
    }
    Err(Error::NoClosedForm)
}

/// Coefficients `C` with `C G C* = I` from a Jacobi-scaled factorization.
fn orthonormalize(g: &CMatrix, method: Factorization) -> Result<(CMatrix, usize)> {
    let b = g.nrows();
    let (s, d) = linalg::jacobi_scale(g);
    match method {
        Factorization::Cholesky => {
            let l = linalg::cholesky(&s).ok_or(Error::NotPositiveSemidefinite {
                lambda_min: linalg::hermitian_eigenvalues(&s)[0],
            })?;
            let li = linalg::lower_triangular_inverse(&l);
            Ok((CMatrix::from_fn(b, b, |k, a| li[(k, a)] / d[a]), 0))
        }
        Factorization::PivotedCholesky => {
            let (l, perm) = linalg::pivoted_cholesky(&s, DROP_TOL);
            let r = l.ncols();
            let l11 = l.rows(0, r).into_owned();
            let li = linalg::lower_triangular_inverse(&l11);
            let mut c = CMatrix::zeros(r, b);
            for k in 0..r {
                for j in 0..r {
                    c[(k, perm[j])] = li[(k, j)] / d[perm[j]];
                }
            }
            Ok((c, b - r))
        }
        Factorization::Eigen => {
            let eig = SymmetricEigen::new(linalg::hermitize(&s));
            let lmax = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
            let keep: Vec<usize> = (0..b)
                .filter(|&k| eig.eigenvalues[k] > DROP_TOL * lmax)
                .collect();
            let v = &eig.eigenvectors;
            let c = CMatrix::from_fn(keep.len(), b, |r, a| {
                let k = keep[r];
                v[(a, k)].conj() / (eig.eigenvalues[k].sqrt() * d[a])
            });
            Ok((c, b - keep.len()))
        }
    }
}

/// Truncated kernel of a Gram matrix: Jacobi-scaled Cholesky, falling back to
/// PSD repair and an eigendecomposition when Cholesky fails.
pub fn kernel_from_gram(g: &GramMatrix) -> Result<KernelModel> {
    match kernel_from_gram_with(g, Factorization::Cholesky) {
        Err(Error::NotPositiveSemidefinite { .. }) => {
            let mut repaired = g.clone();
            repaired.repair_psd(PSD_TOL)?;
            kernel_from_gram_with(&repaired, Factorization::Eigen)
        }
        other => other,
    }
}

pub fn kernel_from_gram_with(g: &GramMatrix, method: Factorization) -> Result<KernelModel> {
    let b = g.size();
    if (0..b).any(|i| !(g.entries[(i, i)].re > 0.0)) {
        let bad = (0..b).map(|i| g.entries[(i, i)].re).fold(f64::INFINITY, f64::min);
        return Err(Error::NonPositiveDiagonal(bad));
    }
    let (coefficients, dropped) = orthonormalize(&g.entries, method)?;
    if dropped * 10 > b {
        return Err(Error::RankDeficient { dropped, size: b });
    }
    Ok(KernelModel::TruncatedSeries(SeriesKernel {
        weight: g.weight.clone(),
        basis: g.basis.clone(),
        coefficients,
        factorization: method,
        dropped,
    }))
}

fn check_dims(domain: &DomainSpec, z: &[Complex64]) -> Result<()> {
    if z.len() != domain.dim() {
        return Err(Error::DimensionMismatch {
            expected: domain.dim(),
            got: z.len(),
        });
    }
    if z.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(())
}

/// `K(z, w)`.
pub fn kernel_eval(model: &KernelModel, z: &[Complex64], w: &[Complex64]) -> Result<Complex64> {
    let domain = model.base_domain();
    check_dims(&domain, z)?;
    check_dims(&domain, w)?;
    match model {
        KernelModel::FockBargmann { mu, .. } => {
            let v = (inner(z, w) * mu).exp();
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::Overflow);
            }
            Ok(v)
        }
        KernelModel::SymmetricDomainPower {
            domain,
            exponent,
            normalization,
        } => {
            for p in [z, w] {
                let defect = contains(domain, p)?;
                if defect >= 0.0 {
                    return Err(Error::OutsideDomain { defect });
                }
            }
            Ok((generic_norm_log(domain, z, w)? * -exponent).exp() / *normalization)
        }
        KernelModel::TruncatedSeries(s) => {
            if domain.is_bounded() {
                for p in [z, w] {
                    let defect = contains(&domain, p)?;
                    if defect > CLOSURE_SLACK {
                        return Err(Error::OutsideDomain { defect });
                    }
                }
            }
            Ok(s.eval(z, w))
        }
        KernelModel::Scaled { c, inner } => Ok(kernel_eval(inner, z, w)? * c),
    }
}

/// `k_w(z) = K(z, w) / √K(w, w)`.
pub fn normalized_kernel(model: &KernelModel, z: &[Complex64], w: &[Complex64]) -> Result<Complex64> {
    let kww = kernel_eval(model, w, w)?.re;
    if !(kww > 0.0) {
        return Err(Error::NonPositiveDiagonal(kww));
    }
    Ok(kernel_eval(model, z, w)? / kww.sqrt())
}

/// Holomorphic polynomial `Σ c_α z^α`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    pub terms: Vec<(MultiIndex, Complex64)>,
}

impl Polynomial {
    pub fn monomial(alpha: MultiIndex) -> Self {
        Polynomial {
            terms: vec![(alpha, Complex64::new(1.0, 0.0))],
        }
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|(a, _)| a.degree()).max().unwrap_or(0)
    }

    pub fn eval(&self, z: &[Complex64]) -> Complex64 {
        self.terms.iter().map(|(a, c)| c * a.monomial(z)).sum()
    }
}

/// `|f(z) − ∫ f(w) K(z,w) p(w) dV(w)|` for a series kernel, with the integral
/// taken by the product quadrature `scheme` (or exactly when `scheme` is
/// `None` and the weight has a closed form).
pub fn reproducing_residual(
    model: &KernelModel,
    f: &Polynomial,
    z: &[Complex64],
    scheme: Option<&QuadratureScheme>,
) -> Result<f64> {
    let series = model
        .series()
        .ok_or_else(|| Error::IncompatibleScheme("reproducing check needs a series kernel".into()))?;
    let scale = model.scale();
    let basis = &series.basis;
    check_dims(&series.weight.base, z)?;
    if f.degree() > basis.degree() {
        return Err(Error::Invalid(format!(
            "polynomial degree {} exceeds the basis degree {}",
            f.degree(),
            basis.degree()
        )));
    }
    let domain = series.weight.base;
    let g = match scheme {
        Some(s) => gram_quadrature(&domain, &series.weight, basis.degree(), s)?,
        None => crate::moments::gram_auto(&domain, &series.weight, basis.degree())?,
    };
    // ⟨f, e_k⟩ = Σ_γ f_γ Σ_β G[γ][β] conj(C[k][β])
    let mut fvec = DVector::zeros(basis.len());
    for (a, c) in &f.terms {
        let pos = basis.position(a).ok_or_else(|| Error::Invalid("monomial outside the basis".into()))?;
        fvec[pos] += c;
    }
    let gf = g.entries.transpose() * fvec;
    let proj = series.coefficients.map(|v| v.conj()) * gf;
    let ez = series.orthonormal_values(z);
    let value: Complex64 = ez.iter().zip(proj.iter()).map(|(e, p)| e * p).sum::<Complex64>() * scale;
    Ok((f.eval(z) - value).norm())
}
