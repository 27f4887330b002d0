// SPDX-License-Identifier: Apache-2.0

//! Automorphism generators of Fock-Bargmann-Hartogs, Cartan-Hartogs and
//! Thullen domains, their Jacobians on the zero section, and the
//! transformation-law check.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::domain::{inner, norm_sqr, DomainSpec};
use crate::error::{Error, Result};
use crate::hartogs::{hartogs_contains, HartogsDomain};
use crate::json;
use crate::kernels::{kernel_eval, KernelModel};
use crate::linalg::CMatrix;

/// Unitarity tolerance `‖U*U − I‖`.
pub const UNITARY_TOL: f64 = 1e-12;

/// Accepted boundary defect for points on the closed domain.
const CLOSURE_TOL: f64 = 1e-10;

/// Largest `|∂F/∂z̄|` accepted by the finite-difference Jacobian.
pub const CR_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum MapKind {
    /// `(z, ζ) ↦ (Uz, ζ)`
    BaseUnitary {
        #[serde(with = "json::complex_matrix")]
        u: CMatrix,
    },
    /// `(z, ζ) ↦ (z, U'ζ)`
    FiberUnitary {
        #[serde(with = "json::complex_matrix")]
        u: CMatrix,
    },
    /// `(z, ζ) ↦ (z − v, e^{μ⟨z,v⟩ − μ‖v‖²/2} ζ)`
    FockTranslation {
        #[serde(with = "json::complex_vec")]
        v: Vec<Complex64>,
        mu: f64,
    },
    /// `(z, ζ) ↦ (φ(z), U' N(z₀,z₀)^{μ/2} N(z,z₀)^{−μ} ζ)` with `z₀ = a`;
    /// `φ(z) = (z−a)/(1−āz)` on the disk, the involution exchanging `0`
    /// and `a` on balls.
    CartanHartogs {
        #[serde(with = "json::complex_vec")]
        a: Vec<Complex64>,
        #[serde(default, with = "json::option_complex_matrix", skip_serializing_if = "Option::is_none")]
        fiber_unitary: Option<CMatrix>,
        mu: f64,
    },
    /// `(z, ζ) ↦ ((z−a)/(1−āz), (1−|a|²)^{μ/2} (1−āz)^{−μ} ζ)`
    ThullenMobius {
        #[serde(with = "json::complex")]
        a: Complex64,
        mu: f64,
    },
    /// Applied left to right.
    Composite { maps: Vec<MapKind> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutomorphismSpec {
    pub target: HartogsDomain,
    pub map: MapKind,
}

fn unitary_defect(u: &CMatrix) -> f64 {
    (u.adjoint() * u - CMatrix::identity(u.nrows(), u.ncols())).norm()
}

fn check_square(u: &CMatrix, size: usize) -> Result<()> {
    if u.nrows() != size || u.ncols() != size {
        return Err(Error::DimensionMismatch {
            expected: size,
            got: u.nrows().max(u.ncols()),
        });
    }
    let d = unitary_defect(u);
    if d > UNITARY_TOL {
        return Err(Error::NotUnitary(d));
    }
    Ok(())
}

fn validate_kind(kind: &MapKind, base: &DomainSpec, m: usize) -> Result<()> {
    let n = base.dim();
    match kind {
        MapKind::BaseUnitary { u } => check_square(u, n),
        MapKind::FiberUnitary { u } => check_square(u, m),
        MapKind::FockTranslation { v, mu } => {
            if v.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: v.len() });
            }
            if !(*mu > 0.0) {
                return Err(Error::InvalidMap(format!("μ must be positive, got {mu}")));
            }
            Ok(())
        }
        MapKind::CartanHartogs { a, fiber_unitary, mu } => {
            if !matches!(base, DomainSpec::UnitDisk | DomainSpec::UnitBall { .. }) {
                return Err(Error::UnsupportedDomain(format!("Möbius maps on {base:?}")));
            }
            if a.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: a.len() });
            }
            if !(norm_sqr(a) < 1.0) {
                return Err(Error::InvalidMap("Möbius parameter outside the base domain".into()));
            }
            if let Some(u) = fiber_unitary {
                check_square(u, m)?;
            }
            if !(*mu > 0.0) {
                return Err(Error::InvalidMap(format!("μ must be positive, got {mu}")));
            }
            Ok(())
        }
        MapKind::ThullenMobius { a, mu } => {
            if *base != DomainSpec::UnitDisk || m != 1 {
                return Err(Error::UnsupportedDomain("Thullen maps need a disk base and m = 1".into()));
            }
            if !(a.norm_sqr() < 1.0) {
                return Err(Error::InvalidMap("Möbius parameter outside the disk".into()));
            }
            if !(*mu > 0.0) {
                return Err(Error::InvalidMap(format!("μ must be positive, got {mu}")));
            }
            Ok(())
        }
        MapKind::Composite { maps } => maps.iter().try_for_each(|k| validate_kind(k, base, m)),
    }
}

impl AutomorphismSpec {
    /// Checks dimensions, unitarity and Möbius parameters against the target.
    pub fn new(target: HartogsDomain, map: MapKind) -> Result<Self> {
        validate_kind(&map, &target.base, target.fiber_dim)?;
        Ok(AutomorphismSpec { target, map })
    }

    pub fn identity(target: HartogsDomain) -> Self {
        AutomorphismSpec {
            target,
            map: MapKind::Composite { maps: Vec::new() },
        }
    }

    /// `F ∘ self`: first `self`, then `other`.
    pub fn then(&self, other: &AutomorphismSpec) -> AutomorphismSpec {
        AutomorphismSpec {
            target: self.target.clone(),
            map: MapKind::Composite {
                maps: vec![self.map.clone(), other.map.clone()],
            },
        }
    }
}

fn fbh_mu(h: &HartogsDomain) -> Result<f64> {
    match h.weight.as_scaled_gaussian() {
        Some((c, mu)) if c == 1.0 => Ok(mu),
        _ => Err(Error::InvalidMap("target is not a Fock-Bargmann-Hartogs domain".into())),
    }
}

fn ch_mu(h: &HartogsDomain) -> Result<f64> {
    match h.weight.as_scaled_norm_power() {
        Some((c, mu)) if c == 1.0 && mu > 0.0 => Ok(mu),
        _ => Err(Error::InvalidMap("target is not a Cartan-Hartogs domain".into())),
    }
}

/// Generator of `Aut(D_{n,m})`; translations must carry the domain's `μ`.
pub fn make_fbh_map(map: MapKind, h: &HartogsDomain) -> Result<AutomorphismSpec> {
    let mu = fbh_mu(h)?;
    fn check(kind: &MapKind, mu: f64) -> Result<()> {
        match kind {
            MapKind::BaseUnitary { .. } | MapKind::FiberUnitary { .. } => Ok(()),
            MapKind::FockTranslation { mu: m, .. } if (m - mu).abs() <= 1e-15 * mu => Ok(()),
            MapKind::FockTranslation { mu: m, .. } => {
                Err(Error::InvalidMap(format!("translation μ = {m} does not match the domain μ = {mu}")))
            }
            MapKind::Composite { maps } => maps.iter().try_for_each(|k| check(k, mu)),
            other => Err(Error::InvalidMap(format!("{other:?} is not a Fock-Bargmann-Hartogs generator"))),
        }
    }
    check(&map, mu)?;
    AutomorphismSpec::new(h.clone(), map)
}

/// `Φ = (φ, U' N(a,a)^{μ/2} N(z,a)^{−μ} ζ)` on a Cartan-Hartogs domain over
/// the disk or a ball.
pub fn make_ch_map(a: Vec<Complex64>, fiber_unitary: Option<CMatrix>, h: &HartogsDomain) -> Result<AutomorphismSpec> {
    let mu = ch_mu(h)?;
    AutomorphismSpec::new(h.clone(), MapKind::CartanHartogs { a, fiber_unitary, mu })
}

/// `φ_a` of the Thullen domain `{|z|² + |ζ|^{2/μ} < 1}`.
pub fn make_thullen_map(a: Complex64, h: &HartogsDomain) -> Result<AutomorphismSpec> {
    let mu = ch_mu(h)?;
    AutomorphismSpec::new(h.clone(), MapKind::ThullenMobius { a, mu })
}

/// Base Möbius map: `(z−a)/(1−āz)` on the disk, the involution
/// `(a − P_a z − s_a Q_a z)/(1 − ⟨z,a⟩)` on balls.
fn mobius(base: &DomainSpec, a: &[Complex64], z: &[Complex64]) -> Vec<Complex64> {
    let one = Complex64::new(1.0, 0.0);
    let za = inner(z, a);
    if *base == DomainSpec::UnitDisk {
        return vec![(z[0] - a[0]) / (one - za)];
    }
    let aa = norm_sqr(a);
    if aa == 0.0 {
        return z.iter().map(|v| -v).collect();
    }
    let s = (1.0 - aa).sqrt();
    let denom = one - za;
    (0..z.len())
        .map(|i| {
            let p = a[i] * (za / aa);
            let q = z[i] - p;
            (a[i] - p - q * s) / denom
        })
        .collect()
}

/// `det J(φ, z)` for [`mobius`].
fn mobius_det(base: &DomainSpec, a: &[Complex64], z: &[Complex64]) -> Complex64 {
    let one = Complex64::new(1.0, 0.0);
    let denom = one - inner(z, a);
    let aa = norm_sqr(a);
    if *base == DomainSpec::UnitDisk {
        return Complex64::new(1.0 - aa, 0.0) / (denom * denom);
    }
    let n = z.len() as i32;
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    Complex64::new(sign * (1.0 - aa).powf(f64::from(n + 1) / 2.0), 0.0) / denom.powi(n + 1)
}

/// `det J(φ_a, z)` of the base Möbius map on the disk or a ball.
pub fn mobius_jacobian_det(base: &DomainSpec, a: &[Complex64], z: &[Complex64]) -> Result<Complex64> {
    if !matches!(base, DomainSpec::UnitDisk | DomainSpec::UnitBall { .. }) {
        return Err(Error::UnsupportedDomain(format!("Möbius map on {base:?}")));
    }
    base.check_point(a)?;
    base.check_point(z)?;
    if norm_sqr(a) >= 1.0 {
        return Err(Error::OutsideDomain {
            defect: norm_sqr(a) - 1.0,
        });
    }
    Ok(mobius_det(base, a, z))
}

/// `N(a,a)^{μ/2} N(z,a)^{−μ}` on the principal branch.
fn ch_fiber_factor(a: &[Complex64], z: &[Complex64], mu: f64) -> Result<Complex64> {
    let n_za = Complex64::new(1.0, 0.0) - inner(z, a);
    if n_za.re <= 0.0 && n_za.im == 0.0 {
        return Err(Error::BranchCut { re: n_za.re, im: n_za.im });
    }
    Ok((Complex64::new(0.5 * mu * (1.0 - norm_sqr(a)).ln(), 0.0) - n_za.ln() * mu).exp())
}

fn fock_factor(v: &[Complex64], z: &[Complex64], mu: f64) -> Complex64 {
    (inner(z, v) * mu - Complex64::new(0.5 * mu * norm_sqr(v), 0.0)).exp()
}

fn mat_vec(u: &CMatrix, x: &[Complex64]) -> Vec<Complex64> {
    (0..u.nrows()).map(|i| (0..u.ncols()).map(|j| u[(i, j)] * x[j]).sum()).collect()
}

fn map_point(kind: &MapKind, base: &DomainSpec, z: &[Complex64], zeta: &[Complex64]) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    match kind {
        MapKind::BaseUnitary { u } => Ok((mat_vec(u, z), zeta.to_vec())),
        MapKind::FiberUnitary { u } => Ok((z.to_vec(), mat_vec(u, zeta))),
        MapKind::FockTranslation { v, mu } => {
            let f = fock_factor(v, z, *mu);
            Ok((z.iter().zip(v).map(|(a, b)| a - b).collect(), zeta.iter().map(|x| x * f).collect()))
        }
        MapKind::CartanHartogs { a, fiber_unitary, mu } => {
            let f = ch_fiber_factor(a, z, *mu)?;
            let rotated = match fiber_unitary {
                Some(u) => mat_vec(u, zeta),
                None => zeta.to_vec(),
            };
            Ok((mobius(base, a, z), rotated.iter().map(|x| x * f).collect()))
        }
        MapKind::ThullenMobius { a, mu } => {
            let f = ch_fiber_factor(&[*a], z, *mu)?;
            Ok((mobius(&DomainSpec::UnitDisk, &[*a], z), zeta.iter().map(|x| x * f).collect()))
        }
        MapKind::Composite { maps } => {
            let (mut z, mut zeta) = (z.to_vec(), zeta.to_vec());
            for k in maps {
                (z, zeta) = map_point(k, base, &z, &zeta)?;
            }
            Ok((z, zeta))
        }
    }
}

fn check_closure(h: &HartogsDomain, z: &[Complex64], zeta: &[Complex64]) -> Result<()> {
    let defect = hartogs_contains(h, z, zeta)?;
    if defect > CLOSURE_TOL {
        return Err(Error::OutsideDomain { defect });
    }
    Ok(())
}

/// Image of `(z, ζ)` (given as one point of `ℂⁿ⁺ᵐ`).
pub fn apply(aut: &AutomorphismSpec, point: &[Complex64]) -> Result<Vec<Complex64>> {
    let (z, zeta) = aut.target.split(point)?;
    check_closure(&aut.target, z, zeta)?;
    let (fz, fzeta) = map_point(&aut.map, &aut.target.base, z, zeta)?;
    Ok(fz.into_iter().chain(fzeta).collect())
}

fn inverse_kind(kind: &MapKind, base: &DomainSpec) -> MapKind {
    match kind {
        MapKind::BaseUnitary { u } => MapKind::BaseUnitary { u: u.adjoint() },
        MapKind::FiberUnitary { u } => MapKind::FiberUnitary { u: u.adjoint() },
        MapKind::FockTranslation { v, mu } => MapKind::FockTranslation {
            v: v.iter().map(|x| -x).collect(),
            mu: *mu,
        },
        MapKind::CartanHartogs { a, fiber_unitary, mu } => MapKind::CartanHartogs {
            // the ball involution is its own inverse; the disk map inverts to φ_{−a}
            a: if *base == DomainSpec::UnitDisk {
                a.iter().map(|x| -x).collect()
            } else {
                a.clone()
            },
            fiber_unitary: fiber_unitary.as_ref().map(|u| u.adjoint()),
            mu: *mu,
        },
        MapKind::ThullenMobius { a, mu } => MapKind::ThullenMobius { a: -a, mu: *mu },
        MapKind::Composite { maps } => MapKind::Composite {
            maps: maps.iter().rev().map(|k| inverse_kind(k, base)).collect(),
        },
    }
}

pub fn inverse(aut: &AutomorphismSpec) -> AutomorphismSpec {
    AutomorphismSpec {
        target: aut.target.clone(),
        map: inverse_kind(&aut.map, &aut.target.base),
    }
}

/// `z₀ = φ₁⁻¹(0)`.
pub fn base_preimage_of_origin(aut: &AutomorphismSpec) -> Result<Vec<Complex64>> {
    let n = aut.target.base.dim();
    let zero = vec![Complex64::new(0.0, 0.0); n];
    let fiber = vec![Complex64::new(0.0, 0.0); aut.target.fiber_dim];
    Ok(map_point(&inverse(aut).map, &aut.target.base, &zero, &fiber)?.0)
}

fn slice_jacobian(kind: &MapKind, base: &DomainSpec, m: usize, z: &[Complex64]) -> Result<(Complex64, Vec<Complex64>)> {
    let mi = m as i32;
    let zero_fiber = vec![Complex64::new(0.0, 0.0); m];
    let next = || -> Result<Vec<Complex64>> { Ok(map_point(kind, base, z, &zero_fiber)?.0) };
    match kind {
        MapKind::BaseUnitary { u } => Ok((u.determinant(), next()?)),
        MapKind::FiberUnitary { u } => Ok((u.determinant(), z.to_vec())),
        MapKind::FockTranslation { v, mu } => Ok((fock_factor(v, z, *mu).powi(mi), next()?)),
        MapKind::CartanHartogs { a, fiber_unitary, mu } => {
            let f = ch_fiber_factor(a, z, *mu * m as f64)?;
            let du = fiber_unitary.as_ref().map_or(Complex64::new(1.0, 0.0), |u| u.determinant());
            Ok((f * du * mobius_det(base, a, z), next()?))
        }
        MapKind::ThullenMobius { a, mu } => {
            let f = ch_fiber_factor(&[*a], z, *mu)?;
            Ok((f * mobius_det(&DomainSpec::UnitDisk, &[*a], z), next()?))
        }
        MapKind::Composite { maps } => {
            let mut j = Complex64::new(1.0, 0.0);
            let mut cur = z.to_vec();
            for k in maps {
                let (jk, nz) = slice_jacobian(k, base, m, &cur)?;
                j *= jk;
                cur = nz;
            }
            Ok((j, cur))
        }
    }
}

/// `J(F, (z, 0))` from the closed forms; composites by the chain rule, which
/// is valid because every generator preserves the zero section.
pub fn jacobian_base_slice(aut: &AutomorphismSpec, z: &[Complex64]) -> Result<Complex64> {
    let zeta = vec![Complex64::new(0.0, 0.0); aut.target.fiber_dim];
    check_closure(&aut.target, z, &zeta)?;
    Ok(slice_jacobian(&aut.map, &aut.target.base, aut.target.fiber_dim, z)?.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FdJacobian {
    /// Holomorphic Jacobian `∂F/∂z`, rows indexed by output coordinate.
    #[serde(with = "json::complex_matrix")]
    pub matrix: CMatrix,
    #[serde(with = "json::complex")]
    pub determinant: Complex64,
    /// `max |∂F/∂z̄|`.
    pub cauchy_riemann_defect: f64,
}

/// Central differences along the real and imaginary axis of every
/// coordinate; `∂F/∂z = (D_x − i D_y)/2`, `∂F/∂z̄ = (D_x + i D_y)/2`.
pub fn jacobian_fd(aut: &AutomorphismSpec, point: &[Complex64], h: f64) -> Result<FdJacobian> {
    if !(h > 0.0) {
        return Err(Error::Invalid(format!("step must be positive, got {h}")));
    }
    let dim = point.len();
    aut.target.split(point)?;
    let eval = |p: &[Complex64]| -> Result<Vec<Complex64>> {
        let (z, zeta) = aut.target.split(p)?;
        if hartogs_contains(&aut.target, z, zeta).map_or(true, |d| d >= 0.0) {
            return Err(Error::StepTooLarge);
        }
        let (fz, fzeta) = map_point(&aut.map, &aut.target.base, z, zeta)?;
        Ok(fz.into_iter().chain(fzeta).collect())
    };
    let mut matrix = CMatrix::zeros(dim, dim);
    let mut cr: f64 = 0.0;
    for j in 0..dim {
        let diff = |dir: Complex64| -> Result<Vec<Complex64>> {
            let mut plus = point.to_vec();
            let mut minus = point.to_vec();
            plus[j] += dir * h;
            minus[j] -= dir * h;
            let (fp, fm) = (eval(&plus)?, eval(&minus)?);
            Ok(fp.iter().zip(&fm).map(|(a, b)| (a - b) / (2.0 * h)).collect())
        };
        let dx = diff(Complex64::new(1.0, 0.0))?;
        let dy = diff(Complex64::new(0.0, 1.0))?;
        let i = Complex64::new(0.0, 1.0);
        for r in 0..dim {
            matrix[(r, j)] = (dx[r] - i * dy[r]) * 0.5;
            cr = cr.max(((dx[r] + i * dy[r]) * 0.5).norm());
        }
    }
    if cr > CR_TOL {
        return Err(Error::NotHolomorphic(cr));
    }
    Ok(FdJacobian {
        determinant: matrix.determinant(),
        matrix,
        cauchy_riemann_defect: cr,
    })
}

/// Largest relative defect of
/// `K((z,0),(w,0)) = J(F,(z,0)) conj(J(F,(w,0))) K(F(z,0), F(w,0))`
/// over all pairs of `points`, with the slice kernel `m!/πᵐ K_{D,p^m}`
/// supplied through `base_kernel`.
pub fn transform_residual(aut: &AutomorphismSpec, base_kernel: &KernelModel, points: &[Vec<Complex64>]) -> Result<f64> {
    let m = aut.target.fiber_dim;
    let fact: f64 = (1..=m).map(|k| k as f64).product();
    let slice = fact / PI.powi(m as i32);
    let zero_fiber = vec![Complex64::new(0.0, 0.0); m];
    let mut images = Vec::with_capacity(points.len());
    for z in points {
        let j = jacobian_base_slice(aut, z)?;
        let (fz, fzeta) = map_point(&aut.map, &aut.target.base, z, &zero_fiber)?;
        if fzeta.iter().any(|c| c.norm() != 0.0) {
            return Err(Error::ZeroSectionViolated);
        }
        images.push((j, fz));
    }
    let mut worst: f64 = 0.0;
    for (z, (jz, fz)) in points.iter().zip(&images) {
        for (w, (jw, fw)) in points.iter().zip(&images) {
            let lhs = kernel_eval(base_kernel, z, w)? * slice;
            let rhs = jz * jw.conj() * kernel_eval(base_kernel, fz, fw)? * slice;
            worst = worst.max((lhs - rhs).norm() / lhs.norm());
        }
    }
    Ok(worst)
}
