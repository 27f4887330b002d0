// SPDX-License-Identifier: Apache-2.0

//! Model base domains: the unit disk, the unit ball, type-I matrix balls and
//! the full space, with their generic norms, genera and Hua polynomials.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A model base domain.
///
/// Type-I points are `p × q` matrices flattened row-major into `p·q`
/// coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainSpec {
    UnitDisk,
    UnitBall { n: usize },
    TypeIMatrixBall { p: usize, q: usize },
    FullSpace { n: usize },
}

impl DomainSpec {
    pub fn dim(&self) -> usize {
        match *self {
            DomainSpec::UnitDisk => 1,
            DomainSpec::UnitBall { n } | DomainSpec::FullSpace { n } => n,
            DomainSpec::TypeIMatrixBall { p, q } => p * q,
        }
    }

    pub fn is_bounded(&self) -> bool {
        !matches!(self, DomainSpec::FullSpace { .. })
    }

    /// Disk, ball and full space: weights here may be functions of `‖z‖²`.
    pub fn is_radial_model(&self) -> bool {
        !matches!(self, DomainSpec::TypeIMatrixBall { .. })
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            DomainSpec::UnitDisk => true,
            DomainSpec::UnitBall { n } | DomainSpec::FullSpace { n } => n >= 1,
            DomainSpec::TypeIMatrixBall { p, q } => p >= 1 && q >= 1,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Invalid(format!("degenerate domain {self:?}")))
        }
    }

    pub fn check_point(&self, z: &[Complex64]) -> Result<()> {
        if z.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: z.len(),
            });
        }
        if z.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(())
    }

    /// Lebesgue volume of the domain (`None` for the full space).
    pub fn volume(&self) -> Option<f64> {
        match *self {
            DomainSpec::UnitDisk => Some(PI),
            DomainSpec::UnitBall { n } => Some(PI.powi(n as i32) / factorial(n)),
            DomainSpec::TypeIMatrixBall { p, q } => {
                let sf = |k: usize| (1..k).map(factorial).product::<f64>();
                Some(PI.powi((p * q) as i32) * sf(p) * sf(q) / sf(p + q))
            }
            DomainSpec::FullSpace { .. } => None,
        }
    }
}

pub(crate) fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Hermitian inner product `⟨z, w⟩ = Σ zⱼ conj(wⱼ)`.
pub fn inner(z: &[Complex64], w: &[Complex64]) -> Complex64 {
    z.iter().zip(w).map(|(a, b)| a * b.conj()).sum()
}

pub fn norm_sqr(z: &[Complex64]) -> f64 {
    z.iter().map(|c| c.norm_sqr()).sum()
}

fn as_matrix(p: usize, q: usize, z: &[Complex64]) -> DMatrix<Complex64> {
    DMatrix::from_row_slice(p, q, z)
}

/// Eigenvalues of `Z W*` for type-I points.
fn zw_star_eigenvalues(p: usize, q: usize, z: &[Complex64], w: &[Complex64]) -> Vec<Complex64> {
    let zm = as_matrix(p, q, z);
    let wm = as_matrix(p, q, w);
    let prod = &zm * wm.adjoint();
    if p == 1 {
        return vec![prod[(0, 0)]];
    }
    // the complex Schur form is upper triangular: its diagonal is the spectrum
    let (_, t) = prod.schur().unpack();
    t.diagonal().iter().copied().collect()
}

/// Factors `1 − λᵢ` whose product is the generic norm `N(z, w)`.
pub fn generic_norm_factors(
    domain: &DomainSpec,
    z: &[Complex64],
    w: &[Complex64],
) -> Result<Vec<Complex64>> {
    domain.check_point(z)?;
    domain.check_point(w)?;
    let one = Complex64::new(1.0, 0.0);
    match *domain {
        DomainSpec::UnitDisk | DomainSpec::UnitBall { .. } => Ok(vec![one - inner(z, w)]),
        DomainSpec::TypeIMatrixBall { p, q } => Ok(zw_star_eigenvalues(p, q, z, w)
            .into_iter()
            .map(|l| one - l)
            .collect()),
        DomainSpec::FullSpace { .. } => Err(Error::UnsupportedDomain(
            "generic norm on the full space".into(),
        )),
    }
}

/// Generic norm `N(z, w)`: `1 − z·conj(w)` on the disk, `1 − ⟨z, w⟩` on the
/// ball, `det(I − Z W*)` on type-I matrix balls.
pub fn generic_norm(domain: &DomainSpec, z: &[Complex64], w: &[Complex64]) -> Result<Complex64> {
    Ok(generic_norm_factors(domain, z, w)?.into_iter().product())
}

/// `Σ Log(1 − λᵢ)` with principal logs per factor. Errors when a factor sits
/// on the branch cut, which cannot happen for interior points.
pub fn generic_norm_log(domain: &DomainSpec, z: &[Complex64], w: &[Complex64]) -> Result<Complex64> {
    let mut acc = Complex64::new(0.0, 0.0);
    for f in generic_norm_factors(domain, z, w)? {
        if f.re <= 0.0 && f.im == 0.0 {
            return Err(Error::BranchCut { re: f.re, im: f.im });
        }
        acc += f.ln();
    }
    Ok(acc)
}

/// `N(z, w)^s` on the principal branch of each eigenvalue factor.
pub fn generic_norm_pow(
    domain: &DomainSpec,
    z: &[Complex64],
    w: &[Complex64],
    s: f64,
) -> Result<Complex64> {
    Ok((generic_norm_log(domain, z, w)? * s).exp())
}

pub fn genus(domain: &DomainSpec) -> Result<u32> {
    match *domain {
        DomainSpec::UnitDisk => Ok(2),
        DomainSpec::UnitBall { n } => Ok(n as u32 + 1),
        DomainSpec::TypeIMatrixBall { p, q } => Ok((p + q) as u32),
        DomainSpec::FullSpace { .. } => Err(Error::UnsupportedDomain("genus of the full space".into())),
    }
}

/// Real polynomial in ascending powers of `s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HuaPolynomial {
    pub coefficients: Vec<f64>,
}

impl HuaPolynomial {
    pub fn eval(&self, s: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, c| acc * s + c)
    }

    fn mul(&self, other: &HuaPolynomial) -> HuaPolynomial {
        let mut out = vec![0.0; self.coefficients.len() + other.coefficients.len() - 1];
        for (i, a) in self.coefficients.iter().enumerate() {
            for (j, b) in other.coefficients.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        HuaPolynomial { coefficients: out }
    }

    /// `(s + a)(s + a + 1)…(s + a + k − 1) / c`.
    fn rising(a: f64, k: usize, c: f64) -> HuaPolynomial {
        let mut p = HuaPolynomial {
            coefficients: vec![1.0 / c],
        };
        for i in 0..k {
            p = p.mul(&HuaPolynomial {
                coefficients: vec![a + i as f64, 1.0],
            });
        }
        p
    }
}

/// Hua polynomial `χ` normalized to `χ(0) = 1`.
///
/// Type-I `p × q` (with `p ≤ q`): `χ(s) = Π_{j<p} (s+1+j)_q / (1+j)_q`, which
/// reduces to `(s+1)_n / n!` for the ball and `s + 1` for the disk.
pub fn hua_polynomial(domain: &DomainSpec) -> Result<HuaPolynomial> {
    let (p, q) = match *domain {
        DomainSpec::UnitDisk => (1, 1),
        DomainSpec::UnitBall { n } => (1, n),
        DomainSpec::TypeIMatrixBall { p, q } => (p.min(q), p.max(q)),
        DomainSpec::FullSpace { .. } => {
            return Err(Error::UnsupportedDomain("Hua polynomial of the full space".into()))
        }
    };
    let mut chi = HuaPolynomial {
        coefficients: vec![1.0],
    };
    for j in 0..p {
        let norm: f64 = (0..q).map(|i| (1 + j + i) as f64).product();
        chi = chi.mul(&HuaPolynomial::rising((1 + j) as f64, q, norm));
    }
    Ok(chi)
}

/// `c_{D,μ} = χ(0)/χ(μ) · Vol(D) = ∫_D N(z,z)^μ dV(z)`.
pub fn hua_normalization(domain: &DomainSpec, mu: f64) -> Result<f64> {
    if !(mu >= 0.0) {
        return Err(Error::Invalid(format!("exponent must be non-negative, got {mu}")));
    }
    let chi = hua_polynomial(domain)?;
    let vol = domain
        .volume()
        .ok_or_else(|| Error::UnsupportedDomain("volume of the full space".into()))?;
    Ok(chi.eval(0.0) / chi.eval(mu) * vol)
}

/// Boundary defect: negative inside, zero on the boundary, positive outside.
pub fn contains(domain: &DomainSpec, z: &[Complex64]) -> Result<f64> {
    domain.check_point(z)?;
    match *domain {
        DomainSpec::UnitDisk | DomainSpec::UnitBall { .. } => Ok(norm_sqr(z) - 1.0),
        DomainSpec::TypeIMatrixBall { p, q } => {
            let sv = as_matrix(p, q, z).singular_values();
            let smax = sv.iter().copied().fold(0.0, f64::max);
            Ok(smax * smax - 1.0)
        }
        DomainSpec::FullSpace { .. } => Ok(-1.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn generic_norm_examples() {
        let disk = DomainSpec::UnitDisk;
        assert_eq!(generic_norm(&disk, &[c(0.0, 0.0)], &[c(0.0, 0.0)]).unwrap(), c(1.0, 0.0));
        let v = generic_norm(&disk, &[c(0.5, 0.0)], &[c(0.5, 0.0)]).unwrap();
        assert!((v - c(0.75, 0.0)).norm() < 1e-15);
        let ball = DomainSpec::UnitBall { n: 2 };
        let z = [c(0.3, 0.0), c(0.0, 0.4)];
        let v = generic_norm(&ball, &z, &z).unwrap();
        assert!((v - c(0.75, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn generic_norm_errors() {
        let disk = DomainSpec::UnitDisk;
        assert!(matches!(
            generic_norm(&disk, &[c(0.0, 0.0), c(0.0, 0.0)], &[c(0.0, 0.0)]),
            Err(Error::DimensionMismatch { .. })
        ));
        let full = DomainSpec::FullSpace { n: 1 };
        assert!(generic_norm(&full, &[c(0.0, 0.0)], &[c(0.0, 0.0)]).is_err());
        assert!(genus(&full).is_err());
    }

    #[test]
    fn type_i_norm_matches_determinant() {
        let d = DomainSpec::TypeIMatrixBall { p: 2, q: 3 };
        let z = [c(0.1, 0.2), c(-0.2, 0.1), c(0.05, 0.0), c(0.3, -0.1), c(0.0, 0.2), c(-0.1, -0.1)];
        let w = [c(0.2, -0.1), c(0.1, 0.1), c(-0.3, 0.0), c(0.0, 0.1), c(0.2, 0.2), c(0.1, -0.2)];
        let zm = DMatrix::from_row_slice(2, 3, &z);
        let wm = DMatrix::from_row_slice(2, 3, &w);
        let det = (DMatrix::<Complex64>::identity(2, 2) - zm * wm.adjoint()).determinant();
        let n = generic_norm(&d, &z, &w).unwrap();
        assert!((n - det).norm() < 1e-14);
        let nw = generic_norm(&d, &w, &z).unwrap();
        assert!((n - nw.conj()).norm() < 1e-14);
    }

    #[test]
    fn genus_examples() {
        assert_eq!(genus(&DomainSpec::UnitDisk).unwrap(), 2);
        assert_eq!(genus(&DomainSpec::UnitBall { n: 3 }).unwrap(), 4);
        assert_eq!(genus(&DomainSpec::TypeIMatrixBall { p: 2, q: 2 }).unwrap(), 4);
    }

    #[test]
    fn hua_polynomials_are_normalized_and_positive() {
        for d in [
            DomainSpec::UnitDisk,
            DomainSpec::UnitBall { n: 3 },
            DomainSpec::TypeIMatrixBall { p: 2, q: 3 },
            DomainSpec::TypeIMatrixBall { p: 3, q: 2 },
        ] {
            let chi = hua_polynomial(&d).unwrap();
            assert!((chi.eval(0.0) - 1.0).abs() < 1e-15);
            assert!((0..50).all(|i| chi.eval(i as f64 * 0.2) > 0.0));
        }
        // type I 1×n coincides with the ball
        let a = hua_polynomial(&DomainSpec::TypeIMatrixBall { p: 1, q: 3 }).unwrap();
        let b = hua_polynomial(&DomainSpec::UnitBall { n: 3 }).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn hua_normalization_examples() {
        let disk = DomainSpec::UnitDisk;
        assert!((hua_normalization(&disk, 0.0).unwrap() - PI).abs() < 1e-15);
        assert!((hua_normalization(&disk, 1.0).unwrap() - PI / 2.0).abs() < 1e-15);
        let ball = DomainSpec::UnitBall { n: 2 };
        assert!((hua_normalization(&ball, 1.0).unwrap() - PI * PI / 6.0).abs() < 1e-14);
        // Vol(I_{2,2}) = π⁴/12
        let t = DomainSpec::TypeIMatrixBall { p: 2, q: 2 };
        assert!((t.volume().unwrap() - PI.powi(4) / 12.0).abs() < 1e-12);
        assert!(hua_normalization(&DomainSpec::FullSpace { n: 1 }, 1.0).is_err());
    }

    #[test]
    fn contains_examples() {
        let disk = DomainSpec::UnitDisk;
        assert_eq!(contains(&disk, &[c(0.0, 0.0)]).unwrap(), -1.0);
        assert_eq!(contains(&disk, &[c(1.0, 0.0)]).unwrap(), 0.0);
        let full = DomainSpec::FullSpace { n: 2 };
        assert_eq!(contains(&full, &[c(10.0, 0.0), c(0.0, -7.0)]).unwrap(), -1.0);
        let t = DomainSpec::TypeIMatrixBall { p: 2, q: 2 };
        let z = [c(0.5, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.2, 0.0)];
        assert!((contains(&t, &z).unwrap() - (0.25 - 1.0)).abs() < 1e-14);
    }

    #[test]
    fn hua_normalization_matches_radial_quadrature() {
        // ∫_{Bⁿ} (1−‖z‖²)^μ dV = πⁿ/(n−1)! ∫₀¹ t^{n−1}(1−t)^μ dt, with t = 1 − u²
        let gl = gauss_quad::GaussLegendre::new(200).unwrap();
        for n in 1..=3usize {
            let domain = if n == 1 { DomainSpec::UnitDisk } else { DomainSpec::UnitBall { n } };
            for mu in [0.5, 1.0, 2.0, 3.0] {
                let radial = gl.integrate(0.0, 1.0, |u: f64| {
                    2.0 * u * (1.0 - u * u).powi(n as i32 - 1) * u.powf(2.0 * mu)
                });
                let oracle = PI.powi(n as i32) / factorial(n - 1) * radial;
                let got = hua_normalization(&domain, mu).unwrap();
                assert!((got - oracle).abs() <= 1e-10 * oracle, "n={n} μ={mu}: {got} vs {oracle}");
            }
        }
    }

    #[test]
    fn type_i_normalization_matches_monte_carlo() {
        use rand::{Rng, SeedableRng};
        let t = DomainSpec::TypeIMatrixBall { p: 2, q: 2 };
        let exact = hua_normalization(&t, 1.0).unwrap();
        assert!((exact - PI.powi(4) / 72.0).abs() < 1e-12);
        // uniform samples in the cube [−1,1]⁸ ⊃ I_{2,2}
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let samples = 400_000;
        let (mut sum, mut sum2) = (0.0, 0.0);
        for _ in 0..samples {
            let z: Vec<Complex64> = (0..4)
                .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            if contains(&t, &z).unwrap() < 0.0 {
                let v = generic_norm(&t, &z, &z).unwrap().re * 256.0;
                sum += v;
                sum2 += v * v;
            }
        }
        let mean = sum / samples as f64;
        let se = ((sum2 / samples as f64 - mean * mean) / samples as f64).sqrt();
        assert!((mean - exact).abs() <= 4.0 * se, "{mean} vs {exact} (se {se})");
    }
}
