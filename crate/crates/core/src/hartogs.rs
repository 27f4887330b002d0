// SPDX-License-Identifier: Apache-2.0

//! Hartogs domains `{(z, ζ) : ‖ζ‖² < p(z)}` over a model base and the
//! Forelli-Rudin series for their Bergman kernels.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::{Arc, RwLock};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{contains, inner, norm_sqr, DomainSpec};
use crate::error::{Error, Result};
use crate::json;
use crate::kernels::{kernel_eval, kernel_for_weight, kernel_from_gram, KernelModel};
use crate::moments::{gram_auto, gram_quadrature};
use crate::quadrature::QuadratureScheme;
use crate::weight::{weight_eval, Weight};

/// Hard cap on the number of series terms.
pub const MAX_TERMS: usize = 200;

/// Terms evaluated concurrently per batch.
const BATCH: usize = 8;

/// Consecutive small terms required before stopping.
const QUIET_TERMS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HartogsDomain {
    pub base: DomainSpec,
    pub weight: Weight,
    pub fiber_dim: usize,
}

impl HartogsDomain {
    pub fn new(weight: Weight, fiber_dim: usize) -> Result<Self> {
        weight.validate()?;
        if fiber_dim == 0 {
            return Err(Error::Invalid("fiber dimension must be positive".into()));
        }
        Ok(HartogsDomain {
            base: weight.base,
            weight,
            fiber_dim,
        })
    }

    /// `{‖ζ‖² < e^{−μ‖z‖²}} ⊂ ℂⁿ × ℂᵐ`.
    pub fn fbh(n: usize, m: usize, mu: f64) -> Result<Self> {
        HartogsDomain::new(Weight::gaussian(n, mu)?, m)
    }

    /// `{‖ζ‖² < N(z,z)^μ}` over a bounded symmetric domain.
    pub fn cartan_hartogs(base: DomainSpec, m: usize, mu: f64) -> Result<Self> {
        if !(mu > 0.0) {
            return Err(Error::Invalid(format!("exponent must be positive, got {mu}")));
        }
        HartogsDomain::new(Weight::generic_norm_power(base, mu)?, m)
    }

    /// `{|z|² + |ζ|^{2/μ} < 1} ⊂ ℂ²`.
    pub fn thullen(mu: f64) -> Result<Self> {
        HartogsDomain::cartan_hartogs(DomainSpec::UnitDisk, 1, mu)
    }

    pub fn dim(&self) -> usize {
        self.base.dim() + self.fiber_dim
    }

    /// Splits a point of `ℂⁿ⁺ᵐ` into `(z, ζ)`.
    pub fn split<'a>(&self, point: &'a [Complex64]) -> Result<(&'a [Complex64], &'a [Complex64])> {
        if point.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: point.len(),
            });
        }
        Ok(point.split_at(self.base.dim()))
    }
}

/// `‖ζ‖² − p(z)`: negative inside, zero on the boundary over interior `z`.
pub fn hartogs_contains(h: &HartogsDomain, z: &[Complex64], zeta: &[Complex64]) -> Result<f64> {
    if zeta.len() != h.fiber_dim {
        return Err(Error::DimensionMismatch {
            expected: h.fiber_dim,
            got: zeta.len(),
        });
    }
    let defect = contains(&h.base, z)?;
    if defect >= 0.0 {
        return Err(Error::OutsideDomain { defect });
    }
    Ok(norm_sqr(zeta) - weight_eval(&h.weight, z)?)
}

/// Seeded random pairs of points of `h`. Base points are uniform in the
/// ball of radius `base_radius` (Frobenius radius on matrix balls) and each
/// fiber point has `‖ζ‖² = ratio · u · p(z)` with `u` uniform, so that
/// `|⟨ζ, ω⟩| ≤ ratio · √(p(z) p(w))`.
pub fn sample_pairs(
    h: &HartogsDomain,
    count: usize,
    ratio: f64,
    base_radius: f64,
    seed: u64,
) -> Result<Vec<(Vec<Complex64>, Vec<Complex64>)>> {
    if !(ratio > 0.0 && ratio < 1.0) || !(base_radius > 0.0) {
        return Err(Error::Invalid(format!(
            "need 0 < ratio < 1 and a positive radius, got {ratio} and {base_radius}"
        )));
    }
    let n = h.base.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gaussian = |k: usize, rng: &mut ChaCha8Rng| -> Vec<Complex64> {
        (0..k)
            .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect()
    };
    let point = |rng: &mut ChaCha8Rng| -> Result<Vec<Complex64>> {
        let g = gaussian(n, rng);
        let u: f64 = rng.gen();
        let r = base_radius * u.powf(1.0 / (2.0 * n as f64)) / norm_sqr(&g).sqrt();
        let z: Vec<Complex64> = g.into_iter().map(|c| c * r).collect();
        let f = gaussian(h.fiber_dim, rng);
        let u: f64 = rng.gen();
        let s = (ratio * u * weight_eval(&h.weight, &z)?).sqrt() / norm_sqr(&f).sqrt();
        Ok(z.into_iter().chain(f.into_iter().map(|c| c * s)).collect())
    };
    (0..count)
        .map(|_| Ok((point(&mut rng)?, point(&mut rng)?)))
        .collect()
}

/// Rising factorial `(k+1)(k+2)…(k+m)`.
pub fn pochhammer(k: u64, m: u32) -> Result<u128> {
    (1..=u128::from(m)).try_fold(1u128, |acc, i| acc.checked_mul(u128::from(k) + i).ok_or(Error::Overflow))
}

/// Source of the weighted kernels `K_{D, p^j}`.
pub trait KernelFamily: Sync {
    fn kernel(&self, power: u32) -> Result<Arc<KernelModel>>;
}

/// Closed forms `K_{D,p^j}` for Gaussian and generic-norm weights.
pub struct ClosedFormFamily {
    weight: Weight,
}

impl ClosedFormFamily {
    pub fn new(weight: Weight) -> Result<Self> {
        kernel_for_weight(&weight)?;
        Ok(ClosedFormFamily { weight })
    }
}

impl KernelFamily for ClosedFormFamily {
    fn kernel(&self, power: u32) -> Result<Arc<KernelModel>> {
        Ok(Arc::new(kernel_for_weight(&self.weight.pow(power))?))
    }
}

/// Truncated series kernels of `p^j`, built lazily from Gram matrices and
/// cached by `j`.
pub struct GramFamily {
    weight: Weight,
    degree: u32,
    scheme: Option<QuadratureScheme>,
    cache: RwLock<BTreeMap<u32, Arc<KernelModel>>>,
}

impl GramFamily {
    /// `scheme = None` uses exact moments when available.
    pub fn new(weight: Weight, degree: u32, scheme: Option<QuadratureScheme>) -> Self {
        GramFamily {
            weight,
            degree,
            scheme,
            cache: RwLock::new(BTreeMap::new()),
        }
    }
}

impl KernelFamily for GramFamily {
    fn kernel(&self, power: u32) -> Result<Arc<KernelModel>> {
        if let Some(k) = self.cache.read().expect("cache lock").get(&power) {
            return Ok(k.clone());
        }
        let w = self.weight.pow(power);
        let g = match &self.scheme {
            Some(s) => gram_quadrature(&w.base, &w, self.degree, s)?,
            None => gram_auto(&w.base, &w, self.degree)?,
        };
        let k = Arc::new(kernel_from_gram(&g)?);
        Ok(self.cache.write().expect("cache lock").entry(power).or_insert(k).clone())
    }
}

/// Result of a Forelli-Rudin summation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrcReport {
    #[serde(with = "json::complex")]
    pub value: Complex64,
    pub terms_used: usize,
    /// Geometric bound `|t_k| r / (1 − r)` from the last term ratio `r`.
    pub tail_estimate: f64,
    pub observed_ratio: f64,
    pub converged: bool,
}

/// `K_Ω((z,ζ),(z',ζ')) = π^{−m} Σ_k (k+1)_m K_{D,p^{k+m}}(z,z') ⟨ζ,ζ'⟩^k`.
pub fn frc_eval(
    h: &HartogsDomain,
    p1: &[Complex64],
    p2: &[Complex64],
    family: &dyn KernelFamily,
    max_terms: usize,
    tol: f64,
) -> Result<FrcReport> {
    let (z, zeta) = h.split(p1)?;
    let (w, omega) = h.split(p2)?;
    for (a, b) in [(z, zeta), (w, omega)] {
        let defect = hartogs_contains(h, a, b)?;
        if defect >= 0.0 {
            return Err(Error::OutsideDomain { defect });
        }
    }
    let m = h.fiber_dim as u32;
    let x = inner(zeta, omega);
    let cap = max_terms.clamp(1, MAX_TERMS);
    let prefactor = PI.powi(-(m as i32));

    let term = |k: usize| -> Result<Complex64> {
        // 0⁰ = 1
        let xk = if k == 0 { Complex64::new(1.0, 0.0) } else { x.powu(k as u32) };
        if xk == Complex64::new(0.0, 0.0) {
            return Ok(xk);
        }
        let kern = family.kernel(k as u32 + m)?;
        let poch = pochhammer(k as u64, m)? as f64;
        Ok(kernel_eval(&kern, z, w)? * xk * poch * prefactor)
    };

    if x == Complex64::new(0.0, 0.0) {
        return Ok(FrcReport {
            value: term(0)?,
            terms_used: 1,
            tail_estimate: 0.0,
            observed_ratio: 0.0,
            converged: true,
        });
    }

    let mut sum = Complex64::new(0.0, 0.0);
    let mut quiet = 0;
    let mut used = 0;
    let mut last = Complex64::new(0.0, 0.0);
    let mut ratio = 0.0;
    let mut converged = false;
    'outer: while used < cap {
        let hi = (used + BATCH).min(cap);
        let terms: Vec<Complex64> = (used..hi).into_par_iter().map(term).collect::<Result<_>>()?;
        for t in terms {
            sum += t;
            if used > 0 && last.norm() > 0.0 {
                ratio = t.norm() / last.norm();
            }
            last = t;
            used += 1;
            if !sum.re.is_finite() || !sum.im.is_finite() {
                return Err(Error::Overflow);
            }
            if t.norm() < tol * sum.norm() {
                quiet += 1;
                if quiet >= QUIET_TERMS {
                    converged = ratio < 1.0;
                    break 'outer;
                }
            } else {
                quiet = 0;
            }
        }
    }
    let tail_estimate = if ratio < 1.0 {
        last.norm() * ratio / (1.0 - ratio)
    } else {
        f64::INFINITY
    };
    Ok(FrcReport {
        value: sum,
        terms_used: used,
        tail_estimate,
        observed_ratio: ratio,
        converged,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestrictionReport {
    pub residual: f64,
    /// False when the reference kernel vanished and `residual` is absolute.
    pub relative: bool,
}

/// `|K_Ω((z,0),(z',0)) − (m!/πᵐ) K_{D,p^m}(z,z')|`, relative to the reference
/// kernel. `kernel_omega` takes full points of `ℂⁿ⁺ᵐ`.
pub fn frc_restriction_check(
    h: &HartogsDomain,
    z: &[Complex64],
    w: &[Complex64],
    kernel_omega: &dyn Fn(&[Complex64], &[Complex64]) -> Result<Complex64>,
    reference: &KernelModel,
) -> Result<RestrictionReport> {
    let m = h.fiber_dim;
    let lift = |p: &[Complex64]| -> Vec<Complex64> {
        p.iter().copied().chain(std::iter::repeat(Complex64::new(0.0, 0.0)).take(m)).collect()
    };
    let omega = kernel_omega(&lift(z), &lift(w))?;
    let fact: f64 = (1..=m).map(|k| k as f64).product();
    let base = kernel_eval(reference, z, w)? * (fact * PI.powi(-(m as i32)));
    let diff = (omega - base).norm();
    if base.norm() > 0.0 {
        Ok(RestrictionReport {
            residual: diff / base.norm(),
            relative: true,
        })
    } else {
        Ok(RestrictionReport {
            residual: diff,
            relative: false,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::generic_norm_pow;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Bergman kernel of the unit ball in ℂ²: `2/π² (1 − ⟨Z,W⟩)^{−3}`.
    fn ball2_kernel(zz: &[Complex64], ww: &[Complex64]) -> Complex64 {
        let b = DomainSpec::UnitBall { n: 2 };
        generic_norm_pow(&b, zz, ww, -3.0).unwrap() * (2.0 / (PI * PI))
    }

    fn frc_disk() -> (HartogsDomain, ClosedFormFamily) {
        let h = HartogsDomain::cartan_hartogs(DomainSpec::UnitDisk, 1, 1.0).unwrap();
        let f = ClosedFormFamily::new(h.weight.clone()).unwrap();
        (h, f)
    }

    #[test]
    fn contains_examples() {
        let h = HartogsDomain::fbh(1, 1, 1.0).unwrap();
        assert_eq!(hartogs_contains(&h, &[c(0.0, 0.0)], &[c(0.0, 0.0)]).unwrap(), -1.0);
        let e = (-1.0f64).exp();
        assert!(hartogs_contains(&h, &[c(1.0, 0.0)], &[c(e.sqrt(), 0.0)]).unwrap().abs() < 1e-16);

        let t1 = HartogsDomain::thullen(1.0).unwrap();
        assert!(hartogs_contains(&t1, &[c(0.6, 0.0)], &[c(0.8, 0.0)]).unwrap().abs() < 1e-15);
        let t2 = HartogsDomain::thullen(2.0).unwrap();
        let v = hartogs_contains(&t2, &[c(0.6, 0.0)], &[c(0.64f64.sqrt(), 0.0)]).unwrap();
        assert!((v - (0.64 - 0.4096)).abs() < 1e-15);
        assert!(hartogs_contains(&t1, &[c(1.2, 0.0)], &[c(0.0, 0.0)]).is_err());
    }

    #[test]
    fn pochhammer_examples() {
        assert_eq!(pochhammer(0, 1).unwrap(), 1);
        assert_eq!(pochhammer(0, 2).unwrap(), 2);
        assert_eq!(pochhammer(2, 3).unwrap(), 60);
        assert!(pochhammer(u64::MAX, 3).is_err());
    }

    #[test]
    fn frc_reproduces_ball_kernel() {
        let (h, f) = frc_disk();
        let r = frc_eval(&h, &[c(0.0, 0.0), c(0.0, 0.0)], &[c(0.0, 0.0), c(0.0, 0.0)], &f, MAX_TERMS, 1e-14).unwrap();
        assert!((r.value.re - 2.0 / (PI * PI)).abs() < 1e-16);
        assert_eq!(r.terms_used, 1);

        let zz = [c(0.2, 0.0), c(0.3, 0.0)];
        let ww = [c(0.1, 0.0), c(0.2, 0.0)];
        let r = frc_eval(&h, &zz, &ww, &f, MAX_TERMS, 1e-14).unwrap();
        let want = ball2_kernel(&zz, &ww);
        assert!(r.converged);
        assert!((r.value - want).norm() <= 1e-8 * want.norm());
    }

    #[test]
    fn frc_with_zero_fiber_collapses_to_first_term() {
        for h in [
            HartogsDomain::fbh(2, 2, 0.7).unwrap(),
            HartogsDomain::cartan_hartogs(DomainSpec::UnitBall { n: 2 }, 3, 1.5).unwrap(),
        ] {
            let f = ClosedFormFamily::new(h.weight.clone()).unwrap();
            let m = h.fiber_dim;
            let mut p = vec![c(0.3, -0.2), c(0.1, 0.4)];
            let mut q = vec![c(0.3, 0.1), c(0.0, 0.0)];
            p.extend(std::iter::repeat(c(0.05, 0.0)).take(m));
            q.extend(std::iter::repeat(c(0.0, 0.0)).take(m));
            let r = frc_eval(&h, &p, &q, &f, MAX_TERMS, 1e-14).unwrap();
            let fact: f64 = (1..=m).map(|k| k as f64).product();
            let k = kernel_eval(&f.kernel(m as u32).unwrap(), &p[..2], &q[..2]).unwrap();
            assert!((r.value - k * fact / PI.powi(m as i32)).norm() <= 1e-15 * r.value.norm());
        }
    }

    #[test]
    fn restriction_examples() {
        let (h, f) = frc_disk();
        let omega = |a: &[Complex64], b: &[Complex64]| Ok(frc_eval(&h, a, b, &f, MAX_TERMS, 1e-14)?.value);
        let reference = f.kernel(1).unwrap();
        let r = frc_restriction_check(&h, &[c(0.0, 0.0)], &[c(0.0, 0.0)], &omega, &reference).unwrap();
        assert!(r.residual <= 1e-14 && r.relative);

        let fbh = HartogsDomain::fbh(1, 1, 1.0).unwrap();
        let closed = ClosedFormFamily::new(fbh.weight.clone()).unwrap();
        let series = GramFamily::new(fbh.weight.clone(), 30, None);
        let omega = |a: &[Complex64], b: &[Complex64]| Ok(frc_eval(&fbh, a, b, &closed, MAX_TERMS, 1e-14)?.value);
        let z = [c(0.3, 0.0)];
        let r = frc_restriction_check(&fbh, &z, &z, &omega, &series.kernel(1).unwrap()).unwrap();
        assert!(r.residual <= 1e-10, "{}", r.residual);

        let h2 = HartogsDomain::cartan_hartogs(DomainSpec::UnitDisk, 2, 1.0).unwrap();
        let closed = ClosedFormFamily::new(h2.weight.clone()).unwrap();
        let series = GramFamily::new(h2.weight.clone(), 30, Some(QuadratureScheme::default()));
        let omega = |a: &[Complex64], b: &[Complex64]| Ok(frc_eval(&h2, a, b, &closed, MAX_TERMS, 1e-14)?.value);
        let r = frc_restriction_check(&h2, &[c(0.2, 0.0)], &[c(0.1, 0.0)], &omega, &series.kernel(2).unwrap()).unwrap();
        assert!(r.residual <= 1e-8, "{}", r.residual);
    }

    #[test]
    fn gram_family_matches_closed_family_and_caches() {
        let h = HartogsDomain::fbh(1, 1, 1.0).unwrap();
        let closed = ClosedFormFamily::new(h.weight.clone()).unwrap();
        let series = GramFamily::new(h.weight.clone(), 30, None);
        let p = [c(0.3, 0.2), c(0.2, 0.1)];
        let q = [c(-0.1, 0.25), c(0.1, -0.3)];
        let a = frc_eval(&h, &p, &q, &closed, MAX_TERMS, 1e-14).unwrap();
        let b = frc_eval(&h, &p, &q, &series, MAX_TERMS, 1e-14).unwrap();
        assert!((a.value - b.value).norm() <= 1e-10 * a.value.norm());
        let k1 = series.kernel(3).unwrap();
        let k2 = series.kernel(3).unwrap();
        assert!(Arc::ptr_eq(&k1, &k2));
    }

    #[test]
    fn frc_flags_non_convergence_at_cap() {
        let (h, f) = frc_disk();
        let p = [c(0.0, 0.0), c(0.99, 0.0)];
        let r = frc_eval(&h, &p, &p, &f, 10, 1e-14).unwrap();
        assert!(!r.converged && r.terms_used == 10);
    }

    fn hartogs_pair(rho: f64) -> impl Strategy<Value = (Vec<Complex64>, Vec<Complex64>)> {
        let coord = (0.0f64..0.95, 0.0f64..(2.0 * PI));
        (coord.clone(), coord, 0.0f64..1.0, 0.0f64..(2.0 * PI), 0.0f64..1.0, 0.0f64..(2.0 * PI)).prop_map(
            move |((r1, t1), (r2, t2), s1, a1, s2, a2)| {
                let z = Complex64::from_polar(r1, t1);
                let w = Complex64::from_polar(r2, t2);
                // |ζ|² ≤ ρ p(z) on both sides keeps |ζ ζ'| ≤ ρ √(p(z) p(w))
                let zeta = Complex64::from_polar((rho * s1 * (1.0 - r1 * r1)).sqrt(), a1);
                let omega = Complex64::from_polar((rho * s2 * (1.0 - r2 * r2)).sqrt(), a2);
                (vec![z, zeta], vec![w, omega])
            },
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn frc_matches_ball_kernel_and_converges_geometrically((p, q) in hartogs_pair(0.6)) {
            let (h, f) = frc_disk();
            let r = frc_eval(&h, &p, &q, &f, MAX_TERMS, 1e-14).unwrap();
            let want = ball2_kernel(&p, &q);
            prop_assert!((r.value - want).norm() <= 1e-8 * want.norm());
            prop_assert!(r.converged);
            prop_assert!(r.observed_ratio <= 0.6 + 0.1);
        }

        #[test]
        fn contains_is_increasing_in_fiber_norm(z in 0.0f64..0.9, a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let h = HartogsDomain::thullen(1.5).unwrap();
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let f = |s: f64| hartogs_contains(&h, &[c(z, 0.0)], &[c(s, 0.0)]).unwrap();
            prop_assert!(f(lo) <= f(hi));
            if lo < hi {
                prop_assert!(f(lo) < f(hi));
            }
        }
    }

    #[test]
    fn restriction_identity_over_supported_pairs() {
        let mut state = 0x2545f4914f6cdd1du64;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for m in 1..=3usize {
            for h in [
                HartogsDomain::cartan_hartogs(DomainSpec::UnitDisk, m, 1.0).unwrap(),
                HartogsDomain::cartan_hartogs(DomainSpec::UnitDisk, m, 2.0).unwrap(),
                HartogsDomain::fbh(1, m, 1.0).unwrap(),
            ] {
                let closed = ClosedFormFamily::new(h.weight.clone()).unwrap();
                let series = GramFamily::new(h.weight.clone(), 30, Some(QuadratureScheme::default()));
                let reference = series.kernel(m as u32).unwrap();
                let omega = |a: &[Complex64], b: &[Complex64]| Ok(frc_eval(&h, a, b, &closed, MAX_TERMS, 1e-14)?.value);
                for _ in 0..50 {
                    let radius = if h.base.is_bounded() { 0.5 } else { 1.0 };
                    let z = [Complex64::from_polar(radius * next(), 2.0 * PI * next())];
                    let w = [Complex64::from_polar(radius * next(), 2.0 * PI * next())];
                    let r = frc_restriction_check(&h, &z, &w, &omega, &reference).unwrap();
                    assert!(r.residual <= 1e-8, "m={m} {h:?}: {}", r.residual);
                }
            }
        }
    }
}
