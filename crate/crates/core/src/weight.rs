// SPDX-License-Identifier: Apache-2.0

//! Weights of integration on the base domains.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::domain::{contains, generic_norm, norm_sqr, DomainSpec};
use crate::error::{Error, Result};

/// A radial profile tabulated against `t = ‖z‖²`, interpolated by a
/// monotone (Fritsch-Carlson) cubic Hermite spline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawProfile", into = "RawProfile")]
pub struct RadialProfile {
    t: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawProfile {
    t: Vec<f64>,
    values: Vec<f64>,
}

impl TryFrom<RawProfile> for RadialProfile {
    type Error = Error;
    fn try_from(raw: RawProfile) -> Result<Self> {
        RadialProfile::new(raw.t, raw.values)
    }
}

impl From<RadialProfile> for RawProfile {
    fn from(p: RadialProfile) -> Self {
        RawProfile {
            t: p.t,
            values: p.values,
        }
    }
}

#[derive(Deserialize)]
struct CsvRow {
    t: f64,
    value: f64,
}

impl RadialProfile {
    pub fn new(t: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if t.len() != values.len() || t.len() < 2 {
            return Err(Error::InvalidWeight(
                "profile needs at least two (t, value) pairs".into(),
            ));
        }
        if t.iter().chain(&values).any(|x| !x.is_finite()) {
            return Err(Error::InvalidWeight("non-finite profile entry".into()));
        }
        if t.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidWeight("profile t values must be strictly increasing".into()));
        }
        if t[0] > 0.0 {
            return Err(Error::InvalidWeight("profile must start at t = 0".into()));
        }
        if values.iter().any(|&v| v <= 0.0) {
            return Err(Error::InvalidWeight("profile values must be positive".into()));
        }
        let slopes = fritsch_carlson_slopes(&t, &values);
        Ok(RadialProfile { t, values, slopes })
    }

    /// Reads a CSV table with header `t,value`.
    pub fn from_csv_reader<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.len() != 2 || &headers[0] != "t" || &headers[1] != "value" {
            return Err(Error::InvalidWeight(format!(
                "profile CSV header must be `t,value`, found `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut t = Vec::new();
        let mut values = Vec::new();
        for row in rdr.deserialize() {
            let row: CsvRow = row?;
            t.push(row.t);
            values.push(row.value);
        }
        RadialProfile::new(t, values)
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        RadialProfile::from_csv_reader(file)
    }

    pub fn t_max(&self) -> f64 {
        *self.t.last().expect("profile is non-empty")
    }

    /// Exponential decay rate used beyond the last node on unbounded domains,
    /// taken from the last two table entries.
    pub fn tail_rate(&self) -> f64 {
        let n = self.t.len();
        -(self.values[n - 1] / self.values[n - 2]).ln() / (self.t[n - 1] - self.t[n - 2])
    }

    /// Interpolated value at `t`; beyond the table the profile continues with
    /// the log-linear tail of its last two entries.
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.t.len();
        if t >= self.t[n - 1] {
            return self.values[n - 1] * (-self.tail_rate() * (t - self.t[n - 1])).exp();
        }
        let t = t.max(self.t[0]);
        let k = match self.t.partition_point(|&x| x <= t) {
            0 => 0,
            i => i - 1,
        };
        let h = self.t[k + 1] - self.t[k];
        let s = (t - self.t[k]) / h;
        let (h00, h10, h01, h11) = (
            (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s),
            s * (1.0 - s) * (1.0 - s),
            s * s * (3.0 - 2.0 * s),
            s * s * (s - 1.0),
        );
        h00 * self.values[k]
            + h10 * h * self.slopes[k]
            + h01 * self.values[k + 1]
            + h11 * h * self.slopes[k + 1]
    }
}

fn fritsch_carlson_slopes(t: &[f64], v: &[f64]) -> Vec<f64> {
    let n = t.len();
    let delta: Vec<f64> = (0..n - 1).map(|k| (v[k + 1] - v[k]) / (t[k + 1] - t[k])).collect();
    let mut m = vec![0.0; n];
    m[0] = delta[0];
    m[n - 1] = delta[n - 2];
    for k in 1..n - 1 {
        m[k] = if delta[k - 1] * delta[k] <= 0.0 {
            0.0
        } else {
            (delta[k - 1] + delta[k]) / 2.0
        };
    }
    for k in 0..n - 1 {
        if delta[k] == 0.0 {
            m[k] = 0.0;
            m[k + 1] = 0.0;
            continue;
        }
        let a = m[k] / delta[k];
        let b = m[k + 1] / delta[k];
        let r = a * a + b * b;
        if r > 9.0 {
            let tau = 3.0 / r.sqrt();
            m[k] = tau * a * delta[k];
            m[k + 1] = tau * b * delta[k];
        }
    }
    m
}

/// Functional form of a weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum WeightForm {
    /// `exp(−μ‖z‖²)`
    GaussianPower { mu: f64 },
    /// `N(z, z)^μ`
    GenericNormPower { mu: f64 },
    /// Tabulated profile in `t = ‖z‖²`.
    RadialProfile { profile: RadialProfile },
    /// `Σ cᵢ tⁱ` with `t = ‖z‖²`.
    PolynomialRadial { coefficients: Vec<f64> },
    /// `c · inner`
    Scaled { c: f64, inner: Box<WeightForm> },
    /// Pointwise product of factors.
    Product { factors: Vec<WeightForm> },
}

/// Closed-form radial weight `scale · e^{−λt} · (1−t)^s · Σ cᵢ tⁱ`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialClosedForm {
    pub scale: f64,
    pub gauss_rate: f64,
    pub norm_power: f64,
    pub poly: Vec<f64>,
}

impl RadialClosedForm {
    fn unit() -> Self {
        RadialClosedForm {
            scale: 1.0,
            gauss_rate: 0.0,
            norm_power: 0.0,
            poly: vec![1.0],
        }
    }

    fn mul(mut self, other: RadialClosedForm) -> Self {
        self.scale *= other.scale;
        self.gauss_rate += other.gauss_rate;
        self.norm_power += other.norm_power;
        self.poly = poly_mul(&self.poly, &other.poly);
        self
    }

    fn powu(&self, m: u32) -> Self {
        (0..m).fold(RadialClosedForm::unit(), |acc, _| acc.mul(self.clone()))
    }

    /// True when the polynomial part is a constant.
    pub fn is_monomial_free(&self) -> bool {
        self.poly.iter().skip(1).all(|&c| c == 0.0)
    }
}

pub(crate) fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

pub(crate) fn poly_eval(c: &[f64], t: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, x| acc * t + x)
}

impl WeightForm {
    fn validate(&self, base: &DomainSpec) -> Result<()> {
        match self {
            WeightForm::GaussianPower { mu } => {
                if !(*mu > 0.0 && mu.is_finite()) {
                    return Err(Error::InvalidWeight(format!("Gaussian rate must be positive, got {mu}")));
                }
            }
            WeightForm::GenericNormPower { mu } => {
                if !(*mu > 0.0 && mu.is_finite()) {
                    return Err(Error::InvalidWeight(format!("norm power must be positive, got {mu}")));
                }
                if !base.is_bounded() {
                    return Err(Error::InvalidWeight("generic norm power on the full space".into()));
                }
            }
            WeightForm::RadialProfile { profile } => {
                if !base.is_radial_model() {
                    return Err(Error::InvalidWeight("radial profile on a matrix ball".into()));
                }
                if base.is_bounded() && profile.t_max() < 1.0 {
                    return Err(Error::InvalidWeight("profile must cover t ∈ [0, 1]".into()));
                }
                if !base.is_bounded() && !(profile.tail_rate() > 0.0) {
                    return Err(Error::InvalidWeight(
                        "profile on the full space must decay at its tail".into(),
                    ));
                }
            }
            WeightForm::PolynomialRadial { coefficients } => {
                if coefficients.is_empty() || coefficients.iter().any(|c| !c.is_finite()) {
                    return Err(Error::InvalidWeight("polynomial needs finite coefficients".into()));
                }
                if !base.is_radial_model() {
                    return Err(Error::InvalidWeight("radial polynomial on a matrix ball".into()));
                }
            }
            WeightForm::Scaled { c, inner } => {
                if !(*c > 0.0 && c.is_finite()) {
                    return Err(Error::InvalidWeight(format!("scale must be positive, got {c}")));
                }
                inner.validate(base)?;
            }
            WeightForm::Product { factors } => {
                if factors.is_empty() {
                    return Err(Error::InvalidWeight("empty product".into()));
                }
                for f in factors {
                    f.validate(base)?;
                }
            }
        }
        Ok(())
    }

    fn eval(&self, base: &DomainSpec, z: &[Complex64]) -> Result<f64> {
        let t = norm_sqr(z);
        Ok(match self {
            WeightForm::GaussianPower { mu } => (-mu * t).exp(),
            WeightForm::GenericNormPower { mu } => generic_norm(base, z, z)?.re.powf(*mu),
            WeightForm::RadialProfile { profile } => profile.eval(t),
            WeightForm::PolynomialRadial { coefficients } => poly_eval(coefficients, t),
            WeightForm::Scaled { c, inner } => c * inner.eval(base, z)?,
            WeightForm::Product { factors } => {
                let mut acc = 1.0;
                for f in factors {
                    acc *= f.eval(base, z)?;
                }
                acc
            }
        })
    }

    fn radial_eval(&self, t: f64) -> f64 {
        match self {
            WeightForm::GaussianPower { mu } => (-mu * t).exp(),
            WeightForm::GenericNormPower { mu } => (1.0 - t).powf(*mu),
            WeightForm::RadialProfile { profile } => profile.eval(t),
            WeightForm::PolynomialRadial { coefficients } => poly_eval(coefficients, t),
            WeightForm::Scaled { c, inner } => c * inner.radial_eval(t),
            WeightForm::Product { factors } => factors.iter().map(|f| f.radial_eval(t)).product(),
        }
    }

    fn closed_form(&self) -> Option<RadialClosedForm> {
        let mut cf = RadialClosedForm::unit();
        match self {
            WeightForm::GaussianPower { mu } => cf.gauss_rate = *mu,
            WeightForm::GenericNormPower { mu } => cf.norm_power = *mu,
            WeightForm::RadialProfile { .. } => return None,
            WeightForm::PolynomialRadial { coefficients } => cf.poly = coefficients.clone(),
            WeightForm::Scaled { c, inner } => {
                cf = inner.closed_form()?;
                cf.scale *= c;
            }
            WeightForm::Product { factors } => {
                for f in factors {
                    cf = cf.mul(f.closed_form()?);
                }
            }
        }
        Some(cf)
    }

    fn decay_rate(&self) -> f64 {
        match self {
            WeightForm::GaussianPower { mu } => *mu,
            WeightForm::RadialProfile { profile } => profile.tail_rate().max(0.0),
            WeightForm::Scaled { inner, .. } => inner.decay_rate(),
            WeightForm::Product { factors } => factors.iter().map(WeightForm::decay_rate).sum(),
            WeightForm::GenericNormPower { .. } | WeightForm::PolynomialRadial { .. } => 0.0,
        }
    }

    fn norm_power(&self) -> f64 {
        match self {
            WeightForm::GenericNormPower { mu } => *mu,
            WeightForm::Scaled { inner, .. } => inner.norm_power(),
            WeightForm::Product { factors } => factors.iter().map(WeightForm::norm_power).sum(),
            _ => 0.0,
        }
    }

    fn poly_degree(&self) -> usize {
        match self {
            WeightForm::PolynomialRadial { coefficients } => coefficients.len().saturating_sub(1),
            WeightForm::Scaled { inner, .. } => inner.poly_degree(),
            WeightForm::Product { factors } => factors.iter().map(WeightForm::poly_degree).sum(),
            _ => 0,
        }
    }
}

/// A weight `p` on a base domain. `power` is the exponent `m` applied to the
/// form, so `p^m` is again a `Weight`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Weight {
    pub base: DomainSpec,
    pub form: WeightForm,
    #[serde(default = "one")]
    pub power: u32,
}

fn one() -> u32 {
    1
}

impl Weight {
    pub fn new(base: DomainSpec, form: WeightForm) -> Result<Self> {
        let w = Weight { base, form, power: 1 };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.power == 0 {
            return Err(Error::InvalidWeight("power exponent must be positive".into()));
        }
        self.form.validate(&self.base)
    }

    pub fn gaussian(n: usize, mu: f64) -> Result<Self> {
        Weight::new(DomainSpec::FullSpace { n }, WeightForm::GaussianPower { mu })
    }

    pub fn generic_norm_power(base: DomainSpec, mu: f64) -> Result<Self> {
        Weight::new(base, WeightForm::GenericNormPower { mu })
    }

    pub fn polynomial(base: DomainSpec, coefficients: Vec<f64>) -> Result<Self> {
        Weight::new(base, WeightForm::PolynomialRadial { coefficients })
    }

    pub fn constant(base: DomainSpec) -> Result<Self> {
        Weight::polynomial(base, vec![1.0])
    }

    /// `p^m` (powers compose multiplicatively).
    pub fn pow(&self, m: u32) -> Self {
        Weight {
            power: self.power * m,
            ..self.clone()
        }
    }

    /// `c · p`. The scale sits inside the power, so `(c·p)^m = c^m p^m`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        let w = Weight {
            base: self.base,
            form: WeightForm::Scaled {
                c: c.powf(1.0 / f64::from(self.power)),
                inner: Box::new(self.form.clone()),
            },
            power: self.power,
        };
        w.validate()?;
        Ok(w)
    }

    /// `p · q` for weights on the same base with unit power.
    pub fn times(&self, other: &Weight) -> Result<Self> {
        if self.base != other.base {
            return Err(Error::InvalidWeight("product of weights on different bases".into()));
        }
        let expand = |w: &Weight| -> WeightForm {
            if w.power == 1 {
                w.form.clone()
            } else {
                WeightForm::Product {
                    factors: vec![w.form.clone(); w.power as usize],
                }
            }
        };
        Weight::new(
            self.base,
            WeightForm::Product {
                factors: vec![expand(self), expand(other)],
            },
        )
    }

    /// Radial value `p(t)` for `t = ‖z‖²` (disk, ball, full space only).
    pub fn radial_eval(&self, t: f64) -> f64 {
        self.form.radial_eval(t).powi(self.power as i32)
    }

    /// Closed radial form, if every factor has one.
    pub fn closed_form(&self) -> Option<RadialClosedForm> {
        if !self.base.is_radial_model() {
            return None;
        }
        Some(self.form.closed_form()?.powu(self.power))
    }

    /// Total Gaussian decay rate of `p^m` at infinity.
    pub fn decay_rate(&self) -> f64 {
        self.form.decay_rate() * f64::from(self.power)
    }

    /// Total exponent of `(1 − t)` factors in `p^m`.
    pub fn norm_power(&self) -> f64 {
        self.form.norm_power() * f64::from(self.power)
    }

    pub fn poly_degree(&self) -> usize {
        self.form.poly_degree() * self.power as usize
    }

    /// `c · e^{−λ‖z‖²}` on the full space, returned as `(c, λ)`.
    pub fn as_scaled_gaussian(&self) -> Option<(f64, f64)> {
        if self.base.is_bounded() {
            return None;
        }
        let cf = self.closed_form()?;
        (cf.norm_power == 0.0 && cf.is_monomial_free() && cf.gauss_rate > 0.0)
            .then(|| (cf.scale * cf.poly[0], cf.gauss_rate))
    }

    /// `c · N(z,z)^s` on a bounded symmetric base, returned as `(c, s)`.
    pub fn as_scaled_norm_power(&self) -> Option<(f64, f64)> {
        if !self.base.is_bounded() {
            return None;
        }
        let (c, s) = fold_norm_power(&self.form)?;
        let m = self.power;
        Some((c.powi(m as i32), s * f64::from(m)))
    }
}

fn fold_norm_power(form: &WeightForm) -> Option<(f64, f64)> {
    match form {
        WeightForm::GenericNormPower { mu } => Some((1.0, *mu)),
        WeightForm::PolynomialRadial { coefficients }
            if coefficients.iter().skip(1).all(|&c| c == 0.0) =>
        {
            Some((coefficients[0], 0.0))
        }
        WeightForm::Scaled { c, inner } => fold_norm_power(inner).map(|(k, s)| (k * c, s)),
        WeightForm::Product { factors } => factors.iter().try_fold((1.0, 0.0), |(k, s), f| {
            fold_norm_power(f).map(|(k2, s2)| (k * k2, s + s2))
        }),
        _ => None,
    }
}

/// Evaluates `p(z)` (or `p(z)^m`) at an interior point.
pub fn weight_eval(weight: &Weight, z: &[Complex64]) -> Result<f64> {
    let defect = contains(&weight.base, z)?;
    if defect >= 0.0 {
        return Err(Error::OutsideDomain { defect });
    }
    let v = weight.form.eval(&weight.base, z)?.powi(weight.power as i32);
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::NonPositiveWeight { value: v });
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn eval_examples() {
        let g = Weight::gaussian(1, 1.0).unwrap();
        assert_eq!(weight_eval(&g, &[c(0.0, 0.0)]).unwrap(), 1.0);
        let np = Weight::generic_norm_power(DomainSpec::UnitDisk, 2.0).unwrap();
        assert!((weight_eval(&np, &[c(0.5, 0.0)]).unwrap() - 0.5625).abs() < 1e-15);
        let g3 = Weight::gaussian(1, 2.0).unwrap().pow(3);
        let v = weight_eval(&g3, &[c(0.6, 0.8)]).unwrap();
        assert!((v - (-6.0f64).exp()).abs() < 1e-16);
        assert!((v - (-2.0f64).exp().powi(3)).abs() < 1e-16);
    }

    #[test]
    fn eval_rejects_outside_points() {
        let np = Weight::generic_norm_power(DomainSpec::UnitDisk, 1.0).unwrap();
        assert!(matches!(
            weight_eval(&np, &[c(1.0, 0.0)]),
            Err(Error::OutsideDomain { .. })
        ));
        let bad = Weight::polynomial(DomainSpec::UnitDisk, vec![1.0, -2.0]).unwrap();
        assert!(matches!(
            weight_eval(&bad, &[c(0.9, 0.0)]),
            Err(Error::NonPositiveWeight { .. })
        ));
    }

    #[test]
    fn invalid_weights() {
        assert!(Weight::gaussian(1, -1.0).is_err());
        assert!(Weight::generic_norm_power(DomainSpec::FullSpace { n: 1 }, 1.0).is_err());
        assert!(RadialProfile::new(vec![0.0, 0.5, 0.5], vec![1.0, 1.0, 1.0]).is_err());
        assert!(RadialProfile::new(vec![0.0, 0.5], vec![1.0, -1.0]).is_err());
        let short = RadialProfile::new(vec![0.0, 0.5], vec![1.0, 0.5]).unwrap();
        assert!(Weight::new(DomainSpec::UnitDisk, WeightForm::RadialProfile { profile: short }).is_err());
    }

    #[test]
    fn profile_interpolates_nodes_and_stays_monotone() {
        let t: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let v: Vec<f64> = t.iter().map(|x| (1.0 - 0.9 * x).powi(3)).collect();
        let p = RadialProfile::new(t.clone(), v.clone()).unwrap();
        for (x, y) in t.iter().zip(&v) {
            assert!((p.eval(*x) - y).abs() < 1e-15);
        }
        let mut prev = f64::INFINITY;
        for i in 0..=1000 {
            let y = p.eval(i as f64 / 1000.0);
            assert!(y <= prev + 1e-15);
            prev = y;
        }
        assert!((p.eval(0.55) - (1.0 - 0.9 * 0.55f64).powi(3)).abs() < 1e-3);
    }

    #[test]
    fn profile_from_csv() {
        let text = "t,value\n0,1\n0.5,0.6\n1.0,0.3\n";
        let p = RadialProfile::from_csv_reader(text.as_bytes()).unwrap();
        assert_eq!(p.eval(0.5), 0.6);
        assert!(RadialProfile::from_csv_reader("x,y\n0,1\n1,2\n".as_bytes()).is_err());
    }

    #[test]
    fn closed_form_folding() {
        let base = DomainSpec::UnitDisk;
        let w = Weight::generic_norm_power(base, 0.5).unwrap().pow(2).scaled(3.0).unwrap();
        let (k, s) = w.as_scaled_norm_power().unwrap();
        assert!((k - 3.0).abs() < 1e-14 && s == 1.0);
        let g = Weight::gaussian(1, 1.0).unwrap().scaled(0.7).unwrap();
        let (cc, lam) = g.as_scaled_gaussian().unwrap();
        assert!((cc - 0.7).abs() < 1e-15 && lam == 1.0);
        let pert = g.times(&Weight::polynomial(DomainSpec::FullSpace { n: 1 }, vec![1.0, 0.1]).unwrap()).unwrap();
        assert!(pert.as_scaled_gaussian().is_none());
        let cf = pert.closed_form().unwrap();
        assert_eq!(cf.poly, vec![1.0, 0.1]);
    }

    proptest! {
        #[test]
        fn power_exponent_is_a_pointwise_power(
            re in -0.6f64..0.6, im in -0.6f64..0.6, m in 1u32..5, mu in 0.1f64..3.0
        ) {
            let z = [c(re, im)];
            for w in [
                Weight::gaussian(1, mu).unwrap(),
                Weight::generic_norm_power(DomainSpec::UnitDisk, mu).unwrap(),
                Weight::polynomial(DomainSpec::UnitDisk, vec![1.0, 0.3, 0.2]).unwrap(),
            ] {
                let base = weight_eval(&w, &z).unwrap();
                let pm = weight_eval(&w.pow(m), &z).unwrap();
                prop_assert!((pm - base.powi(m as i32)).abs() <= 1e-14 * pm.max(1.0));
            }
        }
    }
}
