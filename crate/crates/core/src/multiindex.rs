// SPDX-License-Identifier: Apache-2.0

//! Multi-indices in graded lexicographic order and the monomial basis they
//! index.

use std::cmp::Ordering;
use std::collections::HashMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exponent vector of a monomial `z^α`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Self {
        MultiIndex(exponents)
    }

    pub fn zero(n: usize) -> Self {
        MultiIndex(vec![0; n])
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    /// `α! = Π αⱼ!` as a float.
    pub fn factorial(&self) -> f64 {
        self.0
            .iter()
            .map(|&a| (1..=a).map(f64::from).product::<f64>())
            .product()
    }

    /// Evaluates `z^α` directly. Prefer [`MonomialBasis::eval`] for whole bases.
    pub fn monomial(&self, z: &[Complex64]) -> Complex64 {
        self.0
            .iter()
            .zip(z)
            .map(|(&a, &zj)| zj.powu(a))
            .product()
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        // Within a grade the first variable dominates: (1,0) precedes (0,1).
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// All multi-indices of length `n` and degree at most `d`, graded
/// lexicographic. The count is `C(n + d, n)`.
pub fn multiindex_enumerate(n: usize, d: u32) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    let mut buf = vec![0u32; n];
    for grade in 0..=d {
        push_grade(&mut buf, 0, grade, &mut out);
    }
    out
}

fn push_grade(buf: &mut [u32], pos: usize, remaining: u32, out: &mut Vec<MultiIndex>) {
    if pos + 1 == buf.len() {
        buf[pos] = remaining;
        out.push(MultiIndex(buf.to_vec()));
        return;
    }
    if buf.is_empty() {
        return;
    }
    for first in (0..=remaining).rev() {
        buf[pos] = first;
        push_grade(buf, pos + 1, remaining - first, out);
    }
}

/// Binomial coefficient `C(n, k)` with overflow detection.
pub fn binomial(n: u64, k: u64) -> Result<u64> {
    if k > n {
        return Ok(0);
    }
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = acc
            .checked_mul(n - i)
            .ok_or(Error::Overflow)?
            / (i + 1);
    }
    Ok(acc)
}

/// Monomial basis up to a degree cap, with a parent table so the whole basis
/// evaluates with one multiplication per entry.
#[derive(Debug, Clone)]
pub struct MonomialBasis {
    n: usize,
    degree: u32,
    indices: Vec<MultiIndex>,
    // (parent position, variable) with index = parent + e_variable
    parent: Vec<Option<(usize, usize)>>,
    lookup: HashMap<MultiIndex, usize>,
}

impl MonomialBasis {
    pub fn new(n: usize, degree: u32) -> Self {
        let indices = multiindex_enumerate(n, degree);
        let lookup: HashMap<MultiIndex, usize> = indices
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, a)| (a, i))
            .collect();
        let parent = indices
            .iter()
            .map(|a| {
                let j = a.0.iter().position(|&e| e > 0)?;
                let mut p = a.0.clone();
                p[j] -= 1;
                Some((lookup[&MultiIndex(p)], j))
            })
            .collect();
        MonomialBasis {
            n,
            degree,
            indices,
            parent,
            lookup,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn position(&self, alpha: &MultiIndex) -> Option<usize> {
        self.lookup.get(alpha).copied()
    }

    /// Values `z^α` for every basis element, in basis order.
    pub fn eval(&self, z: &[Complex64]) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.indices.len());
        for link in &self.parent {
            let v = match *link {
                None => Complex64::new(1.0, 0.0),
                Some((p, j)) => out[p] * z[j],
            };
            out.push(v);
        }
        out
    }
}
