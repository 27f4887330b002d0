// SPDX-License-Identifier: Apache-2.0

pub mod automorphisms;
pub mod domain;
pub mod error;
pub mod hartogs;
pub mod json;
pub mod kernels;
pub mod linalg;
pub mod moments;
pub mod multiindex;
pub mod quadrature;
pub mod uniqueness;
pub mod weight;
