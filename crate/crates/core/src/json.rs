// SPDX-License-Identifier: Apache-2.0

//! Serde helpers: complex numbers as `[re, im]`, matrices as row-major
//! nested arrays, and canonical (sorted-key) JSON output.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub fn to_pair(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

pub fn from_pair(p: [f64; 2]) -> Complex64 {
    Complex64::new(p[0], p[1])
}

/// Serializes any value as JSON with object keys in sorted order.
pub fn to_canonical_string<T: Serialize>(value: &T) -> serde_json::Result<String> {
    // serde_json::Map is a BTreeMap without `preserve_order`, so a round trip
    // through Value sorts every object's keys.
    let v = serde_json::to_value(value)?;
    serde_json::to_string_pretty(&v)
}

pub mod complex {
    use super::*;

    pub fn serialize<S: Serializer>(z: &Complex64, s: S) -> Result<S::Ok, S::Error> {
        to_pair(*z).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Complex64, D::Error> {
        <[f64; 2]>::deserialize(d).map(from_pair)
    }
}

pub mod complex_vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[Complex64], s: S) -> Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = v.iter().copied().map(to_pair).collect();
        pairs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Complex64>, D::Error> {
        Vec::<[f64; 2]>::deserialize(d).map(|v| v.into_iter().map(from_pair).collect())
    }
}

pub mod complex_matrix {
    use super::*;

    pub fn serialize<S: Serializer>(m: &DMatrix<Complex64>, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> = (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| to_pair(m[(i, j)])).collect())
            .collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<Complex64>, D::Error> {
        let rows = Vec::<Vec<[f64; 2]>>::deserialize(d)?;
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(serde::de::Error::custom("ragged matrix rows"));
        }
        Ok(DMatrix::from_fn(nrows, ncols, |i, j| from_pair(rows[i][j])))
    }
}

pub mod option_complex_matrix {
    use super::*;

    pub fn serialize<S: Serializer>(m: &Option<DMatrix<Complex64>>, s: S) -> Result<S::Ok, S::Error> {
        match m {
            Some(m) => super::complex_matrix::serialize(m, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> Result<Option<DMatrix<Complex64>>, D::Error> {
        #[derive(Deserialize)]
        struct Wrap(#[serde(with = "super::complex_matrix")] DMatrix<Complex64>);
        Ok(Option::<Wrap>::deserialize(d)?.map(|w| w.0))
    }
}

pub mod option_complex_vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &Option<Vec<Complex64>>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(v) => complex_vec::serialize(v, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vec<Complex64>>, D::Error> {
        let v: Option<Vec<[f64; 2]>> = Option::deserialize(d)?;
        Ok(v.map(|v| v.into_iter().map(from_pair).collect()))
    }
}

/// Parses a point list: an array of points, each an array of `[re, im]`
/// pairs, or a flat array of pairs for one-variable points.
pub fn parse_points(text: &str) -> serde_json::Result<Vec<Vec<Complex64>>> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Points {
        Nested(Vec<Vec<[f64; 2]>>),
        Flat(Vec<[f64; 2]>),
    }
    Ok(match serde_json::from_str(text)? {
        Points::Nested(raw) => raw
            .into_iter()
            .map(|p| p.into_iter().map(from_pair).collect())
            .collect(),
        Points::Flat(raw) => raw.into_iter().map(|p| vec![from_pair(p)]).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn points_accept_nested_and_flat_lists() {
        let nested = parse_points("[[[0.1, 0.2], [0.0, -1.0]]]").unwrap();
        assert_eq!(nested, vec![vec![Complex64::new(0.1, 0.2), Complex64::new(0.0, -1.0)]]);
        let flat = parse_points("[[0.1, 0.2], [0.3, 0.0]]").unwrap();
        assert_eq!(flat, vec![vec![Complex64::new(0.1, 0.2)], vec![Complex64::new(0.3, 0.0)]]);
        assert!(parse_points("[[0.1]]").is_err());
    }
}
