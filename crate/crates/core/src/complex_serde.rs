//! Complex numbers in config files: a bare real number or `[re, im]`.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum Repr {
    Real(f64),
    Pair([f64; 2]),
}

pub fn serialize<S: Serializer>(z: &C64, s: S) -> Result<S::Ok, S::Error> {
    repr(z).serialize(s)
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<C64, D::Error> {
    Ok(match Repr::deserialize(d)? {
        Repr::Real(re) => C64::new(re, 0.0),
        Repr::Pair([re, im]) => C64::new(re, im),
    })
}

fn repr(z: &C64) -> Repr {
    if z.im == 0.0 {
        Repr::Real(z.re)
    } else {
        Repr::Pair([z.re, z.im])
    }
}

/// Same encoding for `Option<C64>`, with `None` as null.
pub mod option {
    use super::*;

    pub fn serialize<S: Serializer>(z: &Option<C64>, s: S) -> Result<S::Ok, S::Error> {
        z.as_ref().map(repr).serialize(s)
    }
}
