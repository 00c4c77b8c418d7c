//! Exact root and coroot data for the root systems A_J, B_J, C_J, D_J over
//! the countable index set J = {1, 2, …}.
//!
//! Roots are finite-support integer functionals ±ε_j, ±2ε_j, ±ε_j ± ε_k;
//! coroots are integer coordinate vectors.  Each kind carries its own ambient
//! norm convention on diagonal elements:
//!
//! * A — ‖x‖² = Σ xⱼ²,
//! * B, D — ‖x‖² = 2·Σ xⱼ²,
//! * C — ‖x‖² = Σ xⱼ².
//!
//! Everything here is exact rational arithmetic; square roots are taken only
//! at the reporting boundary.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::seq::{rat_to_f64, Rat};

/// The four families of root systems handled by this crate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RootSystemKind {
    A,
    B,
    C,
    D,
}

impl RootSystemKind {
    pub const ALL: [RootSystemKind; 4] = [
        RootSystemKind::A,
        RootSystemKind::B,
        RootSystemKind::C,
        RootSystemKind::D,
    ];
}

impl fmt::Display for RootSystemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RootSystemKind::A => "A",
            RootSystemKind::B => "B",
            RootSystemKind::C => "C",
            RootSystemKind::D => "D",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for RootSystemKind {
    type Err = RootError;

    fn from_str(s: &str) -> Result<Self, RootError> {
        match s {
            "A" | "a" => Ok(RootSystemKind::A),
            "B" | "b" => Ok(RootSystemKind::B),
            "C" | "c" => Ok(RootSystemKind::C),
            "D" | "d" => Ok(RootSystemKind::D),
            _ => Err(RootError::UnknownKind(s.to_string())),
        }
    }
}

/// Shape of a root; indices are 1-based and pair shapes keep j < k.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RootShape {
    /// sj·ε_j + sk·ε_k with sj·sk = −1.
    Diff { j: u64, k: u64, sj: i8, sk: i8 },
    /// sj·ε_j + sk·ε_k with sj·sk = +1.
    Sum { j: u64, k: u64, sj: i8, sk: i8 },
    /// s·ε_j.
    Eps { j: u64, s: i8 },
    /// s·2ε_j.
    TwoEps { j: u64, s: i8 },
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum RootError {
    #[error("unknown root-system kind {0:?}")]
    UnknownKind(String),
    #[error("root shape not legal for kind {kind}: {reason}")]
    IllegalShape { kind: RootSystemKind, reason: String },
    #[error("bad root data: {0}")]
    Malformed(String),
}

/// A root of one of the four kinds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Root {
    pub kind: RootSystemKind,
    pub shape: RootShape,
}

impl Root {
    pub fn new(kind: RootSystemKind, shape: RootShape) -> Result<Root, RootError> {
        let bad = |reason: &str| RootError::IllegalShape {
            kind,
            reason: reason.to_string(),
        };
        match shape {
            RootShape::Diff { j, k, sj, sk } | RootShape::Sum { j, k, sj, sk } => {
                if j == 0 || k == 0 {
                    return Err(RootError::Malformed("indices start at 1".into()));
                }
                if j >= k {
                    return Err(RootError::Malformed("pair shapes require j < k".into()));
                }
                if sj.abs() != 1 || sk.abs() != 1 {
                    return Err(RootError::Malformed("signs must be ±1".into()));
                }
                let product = i32::from(sj) * i32::from(sk);
                match shape {
                    RootShape::Diff { .. } if product != -1 => {
                        return Err(RootError::Malformed("diff shape needs opposite signs".into()))
                    }
                    RootShape::Sum { .. } if product != 1 => {
                        return Err(RootError::Malformed("sum shape needs equal signs".into()))
                    }
                    _ => {}
                }
                if matches!(shape, RootShape::Sum { .. }) && kind == RootSystemKind::A {
                    return Err(bad("ε_j+ε_k roots do not occur in kind A"));
                }
            }
            RootShape::Eps { j, s } => {
                if j == 0 {
                    return Err(RootError::Malformed("indices start at 1".into()));
                }
                if s.abs() != 1 {
                    return Err(RootError::Malformed("signs must be ±1".into()));
                }
                if kind != RootSystemKind::B {
                    return Err(bad("±ε_j roots occur only in kind B"));
                }
            }
            RootShape::TwoEps { j, s } => {
                if j == 0 {
                    return Err(RootError::Malformed("indices start at 1".into()));
                }
                if s.abs() != 1 {
                    return Err(RootError::Malformed("signs must be ±1".into()));
                }
                if kind != RootSystemKind::C {
                    return Err(bad("±2ε_j roots occur only in kind C"));
                }
            }
        }
        Ok(Root { kind, shape })
    }

    /// The nonzero coefficients of the functional: α = Σ aⱼ·εⱼ.
    pub fn coeffs(&self) -> Vec<(u64, i64)> {
        match self.shape {
            RootShape::Diff { j, k, sj, sk } | RootShape::Sum { j, k, sj, sk } => {
                vec![(j, i64::from(sj)), (k, i64::from(sk))]
            }
            RootShape::Eps { j, s } => vec![(j, i64::from(s))],
            RootShape::TwoEps { j, s } => vec![(j, 2 * i64::from(s))],
        }
    }

    /// −α, always a root of the same system.
    pub fn negated(&self) -> Root {
        let shape = match self.shape {
            RootShape::Diff { j, k, sj, sk } => RootShape::Diff {
                j,
                k,
                sj: -sj,
                sk: -sk,
            },
            RootShape::Sum { j, k, sj, sk } => RootShape::Sum {
                j,
                k,
                sj: -sj,
                sk: -sk,
            },
            RootShape::Eps { j, s } => RootShape::Eps { j, s: -s },
            RootShape::TwoEps { j, s } => RootShape::TwoEps { j, s: -s },
        };
        Root {
            kind: self.kind,
            shape,
        }
    }

    /// Pairing α(x) with a coweight; always a finite rational since roots
    /// have finite support.
    pub fn pair(&self, x: &CoWeight) -> Rat {
        self.coeffs()
            .into_iter()
            .map(|(j, a)| Rat::from_integer(a) * x.value(j))
            .sum()
    }
}

fn shape_order_key(shape: &RootShape) -> (u8, u64, u64, i8, i8) {
    match *shape {
        RootShape::Diff { j, k, sj, sk } => (0, j, k, -sj, -sk),
        RootShape::Sum { j, k, sj, sk } => (1, j, k, -sj, -sk),
        RootShape::Eps { j, s } => (2, j, 0, -s, 0),
        RootShape::TwoEps { j, s } => (3, j, 0, -s, 0),
    }
}

/// All roots supported in {1..N}, deduplicated, in a deterministic order
/// (shape class, then indices, then signs with + before −).
pub fn roots_in_window(kind: RootSystemKind, n: u64) -> Vec<Root> {
    assert!(n >= 2, "window must contain at least two indices");
    let mut out: Vec<Root> = vec![];
    for j in 1..=n {
        for k in (j + 1)..=n {
            for (sj, sk) in [(1i8, -1i8), (-1, 1)] {
                out.push(Root::new(kind, RootShape::Diff { j, k, sj, sk }).unwrap());
            }
            if kind != RootSystemKind::A {
                for (sj, sk) in [(1i8, 1i8), (-1, -1)] {
                    out.push(Root::new(kind, RootShape::Sum { j, k, sj, sk }).unwrap());
                }
            }
        }
        if kind == RootSystemKind::B {
            for s in [1i8, -1] {
                out.push(Root::new(kind, RootShape::Eps { j, s }).unwrap());
            }
        }
        if kind == RootSystemKind::C {
            for s in [1i8, -1] {
                out.push(Root::new(kind, RootShape::TwoEps { j, s }).unwrap());
            }
        }
    }
    out.sort_by_key(|r| shape_order_key(&r.shape));
    out
}

/// Finite-support rational vector over J with a constant tail; the diagonal
/// model for Cartan elements.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoWeight {
    pub entries: BTreeMap<u64, Rat>,
    pub tail: Rat,
}

/// Wire format: `{"entries":{"1":1.0,"2":-1.0},"tail":0.0}`.
#[derive(Serialize, Deserialize)]
struct CoWeightJson {
    #[serde(default)]
    entries: BTreeMap<String, f64>,
    #[serde(default)]
    tail: f64,
}

impl Serialize for CoWeight {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        CoWeightJson {
            entries: self
                .entries
                .iter()
                .map(|(j, v)| (j.to_string(), rat_to_f64(*v)))
                .collect(),
            tail: rat_to_f64(self.tail),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for CoWeight {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let raw = CoWeightJson::deserialize(d)?;
        let mut entries = BTreeMap::new();
        for (k, v) in raw.entries {
            let j: u64 = k
                .parse()
                .map_err(|_| D::Error::custom(format!("bad index {k:?}")))?;
            let r = crate::seq::rat_from_f64(v)
                .ok_or_else(|| D::Error::custom(format!("bad value {v:?}")))?;
            entries.insert(j, r);
        }
        let tail = crate::seq::rat_from_f64(raw.tail)
            .ok_or_else(|| D::Error::custom("bad tail"))?;
        let mut w = CoWeight { entries, tail };
        w.normalize();
        Ok(w)
    }
}

fn rat_zero() -> Rat {
    Rat::new(0, 1)
}

impl CoWeight {
    pub fn zero() -> CoWeight {
        CoWeight {
            entries: BTreeMap::new(),
            tail: rat_zero(),
        }
    }

    pub fn from_entries(entries: impl IntoIterator<Item = (u64, Rat)>) -> CoWeight {
        let mut map = BTreeMap::new();
        for (j, v) in entries {
            map.insert(j, v);
        }
        let mut w = CoWeight {
            entries: map,
            tail: rat_zero(),
        };
        w.normalize();
        w
    }

    pub fn value(&self, j: u64) -> Rat {
        self.entries.get(&j).copied().unwrap_or(self.tail)
    }

    fn normalize(&mut self) {
        let tail = self.tail;
        self.entries.retain(|_, v| *v != tail);
    }

    pub fn add_scaled(&self, other: &CoWeight, scale: Rat) -> CoWeight {
        let mut entries = BTreeMap::new();
        let keys: Vec<u64> = self
            .entries
            .keys()
            .chain(other.entries.keys())
            .copied()
            .collect();
        for j in keys {
            entries.insert(j, self.value(j) + scale * other.value(j));
        }
        let mut w = CoWeight {
            entries,
            tail: self.tail + scale * other.tail,
        };
        w.normalize();
        w
    }
}

/// The coroot α∨ as an exact integer coweight.
pub fn coroot(root: &Root) -> CoWeight {
    let entries: Vec<(u64, Rat)> = match (root.kind, root.shape) {
        (_, RootShape::Diff { j, k, sj, sk }) | (_, RootShape::Sum { j, k, sj, sk }) => vec![
            (j, Rat::from_integer(i64::from(sj))),
            (k, Rat::from_integer(i64::from(sk))),
        ],
        (RootSystemKind::B, RootShape::Eps { j, s }) => {
            vec![(j, Rat::from_integer(2 * i64::from(s)))]
        }
        (RootSystemKind::C, RootShape::TwoEps { j, s }) => {
            vec![(j, Rat::from_integer(i64::from(s)))]
        }
        _ => unreachable!("shape legality enforced at construction"),
    };
    CoWeight::from_entries(entries)
}

/// Squared ambient norm of a finite-support coweight under the kind's
/// convention.
pub fn coweight_norm_sq(kind: RootSystemKind, x: &CoWeight) -> Rat {
    assert!(x.tail == rat_zero(), "norm requires a zero tail");
    let sum: Rat = x.entries.values().map(|v| *v * *v).sum();
    match kind {
        RootSystemKind::B | RootSystemKind::D => Rat::from_integer(2) * sum,
        RootSystemKind::A | RootSystemKind::C => sum,
    }
}

/// ‖α∨‖² as an exact rational.
pub fn coroot_norm_sq(root: &Root) -> Rat {
    coweight_norm_sq(root.kind, &coroot(root))
}

/// ‖α‖² via the dual pairing: for diagonal functionals the representing
/// vector r satisfies α(x) = ⟨r, x⟩, so ‖α‖² = ‖r‖².
pub fn root_norm_sq(root: &Root) -> Rat {
    let coeffs = root.coeffs();
    match root.kind {
        // ⟨x,y⟩ = Σ xⱼyⱼ ⇒ r = a
        RootSystemKind::A | RootSystemKind::C => coeffs
            .iter()
            .map(|(_, a)| Rat::from_integer(a * a))
            .sum(),
        // ⟨x,y⟩ = 2Σ xⱼyⱼ ⇒ r = a/2, ‖r‖² = 2Σ(a/2)² = Σa²/2
        RootSystemKind::B | RootSystemKind::D => {
            let s: Rat = coeffs
                .iter()
                .map(|(_, a)| Rat::from_integer(a * a))
                .sum();
            s / Rat::from_integer(2)
        }
    }
}

/// Exact square of the bracket constant: min over the kind's root shapes of
/// 4/‖α∨‖².
pub fn cg_sq(kind: RootSystemKind) -> Rat {
    let four = Rat::from_integer(4);
    roots_in_window(kind, 2)
        .iter()
        .map(|r| four / coroot_norm_sq(r))
        .max()
        .expect("window 2 has roots")
}

/// c_g = 2/inf ‖α∨‖.
pub fn cg_exact(kind: RootSystemKind) -> f64 {
    rat_to_f64(cg_sq(kind)).sqrt()
}

/// Reflection r_α(x) = x − α(x)·α∨, exact on coweights.
pub fn reflect_coweight(root: &Root, x: &CoWeight) -> CoWeight {
    let pairing = root.pair(x);
    x.add_scaled(&coroot(root), -pairing)
}

/// Wire format for roots.
#[derive(Serialize, Deserialize)]
struct RootJson {
    kind: String,
    shape: String,
    j: u64,
    #[serde(default)]
    k: u64,
    #[serde(default = "one")]
    sj: i8,
    #[serde(default = "one")]
    sk: i8,
}

fn one() -> i8 {
    1
}

impl Serialize for Root {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let (shape, j, k, sj, sk) = match self.shape {
            RootShape::Diff { j, k, sj, sk } => ("diff", j, k, sj, sk),
            RootShape::Sum { j, k, sj, sk } => ("sum", j, k, sj, sk),
            RootShape::Eps { j, s } => ("eps", j, 0, s, 1),
            RootShape::TwoEps { j, s } => ("2eps", j, 0, s, 1),
        };
        RootJson {
            kind: self.kind.to_string(),
            shape: shape.to_string(),
            j,
            k,
            sj,
            sk,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Root {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let raw = RootJson::deserialize(d)?;
        let kind: RootSystemKind = raw.kind.parse().map_err(D::Error::custom)?;
        let shape = match raw.shape.as_str() {
            "diff" => RootShape::Diff {
                j: raw.j,
                k: raw.k,
                sj: raw.sj,
                sk: raw.sk,
            },
            "sum" => RootShape::Sum {
                j: raw.j,
                k: raw.k,
                sj: raw.sj,
                sk: raw.sk,
            },
            "eps" => RootShape::Eps { j: raw.j, s: raw.sj },
            "2eps" => RootShape::TwoEps { j: raw.j, s: raw.sj },
            other => return Err(D::Error::custom(format!("unknown shape {other:?}"))),
        };
        Root::new(kind, shape).map_err(D::Error::custom)
    }
}
