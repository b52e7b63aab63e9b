//! Input parsing and the canonical report document.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::forms::{exponent_key, exponents, TernaryForm};
use crate::linalg::C64;

/// Tolerance overrides accepted in the input file and on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_rank")]
    pub rank: f64,
    #[serde(default = "default_cert")]
    pub cert: f64,
    #[serde(default = "default_solver_rank")]
    pub solver_rank: f64,
}

fn default_rank() -> f64 {
    crate::gram::DEFAULT_RANK_TOL
}

fn default_cert() -> f64 {
    crate::bitangent::CERT_TOL
}

fn default_solver_rank() -> f64 {
    crate::spectra::SOLVER_RANK_TOL
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { rank: default_rank(), cert: default_cert(), solver_rank: default_solver_rank() }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInput {
    coefficients: BTreeMap<String, f64>,
    seed: Option<u64>,
    tolerances: Option<Tolerances>,
}

/// A real ternary quartic given by its 15 exponent-keyed coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct QuarticInput {
    /// Coefficients in graded-lex order of [`exponents`].
    pub coeffs: [f64; 15],
    pub seed: Option<u64>,
    pub tolerances: Tolerances,
}

impl QuarticInput {
    /// Parses TOML of the form
    ///
    /// ```toml
    /// seed = 1
    /// [coefficients]
    /// "400" = 1.0
    /// # ... all 15 keys
    /// [tolerances]
    /// rank = 1e-7
    /// ```
    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawInput = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let mut coeffs = [0.0; 15];
        for (k, exp) in exponents(4).iter().enumerate() {
            let key = exponent_key(*exp);
            let v = raw
                .coefficients
                .get(&key)
                .ok_or_else(|| Error::Parse(format!("missing coefficient \"{key}\"")))?;
            if !v.is_finite() {
                return Err(Error::Parse(format!("coefficient \"{key}\" is not finite")));
            }
            coeffs[k] = *v;
        }
        if let Some(extra) = raw.coefficients.keys().find(|k| !exponents(4).iter().any(|e| exponent_key(*e) == **k)) {
            return Err(Error::Parse(format!("unknown coefficient \"{extra}\"")));
        }
        Ok(Self { coeffs, seed: raw.seed, tolerances: raw.tolerances.unwrap_or_default() })
    }

    pub fn from_form(f: &TernaryForm) -> Result<Self> {
        if f.degree() != 4 {
            return Err(Error::UnsupportedDegree(f.degree()));
        }
        let coeffs: [f64; 15] = f.real_coeffs().try_into().expect("15 quartic coefficients");
        Ok(Self { coeffs, seed: None, tolerances: Tolerances::default() })
    }

    pub fn form(&self) -> TernaryForm {
        TernaryForm::from_real(4, &self.coeffs).expect("15 quartic coefficients")
    }

    /// Canonical TOML text; parsing it returns `self`.
    pub fn to_toml(&self) -> String {
        let mut s = String::new();
        if let Some(seed) = self.seed {
            let _ = writeln!(s, "seed = {seed}");
        }
        s.push_str("\n[coefficients]\n");
        for (k, exp) in exponents(4).iter().enumerate() {
            let _ = writeln!(s, "\"{}\" = {:?}", exponent_key(*exp), self.coeffs[k]);
        }
        let t = self.tolerances;
        let _ = write!(s, "\n[tolerances]\nrank = {:?}\ncert = {:?}\nsolver_rank = {:?}\n", t.rank, t.cert, t.solver_rank);
        s
    }
}

/// Tree of report values; maps keep keys sorted.
#[derive(Debug, Clone, PartialEq)]
pub enum Doc {
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
    List(Vec<Doc>),
    Map(BTreeMap<String, Doc>),
}

impl Doc {
    pub fn map<K: Into<String>>(entries: impl IntoIterator<Item = (K, Doc)>) -> Self {
        Doc::Map(entries.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }

    pub fn floats(values: &[f64]) -> Self {
        Doc::List(values.iter().map(|v| Doc::Float(*v)).collect())
    }

    pub fn complex(z: C64) -> Self {
        Doc::floats(&[z.re, z.im])
    }

    pub fn complexes(values: &[C64]) -> Self {
        Doc::List(values.iter().map(|z| Doc::complex(*z)).collect())
    }

    pub fn ints(values: &[usize]) -> Self {
        Doc::List(values.iter().map(|v| Doc::Int(*v as i64)).collect())
    }

    pub fn get(&self, key: &str) -> Option<&Doc> {
        match self {
            Doc::Map(m) => m.get(key),
            _ => None,
        }
    }

    /// Indented JSON with sorted keys and floats in `{:.16e}`.
    pub fn render(&self) -> String {
        let mut out = String::new();
        self.write(&mut out, 0);
        out.push('\n');
        out
    }

    fn write(&self, out: &mut String, indent: usize) {
        let pad = |n: usize| "  ".repeat(n);
        match self {
            Doc::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
            Doc::Int(i) => {
                let _ = write!(out, "{i}");
            }
            Doc::Float(x) => out.push_str(&format_float(*x)),
            Doc::Str(s) => {
                let _ = write!(out, "{s:?}");
            }
            Doc::List(items) if items.is_empty() => out.push_str("[]"),
            Doc::List(items) if items.iter().all(|d| matches!(d, Doc::Float(_) | Doc::Int(_) | Doc::Bool(_))) => {
                out.push('[');
                for (k, item) in items.iter().enumerate() {
                    if k > 0 {
                        out.push_str(", ");
                    }
                    item.write(out, indent);
                }
                out.push(']');
            }
            Doc::List(items) => {
                out.push_str("[\n");
                for (k, item) in items.iter().enumerate() {
                    out.push_str(&pad(indent + 1));
                    item.write(out, indent + 1);
                    out.push_str(if k + 1 < items.len() { ",\n" } else { "\n" });
                }
                out.push_str(&pad(indent));
                out.push(']');
            }
            Doc::Map(m) if m.is_empty() => out.push_str("{}"),
            Doc::Map(m) => {
                out.push_str("{\n");
                for (k, (key, v)) in m.iter().enumerate() {
                    let _ = write!(out, "{}{key:?}: ", pad(indent + 1));
                    v.write(out, indent + 1);
                    out.push_str(if k + 1 < m.len() { ",\n" } else { "\n" });
                }
                out.push_str(&pad(indent));
                out.push('}');
            }
        }
    }
}

/// 17 significant digits; negative zero prints as zero.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.16e}")
}
