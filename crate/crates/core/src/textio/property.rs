//! Property queries such as `P >= 0.9` or `ER < 3.5`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::TextError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MeasureKind {
    /// Probability of eventually reaching the target.
    Reachability,
    /// Expected reward accumulated until the target.
    ExpectedReward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Comparator {
    Lt,
    Le,
    Gt,
    Ge,
}

impl Comparator {
    /// True for `>` and `>=`, where the search maximizes.
    pub fn is_lower_bound(self) -> bool {
        matches!(self, Comparator::Gt | Comparator::Ge)
    }

    /// Strict comparisons reject equality; non-strict ones accept it.
    pub fn holds(self, value: f64, bound: f64) -> bool {
        match self {
            Comparator::Lt => value < bound,
            Comparator::Le => value <= bound,
            Comparator::Gt => value > bound,
            Comparator::Ge => value >= bound,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Comparator::Lt => "<",
            Comparator::Le => "<=",
            Comparator::Gt => ">",
            Comparator::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropertyQuery {
    pub kind: MeasureKind,
    pub cmp: Comparator,
    pub bound: f64,
}

impl PropertyQuery {
    pub fn holds(&self, value: f64) -> bool {
        self.cmp.holds(value, self.bound)
    }
}

impl fmt::Display for PropertyQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let k = match self.kind {
            MeasureKind::Reachability => "P",
            MeasureKind::ExpectedReward => "ER",
        };
        write!(f, "{k} {} {}", self.cmp.symbol(), self.bound)
    }
}

pub fn parse_property(text: &str) -> Result<PropertyQuery, TextError> {
    let err = |msg: &str| TextError::Semantic(format!("property `{}`: {msg}", text.trim()));
    let t = text.trim();
    let (kind, rest) = if let Some(r) = t.strip_prefix("ER") {
        (MeasureKind::ExpectedReward, r)
    } else if let Some(r) = t.strip_prefix('P') {
        (MeasureKind::Reachability, r)
    } else {
        return Err(err("expected `P` or `ER`"));
    };
    let rest = rest.trim_start();
    let (cmp, rest) = [
        ("<=", Comparator::Le),
        (">=", Comparator::Ge),
        ("<", Comparator::Lt),
        (">", Comparator::Gt),
    ]
    .into_iter()
    .find_map(|(sym, c)| rest.strip_prefix(sym).map(|r| (c, r)))
    .ok_or_else(|| err("expected one of <, <=, >, >="))?;
    let rest = rest.trim();
    let bound = if rest.contains('/') {
        super::parse_rational(rest).map(|r| crate::polynomial::rational_to_f64(&r))
    } else {
        rest.parse::<f64>().ok()
    }
    .filter(|b| b.is_finite())
    .ok_or_else(|| err("invalid bound"))?;
    match kind {
        MeasureKind::Reachability if !(0.0..=1.0).contains(&bound) => {
            Err(err("probability bound must lie in [0, 1]"))
        }
        MeasureKind::ExpectedReward if bound < 0.0 => Err(err("reward bound must be non-negative")),
        _ => Ok(PropertyQuery { kind, cmp, bound }),
    }
}

impl FromStr for PropertyQuery {
    type Err = TextError;
    fn from_str(s: &str) -> Result<Self, TextError> {
        parse_property(s)
    }
}
