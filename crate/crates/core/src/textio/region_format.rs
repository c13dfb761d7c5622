//! Region files: one `name in [lb, ub]` line per parameter.
//!
//! Parameters that are not mentioned get the default interval.

use std::fmt::Write as _;

use super::lexer::parse_rational;
use super::TextError;
use crate::model::{Interval, Region};
use crate::polynomial::{rational_to_f64, ParameterSet};

fn parse_bound(text: &str) -> Option<f64> {
    let t = text.trim();
    let (neg, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t),
    };
    let v = if body.contains('/') {
        rational_to_f64(&parse_rational(body)?)
    } else {
        body.parse::<f64>().ok().filter(|v| v.is_finite())?
    };
    Some(if neg { -v } else { v })
}

pub fn parse_region(
    text: &str,
    params: &std::sync::Arc<ParameterSet>,
) -> Result<Region, TextError> {
    let mut bounds: Vec<Option<Interval>> = vec![None; params.len()];
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| TextError::Syntax {
            line: ln + 1,
            col: 1,
            msg,
        };
        let (name, rest) = line
            .split_once(char::is_whitespace)
            .ok_or_else(|| err("expected `name in [lb, ub]`".into()))?;
        let rest = rest.trim_start();
        let body = rest
            .strip_prefix("in")
            .map(str::trim)
            .and_then(|r| r.strip_prefix('['))
            .and_then(|r| {
                r.trim_end()
                    .trim_end_matches(';')
                    .trim_end()
                    .strip_suffix(']')
            })
            .ok_or_else(|| err("expected `name in [lb, ub]`".into()))?;
        let (lo, hi) = body
            .split_once(',')
            .ok_or_else(|| err("expected two bounds separated by `,`".into()))?;
        let lb = parse_bound(lo).ok_or_else(|| err(format!("invalid bound `{}`", lo.trim())))?;
        let ub = parse_bound(hi).ok_or_else(|| err(format!("invalid bound `{}`", hi.trim())))?;
        let i = params
            .index_of(name)
            .ok_or_else(|| err(format!("unknown parameter `{name}`")))?;
        if lb >= ub {
            return Err(err(format!("empty interval [{lb}, {ub}] for `{name}`")));
        }
        if bounds[i].replace(Interval::new(lb, ub)).is_some() {
            return Err(err(format!("parameter `{name}` bounded twice")));
        }
    }
    let bounds = bounds.into_iter().map(Option::unwrap_or_default).collect();
    Ok(Region::new(params, bounds)?)
}

/// Writes every interval with round-trip precision.
pub fn serialize_region(region: &Region) -> String {
    let mut out = String::new();
    for (i, iv) in region.bounds().iter().enumerate() {
        let _ = writeln!(
            out,
            "{} in [{:?}, {:?}]",
            region.params().name(i),
            iv.lb,
            iv.ub
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DEFAULT_LOWER, DEFAULT_UPPER};

    #[test]
    fn parses_and_defaults() {
        let ps = ParameterSet::new(["p", "q", "r"]).unwrap();
        let r = parse_region("# box\np in [0.1, 0.9]\nq in [1/4, 3e-1];\n", &ps).unwrap();
        assert_eq!(r.interval(0), Interval::new(0.1, 0.9));
        assert_eq!(r.interval(1), Interval::new(0.25, 0.3));
        assert_eq!(r.interval(2), Interval::new(DEFAULT_LOWER, DEFAULT_UPPER));
        let again = parse_region(&serialize_region(&r), &ps).unwrap();
        assert_eq!(again, r);
    }

    #[test]
    fn rejects_bad_lines() {
        let ps = ParameterSet::new(["p"]).unwrap();
        for text in [
            "p in [0.9, 0.1]",
            "p in [0.5, 0.5]",
            "x in [0.1, 0.2]",
            "p in [0.1, 0.2]\np in [0.2, 0.3]",
            "p [0.1, 0.2]",
            "p in [0.1; 0.2]",
            "p in [a, 0.2]",
        ] {
            assert!(parse_region(text, &ps).is_err(), "{text}");
        }
        let err = parse_region("\n\np in [2, 1]", &ps).unwrap_err();
        assert!(matches!(err, TextError::Syntax { line: 3, .. }));
    }
}
