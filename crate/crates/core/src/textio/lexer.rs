use num_bigint::BigInt;
use num_traits::{One, Zero};

use super::TextError;
use crate::polynomial::Rational;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Number(Rational),
    Semi,
    Comma,
    Arrow,
    Colon,
    Plus,
    Minus,
    Star,
    Slash,
    LParen,
    RParen,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

/// Parses an unsigned decimal (`0.25`) or fraction (`1/4`) literal exactly.
pub fn parse_rational(text: &str) -> Option<Rational> {
    if let Some((n, d)) = text.split_once('/') {
        let n = parse_rational(n)?;
        let d = parse_rational(d)?;
        return (!d.is_zero()).then(|| n / d);
    }
    let (int, frac) = text.split_once('.').unwrap_or((text, ""));
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.bytes().chain(frac.bytes()).all(|b| b.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int}{frac}");
    let num: BigInt = if digits.is_empty() {
        BigInt::zero()
    } else {
        digits.parse().ok()?
    };
    let mut den = BigInt::one();
    for _ in 0..frac.len() {
        den *= 10;
    }
    Some(Rational::new(num, den))
}

/// Splits model text into tokens; `#` starts a comment running to the end
/// of the line.
pub fn tokenize(text: &str) -> Result<Vec<Token>, TextError> {
    let mut out = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("");
        let bytes = line.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            let c = bytes[i];
            let (line_no, col) = (ln + 1, i + 1);
            let err = |msg: String| TextError::Syntax {
                line: line_no,
                col,
                msg,
            };
            if c.is_ascii_whitespace() {
                i += 1;
                continue;
            }
            let start = i;
            let tok = if c.is_ascii_alphabetic() || c == b'_' {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                Tok::Ident(line[start..i].to_string())
            } else if c.is_ascii_digit() || c == b'.' {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                // A fraction literal is `digits/digits` with no spaces.
                if i + 1 < bytes.len() && bytes[i] == b'/' && bytes[i + 1].is_ascii_digit() {
                    i += 1;
                    while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                        i += 1;
                    }
                }
                let lit = &line[start..i];
                Tok::Number(
                    parse_rational(lit).ok_or_else(|| err(format!("invalid number `{lit}`")))?,
                )
            } else {
                i += 1;
                match c {
                    b';' => Tok::Semi,
                    b',' => Tok::Comma,
                    b':' => Tok::Colon,
                    b'+' => Tok::Plus,
                    b'*' => Tok::Star,
                    b'/' => Tok::Slash,
                    b'(' => Tok::LParen,
                    b')' => Tok::RParen,
                    b'-' if bytes.get(i) == Some(&b'>') => {
                        i += 1;
                        Tok::Arrow
                    }
                    b'-' => Tok::Minus,
                    _ => {
                        let ch = line[start..].chars().next().unwrap_or('?');
                        return Err(err(format!("unexpected character `{ch}`")));
                    }
                }
            };
            out.push(Token {
                tok,
                line: line_no,
                col,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polynomial::ratio;

    #[test]
    fn rationals() {
        assert_eq!(parse_rational("0.5"), Some(ratio(1, 2)));
        assert_eq!(parse_rational("1/2"), Some(ratio(1, 2)));
        assert_eq!(parse_rational("3"), Some(ratio(3, 1)));
        assert_eq!(parse_rational(".25"), Some(ratio(1, 4)));
        assert_eq!(parse_rational("0.1/2"), Some(ratio(1, 20)));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("1.2.3"), None);
        assert_eq!(parse_rational(""), None);
    }

    #[test]
    fn tokens_with_positions() {
        let toks = tokenize("transition s0 -> s1 : 1/2*p; # note\n  -q").unwrap();
        let kinds: Vec<&Tok> = toks.iter().map(|t| &t.tok).collect();
        assert_eq!(kinds[2], &Tok::Arrow);
        assert_eq!(kinds[5], &Tok::Number(ratio(1, 2)));
        assert_eq!(kinds[6], &Tok::Star);
        let last = toks.last().unwrap();
        assert_eq!((last.line, last.col), (2, 4));
        assert!(matches!(
            tokenize("state a $"),
            Err(TextError::Syntax {
                line: 1,
                col: 9,
                ..
            })
        ));
    }
}
