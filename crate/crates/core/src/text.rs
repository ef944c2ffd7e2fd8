//! Shared term grammar for field elements (`2*y+1`) and polynomials
//! (`[y+1]*x^2+[2]*x+1`).

use num_bigint::BigUint;

use crate::error::{Error, Result};

/// One additive term: a raw coefficient (decimal digits or the inside of a
/// `[...]` group) and the exponent of the variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct RawTerm {
    pub coeff: Option<RawCoeff>,
    pub exp: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum RawCoeff {
    Decimal(BigUint),
    Bracketed(String),
}

pub(crate) fn parse_terms(input: &str, var: char) -> Result<Vec<RawTerm>> {
    let compact: String = input.chars().filter(|c| !c.is_whitespace()).collect();
    if compact.is_empty() {
        return Err(Error::Parse("empty expression".into()));
    }
    let mut pieces = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in compact.char_indices() {
        match c {
            '[' => depth += 1,
            ']' => {
                depth -= 1;
                if depth < 0 {
                    return Err(Error::Parse(format!("unbalanced ']' in {input:?}")));
                }
            }
            '+' if depth == 0 => {
                pieces.push(&compact[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    if depth != 0 {
        return Err(Error::Parse(format!("unbalanced '[' in {input:?}")));
    }
    pieces.push(&compact[start..]);
    pieces.into_iter().map(|p| parse_term(p, var)).collect()
}

fn parse_term(term: &str, var: char) -> Result<RawTerm> {
    if term.is_empty() {
        return Err(Error::Parse("empty term".into()));
    }
    let (coeff, rest) = if let Some(inner) = term.strip_prefix('[') {
        let close = inner
            .find(']')
            .ok_or_else(|| Error::Parse(format!("missing ']' in {term:?}")))?;
        (
            Some(RawCoeff::Bracketed(inner[..close].to_string())),
            &inner[close + 1..],
        )
    } else {
        let digits = term.chars().take_while(|c| c.is_ascii_digit()).count();
        if digits > 0 {
            let value = term[..digits]
                .parse::<BigUint>()
                .map_err(|e| Error::Parse(e.to_string()))?;
            (Some(RawCoeff::Decimal(value)), &term[digits..])
        } else {
            (None, term)
        }
    };
    if rest.is_empty() {
        if coeff.is_none() {
            return Err(Error::Parse(format!("malformed term {term:?}")));
        }
        return Ok(RawTerm { coeff, exp: 0 });
    }
    let rest = match rest.strip_prefix('*') {
        Some(r) if coeff.is_some() => r,
        Some(_) => return Err(Error::Parse(format!("dangling '*' in {term:?}"))),
        None => rest,
    };
    let rest = rest
        .strip_prefix(var)
        .ok_or_else(|| Error::Parse(format!("expected variable {var} in {term:?}")))?;
    let exp = if rest.is_empty() {
        1
    } else {
        let digits = rest
            .strip_prefix('^')
            .ok_or_else(|| Error::Parse(format!("trailing garbage in {term:?}")))?;
        if digits.is_empty() || !digits.chars().all(|c| c.is_ascii_digit()) {
            return Err(Error::Parse(format!("bad exponent in {term:?}")));
        }
        digits
            .parse::<usize>()
            .map_err(|e| Error::Parse(e.to_string()))?
    };
    Ok(RawTerm { coeff, exp })
}

/// Renders `c*v^k` terms in descending order; `coeffs` is indexed by exponent
/// and `render` returns `None` for zero coefficients.
pub(crate) fn render_terms<F>(len: usize, var: char, mut render: F) -> String
where
    F: FnMut(usize) -> Option<CoeffText>,
{
    let mut out = String::new();
    for k in (0..len).rev() {
        let Some(c) = render(k) else { continue };
        if !out.is_empty() {
            out.push('+');
        }
        let mono = match k {
            0 => String::new(),
            1 => var.to_string(),
            _ => format!("{var}^{k}"),
        };
        match c {
            CoeffText::One if k > 0 => out.push_str(&mono),
            CoeffText::One => out.push('1'),
            CoeffText::Plain(s) if k == 0 => out.push_str(&s),
            CoeffText::Plain(s) => {
                out.push_str(&s);
                out.push('*');
                out.push_str(&mono);
            }
            CoeffText::Bracketed(s) => {
                out.push('[');
                out.push_str(&s);
                out.push(']');
                if k > 0 {
                    out.push('*');
                    out.push_str(&mono);
                }
            }
        }
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

pub(crate) enum CoeffText {
    One,
    Plain(String),
    Bracketed(String),
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dec(v: u32) -> Option<RawCoeff> {
        Some(RawCoeff::Decimal(BigUint::from(v)))
    }

    #[test]
    fn plain_terms() {
        let t = parse_terms("x^6+x^4+ 2*x + 1", 'x').unwrap();
        assert_eq!(
            t,
            vec![
                RawTerm {
                    coeff: None,
                    exp: 6
                },
                RawTerm {
                    coeff: None,
                    exp: 4
                },
                RawTerm {
                    coeff: dec(2),
                    exp: 1
                },
                RawTerm {
                    coeff: dec(1),
                    exp: 0
                },
            ]
        );
    }

    #[test]
    fn bracketed_coefficients() {
        let t = parse_terms("[y+1]*x^2+[2]*x+1", 'x').unwrap();
        assert_eq!(t[0].coeff, Some(RawCoeff::Bracketed("y+1".into())));
        assert_eq!(t[0].exp, 2);
        assert_eq!(t[1].coeff, Some(RawCoeff::Bracketed("2".into())));
        assert_eq!(t.len(), 3);
    }

    #[test]
    fn rejects_malformed() {
        for bad in [
            "x+", "", "+x", "x^", "*x", "2**x", "x^a", "[y+1*x", "y", "3x2",
        ] {
            assert!(parse_terms(bad, 'x').is_err(), "{bad:?} accepted");
        }
    }
}
