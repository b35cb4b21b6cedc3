//! Lexer and parser for the operator DSL (grammar in the module docs).

use super::{OperatorExpr, OpspecError};
use crate::scalar::{from_f64, Scalar};

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Plus,
    Minus,
    Star,
    Prime,
    Number(f64),
    Mode(char),
    Hc,
}

fn err(position: usize, message: impl Into<String>) -> OpspecError {
    OpspecError::Parse {
        position,
        message: message.into(),
    }
}

fn lex(text: &str) -> Result<Vec<(usize, Token)>, OpspecError> {
    let bytes = text.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '+' => {
                tokens.push((i, Token::Plus));
                i += 1;
            }
            '-' => {
                tokens.push((i, Token::Minus));
                i += 1;
            }
            '*' => {
                tokens.push((i, Token::Star));
                i += 1;
            }
            '\'' => {
                tokens.push((i, Token::Prime));
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < bytes.len() && ((bytes[i] as char).is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                let literal = &text[start..i];
                let value: f64 = literal
                    .parse()
                    .map_err(|_| err(start, format!("malformed number `{literal}`")))?;
                tokens.push((start, Token::Number(value)));
            }
            'a'..='z' => {
                let start = i;
                while i < bytes.len() && (bytes[i] as char).is_ascii_lowercase() {
                    i += 1;
                }
                let word = &text[start..i];
                match word {
                    "hc" => tokens.push((start, Token::Hc)),
                    w if w.len() == 1 => tokens.push((start, Token::Mode(c))),
                    w => {
                        return Err(err(
                            start,
                            format!("unknown word `{w}`; mode names are single letters and `hc` is reserved"),
                        ))
                    }
                }
            }
            other => return Err(err(i, format!("unexpected character `{other}`"))),
        }
    }
    Ok(tokens)
}

struct RawTerm {
    sign: f64,
    coefficient: f64,
    factors: Vec<(char, bool)>,
}

/// Parse against an explicit ordered mode list; letters outside the list
/// are rejected.
pub fn parse_operator_with_modes<T: Scalar>(
    text: &str,
    modes: &[char],
) -> Result<OperatorExpr<T>, OpspecError> {
    let tokens = lex(text)?;
    let mut pos = 0usize;
    let mut terms: Vec<RawTerm> = Vec::new();
    let mut group_start = 0usize;

    if tokens.is_empty() {
        return Err(err(0, "empty expression"));
    }

    loop {
        // Optional leading minus for the first term of a group/expression.
        let mut sign = 1.0;
        while let Some((_, Token::Minus)) = tokens.get(pos) {
            sign = -sign;
            pos += 1;
        }
        let term = parse_term(&tokens, &mut pos, text)?;
        terms.push(RawTerm {
            sign,
            coefficient: term.0,
            factors: term.1,
        });

        match tokens.get(pos) {
            None => break,
            Some((_, Token::Plus)) => {
                pos += 1;
                if let Some((_, Token::Hc)) = tokens.get(pos) {
                    pos += 1;
                    // Append conjugates of the current group, then close it.
                    let conjugates: Vec<RawTerm> = terms[group_start..]
                        .iter()
                        .map(|t| RawTerm {
                            sign: t.sign,
                            coefficient: t.coefficient,
                            factors: t
                                .factors
                                .iter()
                                .rev()
                                .map(|&(m, d)| (m, !d))
                                .collect(),
                        })
                        .collect();
                    terms.extend(conjugates);
                    group_start = terms.len();
                    match tokens.get(pos) {
                        None => break,
                        Some((_, Token::Plus)) => pos += 1,
                        Some(&(p, _)) => return Err(err(p, "expected `+` or end after `hc`")),
                    }
                } else {
                    group_start = terms.len();
                }
            }
            Some((_, Token::Minus)) => {
                // Same group; the sign is consumed at the top of the loop.
            }
            Some(&(p, _)) => return Err(err(p, "expected `+`, `-`, or end of expression")),
        }
    }

    // Resolve mode names against the declared list.
    let mut raw = Vec::with_capacity(terms.len());
    for t in terms {
        let mut factors = Vec::with_capacity(t.factors.len());
        for (name, dagger) in t.factors {
            let mode = modes
                .iter()
                .position(|&m| m == name)
                .ok_or(OpspecError::UnknownMode { mode: name })?;
            factors.push((mode, dagger));
        }
        raw.push((from_f64::<T>(t.sign * t.coefficient), factors));
    }
    OperatorExpr::from_terms(modes.to_vec(), raw)
}

/// Parse with the mode list inferred as the alphabetically sorted set of
/// letters appearing in the expression.
pub fn parse_operator<T: Scalar>(text: &str) -> Result<OperatorExpr<T>, OpspecError> {
    let tokens = lex(text)?;
    let mut modes: Vec<char> = tokens
        .iter()
        .filter_map(|(_, t)| match t {
            Token::Mode(c) => Some(*c),
            _ => None,
        })
        .collect();
    modes.sort_unstable();
    modes.dedup();
    parse_operator_with_modes(text, &modes)
}

/// One signed term body: `[decimal ['*']] factor+`.
fn parse_term(
    tokens: &[(usize, Token)],
    pos: &mut usize,
    text: &str,
) -> Result<(f64, Vec<(char, bool)>), OpspecError> {
    let mut coefficient = 1.0;
    if let Some((_, Token::Number(value))) = tokens.get(*pos) {
        coefficient = *value;
        *pos += 1;
        if let Some((_, Token::Star)) = tokens.get(*pos) {
            *pos += 1;
        }
    }
    let mut factors = Vec::new();
    while let Some(&(_, Token::Mode(name))) = tokens.get(*pos) {
        *pos += 1;
        let mut dagger = false;
        if let Some((_, Token::Prime)) = tokens.get(*pos) {
            dagger = true;
            *pos += 1;
            if let Some(&(p, Token::Prime)) = tokens.get(*pos) {
                return Err(err(
                    p,
                    "repeated apostrophe; write powers as repeated factors",
                ));
            }
        }
        factors.push((name, dagger));
    }
    if factors.is_empty() {
        let p = tokens
            .get(*pos)
            .map(|&(p, _)| p)
            .unwrap_or_else(|| text.len());
        return Err(err(p, "expected at least one mode factor"));
    }
    Ok((coefficient, factors))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opspec::Factor;

    #[test]
    fn trilinear_interaction_parses() {
        let expr = parse_operator::<f64>("a' b c + hc").unwrap();
        assert_eq!(expr.modes(), &['a', 'b', 'c']);
        assert_eq!(expr.monomials().len(), 2);
        let m0 = &expr.monomials()[0];
        assert_eq!(m0.coefficient, 1.0);
        assert_eq!(
            m0.factors,
            vec![
                Factor { mode: 0, dagger: true, power: 1 },
                Factor { mode: 1, dagger: false, power: 1 },
                Factor { mode: 2, dagger: false, power: 1 },
            ]
        );
        let m1 = &expr.monomials()[1];
        assert_eq!(
            m1.factors,
            vec![
                Factor { mode: 0, dagger: false, power: 1 },
                Factor { mode: 1, dagger: true, power: 1 },
                Factor { mode: 2, dagger: true, power: 1 },
            ]
        );
    }

    #[test]
    fn number_operator_is_self_conjugate() {
        let expr = parse_operator::<f64>("2 a' a").unwrap();
        assert_eq!(expr.monomials().len(), 1);
        assert_eq!(expr.monomials()[0].coefficient, 2.0);
        // Explicit star form is equivalent.
        let starred = parse_operator::<f64>("2 * a' a").unwrap();
        assert_eq!(expr, starred);
    }

    #[test]
    fn missing_hc_is_rejected() {
        let err = parse_operator::<f64>("a' b c").unwrap_err();
        assert!(matches!(err, OpspecError::NotHermitian { .. }));
    }

    #[test]
    fn hc_scope_is_the_previous_group_only() {
        // Number operators sit in their own groups; hc conjugates only the
        // interaction term, so they are not doubled.
        let expr = parse_operator::<f64>("2 a' a + b' b + 0.1 a' b c + hc").unwrap();
        assert_eq!(expr.monomials().len(), 4);
        let diag_a = expr
            .monomials()
            .iter()
            .find(|m| m.factors.len() == 2 && m.factors[0].mode == 0)
            .unwrap();
        assert_eq!(diag_a.coefficient, 2.0);
    }

    #[test]
    fn minus_joins_terms_within_a_group() {
        let expr = parse_operator::<f64>("a' b - a' c + hc").unwrap();
        // Both written terms and both conjugates.
        assert_eq!(expr.monomials().len(), 4);
        let m_ac = expr
            .monomials()
            .iter()
            .find(|m| m.factors.iter().any(|f| f.mode == 2))
            .unwrap();
        assert_eq!(m_ac.coefficient.abs(), 1.0);
    }

    #[test]
    fn four_wave_variant_parses() {
        let expr = parse_operator::<f64>("a' d' b c + hc").unwrap();
        assert_eq!(expr.modes(), &['a', 'b', 'c', 'd']);
        let deltas = expr.net_changes();
        assert!(deltas.contains(&vec![1, -1, -1, 1]));
        assert!(deltas.contains(&vec![-1, 1, 1, -1]));
    }

    #[test]
    fn explicit_mode_list_controls_ordering_and_membership() {
        let expr = parse_operator_with_modes::<f64>("a' b + hc", &['b', 'a']).unwrap();
        assert_eq!(expr.modes(), &['b', 'a']);
        let err = parse_operator_with_modes::<f64>("a' z + hc", &['a', 'b']).unwrap_err();
        assert!(matches!(err, OpspecError::UnknownMode { mode: 'z' }));
    }

    #[test]
    fn lexer_rejections_carry_positions() {
        match parse_operator::<f64>("a'' b") {
            Err(OpspecError::Parse { position, .. }) => assert_eq!(position, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
        match parse_operator::<f64>("a? b") {
            Err(OpspecError::Parse { position, .. }) => assert_eq!(position, 1),
            other => panic!("expected parse error, got {other:?}"),
        }
        match parse_operator::<f64>("ab + hc") {
            Err(OpspecError::Parse { position, .. }) => assert_eq!(position, 0),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(matches!(
            parse_operator::<f64>(""),
            Err(OpspecError::Parse { .. })
        ));
        assert!(matches!(
            parse_operator::<f64>("2.5"),
            Err(OpspecError::Parse { .. })
        ));
        // hc with nothing before it in its group.
        assert!(matches!(
            parse_operator::<f64>("hc"),
            Err(OpspecError::Parse { .. })
        ));
    }

    #[test]
    fn round_trip_is_identity() {
        for text in [
            "a' b c + hc",
            "2 a' a + b' b + 0.1 a' b c + hc",
            "a' d' b c + hc",
            "0.5 a' a' a a + a' a",
            "a' b - a' c + hc",
        ] {
            let expr = parse_operator::<f64>(text).unwrap();
            let printed = expr.to_string();
            let reparsed = parse_operator::<f64>(&printed).unwrap();
            assert_eq!(expr, reparsed, "round trip failed for `{text}` -> `{printed}`");
        }
    }
}
