//! Text form of a single diagram.
//!
//! ```text
//! order 3; t0 ket E; t1 bra E; t2 bra E; signal ket E
//! ```
//!
//! Statements are separated by `;` or newlines. `order` comes first, then one
//! `tK ket|bra E|M` per slot `0..n` in any order, then `signal ket E|M`.
//! `#` starts a comment that runs to the end of the line.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::diagram::{DipoleKind, FeynmanDiagram, Interaction, Side};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Clone, Copy)]
struct Word<'a> {
    text: &'a str,
    line: usize,
    column: usize,
}

impl Word<'_> {
    fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError {
            line: self.line,
            column: self.column,
            message: message.into(),
        }
    }
}

fn flush_word<'a>(line: &'a str, li: usize, start: &mut Option<usize>, end: usize, current: &mut Vec<Word<'a>>) {
    if let Some(s) = start.take() {
        current.push(Word {
            text: &line[s..end],
            line: li + 1,
            column: line[..s].chars().count() + 1,
        });
    }
}

// Splits into statements of words, each tagged with 1-based line and column.
fn statements(text: &str) -> Vec<Vec<Word<'_>>> {
    let mut out = Vec::new();
    let mut current = Vec::new();
    for (li, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("");
        let mut start = None;
        for (i, c) in line.char_indices() {
            if c == ';' {
                flush_word(line, li, &mut start, i, &mut current);
                if !current.is_empty() {
                    out.push(core::mem::take(&mut current));
                }
            } else if c.is_whitespace() {
                flush_word(line, li, &mut start, i, &mut current);
            } else if start.is_none() {
                start = Some(i);
            }
        }
        flush_word(line, li, &mut start, line.len(), &mut current);
        if !current.is_empty() {
            out.push(core::mem::take(&mut current));
        }
    }
    out
}

fn parse_side(w: &Word<'_>) -> Result<Side, ParseError> {
    match w.text {
        "ket" => Ok(Side::Ket),
        "bra" => Ok(Side::Bra),
        other => Err(w.error(format!("expected 'ket' or 'bra', found '{other}'"))),
    }
}

fn parse_kind(w: &Word<'_>) -> Result<DipoleKind, ParseError> {
    match w.text {
        "E" => Ok(DipoleKind::Electric),
        "M" => Ok(DipoleKind::Magnetic),
        other => Err(w.error(format!("expected 'E' or 'M', found '{other}'"))),
    }
}

fn expect_len(stmt: &[Word<'_>], n: usize, what: &str) -> Result<(), ParseError> {
    if stmt.len() != n {
        let at = stmt.get(n).unwrap_or(&stmt[stmt.len() - 1]);
        return Err(at.error(format!("'{what}' takes {} arguments, found {}", n - 1, stmt.len() - 1)));
    }
    Ok(())
}

pub fn parse_diagram(text: &str) -> Result<FeynmanDiagram, ParseError> {
    let stmts = statements(text);
    let Some(first) = stmts.first() else {
        return Err(ParseError {
            line: 1,
            column: 1,
            message: "empty diagram".into(),
        });
    };
    if first[0].text != "order" {
        return Err(first[0].error(format!("expected 'order', found '{}'", first[0].text)));
    }
    expect_len(first, 2, "order")?;
    let order: usize = first[1]
        .text
        .parse()
        .map_err(|_| first[1].error(format!("invalid order '{}'", first[1].text)))?;

    let mut slots: Vec<Option<(Side, DipoleKind)>> = alloc::vec![None; order + 1];
    let mut signal_seen: Option<Word<'_>> = None;
    for stmt in &stmts[1..] {
        let head = stmt[0];
        if let Some(sig) = signal_seen {
            return Err(head.error(format!(
                "statement after the signal (line {}, column {})",
                sig.line, sig.column
            )));
        }
        if head.text == "signal" {
            expect_len(stmt, 3, "signal")?;
            if parse_side(&stmt[1])? == Side::Bra {
                return Err(stmt[1].error("the signal interaction must act on the ket"));
            }
            slots[order] = Some((Side::Ket, parse_kind(&stmt[2])?));
            signal_seen = Some(head);
        } else if let Some(num) = head.text.strip_prefix('t').filter(|s| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit())) {
            expect_len(stmt, 3, head.text)?;
            let slot: usize = num.parse().map_err(|_| head.error("slot index out of range"))?;
            if slot >= order {
                return Err(head.error(format!("slot {slot} out of range for order {order} (slots t0..t{})", order as i64 - 1)));
            }
            if slots[slot].is_some() {
                return Err(head.error(format!("duplicate slot t{slot}")));
            }
            slots[slot] = Some((parse_side(&stmt[1])?, parse_kind(&stmt[2])?));
        } else {
            return Err(head.error(format!("unknown keyword '{}'", head.text)));
        }
    }
    let end = stmts.last().and_then(|s| s.last()).copied().unwrap_or(first[0]);
    if signal_seen.is_none() {
        return Err(end.error("missing 'signal' statement"));
    }
    let mut interactions = Vec::with_capacity(order + 1);
    for (slot, entry) in slots.into_iter().enumerate() {
        let (side, kind) = entry.ok_or_else(|| end.error(format!("missing slot t{slot}")))?;
        interactions.push(Interaction { slot, side, kind });
    }
    FeynmanDiagram::new(interactions).map_err(|e| end.error(e.to_string()))
}

/// Canonical text form; `parse_diagram(&d.to_string()) == d`.
impl fmt::Display for FeynmanDiagram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.order();
        write!(f, "order {n}")?;
        for it in self.interactions() {
            if it.slot == n {
                write!(f, "; signal {} {}", it.side, it.kind)?;
            } else {
                write!(f, "; t{} {} {}", it.slot, it.side, it.kind)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagram::expand_with_kinds;
    use proptest::prelude::*;

    #[test]
    fn spec_examples() {
        let d = parse_diagram("order 1; t0 ket E; signal ket E").unwrap();
        assert_eq!(d.sign(), 1.0);
        assert_eq!(d.correlation_label(), "<mu(t) mu(t0) rho>");

        let d = parse_diagram("order 3; t0 ket E; t1 bra E; t2 bra E; signal ket E").unwrap();
        assert_eq!((d.ket_count(), d.bra_count(), d.sign()), (2, 2, 1.0));
        assert!(crate::diagram::expand_commutators(3)
            .terms()
            .iter()
            .any(|t| t.diagram == d && t.weight.re == 1.0));

        let d = parse_diagram("order 1; t0 bra M; signal ket E").unwrap();
        assert_eq!(d.correlation_label(), "<mu(t) rho m(t0)>");
    }

    #[test]
    fn newlines_comments_and_any_slot_order() {
        let text = "order 2 # second order\n t1 bra E\n t0 ket M;\n\nsignal ket E\n";
        let d = parse_diagram(text).unwrap();
        assert_eq!(d.to_string(), "order 2; t0 ket M; t1 bra E; signal ket E");
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse_diagram("order 1; t0 ket E; signal bra E").unwrap_err();
        assert_eq!((e.line, e.column), (1, 27));
        assert!(e.message.contains("ket"));

        let e = parse_diagram("order 2\nt0 ket E\nt0 bra E\nsignal ket E").unwrap_err();
        assert_eq!((e.line, e.column), (3, 1));
        assert!(e.message.contains("duplicate"));

        let e = parse_diagram("order 1; x0 ket E; signal ket E").unwrap_err();
        assert_eq!((e.line, e.column), (1, 10));
        assert!(e.message.contains("unknown keyword"));

        let e = parse_diagram("order 2; t0 ket E; signal ket E").unwrap_err();
        assert!(e.message.contains("missing slot t1"));

        assert!(parse_diagram("order 1; t0 ket E").unwrap_err().message.contains("signal"));
        assert!(parse_diagram("order 1; t1 ket E; signal ket E").is_err());
        assert!(parse_diagram("order 1; t0 left E; signal ket E").is_err());
        assert!(parse_diagram("order 1; t0 ket X; signal ket E").is_err());
        assert!(parse_diagram("t0 ket E; signal ket E").is_err());
        assert!(parse_diagram("").is_err());
        assert!(parse_diagram("order 0; signal ket E; t0 ket E").is_err());
    }

    fn kind_strategy() -> impl Strategy<Value = DipoleKind> {
        prop_oneof![Just(DipoleKind::Electric), Just(DipoleKind::Magnetic)]
    }

    proptest! {
        #[test]
        fn print_parse_fixed_point(kinds in proptest::collection::vec(kind_strategy(), 1..6), pick in any::<usize>()) {
            let set = expand_with_kinds(&kinds).unwrap();
            let d = &set.terms()[pick % set.len()].diagram;
            let text = d.to_string();
            let parsed = parse_diagram(&text).unwrap();
            prop_assert_eq!(&parsed, d);
            prop_assert_eq!(parsed.to_string(), text);
        }
    }
}
