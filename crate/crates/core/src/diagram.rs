//! Double-sided Feynman diagrams and the commutator expansion.
//!
//! A diagram of order `n` has `n + 1` interactions in slots `0..=n`. Slot `j`
//! happens at time `t_j` and the last slot is the signal (always ket side).
//! The value of a diagram is the correlation function
//! `C = Tr(X_k ... X_1 rho Y_1 ... Y_b)` with ket-side operators to the left of
//! `rho` in decreasing time order and bra-side operators to the right in
//! increasing time order.
//!
//! Expanding `[A, rho]` puts `A` on the ket with sign `+` and on the bra with
//! sign `-`, so every diagram carries the sign `(-1)^b`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::{Error, Result, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Ket,
    Bra,
}

impl Side {
    pub fn flipped(self) -> Side {
        match self {
            Side::Ket => Side::Bra,
            Side::Bra => Side::Ket,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DipoleKind {
    Electric,
    Magnetic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Interaction {
    pub slot: usize,
    pub side: Side,
    pub kind: DipoleKind,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FeynmanDiagram {
    interactions: Vec<Interaction>,
}

impl FeynmanDiagram {
    /// Interactions must occupy slots `0..=n` in order, with the last one on
    /// the ket.
    pub fn new(interactions: Vec<Interaction>) -> Result<Self> {
        if interactions.is_empty() {
            return Err(Error::InvalidDiagram("a diagram needs at least the signal interaction".into()));
        }
        for (i, it) in interactions.iter().enumerate() {
            if it.slot != i {
                return Err(Error::InvalidDiagram(format!(
                    "interaction {i} occupies slot {}, expected slot {i}",
                    it.slot
                )));
            }
        }
        if interactions.last().map(|it| it.side) != Some(Side::Ket) {
            return Err(Error::InvalidDiagram("the final interaction must act on the ket".into()));
        }
        Ok(FeynmanDiagram { interactions })
    }

    /// `sides` covers the first `n` interactions; the signal is appended on
    /// the ket. `kinds` has one entry per slot (`n + 1`).
    pub fn from_sides(sides: &[Side], kinds: &[DipoleKind]) -> Result<Self> {
        if kinds.len() != sides.len() + 1 {
            return Err(Error::InvalidDiagram(format!(
                "{} sides need {} kinds, got {}",
                sides.len(),
                sides.len() + 1,
                kinds.len()
            )));
        }
        let interactions = sides
            .iter()
            .copied()
            .chain(core::iter::once(Side::Ket))
            .zip(kinds.iter().copied())
            .enumerate()
            .map(|(slot, (side, kind))| Interaction { slot, side, kind })
            .collect();
        FeynmanDiagram::new(interactions)
    }

    /// All-electric diagram from the sides of the first `n` interactions.
    pub fn electric(sides: &[Side]) -> Result<Self> {
        let kinds = alloc::vec![DipoleKind::Electric; sides.len() + 1];
        FeynmanDiagram::from_sides(sides, &kinds)
    }

    pub fn order(&self) -> usize {
        self.interactions.len() - 1
    }

    pub fn interactions(&self) -> &[Interaction] {
        &self.interactions
    }

    pub fn bra_count(&self) -> usize {
        self.interactions.iter().filter(|i| i.side == Side::Bra).count()
    }

    pub fn ket_count(&self) -> usize {
        self.interactions.len() - self.bra_count()
    }

    /// `(-1)^b`.
    pub fn sign(&self) -> f64 {
        if self.bra_count().is_multiple_of(2) {
            1.0
        } else {
            -1.0
        }
    }

    pub fn kinds(&self) -> Vec<DipoleKind> {
        self.interactions.iter().map(|i| i.kind).collect()
    }

    pub fn uses(&self, kind: DipoleKind) -> bool {
        self.interactions.iter().any(|i| i.kind == kind)
    }

    /// Hermitian-conjugate partner: every non-final interaction changes side.
    /// Its value is the complex conjugate of this diagram's value.
    pub fn conjugate(&self) -> FeynmanDiagram {
        let n = self.order();
        let interactions = self
            .interactions
            .iter()
            .map(|&it| Interaction {
                side: if it.slot == n { it.side } else { it.side.flipped() },
                ..it
            })
            .collect();
        FeynmanDiagram { interactions }
    }

    /// Human-readable correlation function, e.g. `<mu(t) mu(t0) rho>`.
    pub fn correlation_label(&self) -> String {
        let n = self.order();
        let name = |it: &Interaction| {
            let op = match it.kind {
                DipoleKind::Electric => "mu",
                DipoleKind::Magnetic => "m",
            };
            if it.slot == n {
                format!("{op}(t)")
            } else {
                format!("{op}(t{})", it.slot)
            }
        };
        let mut parts: Vec<String> = self
            .interactions
            .iter()
            .rev()
            .filter(|it| it.side == Side::Ket)
            .map(name)
            .collect();
        parts.push("rho".into());
        parts.extend(self.interactions.iter().filter(|it| it.side == Side::Bra).map(name));
        format!("<{}>", parts.join(" "))
    }
}

/// Which part of a diagram value enters a term.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Part {
    Whole,
    Real,
    Imag,
}

/// One weighted diagram: contributes `weight * part(C)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub diagram: FeynmanDiagram,
    pub weight: C64,
    pub part: Part,
}

impl Term {
    pub fn contribution(&self, value: C64) -> C64 {
        let v = match self.part {
            Part::Whole => value,
            Part::Real => C64::new(value.re, 0.0),
            Part::Imag => C64::new(value.im, 0.0),
        };
        self.weight * v
    }

    pub fn instruction(&self) -> String {
        let part = match self.part {
            Part::Whole => "",
            Part::Real => "Re",
            Part::Imag => "Im",
        };
        let w = self.weight;
        let weight = if w.im == 0.0 {
            format!("{}", w.re)
        } else if w.re == 0.0 {
            format!("{}i", w.im)
        } else {
            format!("({w})")
        };
        format!("{weight}*{part}{}", self.diagram.correlation_label())
    }
}

/// Weighted sum of diagrams of one order.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagramSet {
    order: usize,
    terms: Vec<Term>,
}

impl DiagramSet {
    pub fn new(order: usize, terms: Vec<Term>) -> Result<Self> {
        if let Some(t) = terms.iter().find(|t| t.diagram.order() != order) {
            return Err(Error::InvalidDiagram(format!(
                "diagram of order {} in a set of order {order}",
                t.diagram.order()
            )));
        }
        Ok(DiagramSet { order, terms })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Keeps the terms whose diagram satisfies `keep` (phase-matching or RWA
    /// selection supplied by the caller).
    pub fn filter(&self, mut keep: impl FnMut(&FeynmanDiagram) -> bool) -> DiagramSet {
        DiagramSet {
            order: self.order,
            terms: self.terms.iter().filter(|t| keep(&t.diagram)).cloned().collect(),
        }
    }

    pub fn scaled(mut self, factor: C64) -> DiagramSet {
        self.terms.iter_mut().for_each(|t| t.weight *= factor);
        self
    }

    pub fn concat(mut self, other: DiagramSet) -> Result<DiagramSet> {
        if other.order != self.order {
            return Err(Error::InvalidDiagram("cannot join sets of different order".into()));
        }
        self.terms.extend(other.terms);
        Ok(self)
    }

    pub fn uses(&self, kind: DipoleKind) -> bool {
        self.terms.iter().any(|t| t.diagram.uses(kind))
    }

    /// `sum_j weight_j * part_j(value(diagram_j))`.
    pub fn evaluate(&self, mut value: impl FnMut(&FeynmanDiagram) -> Result<C64>) -> Result<C64> {
        let mut acc = C64::new(0.0, 0.0);
        for t in &self.terms {
            acc += t.contribution(value(&t.diagram)?);
        }
        Ok(acc)
    }

    pub fn conjugate_reduce(&self) -> Result<DiagramSet> {
        conjugate_reduce(self)
    }
}

/// All `2^n` all-electric diagrams of `<mu(t)[mu(t_{n-1}), ... [mu(t_0), rho]]>`.
pub fn expand_commutators(n: usize) -> DiagramSet {
    expand_with_kinds(&alloc::vec![DipoleKind::Electric; n + 1]).unwrap()
}

/// Commutator expansion with an operator kind per slot (`kinds.len() = n+1`).
pub fn expand_with_kinds(kinds: &[DipoleKind]) -> Result<DiagramSet> {
    if kinds.is_empty() {
        return Err(Error::InvalidDiagram("need at least one interaction".into()));
    }
    let n = kinds.len() - 1;
    let mut terms = Vec::with_capacity(1 << n);
    for mask in 0..(1usize << n) {
        let sides: Vec<Side> = (0..n)
            .map(|j| if mask >> j & 1 == 1 { Side::Bra } else { Side::Ket })
            .collect();
        let diagram = FeynmanDiagram::from_sides(&sides, kinds)?;
        let weight = C64::new(diagram.sign(), 0.0);
        terms.push(Term {
            diagram,
            weight,
            part: Part::Whole,
        });
    }
    DiagramSet::new(n, terms)
}

/// Pairs each diagram with its conjugate partner and keeps one member per
/// pair. With real weights `w` and `w'` the pair contributes
/// `w C + w' C*`, which is `2w Re C` when `w' = w` and `2iw Im C` when
/// `w' = -w`. The kept member is the one whose first interaction is on the
/// ket.
pub fn conjugate_reduce(set: &DiagramSet) -> Result<DiagramSet> {
    if set.order == 0 {
        return Ok(set.clone());
    }
    let mut used = alloc::vec![false; set.terms.len()];
    let mut out = Vec::with_capacity(set.terms.len() / 2);
    for (i, term) in set.terms.iter().enumerate() {
        if used[i] {
            continue;
        }
        if term.part != Part::Whole || term.weight.im != 0.0 {
            return Err(Error::UnpairedDiagram(format!(
                "term {} is not a plain real-weighted diagram",
                term.diagram.correlation_label()
            )));
        }
        let partner_diagram = term.diagram.conjugate();
        let j = set
            .terms
            .iter()
            .enumerate()
            .position(|(j, t)| !used[j] && j != i && t.diagram == partner_diagram)
            .ok_or_else(|| {
                Error::UnpairedDiagram(format!(
                    "{} has no partner {}",
                    term.diagram.correlation_label(),
                    partner_diagram.correlation_label()
                ))
            })?;
        let partner = &set.terms[j];
        let (w, wp) = (term.weight.re, partner.weight);
        let (weight, part) = if wp == C64::new(w, 0.0) {
            (C64::new(2.0 * w, 0.0), Part::Real)
        } else if wp == C64::new(-w, 0.0) {
            (C64::new(0.0, 2.0 * w), Part::Imag)
        } else {
            return Err(Error::UnpairedDiagram(format!(
                "weights {w} and {wp} of {} and its partner are not conjugate-symmetric",
                term.diagram.correlation_label()
            )));
        };
        used[i] = true;
        used[j] = true;
        let keep = if term.diagram.interactions()[0].side == Side::Ket {
            term.diagram.clone()
        } else {
            partner_diagram
        };
        // Swapping the kept member conjugates C; Re is unchanged and Im flips.
        let weight = if keep != term.diagram && part == Part::Imag {
            -weight
        } else {
            weight
        };
        out.push(Term {
            diagram: keep,
            weight,
            part,
        });
    }
    DiagramSet::new(set.order, out)
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Ket => "ket",
            Side::Bra => "bra",
        })
    }
}

impl fmt::Display for DipoleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DipoleKind::Electric => "E",
            DipoleKind::Magnetic => "M",
        })
    }
}
