//! Structural normalization into the four normal-form shapes.
//!
//! Each distinct complex subconcept gets exactly one fresh name. The
//! definitional axioms emitted for it depend on the polarity of its
//! occurrences: `C ⊑ X` for left-hand occurrences, `X ⊑ C` for right-hand
//! ones, both if it occurs on both sides.

use std::collections::{BTreeMap, BTreeSet};

use super::{Concept, ConceptId, NormGci, RoleExpr, SurfaceGci, Tbox, Vocabulary};

/// Fresh concept name → the subconcept it abbreviates.
pub type Provenance = BTreeMap<ConceptId, Concept>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Polarity {
    Lhs,
    Rhs,
}

enum LShape {
    Atom(ConceptId),
    Conj(ConceptId, ConceptId),
    Ex(RoleExpr, ConceptId),
}

enum RShape {
    Atom(ConceptId),
    Ex(RoleExpr, ConceptId),
}

struct Normalizer<'v> {
    vocab: &'v mut Vocabulary,
    fresh: BTreeMap<Concept, ConceptId>,
    emitted: BTreeSet<(ConceptId, Polarity)>,
    out: Vec<NormGci>,
}

fn simplify(c: &Concept) -> Concept {
    match c {
        Concept::Atom(_) => c.clone(),
        Concept::And(a, b) => {
            let (a, b) = (simplify(a), simplify(b));
            match (a.as_atom(), b.as_atom()) {
                (Some(ConceptId::BOT), _) | (_, Some(ConceptId::BOT)) => Concept::Atom(ConceptId::BOT),
                (Some(ConceptId::TOP), _) => b,
                (_, Some(ConceptId::TOP)) => a,
                _ if a == b => a,
                _ => Concept::and(a, b),
            }
        }
        Concept::Exists(s, f) => {
            let f = simplify(f);
            if f.as_atom() == Some(ConceptId::BOT) {
                Concept::Atom(ConceptId::BOT)
            } else {
                Concept::exists(*s, f)
            }
        }
    }
}

impl Normalizer<'_> {
    fn name_for(&mut self, c: &Concept, pol: Polarity) -> ConceptId {
        if let Some(a) = c.as_atom() {
            return a;
        }
        let x = match self.fresh.get(c) {
            Some(&x) => x,
            None => {
                let x = self.vocab.fresh_concept("X");
                self.fresh.insert(c.clone(), x);
                x
            }
        };
        if self.emitted.insert((x, pol)) {
            match pol {
                Polarity::Lhs => self.gci(c, &Concept::Atom(x)),
                Polarity::Rhs => self.gci(&Concept::Atom(x), c),
            }
        }
        x
    }

    fn lhs_shape(&mut self, c: &Concept) -> LShape {
        match c {
            Concept::Atom(a) => LShape::Atom(*a),
            Concept::Exists(s, f) => {
                let f = self.name_for(f, Polarity::Lhs);
                LShape::Ex(*s, f)
            }
            Concept::And(a, b) => {
                let a = self.name_for(a, Polarity::Lhs);
                let b = self.name_for(b, Polarity::Lhs);
                if a == b {
                    LShape::Atom(a)
                } else {
                    LShape::Conj(a, b)
                }
            }
        }
    }

    fn rhs_shape(&mut self, c: &Concept) -> RShape {
        match c {
            Concept::Atom(a) => RShape::Atom(*a),
            Concept::Exists(s, f) => {
                let f = self.name_for(f, Polarity::Rhs);
                RShape::Ex(*s, f)
            }
            Concept::And(..) => unreachable!("conjunctions are split before shaping"),
        }
    }

    fn gci(&mut self, lhs: &Concept, rhs: &Concept) {
        let lhs = simplify(lhs);
        let rhs = simplify(rhs);
        if lhs.as_atom() == Some(ConceptId::BOT) || rhs.as_atom() == Some(ConceptId::TOP) {
            return;
        }
        if let Concept::And(r1, r2) = &rhs {
            self.gci(&lhs, r1);
            self.gci(&lhs, r2);
            return;
        }
        // Both sides complex: route through a name for the left-hand side.
        let lhs_complex = !matches!(lhs, Concept::Atom(_));
        if lhs_complex && matches!(rhs, Concept::Exists(..)) {
            let x = self.name_for(&lhs, Polarity::Lhs);
            self.gci(&Concept::Atom(x), &rhs);
            return;
        }
        let l = self.lhs_shape(&lhs);
        let r = self.rhs_shape(&rhs);
        let gci = match (l, r) {
            (LShape::Atom(a), RShape::Atom(b)) => NormGci::Sub { lhs: a, rhs: b },
            (LShape::Atom(a), RShape::Ex(role, filler)) => NormGci::ExRight {
                lhs: a,
                role,
                filler,
            },
            (LShape::Conj(a, b), RShape::Atom(c)) => NormGci::ConjSub {
                lhs1: a.min(b),
                lhs2: a.max(b),
                rhs: c,
            },
            (LShape::Ex(role, filler), RShape::Atom(b)) => NormGci::ExLeft { role, filler, rhs: b },
            _ => unreachable!("complex-to-existential handled above"),
        };
        self.out.push(gci);
    }
}

/// Normalizes a surface TBox. Fresh names are interned into `vocab`.
pub fn normalize(gcis: &[SurfaceGci], vocab: &mut Vocabulary) -> (Tbox, Provenance) {
    let mut n = Normalizer {
        vocab,
        fresh: BTreeMap::new(),
        emitted: BTreeSet::new(),
        out: Vec::new(),
    };
    for g in gcis {
        n.gci(&g.lhs, &g.rhs);
    }
    let provenance = n.fresh.into_iter().map(|(c, x)| (x, c)).collect();
    (Tbox::new(n.out), provenance)
}

/// One axiom outside the normal form, with a human-readable reason.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub axiom: NormGci,
    pub reason: &'static str,
}

/// Checks the side conditions of the four normal-form shapes.
pub fn validate_normal_form(tbox: &Tbox) -> Result<(), Vec<Violation>> {
    let mut bad = Vec::new();
    let mut push = |axiom: &NormGci, reason| {
        bad.push(Violation {
            axiom: *axiom,
            reason,
        })
    };
    for ax in tbox.axioms() {
        match *ax {
            NormGci::Sub { lhs, .. } => {
                if lhs.is_bot() {
                    push(ax, "Bot on the left-hand side");
                }
            }
            NormGci::ConjSub { lhs1, lhs2, rhs } => {
                if !lhs1.is_named() || !lhs2.is_named() {
                    push(ax, "Top or Bot in a conjunction on the left-hand side");
                }
                if rhs.is_top() {
                    push(ax, "Top as right-hand side of a conjunction axiom");
                }
            }
            NormGci::ExRight { lhs, filler, .. } => {
                if filler.is_bot() {
                    push(ax, "unsatisfiable filler `exists s . Bot`; normalize first");
                }
                if lhs.is_bot() {
                    push(ax, "Bot on the left-hand side");
                }
            }
            NormGci::ExLeft { filler, rhs, .. } => {
                if filler.is_bot() {
                    push(ax, "unsatisfiable filler `exists s . Bot`; normalize first");
                }
                if rhs.is_top() {
                    push(ax, "Top as right-hand side of an existential axiom");
                }
            }
        }
    }
    if bad.is_empty() {
        Ok(())
    } else {
        Err(bad)
    }
}
