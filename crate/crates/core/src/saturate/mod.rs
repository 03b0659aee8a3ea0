//! Reference semantics: type closure, ABox saturation, and oracle entailment.
//!
//! The closure works on types rather than on an explicit anonymous tree. An
//! anonymous element's type depends only on its seed (the filler plus what its
//! parent pushes down along the inverse role), so closures are memoized by
//! seed and computed as one global fixpoint over all seeds met on the way.

mod chase;

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};

use indexmap::IndexMap;

use crate::kb::{AboxGraph, ConceptId, IndId, NormGci, RoleExpr, Tbox};
use crate::typeset::TypeSet;

pub use chase::{validate_trace, Chase, DerivationTrace, Fact, Rule, TraceError, TraceNode, TraceStep};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SaturateError {
    #[error("individual #{} does not occur in the ABox", .0 .0)]
    UnknownIndividual(IndId),
}

/// Rule indexes for one TBox plus the closure memo.
#[derive(Debug)]
pub struct Reasoner {
    universe: usize,
    sub_from: Vec<Vec<ConceptId>>,
    conj_from: Vec<Vec<(ConceptId, ConceptId)>>,
    ex_right: Vec<Vec<(RoleExpr, ConceptId)>>,
    ex_left: BTreeMap<RoleExpr, Vec<(ConceptId, ConceptId)>>,
    memo: RefCell<HashMap<TypeSet, TypeSet>>,
}

impl Reasoner {
    /// `universe` is the number of concept ids in play; it is raised to
    /// cover every id mentioned by `tbox`.
    pub fn new(tbox: &Tbox, universe: usize) -> Self {
        let universe = tbox
            .concepts()
            .iter()
            .map(|c| c.index() + 1)
            .max()
            .unwrap_or(2)
            .max(universe)
            .max(2);
        let mut r = Reasoner {
            universe,
            sub_from: vec![Vec::new(); universe],
            conj_from: vec![Vec::new(); universe],
            ex_right: vec![Vec::new(); universe],
            ex_left: BTreeMap::new(),
            memo: RefCell::new(HashMap::new()),
        };
        for ax in tbox.axioms() {
            match *ax {
                NormGci::Sub { lhs, rhs } => r.sub_from[lhs.index()].push(rhs),
                NormGci::ConjSub { lhs1, lhs2, rhs } => {
                    r.conj_from[lhs1.index()].push((lhs2, rhs));
                    r.conj_from[lhs2.index()].push((lhs1, rhs));
                }
                NormGci::ExRight { lhs, role, filler } => r.ex_right[lhs.index()].push((role, filler)),
                NormGci::ExLeft { role, filler, rhs } => {
                    r.ex_left.entry(role).or_default().push((filler, rhs))
                }
            }
        }
        r
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn empty_type(&self) -> TypeSet {
        TypeSet::top(self.universe)
    }

    pub fn type_of(&self, items: impl IntoIterator<Item = ConceptId>) -> TypeSet {
        TypeSet::with_concepts(self.universe, items)
    }

    /// Number of memoized seeds.
    pub fn memo_len(&self) -> usize {
        self.memo.borrow().len()
    }

    /// Closes `s` under `A ⊑ B` and `A ⊓ B ⊑ C`; `⊥` makes it full.
    pub fn local_close(&self, s: &mut TypeSet) {
        if s.has_bot() {
            s.make_full();
            return;
        }
        let mut stack: Vec<ConceptId> = s.iter().collect();
        while let Some(c) = stack.pop() {
            for &d in &self.sub_from[c.index()] {
                if s.insert(d) {
                    stack.push(d);
                }
            }
            for &(o, d) in &self.conj_from[c.index()] {
                if s.contains(o) && s.insert(d) {
                    stack.push(d);
                }
            }
        }
        if s.has_bot() {
            s.make_full();
        }
    }

    /// `ExLeft(s, C, E)` consequences for a node whose `s`-neighbour has type `other`.
    pub fn push_back(&self, s: RoleExpr, other: &TypeSet, into: &mut TypeSet) {
        if let Some(rules) = self.ex_left.get(&s) {
            for &(f, e) in rules {
                if other.contains(f) {
                    into.insert(e);
                }
            }
        }
    }

    fn child_seed(&self, parent: &TypeSet, s: RoleExpr, filler: ConceptId) -> TypeSet {
        let mut seed = self.type_of([filler]);
        self.push_back(s.inverse(), parent, &mut seed);
        self.local_close(&mut seed);
        seed
    }

    /// Every concept entailed for an individual whose only assertions are
    /// `seed`, under the TBox of this reasoner.
    pub fn closure(&self, seed: &TypeSet) -> TypeSet {
        let mut key = seed.clone();
        self.local_close(&mut key);
        if let Some(v) = self.memo.borrow().get(&key) {
            return v.clone();
        }
        let mut pending: IndexMap<TypeSet, TypeSet> = IndexMap::new();
        pending.insert(key.clone(), key.clone());
        loop {
            let mut changed = false;
            let mut i = 0;
            while i < pending.len() {
                let before = pending[i].clone();
                let mut cur = before.clone();
                if !cur.is_full() {
                    let present: Vec<ConceptId> = cur.iter().collect();
                    'rules: for c in present {
                        for &(s, d) in &self.ex_right[c.index()] {
                            let child_key = self.child_seed(&cur, s, d);
                            let child = match self.memo.borrow().get(&child_key) {
                                Some(v) => v.clone(),
                                None => match pending.get(&child_key) {
                                    Some(v) => v.clone(),
                                    None => {
                                        pending.insert(child_key.clone(), child_key.clone());
                                        changed = true;
                                        child_key
                                    }
                                },
                            };
                            if child.has_bot() {
                                cur.make_full();
                                break 'rules;
                            }
                            self.push_back(s, &child, &mut cur);
                        }
                    }
                    self.local_close(&mut cur);
                }
                if cur != before {
                    pending[i] = cur;
                    changed = true;
                }
                i += 1;
            }
            if !changed {
                break;
            }
        }
        let result = pending[&key].clone();
        self.memo.borrow_mut().extend(pending);
        result
    }

    pub fn closure_of(&self, items: impl IntoIterator<Item = ConceptId>) -> TypeSet {
        self.closure(&self.type_of(items))
    }
}

/// Fixpoint labelling of every individual.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Saturation {
    pub labels: BTreeMap<IndId, TypeSet>,
    pub consistent: bool,
}

impl Saturation {
    pub fn entails(&self, c: ConceptId, a: IndId) -> bool {
        !self.consistent || self.labels.get(&a).is_some_and(|l| l.contains(c))
    }
}

pub fn saturate_abox(reasoner: &Reasoner, abox: &AboxGraph) -> Saturation {
    let mut labels: BTreeMap<IndId, TypeSet> = abox
        .individuals()
        .iter()
        .map(|&a| (a, reasoner.type_of(abox.asserted(a).iter().copied())))
        .collect();
    loop {
        let mut changed = false;
        for &a in abox.individuals() {
            let mut cur = labels[&a].clone();
            for (s, b) in abox.edges(a) {
                reasoner.push_back(s, &labels[&b], &mut cur);
            }
            let cur = reasoner.closure(&cur);
            if cur != labels[&a] {
                labels.insert(a, cur);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let consistent = !labels.values().any(TypeSet::has_bot);
    Saturation { labels, consistent }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleAnswer {
    pub entailed: bool,
    pub consistent: bool,
    /// Present when the answer is true, the KB is consistent, and a
    /// derivation was found within the chase budget.
    pub trace: Option<DerivationTrace>,
}

/// Node budget for trace search.
pub const TRACE_NODE_CAP: usize = 20_000;

/// Decides `(tbox, abox) ⊨ c(a)` by saturation, optionally with a derivation.
pub fn oracle_entails(
    tbox: &Tbox,
    abox: &AboxGraph,
    universe: usize,
    c: ConceptId,
    a: IndId,
    want_trace: bool,
) -> Result<OracleAnswer, SaturateError> {
    if !abox.contains(a) {
        return Err(SaturateError::UnknownIndividual(a));
    }
    let reasoner = Reasoner::new(tbox, universe);
    let sat = saturate_abox(&reasoner, abox);
    let entailed = sat.entails(c, a);
    let trace = if want_trace && entailed && sat.consistent {
        Chase::find_trace(tbox, abox, c, a, TRACE_NODE_CAP)
    } else {
        None
    };
    Ok(OracleAnswer {
        entailed,
        consistent: sat.consistent,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::{normalize, parse_kb, KnowledgeBase};

    fn load(text: &str) -> (KnowledgeBase, Tbox) {
        let mut kb = parse_kb(text).unwrap();
        let (t, _) = normalize(&kb.tbox, &mut kb.vocab);
        (kb, t)
    }

    const T_EX: &str = "tbox:\nA <= B\nA & B <= C\nC <= exists r . Top\nexists r . Top <= D\nabox:\nA(a)\nTop(b)\n";

    fn names(kb: &KnowledgeBase, s: &TypeSet) -> Vec<String> {
        s.iter().map(|c| kb.vocab.concept_name(c).to_string()).collect()
    }

    #[test]
    fn example_closure() {
        let (kb, t) = load(T_EX);
        let r = Reasoner::new(&t, kb.vocab.concept_count());
        let a = kb.vocab.find_concept("A").unwrap();
        assert_eq!(names(&kb, &r.closure_of([a])), ["Top", "A", "B", "C", "D"]);
        assert_eq!(r.closure_of([]).len(), 1);
    }

    #[test]
    fn ex_falso_fills_the_type() {
        let (kb, t) = load("tbox:\nA <= bot\nB <= C\n");
        let r = Reasoner::new(&t, kb.vocab.concept_count());
        let a = kb.vocab.find_concept("A").unwrap();
        assert!(r.closure_of([a]).is_full());
    }

    #[test]
    fn anonymous_bottom_propagates() {
        let (kb, t) = load("tbox:\nA <= exists r . B\nexists inv r . A <= E\nE & B <= bot\n");
        let r = Reasoner::new(&t, kb.vocab.concept_count());
        let a = kb.vocab.find_concept("A").unwrap();
        assert!(r.closure_of([a]).has_bot());
    }

    #[test]
    fn back_propagation_through_the_parent() {
        // The successor learns A from its parent, derives B, and reports back.
        let (kb, t) = load("tbox:\nA <= exists r . Top\nexists inv r . A <= B\nexists r . B <= C\n");
        let r = Reasoner::new(&t, kb.vocab.concept_count());
        let a = kb.vocab.find_concept("A").unwrap();
        let c = kb.vocab.find_concept("C").unwrap();
        assert!(r.closure_of([a]).contains(c));
    }

    #[test]
    fn chain_saturation() {
        let (kb, t) = load("tbox:\nexists r . A <= A\nabox:\nr(a1, a2)\nr(a2, a3)\nA(a3)\n");
        let r = Reasoner::new(&t, kb.vocab.concept_count());
        let sat = saturate_abox(&r, &kb.abox);
        let a = kb.vocab.find_concept("A").unwrap();
        assert!(sat.consistent);
        assert!(sat.labels.values().all(|l| l.contains(a)));
    }

    #[test]
    fn asserted_bottom_is_inconsistent() {
        let (kb, t) = load("tbox:\nabox:\nBot(b)\nr(a, b)\n");
        let z = {
            let mut v = kb.vocab.clone();
            v.concept("Z")
        };
        let a = kb.vocab.find_individual("a").unwrap();
        let ans = oracle_entails(&t, &kb.abox, kb.vocab.concept_count() + 1, z, a, true).unwrap();
        assert!(ans.entailed && !ans.consistent && ans.trace.is_none());
    }

    #[test]
    fn example_entailment_with_trace() {
        let (kb, t) = load(T_EX);
        let d = kb.vocab.find_concept("D").unwrap();
        let a = kb.vocab.find_individual("a").unwrap();
        let b = kb.vocab.find_individual("b").unwrap();
        let ans = oracle_entails(&t, &kb.abox, kb.vocab.concept_count(), d, a, true).unwrap();
        assert!(ans.entailed);
        let trace = ans.trace.unwrap();
        assert_eq!(trace.steps.len(), 4);
        validate_trace(&t, &kb.abox, &trace, d, a).unwrap();
        let no = oracle_entails(&t, &kb.abox, kb.vocab.concept_count(), d, b, true).unwrap();
        assert!(!no.entailed);
        let empty = Tbox::default();
        let b_concept = ConceptId(3);
        assert!(!oracle_entails(&empty, &kb.abox, 8, b_concept, a, false).unwrap().entailed);
        assert!(oracle_entails(&t, &kb.abox, 8, d, IndId(99), false).is_err());
    }
}
