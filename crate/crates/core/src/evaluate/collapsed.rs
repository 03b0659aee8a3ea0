use std::cell::{Cell, RefCell};
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::rc::Rc;

use super::{EvalOutcome, RunWitness, WitnessStep};
use crate::kb::{AboxGraph, ConceptId, IndId, NormGci, RoleExpr};
use crate::rewrite::{AutState, AutSymbol, Level, NfaSource, Rewriting};
use crate::typeset::TypeSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Edge {
    Local,
    Role(RoleExpr),
}

type Node = (IndId, ConceptId);

/// Evaluator over (individual, goal) pairs.
///
/// Automaton tests of lower levels are decided for all individuals at once
/// by a backward fixpoint, bottom-up; the queried level is searched forward
/// so that a run can be reconstructed.
#[derive(Debug)]
pub struct Collapsed<'r, 't> {
    rw: &'r Rewriting<'t>,
    abox: &'r AboxGraph,
    tables: RefCell<BTreeMap<u32, Rc<HashSet<Node>>>>,
    labels: RefCell<HashMap<(u32, IndId, bool), TypeSet>>,
    visited: Cell<usize>,
}

impl<'r, 't> Collapsed<'r, 't> {
    pub fn new(rw: &'r Rewriting<'t>, abox: &'r AboxGraph) -> Self {
        Collapsed {
            rw,
            abox,
            tables: RefCell::new(BTreeMap::new()),
            labels: RefCell::new(HashMap::new()),
            visited: Cell::new(0),
        }
    }

    pub fn visited(&self) -> usize {
        self.visited.get()
    }

    /// Everything a run can learn at `x` without leaving it: asserted
    /// concepts and the lower automaton tests that succeed there.
    pub fn label(&self, k: u32, x: IndId, bot_query: bool) -> TypeSet {
        if let Some(l) = self.labels.borrow().get(&(k, x, bot_query)) {
            return l.clone();
        }
        let level = self.rw.level(k);
        let mut l = TypeSet::top(self.rw.universe());
        for &c in self.abox.asserted(x) {
            if c.is_named() || level.names.contains(&c) || (bot_query && c.is_bot()) {
                l.insert(c);
            }
        }
        for &b in &level.lower {
            if self.lower_accepts(b, x) {
                l.insert(b);
            }
        }
        self.labels.borrow_mut().insert((k, x, bot_query), l.clone());
        l
    }

    fn lower_accepts(&self, b: ConceptId, x: IndId) -> bool {
        self.table(self.rw.level_of(b)).contains(&(x, b))
    }

    fn table(&self, k: u32) -> Rc<HashSet<Node>> {
        if let Some(t) = self.tables.borrow().get(&k) {
            return t.clone();
        }
        let level = self.rw.level(k);
        let mut goals: BTreeSet<ConceptId> = level.names.clone();
        goals.extend(
            self.rw
                .tbox()
                .concept_names()
                .filter(|&c| self.rw.heights().concept(c) == k),
        );
        let mut reverse: HashMap<Node, Vec<Node>> = HashMap::new();
        let mut good: HashSet<Node> = HashSet::new();
        let mut queue = VecDeque::new();
        for &x in self.abox.individuals() {
            let label = self.label(k, x, false);
            for &g in &goals {
                self.visited.set(self.visited.get() + 1);
                if label.contains(g) || label.has_bot() {
                    good.insert((x, g));
                    queue.push_back((x, g));
                    continue;
                }
                for (to, _) in self.edges(&level, &label, x, g) {
                    reverse.entry(to).or_default().push((x, g));
                }
            }
        }
        while let Some(n) = queue.pop_front() {
            if let Some(preds) = reverse.get(&n) {
                for &p in preds {
                    if good.insert(p) {
                        queue.push_back(p);
                    }
                }
            }
        }
        let t = Rc::new(good);
        self.tables.borrow_mut().insert(k, t.clone());
        t
    }

    fn edges(&self, level: &Level, label: &TypeSet, x: IndId, g: ConceptId) -> Vec<(Node, Edge)> {
        let mut out = Vec::new();
        for ax in level.tbox.with_rhs(g) {
            match *ax {
                NormGci::Sub { lhs, .. } => out.push(((x, lhs), Edge::Local)),
                NormGci::ConjSub { lhs1, lhs2, .. } => {
                    if label.contains(lhs1) {
                        out.push(((x, lhs2), Edge::Local));
                    }
                    if label.contains(lhs2) {
                        out.push(((x, lhs1), Edge::Local));
                    }
                }
                NormGci::ExLeft { role, filler, .. } => {
                    for y in self.abox.neighbours(x, role) {
                        out.push(((y, filler), Edge::Role(role)));
                    }
                }
                NormGci::ExRight { .. } => {}
            }
        }
        for &b in &level.names {
            let mut seed = label.clone();
            seed.insert(b);
            if level.reasoner.closure(&seed).contains(g) {
                out.push(((x, b), Edge::Local));
            }
        }
        out
    }

    /// Decides the automaton for `q` from `x`; with `want_witness` an
    /// accepting run is reconstructed.
    pub fn run(&self, q: ConceptId, x: IndId, want_witness: bool) -> EvalOutcome {
        let before = self.visited.get();
        let witness = self.search(q, x, want_witness);
        EvalOutcome {
            accepted: witness.is_some(),
            visited: self.visited.get() - before,
            witness: witness.filter(|_| want_witness),
        }
    }

    pub fn accepts(&self, q: ConceptId, x: IndId) -> bool {
        self.search(q, x, false).is_some()
    }

    fn search(&self, q: ConceptId, x: IndId, want_witness: bool) -> Option<RunWitness> {
        if !self.abox.contains(x) {
            return None;
        }
        let k = self.rw.level_of(q);
        let bot = q.is_bot();
        let level = self.rw.level(k);
        let mut parent: HashMap<Node, Option<(Node, Edge)>> = HashMap::from([((x, q), None)]);
        let mut queue = VecDeque::from([(x, q)]);
        while let Some(n) = queue.pop_front() {
            self.visited.set(self.visited.get() + 1);
            let label = self.label(k, n.0, bot);
            if label.contains(n.1) || label.has_bot() {
                if !want_witness {
                    return Some(RunWitness {
                        concept: q,
                        start: x,
                        steps: Vec::new(),
                    });
                }
                let mut path = vec![(n, None)];
                let mut cur = n;
                while let Some(Some((prev, e))) = parent.get(&cur) {
                    path.push((*prev, Some(*e)));
                    cur = *prev;
                }
                path.reverse();
                return Some(self.witness(q, &level, path));
            }
            for (to, e) in self.edges(&level, &label, n.0, n.1) {
                if let std::collections::hash_map::Entry::Vacant(v) = parent.entry(to) {
                    v.insert(Some((n, e)));
                    queue.push_back(to);
                }
            }
        }
        None
    }

    /// Turns a path of collapsed nodes into a run of the automaton for `q`.
    /// `path[i].1` is the edge leaving `path[i].0`, or `None` at the end.
    fn witness(&self, q: ConceptId, level: &Level, path: Vec<(Node, Option<Edge>)>) -> RunWitness {
        let con = self.rw.con(q);
        let universe = self.rw.universe();
        let mut steps = Vec::new();
        let start = path[0].0 .0;
        let arrive = |x: IndId, goal: ConceptId, steps: &mut Vec<WitnessStep>| -> TypeSet {
            let mut p = TypeSet::top(universe);
            for c in self.label(level.n, x, q.is_bot()).iter() {
                if c.is_top() {
                    continue;
                }
                let (symbol, nested) = if self.abox.has_concept(x, c) && con.contains(&c) {
                    (AutSymbol::Concept(c), None)
                } else if level.lower.contains(&c) {
                    (AutSymbol::Auto(c), self.search(c, x, true).map(Box::new))
                } else {
                    continue;
                };
                let state = AutState { premise: p.clone(), goal };
                p.insert(c);
                steps.push(WitnessStep {
                    from: x,
                    state,
                    symbol,
                    to: x,
                    target: AutState { premise: p.clone(), goal },
                    nested,
                });
            }
            p
        };
        let mut premise = arrive(start, q, &mut steps);
        for w in path.windows(2) {
            let ((x, g), e) = w[0];
            let (y, h) = w[1].0;
            let state = AutState { premise: premise.clone(), goal: g };
            match e.expect("inner path node has an edge") {
                Edge::Local => {
                    steps.push(WitnessStep {
                        from: x,
                        state,
                        symbol: AutSymbol::Top,
                        to: x,
                        target: AutState { premise: premise.clone(), goal: h },
                        nested: None,
                    });
                }
                Edge::Role(r) => {
                    steps.push(WitnessStep {
                        from: x,
                        state,
                        symbol: AutSymbol::Role(r),
                        to: y,
                        target: AutState {
                            premise: TypeSet::top(universe),
                            goal: h,
                        },
                        nested: None,
                    });
                    premise = arrive(y, h, &mut steps);
                }
            }
        }
        RunWitness {
            concept: q,
            start,
            steps,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluate::{eval_naive, validate_witness};
    use crate::kb::{normalize, parse_kb};
    use crate::rewrite::RewriteOptions;
    use crate::stratify::check_stratification;

    #[test]
    fn collapsed_matches_naive_with_valid_runs() {
        let text = "tbox:\nexists r . B <= C\nA <= B\nA & C <= E\nE <= exists s . Top\nexists s . Top <= F\nexists r . F <= G\nabox:\nr(a, b)\nA(b)\nA(a)\nr(c, a)\n";
        let mut kb = parse_kb(text).unwrap();
        let (t, _) = normalize(&kb.tbox, &mut kb.vocab);
        let h = check_stratification(&t).unwrap().heights;
        let rw = Rewriting::new(&t, h, kb.vocab.concept_count(), RewriteOptions::default());
        let col = Collapsed::new(&rw, &kb.abox);
        let mut positives = 0;
        for &x in kb.abox.individuals() {
            for c in t.concept_names() {
                let fast = col.run(c, x, true);
                let slow = eval_naive(&rw, &kb.abox, c, x, false);
                assert_eq!(fast.accepted, slow.accepted, "{} {}", kb.vocab.concept_name(c), kb.vocab.individual_name(x));
                if let Some(w) = fast.witness {
                    validate_witness(&rw, &kb.abox, &w).unwrap();
                    positives += 1;
                }
            }
        }
        let g = kb.vocab.find_concept("G").unwrap();
        let c = kb.vocab.find_individual("c").unwrap();
        assert!(col.accepts(g, c));
        assert!(positives >= 8);
    }
}
