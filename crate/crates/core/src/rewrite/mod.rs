//! Nested automata for instance queries.
//!
//! A state is a pair (premise, goal): the concepts already known at the
//! current node and the one still to be shown. Transitions read the ABox
//! (concept tests, role steps), run backward over the TBox axioms, or
//! delegate to automata of lower height. Automata are explored lazily through
//! [`Rewriting`]; [`build_automaton`] materializes the reachable part.

mod export;

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::rc::Rc;

use crate::kb::{ConceptId, NormGci, RoleExpr, Symbol, Tbox, Vocabulary};
use crate::saturate::Reasoner;
use crate::stratify::{restrict, verify_preorder, Heights, VerifyError};
use crate::typeset::TypeSet;

pub use export::{export_automaton, ExportFormat};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RewriteError {
    #[error("heights do not stratify the TBox: {0}")]
    NotStratified(#[from] VerifyError),
    #[error("concept #{} does not occur in the TBox", .0 .0)]
    UnknownConcept(ConceptId),
    #[error("automaton exceeds {limit} reachable states")]
    TooLarge { limit: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AutState {
    pub premise: TypeSet,
    pub goal: ConceptId,
}

impl AutState {
    pub fn accepting(&self) -> bool {
        self.premise.contains(self.goal) || self.premise.has_bot()
    }

    pub fn display<'a>(&'a self, vocab: &'a Vocabulary) -> impl fmt::Display + 'a {
        StateDisplay { state: self, vocab }
    }
}

struct StateDisplay<'a> {
    state: &'a AutState,
    vocab: &'a Vocabulary,
}

impl fmt::Display for StateDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} / {}",
            self.state.premise.display(self.vocab),
            self.vocab.concept_name(self.state.goal)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AutSymbol {
    Role(RoleExpr),
    Concept(ConceptId),
    /// `⊤?`, the test that always holds.
    Top,
    /// Delegation to the automaton of a lower concept.
    Auto(ConceptId),
}

impl AutSymbol {
    pub fn text(&self, vocab: &Vocabulary) -> String {
        match *self {
            AutSymbol::Role(s) => vocab.role_expr_text(s),
            AutSymbol::Concept(c) => format!("{}?", vocab.concept_name(c)),
            AutSymbol::Top => "Top?".to_string(),
            AutSymbol::Auto(c) => format!("aut({})?", vocab.concept_name(c)),
        }
    }
}

/// The rule schema that licenses a transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RuleKind {
    Weak,
    Data,
    Sbus,
    Succ,
    Anon,
    Noc,
    Aut,
}

impl RuleKind {
    pub fn name(self) -> &'static str {
        match self {
            RuleKind::Weak => "weak",
            RuleKind::Data => "data",
            RuleKind::Sbus => "sbus",
            RuleKind::Succ => "succ",
            RuleKind::Anon => "anon",
            RuleKind::Noc => "noc",
            RuleKind::Aut => "aut",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RewriteOptions {
    pub include_weak: bool,
}

/// `T|n` with its closure reasoner and signature.
#[derive(Debug)]
pub struct Level {
    pub n: u32,
    pub tbox: Tbox,
    pub reasoner: Reasoner,
    /// Concept ids occurring in `T|n` (with `Top`/`Bot` only if they occur).
    pub names: BTreeSet<ConceptId>,
    /// Concept names of `T|n-1`, the targets of automaton tests.
    pub lower: Vec<ConceptId>,
    pub roles: BTreeSet<RoleExpr>,
}

/// One outgoing transition.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Step {
    pub symbol: AutSymbol,
    pub target: AutState,
    pub rule: RuleKind,
}

/// Anything that can enumerate the transitions of the automaton family.
pub trait NfaSource {
    /// Nesting level of the automaton for `a`.
    fn level_of(&self, a: ConceptId) -> u32;
    fn initial(&self, a: ConceptId) -> AutState;
    fn successors(&self, a: ConceptId, q: &AutState) -> Rc<Vec<Step>>;
}

/// Lazy rewriting of every concept of a stratified TBox.
#[derive(Debug)]
pub struct Rewriting<'t> {
    tbox: &'t Tbox,
    heights: Heights,
    universe: usize,
    options: RewriteOptions,
    levels: RefCell<BTreeMap<u32, Rc<Level>>>,
    succ_memo: RefCell<HashMap<(ConceptId, AutState), Rc<Vec<Step>>>>,
}

impl<'t> Rewriting<'t> {
    pub fn new(tbox: &'t Tbox, heights: Heights, universe: usize, options: RewriteOptions) -> Self {
        let universe = Reasoner::new(tbox, universe).universe();
        Rewriting {
            tbox,
            heights,
            universe,
            options,
            levels: RefCell::new(BTreeMap::new()),
            succ_memo: RefCell::new(HashMap::new()),
        }
    }

    pub fn heights(&self) -> &Heights {
        &self.heights
    }

    pub fn tbox(&self) -> &Tbox {
        self.tbox
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn options(&self) -> RewriteOptions {
        self.options
    }

    /// Level at which the automaton for `⊥` lives: everything of the TBox.
    pub fn bot_level(&self) -> u32 {
        self.heights.max() + 1
    }

    pub fn level(&self, n: u32) -> Rc<Level> {
        if let Some(l) = self.levels.borrow().get(&n) {
            return l.clone();
        }
        let tbox = restrict(self.tbox, &self.heights, n as i64);
        let lower_tbox = restrict(self.tbox, &self.heights, n as i64 - 1);
        let reasoner = Reasoner::new(&tbox, self.universe);
        let names = tbox.concepts().clone();
        let lower = lower_tbox.concept_names().collect();
        let roles = tbox
            .axioms()
            .iter()
            .filter_map(NormGci::role)
            .flat_map(|s| [s, s.inverse()])
            .collect();
        let level = Rc::new(Level {
            n,
            tbox,
            reasoner,
            names,
            lower,
            roles,
        });
        self.levels.borrow_mut().insert(n, level.clone());
        level
    }

    /// `con` of the automaton for `a`: the level signature plus `a` itself.
    pub fn con(&self, a: ConceptId) -> BTreeSet<ConceptId> {
        let mut names = self.level(self.level_of(a)).names.clone();
        names.insert(a);
        names
    }

    fn compute_successors(&self, a: ConceptId, q: &AutState) -> Vec<Step> {
        let level = self.level(self.level_of(a));
        let con = self.con(a);
        let mut out: Vec<Step> = Vec::new();
        let mut seen: BTreeSet<(AutSymbol, AutState)> = BTreeSet::new();
        let mut push = |symbol: AutSymbol, target: AutState, rule: RuleKind| {
            if seen.insert((symbol, target.clone())) {
                out.push(Step { symbol, target, rule });
            }
        };
        let goal = q.goal;

        if self.options.include_weak {
            let items: Vec<ConceptId> = q.premise.iter().filter(|c| !c.is_top()).collect();
            assert!(items.len() < 24, "premise too large for weak transitions");
            for mask in 0u32..(1u32 << items.len()) {
                let kept = items
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask & (1 << i) != 0)
                    .map(|(_, c)| *c);
                let premise = TypeSet::with_concepts(self.universe, kept);
                push(AutSymbol::Top, AutState { premise, goal }, RuleKind::Weak);
            }
        }
        for &b in &con {
            if b.is_top() {
                continue;
            }
            let mut premise = q.premise.clone();
            premise.insert(b);
            push(AutSymbol::Concept(b), AutState { premise, goal }, RuleKind::Data);
        }
        for ax in level.tbox.with_rhs(goal) {
            if let NormGci::Sub { lhs, .. } = *ax {
                let target = AutState {
                    premise: q.premise.clone(),
                    goal: lhs,
                };
                push(AutSymbol::Top, target, RuleKind::Sbus);
            }
        }
        for ax in level.tbox.with_rhs(goal) {
            if let NormGci::ExLeft { role, filler, .. } = *ax {
                let target = AutState {
                    premise: TypeSet::top(self.universe),
                    goal: filler,
                };
                push(AutSymbol::Role(role), target, RuleKind::Succ);
            }
        }
        for &b in &con {
            let mut seed = q.premise.clone();
            seed.insert(b);
            if level.reasoner.closure(&seed).contains(goal) {
                let target = AutState {
                    premise: q.premise.clone(),
                    goal: b,
                };
                push(AutSymbol::Top, target, RuleKind::Anon);
            }
        }
        for ax in level.tbox.with_rhs(goal) {
            if let NormGci::ConjSub { lhs1, lhs2, .. } = *ax {
                for (have, need) in [(lhs1, lhs2), (lhs2, lhs1)] {
                    if q.premise.contains(have) {
                        let target = AutState {
                            premise: q.premise.clone(),
                            goal: need,
                        };
                        push(AutSymbol::Top, target, RuleKind::Noc);
                    }
                }
            }
        }
        for &b in &level.lower {
            let mut premise = q.premise.clone();
            premise.insert(b);
            push(AutSymbol::Auto(b), AutState { premise, goal }, RuleKind::Aut);
        }
        out
    }
}

impl NfaSource for Rewriting<'_> {
    fn level_of(&self, a: ConceptId) -> u32 {
        if a.is_bot() {
            self.bot_level()
        } else {
            self.heights.concept(a)
        }
    }

    fn initial(&self, a: ConceptId) -> AutState {
        AutState {
            premise: TypeSet::top(self.universe),
            goal: a,
        }
    }

    fn successors(&self, a: ConceptId, q: &AutState) -> Rc<Vec<Step>> {
        let key = (a, q.clone());
        if let Some(v) = self.succ_memo.borrow().get(&key) {
            return v.clone();
        }
        let v = Rc::new(self.compute_successors(a, q));
        self.succ_memo.borrow_mut().insert(key, v.clone());
        v
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub from: usize,
    pub symbol: AutSymbol,
    pub to: usize,
    pub rule: RuleKind,
}

/// The reachable part of one automaton. State 0 is initial.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Nfa {
    pub for_concept: ConceptId,
    pub level: u32,
    pub states: Vec<AutState>,
    pub transitions: Vec<Transition>,
    pub weak_included: bool,
    /// Concept tests, role steps and automaton tests of the alphabet.
    pub alphabet: Vec<AutSymbol>,
    index: HashMap<AutState, usize>,
    out: Vec<Vec<usize>>,
}

impl Nfa {
    pub fn initial(&self) -> &AutState {
        &self.states[0]
    }

    pub fn accepting(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.states.len()).filter(|&i| self.states[i].accepting())
    }

    pub fn state_index(&self, q: &AutState) -> Option<usize> {
        self.index.get(q).copied()
    }

    pub fn outgoing(&self, i: usize) -> impl Iterator<Item = &Transition> + '_ {
        self.out[i].iter().map(move |&t| &self.transitions[t])
    }
}

/// An automaton together with every automaton its tests refer to,
/// transitively.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NestedNfa {
    pub root: Nfa,
    pub nested: BTreeMap<ConceptId, Nfa>,
}

impl NestedNfa {
    pub fn get(&self, a: ConceptId) -> Option<&Nfa> {
        if a == self.root.for_concept {
            Some(&self.root)
        } else {
            self.nested.get(&a)
        }
    }

    pub fn state_count(&self) -> usize {
        self.root.states.len() + self.nested.values().map(|n| n.states.len()).sum::<usize>()
    }
}

impl NfaSource for NestedNfa {
    fn level_of(&self, a: ConceptId) -> u32 {
        self.get(a).map(|n| n.level).unwrap_or(0)
    }

    fn initial(&self, a: ConceptId) -> AutState {
        self.get(a).expect("automaton present").initial().clone()
    }

    fn successors(&self, a: ConceptId, q: &AutState) -> Rc<Vec<Step>> {
        let nfa = self.get(a).expect("automaton present");
        let Some(i) = nfa.state_index(q) else {
            return Rc::new(Vec::new());
        };
        Rc::new(
            nfa.outgoing(i)
                .map(|t| Step {
                    symbol: t.symbol,
                    target: nfa.states[t.to].clone(),
                    rule: t.rule,
                })
                .collect(),
        )
    }
}

/// Default bound on materialized states per automaton.
pub const MAX_STATES: usize = 200_000;

fn alphabet(rw: &Rewriting<'_>, a: ConceptId) -> Vec<AutSymbol> {
    let level = rw.level(rw.level_of(a));
    let mut out: Vec<AutSymbol> = rw
        .con(a)
        .into_iter()
        .filter(|c| !c.is_top())
        .map(AutSymbol::Concept)
        .collect();
    out.push(AutSymbol::Top);
    out.extend(level.roles.iter().map(|s| AutSymbol::Role(*s)));
    out.extend(level.lower.iter().map(|b| AutSymbol::Auto(*b)));
    out
}

/// Materializes the reachable states of the automaton for `a` from a lazy
/// rewriting.
pub fn materialize(rw: &Rewriting<'_>, a: ConceptId, limit: usize) -> Result<Nfa, RewriteError> {
    let init = rw.initial(a);
    let mut states = vec![init.clone()];
    let mut index = HashMap::from([(init, 0usize)]);
    let mut transitions = Vec::new();
    let mut out: Vec<Vec<usize>> = vec![Vec::new()];
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        let q = states[i].clone();
        for st in rw.successors(a, &q).iter() {
            let j = match index.get(&st.target) {
                Some(&j) => j,
                None => {
                    if states.len() >= limit {
                        return Err(RewriteError::TooLarge { limit });
                    }
                    let j = states.len();
                    states.push(st.target.clone());
                    index.insert(st.target.clone(), j);
                    out.push(Vec::new());
                    queue.push_back(j);
                    j
                }
            };
            out[i].push(transitions.len());
            transitions.push(Transition {
                from: i,
                symbol: st.symbol,
                to: j,
                rule: st.rule,
            });
        }
    }
    Ok(Nfa {
        for_concept: a,
        level: rw.level_of(a),
        states,
        transitions,
        weak_included: rw.options().include_weak,
        alphabet: alphabet(rw, a),
        index,
        out,
    })
}

/// Builds the automaton for `a` and every automaton it delegates to.
/// `a` may be `Bot`, giving the automaton used by the experimental
/// consistency check.
pub fn build_automaton(
    tbox: &Tbox,
    heights: &Heights,
    universe: usize,
    a: ConceptId,
    options: RewriteOptions,
) -> Result<NestedNfa, RewriteError> {
    let map: BTreeMap<Symbol, i64> = tbox.symbols().into_iter().map(|s| (s, heights.of(s) as i64)).collect();
    verify_preorder(tbox, &map)?;
    if !a.is_bot() && !tbox.concepts().contains(&a) {
        return Err(RewriteError::UnknownConcept(a));
    }
    let rw = Rewriting::new(tbox, heights.clone(), universe, options);
    let root = materialize(&rw, a, MAX_STATES)?;
    let mut nested = BTreeMap::new();
    let mut todo: Vec<ConceptId> = root.alphabet.iter().filter_map(auto_target).collect();
    while let Some(b) = todo.pop() {
        if nested.contains_key(&b) || b == a {
            continue;
        }
        let nfa = materialize(&rw, b, MAX_STATES)?;
        todo.extend(nfa.alphabet.iter().filter_map(auto_target));
        nested.insert(b, nfa);
    }
    Ok(NestedNfa { root, nested })
}

fn auto_target(s: &AutSymbol) -> Option<ConceptId> {
    match s {
        AutSymbol::Auto(b) => Some(*b),
        _ => None,
    }
}
