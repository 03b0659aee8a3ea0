//! Explicit forward chase with fresh individuals, truncated at a depth bound.
//!
//! Every rule application is recorded with its premises, so a derivation of
//! any derived fact can be cut out of the run afterwards. The chase is also
//! the independent reference for the type-level closure.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;

use crate::kb::{AboxGraph, ConceptId, IndId, NormGci, RoleExpr, Tbox, Vocabulary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TraceNode {
    Named(IndId),
    Fresh(u32),
}

/// An assertion. Role facts are stored with a forward role, swapping the
/// endpoints of inverse roles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Fact {
    Concept(ConceptId, TraceNode),
    Role(RoleExpr, TraceNode, TraceNode),
}

impl Fact {
    pub fn role(s: RoleExpr, x: TraceNode, y: TraceNode) -> Fact {
        if s.inverted {
            Fact::Role(s.inverse(), y, x)
        } else {
            Fact::Role(s, x, y)
        }
    }

    pub fn display<'a>(&'a self, vocab: &'a Vocabulary) -> impl fmt::Display + 'a {
        FactDisplay { fact: self, vocab }
    }
}

fn node_text(n: TraceNode, vocab: &Vocabulary) -> String {
    match n {
        TraceNode::Named(a) => vocab.individual_name(a).to_string(),
        TraceNode::Fresh(k) => format!("_:n{k}"),
    }
}

struct FactDisplay<'a> {
    fact: &'a Fact,
    vocab: &'a Vocabulary,
}

impl fmt::Display for FactDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self.fact {
            Fact::Concept(c, n) => write!(f, "{}({})", self.vocab.concept_name(c), node_text(n, self.vocab)),
            Fact::Role(s, x, y) => write!(
                f,
                "{}({}, {})",
                self.vocab.role_expr_text(s),
                node_text(x, self.vocab),
                node_text(y, self.vocab)
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    /// `B(b)` and `B ⊑ C` give `C(b)`.
    Sub,
    /// `B1(b)`, `B2(b)` and `B1 ⊓ B2 ⊑ C` give `C(b)`.
    Conj,
    /// `B(b)` and `B ⊑ ∃s.C` give `s(b, c)` and `C(c)` for a fresh `c`.
    ExistsIntro,
    /// `s(b, c)`, `B(c)` and `∃s.B ⊑ C` give `C(b)`.
    ExistsElim,
    /// `⊥(b)` gives anything.
    ExFalso,
}

impl Rule {
    pub fn name(self) -> &'static str {
        match self {
            Rule::Sub => "sub",
            Rule::Conj => "conj",
            Rule::ExistsIntro => "exists-intro",
            Rule::ExistsElim => "exists-elim",
            Rule::ExFalso => "ex-falso",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceStep {
    pub rule: Rule,
    pub axiom: Option<NormGci>,
    pub premises: Vec<Fact>,
    pub added: Vec<Fact>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DerivationTrace {
    pub steps: Vec<TraceStep>,
}

impl DerivationTrace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// One line per step.
    pub fn lines(&self, vocab: &Vocabulary) -> Vec<String> {
        self.steps
            .iter()
            .enumerate()
            .map(|(i, st)| {
                let added: Vec<String> = st.added.iter().map(|f| f.display(vocab).to_string()).collect();
                let from: Vec<String> = st.premises.iter().map(|f| f.display(vocab).to_string()).collect();
                let axiom = st
                    .axiom
                    .map(|ax| format!(" `{}`", ax.display(vocab)))
                    .unwrap_or_default();
                format!(
                    "{}. {}{}: {} from {}",
                    i + 1,
                    st.rule.name(),
                    axiom,
                    added.join(", "),
                    from.join(", ")
                )
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TraceError {
    #[error("step {step}: premise not yet derived")]
    MissingPremise { step: usize },
    #[error("step {step}: axiom not in the TBox")]
    UnknownAxiom { step: usize },
    #[error("step {step}: conclusion does not match the rule")]
    BadConclusion { step: usize },
    #[error("step {step}: individual is not fresh")]
    NotFresh { step: usize },
    #[error("the trace does not end with the queried assertion")]
    WrongGoal,
}

#[derive(Debug, Clone)]
struct Node {
    name: TraceNode,
    depth: u32,
    label: BTreeSet<ConceptId>,
    adj: Vec<(RoleExpr, usize)>,
}

/// A resumable chase run.
#[derive(Debug)]
pub struct Chase<'t> {
    tbox: &'t Tbox,
    nodes: Vec<Node>,
    by_name: HashMap<TraceNode, usize>,
    origin: HashMap<Fact, usize>,
    steps: Vec<TraceStep>,
    introduced: HashSet<(usize, NormGci)>,
    queue: VecDeque<usize>,
    queued: Vec<bool>,
    max_depth: u32,
    node_cap: usize,
    /// Nodes at the depth bound that wanted to introduce a successor.
    blocked: BTreeSet<usize>,
    capped: bool,
    bot: Option<usize>,
}

impl<'t> Chase<'t> {
    pub fn new(tbox: &'t Tbox, abox: &AboxGraph, node_cap: usize) -> Self {
        let mut ch = Chase {
            tbox,
            nodes: Vec::new(),
            by_name: HashMap::new(),
            origin: HashMap::new(),
            steps: Vec::new(),
            introduced: HashSet::new(),
            queue: VecDeque::new(),
            queued: Vec::new(),
            max_depth: 0,
            node_cap,
            blocked: BTreeSet::new(),
            capped: false,
            bot: None,
        };
        for &a in abox.individuals() {
            let i = ch.add_node(TraceNode::Named(a), 0);
            for &c in abox.asserted(a) {
                ch.nodes[i].label.insert(c);
                if c.is_bot() && ch.bot.is_none() {
                    ch.bot = Some(i);
                }
            }
        }
        for &a in abox.individuals() {
            let i = ch.by_name[&TraceNode::Named(a)];
            for (s, b) in abox.edges(a) {
                let j = ch.by_name[&TraceNode::Named(b)];
                ch.nodes[i].adj.push((s, j));
            }
        }
        ch
    }

    fn add_node(&mut self, name: TraceNode, depth: u32) -> usize {
        let i = self.nodes.len();
        self.nodes.push(Node {
            name,
            depth,
            label: BTreeSet::from([ConceptId::TOP]),
            adj: Vec::new(),
        });
        self.by_name.insert(name, i);
        self.queued.push(false);
        self.enqueue(i);
        i
    }

    fn enqueue(&mut self, i: usize) {
        if !self.queued[i] {
            self.queued[i] = true;
            self.queue.push_back(i);
        }
    }

    fn concept_fact(&self, c: ConceptId, i: usize) -> Fact {
        Fact::Concept(c, self.nodes[i].name)
    }

    fn add_concept(&mut self, i: usize, c: ConceptId, step: TraceStep) {
        if !self.nodes[i].label.insert(c) {
            return;
        }
        let fact = self.concept_fact(c, i);
        self.origin.insert(fact, self.steps.len());
        self.steps.push(step);
        if c.is_bot() && self.bot.is_none() {
            self.bot = Some(i);
        }
        self.enqueue(i);
        let neighbours: Vec<usize> = self.nodes[i].adj.iter().map(|(_, j)| *j).collect();
        for j in neighbours {
            self.enqueue(j);
        }
    }

    fn process(&mut self, i: usize) {
        let tbox = self.tbox;
        loop {
            let before = self.nodes[i].label.len();
            for ax in tbox.axioms() {
                match *ax {
                    NormGci::Sub { lhs, rhs } => {
                        if self.nodes[i].label.contains(&lhs) && !self.nodes[i].label.contains(&rhs) {
                            let step = TraceStep {
                                rule: Rule::Sub,
                                axiom: Some(*ax),
                                premises: vec![self.concept_fact(lhs, i)],
                                added: vec![self.concept_fact(rhs, i)],
                            };
                            self.add_concept(i, rhs, step);
                        }
                    }
                    NormGci::ConjSub { lhs1, lhs2, rhs } => {
                        let l = &self.nodes[i].label;
                        if l.contains(&lhs1) && l.contains(&lhs2) && !l.contains(&rhs) {
                            let step = TraceStep {
                                rule: Rule::Conj,
                                axiom: Some(*ax),
                                premises: vec![self.concept_fact(lhs1, i), self.concept_fact(lhs2, i)],
                                added: vec![self.concept_fact(rhs, i)],
                            };
                            self.add_concept(i, rhs, step);
                        }
                    }
                    NormGci::ExRight { lhs, role, filler } => {
                        if self.nodes[i].label.contains(&lhs) && !self.introduced.contains(&(i, *ax)) {
                            if self.nodes[i].depth >= self.max_depth {
                                self.blocked.insert(i);
                                continue;
                            }
                            if self.nodes.len() >= self.node_cap {
                                self.capped = true;
                                continue;
                            }
                            self.introduced.insert((i, *ax));
                            let fresh = TraceNode::Fresh(self.nodes.len() as u32);
                            let depth = self.nodes[i].depth + 1;
                            let j = self.add_node(fresh, depth);
                            self.nodes[i].adj.push((role, j));
                            self.nodes[j].adj.push((role.inverse(), i));
                            self.nodes[j].label.insert(filler);
                            let here = self.nodes[i].name;
                            let mut added = vec![Fact::role(role, here, fresh), Fact::Concept(ConceptId::TOP, fresh)];
                            if !filler.is_top() {
                                added.push(Fact::Concept(filler, fresh));
                            }
                            for f in &added {
                                self.origin.insert(*f, self.steps.len());
                            }
                            self.steps.push(TraceStep {
                                rule: Rule::ExistsIntro,
                                axiom: Some(*ax),
                                premises: vec![self.concept_fact(lhs, i)],
                                added,
                            });
                            if filler.is_bot() && self.bot.is_none() {
                                self.bot = Some(j);
                            }
                            self.enqueue(i);
                        }
                    }
                    NormGci::ExLeft { role, filler, rhs } => {
                        if self.nodes[i].label.contains(&rhs) {
                            continue;
                        }
                        let hit = self.nodes[i]
                            .adj
                            .iter()
                            .find(|(s, j)| *s == role && self.nodes[*j].label.contains(&filler))
                            .map(|(_, j)| *j);
                        if let Some(j) = hit {
                            let here = self.nodes[i].name;
                            let there = self.nodes[j].name;
                            let step = TraceStep {
                                rule: Rule::ExistsElim,
                                axiom: Some(*ax),
                                premises: vec![Fact::role(role, here, there), self.concept_fact(filler, j)],
                                added: vec![self.concept_fact(rhs, i)],
                            };
                            self.add_concept(i, rhs, step);
                        }
                    }
                }
            }
            if self.nodes[i].label.len() == before {
                break;
            }
        }
    }

    /// Runs to fixpoint with fresh individuals allowed down to `depth`
    /// (named individuals are at depth 0).
    pub fn run(&mut self, depth: u32) {
        if depth > self.max_depth {
            self.max_depth = depth;
            let blocked = std::mem::take(&mut self.blocked);
            for i in blocked {
                self.enqueue(i);
            }
        }
        while let Some(i) = self.queue.pop_front() {
            self.queued[i] = false;
            self.process(i);
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// True if the node budget stopped some successor from being created.
    pub fn capped(&self) -> bool {
        self.capped
    }

    /// True if the depth bound stopped some successor from being created.
    pub fn truncated(&self) -> bool {
        !self.blocked.is_empty() || self.capped
    }

    pub fn inconsistent(&self) -> bool {
        self.bot.is_some()
    }

    pub fn holds(&self, c: ConceptId, a: IndId) -> bool {
        self.by_name
            .get(&TraceNode::Named(a))
            .is_some_and(|&i| self.nodes[i].label.contains(&c))
    }

    /// Whether the chase so far derives `c(a)`, counting ex falso.
    pub fn entails(&self, c: ConceptId, a: IndId) -> bool {
        self.inconsistent() || self.holds(c, a) || c.is_top() && self.by_name.contains_key(&TraceNode::Named(a))
    }

    fn cone(&self, goal: Fact) -> Vec<TraceStep> {
        let mut keep = BTreeSet::new();
        let mut stack = vec![goal];
        let mut seen = HashSet::new();
        while let Some(f) = stack.pop() {
            if !seen.insert(f) {
                continue;
            }
            if let Some(&s) = self.origin.get(&f) {
                if keep.insert(s) {
                    stack.extend(self.steps[s].premises.iter().copied());
                }
            }
        }
        keep.into_iter().map(|s| self.steps[s].clone()).collect()
    }

    /// The derivation of `c(a)` contained in this run, if any.
    pub fn trace(&self, c: ConceptId, a: IndId) -> Option<DerivationTrace> {
        let goal = Fact::Concept(c, TraceNode::Named(a));
        if self.holds(c, a) || c.is_top() {
            return Some(DerivationTrace { steps: self.cone(goal) });
        }
        let b = self.bot?;
        let bot_fact = self.concept_fact(ConceptId::BOT, b);
        let mut steps = self.cone(bot_fact);
        steps.push(TraceStep {
            rule: Rule::ExFalso,
            axiom: None,
            premises: vec![bot_fact],
            added: vec![goal],
        });
        Some(DerivationTrace { steps })
    }

    /// Iterative deepening until `c(a)` is derived or the node budget runs out.
    pub fn find_trace(tbox: &Tbox, abox: &AboxGraph, c: ConceptId, a: IndId, node_cap: usize) -> Option<DerivationTrace> {
        let mut chase = Chase::new(tbox, abox, node_cap);
        let mut depth = 0;
        loop {
            chase.run(depth);
            if chase.entails(c, a) {
                return chase.trace(c, a);
            }
            if !chase.truncated() || chase.capped() {
                return None;
            }
            depth += 1;
        }
    }
}

/// Replays `trace` from the ABox and checks that every step is a legal rule
/// application and that the last step adds `c(a)`.
pub fn validate_trace(tbox: &Tbox, abox: &AboxGraph, trace: &DerivationTrace, c: ConceptId, a: IndId) -> Result<(), TraceError> {
    let mut facts: HashSet<Fact> = HashSet::new();
    let mut known: HashSet<TraceNode> = HashSet::new();
    for &x in abox.individuals() {
        let n = TraceNode::Named(x);
        known.insert(n);
        facts.insert(Fact::Concept(ConceptId::TOP, n));
        for &d in abox.asserted(x) {
            facts.insert(Fact::Concept(d, n));
        }
        for (s, y) in abox.edges(x) {
            facts.insert(Fact::role(s, n, TraceNode::Named(y)));
        }
    }
    let goal = Fact::Concept(c, TraceNode::Named(a));
    if trace.steps.is_empty() {
        return if facts.contains(&goal) { Ok(()) } else { Err(TraceError::WrongGoal) };
    }
    for (k, st) in trace.steps.iter().enumerate() {
        let step = k + 1;
        if !st.premises.iter().all(|p| facts.contains(p)) {
            return Err(TraceError::MissingPremise { step });
        }
        if let Some(ax) = &st.axiom {
            if !tbox.contains(ax) {
                return Err(TraceError::UnknownAxiom { step });
            }
        }
        let ok = match (st.rule, st.axiom) {
            (Rule::Sub, Some(NormGci::Sub { lhs, rhs })) => match st.premises.as_slice() {
                [Fact::Concept(p, b)] if *p == lhs => st.added == [Fact::Concept(rhs, *b)],
                _ => false,
            },
            (Rule::Conj, Some(NormGci::ConjSub { lhs1, lhs2, rhs })) => match st.premises.as_slice() {
                [Fact::Concept(p, b), Fact::Concept(q, b2)] if b == b2 => {
                    ((*p, *q) == (lhs1, lhs2) || (*p, *q) == (lhs2, lhs1)) && st.added == [Fact::Concept(rhs, *b)]
                }
                _ => false,
            },
            (Rule::ExistsIntro, Some(NormGci::ExRight { lhs, role, filler })) => match (st.premises.as_slice(), st.added.first()) {
                ([Fact::Concept(p, b)], Some(_)) if *p == lhs => {
                    let fresh = st.added.iter().find_map(|f| match f {
                        Fact::Concept(ConceptId::TOP, n) => Some(*n),
                        _ => None,
                    });
                    match fresh {
                        Some(n) if !known.contains(&n) => {
                            known.insert(n);
                            let mut want = vec![Fact::role(role, *b, n), Fact::Concept(ConceptId::TOP, n)];
                            if !filler.is_top() {
                                want.push(Fact::Concept(filler, n));
                            }
                            st.added == want
                        }
                        _ => return Err(TraceError::NotFresh { step }),
                    }
                }
                _ => false,
            },
            (Rule::ExistsElim, Some(NormGci::ExLeft { role, filler, rhs })) => match st.premises.as_slice() {
                [r @ Fact::Role(..), Fact::Concept(p, y)] if *p == filler => match st.added.as_slice() {
                    [Fact::Concept(d, x)] if *d == rhs => *r == Fact::role(role, *x, *y),
                    _ => false,
                },
                _ => false,
            },
            (Rule::ExFalso, None) => matches!(st.premises.as_slice(), [Fact::Concept(ConceptId::BOT, _)]),
            _ => false,
        };
        if !ok {
            return Err(TraceError::BadConclusion { step });
        }
        facts.extend(st.added.iter().copied());
    }
    if trace.steps.last().is_some_and(|st| st.added.contains(&goal)) {
        Ok(())
    } else {
        Err(TraceError::WrongGoal)
    }
}
