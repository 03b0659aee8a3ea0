//! Running nested automata over an ABox.
//!
//! [`eval_naive`] explores pairs of individual and automaton state.
//! [`Collapsed`] uses the fact that the premise only ever grows while the
//! run stays at one individual, so a node is just (individual, goal) and the
//! premise is the full label of the individual.

mod collapsed;
mod pipeline;

use std::cell::{Cell, RefCell};
use std::collections::{HashMap, VecDeque};
use std::fmt;

use crate::kb::{AboxGraph, ConceptId, IndId, Vocabulary};
use crate::rewrite::{AutState, AutSymbol, NfaSource};

pub use collapsed::Collapsed;
pub use pipeline::{
    entails_iq, Answer, AskOptions, ConsistencyMode, ConsistencyReport, Diagnostics, Engine,
    HeightSource, PipelineError, Prepared, Session,
};

/// One transition taken by a run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WitnessStep {
    pub from: IndId,
    pub state: AutState,
    pub symbol: AutSymbol,
    pub to: IndId,
    pub target: AutState,
    /// Accepting run of the delegated automaton, for automaton tests.
    pub nested: Option<Box<RunWitness>>,
}

/// An accepting run of the automaton for `concept` starting at `start`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunWitness {
    pub concept: ConceptId,
    pub start: IndId,
    pub steps: Vec<WitnessStep>,
}

impl RunWitness {
    /// Number of steps including nested runs.
    pub fn total_steps(&self) -> usize {
        self.steps
            .iter()
            .map(|s| 1 + s.nested.as_ref().map_or(0, |n| n.total_steps()))
            .sum()
    }

    pub fn lines(&self, vocab: &Vocabulary) -> Vec<String> {
        let mut out = Vec::new();
        self.render(vocab, 0, &mut out);
        out
    }

    fn render(&self, vocab: &Vocabulary, depth: usize, out: &mut Vec<String>) {
        let pad = "  ".repeat(depth);
        out.push(format!(
            "{pad}run aut({}) from {}",
            vocab.concept_name(self.concept),
            vocab.individual_name(self.start)
        ));
        for s in &self.steps {
            out.push(format!(
                "{pad}  ({}, {}) -{}-> ({}, {})",
                vocab.individual_name(s.from),
                s.state.display(vocab),
                s.symbol.text(vocab),
                vocab.individual_name(s.to),
                s.target.display(vocab)
            ));
            if let Some(n) = &s.nested {
                n.render(vocab, depth + 2, out);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WitnessError {
    #[error("run does not start at the initial state")]
    BadStart,
    #[error("step {step} does not continue from the previous one")]
    Broken { step: usize },
    #[error("step {step} is not a transition of the automaton")]
    NotATransition { step: usize },
    #[error("step {step} is not supported by the ABox")]
    Unsupported { step: usize },
    #[error("step {step} has an invalid nested run: {inner}")]
    Nested { step: usize, inner: Box<WitnessError> },
    #[error("run ends in a non-accepting state")]
    NotAccepting,
}

/// Checks a run independently of the engine that produced it.
pub fn validate_witness<S: NfaSource>(
    src: &S,
    abox: &AboxGraph,
    w: &RunWitness,
) -> Result<(), WitnessError> {
    let mut at = w.start;
    let mut state = src.initial(w.concept);
    if !abox.contains(at) {
        return Err(WitnessError::BadStart);
    }
    for (i, s) in w.steps.iter().enumerate() {
        if i == 0 && s.state != state {
            return Err(WitnessError::BadStart);
        }
        if s.from != at || s.state != state {
            return Err(WitnessError::Broken { step: i });
        }
        let listed = src
            .successors(w.concept, &s.state)
            .iter()
            .any(|t| t.symbol == s.symbol && t.target == s.target);
        if !listed {
            return Err(WitnessError::NotATransition { step: i });
        }
        let supported = match s.symbol {
            AutSymbol::Role(r) => abox.has_edge(s.from, r, s.to),
            AutSymbol::Concept(c) => s.from == s.to && abox.has_concept(s.from, c),
            AutSymbol::Top => s.from == s.to,
            AutSymbol::Auto(b) => {
                let Some(n) = &s.nested else {
                    return Err(WitnessError::Unsupported { step: i });
                };
                if s.from != s.to || n.concept != b || n.start != s.from {
                    return Err(WitnessError::Unsupported { step: i });
                }
                validate_witness(src, abox, n).map_err(|e| WitnessError::Nested {
                    step: i,
                    inner: Box::new(e),
                })?;
                true
            }
        };
        if !supported {
            return Err(WitnessError::Unsupported { step: i });
        }
        at = s.to;
        state = s.target.clone();
    }
    if !state.accepting() {
        return Err(WitnessError::NotAccepting);
    }
    Ok(())
}

/// Result of one evaluation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalOutcome {
    pub accepted: bool,
    /// Search nodes expanded, nested runs included.
    pub visited: usize,
    pub witness: Option<RunWitness>,
}

/// Product-space evaluator with a memo of automaton tests.
pub struct Naive<'a, S: NfaSource> {
    src: &'a S,
    abox: &'a AboxGraph,
    memo: RefCell<HashMap<(ConceptId, IndId), bool>>,
    visited: Cell<usize>,
}

impl<S: NfaSource> fmt::Debug for Naive<'_, S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Naive")
            .field("memo", &self.memo.borrow().len())
            .field("visited", &self.visited.get())
            .finish()
    }
}

type Node = (IndId, AutState);

impl<'a, S: NfaSource> Naive<'a, S> {
    pub fn new(src: &'a S, abox: &'a AboxGraph) -> Self {
        Naive {
            src,
            abox,
            memo: RefCell::new(HashMap::new()),
            visited: Cell::new(0),
        }
    }

    pub fn visited(&self) -> usize {
        self.visited.get()
    }

    pub fn accepts(&self, a: ConceptId, x: IndId) -> bool {
        if let Some(&v) = self.memo.borrow().get(&(a, x)) {
            return v;
        }
        let v = self.search(a, x, false).is_some();
        self.memo.borrow_mut().insert((a, x), v);
        v
    }

    pub fn run(&self, a: ConceptId, x: IndId, want_witness: bool) -> EvalOutcome {
        let before = self.visited.get();
        let witness = if want_witness {
            self.search(a, x, true)
        } else if self.accepts(a, x) {
            Some(RunWitness {
                concept: a,
                start: x,
                steps: Vec::new(),
            })
        } else {
            None
        };
        EvalOutcome {
            accepted: witness.is_some(),
            visited: self.visited.get() - before,
            witness: witness.filter(|_| want_witness),
        }
    }

    fn search(&self, a: ConceptId, x: IndId, want_witness: bool) -> Option<RunWitness> {
        if !self.abox.contains(x) {
            return None;
        }
        let start: Node = (x, self.src.initial(a));
        let mut parent: HashMap<Node, Option<(Node, AutSymbol)>> = HashMap::new();
        parent.insert(start.clone(), None);
        let mut queue = VecDeque::from([start]);
        while let Some(node) = queue.pop_front() {
            self.visited.set(self.visited.get() + 1);
            if node.1.accepting() {
                return Some(if want_witness {
                    self.rebuild(a, x, &parent, node)
                } else {
                    RunWitness {
                        concept: a,
                        start: x,
                        steps: Vec::new(),
                    }
                });
            }
            let at = node.0;
            for st in self.src.successors(a, &node.1).iter() {
                let mut next = |y: IndId| {
                    let n = (y, st.target.clone());
                    if !parent.contains_key(&n) {
                        parent.insert(n.clone(), Some((node.clone(), st.symbol)));
                        queue.push_back(n);
                    }
                };
                match st.symbol {
                    AutSymbol::Role(r) => {
                        let ys: Vec<IndId> = self.abox.neighbours(at, r).collect();
                        ys.into_iter().for_each(&mut next);
                    }
                    AutSymbol::Concept(c) => {
                        if self.abox.has_concept(at, c) {
                            next(at)
                        }
                    }
                    AutSymbol::Top => next(at),
                    AutSymbol::Auto(b) => {
                        if self.accepts(b, at) {
                            next(at)
                        }
                    }
                }
            }
        }
        None
    }

    fn rebuild(
        &self,
        a: ConceptId,
        x: IndId,
        parent: &HashMap<Node, Option<(Node, AutSymbol)>>,
        end: Node,
    ) -> RunWitness {
        let mut steps = Vec::new();
        let mut cur = end;
        while let Some(Some((prev, symbol))) = parent.get(&cur) {
            let nested = match symbol {
                AutSymbol::Auto(b) => self.search(*b, prev.0, true).map(Box::new),
                _ => None,
            };
            steps.push(WitnessStep {
                from: prev.0,
                state: prev.1.clone(),
                symbol: *symbol,
                to: cur.0,
                target: cur.1.clone(),
                nested,
            });
            cur = prev.clone();
        }
        steps.reverse();
        RunWitness {
            concept: a,
            start: x,
            steps,
        }
    }
}

/// Evaluates the automaton for `a` from `x` by breadth-first search over the
/// product with the ABox.
pub fn eval_naive<S: NfaSource>(
    src: &S,
    abox: &AboxGraph,
    a: ConceptId,
    x: IndId,
    want_witness: bool,
) -> EvalOutcome {
    Naive::new(src, abox).run(a, x, want_witness)
}
