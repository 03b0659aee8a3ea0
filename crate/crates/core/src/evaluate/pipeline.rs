use std::cell::OnceCell;
use std::fmt;
use std::time::{Duration, Instant};

use super::{Collapsed, Naive, RunWitness};
use crate::kb::{
    normalize, AboxGraph, ConceptId, IndId, KnowledgeBase, NormGci, Provenance, QueryError, Tbox,
    Vocabulary,
};
use crate::rewrite::{NfaSource, RewriteOptions, Rewriting};
use crate::saturate::{saturate_abox, Chase, DerivationTrace, Reasoner, Saturation, TRACE_NODE_CAP};
use crate::stratify::{
    check_stratification, complete_preorder, verify_preorder, Heights, StratifyError, VerifyError,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Engine {
    #[default]
    Collapsed,
    Naive,
    Oracle,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::Collapsed => "collapsed",
            Engine::Naive => "naive",
            Engine::Oracle => "oracle",
        }
    }
}

/// How inconsistency is detected before a query is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConsistencyMode {
    /// Saturation-based check.
    #[default]
    Oracle,
    /// Experimental: run the automaton for `⊥` from every individual.
    Automaton,
    Off,
}

impl ConsistencyMode {
    pub fn name(self) -> &'static str {
        match self {
            ConsistencyMode::Oracle => "oracle",
            ConsistencyMode::Automaton => "automaton",
            ConsistencyMode::Off => "off",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeightSource {
    /// Minimal heights computed from the TBox.
    Computed,
    /// Heights from the KB's `order:` section.
    UserOrder,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AskOptions {
    pub engine: Engine,
    pub consistency: ConsistencyMode,
    pub include_weak: bool,
    pub witness: bool,
    /// Derivation trace from the chase (oracle engine only).
    pub trace: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("TBox is not stratified:\n{}", .0.join("\n"))]
    NotStratified(Vec<String>),
    #[error("the given order is not admissible: {0}")]
    BadOrder(String),
    #[error(transparent)]
    Normal(#[from] StratifyError),
    #[error(transparent)]
    Query(#[from] QueryError),
}

/// A normalized, stratified KB ready for queries.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub vocab: Vocabulary,
    pub tbox: Tbox,
    pub abox: AboxGraph,
    pub provenance: Provenance,
    pub heights: Heights,
    pub height_source: HeightSource,
    /// `∃s.⊤ ⊑ B` axioms that were stratified with `s ⪯ B`.
    pub top_filler_axioms: Vec<NormGci>,
}

fn verify_message(err: &VerifyError, vocab: &Vocabulary) -> String {
    match err {
        VerifyError::Missing(s) => format!("no height for {}", vocab.symbol_name(*s)),
        VerifyError::Negative { symbol, height } => {
            format!("negative height {height} for {}", vocab.symbol_name(*symbol))
        }
        VerifyError::Violated(v) => v
            .iter()
            .map(|v| v.describe(vocab))
            .collect::<Vec<_>>()
            .join("; "),
        VerifyError::Stratify(e) => e.to_string(),
    }
}

impl Prepared {
    pub fn new(kb: &KnowledgeBase) -> Result<Self, PipelineError> {
        let mut vocab = kb.vocab.clone();
        let (tbox, provenance) = normalize(&kb.tbox, &mut vocab);
        let strat = check_stratification(&tbox)?;
        let (heights, height_source) = match kb.order_heights() {
            Some(given) => {
                let full = complete_preorder(&tbox, &given);
                let h = verify_preorder(&tbox, &full)
                    .map_err(|e| PipelineError::BadOrder(verify_message(&e, &vocab)))?;
                (h, HeightSource::UserOrder)
            }
            None => {
                if !strat.accepted {
                    let lines = strat.violations.iter().map(|v| v.describe(&vocab)).collect();
                    return Err(PipelineError::NotStratified(lines));
                }
                (strat.heights, HeightSource::Computed)
            }
        };
        Ok(Prepared {
            vocab,
            tbox,
            abox: kb.abox.clone(),
            provenance,
            heights,
            height_source,
            top_filler_axioms: strat.constraints.top_filler_axioms,
        })
    }

    pub fn universe(&self) -> usize {
        self.vocab.concept_count()
    }

    pub fn saturate(&self) -> Saturation {
        saturate_abox(&Reasoner::new(&self.tbox, self.universe()), &self.abox)
    }

    pub fn rewriting(&self, include_weak: bool) -> Rewriting<'_> {
        Rewriting::new(
            &self.tbox,
            self.heights.clone(),
            self.universe(),
            RewriteOptions { include_weak },
        )
    }

    /// Consistency according to the automaton for `⊥`.
    pub fn automaton_consistent(&self) -> bool {
        let rw = self.rewriting(false);
        let col = Collapsed::new(&rw, &self.abox);
        !self.abox.individuals().iter().any(|&x| col.accepts(ConceptId::BOT, x))
    }

    pub fn consistency_report(&self) -> ConsistencyReport {
        ConsistencyReport {
            oracle: self.saturate().consistent,
            automaton: self.automaton_consistent(),
        }
    }

    pub fn session(&self, options: AskOptions) -> Session<'_> {
        Session::new(self, options)
    }
}

/// Both consistency verdicts, for comparing the experimental check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConsistencyReport {
    pub oracle: bool,
    pub automaton: bool,
}

impl ConsistencyReport {
    pub fn agree(&self) -> bool {
        self.oracle == self.automaton
    }
}

impl fmt::Display for ConsistencyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "oracle consistent: {}, automaton consistent: {}{}",
            self.oracle,
            self.automaton,
            if self.agree() { "" } else { " (disagreement)" }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostics {
    pub engine: Engine,
    pub consistency: ConsistencyMode,
    pub height_source: HeightSource,
    pub max_height: u32,
    /// Level of the queried automaton, when one was run.
    pub query_level: Option<u32>,
    /// Search nodes expanded by the engine.
    pub visited: usize,
    pub elapsed: Duration,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Answer {
    pub entailed: bool,
    /// `None` when the consistency check was off.
    pub consistent: Option<bool>,
    /// True when the answer follows from inconsistency alone.
    pub by_inconsistency: bool,
    pub witness: Option<RunWitness>,
    pub trace: Option<DerivationTrace>,
    pub diagnostics: Diagnostics,
}

/// Answers queries against one [`Prepared`] KB with fixed options.
pub struct Session<'p> {
    prepared: &'p Prepared,
    options: AskOptions,
    rw: Rewriting<'p>,
    consistent: Option<bool>,
    saturation: OnceCell<Saturation>,
}

impl fmt::Debug for Session<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Session")
            .field("options", &self.options)
            .field("consistent", &self.consistent)
            .finish()
    }
}

impl<'p> Session<'p> {
    pub fn new(prepared: &'p Prepared, options: AskOptions) -> Self {
        let saturation = OnceCell::new();
        let consistent = match options.consistency {
            ConsistencyMode::Oracle => {
                let sat = prepared.saturate();
                let c = sat.consistent;
                let _ = saturation.set(sat);
                Some(c)
            }
            ConsistencyMode::Automaton => Some(prepared.automaton_consistent()),
            ConsistencyMode::Off => None,
        };
        Session {
            prepared,
            options,
            rw: prepared.rewriting(options.include_weak),
            consistent,
            saturation,
        }
    }

    pub fn rewriting(&self) -> &Rewriting<'p> {
        &self.rw
    }

    pub fn consistent(&self) -> Option<bool> {
        self.consistent
    }

    /// A collapsed evaluator that keeps its tables across calls.
    pub fn collapsed(&self) -> Collapsed<'_, 'p> {
        Collapsed::new(&self.rw, &self.prepared.abox)
    }

    pub fn ask_text(&self, query: &str) -> Result<Answer, PipelineError> {
        let kb_view = KnowledgeBase {
            vocab: self.prepared.vocab.clone(),
            tbox: Vec::new(),
            abox: self.prepared.abox.clone(),
            order: None,
        };
        let (c, a) = kb_view.resolve_query(query)?;
        Ok(self.ask(c, a))
    }

    /// `c = None` stands for a concept name absent from the KB.
    pub fn ask(&self, c: Option<ConceptId>, a: IndId) -> Answer {
        let start = Instant::now();
        let mut diagnostics = Diagnostics {
            engine: self.options.engine,
            consistency: self.options.consistency,
            height_source: self.prepared.height_source,
            max_height: self.prepared.heights.max(),
            query_level: None,
            visited: 0,
            elapsed: Duration::ZERO,
        };
        let mut answer = Answer {
            entailed: false,
            consistent: self.consistent,
            by_inconsistency: false,
            witness: None,
            trace: None,
            diagnostics: diagnostics.clone(),
        };
        if self.consistent == Some(false) {
            answer.entailed = true;
            answer.by_inconsistency = true;
        } else if let Some(c) = c {
            if c.is_top() {
                answer.entailed = true;
            } else {
                let p = self.prepared;
                match self.options.engine {
                    Engine::Oracle => {
                        let sat = self.saturation.get_or_init(|| p.saturate());
                        answer.entailed = sat.entails(c, a);
                        diagnostics.visited = sat.labels.len();
                        if self.options.trace && answer.entailed && sat.consistent {
                            answer.trace = Chase::find_trace(&p.tbox, &p.abox, c, a, TRACE_NODE_CAP);
                        }
                    }
                    Engine::Collapsed => {
                        diagnostics.query_level = Some(self.rw.level_of(c));
                        let out = self.collapsed().run(c, a, self.options.witness);
                        answer.entailed = out.accepted;
                        answer.witness = out.witness;
                        diagnostics.visited = out.visited;
                    }
                    Engine::Naive => {
                        diagnostics.query_level = Some(self.rw.level_of(c));
                        let out = Naive::new(&self.rw, &p.abox).run(c, a, self.options.witness);
                        answer.entailed = out.accepted;
                        answer.witness = out.witness;
                        diagnostics.visited = out.visited;
                    }
                }
            }
        }
        diagnostics.elapsed = start.elapsed();
        answer.diagnostics = diagnostics;
        answer
    }
}

/// One-shot query `C(a)` against a parsed KB.
pub fn entails_iq(kb: &KnowledgeBase, query: &str, options: AskOptions) -> Result<Answer, PipelineError> {
    let (c, a) = kb.resolve_query(query)?;
    let prepared = Prepared::new(kb)?;
    Ok(prepared.session(options).ask(c, a))
}
