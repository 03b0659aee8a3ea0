//! Cross-checking the automaton engines against the saturation oracle.

use std::fmt;

use crate::evaluate::{
    validate_witness, AskOptions, ConsistencyMode, Naive, PipelineError, Prepared, WitnessError,
};
use crate::kb::{ConceptId, IndId, KnowledgeBase};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DiffOptions {
    /// Also run the naive engine with weakening transitions.
    pub weak: bool,
    /// Validate the run of every positive automaton answer.
    pub witnesses: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Disagreement {
    pub query: String,
    pub oracle: bool,
    pub collapsed: bool,
    pub naive: bool,
    pub naive_weak: Option<bool>,
}

impl fmt::Display for Disagreement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: oracle={} collapsed={} naive={}",
            self.query, self.oracle, self.collapsed, self.naive
        )?;
        if let Some(w) = self.naive_weak {
            write!(f, " naive+weak={w}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DiffReport {
    pub consistent: bool,
    pub queries: usize,
    pub positives: usize,
    pub disagreements: Vec<Disagreement>,
    pub witnesses_checked: usize,
    pub witness_failures: Vec<(String, WitnessError)>,
}

impl DiffReport {
    pub fn ok(&self) -> bool {
        self.disagreements.is_empty() && self.witness_failures.is_empty()
    }
}

/// Asks every (concept name, individual) query of `kb` with the collapsed
/// engine, the naive engine and the oracle, and collects mismatches.
pub fn differential(kb: &KnowledgeBase, opts: DiffOptions) -> Result<DiffReport, PipelineError> {
    let prepared = Prepared::new(kb)?;
    let session = prepared.session(AskOptions {
        consistency: ConsistencyMode::Off,
        ..Default::default()
    });
    let weak_rw = opts.weak.then(|| prepared.rewriting(true));
    let sat = prepared.saturate();
    let mut report = DiffReport {
        consistent: sat.consistent,
        ..Default::default()
    };
    let concepts: Vec<ConceptId> = (2..kb.vocab.concept_count() as u32).map(ConceptId).collect();
    let individuals: Vec<IndId> = prepared.abox.individuals().iter().copied().collect();
    let collapsed = session.collapsed();
    let naive = Naive::new(session.rewriting(), &prepared.abox);
    let naive_weak = weak_rw.as_ref().map(|rw| Naive::new(rw, &prepared.abox));
    for &c in &concepts {
        for &a in &individuals {
            report.queries += 1;
            let oracle = sat.entails(c, a);
            // An inconsistent KB entails everything through the pre-check.
            let (col, nai, weak) = if !sat.consistent {
                (true, true, naive_weak.as_ref().map(|_| true))
            } else {
                let col = collapsed.run(c, a, opts.witnesses);
                let nai = naive.run(c, a, opts.witnesses);
                let weak = naive_weak.as_ref().map(|n| n.accepts(c, a));
                let query = format!("{}({})", kb.vocab.concept_name(c), kb.vocab.individual_name(a));
                for w in [&col.witness, &nai.witness].into_iter().flatten() {
                    report.witnesses_checked += 1;
                    if let Err(e) = validate_witness(session.rewriting(), &prepared.abox, w) {
                        report.witness_failures.push((query.clone(), e));
                    }
                }
                (col.accepted, nai.accepted, weak)
            };
            if oracle {
                report.positives += 1;
            }
            if col != oracle || nai != oracle || weak.is_some_and(|w| w != oracle) {
                report.disagreements.push(Disagreement {
                    query: format!("{}({})", kb.vocab.concept_name(c), kb.vocab.individual_name(a)),
                    oracle,
                    collapsed: col,
                    naive: nai,
                    naive_weak: weak,
                });
            }
        }
    }
    Ok(report)
}
