//! Text and Graphviz renderings of materialized automata.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{AutSymbol, NestedNfa, Nfa};
use crate::kb::Vocabulary;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Text,
    Dot,
}

pub fn export_automaton(nfa: &NestedNfa, vocab: &Vocabulary, format: ExportFormat) -> String {
    match format {
        ExportFormat::Text => {
            let mut out = String::new();
            text_one(&nfa.root, vocab, &mut out);
            for sub in nfa.nested.values() {
                out.push('\n');
                text_one(sub, vocab, &mut out);
            }
            out
        }
        ExportFormat::Dot => dot(nfa, vocab),
    }
}

fn alphabet_line(nfa: &Nfa, vocab: &Vocabulary) -> String {
    nfa.alphabet
        .iter()
        .map(|s| s.text(vocab))
        .collect::<Vec<_>>()
        .join(" ")
}

fn text_one(nfa: &Nfa, vocab: &Vocabulary, out: &mut String) {
    let _ = writeln!(out, "automaton: {}", vocab.concept_name(nfa.for_concept));
    let _ = writeln!(out, "level: {}", nfa.level);
    let _ = writeln!(out, "weak: {}", nfa.weak_included);
    let _ = writeln!(out, "alphabet: {}", alphabet_line(nfa, vocab));
    let _ = writeln!(out, "states: {}", nfa.states.len());
    for (i, q) in nfa.states.iter().enumerate() {
        let mut tags = Vec::new();
        if i == 0 {
            tags.push("initial");
        }
        if q.accepting() {
            tags.push("accepting");
        }
        let tags = if tags.is_empty() {
            String::new()
        } else {
            format!(" [{}]", tags.join(", "))
        };
        let _ = writeln!(out, "  q{i}: {}{tags}", q.display(vocab));
    }
    let _ = writeln!(out, "transitions: {}", nfa.transitions.len());
    for t in &nfa.transitions {
        let _ = writeln!(
            out,
            "  q{} -{}-> q{} ({})",
            t.from,
            t.symbol.text(vocab),
            t.to,
            t.rule.name()
        );
    }
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn dot_body(nfa: &Nfa, prefix: &str, vocab: &Vocabulary, out: &mut String, indent: &str) {
    for (i, q) in nfa.states.iter().enumerate() {
        let shape = if q.accepting() { "doublecircle" } else { "circle" };
        let _ = writeln!(
            out,
            "{indent}{prefix}q{i} [shape={shape}, label=\"{}\"];",
            dot_escape(&q.display(vocab).to_string())
        );
    }
    let mut groups: BTreeMap<(usize, usize), Vec<String>> = BTreeMap::new();
    for t in &nfa.transitions {
        let label = t.symbol.text(vocab);
        let g = groups.entry((t.from, t.to)).or_default();
        if !g.contains(&label) {
            g.push(label);
        }
    }
    for ((from, to), labels) in groups {
        let _ = writeln!(
            out,
            "{indent}{prefix}q{from} -> {prefix}q{to} [label=\"{}\"];",
            dot_escape(&labels.join(","))
        );
    }
}

fn cluster_prefix(nfa: &Nfa) -> String {
    format!("a{}_", nfa.for_concept.0)
}

fn dot(nfa: &NestedNfa, vocab: &Vocabulary) -> String {
    let mut out = String::from("digraph automaton {\n  rankdir=LR;\n");
    out.push_str("  start [shape=point];\n  start -> q0;\n");
    dot_body(&nfa.root, "", vocab, &mut out, "  ");
    for sub in nfa.nested.values() {
        let prefix = cluster_prefix(sub);
        let _ = writeln!(out, "  subgraph cluster_{prefix} {{");
        let _ = writeln!(
            out,
            "    label=\"{}\";",
            dot_escape(&format!("aut({})", vocab.concept_name(sub.for_concept)))
        );
        dot_body(sub, &prefix, vocab, &mut out, "    ");
        out.push_str("  }\n");
    }
    // Automaton tests point at the initial state of the automaton they run.
    let mut refs = Vec::new();
    for (owner, owner_prefix) in std::iter::once((&nfa.root, String::new()))
        .chain(nfa.nested.values().map(|n| (n, cluster_prefix(n))))
    {
        for t in &owner.transitions {
            if let AutSymbol::Auto(b) = t.symbol {
                if let Some(target) = nfa.nested.get(&b) {
                    let line = format!(
                        "  {owner_prefix}q{} -> {}q0 [style=dotted, arrowhead=empty];",
                        t.from,
                        cluster_prefix(target)
                    );
                    if !refs.contains(&line) {
                        refs.push(line);
                    }
                }
            }
        }
    }
    for line in refs {
        out.push_str(&line);
        out.push('\n');
    }
    out.push_str("}\n");
    out
}
