use std::fmt::Write;

use super::{Concept, KnowledgeBase, SurfaceGci, Vocabulary};

fn concept(c: &Concept, vocab: &Vocabulary, out: &mut String) {
    match c {
        Concept::Atom(a) => out.push_str(vocab.concept_name(*a)),
        Concept::And(a, b) => {
            // `&` is left-associative, so only a right operand conjunction needs parentheses.
            concept(a, vocab, out);
            out.push_str(" & ");
            operand(b, vocab, out);
        }
        Concept::Exists(s, f) => {
            let _ = write!(out, "exists {} . ", vocab.role_expr_text(*s));
            operand(f, vocab, out);
        }
    }
}

fn operand(c: &Concept, vocab: &Vocabulary, out: &mut String) {
    if matches!(c, Concept::And(..)) {
        out.push('(');
        concept(c, vocab, out);
        out.push(')');
    } else {
        concept(c, vocab, out);
    }
}

pub fn print_concept(c: &Concept, vocab: &Vocabulary) -> String {
    let mut out = String::new();
    concept(c, vocab, &mut out);
    out
}

pub fn print_surface_gci(gci: &SurfaceGci, vocab: &Vocabulary) -> String {
    let mut out = String::new();
    concept(&gci.lhs, vocab, &mut out);
    out.push_str(" <= ");
    concept(&gci.rhs, vocab, &mut out);
    out
}

/// Renders a KB in the text format accepted by [`super::parse_kb`].
///
/// Individuals without any assertion are written as `Top(a)` so they survive
/// a round trip.
pub fn print_kb(kb: &KnowledgeBase) -> String {
    let v = &kb.vocab;
    let mut out = String::from("tbox:\n");
    for g in &kb.tbox {
        out.push_str(&print_surface_gci(g, v));
        out.push('\n');
    }
    out.push_str("abox:\n");
    // name order, so that re-interning after a parse prints the same text
    let mut individuals: Vec<_> = kb.abox.individuals().iter().copied().collect();
    individuals.sort_by_key(|&a| v.individual_name(a));
    for a in individuals {
        let name = v.individual_name(a);
        let asserted = kb.abox.asserted(a);
        let mut concepts: Vec<&str> = asserted.iter().map(|&c| v.concept_name(c)).collect();
        concepts.sort_unstable();
        for c in concepts {
            let _ = writeln!(out, "{c}({name})");
        }
        let mut has_edge = false;
        let mut edges = Vec::new();
        for (s, b) in kb.abox.edges(a) {
            has_edge = true;
            if !s.inverted {
                edges.push((v.role_name(s.base), v.individual_name(b)));
            }
        }
        edges.sort_unstable();
        for (r, b) in edges {
            let _ = writeln!(out, "{r}({name}, {b})");
        }
        if asserted.is_empty() && !has_edge {
            let _ = writeln!(out, "Top({name})");
        }
    }
    if let Some(levels) = &kb.order {
        out.push_str("order:\n");
        for level in levels {
            let names: Vec<&str> = level.iter().map(|s| v.symbol_name(*s)).collect();
            out.push_str(&names.join(" "));
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::parse_kb;

    #[test]
    fn nested_concepts_are_parenthesized() {
        let text = "tbox:\nexists inv r . (A & B) & (C & D) <= exists s . exists r . Top\n";
        let kb = parse_kb(text).unwrap();
        let printed = print_surface_gci(&kb.tbox[0], &kb.vocab);
        assert_eq!(printed, "exists inv r . (A & B) & (C & D) <= exists s . exists r . Top");
        let again = parse_kb(&print_kb(&kb)).unwrap();
        assert_eq!(again.tbox, kb.tbox);
    }

    #[test]
    fn isolated_individuals_survive() {
        let kb = parse_kb("tbox:\nA <= B\nabox:\nTop(a)\nr(b, c)\n").unwrap();
        let printed = print_kb(&kb);
        let again = parse_kb(&printed).unwrap();
        assert_eq!(again.abox.individuals().len(), 3);
        assert_eq!(print_kb(&again), printed);
    }
}
