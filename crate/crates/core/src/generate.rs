//! Random knowledge bases for differential testing.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::kb::{
    AboxGraph, Concept, ConceptId, IndId, KnowledgeBase, NormGci, RoleExpr, RoleId, SurfaceGci,
    Symbol, Tbox, Vocabulary,
};

/// Independent generator for case `index` of a run seeded with `seed`.
pub fn case_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KbParams {
    pub concepts: usize,
    pub roles: usize,
    pub individuals: usize,
    pub gcis: usize,
    /// Probability that an axiom has `⊥` on the right.
    pub bot_rate: f64,
}

impl Default for KbParams {
    fn default() -> Self {
        KbParams {
            concepts: 6,
            roles: 3,
            individuals: 10,
            gcis: 12,
            bot_rate: 0.04,
        }
    }
}

const CONCEPT_NAMES: [&str; 10] = ["A", "B", "C", "D", "E", "F", "G", "H", "J", "K"];
const ROLE_NAMES: [&str; 4] = ["r", "s", "t", "u"];

fn concept_name(i: usize) -> String {
    CONCEPT_NAMES.get(i).map_or_else(|| format!("N{i}"), |s| s.to_string())
}

fn role_name(i: usize) -> String {
    ROLE_NAMES.get(i).map_or_else(|| format!("p{i}"), |s| s.to_string())
}

/// Fresh vocabulary with `concepts` concept names and `roles` role names.
pub fn signature(concepts: usize, roles: usize) -> (Vocabulary, Vec<ConceptId>, Vec<RoleId>) {
    let mut vocab = Vocabulary::new();
    let cs = (0..concepts).map(|i| vocab.concept(&concept_name(i))).collect();
    let rs = (0..roles).map(|i| vocab.role(&role_name(i))).collect();
    (vocab, cs, rs)
}

fn role_expr<R: Rng>(rng: &mut R, roles: &[RoleId]) -> RoleExpr {
    let s = RoleExpr::forward(*roles.choose(rng).expect("at least one role"));
    if rng.gen_bool(0.35) {
        s.inverse()
    } else {
        s
    }
}

/// Any normal-form axiom over the given names; `Top` and `Bot` appear with
/// small probability.
pub fn random_normal_gci<R: Rng>(rng: &mut R, concepts: &[ConceptId], roles: &[RoleId]) -> NormGci {
    let mut name = |rng: &mut R| *concepts.choose(rng).expect("at least one concept");
    let lhs_atom = |rng: &mut R, name: &mut dyn FnMut(&mut R) -> ConceptId| {
        if rng.gen_bool(0.05) {
            ConceptId::TOP
        } else {
            name(rng)
        }
    };
    let filler = |rng: &mut R, name: &mut dyn FnMut(&mut R) -> ConceptId| {
        if rng.gen_bool(0.15) {
            ConceptId::TOP
        } else {
            name(rng)
        }
    };
    let rhs = |rng: &mut R, name: &mut dyn FnMut(&mut R) -> ConceptId| {
        if rng.gen_bool(0.05) {
            ConceptId::BOT
        } else {
            name(rng)
        }
    };
    match rng.gen_range(0..4) {
        0 => NormGci::Sub {
            lhs: lhs_atom(rng, &mut name),
            rhs: rhs(rng, &mut name),
        },
        1 => {
            let (a, b) = (name(rng), name(rng));
            NormGci::ConjSub {
                lhs1: a.min(b),
                lhs2: a.max(b),
                rhs: rhs(rng, &mut name),
            }
        }
        2 => NormGci::ExRight {
            lhs: lhs_atom(rng, &mut name),
            role: role_expr(rng, roles),
            filler: filler(rng, &mut name),
        },
        _ => NormGci::ExLeft {
            role: role_expr(rng, roles),
            filler: filler(rng, &mut name),
            rhs: rhs(rng, &mut name),
        },
    }
}

/// A normal-form TBox with no stratification guarantee.
pub fn random_normal_tbox<R: Rng>(
    rng: &mut R,
    concepts: &[ConceptId],
    roles: &[RoleId],
    axioms: usize,
) -> Tbox {
    Tbox::new((0..axioms).map(|_| random_normal_gci(rng, concepts, roles)))
}

/// Whether `ax` respects `h` under the stratification conditions.
fn fits(ax: &NormGci, h: &BTreeMap<Symbol, u32>) -> bool {
    let c = |x: ConceptId| h.get(&Symbol::Concept(x)).copied();
    let r = |s: RoleExpr| h[&Symbol::Role(s.base)];
    let le = |a: Option<u32>, b: Option<u32>| match (a, b) {
        (Some(a), Some(b)) => a <= b,
        _ => true,
    };
    let lt = |a: Option<u32>, b: Option<u32>| match (a, b) {
        (Some(a), Some(b)) => a < b,
        _ => true,
    };
    if ax.rhs_name() == Some(ConceptId::BOT) {
        return true;
    }
    match *ax {
        NormGci::Sub { lhs, rhs } => le(c(lhs), c(rhs)),
        NormGci::ConjSub { lhs1, lhs2, rhs } => {
            le(c(lhs1), c(rhs)) && le(c(lhs2), c(rhs)) && (lt(c(lhs1), c(rhs)) || lt(c(lhs2), c(rhs)))
        }
        NormGci::ExRight { lhs, role, filler } => le(c(lhs), c(filler)) && le(c(lhs), Some(r(role))),
        NormGci::ExLeft { role, filler, rhs } => {
            if filler.is_top() {
                le(Some(r(role)), c(rhs))
            } else if filler == rhs {
                le(Some(r(role)), c(filler))
            } else {
                lt(c(filler), c(rhs)) && le(Some(r(role)), c(filler))
            }
        }
    }
}

/// Assertions over `individuals` fresh individuals named `a0`, `a1`, ...
pub fn random_abox<R: Rng>(
    rng: &mut R,
    vocab: &mut Vocabulary,
    concepts: &[ConceptId],
    roles: &[RoleId],
    individuals: usize,
) -> AboxGraph {
    let mut abox = AboxGraph::new();
    let inds: Vec<IndId> = (0..individuals).map(|i| vocab.individual(&format!("a{i}"))).collect();
    for &a in &inds {
        abox.add_individual(a);
        for &c in concepts {
            if rng.gen_bool(0.18) {
                abox.assert_concept(c, a);
            }
        }
    }
    if !roles.is_empty() && inds.len() > 1 {
        let edges = rng.gen_range(0..=individuals + individuals / 2);
        for _ in 0..edges {
            let a = *inds.choose(rng).unwrap();
            let b = *inds.choose(rng).unwrap();
            let s = RoleExpr::forward(*roles.choose(rng).unwrap());
            abox.assert_role(s, a, b);
        }
    }
    abox
}

/// A KB whose TBox is stratified by construction: heights are drawn first
/// and only axioms respecting them are kept.
pub fn random_stratified_kb<R: Rng>(rng: &mut R, p: &KbParams) -> KnowledgeBase {
    let nc = rng.gen_range(1..=p.concepts.max(1));
    let nr = rng.gen_range(1..=p.roles.max(1));
    let (mut vocab, cs, rs) = signature(nc, nr);
    let max_h = rng.gen_range(0..=3u32);
    let mut h = BTreeMap::new();
    for &c in &cs {
        h.insert(Symbol::Concept(c), rng.gen_range(0..=max_h));
    }
    for &r in &rs {
        h.insert(Symbol::Role(r), rng.gen_range(0..=max_h));
    }
    let want = rng.gen_range(1..=p.gcis.max(1));
    let mut axioms = Vec::new();
    let mut attempts = 0;
    while axioms.len() < want && attempts < 400 {
        attempts += 1;
        let mut ax = random_normal_gci(rng, &cs, &rs);
        // random_normal_gci yields ⊥ on the right about 5% of the time
        let keep_bot = (p.bot_rate / 0.05).clamp(0.0, 1.0);
        if ax.rhs_name() == Some(ConceptId::BOT) && !rng.gen_bool(keep_bot) {
            continue;
        }
        if let NormGci::ExLeft { filler, rhs, .. } = &mut ax {
            // keep the recursive shape `∃s.A ⊑ A` reasonably frequent
            if rng.gen_bool(0.15) && filler.is_named() {
                *rhs = *filler;
            }
        }
        if fits(&ax, &h) {
            axioms.push(ax);
        }
    }
    let individuals = rng.gen_range(1..=p.individuals.max(1));
    let abox = random_abox(rng, &mut vocab, &cs, &rs, individuals);
    KnowledgeBase {
        vocab,
        tbox: axioms.iter().map(NormGci::to_surface).collect(),
        abox,
        order: None,
    }
}

fn dl_lite_basic<R: Rng>(rng: &mut R, cs: &[ConceptId], rs: &[RoleId]) -> Concept {
    if rs.is_empty() || rng.gen_bool(0.5) {
        Concept::atom(*cs.choose(rng).unwrap())
    } else {
        Concept::exists(role_expr(rng, rs), Concept::atom(ConceptId::TOP))
    }
}

/// A DL-Lite-core TBox: `B1 ⊑ B2` and `B1 ⊓ B2 ⊑ ⊥` with
/// `B ::= A | ∃r.⊤ | ∃r⁻.⊤`, over at most `names` concept and role names.
pub fn random_dl_lite_kb<R: Rng>(rng: &mut R, names: usize) -> KnowledgeBase {
    let names = names.max(2);
    let nc = rng.gen_range(1..names);
    let nr = rng.gen_range(1..=(names - nc));
    let (vocab, cs, rs) = signature(nc, nr);
    let count = rng.gen_range(1..=2 * names);
    let tbox = (0..count)
        .map(|_| {
            let b1 = dl_lite_basic(rng, &cs, &rs);
            if rng.gen_bool(0.25) {
                SurfaceGci {
                    lhs: Concept::and(b1, dl_lite_basic(rng, &cs, &rs)),
                    rhs: Concept::atom(ConceptId::BOT),
                }
            } else {
                SurfaceGci {
                    lhs: b1,
                    rhs: dl_lite_basic(rng, &cs, &rs),
                }
            }
        })
        .collect();
    KnowledgeBase {
        vocab,
        tbox,
        abox: AboxGraph::new(),
        order: None,
    }
}

/// A random directed `r`-graph over `nodes` individuals, each labelled `A`
/// with probability `label_p`, under the TBox `∃r.A ⊑ A`.
pub fn random_graph_kb<R: Rng>(rng: &mut R, nodes: usize, edges: usize, label_p: f64) -> KnowledgeBase {
    let (mut vocab, cs, rs) = signature(1, 1);
    let (a, r) = (cs[0], RoleExpr::forward(rs[0]));
    let mut abox = AboxGraph::new();
    let inds: Vec<IndId> = (0..nodes).map(|i| vocab.individual(&format!("n{i}"))).collect();
    for &x in &inds {
        abox.add_individual(x);
        if rng.gen_bool(label_p) {
            abox.assert_concept(a, x);
        }
    }
    for _ in 0..edges {
        let x = *inds.choose(rng).unwrap();
        let y = *inds.choose(rng).unwrap();
        abox.assert_role(r, x, y);
    }
    KnowledgeBase {
        vocab,
        tbox: vec![SurfaceGci {
            lhs: Concept::exists(r, Concept::atom(a)),
            rhs: Concept::atom(a),
        }],
        abox,
        order: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::normalize;
    use crate::stratify::check_stratification;

    #[test]
    fn stratified_kbs_are_accepted() {
        for i in 0..200 {
            let mut rng = case_rng(5, i);
            let mut kb = random_stratified_kb(&mut rng, &KbParams::default());
            let (t, _) = normalize(&kb.tbox, &mut kb.vocab);
            assert!(check_stratification(&t).unwrap().accepted, "case {i}");
            assert!(kb.tbox.len() <= 12 && kb.abox.individuals().len() <= 10);
        }
    }

    #[test]
    fn generation_is_reproducible() {
        let p = KbParams::default();
        let a = random_stratified_kb(&mut case_rng(9, 3), &p);
        let b = random_stratified_kb(&mut case_rng(9, 3), &p);
        assert_eq!(a, b);
    }
}
