//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use strata::kb::{ConceptId, IndId, KnowledgeBase, NormGci, Symbol, Tbox};

/// Heights read as a total preorder. `Top` and `Bot` are unconstrained.
fn h_of(h: &BTreeMap<Symbol, u32>, c: ConceptId) -> Option<u32> {
    if c.is_named() {
        Some(h[&Symbol::Concept(c)])
    } else {
        None
    }
}

fn le(a: Option<u32>, b: Option<u32>) -> Option<bool> {
    Some(a? <= b?)
}

fn lt(a: Option<u32>, b: Option<u32>) -> Option<bool> {
    Some(a? < b?)
}

/// Whether `ax` meets the stratification conditions under `h`, or `None`
/// when some symbol of `ax` has no height yet.
fn axiom_ok(ax: &NormGci, h: &BTreeMap<Symbol, u32>) -> Option<bool> {
    let get = |s: Symbol| h.get(&s).copied();
    let c = |x: ConceptId| if x.is_named() { get(Symbol::Concept(x)).map(Some) } else { Some(None) };
    let ok = |x: Option<bool>| x.unwrap_or(true);
    if ax.rhs_name() == Some(ConceptId::BOT) {
        return Some(true);
    }
    Some(match *ax {
        NormGci::Sub { lhs, rhs } => ok(le(c(lhs)?, c(rhs)?)),
        NormGci::ConjSub { lhs1, lhs2, rhs } => {
            let (a, b, r) = (c(lhs1)?, c(lhs2)?, c(rhs)?);
            ok(le(a, r)) && ok(le(b, r)) && (ok(lt(a, r)) || ok(lt(b, r)))
        }
        NormGci::ExRight { lhs, role, filler } => {
            let s = Some(get(Symbol::Role(role.base))?);
            let (a, d) = (c(lhs)?, c(filler)?);
            (filler.is_top() || ok(le(a, d))) && ok(le(a, s))
        }
        NormGci::ExLeft { role, filler, rhs } => {
            let s = Some(get(Symbol::Role(role.base))?);
            let (d, b) = (c(filler)?, c(rhs)?);
            if filler.is_top() {
                // the filler is Top: the role is placed below the conclusion
                ok(le(s, b))
            } else {
                (filler == rhs || ok(lt(d, b))) && ok(le(s, d))
            }
        }
    })
}

/// Whether `h` (total on the TBox symbols) satisfies every condition.
pub fn satisfies(tbox: &Tbox, h: &BTreeMap<Symbol, u32>) -> bool {
    tbox.axioms().iter().all(|ax| axiom_ok(ax, h) == Some(true))
}

/// Exhaustive search over all total preorders on the TBox symbols, by
/// backtracking over level assignments with `k` levels for `k` symbols.
pub fn brute_force_preorder(tbox: &Tbox) -> Option<BTreeMap<Symbol, u32>> {
    let symbols: Vec<Symbol> = tbox.symbols().into_iter().collect();
    let levels = symbols.len().max(1) as u32;
    let mut h = BTreeMap::new();
    fn go(
        i: usize,
        symbols: &[Symbol],
        levels: u32,
        tbox: &Tbox,
        h: &mut BTreeMap<Symbol, u32>,
    ) -> bool {
        if i == symbols.len() {
            return true;
        }
        for l in 0..levels {
            h.insert(symbols[i], l);
            let fine = tbox.axioms().iter().all(|ax| axiom_ok(ax, h) != Some(false));
            if fine && go(i + 1, symbols, levels, tbox, h) {
                return true;
            }
        }
        h.remove(&symbols[i]);
        false
    }
    go(0, &symbols, levels, tbox, &mut h).then_some(h)
}

/// Individuals from which an `r`-path of length zero or more reaches an
/// individual asserted to be in `a`, for the single role of a graph KB.
pub fn reaches_label(kb: &KnowledgeBase, a: ConceptId) -> BTreeSet<IndId> {
    let mut back: BTreeMap<IndId, Vec<IndId>> = BTreeMap::new();
    for (_, x, y) in kb.abox.role_assertions() {
        back.entry(y).or_default().push(x);
    }
    let mut seen: BTreeSet<IndId> = kb
        .abox
        .individuals()
        .iter()
        .copied()
        .filter(|&x| kb.abox.has_concept(x, a))
        .collect();
    let mut queue: VecDeque<IndId> = seen.iter().copied().collect();
    while let Some(y) = queue.pop_front() {
        for &x in back.get(&y).into_iter().flatten() {
            if seen.insert(x) {
                queue.push_back(x);
            }
        }
    }
    seen
}

pub const TEX: &str = "tbox:\nA <= B\nA & B <= C\nC <= exists r . Top\nexists r . Top <= D\nabox:\nA(a)\nTop(b)\n";
