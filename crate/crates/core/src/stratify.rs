//! Stratification analysis: the preorder constraints forced by a normal-form
//! TBox, the decision procedure, heights, and the `T|n` restrictions.
//!
//! The constraints split into non-strict edges `x ⪯ y` and strictness
//! requirements. Any admissible preorder contains the reflexive-transitive
//! closure of the edges, and enlarging a preorder only ever merges classes, so
//! the closure itself is admissible iff any preorder is. We therefore check
//! the strict requirements against the SCCs of the edge graph.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use petgraph::visit::EdgeRef;

use crate::kb::{validate_normal_form, ConceptId, NormGci, RoleId, Symbol, Tbox, Violation, Vocabulary};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StratifyError {
    #[error("TBox is not in normal form ({} violating axioms)", .0.len())]
    NotNormalForm(Vec<Violation>),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VerifyError {
    #[error("height map has no entry for {0:?}")]
    Missing(Symbol),
    #[error("negative height {height} for {symbol:?}")]
    Negative { symbol: Symbol, height: i64 },
    #[error("{} stratification conditions violated", .0.len())]
    Violated(Vec<StratViolation>),
    #[error(transparent)]
    Stratify(#[from] StratifyError),
}

/// `from ⪯ to`, forced by `axiom`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct ForcedEdge {
    pub from: Symbol,
    pub to: Symbol,
    pub axiom: NormGci,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Requirement {
    /// `from ≺ to` (filler below the conclusion of `∃s.D ⊑ B`).
    MustStrict {
        from: Symbol,
        to: Symbol,
        axiom: NormGci,
    },
    /// `a.0 ≺ a.1` or `b.0 ≺ b.1` (a conjunct below the conclusion).
    AtLeastOne {
        a: (Symbol, Symbol),
        b: (Symbol, Symbol),
        axiom: NormGci,
    },
    /// `from ⪯ to`. Only reported when a given height map breaks a forced
    /// edge; never part of [`ForcedConstraints::requirements`].
    Order {
        from: Symbol,
        to: Symbol,
        axiom: NormGci,
    },
}

impl Requirement {
    pub fn axiom(&self) -> NormGci {
        match *self {
            Requirement::MustStrict { axiom, .. }
            | Requirement::AtLeastOne { axiom, .. }
            | Requirement::Order { axiom, .. } => axiom,
        }
    }

    pub fn describe(&self, vocab: &Vocabulary) -> String {
        let n = |s: Symbol| vocab.symbol_name(s).to_string();
        match *self {
            Requirement::MustStrict { from, to, axiom } => format!(
                "existential premise rule: {} ≺ {} required by `{}`",
                n(from),
                n(to),
                axiom.display(vocab)
            ),
            Requirement::Order { from, to, axiom } => format!(
                "forced order: {} ⪯ {} required by `{}`",
                n(from),
                n(to),
                axiom.display(vocab)
            ),
            Requirement::AtLeastOne { a, b, axiom } => format!(
                "conjunction rule: {} ≺ {} or {} ≺ {} required by `{}`",
                n(a.0),
                n(a.1),
                n(b.0),
                n(b.1),
                axiom.display(vocab)
            ),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ForcedConstraints {
    pub edges: Vec<ForcedEdge>,
    pub requirements: Vec<Requirement>,
    /// `∃s.⊤ ⊑ B` axioms, for which `s ⪯ B` is imposed in place of `s ⪯ ⊤`.
    pub top_filler_axioms: Vec<NormGci>,
}

impl ForcedConstraints {
    /// Distinct `(from, to)` pairs of the non-strict edges.
    pub fn edge_pairs(&self) -> BTreeSet<(Symbol, Symbol)> {
        self.edges.iter().map(|e| (e.from, e.to)).collect()
    }
}

fn sym(c: ConceptId) -> Symbol {
    Symbol::Concept(c)
}

fn role_sym(r: RoleId) -> Symbol {
    Symbol::Role(r)
}

fn constraints_unchecked(tbox: &Tbox) -> ForcedConstraints {
    let mut out = ForcedConstraints::default();
    let edge = |out: &mut ForcedConstraints, from: Symbol, to: Symbol, axiom: NormGci| {
        out.edges.push(ForcedEdge { from, to, axiom });
    };
    for &ax in tbox.axioms() {
        if ax.rhs_name() == Some(ConceptId::BOT) {
            continue;
        }
        match ax {
            NormGci::Sub { lhs, rhs } => {
                if lhs.is_named() && rhs.is_named() {
                    edge(&mut out, sym(lhs), sym(rhs), ax);
                }
            }
            NormGci::ConjSub { lhs1, lhs2, rhs } => {
                if lhs1.is_named() && lhs2.is_named() && rhs.is_named() {
                    edge(&mut out, sym(lhs1), sym(rhs), ax);
                    edge(&mut out, sym(lhs2), sym(rhs), ax);
                    out.requirements.push(Requirement::AtLeastOne {
                        a: (sym(lhs1), sym(rhs)),
                        b: (sym(lhs2), sym(rhs)),
                        axiom: ax,
                    });
                }
            }
            NormGci::ExRight { lhs, role, filler } => {
                if lhs.is_named() {
                    if filler.is_named() {
                        edge(&mut out, sym(lhs), sym(filler), ax);
                    }
                    edge(&mut out, sym(lhs), role_sym(role.base), ax);
                }
            }
            NormGci::ExLeft { role, filler, rhs } => {
                let s = role_sym(role.base);
                if filler.is_named() {
                    if filler != rhs && rhs.is_named() {
                        edge(&mut out, sym(filler), sym(rhs), ax);
                        out.requirements.push(Requirement::MustStrict {
                            from: sym(filler),
                            to: sym(rhs),
                            axiom: ax,
                        });
                    }
                    edge(&mut out, s, sym(filler), ax);
                } else if filler.is_top() && rhs.is_named() {
                    edge(&mut out, s, sym(rhs), ax);
                    out.top_filler_axioms.push(ax);
                }
            }
        }
    }
    out
}

/// The constraints every admissible preorder must satisfy.
pub fn forced_constraints(tbox: &Tbox) -> Result<ForcedConstraints, StratifyError> {
    validate_normal_form(tbox).map_err(StratifyError::NotNormalForm)?;
    Ok(constraints_unchecked(tbox))
}

/// Heights of concept and role names. `Top`, `Bot` and names outside the
/// map have height 0.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Heights {
    map: BTreeMap<Symbol, u32>,
}

impl Heights {
    pub fn from_map(map: BTreeMap<Symbol, u32>) -> Self {
        Heights { map }
    }

    pub fn of(&self, s: Symbol) -> u32 {
        match s {
            Symbol::Concept(c) if !c.is_named() => 0,
            _ => self.map.get(&s).copied().unwrap_or(0),
        }
    }

    pub fn concept(&self, c: ConceptId) -> u32 {
        self.of(Symbol::Concept(c))
    }

    pub fn role(&self, r: RoleId) -> u32 {
        self.of(Symbol::Role(r))
    }

    pub fn max(&self) -> u32 {
        self.map.values().copied().max().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Symbol, u32)> + '_ {
        self.map.iter().map(|(s, h)| (*s, *h))
    }

    /// Height of an axiom: the largest height among its names.
    pub fn of_axiom(&self, ax: &NormGci) -> u32 {
        let c = ax.concepts().into_iter().map(|c| self.concept(c)).max().unwrap_or(0);
        let r = ax.role().map(|s| self.role(s.base)).unwrap_or(0);
        c.max(r)
    }

    /// Shifts heights down so the smallest is 0.
    pub fn normalized(&self) -> Heights {
        let min = self.map.values().copied().min().unwrap_or(0);
        Heights {
            map: self.map.iter().map(|(s, h)| (*s, h - min)).collect(),
        }
    }
}

/// A failed strictness requirement. Each entry of `cycles` is a path of
/// forced edges from the intended upper name back down to the lower one,
/// which puts both in one equivalence class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StratViolation {
    pub requirement: Requirement,
    pub cycles: Vec<Vec<ForcedEdge>>,
}

impl StratViolation {
    pub fn describe(&self, vocab: &Vocabulary) -> String {
        let mut out = self.requirement.describe(vocab);
        for path in &self.cycles {
            let steps: Vec<String> = path
                .iter()
                .map(|e| {
                    format!(
                        "{} ⪯ {} by `{}`",
                        vocab.symbol_name(e.from),
                        vocab.symbol_name(e.to),
                        e.axiom.display(vocab)
                    )
                })
                .collect();
            if steps.is_empty() {
                out.push_str("; but both sides are the same name");
            } else {
                out.push_str("; but ");
                out.push_str(&steps.join(", "));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StratResult {
    pub accepted: bool,
    /// SCC ids are assigned in topological order of the condensation.
    pub scc_of: BTreeMap<Symbol, usize>,
    pub heights: Heights,
    pub violations: Vec<StratViolation>,
    pub constraints: ForcedConstraints,
}

struct EdgeGraph {
    graph: DiGraph<Symbol, ForcedEdge>,
    index: BTreeMap<Symbol, NodeIndex>,
}

impl EdgeGraph {
    fn new(symbols: &BTreeSet<Symbol>, edges: &[ForcedEdge]) -> Self {
        let mut graph = DiGraph::new();
        let mut index = BTreeMap::new();
        for &s in symbols {
            index.insert(s, graph.add_node(s));
        }
        let mut seen = BTreeSet::new();
        for e in edges {
            if e.from != e.to && seen.insert((e.from, e.to)) {
                graph.add_edge(index[&e.from], index[&e.to], *e);
            }
        }
        EdgeGraph { graph, index }
    }

    /// Shortest path of forced edges from `from` to `to`.
    fn path(&self, from: Symbol, to: Symbol) -> Option<Vec<ForcedEdge>> {
        let (start, goal) = (self.index[&from], self.index[&to]);
        let mut parent: BTreeMap<NodeIndex, (NodeIndex, ForcedEdge)> = BTreeMap::new();
        let mut queue = VecDeque::from([start]);
        let mut seen = BTreeSet::from([start]);
        while let Some(n) = queue.pop_front() {
            if n == goal {
                let mut path = Vec::new();
                let mut cur = goal;
                while cur != start {
                    let (p, e) = parent[&cur];
                    path.push(e);
                    cur = p;
                }
                path.reverse();
                return Some(path);
            }
            let mut next: Vec<_> = self
                .graph
                .edges(n)
                .map(|e| (e.target(), *e.weight()))
                .collect();
            next.sort_by_key(|(t, _)| *t);
            for (t, e) in next {
                if seen.insert(t) {
                    parent.insert(t, (n, e));
                    queue.push_back(t);
                }
            }
        }
        None
    }
}

/// Decides stratifiability and computes pointwise-minimal heights.
pub fn check_stratification(tbox: &Tbox) -> Result<StratResult, StratifyError> {
    let constraints = forced_constraints(tbox)?;
    let symbols = tbox.symbols();
    let eg = EdgeGraph::new(&symbols, &constraints.edges);

    // tarjan_scc yields SCCs in reverse topological order.
    let mut sccs = tarjan_scc(&eg.graph);
    sccs.reverse();
    let mut scc_of = BTreeMap::new();
    for (i, scc) in sccs.iter().enumerate() {
        for &n in scc {
            scc_of.insert(eg.graph[n], i);
        }
    }
    let same = |x: Symbol, y: Symbol| scc_of[&x] == scc_of[&y];

    let mut violations = Vec::new();
    for req in &constraints.requirements {
        match *req {
            Requirement::MustStrict { from, to, .. } => {
                if same(from, to) {
                    violations.push(StratViolation {
                        requirement: *req,
                        cycles: vec![eg.path(to, from).unwrap_or_default()],
                    });
                }
            }
            Requirement::AtLeastOne { a, b, .. } => {
                if same(a.0, a.1) && same(b.0, b.1) {
                    violations.push(StratViolation {
                        requirement: *req,
                        cycles: vec![
                            eg.path(a.1, a.0).unwrap_or_default(),
                            eg.path(b.1, b.0).unwrap_or_default(),
                        ],
                    });
                }
            }
            Requirement::Order { .. } => {}
        }
    }

    // Longest weighted path over the condensation: forced edges weigh 0,
    // strict requirements weigh 1. For a conjunction the cheaper satisfiable
    // disjunct is made strict, which keeps every height minimal.
    let mut incoming: Vec<Vec<(usize, u32)>> = vec![Vec::new(); sccs.len()];
    let mut either: Vec<Vec<((usize, u32), (usize, u32))>> = vec![Vec::new(); sccs.len()];
    for e in &constraints.edges {
        let (f, t) = (scc_of[&e.from], scc_of[&e.to]);
        if f != t {
            incoming[t].push((f, 0));
        }
    }
    for req in &constraints.requirements {
        match *req {
            Requirement::MustStrict { from, to, .. } => {
                let (f, t) = (scc_of[&from], scc_of[&to]);
                if f != t {
                    incoming[t].push((f, 1));
                }
            }
            Requirement::AtLeastOne { a, b, .. } => {
                let t = scc_of[&a.1];
                let (fa, fb) = (scc_of[&a.0], scc_of[&b.0]);
                match (fa != t, fb != t) {
                    (true, true) => either[t].push(((fa, 1), (fb, 1))),
                    (true, false) => incoming[t].push((fa, 1)),
                    (false, true) => incoming[t].push((fb, 1)),
                    (false, false) => {}
                }
            }
            Requirement::Order { .. } => {}
        }
    }
    let mut scc_height = vec![0u32; sccs.len()];
    for t in 0..sccs.len() {
        let mut h = 0;
        for &(f, w) in &incoming[t] {
            h = h.max(scc_height[f] + w);
        }
        for &((fa, wa), (fb, wb)) in &either[t] {
            let (ha, hb) = (scc_height[fa], scc_height[fb]);
            // Strict on one side, non-strict on the other; pick the cheaper.
            let via_a = (ha + wa).max(hb);
            let via_b = (hb + wb).max(ha);
            h = h.max(via_a.min(via_b));
        }
        scc_height[t] = h;
    }
    let heights = Heights::from_map(
        scc_of
            .iter()
            .map(|(s, &i)| (*s, scc_height[i]))
            .collect(),
    );

    Ok(StratResult {
        accepted: violations.is_empty(),
        scc_of,
        heights,
        violations,
        constraints,
    })
}

/// Checks a user height map against the stratification conditions, reading
/// it as the total preorder `x ⪯ y iff h(x) ≤ h(y)`.
pub fn verify_preorder(tbox: &Tbox, heights: &BTreeMap<Symbol, i64>) -> Result<Heights, VerifyError> {
    let constraints = forced_constraints(tbox)?;
    let mut map = BTreeMap::new();
    for s in tbox.symbols() {
        match heights.get(&s) {
            None => return Err(VerifyError::Missing(s)),
            Some(&h) if h < 0 => return Err(VerifyError::Negative { symbol: s, height: h }),
            Some(&h) => {
                map.insert(s, h as u32);
            }
        }
    }
    if let Some((&symbol, &height)) = heights.iter().find(|(_, h)| **h < 0) {
        return Err(VerifyError::Negative { symbol, height });
    }
    let h = |s: Symbol| map[&s];
    let mut violated = Vec::new();
    for e in &constraints.edges {
        if h(e.from) > h(e.to) {
            violated.push(StratViolation {
                requirement: Requirement::Order {
                    from: e.from,
                    to: e.to,
                    axiom: e.axiom,
                },
                cycles: vec![],
            });
        }
    }
    for req in &constraints.requirements {
        let ok = match *req {
            Requirement::MustStrict { from, to, .. } => h(from) < h(to),
            Requirement::AtLeastOne { a, b, .. } => h(a.0) < h(a.1) || h(b.0) < h(b.1),
            Requirement::Order { from, to, .. } => h(from) <= h(to),
        };
        if !ok {
            violated.push(StratViolation {
                requirement: *req,
                cycles: vec![],
            });
        }
    }
    if violated.is_empty() {
        Ok(Heights::from_map(map))
    } else {
        Err(VerifyError::Violated(violated))
    }
}

/// Extends a partial height map to every symbol of `tbox`.
///
/// Given heights are kept. Missing symbols (typically names introduced by
/// normalization) start at 0 and are raised until the constraints they
/// take part in hold, where raising them can help. The result still has to
/// go through [`verify_preorder`].
pub fn complete_preorder(tbox: &Tbox, given: &BTreeMap<Symbol, i64>) -> BTreeMap<Symbol, i64> {
    let constraints = constraints_unchecked(tbox);
    let symbols = tbox.symbols();
    let mut map = given.clone();
    let free: BTreeSet<Symbol> = symbols.iter().copied().filter(|s| !given.contains_key(s)).collect();
    for &s in &free {
        map.insert(s, 0);
    }
    let cap = given.values().copied().max().unwrap_or(0) + 2 * free.len() as i64 + 2;
    let raise = |map: &mut BTreeMap<Symbol, i64>, s: Symbol, to: i64| -> bool {
        let cur = map[&s];
        if free.contains(&s) && cur < to && to <= cap {
            map.insert(s, to);
            true
        } else {
            false
        }
    };
    loop {
        let mut changed = false;
        for e in &constraints.edges {
            let need = map[&e.from];
            changed |= raise(&mut map, e.to, need);
        }
        for req in &constraints.requirements {
            match *req {
                Requirement::MustStrict { from, to, .. } => {
                    let need = map[&from] + 1;
                    changed |= raise(&mut map, to, need);
                }
                Requirement::AtLeastOne { a, b, .. } => {
                    if map[&a.0] < map[&a.1] || map[&b.0] < map[&b.1] {
                        continue;
                    }
                    let need = map[&a.0].min(map[&b.0]) + 1;
                    changed |= raise(&mut map, a.1, need);
                }
                Requirement::Order { .. } => {}
            }
        }
        if !changed {
            break;
        }
    }
    map
}

/// `T|n`: the axioms all of whose names have height at most `n`.
///
/// `A ⊑ ∃s.D` is the one shape whose right side may sit above its left side.
/// Whenever `A` and `s` fit in level `n`, the weakening `A ⊑ ∃s.⊤` is kept as
/// well: it follows from the original, and when `D` does not fit, no axiom
/// of `T|n` mentions `D`, so level-`n` reasoning loses nothing. Without it an
/// axiom `∃s.⊤ ⊑ B` of `T|n` could not fire on such successors. Keeping it at
/// every level where it fits makes `T|n ⊆ T|n+1`.
pub fn restrict(tbox: &Tbox, heights: &Heights, n: i64) -> Tbox {
    if n < 0 {
        return Tbox::default();
    }
    let fits = |h: u32| h as i64 <= n;
    let mut out = Vec::new();
    for ax in tbox.axioms() {
        if fits(heights.of_axiom(ax)) {
            out.push(*ax);
        }
        if let NormGci::ExRight { lhs, role, filler } = *ax {
            if !filler.is_top() && fits(heights.concept(lhs)) && fits(heights.role(role.base)) {
                out.push(NormGci::ExRight {
                    lhs,
                    role,
                    filler: ConceptId::TOP,
                });
            }
        }
    }
    Tbox::new(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::{normalize, parse_kb, KnowledgeBase};

    fn load(text: &str) -> (KnowledgeBase, Tbox) {
        let mut kb = parse_kb(text).unwrap();
        let (t, _) = normalize(&kb.tbox, &mut kb.vocab);
        (kb, t)
    }

    const T_EX: &str = "tbox:\nA <= B\nA & B <= C\nC <= exists r . Top\nexists r . Top <= D\n";

    fn c(kb: &KnowledgeBase, s: &str) -> Symbol {
        Symbol::Concept(kb.vocab.find_concept(s).unwrap())
    }

    fn r(kb: &KnowledgeBase, s: &str) -> Symbol {
        Symbol::Role(kb.vocab.find_role(s).unwrap())
    }

    #[test]
    fn example_constraints() {
        let (kb, t) = load(T_EX);
        let fc = forced_constraints(&t).unwrap();
        let expected: BTreeSet<_> = [
            (c(&kb, "A"), c(&kb, "B")),
            (c(&kb, "A"), c(&kb, "C")),
            (c(&kb, "B"), c(&kb, "C")),
            (c(&kb, "C"), r(&kb, "r")),
            (r(&kb, "r"), c(&kb, "D")),
        ]
        .into();
        assert_eq!(fc.edge_pairs(), expected);
        assert_eq!(fc.requirements.len(), 1);
        assert_eq!(fc.top_filler_axioms.len(), 1);
    }

    #[test]
    fn example_heights_are_minimal() {
        let (kb, t) = load(T_EX);
        let res = check_stratification(&t).unwrap();
        assert!(res.accepted);
        let h = |s| res.heights.of(s);
        assert_eq!(
            [h(c(&kb, "A")), h(c(&kb, "B")), h(c(&kb, "C")), h(r(&kb, "r")), h(c(&kb, "D"))],
            [0, 0, 1, 1, 1]
        );
        assert_eq!(res.heights.concept(ConceptId::TOP), 0);
    }

    #[test]
    fn separating_tbox_is_rejected() {
        let (kb, t) = load("tbox:\nexists r . A & exists s . A <= A\n");
        let res = check_stratification(&t).unwrap();
        assert!(!res.accepted);
        let text: Vec<String> = res.violations.iter().map(|v| v.describe(&kb.vocab)).collect();
        assert!(text.iter().any(|s| s.contains("A ≺ X1") && s.contains("X1 ⪯ A")), "{text:?}");
    }

    #[test]
    fn linear_recursion_is_accepted() {
        let (_, t) = load("tbox:\nexists r . A <= A\n");
        assert!(check_stratification(&t).unwrap().accepted);
    }

    #[test]
    fn example_order_verifies() {
        let (kb, t) = load(T_EX);
        let map: BTreeMap<Symbol, i64> = [
            (c(&kb, "A"), 0),
            (c(&kb, "B"), 1),
            (c(&kb, "C"), 2),
            (r(&kb, "r"), 2),
            (c(&kb, "D"), 3),
        ]
        .into();
        assert!(verify_preorder(&t, &map).is_ok());
        let flat: BTreeMap<Symbol, i64> = map.keys().map(|s| (*s, 0)).collect();
        match verify_preorder(&t, &flat) {
            Err(VerifyError::Violated(v)) => {
                assert!(v
                    .iter()
                    .any(|x| matches!(x.requirement, Requirement::AtLeastOne { .. })));
            }
            other => panic!("{other:?}"),
        }
        let mut partial = map.clone();
        partial.remove(&c(&kb, "D"));
        assert_eq!(verify_preorder(&t, &partial), Err(VerifyError::Missing(c(&kb, "D"))));
        let mut neg = map.clone();
        neg.insert(c(&kb, "A"), -1);
        assert!(matches!(verify_preorder(&t, &neg), Err(VerifyError::Negative { .. })));
    }

    #[test]
    fn restriction() {
        let (kb, t) = load(T_EX);
        let res = check_stratification(&t).unwrap();
        assert!(restrict(&t, &res.heights, -1).is_empty());
        let t0 = restrict(&t, &res.heights, 0);
        let (a, b) = (kb.vocab.find_concept("A").unwrap(), kb.vocab.find_concept("B").unwrap());
        assert_eq!(t0.axioms(), &[NormGci::Sub { lhs: a, rhs: b }]);
        assert_eq!(restrict(&t, &res.heights, res.heights.max() as i64), t);
    }

    #[test]
    fn bottom_axioms_are_unconstrained() {
        let (_, t) = load("tbox:\nA & B <= bot\nexists r . A <= bot\nA <= bot\n");
        let fc = forced_constraints(&t).unwrap();
        assert!(fc.edges.is_empty() && fc.requirements.is_empty());
        assert!(forced_constraints(&Tbox::default()).unwrap().edges.is_empty());
    }
}
