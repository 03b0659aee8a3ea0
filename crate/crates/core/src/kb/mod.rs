//! Names, concepts, axioms and assertions.
//!
//! Everything downstream works on interned ids. `Top` and `Bot` are ordinary
//! concept ids (0 and 1) so the four normal-form shapes can carry them without
//! special cases.

mod normalize;
mod parse;
mod print;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use indexmap::IndexSet;

pub use normalize::{normalize, validate_normal_form, Provenance, Violation};
pub use parse::{parse_kb, ParseError};
pub use print::{print_concept, print_kb, print_surface_gci};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConceptId(pub u32);

impl ConceptId {
    pub const TOP: ConceptId = ConceptId(0);
    pub const BOT: ConceptId = ConceptId(1);

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn is_top(self) -> bool {
        self == Self::TOP
    }

    pub fn is_bot(self) -> bool {
        self == Self::BOT
    }

    /// True for user-visible names, i.e. neither `Top` nor `Bot`.
    pub fn is_named(self) -> bool {
        self.0 > 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RoleId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IndId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NameKind {
    Concept,
    Role,
    Individual,
}

/// A resolved name: the interned id together with its kind and spelling.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Name {
    pub id: u32,
    pub kind: NameKind,
    pub text: String,
}

/// A possibly inverted role.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RoleExpr {
    pub base: RoleId,
    pub inverted: bool,
}

impl RoleExpr {
    pub fn forward(base: RoleId) -> Self {
        RoleExpr {
            base,
            inverted: false,
        }
    }

    pub fn inverse(self) -> Self {
        RoleExpr {
            base: self.base,
            inverted: !self.inverted,
        }
    }
}

/// A vertex of the stratification preorder: a concept name or a role name
/// (a role and its inverse share one vertex).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Symbol {
    Concept(ConceptId),
    Role(RoleId),
}

/// Interning tables for the three name sorts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    concepts: IndexSet<String>,
    roles: IndexSet<String>,
    individuals: IndexSet<String>,
}

impl Default for Vocabulary {
    fn default() -> Self {
        Self::new()
    }
}

impl Vocabulary {
    pub fn new() -> Self {
        let mut concepts = IndexSet::new();
        concepts.insert("Top".to_string());
        concepts.insert("Bot".to_string());
        Vocabulary {
            concepts,
            roles: IndexSet::new(),
            individuals: IndexSet::new(),
        }
    }

    /// Interns a concept spelling. `Top`/`top` and `Bot`/`bot` map to the
    /// reserved ids.
    pub fn concept(&mut self, text: &str) -> ConceptId {
        match text {
            "Top" | "top" => ConceptId::TOP,
            "Bot" | "bot" => ConceptId::BOT,
            _ => ConceptId(self.concepts.insert_full(text.to_string()).0 as u32),
        }
    }

    pub fn role(&mut self, text: &str) -> RoleId {
        RoleId(self.roles.insert_full(text.to_string()).0 as u32)
    }

    pub fn individual(&mut self, text: &str) -> IndId {
        IndId(self.individuals.insert_full(text.to_string()).0 as u32)
    }

    pub fn find_concept(&self, text: &str) -> Option<ConceptId> {
        match text {
            "Top" | "top" => Some(ConceptId::TOP),
            "Bot" | "bot" => Some(ConceptId::BOT),
            _ => self.concepts.get_index_of(text).map(|i| ConceptId(i as u32)),
        }
    }

    pub fn find_role(&self, text: &str) -> Option<RoleId> {
        self.roles.get_index_of(text).map(|i| RoleId(i as u32))
    }

    pub fn find_individual(&self, text: &str) -> Option<IndId> {
        self.individuals
            .get_index_of(text)
            .map(|i| IndId(i as u32))
    }

    pub fn concept_name(&self, id: ConceptId) -> &str {
        &self.concepts[id.index()]
    }

    pub fn role_name(&self, id: RoleId) -> &str {
        &self.roles[id.0 as usize]
    }

    pub fn individual_name(&self, id: IndId) -> &str {
        &self.individuals[id.0 as usize]
    }

    pub fn symbol_name(&self, sym: Symbol) -> &str {
        match sym {
            Symbol::Concept(c) => self.concept_name(c),
            Symbol::Role(r) => self.role_name(r),
        }
    }

    pub fn name(&self, kind: NameKind, id: u32) -> Name {
        let text = match kind {
            NameKind::Concept => self.concepts[id as usize].clone(),
            NameKind::Role => self.roles[id as usize].clone(),
            NameKind::Individual => self.individuals[id as usize].clone(),
        };
        Name { id, kind, text }
    }

    /// Number of concept ids, including `Top` and `Bot`.
    pub fn concept_count(&self) -> usize {
        self.concepts.len()
    }

    pub fn role_count(&self) -> usize {
        self.roles.len()
    }

    pub fn individual_count(&self) -> usize {
        self.individuals.len()
    }

    pub fn role_expr_text(&self, s: RoleExpr) -> String {
        if s.inverted {
            format!("inv {}", self.role_name(s.base))
        } else {
            self.role_name(s.base).to_string()
        }
    }

    /// Picks an unused concept spelling `{prefix}{n}` and interns it.
    pub(crate) fn fresh_concept(&mut self, prefix: &str) -> ConceptId {
        let mut n = 1usize;
        loop {
            let candidate = format!("{prefix}{n}");
            if !self.concepts.contains(&candidate) && !self.roles.contains(&candidate) {
                return self.concept(&candidate);
            }
            n += 1;
        }
    }
}

/// Surface (pre-normal-form) ELI⊥ concept.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Concept {
    Atom(ConceptId),
    And(Box<Concept>, Box<Concept>),
    Exists(RoleExpr, Box<Concept>),
}

impl Concept {
    pub fn atom(c: ConceptId) -> Self {
        Concept::Atom(c)
    }

    pub fn and(a: Concept, b: Concept) -> Self {
        Concept::And(Box::new(a), Box::new(b))
    }

    pub fn exists(s: RoleExpr, c: Concept) -> Self {
        Concept::Exists(s, Box::new(c))
    }

    pub fn as_atom(&self) -> Option<ConceptId> {
        match self {
            Concept::Atom(c) => Some(*c),
            _ => None,
        }
    }
}

/// A GCI as written in the input, before normalization.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SurfaceGci {
    pub lhs: Concept,
    pub rhs: Concept,
}

/// One axiom in one of the four normal-form shapes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NormGci {
    /// `lhs ⊑ rhs`
    Sub { lhs: ConceptId, rhs: ConceptId },
    /// `lhs1 ⊓ lhs2 ⊑ rhs`
    ConjSub {
        lhs1: ConceptId,
        lhs2: ConceptId,
        rhs: ConceptId,
    },
    /// `lhs ⊑ ∃role.filler`
    ExRight {
        lhs: ConceptId,
        role: RoleExpr,
        filler: ConceptId,
    },
    /// `∃role.filler ⊑ rhs`
    ExLeft {
        role: RoleExpr,
        filler: ConceptId,
        rhs: ConceptId,
    },
}

impl NormGci {
    /// The right-hand side when it is a concept name (`ExRight` has none).
    pub fn rhs_name(&self) -> Option<ConceptId> {
        match *self {
            NormGci::Sub { rhs, .. } | NormGci::ConjSub { rhs, .. } | NormGci::ExLeft { rhs, .. } => {
                Some(rhs)
            }
            NormGci::ExRight { .. } => None,
        }
    }

    pub fn concepts(&self) -> Vec<ConceptId> {
        match *self {
            NormGci::Sub { lhs, rhs } => vec![lhs, rhs],
            NormGci::ConjSub { lhs1, lhs2, rhs } => vec![lhs1, lhs2, rhs],
            NormGci::ExRight { lhs, filler, .. } => vec![lhs, filler],
            NormGci::ExLeft { filler, rhs, .. } => vec![filler, rhs],
        }
    }

    pub fn role(&self) -> Option<RoleExpr> {
        match *self {
            NormGci::ExRight { role, .. } | NormGci::ExLeft { role, .. } => Some(role),
            _ => None,
        }
    }

    pub fn to_surface(&self) -> SurfaceGci {
        use Concept as C;
        match *self {
            NormGci::Sub { lhs, rhs } => SurfaceGci {
                lhs: C::atom(lhs),
                rhs: C::atom(rhs),
            },
            NormGci::ConjSub { lhs1, lhs2, rhs } => SurfaceGci {
                lhs: C::and(C::atom(lhs1), C::atom(lhs2)),
                rhs: C::atom(rhs),
            },
            NormGci::ExRight { lhs, role, filler } => SurfaceGci {
                lhs: C::atom(lhs),
                rhs: C::exists(role, C::atom(filler)),
            },
            NormGci::ExLeft { role, filler, rhs } => SurfaceGci {
                lhs: C::exists(role, C::atom(filler)),
                rhs: C::atom(rhs),
            },
        }
    }

    pub fn display<'a>(&'a self, vocab: &'a Vocabulary) -> impl fmt::Display + 'a {
        GciDisplay { gci: self, vocab }
    }
}

struct GciDisplay<'a> {
    gci: &'a NormGci,
    vocab: &'a Vocabulary,
}

impl fmt::Display for GciDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_surface_gci(&self.gci.to_surface(), self.vocab))
    }
}

/// A normal-form TBox. Axioms are kept sorted and deduplicated, so two
/// TBoxes with the same axiom set compare equal.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Tbox {
    axioms: Vec<NormGci>,
    by_rhs: BTreeMap<ConceptId, Vec<usize>>,
    concepts: BTreeSet<ConceptId>,
    roles: BTreeSet<RoleId>,
}

impl Tbox {
    pub fn new(axioms: impl IntoIterator<Item = NormGci>) -> Self {
        let set: BTreeSet<NormGci> = axioms.into_iter().collect();
        let axioms: Vec<NormGci> = set.into_iter().collect();
        let mut by_rhs: BTreeMap<ConceptId, Vec<usize>> = BTreeMap::new();
        let mut concepts = BTreeSet::new();
        let mut roles = BTreeSet::new();
        for (i, ax) in axioms.iter().enumerate() {
            if let Some(rhs) = ax.rhs_name() {
                by_rhs.entry(rhs).or_default().push(i);
            }
            concepts.extend(ax.concepts());
            if let Some(s) = ax.role() {
                roles.insert(s.base);
            }
        }
        Tbox {
            axioms,
            by_rhs,
            concepts,
            roles,
        }
    }

    pub fn axioms(&self) -> &[NormGci] {
        &self.axioms
    }

    pub fn len(&self) -> usize {
        self.axioms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.axioms.is_empty()
    }

    /// Axioms whose right-hand side is the concept name `c`.
    pub fn with_rhs(&self, c: ConceptId) -> impl Iterator<Item = &NormGci> + '_ {
        self.by_rhs
            .get(&c)
            .into_iter()
            .flatten()
            .map(move |&i| &self.axioms[i])
    }

    /// Concept ids occurring in some axiom (may include `Top`/`Bot`).
    pub fn concepts(&self) -> &BTreeSet<ConceptId> {
        &self.concepts
    }

    /// Concept names occurring in some axiom, without `Top`/`Bot`.
    pub fn concept_names(&self) -> impl Iterator<Item = ConceptId> + '_ {
        self.concepts.iter().copied().filter(|c| c.is_named())
    }

    pub fn roles(&self) -> &BTreeSet<RoleId> {
        &self.roles
    }

    /// All preorder vertices of the signature.
    pub fn symbols(&self) -> BTreeSet<Symbol> {
        self.concept_names()
            .map(Symbol::Concept)
            .chain(self.roles.iter().map(|&r| Symbol::Role(r)))
            .collect()
    }

    pub fn contains(&self, gci: &NormGci) -> bool {
        self.axioms.binary_search(gci).is_ok()
    }

    pub fn to_surface(&self) -> Vec<SurfaceGci> {
        self.axioms.iter().map(NormGci::to_surface).collect()
    }

    pub fn is_subset_of(&self, other: &Tbox) -> bool {
        self.axioms.iter().all(|a| other.contains(a))
    }
}

/// ABox as a labelled graph. Role adjacency is stored in both directions:
/// `r(a, b)` is recorded as `a -r-> b` and `b -inv r-> a`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AboxGraph {
    individuals: BTreeSet<IndId>,
    concepts: BTreeMap<IndId, BTreeSet<ConceptId>>,
    adjacency: BTreeMap<IndId, BTreeMap<RoleExpr, BTreeSet<IndId>>>,
}

static EMPTY_CONCEPTS: BTreeSet<ConceptId> = BTreeSet::new();

impl AboxGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_individual(&mut self, a: IndId) {
        self.individuals.insert(a);
    }

    /// Records `c(a)`. `Top` is implicit everywhere and is not stored.
    pub fn assert_concept(&mut self, c: ConceptId, a: IndId) {
        self.individuals.insert(a);
        if !c.is_top() {
            self.concepts.entry(a).or_default().insert(c);
        }
    }

    pub fn assert_role(&mut self, s: RoleExpr, a: IndId, b: IndId) {
        self.individuals.insert(a);
        self.individuals.insert(b);
        self.adjacency
            .entry(a)
            .or_default()
            .entry(s)
            .or_default()
            .insert(b);
        self.adjacency
            .entry(b)
            .or_default()
            .entry(s.inverse())
            .or_default()
            .insert(a);
    }

    pub fn individuals(&self) -> &BTreeSet<IndId> {
        &self.individuals
    }

    pub fn contains(&self, a: IndId) -> bool {
        self.individuals.contains(&a)
    }

    /// Explicitly asserted concepts of `a` (never contains `Top`).
    pub fn asserted(&self, a: IndId) -> &BTreeSet<ConceptId> {
        self.concepts.get(&a).unwrap_or(&EMPTY_CONCEPTS)
    }

    pub fn has_concept(&self, a: IndId, c: ConceptId) -> bool {
        if c.is_top() {
            return self.individuals.contains(&a);
        }
        self.concepts.get(&a).is_some_and(|s| s.contains(&c))
    }

    pub fn neighbours(&self, a: IndId, s: RoleExpr) -> impl Iterator<Item = IndId> + '_ {
        self.adjacency
            .get(&a)
            .and_then(|m| m.get(&s))
            .into_iter()
            .flatten()
            .copied()
    }

    pub fn has_edge(&self, a: IndId, s: RoleExpr, b: IndId) -> bool {
        self.adjacency
            .get(&a)
            .and_then(|m| m.get(&s))
            .is_some_and(|t| t.contains(&b))
    }

    /// All `(s, b)` with `s(a, b)`, inverse directions included.
    pub fn edges(&self, a: IndId) -> impl Iterator<Item = (RoleExpr, IndId)> + '_ {
        self.adjacency
            .get(&a)
            .into_iter()
            .flat_map(|m| m.iter().flat_map(|(s, bs)| bs.iter().map(move |b| (*s, *b))))
    }

    /// Role assertions in forward orientation only, each once.
    pub fn role_assertions(&self) -> impl Iterator<Item = (RoleId, IndId, IndId)> + '_ {
        self.adjacency.iter().flat_map(|(a, m)| {
            m.iter()
                .filter(|(s, _)| !s.inverted)
                .flat_map(move |(s, bs)| bs.iter().map(move |b| (s.base, *a, *b)))
        })
    }

    pub fn concept_assertions(&self) -> impl Iterator<Item = (ConceptId, IndId)> + '_ {
        self.concepts
            .iter()
            .flat_map(|(a, cs)| cs.iter().map(move |c| (*c, *a)))
    }

    pub fn has_bot(&self) -> bool {
        self.concepts.values().any(|s| s.contains(&ConceptId::BOT))
    }
}

/// A parsed knowledge base. The TBox is kept as written; run
/// [`normalize`] to obtain the normal-form [`Tbox`].
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct KnowledgeBase {
    pub vocab: Vocabulary,
    pub tbox: Vec<SurfaceGci>,
    pub abox: AboxGraph,
    /// Optional user height levels, lowest first.
    pub order: Option<Vec<Vec<Symbol>>>,
}

impl KnowledgeBase {
    /// Height map from the `order:` section: line index is the height.
    pub fn order_heights(&self) -> Option<BTreeMap<Symbol, i64>> {
        self.order.as_ref().map(|levels| {
            levels
                .iter()
                .enumerate()
                .flat_map(|(h, syms)| syms.iter().map(move |s| (*s, h as i64)))
                .collect()
        })
    }

    /// Parses `C(a)` against this KB's vocabulary. An unknown concept name
    /// yields `Ok(None)` for the concept (nothing can entail it except
    /// inconsistency); an unknown individual is an error.
    pub fn resolve_query(&self, text: &str) -> Result<(Option<ConceptId>, IndId), QueryError> {
        let text = text.trim();
        let open = text.find('(').ok_or_else(|| QueryError::Malformed(text.into()))?;
        if !text.ends_with(')') {
            return Err(QueryError::Malformed(text.into()));
        }
        let concept = text[..open].trim();
        let ind = text[open + 1..text.len() - 1].trim();
        if concept.is_empty() || ind.is_empty() || ind.contains(',') {
            return Err(QueryError::Malformed(text.into()));
        }
        let a = self
            .vocab
            .find_individual(ind)
            .filter(|a| self.abox.contains(*a))
            .ok_or_else(|| QueryError::UnknownIndividual(ind.into()))?;
        Ok((self.vocab.find_concept(concept), a))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum QueryError {
    #[error("malformed query `{0}`, expected C(a)")]
    Malformed(String),
    #[error("unknown individual `{0}`")]
    UnknownIndividual(String),
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reserved_names_have_fixed_ids() {
        let mut v = Vocabulary::new();
        assert_eq!(v.concept("Top"), ConceptId::TOP);
        assert_eq!(v.concept("top"), ConceptId::TOP);
        assert_eq!(v.concept("bot"), ConceptId::BOT);
        let a = v.concept("A");
        assert!(a.is_named());
        assert_eq!(v.concept("A"), a);
        assert_ne!(v.concept("B"), a);
    }

    #[test]
    fn interning_is_per_kind() {
        let mut v = Vocabulary::new();
        let c = v.concept("x");
        let r = v.role("x");
        let i = v.individual("x");
        assert_eq!(v.concept_name(c), "x");
        assert_eq!(v.role_name(r), "x");
        assert_eq!(v.individual_name(i), "x");
        assert_eq!(v.name(NameKind::Role, r.0).kind, NameKind::Role);
    }

    #[test]
    fn inverse_is_an_involution() {
        let s = RoleExpr::forward(RoleId(3));
        assert_eq!(s.inverse().inverse(), s);
        assert_ne!(s.inverse(), s);
    }

    #[test]
    fn role_adjacency_is_closed_under_inversion() {
        let mut abox = AboxGraph::new();
        let r = RoleExpr::forward(RoleId(0));
        abox.assert_role(r, IndId(0), IndId(1));
        assert!(abox.has_edge(IndId(0), r, IndId(1)));
        assert!(abox.has_edge(IndId(1), r.inverse(), IndId(0)));
        assert!(!abox.has_edge(IndId(1), r, IndId(0)));
        assert_eq!(abox.role_assertions().count(), 1);
    }

    #[test]
    fn top_is_implicit() {
        let mut abox = AboxGraph::new();
        abox.assert_concept(ConceptId::TOP, IndId(0));
        assert!(abox.asserted(IndId(0)).is_empty());
        assert!(abox.has_concept(IndId(0), ConceptId::TOP));
        assert!(!abox.has_concept(IndId(1), ConceptId::TOP));
    }

    #[test]
    fn tbox_index_by_rhs() {
        let (a, b, c) = (ConceptId(2), ConceptId(3), ConceptId(4));
        let t = Tbox::new([
            NormGci::Sub { lhs: a, rhs: b },
            NormGci::ConjSub {
                lhs1: a,
                lhs2: b,
                rhs: c,
            },
            NormGci::Sub {
                lhs: a,
                rhs: ConceptId::BOT,
            },
            NormGci::Sub { lhs: a, rhs: b },
        ]);
        assert_eq!(t.len(), 3);
        for ax in t.axioms() {
            let rhs = ax.rhs_name().unwrap();
            assert!(t.with_rhs(rhs).any(|x| x == ax));
        }
        assert_eq!(t.with_rhs(ConceptId::BOT).count(), 1);
        assert_eq!(t.with_rhs(c).count(), 1);
    }
}
