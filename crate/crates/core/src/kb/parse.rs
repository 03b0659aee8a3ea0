use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::{Concept, KnowledgeBase, RoleExpr, SurfaceGci, Symbol, Vocabulary};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("{line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{line}:1: duplicate `order:` section")]
    DuplicateOrder { line: usize },
    #[error("{line}:{column}: `{name}` is used both as a role and as a concept")]
    KindClash {
        line: usize,
        column: usize,
        name: String,
    },
    #[error("{line}:1: role inclusion axioms are not supported (no role hierarchies)")]
    RoleInclusion { line: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Sub,
    Equiv,
    And,
    Dot,
    LParen,
    RParen,
    Comma,
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    col: usize,
}

fn lex(line_no: usize, line: &str) -> Result<Vec<Spanned>, ParseError> {
    let chars: Vec<char> = line.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        match c {
            '#' => break,
            c if c.is_whitespace() => i += 1,
            '<' if chars.get(i + 1) == Some(&'=') => {
                out.push(Spanned { tok: Tok::Sub, col });
                i += 2;
            }
            '=' if chars.get(i + 1) == Some(&'=') => {
                out.push(Spanned {
                    tok: Tok::Equiv,
                    col,
                });
                i += 2;
            }
            '&' => {
                out.push(Spanned { tok: Tok::And, col });
                i += 1;
            }
            '.' => {
                out.push(Spanned { tok: Tok::Dot, col });
                i += 1;
            }
            '(' => {
                out.push(Spanned {
                    tok: Tok::LParen,
                    col,
                });
                i += 1;
            }
            ')' => {
                out.push(Spanned {
                    tok: Tok::RParen,
                    col,
                });
                i += 1;
            }
            ',' => {
                out.push(Spanned {
                    tok: Tok::Comma,
                    col,
                });
                i += 1;
            }
            c if c.is_ascii_alphabetic() => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push(Spanned {
                    tok: Tok::Ident(chars[start..i].iter().collect()),
                    col,
                });
            }
            other => {
                return Err(ParseError::Syntax {
                    line: line_no,
                    column: col,
                    message: format!("unexpected character `{other}`"),
                })
            }
        }
    }
    Ok(out)
}

fn is_keyword(s: &str) -> bool {
    matches!(s, "exists" | "inv")
}

fn is_reserved_concept(s: &str) -> bool {
    matches!(s, "Top" | "top" | "Bot" | "bot")
}

/// Concept syntax tree with unresolved spellings.
#[derive(Debug, Clone)]
enum RawConcept {
    Name(String, usize),
    And(Box<RawConcept>, Box<RawConcept>),
    Exists(RawRole, Box<RawConcept>),
}

#[derive(Debug, Clone)]
struct RawRole {
    name: String,
    inverted: bool,
    col: usize,
}

#[derive(Debug)]
enum RawLine {
    Gci {
        lhs: RawConcept,
        rhs: RawConcept,
        equiv: bool,
    },
    ConceptAssert {
        concept: String,
        col: usize,
        ind: String,
    },
    RoleAssert {
        role: RawRole,
        a: String,
        b: String,
    },
    Order(Vec<(String, usize)>),
}

struct Cursor<'a> {
    toks: &'a [Spanned],
    pos: usize,
    line: usize,
    line_len: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<&'a Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn col(&self) -> usize {
        self.toks
            .get(self.pos)
            .map(|s| s.col)
            .unwrap_or(self.line_len + 1)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::Syntax {
            line: self.line,
            column: self.col(),
            message: message.into(),
        })
    }

    fn bump(&mut self) -> Option<&'a Spanned> {
        let t = self.toks.get(self.pos);
        self.pos += 1;
        t
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected {what}"))
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, usize), ParseError> {
        match self.toks.get(self.pos) {
            Some(Spanned {
                tok: Tok::Ident(s),
                col,
            }) if !is_keyword(s) => {
                self.pos += 1;
                Ok((s.clone(), *col))
            }
            _ => self.err(format!("expected {what}")),
        }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn role(&mut self) -> Result<RawRole, ParseError> {
        let col = self.col();
        let inverted = if self.peek() == Some(&Tok::Ident("inv".into())) {
            self.pos += 1;
            true
        } else {
            false
        };
        let (name, _) = self.ident("role name")?;
        if is_reserved_concept(&name) {
            return self.err("`Top`/`Bot` cannot be used as a role");
        }
        Ok(RawRole {
            name,
            inverted,
            col,
        })
    }

    fn conj(&mut self) -> Result<RawConcept, ParseError> {
        let mut c = self.unary()?;
        while self.peek() == Some(&Tok::And) {
            self.pos += 1;
            let rhs = self.unary()?;
            c = RawConcept::And(Box::new(c), Box::new(rhs));
        }
        Ok(c)
    }

    fn unary(&mut self) -> Result<RawConcept, ParseError> {
        match self.peek() {
            Some(Tok::Ident(s)) if s == "exists" => {
                self.pos += 1;
                let role = self.role()?;
                self.expect(Tok::Dot, "`.` after the role of an existential")?;
                let filler = self.unary()?;
                Ok(RawConcept::Exists(role, Box::new(filler)))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let c = self.conj()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(c)
            }
            Some(Tok::Ident(s)) if s == "inv" => self.err("`inv` is only allowed inside `exists`"),
            _ => {
                let (name, col) = self.ident("concept")?;
                Ok(RawConcept::Name(name, col))
            }
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    None,
    Tbox,
    Abox,
    Order,
}

fn header_of(line: &str) -> Option<Section> {
    let body = line.split('#').next().unwrap_or("").trim();
    match body {
        "tbox:" => Some(Section::Tbox),
        "abox:" => Some(Section::Abox),
        "order:" => Some(Section::Order),
        _ => None,
    }
}

fn parse_tbox_line(line: usize, toks: &[Spanned], len: usize) -> Result<RawLine, ParseError> {
    let mut cur = Cursor {
        toks,
        pos: 0,
        line,
        line_len: len,
    };
    if cur.peek() == Some(&Tok::Ident("inv".into())) {
        return Err(ParseError::RoleInclusion { line });
    }
    let lhs = cur.conj()?;
    let equiv = match cur.peek() {
        Some(Tok::Sub) => false,
        Some(Tok::Equiv) => true,
        _ => return cur.err("expected `<=` or `==`"),
    };
    cur.bump();
    if cur.peek() == Some(&Tok::Ident("inv".into())) {
        return Err(ParseError::RoleInclusion { line });
    }
    let rhs = cur.conj()?;
    if !cur.at_end() {
        return cur.err("unexpected trailing input");
    }
    Ok(RawLine::Gci { lhs, rhs, equiv })
}

fn parse_abox_line(line: usize, toks: &[Spanned], len: usize) -> Result<RawLine, ParseError> {
    let mut cur = Cursor {
        toks,
        pos: 0,
        line,
        line_len: len,
    };
    let col = cur.col();
    let inverted = if cur.peek() == Some(&Tok::Ident("inv".into())) {
        cur.pos += 1;
        true
    } else {
        false
    };
    let (pred, _) = cur.ident("assertion")?;
    cur.expect(Tok::LParen, "`(`")?;
    let (a, _) = cur.ident("individual name")?;
    let out = if cur.peek() == Some(&Tok::Comma) {
        cur.pos += 1;
        let (b, _) = cur.ident("individual name")?;
        if is_reserved_concept(&pred) {
            return Err(ParseError::Syntax {
                line,
                column: col,
                message: "`Top`/`Bot` cannot be used as a role".into(),
            });
        }
        RawLine::RoleAssert {
            role: RawRole {
                name: pred,
                inverted,
                col,
            },
            a,
            b,
        }
    } else {
        if inverted {
            return Err(ParseError::Syntax {
                line,
                column: col,
                message: "`inv` requires a role assertion r(a, b)".into(),
            });
        }
        RawLine::ConceptAssert {
            concept: pred,
            col,
            ind: a,
        }
    };
    cur.expect(Tok::RParen, "`)`")?;
    if !cur.at_end() {
        return cur.err("unexpected trailing input");
    }
    Ok(out)
}

fn parse_order_line(line: usize, toks: &[Spanned], len: usize) -> Result<RawLine, ParseError> {
    let mut cur = Cursor {
        toks,
        pos: 0,
        line,
        line_len: len,
    };
    let mut names = Vec::new();
    while !cur.at_end() {
        names.push(cur.ident("concept or role name")?);
    }
    Ok(RawLine::Order(names))
}

fn collect_kinds(
    c: &RawConcept,
    line: usize,
    concepts: &mut Vec<(String, usize, usize)>,
    roles: &mut Vec<(String, usize, usize)>,
) {
    match c {
        RawConcept::Name(n, col) => concepts.push((n.clone(), line, *col)),
        RawConcept::And(a, b) => {
            collect_kinds(a, line, concepts, roles);
            collect_kinds(b, line, concepts, roles);
        }
        RawConcept::Exists(r, f) => {
            roles.push((r.name.clone(), line, r.col));
            collect_kinds(f, line, concepts, roles);
        }
    }
}

fn resolve(c: &RawConcept, vocab: &mut Vocabulary) -> Concept {
    match c {
        RawConcept::Name(n, _) => Concept::Atom(vocab.concept(n)),
        RawConcept::And(a, b) => Concept::and(resolve(a, vocab), resolve(b, vocab)),
        RawConcept::Exists(r, f) => {
            let role = RoleExpr {
                base: vocab.role(&r.name),
                inverted: r.inverted,
            };
            Concept::exists(role, resolve(f, vocab))
        }
    }
}

/// Parses the line-oriented KB format (`tbox:`, `abox:`, optional `order:`).
pub fn parse_kb(text: &str) -> Result<KnowledgeBase, ParseError> {
    let mut section = Section::None;
    let mut seen_order = false;
    let mut lines: Vec<(usize, RawLine)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if let Some(h) = header_of(raw) {
            if h == Section::Order {
                if seen_order {
                    return Err(ParseError::DuplicateOrder { line });
                }
                seen_order = true;
            }
            section = h;
            continue;
        }
        let toks = lex(line, raw)?;
        if toks.is_empty() {
            continue;
        }
        let len = raw.chars().count();
        let parsed = match section {
            Section::None => {
                return Err(ParseError::Syntax {
                    line,
                    column: toks[0].col,
                    message: "expected a section header (`tbox:`, `abox:` or `order:`)".into(),
                })
            }
            Section::Tbox => parse_tbox_line(line, &toks, len)?,
            Section::Abox => parse_abox_line(line, &toks, len)?,
            Section::Order => parse_order_line(line, &toks, len)?,
        };
        lines.push((line, parsed));
    }

    // Kind resolution: every spelling is a concept or a role, never both.
    let mut concept_uses = Vec::new();
    let mut role_uses = Vec::new();
    for (line, l) in &lines {
        match l {
            RawLine::Gci { lhs, rhs, .. } => {
                collect_kinds(lhs, *line, &mut concept_uses, &mut role_uses);
                collect_kinds(rhs, *line, &mut concept_uses, &mut role_uses);
            }
            RawLine::ConceptAssert { concept, col, .. } => {
                concept_uses.push((concept.clone(), *line, *col))
            }
            RawLine::RoleAssert { role, .. } => role_uses.push((role.name.clone(), *line, role.col)),
            RawLine::Order(_) => {}
        }
    }
    let role_names: BTreeSet<&str> = role_uses.iter().map(|(n, _, _)| n.as_str()).collect();
    let concept_names: BTreeSet<&str> = concept_uses.iter().map(|(n, _, _)| n.as_str()).collect();

    // `r <= s` between two role spellings is a role inclusion.
    for (line, l) in &lines {
        if let RawLine::Gci {
            lhs: RawConcept::Name(a, _),
            rhs: RawConcept::Name(b, _),
            ..
        } = l
        {
            if role_names.contains(a.as_str()) || role_names.contains(b.as_str()) {
                return Err(ParseError::RoleInclusion { line: *line });
            }
        }
    }
    let mut clashes: Vec<(usize, usize, String)> = concept_uses
        .iter()
        .chain(role_uses.iter())
        .filter(|(n, _, _)| role_names.contains(n.as_str()) && concept_names.contains(n.as_str()))
        .map(|(n, l, c)| (*l, *c, n.clone()))
        .collect();
    clashes.sort();
    if let Some((line, column, name)) = clashes.into_iter().next() {
        return Err(ParseError::KindClash { line, column, name });
    }

    let mut kb = KnowledgeBase::default();
    let mut order_levels: Option<Vec<Vec<Symbol>>> = None;
    let mut order_seen: HashMap<String, usize> = HashMap::new();
    for (line, l) in lines {
        match l {
            RawLine::Gci { lhs, rhs, equiv } => {
                let lhs = resolve(&lhs, &mut kb.vocab);
                let rhs = resolve(&rhs, &mut kb.vocab);
                if equiv {
                    kb.tbox.push(SurfaceGci {
                        lhs: rhs.clone(),
                        rhs: lhs.clone(),
                    });
                }
                kb.tbox.push(SurfaceGci { lhs, rhs });
            }
            RawLine::ConceptAssert { concept, ind, .. } => {
                let c = kb.vocab.concept(&concept);
                let a = kb.vocab.individual(&ind);
                kb.abox.assert_concept(c, a);
            }
            RawLine::RoleAssert { role, a, b } => {
                let s = RoleExpr {
                    base: kb.vocab.role(&role.name),
                    inverted: role.inverted,
                };
                let a = kb.vocab.individual(&a);
                let b = kb.vocab.individual(&b);
                kb.abox.assert_role(s, a, b);
            }
            RawLine::Order(names) => {
                let mut level = Vec::new();
                for (n, col) in names {
                    if is_reserved_concept(&n) {
                        return Err(ParseError::Syntax {
                            line,
                            column: col,
                            message: "`Top`/`Bot` have fixed height 0 and cannot be ordered".into(),
                        });
                    }
                    if let Some(prev) = order_seen.insert(n.clone(), line) {
                        return Err(ParseError::Syntax {
                            line,
                            column: col,
                            message: format!("`{n}` already ordered on line {prev}"),
                        });
                    }
                    let sym = if role_names.contains(n.as_str()) {
                        Symbol::Role(kb.vocab.role(&n))
                    } else {
                        Symbol::Concept(kb.vocab.concept(&n))
                    };
                    level.push(sym);
                }
                order_levels.get_or_insert_with(Vec::new).push(level);
            }
        }
    }
    if seen_order && order_levels.is_none() {
        order_levels = Some(Vec::new());
    }
    kb.order = order_levels;
    Ok(kb)
}

/// Maps spellings in an `order:` section back to heights; exposed for tests.
#[allow(dead_code)]
pub(crate) fn order_by_text(kb: &KnowledgeBase) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    if let Some(levels) = &kb.order {
        for (h, level) in levels.iter().enumerate() {
            for s in level {
                out.insert(kb.vocab.symbol_name(*s).to_string(), h);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::{normalize, ConceptId, NormGci};

    #[test]
    fn minimal_kb() {
        let kb = parse_kb("tbox:\nA <= B\nabox:\nA(a)").unwrap();
        let a = kb.vocab.find_concept("A").unwrap();
        let b = kb.vocab.find_concept("B").unwrap();
        assert_eq!(
            kb.tbox,
            vec![SurfaceGci {
                lhs: Concept::Atom(a),
                rhs: Concept::Atom(b)
            }]
        );
        let ind = kb.vocab.find_individual("a").unwrap();
        assert!(kb.abox.has_concept(ind, a));
        assert!(kb.order.is_none());
    }

    #[test]
    fn example_tbox_parses_to_four_axioms() {
        let text = "tbox:\nA <= B\nA & B <= C\nC <= exists r . Top\nexists r . Top <= D\n";
        let mut kb = parse_kb(text).unwrap();
        let (t, prov) = normalize(&kb.tbox, &mut kb.vocab);
        assert!(prov.is_empty());
        let c = |s: &str| kb.vocab.find_concept(s).unwrap();
        let r = RoleExpr::forward(kb.vocab.find_role("r").unwrap());
        let expected = crate::kb::Tbox::new([
            NormGci::Sub {
                lhs: c("A"),
                rhs: c("B"),
            },
            NormGci::ConjSub {
                lhs1: c("A"),
                lhs2: c("B"),
                rhs: c("C"),
            },
            NormGci::ExRight {
                lhs: c("C"),
                role: r,
                filler: ConceptId::TOP,
            },
            NormGci::ExLeft {
                role: r,
                filler: ConceptId::TOP,
                rhs: c("D"),
            },
        ]);
        assert_eq!(t, expected);
    }

    #[test]
    fn unsatisfiable_filler_becomes_bot() {
        let mut kb = parse_kb("tbox:\nA <= exists inv r . bot\n").unwrap();
        let (t, _) = normalize(&kb.tbox, &mut kb.vocab);
        let a = kb.vocab.find_concept("A").unwrap();
        assert_eq!(
            t.axioms(),
            &[NormGci::Sub {
                lhs: a,
                rhs: ConceptId::BOT
            }]
        );
    }

    #[test]
    fn syntax_errors_carry_position() {
        let err = parse_kb("tbox:\nA <= exists r B\n").unwrap_err();
        assert_eq!(
            err,
            ParseError::Syntax {
                line: 2,
                column: 15,
                message: "expected `.` after the role of an existential".into()
            }
        );
        assert!(matches!(
            parse_kb("A <= B").unwrap_err(),
            ParseError::Syntax { line: 1, .. }
        ));
        assert!(matches!(
            parse_kb("tbox:\nA <= B $\n").unwrap_err(),
            ParseError::Syntax {
                line: 2,
                column: 8,
                ..
            }
        ));
    }

    #[test]
    fn duplicate_order_is_rejected() {
        let err = parse_kb("tbox:\nA <= B\norder:\nA\norder:\nB\n").unwrap_err();
        assert_eq!(err, ParseError::DuplicateOrder { line: 5 });
    }

    #[test]
    fn role_concept_clash() {
        let err = parse_kb("tbox:\nA <= exists r . B\nabox:\nr(a)\n").unwrap_err();
        assert!(matches!(err, ParseError::KindClash { ref name, .. } if name == "r"));
    }

    #[test]
    fn role_inclusions_are_unsupported() {
        let err = parse_kb("tbox:\nA <= exists r . B\nr <= s\n").unwrap_err();
        assert_eq!(err, ParseError::RoleInclusion { line: 3 });
        let err = parse_kb("tbox:\ninv r <= s\n").unwrap_err();
        assert_eq!(err, ParseError::RoleInclusion { line: 2 });
    }

    #[test]
    fn order_section_and_comments() {
        let text = "# header\ntbox:\nA <= exists r . B   # trailing\nabox:\nr(a, b)\ninv r(c, a)\norder:\nA r\nB\n";
        let kb = parse_kb(text).unwrap();
        let by = order_by_text(&kb);
        assert_eq!(by["A"], 0);
        assert_eq!(by["r"], 0);
        assert_eq!(by["B"], 1);
        let r = RoleExpr::forward(kb.vocab.find_role("r").unwrap());
        let (a, c) = (
            kb.vocab.find_individual("a").unwrap(),
            kb.vocab.find_individual("c").unwrap(),
        );
        assert!(kb.abox.has_edge(a, r, c));
    }

    #[test]
    fn equivalence_expands_to_two_gcis() {
        let kb = parse_kb("tbox:\nA == B\n").unwrap();
        assert_eq!(kb.tbox.len(), 2);
    }
}
