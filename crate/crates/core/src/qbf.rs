//! QBF benchmark: prenex 3-DNF formulas, their encoding as a stratified KB
//! whose query holds iff the formula is valid, and a brute-force evaluator.
//!
//! The encoding builds a binary tree of depth `n` below the single
//! individual `a`. Level `i` is marked by `L{i}`, the child reached through
//! `r{d}_{i}` assigns `x_i = d`, which is recorded as `X{i}_{d}` and copied to
//! all descendants. Leaves evaluate the monomials with `A{j}_1`, `A{j}_2`,
//! and `C{i}_True` collects truth bottom-up according to the quantifiers.
//!
//! Every role copy `r{d}_{i}` is used the same way: the look-back axioms for
//! `C{i}_True_{d}` use the copy of the level they look at, and the axioms
//! copying `X{i}_{v}` downwards exist once per deeper copy.

use std::fmt;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::kb::{parse_kb, KnowledgeBase, ParseError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quantifier {
    Exists,
    Forall,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Literal {
    /// 1-based variable index.
    pub var: usize,
    pub positive: bool,
}

impl Literal {
    pub fn pos(var: usize) -> Self {
        Literal { var, positive: true }
    }

    pub fn neg(var: usize) -> Self {
        Literal { var, positive: false }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Qbf3Dnf {
    pub quantifiers: Vec<Quantifier>,
    pub monomials: Vec<[Literal; 3]>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum QbfError {
    #[error("malformed formula: {0}")]
    Malformed(String),
    #[error("{0} variables is too many for brute force (at most {MAX_BRUTE_VARS})")]
    TooLarge(usize),
    #[error("generated KB does not parse: {0}")]
    Parse(#[from] ParseError),
}

pub const MAX_BRUTE_VARS: usize = 20;

impl Qbf3Dnf {
    pub fn vars(&self) -> usize {
        self.quantifiers.len()
    }

    pub fn validate(&self) -> Result<(), QbfError> {
        let n = self.vars();
        if n == 0 {
            return Err(QbfError::Malformed("no variables".into()));
        }
        if self.monomials.is_empty() {
            return Err(QbfError::Malformed("no monomials".into()));
        }
        for (j, m) in self.monomials.iter().enumerate() {
            for l in m {
                if l.var == 0 || l.var > n {
                    return Err(QbfError::Malformed(format!(
                        "monomial {} mentions x{} but there are {n} variables",
                        j + 1,
                        l.var
                    )));
                }
            }
        }
        Ok(())
    }

    fn matrix(&self, assignment: &[bool]) -> bool {
        self.monomials
            .iter()
            .any(|m| m.iter().all(|l| assignment[l.var - 1] == l.positive))
    }
}

impl fmt::Display for Qbf3Dnf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, q) in self.quantifiers.iter().enumerate() {
            let q = match q {
                Quantifier::Exists => "exists",
                Quantifier::Forall => "forall",
            };
            write!(f, "{q} x{} ", i + 1)?;
        }
        f.write_str(".")?;
        for (j, m) in self.monomials.iter().enumerate() {
            f.write_str(if j == 0 { " " } else { " | " })?;
            let lits: Vec<String> = m
                .iter()
                .map(|l| format!("{}x{}", if l.positive { "" } else { "~" }, l.var))
                .collect();
            write!(f, "({})", lits.join(" & "))?;
        }
        Ok(())
    }
}

/// Validity by recursion over the quantifier prefix.
pub fn qbf_valid_bruteforce(phi: &Qbf3Dnf) -> Result<bool, QbfError> {
    phi.validate()?;
    if phi.vars() > MAX_BRUTE_VARS {
        return Err(QbfError::TooLarge(phi.vars()));
    }
    fn go(phi: &Qbf3Dnf, assignment: &mut Vec<bool>) -> bool {
        let i = assignment.len();
        if i == phi.vars() {
            return phi.matrix(assignment);
        }
        let mut branch = |v: bool| {
            assignment.push(v);
            let r = go(phi, assignment);
            assignment.pop();
            r
        };
        match phi.quantifiers[i] {
            Quantifier::Exists => branch(false) || branch(true),
            Quantifier::Forall => branch(false) && branch(true),
        }
    }
    Ok(go(phi, &mut Vec::with_capacity(phi.vars())))
}

/// Uniform quantifiers and literals, reproducible for a fixed seed.
pub fn random_qbf(seed: u64, n: usize, m: usize) -> Qbf3Dnf {
    assert!(n >= 1 && m >= 1, "need at least one variable and one monomial");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let quantifiers = (0..n)
        .map(|_| {
            if rng.gen_bool(0.5) {
                Quantifier::Exists
            } else {
                Quantifier::Forall
            }
        })
        .collect();
    let monomials = (0..m)
        .map(|_| {
            let mut lit = || Literal {
                var: rng.gen_range(1..=n),
                positive: rng.gen_bool(0.5),
            };
            [lit(), lit(), lit()]
        })
        .collect();
    Qbf3Dnf { quantifiers, monomials }
}

/// The encoded instance. `kb` carries the ABox, the TBox and the order.
#[derive(Debug, Clone)]
pub struct QbfInstance {
    pub text: String,
    pub kb: KnowledgeBase,
    pub query: String,
}

fn l(i: usize) -> String {
    format!("L{i}")
}
fn x(i: usize, v: usize) -> String {
    format!("X{i}_{v}")
}
fn a(j: usize, k: usize) -> String {
    format!("A{j}_{k}")
}
fn c(i: usize) -> String {
    format!("C{i}_True")
}
fn cd(i: usize, d: usize) -> String {
    format!("C{i}_True_{d}")
}
fn r(d: usize, i: usize) -> String {
    format!("r{d}_{i}")
}

fn lit_name(lit: Literal) -> String {
    x(lit.var, lit.positive as usize)
}

/// Axioms of the encoding, grouped by family in the order they are emitted.
pub fn qbf_axioms(phi: &Qbf3Dnf) -> Result<Vec<Vec<String>>, QbfError> {
    phi.validate()?;
    let n = phi.vars();
    let mut fam: Vec<Vec<String>> = vec![Vec::new(); 12];
    for i in 0..n {
        for d in 0..2 {
            fam[0].push(format!("{} <= exists {} . {}", l(i), r(d, i + 1), l(i + 1)));
        }
        for d in 0..2 {
            fam[1].push(format!("exists inv {} . {} <= {}", r(d, i + 1), l(i), x(i + 1, d)));
        }
    }
    for i in 1..=n {
        for j in i..=n {
            for d in 0..2 {
                for v in 0..2 {
                    fam[2].push(format!("exists inv {} . {} <= {}", r(d, j), x(i, v), x(i, v)));
                }
            }
        }
    }
    for (j, m) in phi.monomials.iter().enumerate() {
        let j = j + 1;
        let idx = |lit: Literal, base: usize| base + (!lit.positive) as usize;
        fam[idx(m[0], 3)].push(format!("{} & {} <= {}", l(n), lit_name(m[0]), a(j, 1)));
        fam[idx(m[1], 5)].push(format!("{} & {} <= {}", a(j, 1), lit_name(m[1]), a(j, 2)));
        fam[idx(m[2], 7)].push(format!("{} & {} <= {}", a(j, 2), lit_name(m[2]), c(n)));
    }
    for i in 0..n {
        for d in 0..2 {
            fam[9].push(format!("exists {} . {} <= {}", r(d, i + 1), c(i + 1), cd(i, d)));
        }
        match phi.quantifiers[i] {
            Quantifier::Exists => {
                for d in 0..2 {
                    fam[10].push(format!("{} <= {}", cd(i, d), c(i)));
                }
            }
            Quantifier::Forall => fam[11].push(format!("{} & {} <= {}", cd(i, 0), cd(i, 1), c(i))),
        }
    }
    Ok(fam)
}

/// Linear order on the names of the encoding, lowest level first.
fn qbf_order(phi: &Qbf3Dnf) -> Vec<Vec<String>> {
    let n = phi.vars();
    let m = phi.monomials.len();
    let top = n + 2 * m + 1 + 2 * n;
    let mut levels: Vec<Vec<String>> = vec![Vec::new(); top + 1];
    for i in 0..n {
        levels[i].push(l(i));
        levels[i].push(r(0, i + 1));
        levels[i].push(r(1, i + 1));
    }
    levels[n].push(l(n));
    for i in 1..=n {
        levels[n].push(x(i, 0));
        levels[n].push(x(i, 1));
    }
    for j in 1..=m {
        levels[n + 2 * j - 1].push(a(j, 1));
        levels[n + 2 * j].push(a(j, 2));
    }
    let t = n + 2 * m + 1;
    levels[t].push(c(n));
    for i in 0..n {
        let base = t + 2 * (n - 1 - i);
        levels[base + 1].push(cd(i, 0));
        levels[base + 1].push(cd(i, 1));
        levels[base + 2].push(c(i));
    }
    levels
}

/// Encodes `phi` as KB text with `tbox:`, `abox:` and `order:` sections and
/// parses it back.
pub fn qbf_to_kb(phi: &Qbf3Dnf) -> Result<QbfInstance, QbfError> {
    let fam = qbf_axioms(phi)?;
    let mut text = String::new();
    let _ = writeln!(text, "# {phi}");
    text.push_str("tbox:\n");
    let mut used = std::collections::BTreeSet::new();
    for ax in fam.iter().flatten() {
        let _ = writeln!(text, "{ax}");
        for tok in ax.split(|ch: char| !(ch.is_ascii_alphanumeric() || ch == '_')) {
            used.insert(tok.to_string());
        }
    }
    text.push_str("abox:\nL0(a)\norder:\n");
    for level in qbf_order(phi) {
        let names: Vec<String> = level.into_iter().filter(|s| used.contains(s)).collect();
        if !names.is_empty() {
            let _ = writeln!(text, "{}", names.join(" "));
        }
    }
    let kb = parse_kb(&text)?;
    Ok(QbfInstance {
        text,
        kb,
        query: format!("{}(a)", c(0)),
    })
}


#[cfg(test)]
mod sample {
    use super::*;
    use crate::evaluate::{entails_iq, AskOptions};

    #[test]
    fn small_sample_matches_brute_force() {
        for seed in 0..40u64 {
            let n = 1 + (seed % 3) as usize;
            let m = 1 + (seed / 3 % 3) as usize;
            let phi = random_qbf(seed, n, m);
            let inst = qbf_to_kb(&phi).unwrap();
            let ans = entails_iq(&inst.kb, &inst.query, AskOptions::default()).unwrap();
            assert_eq!(ans.entailed, qbf_valid_bruteforce(&phi).unwrap(), "{phi}");
        }
    }
}
