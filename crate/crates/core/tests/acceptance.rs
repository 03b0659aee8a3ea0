//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

mod common;

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use strata::differential::{differential, DiffOptions};
use strata::evaluate::{
    entails_iq, validate_witness, AskOptions, Collapsed, ConsistencyMode, Engine, Prepared,
};
use strata::generate::{case_rng, random_dl_lite_kb, random_graph_kb, random_normal_tbox, random_stratified_kb, signature, KbParams};
use strata::kb::{normalize, parse_kb, KnowledgeBase, Symbol};
use strata::qbf::{qbf_to_kb, qbf_valid_bruteforce, random_qbf};
use strata::rewrite::{RewriteOptions, Rewriting};
use strata::stratify::{check_stratification, verify_preorder};

use rand::Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, budget: Duration) -> Result<(), String> {
    let t = start.elapsed();
    ensure(t < budget, || format!("took {t:?}, budget {budget:?}"))
}

fn ask_all_engines(kb: &KnowledgeBase, query: &str) -> Result<bool, String> {
    let mut answers = Vec::new();
    for engine in [Engine::Collapsed, Engine::Naive, Engine::Oracle] {
        let opts = AskOptions {
            engine,
            ..Default::default()
        };
        answers.push(entails_iq(kb, query, opts).map_err(|e| e.to_string())?.entailed);
    }
    ensure(answers.iter().all(|&a| a == answers[0]), || format!("{query}: engines disagree {answers:?}"))?;
    Ok(answers[0])
}

fn c1_example_regression() -> Outcome {
    let start = Instant::now();
    let kb = parse_kb(common::TEX).map_err(|e| e.to_string())?;
    for (q, want) in [("D(a)", true), ("C(a)", true), ("D(b)", false)] {
        let got = ask_all_engines(&kb, q)?;
        ensure(got == want, || format!("{q}: expected {want}, got {got}"))?;
    }
    within(start, Duration::from_secs(1))?;
    Ok("D(a), C(a) entailed, D(b) not, by all three engines".into())
}

fn c2_separating_tbox() -> Outcome {
    let start = Instant::now();
    let mut kb = parse_kb("tbox:\nexists r . A <= A\n").map_err(|e| e.to_string())?;
    let (t, _) = normalize(&kb.tbox, &mut kb.vocab);
    let r = check_stratification(&t).map_err(|e| e.to_string())?;
    ensure(r.accepted, || "{exists r . A <= A} rejected".into())?;
    let mut kb = parse_kb("tbox:\nexists r . A & exists s . A <= A\n").map_err(|e| e.to_string())?;
    let (t, _) = normalize(&kb.tbox, &mut kb.vocab);
    let r = check_stratification(&t).map_err(|e| e.to_string())?;
    ensure(!r.accepted, || "conjunction of two existential premises accepted".into())?;
    let lines: Vec<String> = r.violations.iter().map(|v| v.describe(&kb.vocab)).collect();
    let cycle = lines.iter().any(|l| l.contains("A ≺ X1") && l.contains("X1 ⪯ A"));
    ensure(cycle, || format!("no A ≺ X1 / X1 ⪯ A cycle in {lines:?}"))?;
    within(start, Duration::from_secs(1))?;
    Ok(format!("recursive axiom accepted; conjunction rejected with {} violations", lines.len()))
}

fn c3_rpq_equivalence() -> Outcome {
    let mut checked = 0;
    for i in 0..200u64 {
        let mut rng = case_rng(3, i);
        let nodes = rng.gen_range(1..=200);
        let edges = rng.gen_range(0..=2 * nodes);
        let kb = random_graph_kb(&mut rng, nodes, edges, 0.05);
        let a = kb.vocab.find_concept("A").unwrap();
        let expected = common::reaches_label(&kb, a);
        let p = Prepared::new(&kb).map_err(|e| e.to_string())?;
        let rw = p.rewriting(false);
        let col = Collapsed::new(&rw, &p.abox);
        for &x in p.abox.individuals() {
            checked += 1;
            let got = col.accepts(a, x);
            ensure(got == expected.contains(&x), || {
                format!("graph {i}, {}: collapsed {got}", kb.vocab.individual_name(x))
            })?;
        }
    }
    let n = 10_000;
    let mut text = String::from("tbox:\nexists r . A <= A\nabox:\n");
    for i in 0..n {
        text.push_str(&format!("r(n{i}, n{})\n", i + 1));
    }
    text.push_str(&format!("A(n{n})\n"));
    let kb = parse_kb(&text).map_err(|e| e.to_string())?;
    let p = Prepared::new(&kb).map_err(|e| e.to_string())?;
    let (a, first) = (kb.vocab.find_concept("A").unwrap(), kb.vocab.find_individual("n0").unwrap());
    let start = Instant::now();
    let rw = p.rewriting(false);
    let answer = Collapsed::new(&rw, &p.abox).accepts(a, first);
    let t = start.elapsed();
    ensure(answer, || "chain head not entailed".into())?;
    within(start, Duration::from_secs(1))?;
    Ok(format!("{checked} graph queries match reachability; 10000-chain answered in {t:.2?}"))
}

fn c4_dl_lite() -> Outcome {
    for i in 0..200u64 {
        let mut kb = random_dl_lite_kb(&mut case_rng(4, i), 10);
        let (t, _) = normalize(&kb.tbox, &mut kb.vocab);
        let r = check_stratification(&t).map_err(|e| e.to_string())?;
        ensure(r.accepted, || format!("DL-Lite TBox {i} rejected:\n{}", strata::kb::print_kb(&kb)))?;
    }
    Ok("200 DL-Lite-core TBoxes accepted".into())
}

fn fuzz_corpus(seed: u64, cases: u64) -> Vec<KnowledgeBase> {
    (0..cases).map(|i| random_stratified_kb(&mut case_rng(seed, i), &KbParams::default())).collect()
}

struct FuzzTotals {
    queries: usize,
    positives: usize,
    disagreements: usize,
    weak_disagreements: usize,
    witnesses: usize,
    witness_failures: usize,
    first_failure: Option<String>,
}

fn run_fuzz(corpus: &[KnowledgeBase]) -> Result<FuzzTotals, String> {
    let mut t = FuzzTotals {
        queries: 0,
        positives: 0,
        disagreements: 0,
        weak_disagreements: 0,
        witnesses: 0,
        witness_failures: 0,
        first_failure: None,
    };
    let opts = DiffOptions { weak: true, witnesses: true };
    for (i, kb) in corpus.iter().enumerate() {
        let r = differential(kb, opts).map_err(|e| format!("case {i}: {e}"))?;
        t.queries += r.queries;
        t.positives += r.positives;
        t.witnesses += r.witnesses_checked;
        t.witness_failures += r.witness_failures.len();
        for d in &r.disagreements {
            if d.collapsed != d.oracle || d.naive != d.oracle {
                t.disagreements += 1;
            }
            if d.naive_weak.is_some_and(|w| w != d.naive) {
                t.weak_disagreements += 1;
            }
        }
        if !r.ok() && t.first_failure.is_none() {
            t.first_failure = Some(format!("case {i}: {:?} {:?}", r.disagreements, r.witness_failures));
        }
    }
    Ok(t)
}

fn c5_three_engines(t: &FuzzTotals, elapsed: Duration) -> Outcome {
    ensure(t.disagreements == 0, || format!("{} disagreements, first {:?}", t.disagreements, t.first_failure))?;
    ensure(elapsed < Duration::from_secs(300), || format!("took {elapsed:?}"))?;
    ensure(t.positives > 0 && t.positives < t.queries, || "degenerate corpus".into())?;
    Ok(format!("1000 KBs, {} queries ({} positive), zero disagreements", t.queries, t.positives))
}

fn c6_brute_force_stratification() -> Outcome {
    let start = Instant::now();
    let (mut accepted, mut rejected) = (0, 0);
    for i in 0..500u64 {
        let mut rng = case_rng(6, i);
        let nc = rng.gen_range(1..=4);
        let nr = rng.gen_range(1..=(5 - nc).min(2));
        let (_, cs, rs) = signature(nc, nr);
        let len = rng.gen_range(1..=6);
        let t = random_normal_tbox(&mut rng, &cs, &rs, len);
        let r = check_stratification(&t).map_err(|e| e.to_string())?;
        let brute = common::brute_force_preorder(&t);
        ensure(r.accepted == brute.is_some(), || {
            format!("TBox {i}: checker {} vs brute force {}", r.accepted, brute.is_some())
        })?;
        if r.accepted {
            accepted += 1;
            let h: BTreeMap<Symbol, u32> = t.symbols().into_iter().map(|s| (s, r.heights.of(s))).collect();
            ensure(common::satisfies(&t, &h), || format!("TBox {i}: checker heights violate a condition"))?;
        } else {
            rejected += 1;
        }
    }
    within(start, Duration::from_secs(60))?;
    ensure(accepted > 0 && rejected > 0, || format!("one-sided sample: {accepted}/{rejected}"))?;
    Ok(format!("500 TBoxes ({accepted} accepted, {rejected} rejected) match exhaustive search"))
}

fn c7_qbf() -> Outcome {
    let start = Instant::now();
    let mut valid = 0;
    for i in 0..100u64 {
        let n = 1 + (i % 3) as usize;
        let m = 1 + (i / 3 % 3) as usize;
        let phi = random_qbf(700 + i, n, m);
        let inst = qbf_to_kb(&phi).map_err(|e| e.to_string())?;
        let mut vocab = inst.kb.vocab.clone();
        let (t, _) = normalize(&inst.kb.tbox, &mut vocab);
        let order = inst.kb.order_heights().ok_or("no order emitted")?;
        verify_preorder(&t, &order).map_err(|e| format!("{phi}: emitted order rejected: {e}"))?;
        let truth = qbf_valid_bruteforce(&phi).map_err(|e| e.to_string())?;
        let ans = entails_iq(&inst.kb, &inst.query, AskOptions::default()).map_err(|e| e.to_string())?;
        ensure(ans.entailed == truth, || format!("{phi}: entailed {} but valid {truth}", ans.entailed))?;
        valid += truth as usize;
    }
    within(start, Duration::from_secs(120))?;
    Ok(format!("100 QBFs ({valid} valid) decided correctly; every emitted order verified"))
}

fn c8_example_order() -> Outcome {
    let mut kb = parse_kb(common::TEX).map_err(|e| e.to_string())?;
    let (t, _) = normalize(&kb.tbox, &mut kb.vocab);
    let v = &kb.vocab;
    let given: BTreeMap<Symbol, i64> = [("A", 0), ("B", 1), ("C", 2), ("D", 3)]
        .into_iter()
        .map(|(n, h)| (Symbol::Concept(v.find_concept(n).unwrap()), h))
        .chain([(Symbol::Role(v.find_role("r").unwrap()), 2)])
        .collect();
    verify_preorder(&t, &given).map_err(|e| format!("(0,1,2,2,3) rejected: {e}"))?;
    let r = check_stratification(&t).map_err(|e| e.to_string())?;
    ensure(r.accepted, || "checker rejects the example TBox".into())?;
    for (&s, &h) in &given {
        let m = r.heights.of(s) as i64;
        ensure(m <= h, || format!("minimal height {m} of {} exceeds {h}", v.symbol_name(s)))?;
    }
    let minimal: Vec<String> = given.keys().map(|&s| format!("{}={}", v.symbol_name(s), r.heights.of(s))).collect();
    Ok(format!("(0,1,2,2,3) verified; minimal heights {}", minimal.join(" ")))
}

fn c9_inconsistency() -> Outcome {
    let kb = parse_kb("abox:\nBot(b)\nr(a, b)\n").map_err(|e| e.to_string())?;
    for q in ["A(a)", "A(b)", "Bot(a)", "Nope(b)"] {
        for engine in [Engine::Collapsed, Engine::Naive, Engine::Oracle] {
            let ans = entails_iq(&kb, q, AskOptions { engine, ..Default::default() }).map_err(|e| e.to_string())?;
            ensure(ans.entailed && ans.by_inconsistency, || format!("{q} with {}: {ans:?}", engine.name()))?;
        }
    }
    let p = Prepared::new(&kb).map_err(|e| e.to_string())?;
    let report = p.consistency_report();
    ensure(!report.oracle, || "oracle calls the KB consistent".into())?;
    let shown = report.to_string();
    ensure(report.agree() != shown.contains("disagreement"), || format!("unreported disagreement: {shown}"))?;
    let auto = entails_iq(&kb, "A(a)", AskOptions { consistency: ConsistencyMode::Automaton, ..Default::default() })
        .map_err(|e| e.to_string())?;
    ensure(auto.consistent == Some(report.automaton), || "automaton mode ignores its own check".into())?;
    // the experimental check on the fuzz corpus, with every gap reported
    let mut gaps = 0;
    let mut inconsistent = 0;
    for kb in fuzz_corpus(9, 300) {
        let p = Prepared::new(&kb).map_err(|e| e.to_string())?;
        let r = p.consistency_report();
        inconsistent += !r.oracle as usize;
        if !r.agree() {
            gaps += 1;
            ensure(r.to_string().contains("disagreement"), || "gap not flagged".into())?;
        }
    }
    Ok(format!(
        "all queries true via the pre-check; automaton check on the example: {shown}; \
         fuzz sample: {inconsistent} inconsistent KBs, {gaps} reported gaps"
    ))
}

fn c10_weak(t: &FuzzTotals) -> Outcome {
    ensure(t.weak_disagreements == 0, || format!("{} queries change with weakening", t.weak_disagreements))?;
    Ok(format!("{} queries identical with and without weakening transitions", t.queries))
}

fn c11_witnesses(t: &FuzzTotals) -> Outcome {
    ensure(t.witness_failures == 0, || format!("{} invalid witnesses", t.witness_failures))?;
    ensure(t.witnesses > 0, || "no witnesses produced".into())?;
    let kb = parse_kb(common::TEX).map_err(|e| e.to_string())?;
    let p = Prepared::new(&kb).map_err(|e| e.to_string())?;
    let rw = Rewriting::new(&p.tbox, p.heights.clone(), p.universe(), RewriteOptions::default());
    let mut example = 0;
    for engine in [Engine::Collapsed, Engine::Naive] {
        let s = p.session(AskOptions { engine, witness: true, ..Default::default() });
        for q in ["A(a)", "B(a)", "C(a)", "D(a)"] {
            let ans = s.ask_text(q).map_err(|e| e.to_string())?;
            let w = ans.witness.ok_or_else(|| format!("{q}: no witness from {}", engine.name()))?;
            validate_witness(&rw, &p.abox, &w).map_err(|e| format!("{q}: {e}"))?;
            example += 1;
        }
    }
    Ok(format!("{} fuzz witnesses and {example} example witnesses validated", t.witnesses))
}

fn main() -> ExitCode {
    let c1 = c1_example_regression();
    let c2 = c2_separating_tbox();
    let c3 = c3_rpq_equivalence();
    let c4 = c4_dl_lite();
    let start = Instant::now();
    let fuzz = run_fuzz(&fuzz_corpus(42, 1000));
    let elapsed = start.elapsed();
    let (c5, c10, c11) = match &fuzz {
        Ok(t) => (c5_three_engines(t, elapsed), c10_weak(t), c11_witnesses(t)),
        Err(e) => (Err(e.clone()), Err(e.clone()), Err(e.clone())),
    };
    let results: Vec<(u32, &str, Outcome)> = vec![
        (1, "example regression", c1),
        (2, "separating TBox", c2),
        (3, "path query equivalence", c3),
        (4, "DL-Lite inclusion", c4),
        (5, "three-engine fuzz", c5),
        (6, "stratification vs exhaustive search", c6_brute_force_stratification()),
        (7, "QBF reduction", c7_qbf()),
        (8, "example order", c8_example_order()),
        (9, "inconsistency semantics", c9_inconsistency()),
        (10, "weakening irrelevance", c10),
        (11, "witness validity", c11),
    ];
    let mut failed = 0;
    for (n, name, r) in &results {
        match r {
            Ok(msg) => println!("criterion {n:>2} PASS  {name}: {msg}"),
            Err(msg) => {
                failed += 1;
                println!("criterion {n:>2} FAIL  {name}: {msg}");
            }
        }
    }
    println!("acceptance: {}/{} passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
