use std::fmt::Write as _;
use std::io::IsTerminal;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use strata::differential::{differential, DiffOptions, DiffReport};
use strata::evaluate::{AskOptions, ConsistencyMode, Engine, HeightSource, PipelineError, Prepared};
use strata::generate::{case_rng, random_stratified_kb, KbParams};
use strata::kb::{normalize, parse_kb, print_concept, print_kb, KnowledgeBase, Symbol, Vocabulary};
use strata::qbf::{qbf_to_kb, qbf_valid_bruteforce, random_qbf};
use strata::rewrite::{build_automaton, export_automaton, ExportFormat, RewriteOptions};
use strata::saturate::oracle_entails;
use strata::stratify::{check_stratification, complete_preorder, verify_preorder, Heights, VerifyError};

#[derive(Parser, Debug)]
#[command(name = "strata", version, about = "Stratified ELI knowledge bases: checking, rewriting and query answering")]
struct Cli {
    /// Print timing lines.
    #[arg(long, global = true)]
    timings: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decide whether the TBox is stratified and print its heights.
    Check { kb: PathBuf },
    /// Build the automaton for a concept name.
    Rewrite {
        kb: PathBuf,
        #[arg(long = "for", value_name = "CONCEPT")]
        concept: String,
        /// Write the automaton in dot format to this file (`-` for stdout).
        #[arg(long, value_name = "FILE")]
        dot: Option<PathBuf>,
        #[arg(long)]
        include_weak: bool,
    },
    /// Answer an instance query C(a).
    Ask {
        kb: PathBuf,
        #[arg(long, value_name = "C(a)")]
        query: String,
        #[arg(long, value_enum, default_value_t = EngineArg::Collapsed)]
        engine: EngineArg,
        #[arg(long, value_enum, default_value_t = ConsistencyArg::Oracle)]
        consistency: ConsistencyArg,
        #[arg(long)]
        include_weak: bool,
        /// Print an accepting run.
        #[arg(long)]
        witness: bool,
    },
    /// Answer C(a) by saturation.
    Oracle {
        kb: PathBuf,
        #[arg(long, value_name = "C(a)")]
        ask: String,
        /// Print a derivation.
        #[arg(long)]
        trace: bool,
    },
    /// Benchmarks.
    Bench {
        #[command(subcommand)]
        which: BenchCommand,
    },
    /// Cross-check the engines on random stratified KBs.
    Fuzz {
        #[arg(long, default_value_t = 100)]
        cases: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = KbParams::default().concepts)]
        concepts: usize,
        #[arg(long, default_value_t = KbParams::default().roles)]
        roles: usize,
        #[arg(long, default_value_t = KbParams::default().individuals)]
        individuals: usize,
        #[arg(long, default_value_t = KbParams::default().gcis)]
        gcis: usize,
        /// Also run the naive engine with weakening transitions.
        #[arg(long)]
        weak: bool,
        /// Skip validating accepting runs.
        #[arg(long)]
        no_witness: bool,
    },
}

#[derive(Subcommand, Debug)]
enum BenchCommand {
    /// Random QBFs through the reduction, checked against brute force.
    Qbf {
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        m: usize,
        #[arg(long, default_value_t = 100)]
        count: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_name = "DIR")]
        emit_dir: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum EngineArg {
    Collapsed,
    Naive,
    Oracle,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ConsistencyArg {
    Oracle,
    Automaton,
    Off,
}

/// Exit status of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Ok,
    No,
}

struct Out {
    text: String,
    color: bool,
    timings: bool,
}

impl Out {
    fn new(timings: bool) -> Self {
        let color = std::io::stdout().is_terminal() && std::env::var("STRATA_COLOR").map_or(true, |v| v != "0");
        Out {
            text: String::new(),
            color,
            timings,
        }
    }

    fn kv(&mut self, key: &str, value: impl std::fmt::Display) {
        let _ = writeln!(self.text, "{key}: {value}");
    }

    fn line(&mut self, s: impl std::fmt::Display) {
        let _ = writeln!(self.text, "{s}");
    }

    /// A verdict word, green or red on a terminal.
    fn verdict(&mut self, key: &str, word: &str, good: bool) {
        if self.color {
            let code = if good { 32 } else { 31 };
            let _ = writeln!(self.text, "{key}: \x1b[1;{code}m{word}\x1b[0m");
        } else {
            self.kv(key, word);
        }
    }

    fn time(&mut self, key: &str, start: Instant) {
        if self.timings {
            let ms = start.elapsed().as_secs_f64() * 1000.0;
            let _ = writeln!(self.text, "{key}: {ms:.3}ms");
        }
    }
}

fn load(path: &Path) -> Result<KnowledgeBase> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_kb(&text).map_err(|e| anyhow!("{}:{e}", path.display()))
}

fn height_table(out: &mut Out, vocab: &Vocabulary, heights: &Heights, provenance: &strata::kb::Provenance) {
    let mut rows: Vec<(u32, Symbol)> = heights.iter().map(|(s, h)| (h, s)).collect();
    rows.sort_by(|a, b| (a.0, vocab.symbol_name(a.1)).cmp(&(b.0, vocab.symbol_name(b.1))));
    for (h, s) in rows {
        let kind = match s {
            Symbol::Concept(_) => "concept",
            Symbol::Role(_) => "role",
        };
        let fresh = match s {
            Symbol::Concept(c) => provenance
                .get(&c)
                .map(|d| format!(" (fresh for {})", print_concept(d, vocab)))
                .unwrap_or_default(),
            Symbol::Role(_) => String::new(),
        };
        out.line(format!("height {kind} {}: {h}{fresh}", vocab.symbol_name(s)));
    }
}

fn cmd_check(out: &mut Out, path: &Path) -> Result<Status> {
    let kb = load(path)?;
    let start = Instant::now();
    let mut vocab = kb.vocab.clone();
    let (tbox, provenance) = normalize(&kb.tbox, &mut vocab);
    let strat = check_stratification(&tbox)?;
    let notes: Vec<String> = strat
        .constraints
        .top_filler_axioms
        .iter()
        .map(|ax| {
            let role = ax.role().map(|r| vocab.role_name(r.base).to_string()).unwrap_or_default();
            let rhs = ax.rhs_name().map(|c| vocab.concept_name(c).to_string()).unwrap_or_default();
            format!("`{}` is stratified with {role} ⪯ {rhs} in place of {role} ⪯ Top", ax.display(&vocab))
        })
        .collect();
    let verdict = match kb.order_heights() {
        Some(given) => {
            let full = complete_preorder(&tbox, &given);
            match verify_preorder(&tbox, &full) {
                Ok(h) => Ok((h, "order")),
                Err(VerifyError::Violated(v)) => Err(v.iter().map(|v| v.describe(&vocab)).collect::<Vec<_>>()),
                Err(VerifyError::Missing(s)) => Err(vec![format!("no height for {}", vocab.symbol_name(s))]),
                Err(VerifyError::Negative { symbol, height }) => {
                    Err(vec![format!("negative height {height} for {}", vocab.symbol_name(symbol))])
                }
                Err(VerifyError::Stratify(e)) => return Err(e.into()),
            }
        }
        None if strat.accepted => Ok((strat.heights.clone(), "computed")),
        None => Err(strat.violations.iter().map(|v| v.describe(&vocab)).collect()),
    };
    out.time("time_check", start);
    let status = match verdict {
        Ok((heights, source)) => {
            out.verdict("status", "ACCEPTED", true);
            out.kv("axioms", tbox.len());
            out.kv("heights", source);
            out.kv("max_height", heights.max());
            height_table(out, &vocab, &heights, &provenance);
            Status::Ok
        }
        Err(lines) => {
            out.verdict("status", "REJECTED", false);
            out.kv("axioms", tbox.len());
            for l in lines {
                out.kv("violation", l);
            }
            Status::No
        }
    };
    for n in notes {
        out.kv("note", n);
    }
    Ok(status)
}

fn prepare(kb: &KnowledgeBase) -> Result<std::result::Result<Prepared, Vec<String>>> {
    match Prepared::new(kb) {
        Ok(p) => Ok(Ok(p)),
        Err(PipelineError::NotStratified(lines)) => Ok(Err(lines)),
        Err(PipelineError::BadOrder(msg)) => Ok(Err(vec![msg])),
        Err(e) => Err(e.into()),
    }
}

fn rejected(out: &mut Out, lines: Vec<String>) -> Status {
    out.verdict("status", "REJECTED", false);
    for l in lines {
        out.kv("violation", l);
    }
    Status::No
}

fn cmd_rewrite(out: &mut Out, path: &Path, concept: &str, dot: Option<&Path>, include_weak: bool) -> Result<Status> {
    let kb = load(path)?;
    let p = match prepare(&kb)? {
        Ok(p) => p,
        Err(lines) => return Ok(rejected(out, lines)),
    };
    let c = p
        .vocab
        .find_concept(concept)
        .filter(|c| c.is_bot() || p.tbox.concepts().contains(c))
        .ok_or_else(|| anyhow!("concept `{concept}` does not occur in the TBox"))?;
    let start = Instant::now();
    let nfa = build_automaton(&p.tbox, &p.heights, p.universe(), c, RewriteOptions { include_weak })?;
    out.time("time_rewrite", start);
    match dot {
        Some(file) => {
            let text = export_automaton(&nfa, &p.vocab, ExportFormat::Dot);
            if file == Path::new("-") {
                out.text.push_str(&text);
            } else {
                std::fs::write(file, text).with_context(|| format!("cannot write {}", file.display()))?;
                out.kv("dot", file.display());
                out.kv("states", nfa.state_count());
            }
        }
        None => out.text.push_str(&export_automaton(&nfa, &p.vocab, ExportFormat::Text)),
    }
    Ok(Status::Ok)
}

fn cmd_ask(out: &mut Out, path: &Path, query: &str, opts: AskOptions) -> Result<Status> {
    let kb = load(path)?;
    kb.resolve_query(query)?;
    let p = match prepare(&kb)? {
        Ok(p) => p,
        Err(lines) => return Ok(rejected(out, lines)),
    };
    let start = Instant::now();
    let session = p.session(opts);
    let ans = session.ask_text(query)?;
    out.time("time_ask", start);
    out.kv("query", query.trim());
    out.verdict("answer", if ans.entailed { "true" } else { "false" }, ans.entailed);
    let d = &ans.diagnostics;
    out.kv("engine", d.engine.name());
    out.kv("consistency_check", d.consistency.name());
    if let Some(c) = ans.consistent {
        out.kv("consistent", c);
    }
    if ans.by_inconsistency {
        out.kv("reason", "inconsistent knowledge base");
    }
    out.kv(
        "heights",
        match d.height_source {
            HeightSource::Computed => "computed",
            HeightSource::UserOrder => "order",
        },
    );
    out.kv("max_height", d.max_height);
    if let Some(l) = d.query_level {
        out.kv("query_level", l);
    }
    out.kv("visited", d.visited);
    if let Some(w) = &ans.witness {
        out.kv("witness_steps", w.total_steps());
        for l in w.lines(&p.vocab) {
            out.line(format!("  {l}"));
        }
    }
    Ok(if ans.entailed { Status::Ok } else { Status::No })
}

fn cmd_oracle(out: &mut Out, path: &Path, query: &str, trace: bool) -> Result<Status> {
    let kb = load(path)?;
    let (c, a) = kb.resolve_query(query)?;
    let mut vocab = kb.vocab.clone();
    let (tbox, _) = normalize(&kb.tbox, &mut vocab);
    let start = Instant::now();
    let (entailed, consistent, steps) = match c {
        Some(c) => {
            let ans = oracle_entails(&tbox, &kb.abox, vocab.concept_count(), c, a, trace)?;
            (ans.entailed, ans.consistent, ans.trace.map(|t| t.lines(&vocab)))
        }
        None => {
            let ans = oracle_entails(&tbox, &kb.abox, vocab.concept_count(), strata::kb::ConceptId::BOT, a, false)?;
            (!ans.consistent, ans.consistent, None)
        }
    };
    out.time("time_oracle", start);
    out.kv("query", query.trim());
    out.verdict("answer", if entailed { "true" } else { "false" }, entailed);
    out.kv("consistent", consistent);
    if trace {
        match steps {
            Some(lines) => {
                out.kv("trace_steps", lines.len());
                for l in lines {
                    out.line(format!("  {l}"));
                }
            }
            None if entailed && !consistent => out.kv("trace", "none (inconsistent knowledge base)"),
            None if entailed => out.kv("trace", "none (chase budget exhausted)"),
            None => {}
        }
    }
    Ok(if entailed { Status::Ok } else { Status::No })
}

struct QbfRow {
    index: u64,
    formula: String,
    valid: bool,
    order_ok: bool,
    entailed: Option<bool>,
    axioms: usize,
}

fn cmd_bench_qbf(out: &mut Out, n: usize, m: usize, count: u64, seed: u64, emit: Option<&Path>) -> Result<Status> {
    if let Some(dir) = emit {
        std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    let start = Instant::now();
    let rows: Vec<Result<QbfRow>> = (0..count)
        .into_par_iter()
        .map(|i| {
            let phi = random_qbf(seed.wrapping_add(i), n, m);
            let inst = qbf_to_kb(&phi)?;
            if let Some(dir) = emit {
                let file = dir.join(format!("qbf_{i:04}.kb"));
                std::fs::write(&file, &inst.text).with_context(|| format!("cannot write {}", file.display()))?;
            }
            let valid = qbf_valid_bruteforce(&phi)?;
            let (order_ok, entailed, axioms) = match Prepared::new(&inst.kb) {
                Ok(p) => {
                    let ans = p.session(AskOptions::default()).ask_text(&inst.query)?;
                    (true, Some(ans.entailed), p.tbox.len())
                }
                Err(PipelineError::BadOrder(_)) | Err(PipelineError::NotStratified(_)) => (false, None, 0),
                Err(e) => return Err(e.into()),
            };
            Ok(QbfRow {
                index: i,
                formula: phi.to_string(),
                valid,
                order_ok,
                entailed,
                axioms,
            })
        })
        .collect();
    out.kv("bench", "qbf");
    out.kv("n", n);
    out.kv("m", m);
    out.kv("count", count);
    out.kv("seed", seed);
    let mut passed = 0;
    for row in rows {
        let row = row?;
        let pass = row.order_ok && row.entailed == Some(row.valid);
        passed += pass as u64;
        let entailed = row.entailed.map_or("-".to_string(), |e| e.to_string());
        out.line(format!(
            "case {:>4}  valid={:<5}  entailed={:<5}  order={}  axioms={:<4}  {}  {}",
            row.index,
            row.valid,
            entailed,
            if row.order_ok { "ok" } else { "bad" },
            row.axioms,
            if pass { "PASS" } else { "FAIL" },
            row.formula
        ));
    }
    out.time("time_bench", start);
    out.kv("passed", format!("{passed}/{count}"));
    let ok = passed == count;
    out.verdict("status", if ok { "PASS" } else { "FAIL" }, ok);
    Ok(if ok { Status::Ok } else { Status::No })
}

fn cmd_fuzz(out: &mut Out, cases: u64, seed: u64, params: KbParams, opts: DiffOptions) -> Result<Status> {
    let start = Instant::now();
    let results: Vec<(KnowledgeBase, Result<DiffReport, String>)> = (0..cases)
        .into_par_iter()
        .map(|i| {
            let kb = random_stratified_kb(&mut case_rng(seed, i), &params);
            let report = differential(&kb, opts).map_err(|e| e.to_string());
            (kb, report)
        })
        .collect();
    out.time("time_fuzz", start);
    let (mut queries, mut positives, mut inconsistent, mut witnesses) = (0, 0, 0, 0);
    let mut failure = None;
    for (i, (kb, report)) in results.iter().enumerate() {
        match report {
            Ok(r) => {
                queries += r.queries;
                positives += r.positives;
                inconsistent += !r.consistent as usize;
                witnesses += r.witnesses_checked;
                if !r.ok() && failure.is_none() {
                    failure = Some((i, kb, Ok(r)));
                }
            }
            Err(e) => {
                if failure.is_none() {
                    failure = Some((i, kb, Err(e)));
                }
            }
        }
    }
    out.kv("cases", cases);
    out.kv("seed", seed);
    out.kv("queries", queries);
    out.kv("positives", positives);
    out.kv("inconsistent_kbs", inconsistent);
    out.kv("witnesses_checked", witnesses);
    match failure {
        None => {
            out.verdict("status", "PASS", true);
            Ok(Status::Ok)
        }
        Some((i, kb, report)) => {
            out.verdict("status", "FAIL", false);
            out.kv("counterexample_case", i);
            out.kv("counterexample_seed", seed);
            match report {
                Ok(r) => {
                    for d in &r.disagreements {
                        out.kv("disagreement", d);
                    }
                    for (q, e) in &r.witness_failures {
                        out.kv("bad_witness", format!("{q}: {e}"));
                    }
                }
                Err(e) => out.kv("error", e),
            }
            out.line("counterexample:");
            out.text.push_str(&print_kb(kb));
            Ok(Status::No)
        }
    }
}

fn run(cli: Cli, out: &mut Out) -> Result<Status> {
    match cli.command {
        Command::Check { kb } => cmd_check(out, &kb),
        Command::Rewrite {
            kb,
            concept,
            dot,
            include_weak,
        } => cmd_rewrite(out, &kb, &concept, dot.as_deref(), include_weak),
        Command::Ask {
            kb,
            query,
            engine,
            consistency,
            include_weak,
            witness,
        } => {
            let engine = match engine {
                EngineArg::Collapsed => Engine::Collapsed,
                EngineArg::Naive => Engine::Naive,
                EngineArg::Oracle => Engine::Oracle,
            };
            let consistency = match consistency {
                ConsistencyArg::Oracle => ConsistencyMode::Oracle,
                ConsistencyArg::Automaton => ConsistencyMode::Automaton,
                ConsistencyArg::Off => ConsistencyMode::Off,
            };
            let opts = AskOptions {
                engine,
                consistency,
                include_weak,
                witness,
                trace: false,
            };
            cmd_ask(out, &kb, &query, opts)
        }
        Command::Oracle { kb, ask, trace } => cmd_oracle(out, &kb, &ask, trace),
        Command::Bench {
            which: BenchCommand::Qbf {
                n,
                m,
                count,
                seed,
                emit_dir,
            },
        } => cmd_bench_qbf(out, n, m, count, seed, emit_dir.as_deref()),
        Command::Fuzz {
            cases,
            seed,
            concepts,
            roles,
            individuals,
            gcis,
            weak,
            no_witness,
        } => {
            let params = KbParams {
                concepts,
                roles,
                individuals,
                gcis,
                ..KbParams::default()
            };
            let opts = DiffOptions {
                weak,
                witnesses: !no_witness,
            };
            cmd_fuzz(out, cases, seed, params, opts)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut out = Out::new(cli.timings);
    let result = run(cli, &mut out);
    print!("{}", out.text);
    match result {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::No) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
