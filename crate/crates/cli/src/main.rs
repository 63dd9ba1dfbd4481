//! `litecount` command-line front end.
//!
//! Exit codes: 0 success, 1 parse or validation error, 2 precondition
//! (dialect or shape) rejection, 3 unknown outcome or exhausted bounds.

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use litecount::certain::{self, Bounds, CertainCountRequest, Decision, Engine};
use litecount::cq::{answers, ConjunctiveQuery, CountAnswer};
use litecount::focount::{self, emit_sql, evaluate_set, FoQuery};
use litecount::interp::{annotated_chase, restricted_chase, Interpretation};
use litecount::kb::{is_satisfiable, satisfiability_depth, validate_dialect, ABox, Dialect, TBox, KB};
use litecount::random::{self, Family, Params};
use litecount::reductions::{self, NandCircuit, UndirectedGraph};
use litecount::rewrite::{saturate, saturate_with_provenance};
use litecount::Error;

#[derive(Parser)]
#[command(name = "litecount", version, about = "Certain-answer counting for DL-Lite knowledge bases")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Inputs {
    /// TBox file
    #[arg(short = 't', long = "tbox")]
    tbox: Option<PathBuf>,
    /// ABox file
    #[arg(short = 'a', long = "abox")]
    abox: Option<PathBuf>,
    /// Query file
    #[arg(short = 'q', long = "query")]
    query: Option<PathBuf>,
}

#[derive(Clone, Copy, Default, ValueEnum)]
enum Format {
    #[default]
    Plain,
    Tsv,
    JsonLines,
}

#[derive(Clone, Copy, ValueEnum)]
enum Gadget {
    #[value(name = "3col-disc")]
    ThreeColDisc,
    #[value(name = "3col-branch")]
    ThreeColBranch,
    Nand,
}

#[derive(Subcommand)]
enum Command {
    /// Parse the given files; with --dialect, also check the TBox against it.
    /// Prints nothing on success.
    Validate {
        #[command(flatten)]
        inputs: Inputs,
        /// e.g. core^N-, pos^H-N-, core^H
        #[arg(long)]
        dialect: Option<String>,
    },
    /// Print the shape of a query and the named dialects a TBox belongs to.
    Classify {
        #[command(flatten)]
        inputs: Inputs,
    },
    /// Run the restricted chase and print the resulting interpretation.
    Chase {
        #[command(flatten)]
        inputs: Inputs,
        /// Generations of anonymous elements [default: |body(q)|+1 with -q,
        /// else 1 + number of basic concepts]
        #[arg(long)]
        depth: Option<u32>,
        /// One witness per obligation, carrying the missing count
        #[arg(long)]
        annotated: bool,
    },
    /// Print the saturated rewriting of a query under a TBox.
    Rewrite {
        #[command(flatten)]
        inputs: Inputs,
        /// Append the SQL translation of each query
        #[arg(long)]
        emit_sql: bool,
    },
    /// Evaluate a conjunctive query or a rewritten query set over the ABox alone.
    Eval {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
        /// Print the SQL of each rewritten query instead of evaluating
        #[arg(long)]
        emit_sql: bool,
    },
    /// Certain counts per binding of the answer variables.
    Certcount {
        #[command(flatten)]
        inputs: Inputs,
        #[command(flatten)]
        run: RunArgs,
        /// [default: the first applicable of rewrite, chase, merge-min, brute-force]
        #[arg(long)]
        engine: Option<String>,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Decide whether k is the certain count of a boolean query.
    Decide {
        #[command(flatten)]
        inputs: Inputs,
        #[command(flatten)]
        run: RunArgs,
        #[arg(short = 'k', long)]
        k: u64,
        /// Bind answer variables first, e.g. x=a,y=b
        #[arg(long)]
        bind: Option<String>,
    },
    /// Write a hardness gadget instance: kb.tbox, kb.abox, query.cq, meta.txt.
    Gen {
        #[arg(value_enum)]
        gadget: Gadget,
        /// Graph edge list, or circuit netlist for `nand`
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// For `nand`: replace the number restriction by role inclusions
        #[arg(long)]
        encoded: bool,
    },
    /// Run the built-in sample KB pipeline and a small engine-agreement sweep
    /// seeded from LITECOUNT_SEED.
    Selftest {
        /// Instances in the sweep
        #[arg(long, default_value_t = 100)]
        instances: usize,
    },
}

#[derive(Args, Clone, Copy)]
struct RunArgs {
    /// Chase depth in generations [default: |body(q)|+1]
    #[arg(long)]
    depth: Option<u32>,
    /// Extra anonymous elements for the brute-force engine
    #[arg(long, default_value_t = certain::DEFAULT_EXTRAS)]
    extras: u32,
    /// Step budget for the searching engines
    #[arg(long, default_value_t = certain::DEFAULT_STEP_BUDGET)]
    step_budget: usize,
}

impl RunArgs {
    fn bounds(&self) -> Result<Bounds, Fail> {
        if self.depth == Some(0) || self.step_budget == 0 {
            return Err(Fail::usage("--depth and --step-budget must be positive"));
        }
        Ok(Bounds { chase_depth: self.depth, extra_elements: self.extras, step_budget: self.step_budget })
    }
}

#[derive(Debug)]
struct Fail {
    code: u8,
    msg: String,
}

impl Fail {
    fn usage(msg: impl Into<String>) -> Self {
        Fail { code: 1, msg: msg.into() }
    }
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Parse { .. } | Error::Invalid(_) => 1,
            Error::Precondition(_) => 2,
            Error::Limit(_) => 3,
        };
        Fail { code, msg: e.to_string() }
    }
}

impl From<io::Error> for Fail {
    fn from(e: io::Error) -> Self {
        Fail { code: 1, msg: e.to_string() }
    }
}

impl fmt::Display for Fail {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.msg)
    }
}

fn read(path: &Path) -> Result<String, Fail> {
    fs::read_to_string(path).map_err(|e| Fail::usage(format!("{}: {e}", path.display())))
}

fn need<'a>(p: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path, Fail> {
    p.as_deref().ok_or_else(|| Fail::usage(format!("missing {flag}")))
}

fn with_file<T>(path: &Path, r: litecount::Result<T>) -> Result<T, Fail> {
    r.map_err(|e| {
        let mut f = Fail::from(e);
        f.msg = format!("{}: {}", path.display(), f.msg);
        f
    })
}

impl Inputs {
    fn kb(&self) -> Result<KB, Fail> {
        let tbox = match &self.tbox {
            Some(p) => read(p)?,
            None => String::new(),
        };
        let abox = match &self.abox {
            Some(p) => read(p)?,
            None => String::new(),
        };
        Ok(KB::parse(&tbox, &abox)?)
    }

    fn tbox(&self) -> Result<TBox, Fail> {
        let p = need(&self.tbox, "-t/--tbox")?;
        with_file(p, TBox::parse(&read(p)?))
    }

    fn query_text(&self) -> Result<(PathBuf, String), Fail> {
        let p = need(&self.query, "-q/--query")?;
        Ok((p.to_path_buf(), read(p)?))
    }

    fn query(&self) -> Result<ConjunctiveQuery, Fail> {
        let (p, text) = self.query_text()?;
        with_file(&p, ConjunctiveQuery::parse(&text))
    }
}

fn is_focount(text: &str) -> bool {
    text.lines().map(str::trim).find(|l| !l.is_empty() && !l.starts_with('#')).is_some_and(|l| l.starts_with("Q("))
}

struct Trailer {
    engine: Engine,
    exact: bool,
}

fn print_answers(out: &mut impl Write, format: Format, vars: &[String], ans: &[CountAnswer], trailer: Option<Trailer>) -> io::Result<()> {
    match format {
        Format::Plain => {
            for a in ans {
                writeln!(out, "{a}")?;
            }
        }
        Format::Tsv => {
            let mut header: Vec<&str> = vars.iter().map(String::as_str).collect();
            header.push("count");
            writeln!(out, "{}", header.join("\t"))?;
            for a in ans {
                let m = a.binding_map();
                let mut row: Vec<String> = vars.iter().map(|v| m.get(v).cloned().unwrap_or_default()).collect();
                row.push(a.count.to_string());
                writeln!(out, "{}", row.join("\t"))?;
            }
        }
        Format::JsonLines => {
            for a in ans {
                writeln!(out, "{}", json!({ "binding": a.binding_map(), "count": a.count }))?;
            }
            if let Some(t) = &trailer {
                writeln!(out, "{}", json!({ "engine": t.engine.name(), "exact": t.exact }))?;
            }
            return Ok(());
        }
    }
    if let Some(t) = trailer {
        writeln!(out, "# engine: {}", t.engine)?;
        writeln!(out, "# exact: {}", t.exact)?;
    }
    Ok(())
}

fn named_dialects() -> [(&'static str, Dialect); 7] {
    [
        ("pos", Dialect::POS),
        ("pos^H", Dialect::POS_H),
        ("pos^H-N-", Dialect::POS_HN),
        ("core", Dialect::CORE),
        ("core^N-", Dialect::CORE_N),
        ("core^H", Dialect::CORE_H),
        ("core^HN-", Dialect::CORE_HN),
    ]
}

fn run(cli: Cli, out: &mut impl Write) -> Result<(), Fail> {
    match cli.command {
        Command::Validate { inputs, dialect } => {
            if inputs.tbox.is_some() || inputs.abox.is_some() {
                let kb = inputs.kb()?;
                if let Some(d) = dialect {
                    let d: Dialect = d.parse()?;
                    let violations = validate_dialect(&kb.tbox, &d);
                    if !violations.is_empty() {
                        let lines: Vec<String> = violations.iter().map(ToString::to_string).collect();
                        return Err(Fail::usage(format!("TBox is not in {d}:\n{}", lines.join("\n"))));
                    }
                }
            } else if dialect.is_some() {
                return Err(Fail::usage("--dialect needs -t/--tbox"));
            }
            if inputs.query.is_some() {
                let (p, text) = inputs.query_text()?;
                if is_focount(&text) {
                    with_file(&p, focount::parse_set(&text))?;
                } else {
                    with_file(&p, ConjunctiveQuery::parse(&text))?;
                }
            }
        }
        Command::Classify { inputs } => {
            if inputs.query.is_none() && inputs.tbox.is_none() {
                return Err(Fail::usage("classify needs -q/--query or -t/--tbox"));
            }
            if inputs.query.is_some() {
                let shape = inputs.query()?.classify_shape();
                writeln!(out, "{shape}")?;
            }
            if inputs.tbox.is_some() {
                let t = inputs.tbox()?;
                let names: Vec<&str> =
                    named_dialects().into_iter().filter(|(_, d)| validate_dialect(&t, d).is_empty()).map(|(n, _)| n).collect();
                writeln!(out, "dialects: {}", names.join(" "))?;
            }
        }
        Command::Chase { inputs, depth, annotated } => {
            let kb = inputs.kb()?;
            let depth = match (depth, &inputs.query) {
                (Some(d), _) => d,
                (None, Some(_)) => certain::default_chase_depth(&inputs.query()?),
                (None, None) => satisfiability_depth(&kb.tbox),
            };
            if annotated {
                let c = annotated_chase(&kb, depth);
                write!(out, "{}", c.annotated_interpretation())?;
                writeln!(out, "# saturated: {}", c.saturated)?;
            } else {
                let c = restricted_chase(&kb, depth);
                write!(out, "{}", c.interp)?;
                writeln!(out, "# saturated: {}", c.saturated)?;
            }
        }
        Command::Rewrite { inputs, emit_sql: sql } => {
            let kb = inputs.kb()?;
            let q = inputs.query()?;
            let set = saturate(&q, &kb.tbox)?;
            for (i, fq) in set.iter().enumerate() {
                if i > 0 {
                    writeln!(out)?;
                }
                write!(out, "{fq}")?;
                if sql {
                    writeln!(out, "-- sql")?;
                    writeln!(out, "{};", emit_sql(fq))?;
                }
            }
        }
        Command::Eval { inputs, format, emit_sql: sql } => {
            let abox = match &inputs.abox {
                Some(p) => with_file(p, ABox::parse(&read(p)?))?,
                None => ABox::default(),
            };
            let i = Interpretation::from_abox(&abox)?;
            let (p, text) = inputs.query_text()?;
            if is_focount(&text) {
                let set: Vec<FoQuery> = with_file(&p, focount::parse_set(&text))?;
                if sql {
                    for fq in &set {
                        writeln!(out, "{};", emit_sql(fq))?;
                    }
                    return Ok(());
                }
                let vars = set.first().map(|q| q.group_by.clone()).unwrap_or_default();
                print_answers(out, format, &vars, &evaluate_set(&set, &i)?, None)?;
            } else {
                if sql {
                    return Err(Fail::usage("--emit-sql needs a rewritten query set"));
                }
                let q = with_file(&p, ConjunctiveQuery::parse(&text))?;
                print_answers(out, format, &q.head, &answers(&q, &i), None)?;
            }
        }
        Command::Certcount { inputs, run, engine, format } => {
            let kb = inputs.kb()?;
            let q = inputs.query()?;
            let bounds = run.bounds()?;
            let engine = match engine {
                Some(name) => name.parse::<Engine>()?,
                None => Engine::ALL.into_iter().find(|e| e.check(&kb, &q).is_ok()).unwrap_or(Engine::BruteForce),
            };
            let res = CertainCountRequest { kb, query: q.clone(), engine, bounds }.run()?;
            let trailer = Trailer { engine: res.engine, exact: res.exact };
            print_answers(out, format, &q.head, &res.answers, Some(trailer))?;
        }
        Command::Decide { inputs, run, k, bind } => {
            let kb = inputs.kb()?;
            let mut q = inputs.query()?;
            if let Some(b) = bind {
                let mut binding = std::collections::BTreeMap::new();
                for pair in b.split(',').filter(|s| !s.trim().is_empty()) {
                    let (v, c) = pair.split_once('=').ok_or_else(|| Fail::usage(format!("bad binding `{pair}`")))?;
                    binding.insert(v.trim().to_string(), c.trim().to_string());
                }
                q = q.boolify(&binding)?;
            }
            match certain::decide_count_with(&kb, &q, k, &run.bounds()?)? {
                Decision::Yes => writeln!(out, "yes")?,
                Decision::No => writeln!(out, "no")?,
                Decision::Unknown(why) => {
                    writeln!(out, "unknown")?;
                    return Err(Fail { code: 3, msg: why });
                }
            }
        }
        Command::Gen { gadget, input, out_dir, encoded } => {
            let text = read(&input)?;
            let inst = match gadget {
                Gadget::ThreeColDisc => reductions::gen_3col_disconnected(&with_file(&input, UndirectedGraph::parse(&text))?),
                Gadget::ThreeColBranch => reductions::gen_3col_branching(&with_file(&input, UndirectedGraph::parse(&text))?)?,
                Gadget::Nand => reductions::gen_nand_circuit(&with_file(&input, NandCircuit::parse(&text))?, encoded),
            };
            fs::create_dir_all(&out_dir)?;
            fs::write(out_dir.join("kb.tbox"), inst.kb.tbox.to_string())?;
            fs::write(out_dir.join("kb.abox"), inst.kb.abox.to_string())?;
            fs::write(out_dir.join("query.cq"), format!("{}\n", inst.query))?;
            fs::write(out_dir.join("meta.txt"), inst.meta())?;
        }
        Command::Selftest { instances } => selftest(out, instances)?,
    }
    Ok(())
}

const SAMPLE_TBOX: &str = "A sub >=2 P1\nexists P1- sub >=3 P2\n";
const SAMPLE_ABOX: &str = "A(a)\nP1(a,b)\nP2(b,d)\nP2(b,e)\n";
const SAMPLE_QUERY: &str = "q(x) :- A(x), P1(x,y1), P2(y1,y2).";

fn check(out: &mut impl Write, ok: bool, label: &str, failures: &mut usize) -> io::Result<()> {
    if !ok {
        *failures += 1;
    }
    writeln!(out, "{} {label}", if ok { "ok  " } else { "FAIL" })
}

/// Every exact answer appears in `bounded` with at least its count.
fn dominates(bounded: &[CountAnswer], exact: &[CountAnswer]) -> bool {
    exact.iter().all(|e| bounded.iter().any(|b| b.binding == e.binding && b.count >= e.count))
}

fn selftest(out: &mut impl Write, instances: usize) -> Result<(), Fail> {
    let mut failures = 0;
    let kb = KB::parse(SAMPLE_TBOX, SAMPLE_ABOX)?;
    let q = ConjunctiveQuery::parse(SAMPLE_QUERY)?;
    let i = Interpretation::from_abox(&kb.abox)?;

    let rewritten = saturate_with_provenance(&q, &kb.tbox)?;
    let mut parts: Vec<u64> = rewritten
        .iter()
        .filter_map(|r| focount::evaluate(&r.query, &i).first().map(|a| a.count))
        .filter(|&n| n > 0)
        .collect();
    parts.sort_unstable();
    let total = certain::certcount_rewrite(&kb, &q)?;
    let want = vec![CountAnswer { binding: vec![("x".into(), "a".into())], count: 6 }];
    check(out, total == want, "sample KB rewriting answers x=a with 6", &mut failures)?;
    check(out, parts == [1, 2, 3], "sample KB contributions 1, 2, 3", &mut failures)?;
    check(out, certain::certcount_chase(&kb, &q, Some(2))? == want, "sample KB chase at depth 2", &mut failures)?;

    let seed = random::seed_from_env();
    let mut rng = random::seeded(seed);
    let p = Params::small(Family::CoreN);
    let (mut n, mut bad) = (0, 0);
    while n < instances {
        let (kb, q) = random::random_instance(&mut rng, &p, true, false);
        if !is_satisfiable(&kb) {
            continue;
        }
        n += 1;
        let r = certain::certcount_rewrite(&kb, &q)?;
        let c = certain::certcount_chase(&kb, &q, None)?;
        // a bounded domain can only overcount; widen it before calling a mismatch
        let mut brute_ok = false;
        for extras in certain::DEFAULT_EXTRAS..certain::DEFAULT_EXTRAS + 4 {
            match certain::certcount_bruteforce(&kb, &q, extras) {
                Ok(b) if b == r => brute_ok = true,
                Ok(b) if dominates(&b, &r) => continue,
                Ok(_) => {}
                // out of budget: nothing to compare
                Err(_) => brute_ok = true,
            }
            break;
        }
        if r != c || !brute_ok {
            bad += 1;
            writeln!(out, "mismatch:\n{}--\n{}--\n{q}", kb.tbox, kb.abox)?;
        }
    }
    check(out, bad == 0, &format!("engine agreement on {n} random instances (seed {seed})"), &mut failures)?;
    if failures > 0 {
        return Err(Fail::usage(format!("{failures} selftest check(s) failed")));
    }
    Ok(())
}

fn main() -> ExitCode {
    // clap exits 2 on usage errors, which here means a precondition failure
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let stdout = io::stdout();
    let mut out = io::BufWriter::new(stdout.lock());
    let res = run(cli, &mut out);
    let _ = out.flush();
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("litecount: {f}");
            ExitCode::from(f.code)
        }
    }
}
