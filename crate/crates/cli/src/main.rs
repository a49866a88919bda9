//! Command-line front end: coefficients, bounds, verification,
//! enumeration, antichain decomposition, extremal search, and the
//! threshold lemma, over the four supported lattices.
//!
//! Exit codes: 0 success, 2 malformed input, 3 verification premise
//! fails, 4 a verified inequality is violated (which would be a bug in
//! the library, never expected).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use genlym::chains::{longest_chain, mirsky_antichains};
use genlym::coefficients::{multiflag_coefficient, sum_of_largest, ChainParams, Composition};
use genlym::continuous::{continuous_bound, ContinuousMode};
use genlym::exact::{BigRat, SymReal};
use genlym::extremal::{max_family, SearchConfig};
use genlym::families::{for_each_tuple, Family, FamilyMode};
use genlym::lattices::{LatticeCtx, LatticeElem};
use genlym::lym::{coefficient_table, ratio_threshold_check, stratum_coefficient, verify_family};
use genlym::{Error, Result};

#[derive(Parser)]
#[command(name = "genlym", version, about = "Exact chain-constrained family bounds over graded lattices", max_term_width = 100)]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Add floating-point display values next to exact ones.
    #[arg(long, global = true)]
    approx: bool,
    /// Write output to a file instead of standard output.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<String>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Human,
}

#[derive(Subcommand)]
enum Cmd {
    /// Counting coefficient of one rank type.
    Coef(CoefArgs),
    /// Sum and cardinality bounds for given chain limits.
    Bound(BoundArgs),
    /// Check a family file against chain limits and the bounds.
    Verify(VerifyArgs),
    /// Stream every tuple of a lattice, or count them per rank type.
    Enumerate(EnumerateArgs),
    /// Partition an element set into antichains by longest-chain level.
    Mirsky(MirskyArgs),
    /// Exact maximum decomposition family size under chain limits.
    Search(SearchArgs),
    /// Check one instance of the threshold lemma behind the bounds.
    #[command(name = "lemma-d")]
    LemmaD(LemmaDArgs),
}

#[derive(Args)]
struct LatticeArgs {
    /// Lattice kind: boolean, subspace, divisor, or continuous.
    #[arg(long)]
    lattice: String,
    /// Ground size: set size, dimension, or the integer whose divisors
    /// form the lattice.
    #[arg(long)]
    n: u64,
    /// Field size (prime), subspace lattices only.
    #[arg(long)]
    q: Option<u64>,
}

impl LatticeArgs {
    fn is_continuous(&self) -> bool {
        self.lattice == "continuous"
    }

    fn continuous_dim(&self) -> Result<u32> {
        u32::try_from(self.n).map_err(|_| Error::Invalid(format!("n {} is too large", self.n)))
    }

    fn discrete_ctx(&self) -> Result<LatticeCtx> {
        let small = || {
            u32::try_from(self.n).map_err(|_| Error::Invalid(format!("n {} is too large", self.n)))
        };
        match self.lattice.as_str() {
            "boolean" => {
                reject_q(self.q)?;
                LatticeCtx::boolean(small()?)
            }
            "subspace" => {
                let q = self
                    .q
                    .ok_or_else(|| Error::Invalid("subspace lattices need --q".into()))?;
                LatticeCtx::subspace(q, small()?)
            }
            "divisor" => {
                reject_q(self.q)?;
                LatticeCtx::divisor(self.n)
            }
            "continuous" => Err(Error::Invalid(
                "this subcommand needs a discrete lattice".into(),
            )),
            other => Err(Error::Invalid(format!("unknown lattice kind {other:?}"))),
        }
    }
}

fn reject_q(q: Option<u64>) -> Result<()> {
    if q.is_some() {
        return Err(Error::Invalid("--q applies only to subspace lattices".into()));
    }
    Ok(())
}

#[derive(Args)]
struct CoefArgs {
    #[command(flatten)]
    lattice: LatticeArgs,
    /// Full rank type, e.g. 1,1,2. Parts must sum to the top rank.
    #[arg(long)]
    parts: String,
    /// decomposition or multichain; affects subspace counts only.
    #[arg(long, default_value = "decomposition")]
    mode: String,
}

#[derive(Args)]
struct BoundArgs {
    #[command(flatten)]
    lattice: LatticeArgs,
    /// Family width.
    #[arg(long)]
    r: usize,
    /// Chain limits, one per component, e.g. 1,2,2.
    #[arg(long)]
    t: String,
    /// decomposition or multichain (chain for the continuous lattice).
    #[arg(long, default_value = "decomposition")]
    mode: String,
}

#[derive(Args)]
struct VerifyArgs {
    /// Family file in the JSON fixture format; - for standard input.
    #[arg(long, value_name = "PATH")]
    r#in: String,
    /// Chain limits, one per component.
    #[arg(long)]
    t: String,
}

#[derive(Args)]
struct EnumerateArgs {
    #[command(flatten)]
    lattice: LatticeArgs,
    /// decomposition or multichain.
    #[arg(long, default_value = "decomposition")]
    mode: String,
    /// Family width.
    #[arg(long)]
    r: usize,
    /// Skip repeated elements in multichains.
    #[arg(long)]
    strict: bool,
    /// Report per-type counts instead of the tuples themselves.
    #[arg(long)]
    counts: bool,
}

#[derive(Args)]
struct MirskyArgs {
    #[command(flatten)]
    lattice: LatticeArgs,
    /// JSON array of elements; - for standard input.
    #[arg(long, value_name = "PATH")]
    r#in: String,
}

#[derive(Args)]
struct SearchArgs {
    #[command(flatten)]
    lattice: LatticeArgs,
    /// Family width.
    #[arg(long)]
    r: usize,
    /// Chain limits, one per component.
    #[arg(long)]
    t: String,
    /// Time budget in seconds; LYM_TIME_BUDGET_SECS overrides the
    /// default of 300.
    #[arg(long, value_name = "SECS")]
    budget_secs: Option<u64>,
    /// Parallel workers; more than one gives up witness reproducibility.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Force the reproducible single-worker search.
    #[arg(long)]
    deterministic: bool,
}

#[derive(Args)]
struct LemmaDArgs {
    /// Non-increasing positive caps, e.g. 3,2,1 or 7/2,2,1/3.
    #[arg(long)]
    caps: String,
    /// Values with 0 <= value <= cap, same length.
    #[arg(long)]
    values: String,
    /// Threshold index, 1-based.
    #[arg(long)]
    t: u64,
}

/// A finished report in all three renderings, plus the exit code.
struct Report {
    json: Value,
    csv: String,
    human: String,
    code: u8,
}

impl Report {
    fn ok(json: Value, csv: String, human: String) -> Self {
        Report {
            json,
            csv,
            human,
            code: 0,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(report) => {
            let body = match cli.format {
                Format::Json => {
                    let mut s =
                        serde_json::to_string_pretty(&report.json).expect("report serializes");
                    s.push('\n');
                    s
                }
                Format::Csv => report.csv,
                Format::Human => report.human,
            };
            match &cli.out {
                None => {
                    print!("{body}");
                    let _ = std::io::stdout().flush();
                }
                Some(path) => {
                    if let Err(e) = std::fs::write(path, body) {
                        eprintln!("error: cannot write {path}: {e}");
                        return ExitCode::from(2);
                    }
                }
            }
            ExitCode::from(report.code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> Result<Report> {
    match &cli.cmd {
        Cmd::Coef(a) => run_coef(a, cli.approx),
        Cmd::Bound(a) => run_bound(a, cli.approx),
        Cmd::Verify(a) => run_verify(a, cli.approx),
        Cmd::Enumerate(a) => run_enumerate(a),
        Cmd::Mirsky(a) => run_mirsky(a),
        Cmd::Search(a) => run_search(a),
        Cmd::LemmaD(a) => run_lemma_d(a),
    }
}

fn parse_params(t: &str) -> Result<ChainParams> {
    let limits = t
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<u64>()
                .map_err(|_| Error::Invalid(format!("bad chain limit {s:?} in --t")))
        })
        .collect::<Result<Vec<u64>>>()?;
    ChainParams::new(limits)
}

fn parse_rationals(which: &str, s: &str) -> Result<Vec<BigRat>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<BigRat>()
                .map_err(|_| Error::Invalid(format!("bad rational {p:?} in --{which}")))
        })
        .collect()
}

fn read_input(path: &str) -> Result<String> {
    if path == "-" {
        let mut buf = String::new();
        std::io::Read::read_to_string(&mut std::io::stdin(), &mut buf)
            .map_err(|e| Error::Invalid(format!("cannot read standard input: {e}")))?;
        Ok(buf)
    } else {
        std::fs::read_to_string(path)
            .map_err(|e| Error::Invalid(format!("cannot read {path}: {e}")))
    }
}

fn parse_json(origin: &str, text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| Error::Invalid(format!("{origin} is not JSON: {e}")))
}

/// Quotes a CSV field; only compositions ever need it here.
fn csv_quote(field: &str) -> String {
    format!("\"{}\"", field.replace('"', "\"\""))
}

fn key_value_csv(rows: &[(&str, String)]) -> String {
    let mut out = String::from("field,value\n");
    for (k, v) in rows {
        let _ = writeln!(out, "{k},{}", csv_quote(v));
    }
    out
}

fn run_coef(a: &CoefArgs, approx: bool) -> Result<Report> {
    let parts = Composition::parse_key(&a.parts)?;
    let coef: SymReal = if a.lattice.is_continuous() {
        FamilyMode::parse(&a.mode)?;
        reject_q(a.lattice.q)?;
        multiflag_coefficient(a.lattice.continuous_dim()?, &parts)?
    } else {
        let ctx = a.lattice.discrete_ctx()?;
        let mode = FamilyMode::parse(&a.mode)?;
        SymReal::from_rat(BigRat::from_int(stratum_coefficient(&ctx, mode, &parts)?))
    };
    let mut json = serde_json::to_value(&coef).expect("coefficient serializes");
    if approx {
        json["approx"] = json!(coef.approx_f64());
    }
    let csv = key_value_csv(&[
        ("parts", parts.key()),
        ("coefficient", coef.to_string()),
    ]);
    let human = format!(
        "coefficient of type ({}) = {}{}\n",
        parts.key(),
        coef,
        approx_suffix(approx, coef.approx_f64())
    );
    Ok(Report::ok(json, csv, human))
}

fn approx_suffix(enabled: bool, value: f64) -> String {
    if enabled {
        format!(" (~{value})")
    } else {
        String::new()
    }
}

fn run_bound(a: &BoundArgs, approx: bool) -> Result<Report> {
    let params = parse_params(&a.t)?;
    if params.len() != a.r {
        return Err(Error::ParamMismatch {
            params: params.len(),
            family: a.r,
        });
    }
    if a.lattice.is_continuous() {
        reject_q(a.lattice.q)?;
        let mode = ContinuousMode::parse(&a.mode)?;
        let b = continuous_bound(a.lattice.continuous_dim()?, a.r, &params, mode)?;
        let mut json = b.to_json();
        if approx {
            json["bound_approx"] = json!(b.bound.approx_f64());
        }
        let mut csv = String::from("composition,coefficient,selected\n");
        for (comp, coef) in &b.coefficient_table {
            let _ = writeln!(
                csv,
                "{},{},{}",
                csv_quote(&comp.key()),
                coef,
                b.selected.contains(comp)
            );
        }
        let mut human = format!(
            "continuous {} bound, n = {}, r = {}, t = ({})\n",
            mode.as_str(),
            b.n,
            b.r,
            a.t
        );
        for (comp, coef) in &b.coefficient_table {
            let mark = if b.selected.contains(comp) { " *" } else { "" };
            let _ = writeln!(human, "  ({}) -> {}{}", comp.key(), coef, mark);
        }
        let _ = writeln!(
            human,
            "sum of the {} largest = {}{}",
            b.budget,
            b.bound,
            approx_suffix(approx, b.bound.approx_f64())
        );
        return Ok(Report::ok(json, csv, human));
    }

    let ctx = a.lattice.discrete_ctx()?;
    let mode = FamilyMode::parse(&a.mode)?;
    let table = coefficient_table(&ctx, mode, a.r)?;
    let (kind, bound) = match mode {
        FamilyMode::Decomposition => ("sigma", params.product_excluding_max()),
        FamilyMode::Multichain => ("tau", params.product()),
    };
    let values: Vec<_> = table.iter().map(|(_, c)| c.clone()).collect();
    let cardinality = sum_of_largest(&values, &bound);
    let table_json: serde_json::Map<String, Value> = table
        .iter()
        .map(|(c, v)| (c.key(), json!(v.to_string())))
        .collect();
    let json = json!({
        "lattice": serde_json::to_value(&ctx).expect("context serializes"),
        "mode": mode.as_str(),
        "r": a.r,
        "params": params.limits(),
        "bound_kind": kind,
        "bound": bound.to_string(),
        "cardinality_bound": cardinality.to_string(),
        "coefficient_table": table_json,
    });
    let mut csv = String::from("composition,coefficient\n");
    for (comp, coef) in &table {
        let _ = writeln!(csv, "{},{}", csv_quote(&comp.key()), coef);
    }
    let mut human = format!(
        "{} {} bounds for r = {}, t = ({}): {} = {}, cardinality bound = {}\n",
        ctx.describe(),
        mode.as_str(),
        a.r,
        a.t,
        kind,
        bound,
        cardinality
    );
    for (comp, coef) in &table {
        let _ = writeln!(human, "  ({}) -> {}", comp.key(), coef);
    }
    Ok(Report::ok(json, csv, human))
}

fn run_verify(a: &VerifyArgs, approx: bool) -> Result<Report> {
    let params = parse_params(&a.t)?;
    let text = read_input(&a.r#in)?;
    let family = Family::from_json(&parse_json(&a.r#in, &text)?)?;
    let report = verify_family(&family, &params)?;
    let premises = report.premises_all_hold() == Some(true);
    let within = report.sum_within_bound == Some(true) && report.size_within_bound == Some(true);
    let code = if !premises {
        3
    } else if !within {
        4
    } else {
        0
    };
    let mut json = report.to_json();
    if approx {
        json["sum_approx"] = json!(report.sum.to_f64());
        if let Some(slack) = &report.slack {
            json["slack_approx"] = json!(slack.to_f64());
        }
    }
    let mut csv = String::from("composition,count,coefficient,contribution\n");
    for (comp, s) in &report.strata {
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            csv_quote(&comp.key()),
            s.count,
            s.coefficient,
            s.contribution
        );
    }
    let mut human = format!(
        "family of {} tuples, width {}, {} mode\n",
        report.family_size,
        report.r,
        report.mode.as_str()
    );
    for (comp, s) in &report.strata {
        let _ = writeln!(
            human,
            "  type ({}): {} of {} -> {}",
            comp.key(),
            s.count,
            s.coefficient,
            s.contribution
        );
    }
    let _ = writeln!(
        human,
        "sum = {}{}",
        report.sum,
        approx_suffix(approx, report.sum.to_f64())
    );
    if let (Some(premise_ok), Some(bound), Some(slack), Some(card)) = (
        &report.premise_ok,
        &report.bound,
        &report.slack,
        &report.cardinality_bound,
    ) {
        let verdicts: Vec<String> = premise_ok
            .iter()
            .enumerate()
            .map(|(k, ok)| format!("t_{} {}", k + 1, if *ok { "holds" } else { "FAILS" }))
            .collect();
        let _ = writeln!(human, "premises: {}", verdicts.join(", "));
        let _ = writeln!(human, "bound = {bound}, slack = {slack}");
        let _ = writeln!(
            human,
            "cardinality bound = {card}, family size = {}",
            report.family_size
        );
    }
    let verdict = match code {
        0 => "verified",
        3 => "premise fails",
        _ => "INEQUALITY VIOLATED (library bug)",
    };
    let _ = writeln!(human, "verdict: {verdict}");
    Ok(Report {
        json,
        csv,
        human,
        code,
    })
}

fn run_enumerate(a: &EnumerateArgs) -> Result<Report> {
    let ctx = a.lattice.discrete_ctx()?;
    let mode = FamilyMode::parse(&a.mode)?;
    if a.strict && mode != FamilyMode::Multichain {
        return Err(Error::Invalid("--strict applies only to multichains".into()));
    }
    if a.counts {
        let mut counts: BTreeMap<Composition, u64> = BTreeMap::new();
        let mut total = 0u64;
        for_each_tuple(&ctx, mode, a.r, a.strict, &mut |parts| {
            let mut ranks = Vec::with_capacity(parts.len());
            let mut prev = 0;
            for p in parts {
                let rk = ctx.rank(p)?;
                match mode {
                    FamilyMode::Decomposition => ranks.push(rk),
                    FamilyMode::Multichain => {
                        ranks.push(rk - prev);
                        prev = rk;
                    }
                }
            }
            *counts.entry(Composition::new(ranks)).or_insert(0) += 1;
            total += 1;
            Ok(())
        })?;
        let counts_json: serde_json::Map<String, Value> =
            counts.iter().map(|(c, n)| (c.key(), json!(n))).collect();
        let json = json!({
            "lattice": serde_json::to_value(&ctx).expect("context serializes"),
            "mode": mode.as_str(),
            "r": a.r,
            "strict": a.strict,
            "strata": counts_json,
            "total": total,
        });
        let mut csv = String::from("composition,count\n");
        for (comp, n) in &counts {
            let _ = writeln!(csv, "{},{n}", csv_quote(&comp.key()));
        }
        let mut human = format!(
            "{} {} tuples of width {} by type\n",
            ctx.describe(),
            mode.as_str(),
            a.r
        );
        for (comp, n) in &counts {
            let _ = writeln!(human, "  ({}) -> {}", comp.key(), n);
        }
        let _ = writeln!(human, "total {total}");
        return Ok(Report::ok(json, csv, human));
    }

    let mut tuples_json = Vec::new();
    let mut csv = String::new();
    let mut human = String::new();
    let mut total = 0u64;
    for k in 1..=a.r {
        let _ = write!(csv, "{}d{k}", if k > 1 { "," } else { "" });
    }
    csv.push('\n');
    for_each_tuple(&ctx, mode, a.r, a.strict, &mut |parts| {
        total += 1;
        let texts: Vec<String> = parts.iter().map(|p| ctx.elem_to_string(p)).collect();
        let _ = writeln!(
            csv,
            "{}",
            texts
                .iter()
                .map(|t| csv_quote(t))
                .collect::<Vec<_>>()
                .join(",")
        );
        let _ = writeln!(human, "{}", texts.join(" | "));
        let json_parts = parts
            .iter()
            .map(|p| ctx.elem_to_json(p))
            .collect::<Result<Vec<Value>>>()?;
        tuples_json.push(Value::Array(json_parts));
        Ok(())
    })?;
    let json = json!({
        "lattice": serde_json::to_value(&ctx).expect("context serializes"),
        "mode": mode.as_str(),
        "r": a.r,
        "strict": a.strict,
        "tuples": tuples_json,
        "total": total,
    });
    let _ = writeln!(human, "total {total}");
    Ok(Report::ok(json, csv, human))
}

fn run_mirsky(a: &MirskyArgs) -> Result<Report> {
    let ctx = a.lattice.discrete_ctx()?;
    let text = read_input(&a.r#in)?;
    let parsed = parse_json(&a.r#in, &text)?;
    let arr = parsed
        .as_array()
        .ok_or_else(|| Error::Invalid("input must be a JSON array of elements".into()))?;
    let elems = arr
        .iter()
        .map(|v| ctx.elem_from_json(v))
        .collect::<Result<Vec<LatticeElem>>>()?;
    let chain = longest_chain(&ctx, &elems)?;
    let levels = mirsky_antichains(&ctx, &elems)?;
    let levels_json = levels
        .iter()
        .map(|level| {
            level
                .iter()
                .map(|e| ctx.elem_to_json(e))
                .collect::<Result<Vec<Value>>>()
                .map(Value::Array)
        })
        .collect::<Result<Vec<Value>>>()?;
    let witness_json = chain
        .witness
        .iter()
        .map(|e| ctx.elem_to_json(e))
        .collect::<Result<Vec<Value>>>()?;
    let json = json!({
        "lattice": serde_json::to_value(&ctx).expect("context serializes"),
        "height": chain.height,
        "longest_chain": witness_json,
        "antichains": levels_json,
    });
    let mut csv = String::from("level,element\n");
    for (i, level) in levels.iter().enumerate() {
        for e in level {
            let _ = writeln!(csv, "{},{}", i + 1, csv_quote(&ctx.elem_to_string(e)));
        }
    }
    let mut human = format!(
        "longest chain has {} elements: {}\n",
        chain.height,
        chain
            .witness
            .iter()
            .map(|e| ctx.elem_to_string(e))
            .collect::<Vec<_>>()
            .join(" < ")
    );
    for (i, level) in levels.iter().enumerate() {
        let _ = writeln!(
            human,
            "antichain {}: {}",
            i + 1,
            level
                .iter()
                .map(|e| ctx.elem_to_string(e))
                .collect::<Vec<_>>()
                .join(", ")
        );
    }
    Ok(Report::ok(json, csv, human))
}

fn run_search(a: &SearchArgs) -> Result<Report> {
    let ctx = a.lattice.discrete_ctx()?;
    let params = parse_params(&a.t)?;
    let budget_secs = match a.budget_secs {
        Some(s) => s,
        None => match std::env::var("LYM_TIME_BUDGET_SECS") {
            Ok(v) => v.parse::<u64>().map_err(|_| {
                Error::Invalid(format!("bad LYM_TIME_BUDGET_SECS value {v:?}"))
            })?,
            Err(_) => 300,
        },
    };
    let workers = if a.deterministic { 1 } else { a.workers.max(1) };
    let config = SearchConfig {
        budget: Duration::from_secs(budget_secs),
        workers,
    };
    let result = max_family(&ctx, a.r, &params, &config)?;
    let json = result.to_json()?;
    let csv = key_value_csv(&[
        ("max_size", result.max_size.to_string()),
        ("theorem_bound", result.theorem_bound.to_string()),
        ("nodes_explored", result.nodes_explored.to_string()),
        ("proved_optimal", result.proved_optimal.to_string()),
    ]);
    let mut human = format!(
        "maximum family size = {} (theorem bound {}), {}\n",
        result.max_size,
        result.theorem_bound,
        if result.proved_optimal {
            "proved optimal"
        } else {
            "time budget hit, best found so far"
        }
    );
    let _ = writeln!(human, "nodes explored: {}", result.nodes_explored);
    let _ = writeln!(human, "witness family of {} tuples:", result.witness.len());
    for t in result.witness.tuples() {
        let _ = writeln!(
            human,
            "  {}",
            t.parts()
                .iter()
                .map(|e| ctx.elem_to_string(e))
                .collect::<Vec<_>>()
                .join(" | ")
        );
    }
    Ok(Report::ok(json, csv, human))
}

fn run_lemma_d(a: &LemmaDArgs) -> Result<Report> {
    let caps = parse_rationals("caps", &a.caps)?;
    let values = parse_rationals("values", &a.values)?;
    let (hypothesis, conclusion) = ratio_threshold_check(&caps, &values, a.t)?;
    let json = json!({
        "hypothesis_holds": hypothesis,
        "conclusion_holds": conclusion,
    });
    let csv = key_value_csv(&[
        ("hypothesis_holds", hypothesis.to_string()),
        ("conclusion_holds", conclusion.to_string()),
    ]);
    let human = format!(
        "hypothesis {}, conclusion {}\n",
        if hypothesis { "holds" } else { "does not hold" },
        if conclusion { "holds" } else { "does not hold" }
    );
    Ok(Report::ok(json, csv, human))
}
