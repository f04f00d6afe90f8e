use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use cspprune::catalog::get_pattern;
use cspprune::engine::{
    eliminate_value, eliminate_variable, preprocess, rule_occurs, val_eliminable, var_eliminable, EngineConfig, Order,
    Outcome, PhasePolicy, Preprocessed, RuleId,
};
use cspprune::fixtures::{fixture, fixture_names, random_instance, random_tree, verify, Fixture};
use cspprune::format::{fingerprint, parse_instance, parse_pattern, serialize_instance, serialize_trace};
use cspprune::oracle::{count_solutions, is_satisfiable, solve};
use cspprune::pattern::{occurs_anywhere, occurs_at, OccurrenceWitness, Pattern};
use cspprune::reconstruct::recover_one;
use cspprune::{Instance, Value, ValueMapping};

/// Binary CSP preprocessing by forbidden-pattern variable and value elimination.
#[derive(Parser)]
#[command(name = "cspprune", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the elimination engine and report what it removed.
    Preprocess {
        input: PathBuf,
        #[command(flatten)]
        engine: EngineArgs,
        /// Write the elimination trace here.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Write the reduced instance here.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Find one solution with the brute-force solver.
    Solve {
        input: PathBuf,
        /// Preprocess first and solve the reduced instance.
        #[arg(long)]
        preprocess: bool,
        /// Extend the reduced solution to the original instance.
        #[arg(long, requires = "preprocess")]
        reconstruct: bool,
        #[command(flatten)]
        engine: EngineArgs,
    },
    /// Count solutions.
    Count { input: PathBuf },
    /// Look for a pattern in an instance.
    Check {
        input: PathBuf,
        /// Catalog name or pattern file.
        #[arg(long)]
        pattern: String,
        /// Variable playing the distinguished pattern variable.
        #[arg(long)]
        at: Option<usize>,
        /// Images of the existential values, e.g. `a=0,b=1`.
        #[arg(long, default_value = "")]
        map: String,
    },
    /// Compare every single elimination against the solver.
    Verify {
        /// Instance files or fixture names.
        targets: Vec<String>,
        /// Also verify every built-in fixture.
        #[arg(long)]
        all_fixtures: bool,
    },
    /// Write a fixture, or `random n d density tightness seed`, or
    /// `tree n d tightness seed`.
    Gen {
        fixture: String,
        params: Vec<String>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct EngineArgs {
    /// Comma-separated rules to enable (default: all).
    #[arg(long, value_delimiter = ',')]
    rules: Vec<String>,
    /// Disable variable elimination.
    #[arg(long)]
    no_var: bool,
    /// Disable value elimination.
    #[arg(long)]
    no_val: bool,
    /// `canonical`, or `explicit:<script>` with steps such as
    /// `val 0 1 Exists2Snake a=0; var 2 BTP`.
    #[arg(long, default_value = "canonical")]
    order: String,
    /// Try value elimination before variable elimination.
    #[arg(long)]
    values_first: bool,
    #[arg(long)]
    max_steps: Option<usize>,
    /// Disable the failed-check cache.
    #[arg(long)]
    no_cache: bool,
}

impl EngineArgs {
    fn config(&self) -> Result<EngineConfig> {
        let mut cfg = if self.rules.is_empty() {
            EngineConfig::default()
        } else {
            let rules = self.rules.iter().map(|r| r.parse::<RuleId>()).collect::<Result<Vec<_>, _>>()?;
            EngineConfig::with_rules(rules)
        };
        if self.no_var {
            cfg = cfg.without_var_rules();
        }
        if self.no_val {
            cfg = cfg.without_val_rules();
        }
        cfg.order = match self.order.strip_prefix("explicit:") {
            Some(script) => Order::parse_script(script)?,
            None if self.order == "canonical" => Order::Canonical,
            None => bail!("unknown order {:?}", self.order),
        };
        if self.values_first {
            cfg.phase_policy = PhasePolicy::ValuesFirst;
        }
        cfg.max_steps = self.max_steps;
        cfg.cache = !self.no_cache;
        Ok(cfg)
    }
}

fn read_instance(path: &Path) -> Result<Instance> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_instance(&text).with_context(|| format!("parsing {}", path.display()))
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn tally(counts: &std::collections::BTreeMap<RuleId, usize>) -> String {
    let total: usize = counts.values().sum();
    if total == 0 {
        return "0".into();
    }
    let parts: Vec<String> = counts.iter().map(|(r, n)| format!("{} {n}", r.display_name())).collect();
    format!("{total} ({})", parts.join(", "))
}

fn domains_line(inst: &Instance) -> String {
    if inst.active_count() == 0 {
        return "none, every variable eliminated".into();
    }
    if inst.active_vars().all(|v| inst.domain(v).len() == 1) {
        return "singleton".into();
    }
    let parts: Vec<String> = inst
        .active_vars()
        .map(|v| {
            let vals: Vec<String> = inst.domain(v).values().map(|a| a.to_string()).collect();
            format!("{v}:{{{}}}", vals.join(","))
        })
        .collect();
    parts.join(" ")
}

fn report(inst: &Instance, pre: &Preprocessed) {
    println!("variables: {} active of {}", pre.instance.active_count(), inst.var_count());
    println!("var-elim: {}", tally(&pre.stats.var_elims));
    println!("val-elim: {}", tally(&pre.stats.val_elims));
    println!("ac: {}", pre.stats.ac_removals);
    if pre.stats.step_limit_hit {
        println!("step limit reached");
    }
    match pre.outcome {
        Outcome::Reduced => println!("final domains: {}", domains_line(&pre.instance)),
        Outcome::Unsatisfiable { wipeout } => println!("unsatisfiable: domain of variable {wipeout} wiped out"),
    }
}

fn status(sat: bool) -> ExitCode {
    if sat {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn run_preprocess(input: &Path, engine: &EngineArgs, trace: Option<&Path>, output: Option<&Path>) -> Result<ExitCode> {
    let inst = read_instance(input)?;
    let cfg = engine.config()?;
    let start = Instant::now();
    let pre = preprocess(&inst, &cfg)?;
    let elapsed = start.elapsed();
    report(&inst, &pre);
    if let Some(path) = trace {
        fs::write(path, serialize_trace(&pre.trace)).with_context(|| format!("writing {}", path.display()))?;
        println!("trace: {} ({} records)", path.display(), pre.trace.len());
    }
    if let Some(path) = output {
        fs::write(path, serialize_instance(&pre.instance)).with_context(|| format!("writing {}", path.display()))?;
        println!("reduced: {}", path.display());
    }
    println!("time: {elapsed:.2?}");
    Ok(status(pre.outcome == Outcome::Reduced))
}

fn run_solve(input: &Path, with_preprocess: bool, reconstruct: bool, engine: &EngineArgs) -> Result<ExitCode> {
    let inst = read_instance(input)?;
    let start = Instant::now();
    if !with_preprocess {
        let s = solve(&inst)?;
        if let Some(s) = &s {
            println!("solution: {s}");
        } else {
            println!("unsatisfiable");
        }
        println!("time: {:.2?}", start.elapsed());
        return Ok(status(s.is_some()));
    }
    let pre = preprocess(&inst, &engine.config()?)?;
    report(&inst, &pre);
    let reduced = match pre.outcome {
        Outcome::Reduced => solve(&pre.instance)?,
        Outcome::Unsatisfiable { .. } => None,
    };
    let Some(s) = reduced else {
        println!("unsatisfiable");
        println!("time: {:.2?}", start.elapsed());
        return Ok(status(false));
    };
    if reconstruct {
        let full = recover_one(&inst, &pre.trace, &s)?;
        println!("solution: {full}");
        println!("valid: {}", inst.is_solution(&full));
    } else {
        println!("reduced solution: {s}");
    }
    println!("time: {:.2?}", start.elapsed());
    Ok(status(true))
}

fn load_pattern(arg: &str) -> Result<Pattern> {
    let path = Path::new(arg);
    if path.is_file() {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        return parse_pattern(&text).with_context(|| format!("parsing {}", path.display()));
    }
    Ok(get_pattern(arg)?.pattern)
}

fn parse_map(text: &str) -> Result<ValueMapping> {
    let mut pairs = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part.split_once('=').with_context(|| format!("expected key=value, got {part:?}"))?;
        let key: Value = match k.trim() {
            "a" => 0,
            "b" => 1,
            other => other.parse().with_context(|| format!("bad mapping key {other:?}"))?,
        };
        let val: Value = v.trim().parse().with_context(|| format!("bad mapping value {v:?}"))?;
        pairs.push((key, val));
    }
    Ok(ValueMapping::new(pairs))
}

fn print_witness(w: &OccurrenceWitness) {
    println!("occurrence");
    for (i, (&v, psi)) in w.phi.iter().zip(&w.psi).enumerate() {
        let vals: Vec<String> = psi.iter().map(|(a, b)| format!("{a}->{b}")).collect();
        println!("  pattern variable {i} -> variable {v}: {}", vals.join(" "));
    }
}

fn run_check(input: &Path, pattern: &str, at: Option<usize>, map: &str) -> Result<ExitCode> {
    let inst = read_instance(input)?;
    let p = load_pattern(pattern)?;
    let witness = match at {
        Some(x) => {
            if x >= inst.var_count() {
                bail!("variable {x} out of range");
            }
            occurs_at(&p, &inst, x, &parse_map(map)?)?
        }
        None if p.is_quantified() => {
            if !p.existential().is_empty() {
                bail!("pattern has existential values; give --at and --map");
            }
            let mut found = None;
            for x in inst.active_vars() {
                if let Some(w) = occurs_at(&p, &inst, x, &ValueMapping::empty())? {
                    found = Some(w);
                    break;
                }
            }
            found
        }
        None => occurs_anywhere(&p, &inst)?,
    };
    match witness {
        Some(w) => print_witness(&w),
        None => println!("no occurrence"),
    }
    Ok(ExitCode::SUCCESS)
}

/// Checks every single elimination, every detector answer and the full
/// preprocessing run of `inst` against the solver; returns the number of
/// disagreements.
fn verify_instance(label: &str, inst: &Instance) -> Result<usize> {
    let sat = is_satisfiable(inst)?;
    let mut cases = 0;
    let mut bad = 0;
    let mut fail = |msg: String| {
        println!("FAIL {label}: {msg}");
        bad += 1;
    };
    for x in inst.active_vars() {
        let dom: Vec<Value> = inst.domain(x).values().collect();
        for rule in RuleId::ALL {
            let maps: Vec<ValueMapping> = match rule.pattern().existential().len() {
                0 => vec![ValueMapping::empty()],
                1 => dom.iter().map(|&d| ValueMapping::new([(0, d)])).collect(),
                _ => dom
                    .iter()
                    .flat_map(|&d| dom.iter().filter(move |&&b| b != d).map(move |&b| ValueMapping::new([(0, d), (1, b)])))
                    .collect(),
            };
            for m in &maps {
                cases += 1;
                let p = rule.pattern();
                if rule_occurs(inst, rule, x, m)? != occurs_at(&p, inst, x, m)?.is_some() {
                    fail(format!("detector for {rule} disagrees with search at {x} under {{{m}}}"));
                }
            }
            if rule.is_var_rule() {
                if let Some(m) = var_eliminable(inst, x, rule)? {
                    let mut reduced = inst.clone();
                    eliminate_variable(&mut reduced, x, rule, &m)?;
                    cases += 1;
                    if is_satisfiable(&reduced)? != sat {
                        fail(format!("{rule} at {x} under {{{m}}} changes satisfiability"));
                    }
                }
                continue;
            }
            for &b in &dom {
                if let Some(m) = val_eliminable(inst, x, b, rule)? {
                    let mut reduced = inst.clone();
                    let step = eliminate_value(&mut reduced, x, b, rule, &m)?;
                    cases += 1;
                    if (step.wipeout.is_none() && is_satisfiable(&reduced)?) != sat {
                        fail(format!("{rule} on <{x},{b}> under {{{m}}} changes satisfiability"));
                    }
                }
            }
        }
    }
    let pre = preprocess(inst, &EngineConfig::default())?;
    cases += 1;
    let reduced = match pre.outcome {
        Outcome::Reduced => solve(&pre.instance)?,
        Outcome::Unsatisfiable { .. } => None,
    };
    match reduced {
        Some(s) if sat => {
            let full = recover_one(inst, &pre.trace, &s)?;
            if !inst.is_solution(&full) {
                fail(format!("recovered assignment {full} is not a solution"));
            }
        }
        None if !sat => {}
        _ => fail("preprocessing changes satisfiability".into()),
    }
    if bad == 0 {
        println!("ok {label}: {cases} cases, satisfiable = {sat}");
    }
    Ok(bad)
}

fn verify_fixture(f: &Fixture) -> usize {
    let mut bad = 0;
    for check in verify(f) {
        if let Err(e) = check.result {
            println!("FAIL {}: claim {}: {e}", f.name, check.claim);
            bad += 1;
        }
    }
    bad
}

fn run_verify(targets: &[String], all_fixtures: bool) -> Result<ExitCode> {
    let mut names: Vec<String> = targets.to_vec();
    if all_fixtures {
        names.extend(fixture_names().into_iter().map(String::from));
    }
    if names.is_empty() {
        bail!("nothing to verify; pass files, fixture names or --all-fixtures");
    }
    let mut bad = 0;
    for name in &names {
        let path = Path::new(name);
        if path.is_file() {
            bad += verify_instance(name, &read_instance(path)?)?;
        } else {
            let f = fixture(name, &[])?;
            bad += verify_fixture(&f);
            bad += verify_instance(f.name, &f.instance)?;
        }
    }
    println!("{} target(s), {bad} disagreement(s)", names.len());
    Ok(status(bad == 0))
}

fn nums<T: std::str::FromStr>(params: &[String], what: &str) -> Result<Vec<T>> {
    params.iter().map(|p| p.parse::<T>().map_err(|_| anyhow::anyhow!("bad {what} parameter {p:?}"))).collect()
}

fn run_gen(name: &str, params: &[String], output: Option<&Path>) -> Result<ExitCode> {
    let inst = match name {
        "random" => {
            let [n, d, density, tightness, seed] = params else {
                bail!("usage: gen random <n> <d> <density> <tightness> <seed>");
            };
            random_instance(n.parse()?, d.parse()?, density.parse()?, tightness.parse()?, seed.parse()?)?
        }
        "tree" => {
            let [n, d, tightness, seed] = params else {
                bail!("usage: gen tree <n> <d> <tightness> <seed>");
            };
            random_tree(n.parse()?, d.parse()?, tightness.parse()?, seed.parse()?)?
        }
        _ => {
            let f = fixture(name, &nums::<usize>(params, name)?)
                .with_context(|| format!("known fixtures: {}", fixture_names().join(", ")))?;
            f.instance
        }
    };
    let mut text = format!("# {name} {}\n# fingerprint {}\n", params.join(" "), fingerprint(&inst));
    text.push_str(&serialize_instance(&inst));
    write_or_print(output, &text)?;
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match &cli.command {
        Command::Preprocess { input, engine, trace, output } => {
            run_preprocess(input, engine, trace.as_deref(), output.as_deref())
        }
        Command::Solve { input, preprocess, reconstruct, engine } => run_solve(input, *preprocess, *reconstruct, engine),
        Command::Count { input } => {
            let n = count_solutions(&read_instance(input)?)?;
            println!("solutions: {n}");
            Ok(status(n > 0))
        }
        Command::Check { input, pattern, at, map } => run_check(input, pattern, *at, map),
        Command::Verify { targets, all_fixtures } => run_verify(targets, *all_fixtures),
        Command::Gen { fixture, params, output } => run_gen(fixture, params, output.as_deref()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
