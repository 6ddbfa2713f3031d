use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use dex_core::analysis::{dependency_graph, is_weakly_acyclic};
use dex_core::asp::{
    cautious_over, emit_program_text, run_external_solver, stable_models_with, translate_setting, AspError, NameTable,
    SolveConfig,
};
use dex_core::chase::{canonical_nulls, certain_answers_positive_with, chase_with, ChaseConfig, ChaseError, ChaseResult};
use dex_core::conditional::{conditional_chase_with, CondError, ConditionalChaseConfig};
use dex_core::enumerate::{
    enumerate_supported_solutions, exists_supported_solution, supported_certain_answers, BudgetPolicy, ConstantBudget,
    EnumError,
};
use dex_core::model::{Instance, Setting};
use dex_core::query::{CertainAnswers, Query, Tuple};
use dex_core::rewrite::{approx_answers_with_egds_with, RewriteError};
use dex_core::syntax::{parse_instance, parse_query, parse_setting, SourceText};

#[derive(Parser)]
#[command(name = "dex", version, about = "Supported solutions and certain answers for data exchange settings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Report weak acyclicity and, given facts, whether solutions exist.
    Check {
        #[command(flatten)]
        input: Input,
        /// Print the dependency graph in DOT format.
        #[arg(long)]
        dot: bool,
    },
    /// List the supported solutions over the input constants and the fresh budget.
    Solutions {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        limits: Limits,
    },
    /// Compute the certain answers of a query.
    Answer {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        query: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Exact)]
        mode: Mode,
        #[command(flatten)]
        limits: Limits,
        /// Solve the program with an external ASP solver in `asp` mode.
        #[arg(long, value_name = "PATH")]
        external_solver: Option<PathBuf>,
        /// Argument passed to the external solver, e.g. `0` for clingo to print all models.
        #[arg(long = "solver-arg", value_name = "ARG", allow_hyphen_values = true)]
        solver_args: Vec<String>,
    },
    /// Print the logic program of a setting and source instance.
    EmitAsp {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        limits: Limits,
        /// Replace choice rules by their normal-rule expansion.
        #[arg(long)]
        expand_choice: bool,
        #[arg(short = 'o', long = "output", value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// Run the chase and print the target instance.
    Chase {
        #[command(flatten)]
        input: Input,
        /// Run the conditional chase of a setting without EGDs.
        #[arg(long)]
        conditional: bool,
        /// Print one line per chase step.
        #[arg(long)]
        trace: bool,
        #[arg(long, value_name = "N")]
        cap: Option<usize>,
    },
}

#[derive(Args)]
struct Input {
    #[arg(long)]
    setting: PathBuf,
    #[arg(long)]
    facts: Option<PathBuf>,
}

#[derive(Args)]
struct Limits {
    /// Number of fresh constants available to solutions.
    #[arg(long, value_name = "N")]
    fresh: Option<usize>,
    /// Step cap for chase runs and atom cap for grounding.
    #[arg(long, value_name = "N")]
    cap: Option<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Exact,
    Asp,
    Approx,
    Classical,
}

impl Mode {
    fn name(self) -> &'static str {
        match self {
            Mode::Exact => "exact",
            Mode::Asp => "asp",
            Mode::Approx => "approx",
            Mode::Classical => "classical",
        }
    }
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }

    fn cap(message: impl Into<String>) -> Self {
        Failure { code: 3, message: message.into() }
    }
}

impl From<ChaseError> for Failure {
    fn from(e: ChaseError) -> Self {
        match e {
            ChaseError::StepCapExceeded(_) => Failure::cap(format!("{e}; raise it with --cap")),
            _ => Failure::usage(e.to_string()),
        }
    }
}

impl From<EnumError> for Failure {
    fn from(e: EnumError) -> Self {
        match e {
            EnumError::BudgetTooSmall(_) => Failure::cap(e.to_string()),
            EnumError::Chase(c) => c.into(),
            _ => Failure::usage(e.to_string()),
        }
    }
}

impl From<AspError> for Failure {
    fn from(e: AspError) -> Self {
        match e {
            AspError::GroundingCap(_) => Failure::cap(format!("{e}; raise it with --cap")),
            _ => Failure::usage(e.to_string()),
        }
    }
}

impl From<CondError> for Failure {
    fn from(e: CondError) -> Self {
        match e {
            CondError::StepCapExceeded(_) => Failure::cap(format!("{e}; raise it with --cap")),
            _ => Failure::usage(e.to_string()),
        }
    }
}

impl From<RewriteError> for Failure {
    fn from(e: RewriteError) -> Self {
        match e {
            RewriteError::Enum(e) => e.into(),
            RewriteError::Conditional(e) => e.into(),
        }
    }
}

/// Standard output text and exit code of a successful run.
struct Report {
    out: String,
    code: u8,
}

impl Report {
    fn ok(out: String) -> Self {
        Report { out, code: 0 }
    }
}

fn read(path: &Path) -> Result<SourceText, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
    Ok(SourceText::new(text, path.display().to_string()))
}

fn located<T, E: std::fmt::Display>(path: &Path, r: Result<T, E>) -> Result<T, Failure> {
    r.map_err(|e| Failure::usage(format!("{}:{e}", path.display())))
}

fn load_setting(path: &Path) -> Result<Setting, Failure> {
    located(path, parse_setting(&read(path)?))
}

fn load_facts(input: &Input, setting: &Setting) -> Result<Instance, Failure> {
    match &input.facts {
        Some(path) => located(path, parse_instance(&read(path)?, &setting.source)),
        None => Err(Failure::usage("this command needs --facts")),
    }
}

fn load_query(path: &Path, setting: &Setting) -> Result<Query, Failure> {
    located(path, parse_query(&read(path)?, &setting.target))
}

fn budget(setting: &Setting, source: &Instance, q: Option<&Query>, fresh: Option<usize>) -> Result<ConstantBudget, Failure> {
    match fresh {
        Some(m) => Ok(ConstantBudget::new(setting, source, q, m)),
        None => Ok(ConstantBudget::default_for(setting, source, q)?),
    }
}

fn format_tuple(t: &Tuple) -> String {
    t.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

fn format_answers(q: &Query, answers: &BTreeSet<Tuple>) -> String {
    if q.is_boolean() {
        return format!("{}\n", !answers.is_empty());
    }
    answers.iter().map(|t| format!("{}\n", format_tuple(t))).collect()
}

const NO_SOLUTIONS: &str = "no supported solutions\n";

fn check(input: &Input, dot: bool) -> Result<Report, Failure> {
    let setting = load_setting(&input.setting)?;
    let wa = is_weakly_acyclic(&setting);
    let mut out = format!("weakly-acyclic: {}\n", if wa { "yes" } else { "no" });
    let mut positive = wa;
    if dot {
        out.push_str(&dependency_graph(setting.all_tgds(), None).to_dot());
    }
    if input.facts.is_some() {
        let source = load_facts(input, &setting)?;
        let exists = exists_supported_solution(&setting, &source)?;
        let _ = writeln!(out, "solutions: {}", if exists { "exist" } else { "none" });
        positive &= exists;
    }
    Ok(Report {
        out,
        code: if positive { 0 } else { 1 },
    })
}

fn solutions(input: &Input, limits: &Limits) -> Result<Report, Failure> {
    let setting = load_setting(&input.setting)?;
    let source = load_facts(input, &setting)?;
    let b = budget(&setting, &source, None, limits.fresh)?;
    let found = enumerate_supported_solutions(&setting, &source, &b, BudgetPolicy::Error)?;
    if found.is_empty() {
        return Ok(Report {
            out: NO_SOLUTIONS.to_string(),
            code: 1,
        });
    }
    let blocks: Vec<String> = found.iter().map(ToString::to_string).collect();
    Ok(Report::ok(blocks.join("---\n")))
}

fn chase_config(cap: Option<usize>, trace: bool) -> ChaseConfig {
    ChaseConfig { step_cap: cap, trace }
}

fn conditional_config(cap: Option<usize>, trace: bool) -> ConditionalChaseConfig {
    ConditionalChaseConfig {
        step_cap: cap.unwrap_or(ConditionalChaseConfig::default().step_cap),
        trace,
    }
}

fn answer(
    input: &Input,
    query: &Path,
    mode: Mode,
    limits: &Limits,
    external: Option<&Path>,
    solver_args: &[String],
) -> Result<Report, Failure> {
    let setting = load_setting(&input.setting)?;
    let source = load_facts(input, &setting)?;
    let q = load_query(query, &setting)?;
    let answers = match mode {
        Mode::Exact => {
            let b = budget(&setting, &source, Some(&q), limits.fresh)?;
            supported_certain_answers(&setting, &source, &q, &b, BudgetPolicy::Error)?
        }
        Mode::Asp => {
            let b = budget(&setting, &source, Some(&q), limits.fresh)?;
            let (p, ed) = translate_setting(&setting, &source, &b)?;
            let models = match external {
                Some(path) => {
                    let names = NameTable::for_program(&p, &ed);
                    run_external_solver(path, solver_args, &emit_program_text(&p, &ed), &names)
                        .map_err(|e| Failure::usage(e.to_string()))?
                }
                None => {
                    let mut config = SolveConfig::default();
                    if let Some(cap) = limits.cap {
                        config.cap = cap;
                    }
                    stable_models_with(&p, &ed, &config)?
                }
            };
            match cautious_over(&models, &p.target, &q) {
                dex_core::asp::Cautious::Tuples(t) => CertainAnswers::Tuples(t),
                dex_core::asp::Cautious::NoModels => CertainAnswers::NoSolutions,
            }
        }
        Mode::Approx => {
            if !is_weakly_acyclic(&setting) {
                return Err(Failure::usage("approx mode needs a weakly acyclic setting"));
            }
            approx_answers_with_egds_with(&setting, &source, &q, &conditional_config(limits.cap, false))?
        }
        Mode::Classical => {
            if !q.is_positive() {
                return Err(Failure::usage(
                    "classical mode needs a positive query: atoms, conjunction, disjunction and exists only",
                ));
            }
            certain_answers_positive_with(&setting, &source, &q, &chase_config(limits.cap, false))?
        }
    };
    let guarantee = if mode == Mode::Approx { "under-approximation" } else { "exact" };
    let mut out = format!("% mode={} guarantee={guarantee}\n", mode.name());
    match answers {
        CertainAnswers::Tuples(t) => {
            out.push_str(&format_answers(&q, &t));
            Ok(Report::ok(out))
        }
        CertainAnswers::NoSolutions => {
            out.push_str(NO_SOLUTIONS);
            Ok(Report { out, code: 1 })
        }
    }
}

fn emit_asp(input: &Input, limits: &Limits, expand: bool, output: Option<&Path>) -> Result<Report, Failure> {
    let setting = load_setting(&input.setting)?;
    let source = load_facts(input, &setting)?;
    let b = budget(&setting, &source, None, limits.fresh)?;
    let (p, ed) = translate_setting(&setting, &source, &b)?;
    let p = if expand { p.expanded() } else { p };
    let text = emit_program_text(&p, &ed);
    match output {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display())))?;
            Ok(Report::ok(String::new()))
        }
        None => Ok(Report::ok(text)),
    }
}

fn run_chase(input: &Input, conditional: bool, trace: bool, cap: Option<usize>) -> Result<Report, Failure> {
    let setting = load_setting(&input.setting)?;
    let source = load_facts(input, &setting)?;
    let mut out = String::new();
    if conditional {
        let run = conditional_chase_with(&setting, &source, &conditional_config(cap, trace))?;
        for line in &run.trace {
            let _ = writeln!(out, "% {line}");
        }
        out.push_str(&run.result.canonical_nulls().to_text());
        return Ok(Report::ok(out));
    }
    let run = chase_with(&setting, &source, &chase_config(cap, trace))?;
    for line in &run.trace {
        let _ = writeln!(out, "% {line}");
    }
    match run.result {
        ChaseResult::Success(j) => {
            out.push_str(&canonical_nulls(&j).to_string());
            Ok(Report::ok(out))
        }
        ChaseResult::Failure { egd, .. } => {
            let _ = writeln!(out, "chase failed: {egd} equates two distinct constants");
            Ok(Report { out, code: 1 })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Check { input, dot } => check(input, *dot),
        Command::Solutions { input, limits } => solutions(input, limits),
        Command::Answer {
            input,
            query,
            mode,
            limits,
            external_solver,
            solver_args,
        } => answer(input, query, *mode, limits, external_solver.as_deref(), solver_args),
        Command::EmitAsp {
            input,
            limits,
            expand_choice,
            output,
        } => emit_asp(input, limits, *expand_choice, output.as_deref()),
        Command::Chase {
            input,
            conditional,
            trace,
            cap,
        } => run_chase(input, *conditional, *trace, *cap),
    };
    match result {
        Ok(report) => {
            print!("{}", report.out);
            ExitCode::from(report.code)
        }
        Err(f) => {
            eprintln!("dex: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
