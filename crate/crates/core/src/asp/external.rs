use std::path::Path;
use std::process::Command;
use std::sync::atomic::{AtomicUsize, Ordering};

use super::NameTable;
use crate::model::{Atom, Instance, Term};

#[derive(Debug, thiserror::Error)]
pub enum ExternalError {
    #[error("could not run solver {path}: {source}")]
    Spawn { path: String, source: std::io::Error },
    #[error("could not write the program file: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot parse solver output line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Parses the models printed by a solver: each line after a line starting
/// with `Answer:` lists the atoms of one model, separated by spaces.
pub fn parse_models(output: &str, names: &NameTable) -> Result<Vec<Instance>, ExternalError> {
    let mut models = Vec::new();
    let mut lines = output.lines().enumerate();
    while let Some((_, line)) = lines.next() {
        if !line.trim_start().starts_with("Answer:") {
            continue;
        }
        let (n, atoms) = lines.next().unwrap_or((0, ""));
        let model = parse_atoms(atoms, names).map_err(|message| ExternalError::Parse { line: n + 1, message })?;
        models.push(model);
    }
    Ok(models)
}

fn parse_atoms(line: &str, names: &NameTable) -> Result<Instance, String> {
    let chars: Vec<char> = line.chars().collect();
    let mut i = 0;
    let mut out = Instance::new();
    let skip_ws = |i: &mut usize| {
        while *i < chars.len() && chars[*i].is_whitespace() {
            *i += 1;
        }
    };
    loop {
        skip_ws(&mut i);
        if i >= chars.len() {
            return Ok(out);
        }
        let start = i;
        while i < chars.len() && !matches!(chars[i], '(' | ' ' | '\t') {
            i += 1;
        }
        let name: String = chars[start..i].iter().collect();
        let mut args = Vec::new();
        if chars.get(i) == Some(&'(') {
            i += 1;
            loop {
                skip_ws(&mut i);
                let arg = if chars.get(i) == Some(&'"') {
                    i += 1;
                    let mut s = String::new();
                    loop {
                        match chars.get(i) {
                            None => return Err("unterminated string".into()),
                            Some('"') => {
                                i += 1;
                                break;
                            }
                            Some('\\') => {
                                match chars.get(i + 1) {
                                    Some('n') => s.push('\n'),
                                    Some(&c) => s.push(c),
                                    None => return Err("dangling escape".into()),
                                }
                                i += 2;
                            }
                            Some(&c) => {
                                s.push(c);
                                i += 1;
                            }
                        }
                    }
                    s
                } else {
                    let start = i;
                    while i < chars.len() && !matches!(chars[i], ',' | ')') {
                        i += 1;
                    }
                    chars[start..i].iter().collect::<String>().trim().to_string()
                };
                if arg.is_empty() {
                    return Err(format!("empty argument in {name}"));
                }
                args.push(Term::constant(arg));
                match chars.get(i) {
                    Some(',') => i += 1,
                    Some(')') => {
                        i += 1;
                        break;
                    }
                    _ => return Err(format!("unclosed argument list in {name}")),
                }
            }
        }
        let relation = names.relation(&name).map_or(name.clone(), str::to_string);
        out.insert(Atom::new(relation, args));
    }
}

static RUN: AtomicUsize = AtomicUsize::new(0);

/// Writes `program` to a temporary file, runs `<solver> <args..> <file>` and
/// parses every model it prints. The solver must print all models, not
/// just the first.
pub fn run_external_solver(
    solver: &Path,
    args: &[String],
    program: &str,
    names: &NameTable,
) -> Result<Vec<Instance>, ExternalError> {
    let file = std::env::temp_dir().join(format!(
        "dex-program-{}-{}.lp",
        std::process::id(),
        RUN.fetch_add(1, Ordering::Relaxed)
    ));
    std::fs::write(&file, program)?;
    let output = Command::new(solver).args(args).arg(&file).output();
    let _ = std::fs::remove_file(&file);
    let output = output.map_err(|source| ExternalError::Spawn {
        path: solver.display().to_string(),
        source,
    })?;
    parse_models(&String::from_utf8_lossy(&output.stdout), names)
}
