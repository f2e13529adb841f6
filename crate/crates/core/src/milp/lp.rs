//! Reading and writing the CPLEX LP text format, restricted to what the
//! relaxed model uses: one objective, linear rows, bounds and binaries.

use std::collections::HashMap;
use std::fmt::Write;

use super::model::{Constraint, LinearProgram, Sense, VarKind, Variable};
use super::MilpError;

const TERMS_PER_LINE: usize = 8;

fn number(x: f64) -> String {
    if x == f64::INFINITY {
        "+inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x}")
    }
}

fn expression(out: &mut String, terms: &[(usize, f64)], vars: &[Variable]) {
    for (k, &(v, c)) in terms.iter().enumerate() {
        if k > 0 && k % TERMS_PER_LINE == 0 {
            out.push_str("\n   ");
        }
        let sign = if c.is_sign_negative() { '-' } else { '+' };
        let _ = write!(out, " {sign} {} {}", number(c.abs()), vars[v].name);
    }
}

/// One constraint row in LP syntax, without a trailing newline.
pub fn format_row(row: &Constraint, vars: &[Variable]) -> String {
    let mut out = format!(" {}:", row.name);
    expression(&mut out, &row.terms, vars);
    let _ = write!(out, " {} {}", row.sense.symbol(), number(row.rhs));
    out
}

/// Serializes `lp`. Every variable appears in the bounds section, in order,
/// so a reader recovers the variable order.
pub fn emit_lp(lp: &LinearProgram) -> String {
    let mut out = String::from("\\ relaxed pickup-and-delivery model\nMinimize\n obj:");
    expression(&mut out, &lp.objective, &lp.vars);
    out.push_str("\nSubject To\n");
    for row in &lp.rows {
        out.push_str(&format_row(row, &lp.vars));
        out.push('\n');
    }
    out.push_str("Bounds\n");
    for v in &lp.vars {
        let line = if v.lower == v.upper {
            format!(" {} = {}", v.name, number(v.lower))
        } else if v.lower == f64::NEG_INFINITY && v.upper == f64::INFINITY {
            format!(" {} free", v.name)
        } else {
            format!(" {} <= {} <= {}", number(v.lower), v.name, number(v.upper))
        };
        out.push_str(&line);
        out.push('\n');
    }
    let binaries: Vec<&str> = lp
        .vars
        .iter()
        .filter(|v| v.kind == VarKind::Binary)
        .map(|v| v.name.as_str())
        .collect();
    if !binaries.is_empty() {
        out.push_str("Binaries\n");
        for chunk in binaries.chunks(TERMS_PER_LINE) {
            out.push(' ');
            out.push_str(&chunk.join(" "));
            out.push('\n');
        }
    }
    out.push_str("End\n");
    out
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Preamble,
    Objective,
    Rows,
    Bounds,
    Binaries,
    End,
}

fn section_of(line: &str) -> Option<Section> {
    match line.trim().to_ascii_lowercase().as_str() {
        "minimize" | "minimise" | "min" => Some(Section::Objective),
        "subject to" | "st" | "s.t." => Some(Section::Rows),
        "bounds" => Some(Section::Bounds),
        "binaries" | "binary" | "bin" => Some(Section::Binaries),
        "end" => Some(Section::End),
        _ => None,
    }
}

fn parse_number(tok: &str) -> Result<f64, MilpError> {
    match tok.to_ascii_lowercase().as_str() {
        "+inf" | "inf" | "+infinity" | "infinity" => Ok(f64::INFINITY),
        "-inf" | "-infinity" => Ok(f64::NEG_INFINITY),
        _ => tok
            .parse()
            .map_err(|_| MilpError::Lp(format!("expected a number, found `{tok}`"))),
    }
}

fn parse_sense(tok: &str) -> Option<Sense> {
    match tok {
        "<=" | "=<" | "<" => Some(Sense::Le),
        ">=" | "=>" | ">" => Some(Sense::Ge),
        "=" => Some(Sense::Eq),
        _ => None,
    }
}

/// Parses `[+|-] [coef] name ...` until a sense token or the end.
fn parse_terms<'a>(
    toks: &mut std::iter::Peekable<impl Iterator<Item = &'a str>>,
    names: &HashMap<String, usize>,
) -> Result<Vec<(usize, f64)>, MilpError> {
    let mut terms = Vec::new();
    while let Some(&tok) = toks.peek() {
        if parse_sense(tok).is_some() {
            break;
        }
        let mut sign = 1.0;
        let mut tok = toks.next().expect("peeked");
        if tok == "+" || tok == "-" {
            if tok == "-" {
                sign = -1.0;
            }
            tok = toks
                .next()
                .ok_or_else(|| MilpError::Lp("dangling sign".into()))?;
        }
        let (coef, name) = match parse_number(tok) {
            Ok(c) => {
                let name = toks.next().ok_or_else(|| {
                    MilpError::Lp(format!("coefficient {tok} without a variable"))
                })?;
                (c, name)
            }
            Err(_) => (1.0, tok),
        };
        let v = *names
            .get(name)
            .ok_or_else(|| MilpError::Lp(format!("undeclared variable `{name}`")))?;
        terms.push((v, sign * coef));
    }
    Ok(terms)
}

/// Reads a model written by [`emit_lp`]. Variables must all be declared in
/// the bounds section; undeclared names are an error.
pub fn parse_lp(text: &str) -> Result<LinearProgram, MilpError> {
    let mut chunks: HashMap<&'static str, String> = HashMap::new();
    let mut section = Section::Preamble;
    for raw in text.lines() {
        let line = raw.split('\\').next().unwrap_or("");
        if line.trim().is_empty() {
            continue;
        }
        if let Some(s) = section_of(line) {
            section = s;
            continue;
        }
        let key = match section {
            Section::Objective => "obj",
            Section::Rows => "rows",
            Section::Bounds => "bounds",
            Section::Binaries => "bin",
            Section::Preamble | Section::End => {
                return Err(MilpError::Lp(format!(
                    "text outside a section: `{}`",
                    line.trim()
                )))
            }
        };
        let buf = chunks.entry(key).or_default();
        if key == "bounds" {
            buf.push_str(line.trim());
            buf.push('\n');
        } else {
            buf.push(' ');
            buf.push_str(line);
        }
    }
    let mut lp = LinearProgram::default();
    let mut names = HashMap::new();
    for line in chunks
        .get("bounds")
        .map(String::as_str)
        .unwrap_or("")
        .lines()
    {
        let toks: Vec<&str> = line.split_whitespace().collect();
        let (name, lower, upper) = match toks.as_slice() {
            [name, "free"] => (*name, f64::NEG_INFINITY, f64::INFINITY),
            [name, "=", x] => (*name, parse_number(x)?, parse_number(x)?),
            [lo, "<=", name, "<=", hi] => (*name, parse_number(lo)?, parse_number(hi)?),
            [name, ">=", lo] => (*name, parse_number(lo)?, f64::INFINITY),
            [name, "<=", hi] => (*name, 0.0, parse_number(hi)?),
            _ => return Err(MilpError::Lp(format!("unsupported bound `{line}`"))),
        };
        if names.insert(name.to_string(), lp.vars.len()).is_some() {
            return Err(MilpError::Lp(format!("variable `{name}` bounded twice")));
        }
        lp.var(name.to_string(), VarKind::Continuous, lower, upper);
    }
    for name in chunks
        .get("bin")
        .map(String::as_str)
        .unwrap_or("")
        .split_whitespace()
    {
        let v = *names
            .get(name)
            .ok_or_else(|| MilpError::Lp(format!("undeclared binary `{name}`")))?;
        lp.vars[v].kind = VarKind::Binary;
    }
    let obj = chunks.get("obj").map(String::as_str).unwrap_or("");
    let obj = obj.split_once(':').map_or(obj, |(_, rest)| rest);
    let mut toks = obj.split_whitespace().peekable();
    lp.objective = parse_terms(&mut toks, &names)?;
    let rows = chunks.get("rows").map(String::as_str).unwrap_or("");
    let mut toks = rows.split_whitespace().peekable();
    while let Some(head) = toks.next() {
        let name = head
            .strip_suffix(':')
            .ok_or_else(|| MilpError::Lp(format!("row without a name near `{head}`")))?;
        let terms = parse_terms(&mut toks, &names)?;
        let sense = toks
            .next()
            .and_then(parse_sense)
            .ok_or_else(|| MilpError::Lp(format!("row `{name}` lacks a sense")))?;
        let rhs = parse_number(
            toks.next()
                .ok_or_else(|| MilpError::Lp(format!("row `{name}` lacks a right-hand side")))?,
        )?;
        lp.row(name.to_string(), terms, sense, rhs);
    }
    Ok(lp)
}
