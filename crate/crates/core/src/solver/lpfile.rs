//! Reader for the LP text format emitted by the scheduler (a CPLEX-LP
//! subset: Minimize/Maximize, Subject To, Bounds, Binaries, End). Lets the
//! bundled solver ingest exported models standalone and lets external
//! engines be cross-checked on identical input.

use std::collections::BTreeMap;

use super::{LpProblem, LpRow, Sense, SolverError};

#[derive(Debug, Clone)]
pub struct ParsedLp {
    pub problem: LpProblem,
    pub binaries: Vec<usize>,
    pub names: Vec<String>,
    /// True when the file declared `Maximize`; the stored objective is
    /// already negated to minimization form.
    pub maximize: bool,
    pub objective_constant: f64,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Name(String),
    Num(f64),
    Plus,
    Minus,
    Colon,
    Le,
    Ge,
    Eq,
}

fn err(msg: impl Into<String>) -> SolverError {
    SolverError::LpParse(msg.into())
}

fn tokenize(text: &str) -> Result<Vec<Tok>, SolverError> {
    let mut toks = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\r' | '\n' => i += 1,
            '+' => {
                toks.push(Tok::Plus);
                i += 1;
            }
            '-' => {
                toks.push(Tok::Minus);
                i += 1;
            }
            ':' => {
                toks.push(Tok::Colon);
                i += 1;
            }
            '<' | '>' | '=' => {
                let mut j = i + 1;
                if j < bytes.len() && bytes[j] as char == '=' {
                    j += 1;
                }
                toks.push(match c {
                    '<' => Tok::Le,
                    '>' => Tok::Ge,
                    _ => Tok::Eq,
                });
                i = j;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < bytes.len() {
                    let d = bytes[i] as char;
                    if d.is_ascii_digit() || d == '.' {
                        i += 1;
                    } else if (d == 'e' || d == 'E')
                        && i + 1 < bytes.len()
                        && ((bytes[i + 1] as char).is_ascii_digit()
                            || bytes[i + 1] as char == '+'
                            || bytes[i + 1] as char == '-')
                    {
                        i += 2;
                        while i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                            i += 1;
                        }
                        break;
                    } else {
                        break;
                    }
                }
                let s = &text[start..i];
                let v: f64 = s.parse().map_err(|_| err(format!("bad number `{s}`")))?;
                toks.push(Tok::Num(v));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len() {
                    let d = bytes[i] as char;
                    if d.is_ascii_alphanumeric() || d == '_' {
                        i += 1;
                    } else {
                        break;
                    }
                }
                toks.push(Tok::Name(text[start..i].to_string()));
            }
            other => return Err(err(format!("unexpected character `{other}`"))),
        }
    }
    Ok(toks)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    Objective,
    Constraints,
    Bounds,
    Binaries,
    End,
}

struct VarTable {
    index: BTreeMap<String, usize>,
    names: Vec<String>,
}

impl VarTable {
    fn intern(&mut self, name: &str) -> usize {
        if let Some(&i) = self.index.get(name) {
            return i;
        }
        let i = self.names.len();
        self.index.insert(name.to_string(), i);
        self.names.push(name.to_string());
        i
    }
}

/// Parses LP text into a minimization problem plus binary markers.
pub fn parse_lp(text: &str) -> Result<ParsedLp, SolverError> {
    // Strip comments, then cut the file into sections by heading lines.
    let mut sections: Vec<(Section, String)> = Vec::new();
    let mut current: Option<(Section, String)> = None;
    let mut maximize = false;
    for raw in text.lines() {
        let line = match raw.find('\\') {
            Some(p) => &raw[..p],
            None => raw,
        };
        let head = line.trim().to_ascii_lowercase();
        let section = match head.as_str() {
            "minimize" | "min" | "minimise" => Some(Section::Objective),
            "maximize" | "max" | "maximise" => Some(Section::Objective),
            "subject to" | "such that" | "st" | "s.t." => Some(Section::Constraints),
            "bounds" | "bound" => Some(Section::Bounds),
            "binaries" | "binary" | "bin" => Some(Section::Binaries),
            "end" => Some(Section::End),
            "general" | "generals" | "gen" => {
                return Err(err("general integer section not supported"))
            }
            _ => None,
        };
        match section {
            Some(s) => {
                if s == Section::Objective && head.starts_with("max") {
                    maximize = true;
                }
                if let Some(done) = current.take() {
                    sections.push(done);
                }
                current = Some((s, String::new()));
            }
            None => {
                if let Some((_, buf)) = &mut current {
                    buf.push_str(line);
                    buf.push('\n');
                }
            }
        }
    }
    if let Some(done) = current.take() {
        sections.push(done);
    }

    let mut vars = VarTable {
        index: BTreeMap::new(),
        names: Vec::new(),
    };
    let mut objective: Vec<(usize, f64)> = Vec::new();
    let mut objective_constant = 0.0;
    let mut rows: Vec<LpRow> = Vec::new();
    let mut bounds: Vec<(usize, f64, f64, bool)> = Vec::new(); // (var, lo, hi, is_free)
    let mut binaries: Vec<usize> = Vec::new();

    for (section, body) in &sections {
        match section {
            Section::Objective => {
                let toks = tokenize(body)?;
                let toks = strip_label(&toks);
                let (terms, constant, rest) = parse_linear(&mut vars, toks)?;
                if !rest.is_empty() {
                    return Err(err("trailing tokens after objective"));
                }
                objective = terms;
                objective_constant = constant;
            }
            Section::Constraints => {
                let toks = tokenize(body)?;
                let mut rest: &[Tok] = strip_label(&toks);
                while !rest.is_empty() {
                    let (terms, constant, after) = parse_linear(&mut vars, rest)?;
                    let sense = match after.first() {
                        Some(Tok::Le) => Sense::Le,
                        Some(Tok::Ge) => Sense::Ge,
                        Some(Tok::Eq) => Sense::Eq,
                        _ => return Err(err("constraint missing sense")),
                    };
                    let (rhs, after_rhs) = parse_signed_number(&after[1..])?;
                    rows.push(LpRow {
                        coeffs: terms,
                        sense,
                        rhs: rhs - constant,
                    });
                    rest = strip_label(after_rhs);
                }
            }
            Section::Bounds => {
                for line in body.lines() {
                    let toks = tokenize(line)?;
                    if toks.is_empty() {
                        continue;
                    }
                    parse_bound_line(&mut vars, &toks, &mut bounds)?;
                }
            }
            Section::Binaries => {
                for tok in tokenize(body)? {
                    match tok {
                        Tok::Name(n) => binaries.push(vars.intern(&n)),
                        _ => return Err(err("binaries section expects names")),
                    }
                }
            }
            Section::End => {}
        }
    }

    let n = vars.names.len();
    // LP-format default bounds: [0, +inf).
    let mut lower = vec![0.0; n];
    let mut upper = vec![f64::INFINITY; n];
    for (j, lo, hi, free) in bounds {
        if free {
            lower[j] = f64::NEG_INFINITY;
            upper[j] = f64::INFINITY;
        } else {
            lower[j] = lo;
            upper[j] = hi;
        }
    }
    for &j in &binaries {
        lower[j] = lower[j].max(0.0);
        upper[j] = upper[j].min(1.0);
    }

    let mut obj = vec![0.0; n];
    for (j, c) in objective {
        obj[j] += c;
    }
    if maximize {
        obj.iter_mut().for_each(|c| *c = -*c);
    }

    binaries.sort_unstable();
    binaries.dedup();
    Ok(ParsedLp {
        problem: LpProblem {
            lower,
            upper,
            objective: obj,
            rows,
        },
        binaries,
        names: vars.names,
        maximize,
        objective_constant,
    })
}

/// Consumes a leading `name :` if present.
fn strip_label(toks: &[Tok]) -> &[Tok] {
    match (toks.first(), toks.get(1)) {
        (Some(Tok::Name(_)), Some(Tok::Colon)) => &toks[2..],
        _ => toks,
    }
}

/// Parses `[+-] [coef] var ...` until a non-expression token; returns the
/// terms, any constant, and the remaining tokens.
fn parse_linear<'t>(
    vars: &mut VarTable,
    mut toks: &'t [Tok],
) -> Result<(Vec<(usize, f64)>, f64, &'t [Tok]), SolverError> {
    let mut terms: Vec<(usize, f64)> = Vec::new();
    let mut constant = 0.0;
    loop {
        let mut sign = 1.0;
        let mut idx = 0;
        loop {
            match toks.get(idx) {
                Some(Tok::Plus) => idx += 1,
                Some(Tok::Minus) => {
                    sign = -sign;
                    idx += 1;
                }
                _ => break,
            }
        }
        match (toks.get(idx), toks.get(idx + 1)) {
            (Some(Tok::Num(v)), Some(Tok::Name(n))) => {
                let var = vars.intern(n);
                terms.push((var, sign * v));
                toks = &toks[idx + 2..];
            }
            (Some(Tok::Num(v)), next) => {
                // A bare number is a constant unless it is the rhs (which
                // follows a sense token, handled by the caller).
                if idx == 0 && terms.is_empty() && constant == 0.0 && next.is_none() {
                    constant += sign * v;
                    toks = &toks[idx + 1..];
                } else if matches!(next, Some(Tok::Le) | Some(Tok::Ge) | Some(Tok::Eq)) {
                    constant += sign * v;
                    toks = &toks[idx + 1..];
                } else {
                    constant += sign * v;
                    toks = &toks[idx + 1..];
                }
            }
            (Some(Tok::Name(n)), _) => {
                let var = vars.intern(n);
                terms.push((var, sign));
                toks = &toks[idx + 1..];
            }
            _ => {
                if idx > 0 {
                    return Err(err("dangling sign"));
                }
                return Ok((terms, constant, toks));
            }
        }
    }
}

fn parse_signed_number(toks: &[Tok]) -> Result<(f64, &[Tok]), SolverError> {
    let mut sign = 1.0;
    let mut idx = 0;
    loop {
        match toks.get(idx) {
            Some(Tok::Plus) => idx += 1,
            Some(Tok::Minus) => {
                sign = -sign;
                idx += 1;
            }
            Some(Tok::Num(v)) => return Ok((sign * v, &toks[idx + 1..])),
            Some(Tok::Name(n)) if is_inf(n) => return Ok((sign * f64::INFINITY, &toks[idx + 1..])),
            _ => return Err(err("expected a number")),
        }
    }
}

fn is_inf(name: &str) -> bool {
    matches!(name.to_ascii_lowercase().as_str(), "inf" | "infinity")
}

fn parse_bound_line(
    vars: &mut VarTable,
    toks: &[Tok],
    bounds: &mut Vec<(usize, f64, f64, bool)>,
) -> Result<(), SolverError> {
    // `x free`
    if let (Some(Tok::Name(n)), Some(Tok::Name(kw))) = (toks.first(), toks.get(1)) {
        if kw.eq_ignore_ascii_case("free") {
            let j = vars.intern(n);
            bounds.push((j, 0.0, 0.0, true));
            return Ok(());
        }
    }
    // `lo <= x <= hi` | `x <= hi` | `x >= lo` | `x = v`
    let (first, rest) = split_operand(vars, toks)?;
    match first {
        Operand::Num(lo) => {
            if rest.first() != Some(&Tok::Le) {
                return Err(err("bound line expects `lo <= var ...`"));
            }
            let (operand, rest) = split_operand(vars, &rest[1..])?;
            let Operand::Var(j) = operand else {
                return Err(err("bound line expects a variable"));
            };
            match rest.first() {
                None => {
                    let prev = current_bounds(bounds, j);
                    bounds.push((j, lo, prev.1, false));
                }
                Some(Tok::Le) => {
                    let (hi, rest) = parse_signed_number(&rest[1..])?;
                    if !rest.is_empty() {
                        return Err(err("trailing tokens on bound line"));
                    }
                    bounds.push((j, lo, hi, false));
                }
                _ => return Err(err("malformed bound line")),
            }
        }
        Operand::Var(j) => match rest.first() {
            Some(Tok::Le) => {
                let (hi, _) = parse_signed_number(&rest[1..])?;
                let prev = current_bounds(bounds, j);
                bounds.push((j, prev.0, hi, false));
            }
            Some(Tok::Ge) => {
                let (lo, _) = parse_signed_number(&rest[1..])?;
                let prev = current_bounds(bounds, j);
                bounds.push((j, lo, prev.1, false));
            }
            Some(Tok::Eq) => {
                let (v, _) = parse_signed_number(&rest[1..])?;
                bounds.push((j, v, v, false));
            }
            _ => return Err(err("malformed bound line")),
        },
    }
    Ok(())
}

enum Operand {
    Num(f64),
    Var(usize),
}

fn split_operand<'t>(
    vars: &mut VarTable,
    toks: &'t [Tok],
) -> Result<(Operand, &'t [Tok]), SolverError> {
    let mut sign = 1.0;
    let mut idx = 0;
    loop {
        match toks.get(idx) {
            Some(Tok::Plus) => idx += 1,
            Some(Tok::Minus) => {
                sign = -sign;
                idx += 1;
            }
            Some(Tok::Num(v)) => return Ok((Operand::Num(sign * v), &toks[idx + 1..])),
            Some(Tok::Name(n)) if is_inf(n) => {
                return Ok((Operand::Num(sign * f64::INFINITY), &toks[idx + 1..]))
            }
            Some(Tok::Name(n)) => return Ok((Operand::Var(vars.intern(n)), &toks[idx + 1..])),
            _ => return Err(err("empty bound operand")),
        }
    }
}

fn current_bounds(bounds: &[(usize, f64, f64, bool)], j: usize) -> (f64, f64) {
    bounds
        .iter()
        .rev()
        .find(|(v, _, _, _)| *v == j)
        .map(|&(_, lo, hi, _)| (lo, hi))
        .unwrap_or((0.0, f64::INFINITY))
}

#[cfg(test)]
mod tests {
    use super::super::{solve_lp, OutcomeStatus, SolverOptions};
    use super::*;

    #[test]
    fn parses_small_lp_and_solves() {
        let text = "\\ sample\nMinimize\n obj: -3 x + -2 y\nSubject To\n c0: x + y <= 4\n c1: x <= 2\nBounds\n 0 <= x <= inf\n 0 <= y <= inf\nEnd\n";
        let parsed = parse_lp(text).unwrap();
        assert_eq!(parsed.names, vec!["x", "y"]);
        assert_eq!(parsed.problem.rows.len(), 2);
        let out = solve_lp(&parsed.problem, &SolverOptions::default()).unwrap();
        assert_eq!(out.status, OutcomeStatus::Optimal);
        assert!((out.objective + 10.0).abs() < 1e-9);
    }

    #[test]
    fn parses_binaries_and_free_vars() {
        let text = "Minimize\n obj: z + b\nSubject To\n c: z + 2 b >= 1\nBounds\n z free\nBinaries\n b\nEnd\n";
        let parsed = parse_lp(text).unwrap();
        let zb = parsed.names.iter().position(|n| n == "z").unwrap();
        assert_eq!(parsed.problem.lower[zb], f64::NEG_INFINITY);
        assert_eq!(parsed.binaries.len(), 1);
        let b = parsed.binaries[0];
        assert_eq!(parsed.problem.lower[b], 0.0);
        assert_eq!(parsed.problem.upper[b], 1.0);
    }

    #[test]
    fn maximize_negates_objective() {
        let text = "Maximize\n obj: x\nSubject To\n c: x <= 3\nEnd\n";
        let parsed = parse_lp(text).unwrap();
        assert!(parsed.maximize);
        assert_eq!(parsed.problem.objective, vec![-1.0]);
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_lp("Minimize\n obj: 3 *\nEnd").is_err());
        assert!(parse_lp("Minimize\n obj: x\nSubject To\n c: x 4\nEnd").is_err());
    }

    #[test]
    fn constraint_spanning_lines() {
        let text = "Minimize\n obj: x1\nSubject To\n c0: x1 + x2\n + x3 >= 2\nEnd\n";
        let parsed = parse_lp(text).unwrap();
        assert_eq!(parsed.problem.rows[0].coeffs.len(), 3);
        assert_eq!(parsed.problem.rows[0].rhs, 2.0);
    }
}
