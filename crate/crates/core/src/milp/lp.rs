use std::collections::HashSet;
use std::fmt::Write as _;

use super::{MilpModel, VarKind};
use crate::error::{Error, Result};

const TERMS_PER_LINE: usize = 6;

fn number(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && !(1e-4..1e15).contains(&a) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

fn valid_name(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    name.len() <= 255 && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn check_names<'a>(names: impl Iterator<Item = &'a str>, what: &str) -> Result<()> {
    let mut seen = HashSet::new();
    for name in names {
        if !valid_name(name) {
            return Err(Error::Export(format!("invalid {what} name {name:?}")));
        }
        if !seen.insert(name) {
            return Err(Error::Export(format!("duplicate {what} name {name:?}")));
        }
    }
    Ok(())
}

fn write_terms(out: &mut String, terms: &[(String, f64)]) {
    for (k, (name, coef)) in terms.iter().enumerate() {
        if k > 0 && k % TERMS_PER_LINE == 0 {
            out.push_str("\n   ");
        }
        let sign = if *coef < 0.0 || (*coef == 0.0 && coef.is_sign_negative()) {
            "-"
        } else {
            "+"
        };
        if k == 0 && sign == "+" {
            write!(out, " {} {name}", number(coef.abs())).unwrap();
        } else {
            write!(out, " {sign} {} {name}", number(coef.abs())).unwrap();
        }
    }
}

/// CPLEX-style LP text: objective, named rows, bounds and binaries.
pub fn export_lp(model: &MilpModel) -> Result<String> {
    check_names(model.variables.iter().map(|v| v.name.as_str()), "variable")?;
    check_names(model.constraints.iter().map(|c| c.name.as_str()), "constraint")?;
    let var_name = |i: usize| model.variables[i].name.clone();
    let mut out = String::new();
    out.push_str("\\ min-max age of service\n");
    out.push_str("Minimize\n");
    writeln!(out, " obj: {}", var_name(model.objective)).unwrap();
    out.push_str("Subject To\n");
    for row in &model.constraints {
        write!(out, " {}:", row.name).unwrap();
        let mut terms: Vec<(String, f64)> =
            row.terms.iter().map(|&(v, c)| (var_name(v), c)).collect();
        if terms.is_empty() {
            terms.push((var_name(model.objective), 0.0));
        }
        write_terms(&mut out, &terms);
        writeln!(out, " {} {}", row.sense.symbol(), number(row.rhs)).unwrap();
    }
    out.push_str("Bounds\n");
    for v in &model.variables {
        if v.kind == VarKind::Binary {
            continue;
        }
        if v.upper.is_infinite() {
            writeln!(out, " {} >= {}", v.name, number(v.lower)).unwrap();
        } else {
            writeln!(out, " {} <= {} <= {}", number(v.lower), v.name, number(v.upper)).unwrap();
        }
    }
    out.push_str("Binaries\n");
    let binaries: Vec<&str> = model
        .variables
        .iter()
        .filter(|v| v.kind == VarKind::Binary)
        .map(|v| v.name.as_str())
        .collect();
    for chunk in binaries.chunks(8) {
        writeln!(out, " {}", chunk.join(" ")).unwrap();
    }
    out.push_str("End\n");
    Ok(out)
}
