//! CPLEX-style LP text dump, readable by most external solvers.

use std::fmt::Write;

use super::{Problem, Sense, VarKind};

fn sanitize(name: &str, fallback: &str) -> String {
    let s: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || "_.[]".contains(c) { c } else { '_' })
        .collect();
    if s.is_empty() || s.starts_with(|c: char| c.is_ascii_digit() || c == '.') {
        format!("{fallback}_{s}")
    } else {
        s
    }
}

fn term(out: &mut String, first: &mut bool, coef: f64, name: &str) {
    if coef < 0.0 {
        let _ = write!(out, " - {} {}", -coef, name);
    } else if *first {
        let _ = write!(out, " {coef} {name}");
    } else {
        let _ = write!(out, " + {coef} {name}");
    }
    *first = false;
}

/// Renders `problem` in LP format. Variable names are made unique by their index.
pub fn write_lp(problem: &Problem) -> String {
    let names: Vec<String> =
        problem.vars().iter().enumerate().map(|(j, v)| format!("{}_{j}", sanitize(&v.name, "x"))).collect();
    let mut out = String::from("\\ generated by h2grid\nMinimize\n obj:");
    let mut first = true;
    for (j, &c) in problem.objective().iter().enumerate() {
        if c != 0.0 {
            term(&mut out, &mut first, c, &names[j]);
        }
    }
    if problem.objective_offset() != 0.0 || first {
        term(&mut out, &mut first, problem.objective_offset(), "");
    }
    out.push_str("\nSubject To\n");
    for (i, row) in problem.rows().iter().enumerate() {
        let label = if row.tag.is_empty() { format!("r{i}") } else { format!("{}_{i}", sanitize(&row.tag, "r")) };
        let _ = write!(out, " {label}:");
        let mut first = true;
        for &(v, c) in &row.coeffs {
            term(&mut out, &mut first, c, &names[v.index()]);
        }
        if first {
            out.push_str(" 0 ");
            out.push_str(&names.first().cloned().unwrap_or_default());
        }
        let op = match row.sense {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        };
        let _ = writeln!(out, " {op} {}", row.rhs);
    }
    out.push_str("Bounds\n");
    for (j, v) in problem.vars().iter().enumerate() {
        let name = &names[j];
        match (v.lower.is_finite(), v.upper.is_finite()) {
            (true, true) if v.lower == v.upper => {
                let _ = writeln!(out, " {name} = {}", v.lower);
            }
            (true, true) => {
                let _ = writeln!(out, " {} <= {name} <= {}", v.lower, v.upper);
            }
            (true, false) => {
                if v.lower != 0.0 {
                    let _ = writeln!(out, " {name} >= {}", v.lower);
                }
            }
            (false, true) => {
                let _ = writeln!(out, " -inf <= {name} <= {}", v.upper);
            }
            (false, false) => {
                let _ = writeln!(out, " {name} free");
            }
        }
    }
    let binaries: Vec<&String> =
        problem.vars().iter().zip(&names).filter(|(v, _)| v.kind == VarKind::Binary).map(|(_, n)| n).collect();
    if !binaries.is_empty() {
        out.push_str("Binaries\n");
        for name in binaries {
            let _ = writeln!(out, " {name}");
        }
    }
    out.push_str("End\n");
    out
}
