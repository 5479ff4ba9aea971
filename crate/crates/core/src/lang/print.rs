use std::fmt::{self, Write};

use super::{Function, MergeOp, Program, RowSelector, Statement, Stmt};

fn write_block(f: &mut impl Write, stmts: &[Stmt], indent: usize) -> fmt::Result {
    for s in stmts {
        write_stmt(f, &s.node, indent)?;
    }
    Ok(())
}

fn write_stmt(f: &mut impl Write, s: &Statement, indent: usize) -> fmt::Result {
    let pad = "    ".repeat(indent);
    match s {
        Statement::Branch { then_body, else_body } => {
            writeln!(f, "{pad}if {{")?;
            write_block(f, then_body, indent + 1)?;
            writeln!(f, "{pad}}} else {{")?;
            write_block(f, else_body, indent + 1)?;
            writeln!(f, "{pad}}}")
        }
        Statement::Loop { body } => {
            writeln!(f, "{pad}loop {{")?;
            write_block(f, body, indent + 1)?;
            writeln!(f, "{pad}}}")
        }
        other => writeln!(f, "{pad}{other}"),
    }
}

impl fmt::Display for RowSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RowSelector::List(rows) => {
                let parts: Vec<String> = rows.iter().map(|r| r.to_string()).collect();
                f.write_str(&parts.join(", "))
            }
            RowSelector::Range { lo, hi } => match hi {
                super::RowExpr::Inf => write!(f, "{lo}:"),
                _ => write!(f, "{lo}:{hi}"),
            },
        }
    }
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

impl fmt::Display for Statement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Statement::Read { target, file } => write!(f, "{target} = read({})", quote(file)),
            Statement::Select {
                target,
                source,
                rows,
                cols,
            } => {
                write!(f, "{target} = {source}.select[")?;
                if let Some(r) = rows {
                    write!(f, "{r}")?;
                }
                f.write_str("][")?;
                if let Some(c) = cols {
                    let parts: Vec<String> = c.iter().map(|c| quote(c)).collect();
                    f.write_str(&parts.join(", "))?;
                }
                f.write_str("]")
            }
            Statement::Merge {
                target,
                op,
                left,
                right,
            } => {
                let name = match op {
                    MergeOp::Concat => "concat",
                    MergeOp::Join => "join",
                };
                write!(f, "{target} = {name}({left}, {right})")
            }
            Statement::Apply { target, func, source } => match func {
                Function::Normalize => write!(f, "{target} = normalize({source})"),
                Function::Other(name) => write!(f, "{target} = {name}({source})"),
            },
            Statement::Use { kind, args } => {
                let parts: Vec<&str> = args.iter().map(String::as_str).collect();
                write!(f, "{kind}({})", parts.join(", "))
            }
            Statement::Branch { .. } | Statement::Loop { .. } => {
                let mut s = String::new();
                write_stmt(&mut s, self, 0)?;
                f.write_str(s.trim_end())
            }
        }
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_block(&mut s, &self.statements, 0)?;
        f.write_str(&s)
    }
}
