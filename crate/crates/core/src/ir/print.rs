//! Printer for the textual IR. Shared subexpressions (and very deep chains)
//! are hoisted into `(define $tN ...)` forms so output size stays linear in
//! the arena.

use std::fmt::{self, Write};

use super::{Node, NodeId, OpKind, Program};

const MAX_INLINE_DEPTH: u32 = 48;

fn fmt_const(c: f64) -> String {
    format!("{c:?}")
}

pub(super) fn write_program(p: &Program, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let reach = p.reachable();
    let n = p.len();
    let mut refs = vec![0u32; n];
    for (i, node) in p.nodes().iter().enumerate() {
        if reach[i] {
            for c in node.children() {
                refs[c.index()] += 1;
            }
        }
    }
    let mut hoisted = vec![false; n];
    let mut depth = vec![0u32; n];
    for (i, node) in p.nodes().iter().enumerate() {
        if !reach[i] {
            continue;
        }
        let leaf = matches!(node, Node::Unknown(_) | Node::Const(_));
        let d = 1 + node
            .children()
            .iter()
            .filter(|c| !hoisted[c.index()])
            .map(|c| depth[c.index()])
            .max()
            .unwrap_or(0);
        if !leaf && (refs[i] > 1 || d > MAX_INLINE_DEPTH) {
            hoisted[i] = true;
            depth[i] = 0;
        } else {
            depth[i] = d;
        }
    }

    for d in p.real_unknowns() {
        match d.bounds {
            Some((lo, hi)) => writeln!(f, "(real {} {} {})", d.name, fmt_const(lo), fmt_const(hi))?,
            None => writeln!(f, "(real {})", d.name)?,
        }
    }
    for d in p.bool_unknowns() {
        writeln!(f, "(bool {})", d.name)?;
    }
    let mut buf = String::new();
    for i in 0..n {
        if hoisted[i] {
            buf.clear();
            write_node(p, NodeId(i as u32), &hoisted, true, &mut buf)?;
            writeln!(f, "(define $t{i} {buf})")?;
        }
    }
    for (k, &a) in p.asserts().iter().enumerate() {
        if p.is_bound_assert(k) {
            continue;
        }
        buf.clear();
        write_node(p, a, &hoisted, false, &mut buf)?;
        writeln!(f, "(assert {buf})")?;
    }
    Ok(())
}

fn write_node(
    p: &Program,
    id: NodeId,
    hoisted: &[bool],
    is_definition: bool,
    out: &mut String,
) -> fmt::Result {
    if hoisted[id.index()] && !is_definition {
        return write!(out, "$t{}", id.0);
    }
    match p.node(id) {
        Node::Unknown(x) => write!(out, "{}", p.real_unknowns()[x.index()].name),
        Node::Const(c) => write!(out, "{}", fmt_const(*c)),
        Node::Op(kind, args) => {
            let sym = if *kind == OpKind::Neg { "-" } else { kind.symbol() };
            write!(out, "({sym}")?;
            for a in args {
                out.push(' ');
                write_node(p, *a, hoisted, false, out)?;
            }
            out.push(')');
            Ok(())
        }
        Node::IteB { cond, then, els } => {
            out.push_str("(ite ");
            write_node(p, *cond, hoisted, false, out)?;
            out.push(' ');
            write_node(p, *then, hoisted, false, out)?;
            out.push(' ');
            write_node(p, *els, hoisted, false, out)?;
            out.push(')');
            Ok(())
        }
        Node::IteH { cond, then, els } => {
            write!(out, "(iteh {} ", p.bool_unknowns()[cond.index()].name)?;
            write_node(p, *then, hoisted, false, out)?;
            out.push(' ');
            write_node(p, *els, hoisted, false, out)?;
            out.push(')');
            Ok(())
        }
        Node::Ge(e) => {
            out.push_str("(>= ");
            write_node(p, *e, hoisted, false, out)?;
            out.push_str(" 0)");
            Ok(())
        }
        Node::And(a, b) => {
            out.push_str("(and ");
            write_node(p, *a, hoisted, false, out)?;
            out.push(' ');
            write_node(p, *b, hoisted, false, out)?;
            out.push(')');
            Ok(())
        }
        Node::Not(b) => {
            out.push_str("(not ");
            write_node(p, *b, hoisted, false, out)?;
            out.push(')');
            Ok(())
        }
    }
}
