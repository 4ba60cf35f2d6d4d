//! S-expression reader for the textual IR.
//!
//! ```text
//! (real x1 -20 6)          ; real unknown with box bounds
//! (bool y1)                ; Boolean unknown
//! (define t (+ x1 1))      ; named shared subexpression
//! (assert (>= t 0))
//! (assert (>= (hole-r z) 0)) ; inline unbounded real unknown
//! ```

use std::collections::HashMap;

use thiserror::Error;

use super::{Bool, OpKind, Program, ProgramBuilder, Real, YId};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("{line}:{col}: syntax error: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("{line}:{col}: `{op}` expects {expected} argument(s), found {found}")]
    Arity {
        line: usize,
        col: usize,
        op: String,
        expected: String,
        found: usize,
    },
    #[error("{line}:{col}: reference to undeclared name `{name}`")]
    Undeclared { line: usize, col: usize, name: String },
    #[error("{line}:{col}: expected a {expected} expression")]
    Sort {
        line: usize,
        col: usize,
        expected: &'static str,
    },
    #[error("{line}:{col}: `{name}` is already declared")]
    Duplicate { line: usize, col: usize, name: String },
}

#[derive(Debug, Clone, PartialEq)]
enum Sexp {
    Atom(String, usize, usize),
    List(Vec<Sexp>, usize, usize),
}

impl Sexp {
    fn pos(&self) -> (usize, usize) {
        match self {
            Sexp::Atom(_, l, c) | Sexp::List(_, l, c) => (*l, *c),
        }
    }
}

fn syntax(line: usize, col: usize, msg: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        line,
        col,
        msg: msg.into(),
    }
}

fn read_all(text: &str) -> Result<Vec<Sexp>, ParseError> {
    let mut stack: Vec<(Vec<Sexp>, usize, usize)> = Vec::new();
    let mut top = Vec::new();
    let mut line = 1;
    let mut col = 0;
    let mut chars = text.chars().peekable();
    while let Some(ch) = chars.next() {
        col += 1;
        match ch {
            '\n' => {
                line += 1;
                col = 0;
            }
            ';' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                }
            }
            '(' => stack.push((Vec::new(), line, col)),
            ')' => {
                let (items, l, c) = stack
                    .pop()
                    .ok_or_else(|| syntax(line, col, "unbalanced `)`"))?;
                let list = Sexp::List(items, l, c);
                match stack.last_mut() {
                    Some(parent) => parent.0.push(list),
                    None => top.push(list),
                }
            }
            c if c.is_whitespace() => {}
            c => {
                let (l, start) = (line, col);
                let mut atom = String::from(c);
                while let Some(&n) = chars.peek() {
                    if n.is_whitespace() || n == '(' || n == ')' || n == ';' {
                        break;
                    }
                    atom.push(n);
                    chars.next();
                    col += 1;
                }
                let a = Sexp::Atom(atom, l, start);
                match stack.last_mut() {
                    Some(parent) => parent.0.push(a),
                    None => return Err(syntax(l, start, "atom outside of a form")),
                }
            }
        }
    }
    if let Some((_, l, c)) = stack.last() {
        return Err(syntax(*l, *c, "unclosed `(`"));
    }
    Ok(top)
}

fn parse_number(s: &str) -> Option<f64> {
    let first = s.chars().next()?;
    if !(first.is_ascii_digit() || first == '-' || first == '+' || first == '.') {
        return None;
    }
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn valid_ident(s: &str) -> bool {
    let mut cs = s.chars();
    match cs.next() {
        Some(c) if c.is_alphabetic() || c == '_' || c == '$' => {}
        _ => return false,
    }
    cs.all(|c| c.is_alphanumeric() || matches!(c, '_' | '$' | '.' | '\'' | '!'))
}

#[derive(Debug, Clone, Copy)]
enum Binding {
    Real(Real),
    Bool(Bool),
    Hole(YId),
}

#[derive(Debug, Clone, Copy)]
enum Term {
    Real(Real),
    Bool(Bool),
}

struct Reader {
    b: ProgramBuilder,
    names: HashMap<String, Binding>,
}

impl Reader {
    fn declare(&mut self, name: &Sexp) -> Result<String, ParseError> {
        let (l, c) = name.pos();
        let Sexp::Atom(s, ..) = name else {
            return Err(syntax(l, c, "expected a name"));
        };
        if !valid_ident(s) || is_keyword(s) {
            return Err(syntax(l, c, format!("invalid name `{s}`")));
        }
        if self.names.contains_key(s) {
            return Err(ParseError::Duplicate {
                line: l,
                col: c,
                name: s.clone(),
            });
        }
        Ok(s.clone())
    }

    fn top(&mut self, form: &Sexp) -> Result<(), ParseError> {
        let (l, c) = form.pos();
        let Sexp::List(items, ..) = form else {
            return Err(syntax(l, c, "expected a top-level form"));
        };
        let Some(Sexp::Atom(head, ..)) = items.first() else {
            return Err(syntax(l, c, "expected a keyword"));
        };
        let args = &items[1..];
        match head.as_str() {
            "real" => {
                if args.len() != 1 && args.len() != 3 {
                    return Err(arity(l, c, "real", "1 or 3", args.len()));
                }
                let name = self.declare(&args[0])?;
                let bounds = if args.len() == 3 {
                    let lo = self.number(&args[1])?;
                    let hi = self.number(&args[2])?;
                    if lo > hi {
                        let (l, c) = args[1].pos();
                        return Err(syntax(l, c, "empty bounds"));
                    }
                    Some((lo, hi))
                } else {
                    None
                };
                let x = self.b.real_unknown(&name, bounds);
                self.names.insert(name, Binding::Real(x));
            }
            "bool" => {
                if args.len() != 1 {
                    return Err(arity(l, c, "bool", "1", args.len()));
                }
                let name = self.declare(&args[0])?;
                let y = self.b.bool_unknown(&name);
                self.names.insert(name, Binding::Hole(y));
            }
            "define" => {
                if args.len() != 2 {
                    return Err(arity(l, c, "define", "2", args.len()));
                }
                let name = self.declare(&args[0])?;
                let binding = match self.term(&args[1])? {
                    Term::Real(r) => Binding::Real(r),
                    Term::Bool(b) => Binding::Bool(b),
                };
                self.names.insert(name, binding);
            }
            "assert" => {
                if args.is_empty() {
                    return Err(arity(l, c, "assert", "at least 1", 0));
                }
                for a in args {
                    let b = self.boolean(a)?;
                    self.b.assert(b);
                }
            }
            other => return Err(syntax(l, c, format!("unknown top-level form `{other}`"))),
        }
        Ok(())
    }

    fn number(&self, s: &Sexp) -> Result<f64, ParseError> {
        let (l, c) = s.pos();
        match s {
            Sexp::Atom(a, ..) => parse_number(a).ok_or_else(|| syntax(l, c, "expected a number")),
            _ => Err(syntax(l, c, "expected a number")),
        }
    }

    fn real(&mut self, s: &Sexp) -> Result<Real, ParseError> {
        match self.term(s)? {
            Term::Real(r) => Ok(r),
            Term::Bool(_) => {
                let (line, col) = s.pos();
                Err(ParseError::Sort {
                    line,
                    col,
                    expected: "real",
                })
            }
        }
    }

    fn boolean(&mut self, s: &Sexp) -> Result<Bool, ParseError> {
        match self.term(s)? {
            Term::Bool(b) => Ok(b),
            Term::Real(_) => {
                let (line, col) = s.pos();
                Err(ParseError::Sort {
                    line,
                    col,
                    expected: "Boolean",
                })
            }
        }
    }

    fn hole(&self, s: &Sexp) -> Result<YId, ParseError> {
        let (line, col) = s.pos();
        if let Sexp::Atom(a, ..) = s {
            match self.names.get(a) {
                Some(Binding::Hole(y)) => return Ok(*y),
                None => {
                    return Err(ParseError::Undeclared {
                        line,
                        col,
                        name: a.clone(),
                    })
                }
                _ => {}
            }
        }
        Err(ParseError::Sort {
            line,
            col,
            expected: "Boolean unknown",
        })
    }

    fn term(&mut self, s: &Sexp) -> Result<Term, ParseError> {
        let (l, c) = s.pos();
        let items = match s {
            Sexp::Atom(a, ..) => {
                if let Some(v) = parse_number(a) {
                    return Ok(Term::Real(self.b.constant(v)));
                }
                return match self.names.get(a) {
                    Some(Binding::Real(r)) => Ok(Term::Real(*r)),
                    Some(Binding::Bool(b)) => Ok(Term::Bool(*b)),
                    Some(Binding::Hole(_)) => Err(ParseError::Sort {
                        line: l,
                        col: c,
                        expected: "real or Boolean (Boolean unknowns may only appear in `iteh`)",
                    }),
                    None => Err(ParseError::Undeclared {
                        line: l,
                        col: c,
                        name: a.clone(),
                    }),
                };
            }
            Sexp::List(items, ..) => items,
        };
        let Some(Sexp::Atom(head, ..)) = items.first() else {
            return Err(syntax(l, c, "expected an operator"));
        };
        let args = &items[1..];
        let n = args.len();
        let need = |expected: &str, ok: bool| -> Result<(), ParseError> {
            if ok {
                Ok(())
            } else {
                Err(arity(l, c, head, expected, n))
            }
        };
        let t = match head.as_str() {
            "hole-r" => {
                need("1", n == 1)?;
                // Inline real unknown: declared (unbounded) on first use.
                if let Sexp::Atom(a, ..) = &args[0] {
                    if let Some(Binding::Real(r)) = self.names.get(a) {
                        return Ok(Term::Real(*r));
                    }
                }
                let name = self.declare(&args[0])?;
                let x = self.b.real_unknown(&name, None);
                self.names.insert(name, Binding::Real(x));
                Term::Real(x)
            }
            "+" | "*" => {
                need("at least 2", n >= 2)?;
                let kind = if head == "+" { OpKind::Add } else { OpKind::Mul };
                let mut acc = self.real(&args[0])?;
                for a in &args[1..] {
                    let r = self.real(a)?;
                    acc = self.b.op(kind, &[acc, r]);
                }
                Term::Real(acc)
            }
            "-" => {
                need("1 or 2", n == 1 || n == 2)?;
                let a = self.real(&args[0])?;
                if n == 1 {
                    Term::Real(self.b.neg(a))
                } else {
                    let r = self.real(&args[1])?;
                    Term::Real(self.b.sub(a, r))
                }
            }
            "/" => {
                need("2", n == 2)?;
                let a = self.real(&args[0])?;
                let r = self.real(&args[1])?;
                Term::Real(self.b.div(a, r))
            }
            "sin" | "cos" | "sqrt" | "tanh" | "exp" => {
                need("1", n == 1)?;
                let kind = match head.as_str() {
                    "sin" => OpKind::Sin,
                    "cos" => OpKind::Cos,
                    "sqrt" => OpKind::Sqrt,
                    "tanh" => OpKind::Tanh,
                    _ => OpKind::Exp,
                };
                let a = self.real(&args[0])?;
                Term::Real(self.b.op(kind, &[a]))
            }
            "ite" => {
                need("3", n == 3)?;
                let cnd = self.boolean(&args[0])?;
                let t = self.real(&args[1])?;
                let e = self.real(&args[2])?;
                Term::Real(self.b.ite(cnd, t, e))
            }
            "iteh" => {
                need("3", n == 3)?;
                let y = self.hole(&args[0])?;
                let t = self.real(&args[1])?;
                let e = self.real(&args[2])?;
                Term::Real(self.b.iteh(y, t, e))
            }
            ">=" | "<=" | ">" | "<" => {
                need("2", n == 2)?;
                let a = self.real(&args[0])?;
                // `(>= e 0)` is the primitive form and maps to Ge(e) itself.
                let zero_rhs = matches!(&args[1], Sexp::Atom(s, ..) if parse_number(s) == Some(0.0));
                let r = self.real(&args[1])?;
                Term::Bool(match head.as_str() {
                    ">=" if zero_rhs => self.b.ge0(a),
                    ">=" => self.b.ge(a, r),
                    "<=" => self.b.le(a, r),
                    ">" => self.b.gt(a, r),
                    _ => self.b.lt(a, r),
                })
            }
            "and" | "or" => {
                need("at least 2", n >= 2)?;
                let mut acc = self.boolean(&args[0])?;
                for a in &args[1..] {
                    let r = self.boolean(a)?;
                    acc = if head == "and" {
                        self.b.and(acc, r)
                    } else {
                        self.b.or(acc, r)
                    };
                }
                Term::Bool(acc)
            }
            "not" => {
                need("1", n == 1)?;
                let a = self.boolean(&args[0])?;
                Term::Bool(self.b.not(a))
            }
            other => return Err(syntax(l, c, format!("unknown operator `{other}`"))),
        };
        Ok(t)
    }
}

fn is_keyword(s: &str) -> bool {
    matches!(
        s,
        "real" | "bool" | "define" | "assert" | "hole-r" | "ite" | "iteh" | "and" | "or" | "not" | "sin"
            | "cos" | "sqrt" | "tanh" | "exp"
    )
}

fn arity(line: usize, col: usize, op: &str, expected: &str, found: usize) -> ParseError {
    ParseError::Arity {
        line,
        col,
        op: op.to_string(),
        expected: expected.to_string(),
        found,
    }
}

/// Parses a program in the textual IR.
pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    let forms = read_all(text)?;
    let mut r = Reader {
        b: ProgramBuilder::new(),
        names: HashMap::new(),
    };
    for f in &forms {
        r.top(f)?;
    }
    Ok(r.b.finish())
}
