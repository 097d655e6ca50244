//! OpenQASM 2 subset: one quantum register, the fixed gate vocabulary,
//! barriers, measures, and nothing else.
//!
//! The accepted grammar is deliberately small:
//!
//! * header `OPENQASM 2.0;`, optional `include "qelib1.inc";`
//! * exactly one `qreg`, at most one `creg`
//! * gate statements over `h x y z t s swap cx rz u1 u2 u3` with explicit
//!   indexed operands (`h q[0];`); angle expressions may use float and
//!   integer literals, `pi`, parentheses, and `+ - * /`
//! * `barrier` and `measure` accept indexed operands or a bare register
//!   name meaning every qubit
//! * `if (c == 1) <gate>;` is accepted as the surface form of a
//!   conditioned gate; general classical control flow is not supported,
//!   and anything else (`gate` definitions, `opaque`, `reset`, a second
//!   `qreg`) is an unsupported-construct error with its line number.
//!
//! Emission writes angles with seventeen significant digits, which is
//! enough for `f64` values to survive a print/parse round trip bit-exactly;
//! the tests drive a thousand random circuits through that loop.

use crate::circuit::{Circuit, Gate, GateKind};
use crate::error::{Error, Result};

// ====================================================================
// Emission
// ====================================================================

fn fmt_angle(x: f64) -> String {
    // 1 leading + 16 fractional significant digits: exact f64 round trip.
    format!("{x:.16e}")
}

/// Render a circuit as OpenQASM 2 text. The classical register appears
/// only when a measure or conditioned gate needs it.
pub fn emit_qasm(c: &Circuit) -> String {
    let mut out = String::new();
    out.push_str("OPENQASM 2.0;\n");
    out.push_str("include \"qelib1.inc\";\n");
    out.push_str(&format!("qreg q[{}];\n", c.nqreg));
    let needs_creg = c
        .gates
        .iter()
        .any(|g| g.conditioned || g.kind == GateKind::Measure);
    if needs_creg {
        out.push_str(&format!("creg c[{}];\n", c.nqreg));
    }
    for g in &c.gates {
        if g.conditioned {
            out.push_str("if(c==1) ");
        }
        match g.kind {
            GateKind::Measure => {
                out.push_str(&format!("measure q[{0}] -> c[{0}];\n", g.qubits[0]));
            }
            GateKind::Barrier => {
                let ops: Vec<String> =
                    g.qubits.iter().map(|q| format!("q[{q}]")).collect();
                out.push_str(&format!("barrier {};\n", ops.join(",")));
            }
            _ => {
                out.push_str(g.kind.name());
                if !g.params.is_empty() {
                    let ps: Vec<String> = g.params.iter().map(|&p| fmt_angle(p)).collect();
                    out.push_str(&format!("({})", ps.join(",")));
                }
                let ops: Vec<String> =
                    g.qubits.iter().map(|q| format!("q[{q}]")).collect();
                out.push_str(&format!(" {};\n", ops.join(",")));
            }
        }
    }
    out
}

// ====================================================================
// Lexing
// ====================================================================

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(f64),
    Str(String),
    Sym(char),
    Arrow,
    Eq, // ==
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    col: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Lexer<'a> {
        Lexer { src: src.as_bytes(), pos: 0, line: 1, col: 1 }
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Syntax { line: self.line, col: self.col, msg: msg.into() }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let b = self.peek()?;
        self.pos += 1;
        if b == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(b)
    }

    fn skip_trivia(&mut self) {
        loop {
            match self.peek() {
                Some(b) if b.is_ascii_whitespace() => {
                    self.bump();
                }
                Some(b'/') if self.src.get(self.pos + 1) == Some(&b'/') => {
                    while let Some(b) = self.peek() {
                        if b == b'\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                _ => break,
            }
        }
    }

    fn next_token(&mut self) -> Result<Option<Spanned>> {
        self.skip_trivia();
        let (line, col) = (self.line, self.col);
        let Some(b) = self.peek() else {
            return Ok(None);
        };
        let tok = match b {
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                let mut s = String::new();
                while let Some(c) = self.peek() {
                    if c.is_ascii_alphanumeric() || c == b'_' {
                        s.push(c as char);
                        self.bump();
                    } else {
                        break;
                    }
                }
                Tok::Ident(s)
            }
            b'0'..=b'9' | b'.' => {
                let start = self.pos;
                while let Some(c) = self.peek() {
                    if c.is_ascii_digit() || c == b'.' {
                        self.bump();
                    } else {
                        break;
                    }
                }
                if matches!(self.peek(), Some(b'e') | Some(b'E')) {
                    self.bump();
                    if matches!(self.peek(), Some(b'+') | Some(b'-')) {
                        self.bump();
                    }
                    while let Some(c) = self.peek() {
                        if c.is_ascii_digit() {
                            self.bump();
                        } else {
                            break;
                        }
                    }
                }
                let text = std::str::from_utf8(&self.src[start..self.pos])
                    .expect("ascii digits");
                let value: f64 = text
                    .parse()
                    .map_err(|_| self.err(format!("bad number literal {text:?}")))?;
                Tok::Number(value)
            }
            b'"' => {
                self.bump();
                let mut s = String::new();
                loop {
                    match self.bump() {
                        Some(b'"') => break,
                        Some(c) => s.push(c as char),
                        None => return Err(self.err("unterminated string")),
                    }
                }
                Tok::Str(s)
            }
            b'-' if self.src.get(self.pos + 1) == Some(&b'>') => {
                self.bump();
                self.bump();
                Tok::Arrow
            }
            b'=' if self.src.get(self.pos + 1) == Some(&b'=') => {
                self.bump();
                self.bump();
                Tok::Eq
            }
            b';' | b'[' | b']' | b'(' | b')' | b'{' | b'}' | b',' | b'+' | b'-' | b'*'
            | b'/' => {
                self.bump();
                Tok::Sym(b as char)
            }
            other => {
                return Err(self.err(format!("unexpected character {:?}", other as char)));
            }
        };
        Ok(Some(Spanned { tok, line, col }))
    }
}

// ====================================================================
// Parsing
// ====================================================================

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    qreg: Option<(String, usize)>,
    creg: Option<(String, usize)>,
}

impl Parser {
    fn here(&self) -> (usize, usize) {
        self.toks
            .get(self.pos)
            .or_else(|| self.toks.last())
            .map(|s| (s.line, s.col))
            .unwrap_or((1, 1))
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        let (line, col) = self.here();
        Error::Syntax { line, col, msg: msg.into() }
    }

    fn unsupported(&self, what: impl Into<String>) -> Error {
        let (line, _) = self.here();
        Error::Unsupported { line, what: what.into() }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|s| s.tok.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect_sym(&mut self, c: char) -> Result<()> {
        match self.bump() {
            Some(Tok::Sym(s)) if s == c => Ok(()),
            other => Err(self.err(format!("expected {c:?}, found {other:?}"))),
        }
    }

    fn expect_ident(&mut self) -> Result<String> {
        match self.bump() {
            Some(Tok::Ident(s)) => Ok(s),
            other => Err(self.err(format!("expected identifier, found {other:?}"))),
        }
    }

    fn expect_uint(&mut self) -> Result<usize> {
        match self.bump() {
            Some(Tok::Number(v)) if v >= 0.0 && v.fract() == 0.0 => Ok(v as usize),
            other => Err(self.err(format!("expected integer, found {other:?}"))),
        }
    }

    // Angle expressions: full precedence over + - * / with pi, literals,
    // parentheses, and unary minus.
    fn angle_expr(&mut self) -> Result<f64> {
        let mut acc = self.angle_term()?;
        loop {
            match self.peek() {
                Some(Tok::Sym('+')) => {
                    self.bump();
                    acc += self.angle_term()?;
                }
                Some(Tok::Sym('-')) => {
                    self.bump();
                    acc -= self.angle_term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn angle_term(&mut self) -> Result<f64> {
        let mut acc = self.angle_factor()?;
        loop {
            match self.peek() {
                Some(Tok::Sym('*')) => {
                    self.bump();
                    acc *= self.angle_factor()?;
                }
                Some(Tok::Sym('/')) => {
                    self.bump();
                    acc /= self.angle_factor()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn angle_factor(&mut self) -> Result<f64> {
        match self.bump() {
            Some(Tok::Sym('-')) => Ok(-self.angle_factor()?),
            Some(Tok::Sym('(')) => {
                let v = self.angle_expr()?;
                self.expect_sym(')')?;
                Ok(v)
            }
            Some(Tok::Number(v)) => Ok(v),
            Some(Tok::Ident(s)) if s == "pi" => Ok(std::f64::consts::PI),
            other => Err(self.err(format!("expected angle, found {other:?}"))),
        }
    }

    /// `name[index]` against the declared quantum register; a bare `name`
    /// yields every qubit when `allow_broadcast`.
    fn qubit_operands(&mut self, allow_broadcast: bool) -> Result<Vec<usize>> {
        let name = self.expect_ident()?;
        let (qname, size) = self
            .qreg
            .clone()
            .ok_or_else(|| self.err("quantum register used before qreg declaration"))?;
        if name != qname {
            return Err(self.err(format!("unknown register {name:?}")));
        }
        if matches!(self.peek(), Some(Tok::Sym('['))) {
            self.expect_sym('[')?;
            let idx = self.expect_uint()?;
            self.expect_sym(']')?;
            if idx >= size {
                return Err(Error::QubitOutOfRange { index: idx, nqreg: size });
            }
            Ok(vec![idx])
        } else if allow_broadcast {
            Ok((0..size).collect())
        } else {
            Err(self.err("gate operands must be indexed, like q[0]"))
        }
    }

    fn gate_kind(name: &str) -> Option<GateKind> {
        Some(match name {
            "x" => GateKind::X,
            "y" => GateKind::Y,
            "z" => GateKind::Z,
            "h" => GateKind::H,
            "t" => GateKind::T,
            "s" => GateKind::S,
            "cx" => GateKind::Cx,
            "swap" => GateKind::Swap,
            "rz" => GateKind::Rz,
            "u1" => GateKind::U1,
            "u2" => GateKind::U2,
            "u3" => GateKind::U3,
            _ => return None,
        })
    }

    /// One unitary gate statement after its name has been consumed.
    fn unitary_statement(&mut self, kind: GateKind, conditioned: bool, c: &mut Circuit) -> Result<()> {
        let mut params = Vec::new();
        if matches!(self.peek(), Some(Tok::Sym('('))) {
            self.expect_sym('(')?;
            loop {
                params.push(self.angle_expr()?);
                match self.bump() {
                    Some(Tok::Sym(',')) => continue,
                    Some(Tok::Sym(')')) => break,
                    other => return Err(self.err(format!("expected , or ), found {other:?}"))),
                }
            }
        }
        let mut qubits = Vec::new();
        loop {
            qubits.extend(self.qubit_operands(false)?);
            match self.bump() {
                Some(Tok::Sym(',')) => continue,
                Some(Tok::Sym(';')) => break,
                other => return Err(self.err(format!("expected , or ;, found {other:?}"))),
            }
        }
        let gate = Gate::checked(kind, qubits, params, conditioned)?;
        c.try_push(gate)
    }

    fn statement(&mut self, c: &mut Circuit, conditioned: bool) -> Result<()> {
        let name = self.expect_ident()?;
        match name.as_str() {
            "qreg" => {
                if conditioned {
                    return Err(self.err("declarations cannot be conditioned"));
                }
                if self.qreg.is_some() {
                    return Err(self.unsupported("second qreg declaration"));
                }
                let reg = self.expect_ident()?;
                self.expect_sym('[')?;
                let size = self.expect_uint()?;
                self.expect_sym(']')?;
                self.expect_sym(';')?;
                self.qreg = Some((reg, size));
                c.nqreg = size;
                Ok(())
            }
            "creg" => {
                if conditioned {
                    return Err(self.err("declarations cannot be conditioned"));
                }
                if self.creg.is_some() {
                    return Err(self.unsupported("second creg declaration"));
                }
                let reg = self.expect_ident()?;
                self.expect_sym('[')?;
                let size = self.expect_uint()?;
                self.expect_sym(']')?;
                self.expect_sym(';')?;
                self.creg = Some((reg, size));
                Ok(())
            }
            "barrier" => {
                let mut qubits = Vec::new();
                loop {
                    qubits.extend(self.qubit_operands(true)?);
                    match self.bump() {
                        Some(Tok::Sym(',')) => continue,
                        Some(Tok::Sym(';')) => break,
                        other => {
                            return Err(self.err(format!("expected , or ;, found {other:?}")));
                        }
                    }
                }
                let gate = Gate::checked(GateKind::Barrier, qubits, vec![], conditioned)?;
                c.try_push(gate)
            }
            "measure" => {
                let qubits = self.qubit_operands(true)?;
                match self.bump() {
                    Some(Tok::Arrow) => {}
                    other => return Err(self.err(format!("expected ->, found {other:?}"))),
                }
                let cname = self.expect_ident()?;
                match &self.creg {
                    Some((declared, _)) if *declared == cname => {}
                    Some(_) => return Err(self.err(format!("unknown register {cname:?}"))),
                    None => return Err(self.err("measure used before creg declaration")),
                }
                if matches!(self.peek(), Some(Tok::Sym('['))) {
                    self.expect_sym('[')?;
                    self.expect_uint()?;
                    self.expect_sym(']')?;
                }
                self.expect_sym(';')?;
                for q in qubits {
                    let gate = Gate::checked(GateKind::Measure, vec![q], vec![], conditioned)?;
                    c.try_push(gate)?;
                }
                Ok(())
            }
            "if" => {
                if conditioned {
                    return Err(self.unsupported("nested if"));
                }
                self.expect_sym('(')?;
                let cname = self.expect_ident()?;
                match &self.creg {
                    Some((declared, _)) if *declared == cname => {}
                    _ => return Err(self.err("if() requires the declared creg")),
                }
                match self.bump() {
                    Some(Tok::Eq) => {}
                    other => return Err(self.err(format!("expected ==, found {other:?}"))),
                }
                self.expect_uint()?;
                self.expect_sym(')')?;
                self.statement(c, true)
            }
            "gate" | "opaque" | "reset" | "include" => {
                Err(self.unsupported(format!("{name} statement")))
            }
            other => match Parser::gate_kind(other) {
                Some(kind) => self.unitary_statement(kind, conditioned, c),
                None => Err(self.unsupported(format!("gate {other}"))),
            },
        }
    }
}

/// Parse OpenQASM 2 text into a [`Circuit`]. Errors carry the source line
/// (and column for syntax errors).
pub fn parse_qasm(text: &str) -> Result<Circuit> {
    let mut lexer = Lexer::new(text);
    let mut toks = Vec::new();
    while let Some(t) = lexer.next_token()? {
        toks.push(t);
    }
    let mut p = Parser { toks, pos: 0, qreg: None, creg: None };

    // Header: OPENQASM 2.0 ;
    match p.bump() {
        Some(Tok::Ident(s)) if s == "OPENQASM" => {}
        other => return Err(p.err(format!("expected OPENQASM header, found {other:?}"))),
    }
    match p.bump() {
        Some(Tok::Number(v)) if v == 2.0 => {}
        Some(Tok::Number(v)) => {
            return Err(p.unsupported(format!("OPENQASM version {v}")));
        }
        other => return Err(p.err(format!("expected version number, found {other:?}"))),
    }
    p.expect_sym(';')?;

    // Optional include of the standard library only.
    if let Some(Tok::Ident(s)) = p.peek() {
        if s == "include" {
            p.bump();
            match p.bump() {
                Some(Tok::Str(f)) if f == "qelib1.inc" => {}
                Some(Tok::Str(f)) => {
                    return Err(p.unsupported(format!("include {f:?}")));
                }
                other => return Err(p.err(format!("expected include path, found {other:?}"))),
            }
            p.expect_sym(';')?;
        }
    }

    let mut c = Circuit::new(0);
    while p.peek().is_some() {
        p.statement(&mut c, false)?;
    }
    if p.qreg.is_none() {
        return Err(Error::Syntax { line: 1, col: 1, msg: "no qreg declared".into() });
    }
    Ok(c)
}

// ====================================================================
// Tests
// ====================================================================
