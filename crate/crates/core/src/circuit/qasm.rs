//! OpenQASM 2.0 subset: one quantum register, unitary gates only.
//!
//! `ccx` is accepted and lowered on the spot to the standard six-CNOT
//! Clifford+T network. `barrier` statements are accepted and dropped.
//! Layout metadata travels in comment lines:
//!
//! ```text
//! // initial_layout: 0->2,1->0
//! // final_permutation: 0->1,1->0,2->2
//! ```

use std::fmt::Write as _;

use super::{Circuit, Gate, GateKind};
use crate::error::{Error, Result};

const LAYOUT_TAG: &str = "initial_layout:";
const PERMUTATION_TAG: &str = "final_permutation:";

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(f64),
    Str(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Semi,
    Plus,
    Minus,
    Star,
    Slash,
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn syntax(line: usize, col: usize, msg: impl Into<String>) -> Error {
    Error::Syntax {
        line,
        col,
        msg: msg.into(),
    }
}

fn lex(src: &str) -> Result<Vec<Spanned>> {
    let mut out = Vec::new();
    for (lineno, line) in src.lines().enumerate() {
        let line_no = lineno + 1;
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let col = i + 1;
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            if c == '/' && chars.get(i + 1) == Some(&'/') {
                break;
            }
            let simple = match c {
                '(' => Some(Tok::LParen),
                ')' => Some(Tok::RParen),
                '[' => Some(Tok::LBracket),
                ']' => Some(Tok::RBracket),
                ',' => Some(Tok::Comma),
                ';' => Some(Tok::Semi),
                '+' => Some(Tok::Plus),
                '-' => Some(Tok::Minus),
                '*' => Some(Tok::Star),
                '/' => Some(Tok::Slash),
                _ => None,
            };
            if let Some(tok) = simple {
                out.push(Spanned {
                    tok,
                    line: line_no,
                    col,
                });
                i += 1;
            } else if c.is_ascii_alphabetic() || c == '_' {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                out.push(Spanned {
                    tok: Tok::Ident(word),
                    line: line_no,
                    col,
                });
            } else if c.is_ascii_digit() || c == '.' {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_ascii_digit() {
                        i = j;
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text: String = chars[start..i].iter().collect();
                let value = text
                    .parse::<f64>()
                    .map_err(|_| syntax(line_no, col, format!("invalid number `{text}`")))?;
                out.push(Spanned {
                    tok: Tok::Num(value),
                    line: line_no,
                    col,
                });
            } else if c == '"' {
                let start = i + 1;
                i += 1;
                while i < chars.len() && chars[i] != '"' {
                    i += 1;
                }
                if i >= chars.len() {
                    return Err(syntax(line_no, col, "unterminated string"));
                }
                let text: String = chars[start..i].iter().collect();
                out.push(Spanned {
                    tok: Tok::Str(text),
                    line: line_no,
                    col,
                });
                i += 1;
            } else {
                return Err(syntax(line_no, col, format!("unexpected character `{c}`")));
            }
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    last_line: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn here(&self) -> (usize, usize) {
        self.toks
            .get(self.pos)
            .map(|s| (s.line, s.col))
            .unwrap_or((self.last_line, 1))
    }

    fn next(&mut self) -> Result<Spanned> {
        let (line, col) = self.here();
        let t = self
            .toks
            .get(self.pos)
            .cloned()
            .ok_or_else(|| syntax(line, col, "unexpected end of input"))?;
        self.pos += 1;
        Ok(t)
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<()> {
        let t = self.next()?;
        if t.tok == want {
            Ok(())
        } else {
            Err(syntax(
                t.line,
                t.col,
                format!("expected {what}, found {:?}", t.tok),
            ))
        }
    }

    fn ident(&mut self) -> Result<(String, usize, usize)> {
        let t = self.next()?;
        match t.tok {
            Tok::Ident(s) => Ok((s, t.line, t.col)),
            other => Err(syntax(
                t.line,
                t.col,
                format!("expected identifier, found {other:?}"),
            )),
        }
    }

    fn integer(&mut self) -> Result<usize> {
        let t = self.next()?;
        match t.tok {
            Tok::Num(v) if v >= 0.0 && v.fract() == 0.0 => Ok(v as usize),
            other => Err(syntax(
                t.line,
                t.col,
                format!("expected integer, found {other:?}"),
            )),
        }
    }

    // expr := term (('+'|'-') term)*
    fn expr(&mut self) -> Result<f64> {
        let mut value = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    value += self.term()?;
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    value -= self.term()?;
                }
                _ => return Ok(value),
            }
        }
    }

    // term := unary (('*'|'/') unary)*
    fn term(&mut self) -> Result<f64> {
        let mut value = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    value *= self.unary()?;
                }
                Some(Tok::Slash) => {
                    self.pos += 1;
                    value /= self.unary()?;
                }
                _ => return Ok(value),
            }
        }
    }

    fn unary(&mut self) -> Result<f64> {
        match self.peek() {
            Some(Tok::Minus) => {
                self.pos += 1;
                Ok(-self.unary()?)
            }
            Some(Tok::Plus) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<f64> {
        let t = self.next()?;
        match t.tok {
            Tok::Num(v) => Ok(v),
            Tok::Ident(ref s) if s == "pi" => Ok(std::f64::consts::PI),
            Tok::LParen => {
                let v = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(v)
            }
            other => Err(syntax(
                t.line,
                t.col,
                format!("expected expression, found {other:?}"),
            )),
        }
    }
}

fn parse_mapping(text: &str, line: usize) -> Result<Vec<(usize, usize)>> {
    let text = text.trim();
    if text.is_empty() {
        return Ok(Vec::new());
    }
    text.split(',')
        .map(|pair| {
            let (a, b) = pair
                .split_once("->")
                .ok_or_else(|| syntax(line, 1, format!("malformed mapping entry `{pair}`")))?;
            let a = a.trim().parse::<usize>();
            let b = b.trim().parse::<usize>();
            match (a, b) {
                (Ok(a), Ok(b)) => Ok((a, b)),
                _ => Err(syntax(line, 1, format!("malformed mapping entry `{pair}`"))),
            }
        })
        .collect()
}

fn mapping_to_vec(entries: Vec<(usize, usize)>, line: usize) -> Result<Vec<usize>> {
    let mut out = vec![usize::MAX; entries.len()];
    for (k, v) in entries {
        if k >= out.len() || out[k] != usize::MAX {
            return Err(syntax(line, 1, "mapping keys must be 0..n without repeats"));
        }
        out[k] = v;
    }
    Ok(out)
}

/// Parses OpenQASM 2.0 source into a circuit.
pub fn parse_qasm(src: &str) -> Result<Circuit> {
    let mut layout = None;
    let mut permutation = None;
    for (i, line) in src.lines().enumerate() {
        let Some(comment) = line.trim_start().strip_prefix("//") else {
            continue;
        };
        let comment = comment.trim();
        if let Some(rest) = comment.strip_prefix(LAYOUT_TAG) {
            layout = Some(mapping_to_vec(parse_mapping(rest, i + 1)?, i + 1)?);
        } else if let Some(rest) = comment.strip_prefix(PERMUTATION_TAG) {
            permutation = Some(mapping_to_vec(parse_mapping(rest, i + 1)?, i + 1)?);
        }
    }

    let toks = lex(src)?;
    let last_line = src.lines().count().max(1);
    let mut p = Parser {
        toks,
        pos: 0,
        last_line,
    };

    let (kw, line, col) = p.ident()?;
    if kw != "OPENQASM" {
        return Err(syntax(line, col, "expected `OPENQASM 2.0;` header"));
    }
    let t = p.next()?;
    match t.tok {
        Tok::Num(v) if (v - 2.0).abs() < 1e-9 => {}
        _ => return Err(syntax(t.line, t.col, "only OpenQASM 2.0 is supported")),
    }
    p.expect(Tok::Semi, "`;`")?;

    let mut register: Option<(String, usize)> = None;
    let mut circuit = Circuit::new(0);

    while p.peek().is_some() {
        let (word, line, col) = p.ident()?;
        match word.as_str() {
            "include" => {
                let t = p.next()?;
                if !matches!(t.tok, Tok::Str(_)) {
                    return Err(syntax(t.line, t.col, "expected include path"));
                }
                p.expect(Tok::Semi, "`;`")?;
            }
            "qreg" => {
                if register.is_some() {
                    return Err(Error::MultipleRegisters);
                }
                let (name, _, _) = p.ident()?;
                p.expect(Tok::LBracket, "`[`")?;
                let size = p.integer()?;
                p.expect(Tok::RBracket, "`]`")?;
                p.expect(Tok::Semi, "`;`")?;
                circuit.num_qubits = size;
                register = Some((name, size));
            }
            "creg" | "measure" | "if" | "reset" | "gate" | "opaque" => {
                return Err(syntax(line, col, format!("`{word}` is not supported")));
            }
            "barrier" => {
                while !matches!(p.peek(), Some(Tok::Semi) | None) {
                    p.pos += 1;
                }
                p.expect(Tok::Semi, "`;`")?;
            }
            name => {
                let Some((reg, size)) = register.clone() else {
                    return Err(syntax(line, col, "gate applied before `qreg` declaration"));
                };
                let mut params = Vec::new();
                if p.peek() == Some(&Tok::LParen) {
                    p.pos += 1;
                    if p.peek() != Some(&Tok::RParen) {
                        params.push(p.expr()?);
                        while p.peek() == Some(&Tok::Comma) {
                            p.pos += 1;
                            params.push(p.expr()?);
                        }
                    }
                    p.expect(Tok::RParen, "`)`")?;
                }
                let mut qubits = Vec::new();
                loop {
                    let (r, rl, rc) = p.ident()?;
                    if r != reg {
                        return Err(syntax(rl, rc, format!("unknown register `{r}`")));
                    }
                    p.expect(Tok::LBracket, "`[`")?;
                    let idx = p.integer()?;
                    p.expect(Tok::RBracket, "`]`")?;
                    if idx >= size {
                        return Err(Error::QubitOutOfRange { index: idx, size });
                    }
                    qubits.push(idx);
                    if p.peek() == Some(&Tok::Comma) {
                        p.pos += 1;
                    } else {
                        break;
                    }
                }
                p.expect(Tok::Semi, "`;`")?;

                if name == "ccx" {
                    if qubits.len() != 3 || !params.is_empty() {
                        return Err(syntax(
                            line,
                            col,
                            "ccx takes three qubits and no parameters",
                        ));
                    }
                    for g in toffoli(qubits[0], qubits[1], qubits[2]) {
                        circuit.push(g)?;
                    }
                    continue;
                }
                let kind: GateKind = name.parse().map_err(|_| Error::UnsupportedGate {
                    name: name.to_string(),
                    line,
                })?;
                let gate = Gate::new(kind, params, qubits)
                    .map_err(|e| syntax(line, col, e.to_string()))?;
                circuit.push(gate)?;
            }
        }
    }
    if register.is_none() {
        return Err(syntax(last_line, 1, "missing `qreg` declaration"));
    }
    circuit.initial_layout = layout;
    circuit.final_permutation = permutation;
    circuit.validate()?;
    Ok(circuit)
}

/// Clifford+T network for the Toffoli gate (6 cx, 7 t/tdg, 2 h).
pub fn toffoli(a: usize, b: usize, c: usize) -> Vec<Gate> {
    use GateKind::{Tdg, H, T};
    vec![
        Gate::one(H, c),
        Gate::cx(b, c),
        Gate::one(Tdg, c),
        Gate::cx(a, c),
        Gate::one(T, c),
        Gate::cx(b, c),
        Gate::one(Tdg, c),
        Gate::cx(a, c),
        Gate::one(T, b),
        Gate::one(T, c),
        Gate::one(H, c),
        Gate::cx(a, b),
        Gate::one(T, a),
        Gate::one(Tdg, b),
        Gate::cx(a, b),
    ]
}

fn eval_expr(text: &str) -> Option<f64> {
    let toks = lex(text).ok()?;
    let mut p = Parser {
        toks,
        pos: 0,
        last_line: 1,
    };
    let v = p.expr().ok()?;
    (p.pos == p.toks.len()).then_some(v)
}

/// Formats an angle, preferring an exact `k*pi/d` spelling when the parser
/// would read it back to the identical float.
pub fn format_angle(theta: f64) -> String {
    if theta == 0.0 {
        return "0".to_string();
    }
    for d in [1i64, 2, 3, 4, 6, 8, 12, 16, 32, 64, 128] {
        let k = (theta * d as f64 / std::f64::consts::PI).round() as i64;
        if k == 0 || k.abs() > 8 * d {
            continue;
        }
        let sign = if k < 0 { "-" } else { "" };
        let num = match k.abs() {
            1 => "pi".to_string(),
            n => format!("{n}*pi"),
        };
        let text = if d == 1 {
            format!("{sign}{num}")
        } else {
            format!("{sign}{num}/{d}")
        };
        if eval_expr(&text).is_some_and(|v| v.to_bits() == theta.to_bits()) {
            return text;
        }
    }
    format!("{theta:?}")
}

fn format_mapping(map: &[usize]) -> String {
    map.iter()
        .enumerate()
        .map(|(k, v)| format!("{k}->{v}"))
        .collect::<Vec<_>>()
        .join(",")
}

/// Prints a circuit as OpenQASM 2.0.
pub fn emit_qasm(c: &Circuit) -> String {
    let mut out = String::from("OPENQASM 2.0;\ninclude \"qelib1.inc\";\n");
    if let Some(layout) = &c.initial_layout {
        let _ = writeln!(out, "// {LAYOUT_TAG} {}", format_mapping(layout));
    }
    if let Some(perm) = &c.final_permutation {
        let _ = writeln!(out, "// {PERMUTATION_TAG} {}", format_mapping(perm));
    }
    let _ = writeln!(out, "qreg q[{}];", c.num_qubits);
    for g in &c.gates {
        out.push_str(g.kind.name());
        if !g.params.is_empty() {
            let params: Vec<String> = g.params.iter().map(|&x| format_angle(x)).collect();
            let _ = write!(out, "({})", params.join(","));
        }
        let qubits: Vec<String> = g.qubits.iter().map(|q| format!("q[{q}]")).collect();
        let _ = writeln!(out, " {};", qubits.join(","));
    }
    out
}
