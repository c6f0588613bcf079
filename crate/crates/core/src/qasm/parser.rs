use std::f64::consts::PI;

use crate::circuit::{Angle, Circuit, Gate, GateKind};

use super::lexer::{tokenize, Token, TokenKind};
use super::{QasmError, QasmErrorKind};

/// Parses raw bytes; invalid UTF-8 becomes an encoding diagnostic.
pub fn parse_bytes(bytes: &[u8]) -> Result<Circuit, QasmError> {
    match std::str::from_utf8(bytes) {
        Ok(text) => parse(text),
        Err(e) => {
            let valid = &bytes[..e.valid_up_to()];
            let line = 1 + valid.iter().filter(|&&b| b == b'\n').count();
            let col = 1 + valid.iter().rev().take_while(|&&b| b != b'\n').count();
            Err(QasmError::new(
                QasmErrorKind::Encoding,
                line,
                col,
                "invalid UTF-8",
            ))
        }
    }
}

pub fn parse(text: &str) -> Result<Circuit, QasmError> {
    let tokens = tokenize(text)?;
    Parser {
        tokens,
        pos: 0,
        qreg: None,
        creg: None,
        circuit: None,
    }
    .program()
}

struct Register {
    name: String,
    size: usize,
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    qreg: Option<Register>,
    creg: Option<Register>,
    circuit: Option<Circuit>,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn here(&self) -> (usize, usize) {
        match self.peek().or(self.tokens.last()) {
            Some(t) => (t.line, t.col),
            None => (1, 1),
        }
    }

    fn error(&self, kind: QasmErrorKind, msg: impl Into<String>) -> QasmError {
        let (line, col) = self.here();
        QasmError::new(kind, line, col, msg)
    }

    fn at(tok: &Token, kind: QasmErrorKind, msg: impl Into<String>) -> QasmError {
        QasmError::new(kind, tok.line, tok.col, msg)
    }

    fn next(&mut self, what: &str) -> Result<Token, QasmError> {
        match self.tokens.get(self.pos) {
            Some(t) => {
                self.pos += 1;
                Ok(t.clone())
            }
            None => Err(self.error(
                QasmErrorKind::Syntax,
                format!("unexpected end of input, expected {what}"),
            )),
        }
    }

    fn expect(&mut self, kind: TokenKind) -> Result<Token, QasmError> {
        let tok = self.next(&kind.describe())?;
        if tok.kind != kind {
            return Err(Self::at(
                &tok,
                QasmErrorKind::Syntax,
                format!(
                    "expected {}, found {}",
                    kind.describe(),
                    tok.kind.describe()
                ),
            ));
        }
        Ok(tok)
    }

    fn ident(&mut self) -> Result<(String, Token), QasmError> {
        let tok = self.next("identifier")?;
        match &tok.kind {
            TokenKind::Ident(s) => Ok((s.clone(), tok.clone())),
            other => Err(Self::at(
                &tok,
                QasmErrorKind::Syntax,
                format!("expected identifier, found {}", other.describe()),
            )),
        }
    }

    fn integer(&mut self) -> Result<usize, QasmError> {
        let tok = self.next("integer")?;
        match &tok.kind {
            TokenKind::Number(s) => s.parse::<usize>().map_err(|_| {
                Self::at(
                    &tok,
                    QasmErrorKind::Syntax,
                    format!("expected a non-negative integer, found `{s}`"),
                )
            }),
            other => Err(Self::at(
                &tok,
                QasmErrorKind::Syntax,
                format!("expected integer, found {}", other.describe()),
            )),
        }
    }

    fn program(mut self) -> Result<Circuit, QasmError> {
        self.header()?;
        while self.peek().is_some() {
            self.statement()?;
        }
        match self.circuit {
            Some(c) => Ok(c),
            None => Err(self.error(QasmErrorKind::Register, "program declares no qreg")),
        }
    }

    fn header(&mut self) -> Result<(), QasmError> {
        let (name, tok) = self.ident()?;
        if name != "OPENQASM" {
            return Err(Self::at(
                &tok,
                QasmErrorKind::Syntax,
                "expected `OPENQASM 2.0;` header",
            ));
        }
        let v = self.next("version")?;
        match &v.kind {
            TokenKind::Number(s) if s == "2.0" || s == "2" => {}
            other => {
                return Err(Self::at(
                    &v,
                    QasmErrorKind::Syntax,
                    format!("unsupported version {}", other.describe()),
                ));
            }
        }
        self.expect(TokenKind::Semi)?;
        Ok(())
    }

    fn statement(&mut self) -> Result<(), QasmError> {
        let (name, tok) = self.ident()?;
        match name.as_str() {
            "qreg" => self.qreg_decl(&tok),
            "creg" => self.creg_decl(&tok),
            "include" => Err(Self::at(
                &tok,
                QasmErrorKind::Syntax,
                "include files are not supported",
            )),
            "measure" => self.measure(&tok),
            "OPENQASM" => Err(Self::at(&tok, QasmErrorKind::Syntax, "duplicate header")),
            _ => match GateKind::from_mnemonic(&name) {
                Some(kind) => self.gate(kind, &tok),
                None => Err(Self::at(
                    &tok,
                    QasmErrorKind::UnknownGate,
                    format!("unknown gate `{name}`"),
                )),
            },
        }
    }

    fn declaration(&mut self) -> Result<Register, QasmError> {
        let (name, _) = self.ident()?;
        self.expect(TokenKind::LBracket)?;
        let size_tok = self.peek().cloned();
        let size = self.integer()?;
        self.expect(TokenKind::RBracket)?;
        self.expect(TokenKind::Semi)?;
        if size == 0 {
            let tok = size_tok.expect("integer token");
            return Err(Self::at(
                &tok,
                QasmErrorKind::Register,
                "register size must be positive",
            ));
        }
        Ok(Register { name, size })
    }

    fn qreg_decl(&mut self, kw: &Token) -> Result<(), QasmError> {
        if self.qreg.is_some() {
            return Err(Self::at(
                kw,
                QasmErrorKind::Register,
                "only one qreg is supported",
            ));
        }
        let reg = self.declaration()?;
        if self.creg.as_ref().is_some_and(|c| c.name == reg.name) {
            return Err(Self::at(
                kw,
                QasmErrorKind::Register,
                format!("register `{}` redeclared", reg.name),
            ));
        }
        self.circuit = Some(Circuit::new(reg.size).expect("positive size"));
        self.qreg = Some(reg);
        Ok(())
    }

    fn creg_decl(&mut self, kw: &Token) -> Result<(), QasmError> {
        if self.creg.is_some() {
            return Err(Self::at(
                kw,
                QasmErrorKind::Register,
                "only one creg is supported",
            ));
        }
        let reg = self.declaration()?;
        if self.qreg.as_ref().is_some_and(|q| q.name == reg.name) {
            return Err(Self::at(
                kw,
                QasmErrorKind::Register,
                format!("register `{}` redeclared", reg.name),
            ));
        }
        self.creg = Some(reg);
        Ok(())
    }

    /// `name[index]` checked against a declared register.
    fn operand(&mut self, quantum: bool) -> Result<usize, QasmError> {
        let (name, tok) = self.ident()?;
        let reg = if quantum { &self.qreg } else { &self.creg };
        let (reg_name, size) = match reg {
            Some(r) => (r.name.clone(), r.size),
            None => {
                let what = if quantum { "qreg" } else { "creg" };
                return Err(Self::at(
                    &tok,
                    QasmErrorKind::Register,
                    format!("`{name}` used before any {what} declaration"),
                ));
            }
        };
        if name != reg_name {
            return Err(Self::at(
                &tok,
                QasmErrorKind::Register,
                format!("unknown register `{name}`"),
            ));
        }
        self.expect(TokenKind::LBracket)?;
        let idx_tok = self.peek().cloned();
        let idx = self.integer()?;
        self.expect(TokenKind::RBracket)?;
        if idx >= size {
            let tok = idx_tok.expect("integer token");
            return Err(Self::at(
                &tok,
                QasmErrorKind::Register,
                format!("index {idx} out of range for register `{name}` of size {size}"),
            ));
        }
        Ok(idx)
    }

    fn measure(&mut self, kw: &Token) -> Result<(), QasmError> {
        let q = self.operand(true)?;
        self.expect(TokenKind::Arrow)?;
        self.operand(false)?;
        self.expect(TokenKind::Semi)?;
        self.push(Gate::new(GateKind::Measure, vec![q], None), kw)
    }

    fn gate(&mut self, kind: GateKind, kw: &Token) -> Result<(), QasmError> {
        let mut param = None;
        if self.peek().map(|t| &t.kind) == Some(&TokenKind::LParen) {
            self.pos += 1;
            param = Some(Angle::Value(self.angle()?));
            self.expect(TokenKind::RParen)?;
        }
        let mut qubits = vec![self.operand(true)?];
        while self.peek().map(|t| &t.kind) == Some(&TokenKind::Comma) {
            self.pos += 1;
            qubits.push(self.operand(true)?);
        }
        self.expect(TokenKind::Semi)?;
        self.push(Gate::new(kind, qubits, param), kw)
    }

    fn push(
        &mut self,
        gate: Result<Gate, crate::circuit::CircuitError>,
        at: &Token,
    ) -> Result<(), QasmError> {
        let gate = gate.map_err(|e| Self::at(at, QasmErrorKind::Syntax, e.to_string()))?;
        let circuit = match self.circuit.as_mut() {
            Some(c) => c,
            None => {
                return Err(Self::at(
                    at,
                    QasmErrorKind::Register,
                    "gate before qreg declaration",
                ))
            }
        };
        circuit
            .append(gate)
            .map_err(|e| Self::at(at, QasmErrorKind::Register, e.to_string()))?;
        Ok(())
    }

    /// `[-] ( number | number * pi [/ number] | pi [/ number] )`
    fn angle(&mut self) -> Result<f64, QasmError> {
        let start = self.peek().cloned();
        let angle_err = |p: &Parser, msg: &str| match &start {
            Some(t) => Parser::at(t, QasmErrorKind::Angle, msg),
            None => p.error(QasmErrorKind::Angle, msg),
        };
        let negative = if self.peek().map(|t| &t.kind) == Some(&TokenKind::Minus) {
            self.pos += 1;
            true
        } else {
            false
        };
        let tok = self
            .next("angle")
            .map_err(|_| angle_err(self, "missing angle"))?;
        let magnitude = match &tok.kind {
            TokenKind::Ident(s) if s == "pi" => self
                .over_denominator(PI)
                .map_err(|_| angle_err(self, "bad angle"))?,
            TokenKind::Number(s) => {
                let k: f64 = s.parse().map_err(|_| angle_err(self, "malformed number"))?;
                if self.peek().map(|t| &t.kind) == Some(&TokenKind::Star) {
                    self.pos += 1;
                    match self.next("pi").map(|t| t.kind) {
                        Ok(TokenKind::Ident(p)) if p == "pi" => {}
                        _ => return Err(angle_err(self, "expected `pi` after `*`")),
                    }
                    self.over_denominator(k * PI)
                        .map_err(|_| angle_err(self, "bad angle"))?
                } else {
                    k
                }
            }
            _ => return Err(angle_err(self, "expected a number or `pi`")),
        };
        if !magnitude.is_finite() {
            return Err(angle_err(self, "angle is not finite"));
        }
        if let Some(TokenKind::Star | TokenKind::Slash | TokenKind::Plus | TokenKind::Minus) =
            self.peek().map(|t| &t.kind)
        {
            return Err(angle_err(self, "unsupported angle expression"));
        }
        Ok(if negative { -magnitude } else { magnitude })
    }

    fn over_denominator(&mut self, numerator: f64) -> Result<f64, ()> {
        if self.peek().map(|t| &t.kind) != Some(&TokenKind::Slash) {
            return Ok(numerator);
        }
        self.pos += 1;
        match self.next("denominator").map(|t| t.kind) {
            Ok(TokenKind::Number(s)) => match s.parse::<f64>() {
                Ok(m) if m != 0.0 => Ok(numerator / m),
                _ => Err(()),
            },
            _ => Err(()),
        }
    }
}
