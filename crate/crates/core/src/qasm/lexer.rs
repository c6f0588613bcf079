use super::{QasmError, QasmErrorKind};

#[derive(Clone, Debug, PartialEq)]
pub enum TokenKind {
    Ident(String),
    /// Numeric literal kept as source text so it parses exactly once.
    Number(String),
    Str(String),
    Semi,
    Comma,
    LBracket,
    RBracket,
    LParen,
    RParen,
    Arrow,
    Star,
    Slash,
    Minus,
    Plus,
}

impl TokenKind {
    pub fn describe(&self) -> String {
        match self {
            TokenKind::Ident(s) => format!("identifier `{s}`"),
            TokenKind::Number(s) => format!("number `{s}`"),
            TokenKind::Str(s) => format!("string \"{s}\""),
            TokenKind::Semi => "`;`".into(),
            TokenKind::Comma => "`,`".into(),
            TokenKind::LBracket => "`[`".into(),
            TokenKind::RBracket => "`]`".into(),
            TokenKind::LParen => "`(`".into(),
            TokenKind::RParen => "`)`".into(),
            TokenKind::Arrow => "`->`".into(),
            TokenKind::Star => "`*`".into(),
            TokenKind::Slash => "`/`".into(),
            TokenKind::Minus => "`-`".into(),
            TokenKind::Plus => "`+`".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub line: usize,
    pub col: usize,
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, QasmError> {
    let chars: Vec<char> = src.chars().collect();
    let mut tokens = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);

    macro_rules! push {
        ($kind:expr, $len:expr) => {{
            let len = $len;
            tokens.push(Token {
                kind: $kind,
                line,
                col,
            });
            i += len;
            col += len;
        }};
    }

    while i < chars.len() {
        let ch = chars[i];
        match ch {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => {
                i += 1;
                col += 1;
            }
            '/' if chars.get(i + 1) == Some(&'/') => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            ';' => push!(TokenKind::Semi, 1),
            ',' => push!(TokenKind::Comma, 1),
            '[' => push!(TokenKind::LBracket, 1),
            ']' => push!(TokenKind::RBracket, 1),
            '(' => push!(TokenKind::LParen, 1),
            ')' => push!(TokenKind::RParen, 1),
            '*' => push!(TokenKind::Star, 1),
            '/' => push!(TokenKind::Slash, 1),
            '+' => push!(TokenKind::Plus, 1),
            '-' if chars.get(i + 1) == Some(&'>') => push!(TokenKind::Arrow, 2),
            '-' => push!(TokenKind::Minus, 1),
            '"' => {
                let start = i + 1;
                let mut j = start;
                while j < chars.len() && chars[j] != '"' && chars[j] != '\n' {
                    j += 1;
                }
                if j >= chars.len() || chars[j] != '"' {
                    return Err(QasmError::new(
                        QasmErrorKind::Lexical,
                        line,
                        col,
                        "unterminated string",
                    ));
                }
                let s: String = chars[start..j].iter().collect();
                let len = j + 1 - i;
                push!(TokenKind::Str(s), len);
            }
            c if c.is_ascii_digit()
                || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) =>
            {
                let len = number_len(&chars[i..]);
                let text: String = chars[i..i + len].iter().collect();
                push!(TokenKind::Number(text), len);
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut j = i;
                while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                let text: String = chars[i..j].iter().collect();
                push!(TokenKind::Ident(text), j - i);
            }
            other => {
                return Err(QasmError::new(
                    QasmErrorKind::Lexical,
                    line,
                    col,
                    format!("unexpected character {other:?}"),
                ))
            }
        }
    }
    Ok(tokens)
}

/// Length of the decimal literal at the start of `s`:
/// `digits [. digits] [(e|E) [+-] digits]`.
fn number_len(s: &[char]) -> usize {
    let mut j = 0;
    while j < s.len() && s[j].is_ascii_digit() {
        j += 1;
    }
    if j < s.len() && s[j] == '.' {
        j += 1;
        while j < s.len() && s[j].is_ascii_digit() {
            j += 1;
        }
    }
    if j < s.len() && (s[j] == 'e' || s[j] == 'E') {
        let mut k = j + 1;
        if k < s.len() && (s[k] == '+' || s[k] == '-') {
            k += 1;
        }
        if k < s.len() && s[k].is_ascii_digit() {
            while k < s.len() && s[k].is_ascii_digit() {
                k += 1;
            }
            j = k;
        }
    }
    j
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokens_carry_positions() {
        let toks = tokenize("qreg q[2];\n  cx q[0] ,q[1]; // c\nrz(-1.5e-3) q[0];").unwrap();
        assert_eq!(toks[0].kind, TokenKind::Ident("qreg".into()));
        let cx = toks
            .iter()
            .find(|t| t.kind == TokenKind::Ident("cx".into()))
            .unwrap();
        assert_eq!((cx.line, cx.col), (2, 3));
        assert!(toks
            .iter()
            .any(|t| t.kind == TokenKind::Number("1.5e-3".into())));
    }

    #[test]
    fn bad_character() {
        let err = tokenize("h q[0];\n  $").unwrap_err();
        assert_eq!((err.line, err.col), (2, 3));
        assert_eq!(err.kind, QasmErrorKind::Lexical);
    }
}
