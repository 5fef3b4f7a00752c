use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    Int(i64),
    Sym(&'static str),
    Eof,
}

#[derive(Clone, Debug)]
pub(crate) struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

const SYMBOLS: &[&str] = &[
    ":=", "==", "!=", "<=", ">=", "=>", "&&", "||", ";", ":", "(", ")", "{", "}", "+", "-", "*",
    "=", "<", ">", "!", ".", ",",
];

fn unicode_symbol(c: char) -> Option<&'static str> {
    Some(match c {
        '≠' => "!=",
        '≤' => "<=",
        '≥' => ">=",
        '¬' => "!",
        '∧' => "&&",
        '∨' => "||",
        '⇒' | '→' => "=>",
        _ => return None,
    })
}

pub(crate) fn tokenize(src: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let err = |line, col, msg: String| Error::Parse { line, col, msg };

    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') || c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let (start_line, start_col) = (line, col);
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            while i < chars.len() && chars[i] == '\'' {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            col += i - start;
            out.push(Token {
                tok: Tok::Ident(word),
                line: start_line,
                col: start_col,
            });
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            col += i - start;
            let n = text
                .parse::<i64>()
                .map_err(|_| err(start_line, start_col, format!("integer literal `{text}` out of range")))?;
            out.push(Token {
                tok: Tok::Int(n),
                line: start_line,
                col: start_col,
            });
            continue;
        }
        if c == '∃' {
            i += 1;
            col += 1;
            out.push(Token {
                tok: Tok::Ident("exists".into()),
                line: start_line,
                col: start_col,
            });
            continue;
        }
        if let Some(sym) = unicode_symbol(c) {
            i += 1;
            col += 1;
            out.push(Token {
                tok: Tok::Sym(sym),
                line: start_line,
                col: start_col,
            });
            continue;
        }
        let rest: String = chars[i..(i + 2).min(chars.len())].iter().collect();
        let sym = SYMBOLS
            .iter()
            .find(|s| rest.starts_with(**s))
            .ok_or_else(|| err(line, col, format!("unexpected character `{c}`")))?;
        i += sym.len();
        col += sym.len();
        out.push(Token {
            tok: Tok::Sym(sym),
            line: start_line,
            col: start_col,
        });
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}
