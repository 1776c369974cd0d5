use super::Diagnostic;

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    /// Unsigned integer or decimal literal, as written.
    Number(String),
    Dot,
    Comma,
    Colon,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Eq,
    Neq,
    Tilde,
    Amp,
    Star,
    Slash,
    Minus,
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Number(s) => format!("number `{s}`"),
            Tok::Dot => "`.`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Colon => "`:`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Neq => "`!=`".into(),
            Tok::Tilde => "`~`".into(),
            Tok::Amp => "`&`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Token {
    pub tok: Tok,
    pub line: usize,
    pub column: usize,
}

pub(crate) fn lex(src: &str) -> Result<Vec<Token>, Vec<Diagnostic>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut errors = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        let push = |t: Tok, out: &mut Vec<Token>| out.push(Token { tok: t, line: l0, column: c0 });
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
        if c == '%' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '\'') {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            col += i - start;
            push(Tok::Ident(s), &mut out);
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit()) && !ends_statement(&out)) {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if i + 1 < chars.len() && chars[i] == '.' && chars[i + 1].is_ascii_digit() {
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            let s: String = chars[start..i].iter().collect();
            col += i - start;
            push(Tok::Number(s), &mut out);
            continue;
        }
        let (tok, width) = match c {
            '.' => (Tok::Dot, 1),
            ',' => (Tok::Comma, 1),
            ':' => (Tok::Colon, 1),
            '(' => (Tok::LParen, 1),
            ')' => (Tok::RParen, 1),
            '{' => (Tok::LBrace, 1),
            '}' => (Tok::RBrace, 1),
            '=' => (Tok::Eq, 1),
            '!' if chars.get(i + 1) == Some(&'=') => (Tok::Neq, 2),
            '~' => (Tok::Tilde, 1),
            '&' => (Tok::Amp, 1),
            '*' => (Tok::Star, 1),
            '/' => (Tok::Slash, 1),
            '-' => (Tok::Minus, 1),
            other => {
                errors.push(Diagnostic::error(line, col, format!("unexpected character `{other}`")));
                i += 1;
                col += 1;
                continue;
            }
        };
        push(tok, &mut out);
        i += width;
        col += width;
    }
    out.push(Token { tok: Tok::Eof, line, column: col });
    if errors.is_empty() {
        Ok(out)
    } else {
        Err(errors)
    }
}

// A `.` right after an identifier or `)` closes a statement, so `.5` there is
// not a number.
fn ends_statement(out: &[Token]) -> bool {
    matches!(out.last().map(|t| &t.tok), Some(Tok::Ident(_)) | Some(Tok::RParen) | Some(Tok::RBrace) | Some(Tok::Number(_)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        lex(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn numbers_and_dots() {
        assert_eq!(
            toks("caused Noise. {a: 0.85}"),
            vec![
                Tok::Ident("caused".into()),
                Tok::Ident("Noise".into()),
                Tok::Dot,
                Tok::LBrace,
                Tok::Ident("a".into()),
                Tok::Colon,
                Tok::Number("0.85".into()),
                Tok::RBrace,
                Tok::Eof
            ]
        );
        assert_eq!(toks("x = 12."), vec![Tok::Ident("x".into()), Tok::Eq, Tok::Number("12".into()), Tok::Dot, Tok::Eof]);
    }

    #[test]
    fn comments_and_positions() {
        let t = lex("% header\n  A != B").unwrap();
        assert_eq!((t[0].line, t[0].column), (2, 3));
        assert_eq!(t[1].tok, Tok::Neq);
        assert_eq!((t[2].line, t[2].column), (2, 8));
    }

    #[test]
    fn bad_character() {
        let e = lex("a $ b").unwrap_err();
        assert_eq!((e[0].line, e[0].column), (1, 3));
    }
}
