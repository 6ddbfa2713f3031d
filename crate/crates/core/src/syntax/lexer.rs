use super::ParseError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Nat(String),
    Str(String),
    LParen,
    RParen,
    Comma,
    Dot,
    Slash,
    Colon,
    Define,
    Arrow,
    BiArrow,
    Eq,
    Neq,
    Amp,
    Bar,
    Bang,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Nat(s) => format!("number `{s}`"),
            Tok::Str(s) => format!("string {s:?}"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Dot => "`.`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Define => "`:=`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::BiArrow => "`<->`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Neq => "`!=`".into(),
            Tok::Amp => "`&`".into(),
            Tok::Bar => "`|`".into(),
            Tok::Bang => "`!`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Spanned {
    pub tok: Tok,
    pub line: usize,
    pub column: usize,
}

pub fn tokenize(text: &str) -> Result<Vec<Spanned>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let err = |line, column, message: String| ParseError {
        line,
        column,
        message,
        expected: None,
    };
    while i < chars.len() {
        let c = chars[i];
        let (start_line, start_col) = (line, col);
        let advance = |n: usize, i: &mut usize, col: &mut usize| {
            *i += n;
            *col += n;
        };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            advance(1, &mut i, &mut col);
            continue;
        }
        if c == '%' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let two: String = chars[i..chars.len().min(i + 3)].iter().collect();
        let tok = if two.starts_with("<->") {
            advance(3, &mut i, &mut col);
            Tok::BiArrow
        } else if two.starts_with("->") {
            advance(2, &mut i, &mut col);
            Tok::Arrow
        } else if two.starts_with(":=") {
            advance(2, &mut i, &mut col);
            Tok::Define
        } else if two.starts_with("!=") {
            advance(2, &mut i, &mut col);
            Tok::Neq
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '\'') {
                i += 1;
            }
            col += i - start;
            Tok::Ident(chars[start..i].iter().collect())
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            col += i - start;
            Tok::Nat(chars[start..i].iter().collect())
        } else if c == '"' {
            i += 1;
            col += 1;
            let mut s = String::new();
            loop {
                match chars.get(i) {
                    None | Some('\n') => {
                        return Err(err(start_line, start_col, "unterminated string".into()));
                    }
                    Some('"') => {
                        i += 1;
                        col += 1;
                        break;
                    }
                    Some('\\') => {
                        let esc = match chars.get(i + 1) {
                            Some('"') => '"',
                            Some('\\') => '\\',
                            Some('n') => '\n',
                            _ => return Err(err(line, col, "invalid escape in string".into())),
                        };
                        s.push(esc);
                        i += 2;
                        col += 2;
                    }
                    Some(&ch) => {
                        s.push(ch);
                        i += 1;
                        col += 1;
                    }
                }
            }
            Tok::Str(s)
        } else {
            let tok = match c {
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                ',' => Tok::Comma,
                '.' => Tok::Dot,
                '/' => Tok::Slash,
                ':' => Tok::Colon,
                '=' => Tok::Eq,
                '&' => Tok::Amp,
                '|' => Tok::Bar,
                '!' => Tok::Bang,
                other => return Err(err(line, col, format!("unexpected character {other:?}"))),
            };
            advance(1, &mut i, &mut col);
            tok
        };
        out.push(Spanned {
            tok,
            line: start_line,
            column: start_col,
        });
    }
    out.push(Spanned {
        tok: Tok::Eof,
        line,
        column: col,
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokens_and_positions() {
        let toks = tokenize("st: Ord(x,\"yes\") -> Paid(x). % comment\nQ() := 12").unwrap();
        let kinds: Vec<Tok> = toks.iter().map(|t| t.tok.clone()).collect();
        assert_eq!(kinds[0], Tok::Ident("st".into()));
        assert_eq!(kinds[1], Tok::Colon);
        assert!(kinds.contains(&Tok::Str("yes".into())));
        assert!(kinds.contains(&Tok::Arrow));
        assert!(kinds.contains(&Tok::Define));
        let q = toks.iter().find(|t| t.tok == Tok::Ident("Q".into())).unwrap();
        assert_eq!((q.line, q.column), (2, 1));
    }

    #[test]
    fn unterminated_string() {
        let e = tokenize("R(\"abc").unwrap_err();
        assert_eq!((e.line, e.column), (1, 3));
    }
}
