//! RFC-4180 delimited text.
//!
//! Null and empty string are different cells here: an unquoted empty field
//! reads as `None`, a quoted `""` reads as `Some("")`. The writer quotes only
//! when needed, and always quotes empty strings.

use super::FormatError;

pub type Record = Vec<Option<String>>;

fn needs_quotes(s: &str) -> bool {
    s.is_empty() || s.contains([',', '"', '\n', '\r'])
}

pub fn write_field(out: &mut String, field: Option<&str>) {
    let Some(s) = field else {
        return;
    };
    if needs_quotes(s) {
        out.push('"');
        for c in s.chars() {
            if c == '"' {
                out.push('"');
            }
            out.push(c);
        }
        out.push('"');
    } else {
        out.push_str(s);
    }
}

pub fn write_record<'a>(out: &mut String, fields: impl IntoIterator<Item = Option<&'a str>>) {
    for (i, f) in fields.into_iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        write_field(out, f);
    }
    out.push('\n');
}

/// Reads records. CRLF and LF line endings are both accepted; a final line
/// without terminator is a record. With `skip_blank_lines`, lines with no
/// characters at all are ignored (raw sources); otherwise such a line is a
/// record holding one null field.
pub fn read_records(text: &str, skip_blank_lines: bool) -> Result<Vec<Record>, FormatError> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let mut records = Vec::new();
    let mut chars = text.chars().peekable();
    let mut line = 1usize;
    while chars.peek().is_some() {
        let start_line = line;
        let mut record: Record = Vec::new();
        let mut blank = true;
        loop {
            // one field
            let field = if chars.peek() == Some(&'"') {
                chars.next();
                blank = false;
                let mut s = String::new();
                loop {
                    match chars.next() {
                        None => {
                            return Err(FormatError::Csv {
                                line: start_line,
                                message: "unterminated quoted field".into(),
                            })
                        }
                        Some('"') => {
                            if chars.peek() == Some(&'"') {
                                chars.next();
                                s.push('"');
                            } else {
                                break;
                            }
                        }
                        Some(c) => {
                            if c == '\n' {
                                line += 1;
                            }
                            s.push(c);
                        }
                    }
                }
                match chars.peek() {
                    None | Some(',') | Some('\n') | Some('\r') => {}
                    Some(c) => {
                        return Err(FormatError::Csv {
                            line,
                            message: format!("unexpected `{c}` after closing quote"),
                        })
                    }
                }
                Some(s)
            } else {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    match c {
                        ',' | '\n' | '\r' => break,
                        '"' => {
                            return Err(FormatError::Csv {
                                line,
                                message: "quote inside unquoted field".into(),
                            })
                        }
                        _ => {
                            s.push(c);
                            chars.next();
                        }
                    }
                }
                if !s.is_empty() {
                    blank = false;
                }
                (!s.is_empty()).then_some(s)
            };
            record.push(field);
            match chars.next() {
                Some(',') => {
                    blank = false;
                    continue;
                }
                Some('\r') => {
                    if chars.peek() == Some(&'\n') {
                        chars.next();
                    }
                    line += 1;
                    break;
                }
                Some('\n') => {
                    line += 1;
                    break;
                }
                None => break,
                Some(_) => unreachable!("field reader stops only at delimiters"),
            }
        }
        if !(blank && skip_blank_lines) {
            records.push(record);
        }
    }
    Ok(records)
}
