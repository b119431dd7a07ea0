//! Best-effort LaTeX scanning: text stripping, environment and sectioning
//! boundaries, and preamble metadata.

/// Commands whose arguments carry no running text; the command and every
/// directly attached `[..]`/`{..}` group are removed.
const DROP_WITH_ARGS: &[&str] = &[
    "documentclass",
    "usepackage",
    "usetheme",
    "usecolortheme",
    "usefonttheme",
    "useinnertheme",
    "useoutertheme",
    "setbeamertemplate",
    "setbeamercolor",
    "setbeamerfont",
    "setbeamersize",
    "includegraphics",
    "graphicspath",
    "label",
    "ref",
    "eqref",
    "autoref",
    "cref",
    "pageref",
    "cite",
    "citep",
    "citet",
    "nocite",
    "vspace",
    "hspace",
    "vskip",
    "hskip",
    "newcommand",
    "renewcommand",
    "providecommand",
    "newenvironment",
    "definecolor",
    "setlength",
    "addtolength",
    "setcounter",
    "pagestyle",
    "thispagestyle",
    "bibliographystyle",
    "bibliography",
    "input",
    "include",
    "geometry",
    "hypersetup",
    "color",
    "titlegraphic",
    "logo",
];

/// Environments whose body is not text.
const DROP_ENV_BODY: &[&str] = &["tikzpicture", "comment", "thebibliography"];

/// Sectioning commands that open a new poster panel.
pub const SECTIONING: &[&str] = &["part", "chapter", "section", "subsection", "subsubsection"];

/// Environments that form a poster panel of their own.
pub const BLOCK_ENVS: &[&str] = &[
    "block",
    "alertblock",
    "exampleblock",
    "tcolorbox",
    "posterbox",
];

/// Preamble commands whose argument forms title-page text, in output order.
const TITLE_FIELDS: &[&str] = &["title", "subtitle", "author", "institute", "date"];

/// Remove `%` comments, honouring `\%`.
pub fn remove_comments(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for line in text.split_inclusive('\n') {
        let mut escaped = false;
        let mut cut = None;
        for (i, c) in line.char_indices() {
            match c {
                '\\' => escaped = !escaped,
                '%' if !escaped => {
                    cut = Some(i);
                    break;
                }
                _ => escaped = false,
            }
        }
        match cut {
            Some(i) => {
                out.push_str(&line[..i]);
                if line.ends_with('\n') {
                    out.push('\n');
                }
            }
            None => out.push_str(line),
        }
    }
    out
}

/// Read a balanced group starting at byte `start`, which must hold `open`.
/// Returns the inner text and the byte offset just past the closing
/// delimiter.
pub fn read_group(text: &str, start: usize, open: char, close: char) -> Option<(&str, usize)> {
    let mut chars = text[start..].char_indices();
    match chars.next() {
        Some((_, c)) if c == open => {}
        _ => return None,
    }
    let mut depth = 1usize;
    let mut escaped = false;
    for (i, c) in chars {
        if escaped {
            escaped = false;
            continue;
        }
        match c {
            '\\' => escaped = true,
            c if c == open => depth += 1,
            c if c == close => {
                depth -= 1;
                if depth == 0 {
                    let inner = &text[start + open.len_utf8()..start + i];
                    return Some((inner, start + i + close.len_utf8()));
                }
            }
            _ => {}
        }
    }
    None
}

/// Read a command name (ASCII letters, optional trailing `*`) at byte `at`.
fn read_name(text: &str, at: usize) -> (&str, usize) {
    let bytes = text.as_bytes();
    let mut end = at;
    while end < bytes.len() && bytes[end].is_ascii_alphabetic() {
        end += 1;
    }
    let name = &text[at..end];
    if end < bytes.len() && bytes[end] == b'*' && !name.is_empty() {
        end += 1;
    }
    (name, end)
}

/// Skip directly attached optional `[..]` groups.
fn skip_optional(text: &str, mut at: usize) -> usize {
    while text[at..].starts_with('[') {
        match read_group(text, at, '[', ']') {
            Some((_, end)) => at = end,
            None => break,
        }
    }
    at
}

/// Skip every directly attached `[..]` or `{..}` group.
fn skip_all_args(text: &str, mut at: usize) -> usize {
    loop {
        let next = if text[at..].starts_with('[') {
            read_group(text, at, '[', ']')
        } else if text[at..].starts_with('{') {
            read_group(text, at, '{', '}')
        } else {
            None
        };
        match next {
            Some((_, end)) => at = end,
            None => return at,
        }
    }
}

/// Byte offset just past `\end{env}` matching a `\begin{env}` whose body
/// starts at `from`, or `None` when unterminated.
pub fn find_env_end(text: &str, env: &str, from: usize) -> Option<(usize, usize)> {
    let open = format!("\\begin{{{env}}}");
    let close = format!("\\end{{{env}}}");
    let mut depth = 1usize;
    let mut at = from;
    loop {
        let next_open = text[at..].find(&open).map(|i| i + at);
        let next_close = text[at..].find(&close).map(|i| i + at)?;
        match next_open {
            Some(o) if o < next_close => {
                depth += 1;
                at = o + open.len();
            }
            _ => {
                depth -= 1;
                if depth == 0 {
                    return Some((next_close, next_close + close.len()));
                }
                at = next_close + close.len();
            }
        }
    }
}

fn strip_into(text: &str, out: &mut String) {
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < text.len() {
        let c = text[i..].chars().next().expect("in bounds");
        match c {
            '\\' => {
                let (name, after) = read_name(text, i + 1);
                if name.is_empty() {
                    // control symbol
                    match text[i + 1..].chars().next() {
                        Some(sym @ ('%' | '&' | '_' | '#' | '$' | '{' | '}')) => {
                            out.push(sym);
                            i += 1 + sym.len_utf8();
                        }
                        Some('\\') => {
                            out.push('\n');
                            i += 2;
                        }
                        Some(other) => {
                            out.push(' ');
                            i += 1 + other.len_utf8();
                        }
                        None => i += 1,
                    }
                    continue;
                }
                let base = name.trim_end_matches('*');
                if base == "begin" || base == "end" {
                    let env = read_group(text, after, '{', '}');
                    let mut at = env.map_or(after, |(_, e)| e);
                    if base == "begin" {
                        if let Some((env_name, _)) = env {
                            if DROP_ENV_BODY.contains(&env_name) {
                                if let Some((_, end)) = find_env_end(text, env_name, at) {
                                    i = end;
                                    out.push(' ');
                                    continue;
                                }
                            }
                        }
                        at = skip_optional(text, at);
                    }
                    out.push(' ');
                    i = at;
                } else if DROP_WITH_ARGS.contains(&base) {
                    out.push(' ');
                    i = skip_all_args(text, after);
                } else {
                    out.push(' ');
                    i = skip_optional(text, after);
                }
            }
            '{' | '$' => i += 1,
            '}' | '~' | '&' => {
                out.push(' ');
                i += 1;
            }
            _ => {
                out.push(c);
                i += c.len_utf8();
            }
        }
        debug_assert!(i <= bytes.len());
    }
}

/// Strip LaTeX markup down to its running text.
///
/// Comments, environment delimiters and command names go; arguments of
/// text-bearing commands (sections, titles, emphasis, items) stay; the
/// arguments of layout and reference commands are dropped. Whitespace is
/// collapsed to single spaces.
pub fn strip_latex(text: &str) -> String {
    let uncommented = remove_comments(text);
    let mut out = String::with_capacity(uncommented.len());
    strip_into(&uncommented, &mut out);
    out.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Text of the preamble's title-page fields (`\title`, `\author`, ...).
pub fn title_page_text(preamble: &str) -> String {
    let text = remove_comments(preamble);
    let mut parts = Vec::new();
    for field in TITLE_FIELDS {
        let pat = format!("\\{field}");
        let mut at = 0;
        while let Some(pos) = text[at..].find(&pat) {
            let start = pos + at + pat.len();
            at = start;
            // must be the whole command name
            if text[start..].starts_with(|c: char| c.is_ascii_alphabetic()) {
                continue;
            }
            let arg_at = skip_optional(&text, start);
            if let Some((arg, _)) = read_group(&text, arg_at, '{', '}') {
                let s = strip_latex(arg);
                if !s.is_empty() {
                    parts.push(s);
                }
                break;
            }
        }
    }
    parts.join(" ")
}

/// Split a document into preamble and body around `\begin{document}`.
/// Without a document environment the whole text is body.
pub fn split_document(text: &str) -> (&str, &str) {
    const BEGIN: &str = "\\begin{document}";
    const END: &str = "\\end{document}";
    match text.find(BEGIN) {
        Some(b) => {
            let body_start = b + BEGIN.len();
            let body_end = text[body_start..]
                .find(END)
                .map_or(text.len(), |e| e + body_start);
            (&text[..b], &text[body_start..body_end])
        }
        None => ("", text),
    }
}

/// Structural problems that make the markup untrustworthy: unbalanced
/// braces or mismatched `\begin`/`\end` pairs.
pub fn check_balanced(text: &str) -> Result<(), String> {
    let text = remove_comments(text);
    let mut depth: i64 = 0;
    let mut escaped = false;
    for c in text.chars() {
        if escaped {
            escaped = false;
            continue;
        }
        match c {
            '\\' => escaped = true,
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth < 0 {
                    return Err("unmatched closing brace".into());
                }
            }
            _ => {}
        }
    }
    if depth != 0 {
        return Err(format!("{depth} unclosed brace(s)"));
    }

    let mut stack: Vec<&str> = Vec::new();
    let mut at = 0;
    while let Some(pos) = text[at..].find('\\') {
        let start = at + pos;
        let (name, after) = read_name(&text, start + 1);
        at = after.max(start + 1);
        if name != "begin" && name != "end" {
            continue;
        }
        let Some((env, end)) = read_group(&text, after, '{', '}') else {
            return Err(format!("\\{name} without environment name"));
        };
        at = end;
        if name == "begin" {
            stack.push(env);
        } else {
            match stack.pop() {
                Some(open) if open == env => {}
                Some(open) => {
                    return Err(format!("\\end{{{env}}} closes \\begin{{{open}}}"));
                }
                None => return Err(format!("\\end{{{env}}} without \\begin")),
            }
        }
    }
    if let Some(open) = stack.pop() {
        return Err(format!("\\begin{{{open}}} never closed"));
    }
    Ok(())
}

/// A command or environment opening at some byte offset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Marker<'a> {
    Begin(&'a str),
    End(&'a str),
    Command(&'a str),
}

/// Every `\begin{..}`, `\end{..}` and named command in order, with its
/// byte offset. Comments must already be removed.
pub fn markers(text: &str) -> Vec<(usize, Marker<'_>)> {
    let mut out = Vec::new();
    let mut at = 0;
    while let Some(pos) = text[at..].find('\\') {
        let start = at + pos;
        let (name, after) = read_name(text, start + 1);
        if name.is_empty() {
            at = start + 1 + text[start + 1..].chars().next().map_or(0, char::len_utf8);
            continue;
        }
        at = after;
        match name {
            "begin" | "end" => {
                if let Some((env, end)) = read_group(text, after, '{', '}') {
                    at = end;
                    out.push((
                        start,
                        if name == "begin" {
                            Marker::Begin(env)
                        } else {
                            Marker::End(env)
                        },
                    ));
                }
            }
            _ => out.push((start, Marker::Command(name.trim_end_matches('*')))),
        }
    }
    out
}
