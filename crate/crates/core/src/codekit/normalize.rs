use sha2::{Digest, Sha256};

/// Removes a trailing `#` comment, honouring quoted strings on the line.
pub(crate) fn strip_comment(line: &str) -> &str {
    let mut quote: Option<char> = None;
    let mut escaped = false;
    for (i, c) in line.char_indices() {
        if escaped {
            escaped = false;
            continue;
        }
        match quote {
            Some(q) => {
                if c == '\\' {
                    escaped = true;
                } else if c == q {
                    quote = None;
                }
            }
            None => match c {
                '#' => return &line[..i],
                '"' | '\'' => quote = Some(c),
                _ => {}
            },
        }
    }
    line
}

/// Deduplication form of candidate code: comments stripped, runs of
/// whitespace collapsed to one space, indentation and blank lines dropped.
pub fn normalize_code(code: &str) -> String {
    code.lines()
        .map(|l| strip_comment(l).split_whitespace().collect::<Vec<_>>().join(" "))
        .filter(|l| !l.is_empty())
        .collect::<Vec<_>>()
        .join("\n")
}

/// Hex digest of the normalized code.
pub fn code_hash(code: &str) -> String {
    let digest = Sha256::digest(normalize_code(code).as_bytes());
    digest[..16].iter().map(|b| format!("{b:02x}")).collect()
}

/// Token count of the normalized code: identifier/number runs count once,
/// every other non-space character counts alone.
pub fn token_count(code: &str) -> usize {
    let norm = normalize_code(code);
    let mut count = 0;
    let mut in_word = false;
    for c in norm.chars() {
        let wordy = c.is_alphanumeric() || c == '_' || c == '.';
        if c.is_whitespace() {
            in_word = false;
        } else if wordy {
            if !in_word {
                count += 1;
            }
            in_word = true;
        } else {
            count += 1;
            in_word = false;
        }
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn strips_comments() {
        assert_eq!(normalize_code("a = 1  # note"), "a = 1");
        assert_eq!(normalize_code("s = '# not a comment'  # real"), "s = '# not a comment'");
        assert_eq!(normalize_code("s = \"a\\\"#\" # c"), "s = \"a\\\"#\"");
    }

    #[test]
    fn indentation_insensitive() {
        let two = "def f(x):\n  if x:\n    return 1\n  return 2\n\n\n";
        let four = "def f(x):\n    if x:\n        return 1\n    return 2";
        assert_eq!(normalize_code(two), normalize_code(four));
        assert_eq!(code_hash(two), code_hash(four));
        assert_ne!(code_hash(two), code_hash("def f(x):\n    return 3"));
    }

    #[test]
    fn tokens() {
        assert_eq!(token_count("return a + b"), 4);
        assert_eq!(token_count("x = math.sqrt(2.5)  # c"), 6);
        assert_eq!(token_count("  "), 0);
    }

    proptest! {
        #[test]
        fn idempotent(s in "\\PC{0,200}") {
            let once = normalize_code(&s);
            prop_assert_eq!(normalize_code(&once), once.clone());
            prop_assert_eq!(token_count(&s), token_count(&once));
        }
    }
}
