//! Identifier splitting shared by name matching and the encoder tokenizer.

/// Splits an identifier into lowercase word pieces.
///
/// Underscores and any other non-alphanumeric characters separate pieces.
/// Inside an alphanumeric run a new piece starts at a lower-to-upper
/// transition (`openFile`), and a run of capitals is kept together until
/// the last capital that begins a lowercase word (`HTTPServer` gives
/// `http`, `server`). Digits stay attached to the piece they follow.
pub fn split_identifier(name: &str) -> Vec<String> {
    let mut pieces = Vec::new();
    for run in name.split(|c: char| !c.is_alphanumeric()) {
        if run.is_empty() {
            continue;
        }
        let chars: Vec<char> = run.chars().collect();
        let mut current = String::new();
        for (i, &c) in chars.iter().enumerate() {
            if i > 0 && c.is_uppercase() {
                let prev = chars[i - 1];
                let next_is_lower = chars.get(i + 1).is_some_and(|n| n.is_lowercase());
                let boundary = prev.is_lowercase()
                    || prev.is_numeric()
                    || (prev.is_uppercase() && next_is_lower);
                if boundary && !current.is_empty() {
                    pieces.push(std::mem::take(&mut current));
                }
            }
            current.extend(c.to_lowercase());
        }
        if !current.is_empty() {
            pieces.push(current);
        }
    }
    pieces
}

/// Normalizes a function name to lowercase space-separated words.
///
/// `openFile` and `open_file` both become `open file`.
pub fn normalize_name(name: &str) -> String {
    split_identifier(name).join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn camel_and_snake_agree() {
        assert_eq!(normalize_name("openFile"), "open file");
        assert_eq!(normalize_name("open_file"), "open file");
    }

    #[test]
    fn capital_runs() {
        assert_eq!(normalize_name("HTTPServerStart"), "http server start");
        assert_eq!(normalize_name("parseJSON"), "parse json");
        assert_eq!(normalize_name("HTTP2Server"), "http2 server");
        assert_eq!(normalize_name("utf8Decode"), "utf8 decode");
    }

    #[test]
    fn dunder_and_sigils() {
        assert_eq!(normalize_name("__getter__"), "getter");
        assert_eq!(normalize_name("$userName"), "user name");
        assert_eq!(normalize_name("empty?"), "empty");
        assert_eq!(normalize_name("___"), "");
    }

    proptest! {
        #[test]
        fn idempotent(name in "[A-Za-z0-9_$]{1,24}") {
            let once = normalize_name(&name);
            prop_assert_eq!(normalize_name(&once), once.clone());
        }

        #[test]
        fn output_is_lowercase_words(name in "[A-Za-z0-9_]{1,24}") {
            let out = normalize_name(&name);
            prop_assert!(!out.contains("  "));
            prop_assert!(!out.starts_with(' ') && !out.ends_with(' '));
            for word in out.split(' ').filter(|w| !w.is_empty()) {
                prop_assert!(word.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit()));
            }
        }
    }
}
