//! Small text helpers shared by the knowledge lookups and the output parsers.

/// Lowercases, turns every non-alphanumeric character into a space and
/// collapses runs of whitespace.
pub fn normalize_name(s: &str) -> String {
    let mapped: String = s
        .chars()
        .map(|c| if c.is_alphanumeric() { c.to_ascii_lowercase() } else { ' ' })
        .collect();
    mapped.split_whitespace().collect::<Vec<_>>().join(" ")
}

pub fn tokens(s: &str) -> Vec<String> {
    normalize_name(s).split(' ').filter(|t| !t.is_empty()).map(str::to_owned).collect()
}

/// Strips markdown emphasis and surrounding punctuation that models like to
/// wrap around names ("**Speed**:", "`Shape`").
pub fn strip_decoration(s: &str) -> &str {
    s.trim_matches(|c: char| c.is_whitespace() || matches!(c, '*' | '_' | '`' | '"' | '\'' | ':' | ';' | ',' | '.' | '-' | '\u{2013}' | '\u{2014}'))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_collapses_case_and_punctuation() {
        assert_eq!(normalize_name("  Ease of   Operation "), "ease of operation");
        assert_eq!(normalize_name("Object-Affected Harmful"), "object affected harmful");
        assert_eq!(normalize_name("Stability of the object's composition"), "stability of the object s composition");
        assert_eq!(normalize_name("Force (Intensity)"), "force intensity");
    }

    #[test]
    fn decoration_is_stripped() {
        assert_eq!(strip_decoration("**Device Complexity**:"), "Device Complexity");
        assert_eq!(strip_decoration("  `Shape` "), "Shape");
    }
}
