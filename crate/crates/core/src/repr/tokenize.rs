/// Split a tweet into lowercase word tokens.
///
/// URLs and `@user` mentions are dropped, hashtags keep their word without
/// `#`, and echo parentheses fall away with the other punctuation. Internal
/// apostrophes stay (`don't`), leading and trailing ones do not.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for raw in text.split_whitespace() {
        let lower = raw.to_lowercase();
        let bare = lower.trim_start_matches(['(', '"', '\'']);
        if bare.starts_with("http://") || bare.starts_with("https://") || bare.starts_with("www.")
        {
            continue;
        }
        if bare.starts_with('@') {
            continue;
        }
        for piece in lower.split(|c: char| !(c.is_alphanumeric() || c == '_' || c == '\'')) {
            let piece = piece.trim_matches('\'');
            if !piece.is_empty() {
                out.push(piece.to_owned());
            }
        }
    }
    out
}
