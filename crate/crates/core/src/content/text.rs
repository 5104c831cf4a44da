use crate::ingest::Article;

/// Body sentences kept per article.
pub const MAX_BODY_SENTENCES: usize = 12;

/// Lowercases and splits on anything that is not alphanumeric.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// First `n` sentences of `body`. A sentence ends at `.`, `!` or `?`
/// followed by whitespace or the end of the text.
pub fn first_sentences(body: &str, n: usize) -> &str {
    let mut count = 0;
    let mut chars = body.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if matches!(c, '.' | '!' | '?') {
            let at_boundary = match chars.peek() {
                None => true,
                Some((_, next)) => next.is_whitespace(),
            };
            if at_boundary {
                count += 1;
                if count == n {
                    return &body[..i + c.len_utf8()];
                }
            }
        }
    }
    body
}

/// Title tokens followed by the tokens of the first
/// [`MAX_BODY_SENTENCES`] body sentences.
pub fn prepare_text(article: &Article) -> Vec<String> {
    let mut tokens = tokenize(&article.title);
    tokens.extend(tokenize(first_sentences(&article.body, MAX_BODY_SENTENCES)));
    tokens
}

#[cfg(test)]
mod tests {
    use super::*;

    fn article(title: &str, body: &str) -> Article {
        Article {
            id: "x".into(),
            published_at: 0,
            category_id: 0,
            author_id: None,
            title: title.into(),
            body: body.into(),
        }
    }

    #[test]
    fn title_only() {
        assert_eq!(prepare_text(&article("Hello World", "")), ["hello", "world"]);
    }

    #[test]
    fn body_tokens_follow_title() {
        assert_eq!(prepare_text(&article("T", "A b. C d.")), ["t", "a", "b", "c", "d"]);
    }

    #[test]
    fn thirteenth_sentence_dropped() {
        let body: String = (1..=13).map(|i| format!("Sentence s{i} here! ")).collect();
        let tokens = prepare_text(&article("Head", &body));
        assert_eq!(tokens.len(), 1 + 12 * 3);
        assert_eq!(tokens[tokens.len() - 2], "s12");
        assert!(!tokens.contains(&"s13".to_string()));
    }

    #[test]
    fn decimal_point_is_not_a_boundary() {
        assert_eq!(first_sentences("Pi is 3.14 today. Next one.", 1), "Pi is 3.14 today.");
    }

    #[test]
    fn punctuation_stripped_and_lowercased() {
        assert_eq!(tokenize("Dr. Ávila's \"NEWS\", 2024?"), ["dr", "ávila", "s", "news", "2024"]);
    }

    #[test]
    fn empty_article_is_empty() {
        assert!(prepare_text(&article("", "  ")).is_empty());
    }
}
