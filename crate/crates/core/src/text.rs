//! Tokenization shared by extraction, classification and query processing.

/// Lowercases, splits on anything that is not alphanumeric and drops tokens
/// shorter than two characters.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|tok| !tok.is_empty())
        .map(str::to_lowercase)
        .filter(|tok| tok.chars().count() >= 2)
        .collect()
}

/// Smoothed inverse document frequency, always positive.
pub fn smoothed_idf(n_docs: usize, df: usize) -> f64 {
    ((1.0 + n_docs as f64) / (1.0 + df as f64)).ln() + 1.0
}

pub fn l2_normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_and_lowercases() {
        assert_eq!(tokenize("World Cup Final!"), vec!["world", "cup", "final"]);
    }

    #[test]
    fn drops_single_characters_and_punctuation() {
        assert_eq!(tokenize("a b-cd, e.f  GH"), vec!["cd", "gh"]);
    }

    #[test]
    fn idf_is_positive_and_decreasing() {
        assert!(smoothed_idf(10, 10) > 0.0);
        assert!(smoothed_idf(10, 1) > smoothed_idf(10, 5));
    }

    #[test]
    fn unicode_lowercase() {
        assert_eq!(tokenize("ÉTÉ Ünïcode"), vec!["été", "ünïcode"]);
    }
}
