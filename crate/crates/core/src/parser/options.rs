use serde::{Deserialize, Serialize};

/// One lettered choice, e.g. `(B) Anaplastic Astrocytoma`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerOption {
    pub label: char,
    #[serde(default)]
    pub text: String,
}

/// Distinct single-letter option labels with their full texts.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OptionSet {
    options: Vec<AnswerOption>,
}

impl OptionSet {
    /// Build from `(label, text)` pairs. Labels are upper-cased; later
    /// duplicates of a label are ignored.
    pub fn new<I, S>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (char, S)>,
        S: Into<String>,
    {
        let mut options: Vec<AnswerOption> = Vec::new();
        for (label, text) in pairs {
            let label = label.to_ascii_uppercase();
            if label.is_ascii_uppercase() && !options.iter().any(|o| o.label == label) {
                options.push(AnswerOption { label, text: text.into() });
            }
        }
        Self { options }
    }

    /// Every letter `A..=Z` with no option texts; only letter rules can fire.
    pub fn letters_only() -> Self {
        Self::new(('A'..='Z').map(|c| (c, String::new())))
    }

    /// Recover the `(A) text, (B) text, ...` options embedded in a prompt.
    /// Returns an empty set when the prompt has no lettered options.
    pub fn from_prompt(prompt: &str) -> Self {
        let markers = option_markers(prompt);
        let mut pairs = Vec::with_capacity(markers.len());
        for (i, &(pos, label)) in markers.iter().enumerate() {
            let start = pos + 3;
            let end = markers.get(i + 1).map_or(prompt.len(), |&(next, _)| next);
            let text = prompt[start..end]
                .trim()
                .trim_end_matches(|c: char| c == ',' || c == ';' || c == '.' || c.is_whitespace())
                .trim_end_matches(" or")
                .trim();
            pairs.push((label, text.to_string()));
        }
        Self::new(pairs)
    }

    pub fn is_empty(&self) -> bool {
        self.options.is_empty()
    }

    pub fn len(&self) -> usize {
        self.options.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = &AnswerOption> {
        self.options.iter()
    }

    pub fn contains(&self, label: char) -> bool {
        self.options.iter().any(|o| o.label == label.to_ascii_uppercase())
    }

    /// Label of the option whose full text equals `text`, ignoring case.
    pub fn label_for_text(&self, text: &str) -> Option<char> {
        let wanted = normalize_text(text);
        if wanted.is_empty() {
            return None;
        }
        self.options.iter().find(|o| !o.text.is_empty() && normalize_text(&o.text) == wanted).map(|o| o.label)
    }
}

/// Positions of `(X)` markers whose letters run `A, B, C, ...` in order.
fn option_markers(prompt: &str) -> Vec<(usize, char)> {
    let bytes = prompt.as_bytes();
    let mut markers = Vec::new();
    let mut expected = b'A';
    let mut i = 0;
    while i + 2 < bytes.len() && expected <= b'Z' {
        if bytes[i] == b'(' && bytes[i + 1] == expected && bytes[i + 2] == b')' {
            markers.push((i, expected as char));
            expected += 1;
            i += 3;
        } else {
            i += 1;
        }
    }
    markers
}

fn normalize_text(text: &str) -> String {
    text.trim().trim_end_matches(|c: char| c == '.' || c.is_whitespace()).to_lowercase()
}

/// Map an answer onto one of the option labels.
///
/// Rules in priority order: the first parenthesised letter `(X)` naming an
/// option; a leading standalone letter written `X.`, `X)` or alone; a
/// case-insensitive match of an option's full text. `None` when no rule fires.
pub fn extract_option(answer: &str, options: &OptionSet) -> Option<char> {
    parenthesized_letter(answer, options)
        .or_else(|| leading_letter(answer, options))
        .or_else(|| options.label_for_text(answer))
}

fn parenthesized_letter(answer: &str, options: &OptionSet) -> Option<char> {
    let chars: Vec<char> = answer.chars().collect();
    chars.windows(3).find_map(|w| {
        if w[0] == '(' && w[2] == ')' && w[1].is_ascii_alphabetic() {
            let label = w[1].to_ascii_uppercase();
            options.contains(label).then_some(label)
        } else {
            None
        }
    })
}

fn leading_letter(answer: &str, options: &OptionSet) -> Option<char> {
    let mut chars = answer.trim_start().chars();
    let first = chars.next()?;
    if !first.is_ascii_alphabetic() {
        return None;
    }
    let standalone = match chars.next() {
        None => true,
        Some('.' | ')') => true,
        Some(_) => false,
    };
    let label = first.to_ascii_uppercase();
    (standalone && options.contains(label)).then_some(label)
}
