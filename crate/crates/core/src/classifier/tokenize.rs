/// Scripts written without word spaces; each character is its own token.
fn is_unspaced_script(c: char) -> bool {
    matches!(c as u32,
        0x3040..=0x309F   // Hiragana
        | 0x30A0..=0x30FF // Katakana
        | 0x31F0..=0x31FF // Katakana phonetic extensions
        | 0x3400..=0x4DBF // CJK extension A
        | 0x4E00..=0x9FFF // CJK unified ideographs
        | 0xF900..=0xFAFF // CJK compatibility ideographs
        | 0xFF66..=0xFF9F // Half-width katakana
        | 0x20000..=0x2FA1F // CJK extensions B..F, compatibility supplement
    )
}

/// Splits on whitespace and punctuation, and at script boundaries: runs of
/// alphanumerics form one token, while kana and ideographs become one token
/// per character. Keeps at most `max_tokens` tokens from the start.
pub fn tokenize(text: &str, max_tokens: usize) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut word = String::new();

    let flush = |word: &mut String, tokens: &mut Vec<String>| {
        if !word.is_empty() {
            tokens.push(std::mem::take(word));
        }
    };

    for c in text.chars() {
        if tokens.len() >= max_tokens {
            break;
        }
        if is_unspaced_script(c) {
            flush(&mut word, &mut tokens);
            if tokens.len() < max_tokens {
                tokens.push(c.to_string());
            }
        } else if c.is_alphanumeric() || c == '\'' && !word.is_empty() {
            word.push(c);
        } else {
            flush(&mut word, &mut tokens);
        }
    }
    if tokens.len() < max_tokens {
        flush(&mut word, &mut tokens);
    }
    tokens
}
