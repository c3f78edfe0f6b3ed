//! Rule-based verb lemmatizer: an irregular table, then suffix rules.

const IRREGULAR: &[(&str, &str)] = &[
    ("am", "be"),
    ("are", "be"),
    ("is", "be"),
    ("was", "be"),
    ("were", "be"),
    ("been", "be"),
    ("being", "be"),
    ("has", "have"),
    ("had", "have"),
    ("having", "have"),
    ("does", "do"),
    ("did", "do"),
    ("done", "do"),
    ("doing", "do"),
    ("goes", "go"),
    ("went", "go"),
    ("gone", "go"),
    ("going", "go"),
    ("met", "meet"),
    ("fed", "feed"),
    ("held", "hold"),
    ("led", "lead"),
    ("told", "tell"),
    ("taught", "teach"),
    ("sought", "seek"),
    ("brought", "bring"),
    ("bought", "buy"),
    ("thought", "think"),
    ("caught", "catch"),
    ("fought", "fight"),
    ("drove", "drive"),
    ("driven", "drive"),
    ("forbade", "forbid"),
    ("forbidden", "forbid"),
    ("gave", "give"),
    ("given", "give"),
    ("took", "take"),
    ("taken", "take"),
    ("made", "make"),
    ("said", "say"),
    ("says", "say"),
    ("saw", "see"),
    ("seen", "see"),
    ("came", "come"),
    ("left", "leave"),
    ("kept", "keep"),
    ("felt", "feel"),
    ("got", "get"),
    ("gotten", "get"),
    ("sent", "send"),
    ("spent", "spend"),
    ("spoke", "speak"),
    ("spoken", "speak"),
    ("wrote", "write"),
    ("written", "write"),
    ("ran", "run"),
    ("sat", "sit"),
    ("stood", "stand"),
    ("understood", "understand"),
    ("knew", "know"),
    ("known", "know"),
    ("heard", "hear"),
    ("paid", "pay"),
    ("laid", "lay"),
    ("won", "win"),
    ("began", "begin"),
    ("begun", "begin"),
    ("chose", "choose"),
    ("chosen", "choose"),
    ("forgave", "forgive"),
    ("forgiven", "forgive"),
    ("found", "find"),
    ("lost", "lose"),
    ("shook", "shake"),
    ("agreed", "agree"),
    ("disagreed", "disagree"),
    ("freed", "free"),
    ("guaranteed", "guarantee"),
    ("decreed", "decree"),
    ("refereed", "referee"),
];

const KEEP_DOUBLE: &[char] = &['l', 's', 'z', 'f'];

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u')
}

fn has_vowel(s: &str) -> bool {
    s.chars().any(|c| is_vowel(c) || c == 'y')
}

/// Undo consonant doubling ("stopp" -> "stop") except for doubles that
/// usually belong to the base ("call", "pass").
pub(crate) fn undouble(stem: &str) -> Option<&str> {
    let mut rev = stem.chars().rev();
    let (a, b) = (rev.next()?, rev.next()?);
    (a == b && !is_vowel(a) && !KEEP_DOUBLE.contains(&a) && stem.len() > 3).then(|| &stem[..stem.len() - 1])
}

/// Whether a bare stem left by "-ed"/"-ing" removal most likely lost an "e".
fn wants_e(stem: &str) -> bool {
    let c: Vec<char> = stem.chars().collect();
    let n = c.len();
    if n < 2 {
        return false;
    }
    let last = c[n - 1];
    let prev = c[n - 2];
    match last {
        'v' | 'u' => true,
        'z' => prev != 'z',
        'c' => prev != 'c',
        'g' => prev != 'n' && prev != 'g',
        's' => is_vowel(prev),
        't' => n >= 3 && ((prev == 'a' && !matches!(c[n - 3], 'e' | 'o')) || (prev == 'u' && !is_vowel(c[n - 3]))),
        'r' => matches!(prev, 'i' | 'a' | 'o' | 'u') && n >= 3 && !is_vowel(c[n - 3]),
        'k' | 'd' | 'b' | 'p' => is_vowel(prev) && n >= 3 && !is_vowel(c[n - 3]) && prev != 'e' && last != 'p',
        'l' => !is_vowel(prev) && prev != 'l' && prev != 'r',
        _ => false,
    }
}

fn strip_verbal_suffix(stem: &str) -> String {
    if let Some(s) = undouble(stem) {
        return s.to_string();
    }
    if wants_e(stem) {
        return format!("{stem}e");
    }
    stem.to_string()
}

fn step(word: &str) -> String {
    if let Some(&(_, lemma)) = IRREGULAR.iter().find(|(form, _)| *form == word) {
        return lemma.to_string();
    }
    if word.len() <= 3 || !word.chars().all(|c| c.is_ascii_lowercase()) {
        return word.to_string();
    }
    if let Some(stem) = word.strip_suffix("ies") {
        if stem.len() >= 2 {
            return format!("{stem}y");
        }
    }
    if let Some(stem) = word.strip_suffix("ied") {
        if stem.len() >= 2 {
            return format!("{stem}y");
        }
    }
    if word.ends_with("eed") {
        return word.to_string();
    }
    if let Some(stem) = word.strip_suffix("ed") {
        if stem.len() >= 2 && has_vowel(stem) {
            return strip_verbal_suffix(stem);
        }
        return word.to_string();
    }
    if let Some(stem) = word.strip_suffix("ing") {
        if stem.len() >= 2 && has_vowel(stem) {
            return strip_verbal_suffix(stem);
        }
        return word.to_string();
    }
    for suffix in ["sses", "shes", "ches", "xes", "zzes", "oes"] {
        if word.ends_with(suffix) {
            return word[..word.len() - 2].to_string();
        }
    }
    if word.ends_with('s') && !word.ends_with("ss") && !word.ends_with("us") && !word.ends_with("is") {
        return word[..word.len() - 1].to_string();
    }
    word.to_string()
}

/// Lemma of a lowercase verb form. Rules are applied until nothing changes,
/// so the result is a fixed point and the function is idempotent.
pub fn lemmatize_verb(token: &str) -> String {
    let mut current = token.to_lowercase();
    for _ in 0..64 {
        let next = step(&current);
        if next == current {
            break;
        }
        current = next;
    }
    current
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn regular_and_irregular_forms() {
        for (form, lemma) in [
            ("demanded", "demand"),
            ("met", "meet"),
            ("refused", "refuse"),
            ("praised", "praise"),
            ("communicated", "communicate"),
            ("stopped", "stop"),
            ("called", "call"),
            ("carries", "carry"),
            ("queried", "query"),
            ("reaches", "reach"),
            ("demands", "demand"),
            ("was", "be"),
            ("agreed", "agree"),
            ("needed", "need"),
            ("hugging", "hug"),
            ("encouraging", "encourage"),
            ("hired", "hire"),
            ("discuss", "discuss"),
        ] {
            assert_eq!(lemmatize_verb(form), lemma, "{form}");
        }
    }

    #[test]
    fn lemmas_are_fixed_points() {
        for w in ["demand", "meet", "need", "proceed", "focus", "this", "be", "go"] {
            assert_eq!(lemmatize_verb(w), w);
        }
    }

    proptest! {
        #[test]
        fn idempotent(word in "[a-z]{1,12}") {
            let once = lemmatize_verb(&word);
            prop_assert_eq!(lemmatize_verb(&once), once);
        }

        #[test]
        fn idempotent_on_suffixed(stem in "[a-z]{2,8}", suffix in prop::sample::select(vec!["ed", "ing", "s", "es", "ies", "ied"])) {
            let once = lemmatize_verb(&format!("{stem}{suffix}"));
            prop_assert_eq!(lemmatize_verb(&once), once);
        }
    }
}
