//! Verdict extraction from free-form judge output.
//!
//! The check order is load-bearing and must not be "improved": dual-marker
//! detection first, then double-bracket labels, then single-bracket
//! fallbacks. Matching is byte-literal and case-sensitive, with no trimming
//! or normalization.

use crate::core::Verdict;

/// Reason text when both double-bracket markers appear (two spaces before
/// the bracket, as emitted verbatim).
pub const REASON_BOTH_MARKERS: &str = "Not judged in the proper format.  [[A,B]]";

/// Reason text when no marker appears at all.
pub const REASON_NO_MARKER: &str = "Not judged in the proper format.";

/// Extracts the verdict label from raw judge output. Total: every input,
/// including the empty string, yields a verdict.
pub fn extract_verdict(raw: &str) -> Verdict {
    let has_a = raw.contains("[[A]]");
    let has_b = raw.contains("[[B]]");
    if has_a && has_b {
        return Verdict::Invalid(REASON_BOTH_MARKERS.to_string());
    }
    if has_a {
        return Verdict::A;
    }
    if has_b {
        return Verdict::B;
    }
    if raw.contains("[A]") {
        return Verdict::A;
    }
    if raw.contains("[B]") {
        return Verdict::B;
    }
    Verdict::Invalid(REASON_NO_MARKER.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extraction_table() {
        let cases: &[(&str, Verdict)] = &[
            ("final verdict: [[A]]", Verdict::A),
            ("final verdict: [[B]]", Verdict::B),
            (
                "[[A]] ... but also [[B]]",
                Verdict::Invalid(REASON_BOTH_MARKERS.into()),
            ),
            ("I choose [A]", Verdict::A),
            ("I choose [B]", Verdict::B),
            ("", Verdict::Invalid(REASON_NO_MARKER.into())),
            ("no brackets at all", Verdict::Invalid(REASON_NO_MARKER.into())),
            // double-bracket branches dominate single-bracket mentions
            ("[[B]] is better; note [A] was weaker", Verdict::B),
            ("[[A]] wins though [B] has merits", Verdict::A),
            // [[A]] contains [A]; the double-bracket check fires first anyway
            ("[[[A]]]", Verdict::A),
            // lowercase and spaced variants do not match
            ("[[a]]", Verdict::Invalid(REASON_NO_MARKER.into())),
            ("[ A ]", Verdict::Invalid(REASON_NO_MARKER.into())),
            // [A] inside [[B]]-free text still hits the fallback
            ("the answer [A] is stronger than the answer (B)", Verdict::A),
            (
                "[A] and [B] both present",
                // single-bracket branch for A fires before B
                Verdict::A,
            ),
        ];
        for (input, expected) in cases {
            assert_eq!(&extract_verdict(input), expected, "input: {input:?}");
        }
    }

    #[test]
    fn exact_reason_strings() {
        assert_eq!(
            extract_verdict("x").invalid_reason().unwrap(),
            "Not judged in the proper format."
        );
        assert_eq!(
            extract_verdict("[[A]][[B]]").invalid_reason().unwrap(),
            "Not judged in the proper format.  [[A,B]]"
        );
    }

    #[test]
    fn appending_marker_free_text_is_stable() {
        for base in ["[[A]]", "[[B]]", "[A]", "x [B] y", "nothing"] {
            let with_suffix = format!("{base} trailing commentary, no brackets");
            assert_eq!(extract_verdict(base), extract_verdict(&with_suffix));
        }
    }
}
