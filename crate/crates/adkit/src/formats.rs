//! Plain-text sample files.
//!
//! SPLL samples hold one outcome per line, either bare (`[true,false]`) or
//! with a count (`[true,false],3`). Widget samples hold one real per line.
//! Blank lines and lines starting with `#` are skipped in both.

use std::fmt::Write as _;

use adkit_core::spll::{Outcome, SampleSet};

#[derive(Debug, PartialEq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct FormatError {
    pub line: usize,
    pub message: String,
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

/// Parses an SPLL sample file.
///
/// The count, if any, follows the last comma; a line whose text after the
/// last comma is not an integer is read as a bare outcome, so list outcomes
/// need no quoting.
pub fn parse_spll_samples(text: &str) -> Result<SampleSet, FormatError> {
    let mut set = SampleSet::new();
    for (line, l) in content_lines(text) {
        let (token, count) = match l.rsplit_once(',') {
            Some((head, tail)) if tail.trim().parse::<u64>().is_ok() => {
                (head.trim(), tail.trim().parse::<u64>().expect("checked"))
            }
            _ => (l, 1),
        };
        let outcome: Outcome =
            token.parse().map_err(|e| FormatError { line, message: format!("{e}") })?;
        set.add(outcome, count);
    }
    if set.total() == 0 {
        return Err(FormatError { line: 0, message: "no samples".into() });
    }
    Ok(set)
}

/// Renders outcomes one per line.
pub fn write_outcomes<'a>(outcomes: impl IntoIterator<Item = &'a Outcome>) -> String {
    let mut out = String::new();
    for o in outcomes {
        writeln!(out, "{o}").expect("writing to a String");
    }
    out
}

/// Parses a widget sample file.
pub fn parse_widget_samples(text: &str) -> Result<Vec<f64>, FormatError> {
    let values = content_lines(text)
        .map(|(line, l)| match l.parse::<f64>() {
            Ok(x) if x.is_finite() => Ok(x),
            _ => Err(FormatError { line, message: format!("`{l}` is not a finite number") }),
        })
        .collect::<Result<Vec<_>, _>>()?;
    if values.is_empty() {
        return Err(FormatError { line: 0, message: "no samples".into() });
    }
    Ok(values)
}

/// Renders reals one per line in shortest round-trip form.
pub fn write_reals(values: &[f64]) -> String {
    let mut out = String::new();
    for v in values {
        writeln!(out, "{v}").expect("writing to a String");
    }
    out
}
