//! Line-oriented text model with byte-exact rendering.

/// A text split on `\n`, remembering whether the final line was terminated.
///
/// `Lines::parse(t).render() == t` for every input, and inserting then
/// removing the same lines restores the original bytes even at end of file.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Lines {
    lines: Vec<String>,
    trailing_newline: bool,
}

impl Lines {
    pub fn parse(text: &str) -> Self {
        if text.is_empty() {
            return Lines::default();
        }
        let trailing_newline = text.ends_with('\n');
        let body = if trailing_newline { &text[..text.len() - 1] } else { text };
        Lines {
            lines: body.split('\n').map(str::to_owned).collect(),
            trailing_newline,
        }
    }

    /// Parses `text` for editing at 1-based line `cursor`.
    ///
    /// An unterminated empty last line renders the same as a terminated
    /// text, so `render` alone cannot carry it. A cursor two past the parsed
    /// line count can only come from such a text, and that line is restored.
    pub fn parse_for_cursor(text: &str, cursor: usize) -> Self {
        let mut lines = Lines::parse(text);
        if cursor == lines.len() + 2 && (lines.trailing_newline || lines.is_empty()) {
            lines.lines.push(String::new());
            lines.trailing_newline = false;
        }
        lines
    }

    pub fn from_lines<I, S>(lines: I, trailing_newline: bool) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Lines {
            lines: lines.into_iter().map(Into::into).collect(),
            trailing_newline,
        }
    }

    pub fn render(&self) -> String {
        let mut out = self.lines.join("\n");
        if self.trailing_newline && !self.lines.is_empty() {
            out.push('\n');
        }
        out
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    pub fn as_slice(&self) -> &[String] {
        &self.lines
    }

    pub fn trailing_newline(&self) -> bool {
        self.trailing_newline
    }

    /// 1-based line access.
    pub fn line(&self, number: usize) -> Option<&str> {
        number.checked_sub(1).and_then(|i| self.lines.get(i)).map(String::as_str)
    }

    /// Inserts `new` so that its first line becomes line `at` (1-based).
    ///
    /// # Panics
    /// If `at` is outside `1..=len() + 1`.
    pub fn insert<I, S>(&mut self, at: usize, new: I)
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        assert!(at >= 1 && at <= self.lines.len() + 1, "insert position {at} out of range");
        let was_empty = self.lines.is_empty();
        let tail = self.lines.split_off(at - 1);
        self.lines.extend(new.into_iter().map(Into::into));
        self.lines.extend(tail);
        if was_empty && !self.lines.is_empty() {
            self.trailing_newline = true;
        }
    }

    /// Removes lines `start..=end` (1-based, inclusive) and returns them.
    ///
    /// # Panics
    /// If the range is empty or outside the text.
    pub fn remove(&mut self, start: usize, end: usize) -> Vec<String> {
        assert!(start >= 1 && start <= end && end <= self.lines.len(), "remove {start}..={end} out of range");
        self.lines.drain(start - 1..end).collect()
    }
}

/// Number of `\n`-delimited lines; a trailing newline does not add a line.
pub fn line_count(text: &str) -> usize {
    Lines::parse(text).len()
}

/// The literal leading whitespace of a line.
pub fn indentation(line: &str) -> &str {
    let body = line.trim_start();
    &line[..line.len() - body.len()]
}

pub fn is_blank(line: &str) -> bool {
    line.trim().is_empty()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn counts_lines_without_phantom_trailing_line() {
        assert_eq!(line_count(""), 0);
        assert_eq!(line_count("a"), 1);
        assert_eq!(line_count("a\n"), 1);
        assert_eq!(line_count("a\n\n"), 2);
        assert_eq!(line_count("\n"), 1);
    }

    #[test]
    fn insert_at_end_without_trailing_newline() {
        let mut lines = Lines::parse("a\nb");
        lines.insert(3, ["c"]);
        assert_eq!(lines.render(), "a\nb\nc");
        lines.remove(3, 3);
        assert_eq!(lines.render(), "a\nb");
    }

    proptest! {
        #[test]
        fn parse_render_identity(text in "[a-c\n ]{0,40}") {
            prop_assert_eq!(Lines::parse(&text).render(), text);
        }

        #[test]
        fn insert_then_remove_restores(text in "[a-c\n]{1,40}", block in proptest::collection::vec("[x#]{0,3}", 1..4), pos in 0usize..50) {
            let mut lines = Lines::parse(&text);
            let at = pos % (lines.len() + 1) + 1;
            let n = block.len();
            lines.insert(at, block);
            lines.remove(at, at + n - 1);
            prop_assert_eq!(lines.render(), text);
        }
    }
}
