//! Helpers shared by every text artifact: 9-significant-digit real formatting,
//! line-oriented parsing with physical line numbers, and atomic file writes.

use crate::error::{Error, Result};
use std::path::Path;

/// Formats a real with 9 significant digits (`5.25096525e-1`).
/// Infinities come out as `inf` / `-inf`, which `f64::from_str` accepts back.
pub fn fmt_sig9(x: f64) -> String {
    format!("{:.8e}", x)
}

/// Rounds a finite value through the 9-significant-digit text form, so that
/// in-memory parameters are bit-identical to what their file stores.
pub fn quantize_sig9(x: f64) -> f64 {
    fmt_sig9(x).parse().expect("sig9 text form is parseable")
}

/// Parses a real, accepting `inf`/`-inf` literals. NaN is rejected.
pub fn parse_real(s: &str) -> Option<f64> {
    let v: f64 = s.trim().parse().ok()?;
    if v.is_nan() {
        None
    } else {
        Some(v)
    }
}

/// Writes `content` to a temp name next to `path`, then renames into place.
pub fn write_atomic(path: &Path, content: &str) -> Result<()> {
    let tmp = path.with_extension(match path.extension() {
        Some(ext) => format!("{}.tmp", ext.to_string_lossy()),
        None => "tmp".to_string(),
    });
    std::fs::write(&tmp, content).map_err(|e| Error::io(format!("write {}", tmp.display()), e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(format!("rename to {}", path.display()), e))
}

pub fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(format!("read {}", path.display()), e))
}

/// Line cursor over a text file tracking 1-based physical line numbers.
/// Blank and `#`-comment lines are skipped.
pub struct Lines<'a> {
    path: String,
    iter: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    pub fn new(path: &Path, text: &'a str) -> Self {
        Lines {
            path: path.display().to_string(),
            iter: text.lines().enumerate(),
        }
    }

    /// Next meaningful line as (1-based line number, content).
    pub fn next(&mut self) -> Option<(usize, &'a str)> {
        for (idx, line) in self.iter.by_ref() {
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            return Some((idx + 1, trimmed));
        }
        None
    }

    pub fn expect(&mut self, what: &str) -> Result<(usize, &'a str)> {
        let path = self.path.clone();
        self.next().ok_or_else(|| Error::Parse {
            path,
            line: 0,
            msg: format!("unexpected end of file; expected {what}"),
        })
    }

    pub fn err(&self, line: usize, msg: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.clone(),
            line,
            msg: msg.into(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig9_round_trips_through_text() {
        for &x in &[0.0, 1.0, -2.5, 0.525096525, 1e-30, -3.141592653589793e17] {
            let q = quantize_sig9(x);
            assert_eq!(quantize_sig9(q), q);
            assert!((q - x).abs() <= 5e-9 * x.abs().max(1e-300));
        }
        assert_eq!(fmt_sig9(f64::INFINITY), "inf");
        assert_eq!(parse_real("inf"), Some(f64::INFINITY));
        assert_eq!(parse_real("-inf"), Some(f64::NEG_INFINITY));
        assert_eq!(parse_real("nan"), None);
    }

    #[test]
    fn lines_skip_comments_and_count_physical_lines() {
        let text = "# header\n\nalpha\n# mid\nbeta\n";
        let path = Path::new("x.txt");
        let mut lines = Lines::new(path, text);
        assert_eq!(lines.next(), Some((3, "alpha")));
        assert_eq!(lines.next(), Some((5, "beta")));
        assert_eq!(lines.next(), None);
    }
}
