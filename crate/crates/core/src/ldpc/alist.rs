//! MacKay alist text format: dimensions, maximum weights, per-column and
//! per-row weights, then 1-based index lists (zero padded to the maximum).

use super::ParityCheckMatrix;
use crate::error::{Error, Result};

pub(super) fn write(h: &ParityCheckMatrix) -> String {
    let max_col = h.cols().iter().map(Vec::len).max().unwrap_or(0);
    let max_row = h.rows().iter().map(Vec::len).max().unwrap_or(0);
    let join = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(" ");
    let padded = |list: &[usize], width: usize| {
        let mut v: Vec<usize> = list.iter().map(|i| i + 1).collect();
        v.resize(width, 0);
        join(&v)
    };

    let mut out = format!("{} {}\n{} {}\n", h.n(), h.m(), max_col, max_row);
    out += &join(&h.cols().iter().map(Vec::len).collect::<Vec<_>>());
    out.push('\n');
    out += &join(&h.rows().iter().map(Vec::len).collect::<Vec<_>>());
    out.push('\n');
    for col in h.cols() {
        out += &padded(col, max_col);
        out.push('\n');
    }
    for row in h.rows() {
        out += &padded(row, max_row);
        out.push('\n');
    }
    out
}

struct Tokens<'a> {
    lines: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
}

impl Tokens<'_> {
    /// Next non-empty line as integers.
    fn line(&mut self) -> Result<(usize, Vec<usize>)> {
        for (no, line) in self.lines.by_ref() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let nums = line
                .split_whitespace()
                .map(|t| {
                    t.parse::<usize>().map_err(|_| Error::Parse {
                        line: no + 1,
                        reason: format!("not an integer: {t:?}"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            return Ok((no + 1, nums));
        }
        Err(Error::Parse {
            line: 0,
            reason: "unexpected end of input".into(),
        })
    }

    fn expect(&mut self, count: usize) -> Result<(usize, Vec<usize>)> {
        let (no, v) = self.line()?;
        if v.len() != count {
            return Err(Error::Parse {
                line: no,
                reason: format!("expected {count} values, found {}", v.len()),
            });
        }
        Ok((no, v))
    }
}

pub(super) fn read(text: &str) -> Result<ParityCheckMatrix> {
    let mut t = Tokens {
        lines: text.lines().enumerate().peekable(),
    };
    let (_, dims) = t.expect(2)?;
    let (n, m) = (dims[0], dims[1]);
    let (_, maxes) = t.expect(2)?;
    let (_, col_w) = t.expect(n)?;
    let (_, row_w) = t.expect(m)?;

    let mut cols = Vec::with_capacity(n);
    for &w in &col_w {
        let (no, v) = t.expect(maxes[0])?;
        cols.push((no, v.into_iter().take(w).collect::<Vec<_>>()));
    }
    let mut rows = Vec::with_capacity(m);
    for &w in &row_w {
        let (no, v) = t.expect(maxes[1])?;
        let mut row = Vec::with_capacity(w);
        for idx in v.into_iter().take(w) {
            if idx == 0 || idx > n {
                return Err(Error::Parse {
                    line: no,
                    reason: format!("column index {idx} out of range 1..={n}"),
                });
            }
            row.push(idx - 1);
        }
        rows.push(row);
    }

    let h = ParityCheckMatrix::from_rows(n, rows)?;
    // The column section must describe the same matrix.
    for (c, (no, list)) in cols.into_iter().enumerate() {
        let mut list: Vec<usize> = list.into_iter().map(|i| i.wrapping_sub(1)).collect();
        list.sort_unstable();
        if list != h.cols()[c] {
            return Err(Error::Parse {
                line: no,
                reason: format!("column {} disagrees with the row lists", c + 1),
            });
        }
    }
    Ok(h)
}
