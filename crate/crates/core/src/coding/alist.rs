//! Sparse binary parity-check matrices in alist format.

use std::fmt::Write as _;
use std::path::Path;

use crate::{Error, Result};

/// Sparse `rows x cols` binary matrix stored by both adjacency lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParityCheckMatrix {
    rows: usize,
    cols: usize,
    col_adj: Vec<Vec<usize>>,
    row_adj: Vec<Vec<usize>>,
}

impl ParityCheckMatrix {
    /// Builds from the rows' column lists (0-based).
    pub fn from_rows(cols: usize, row_adj: Vec<Vec<usize>>) -> Result<Self> {
        let rows = row_adj.len();
        let mut col_adj = vec![Vec::new(); cols];
        for (r, list) in row_adj.iter().enumerate() {
            for &c in list {
                if c >= cols {
                    return Err(Error::invalid(format!("row {r} references column {c} >= {cols}")));
                }
                if col_adj[c].contains(&r) {
                    return Err(Error::invalid(format!("duplicate entry ({r}, {c})")));
                }
                col_adj[c].push(r);
            }
        }
        let mut row_adj = row_adj;
        for list in row_adj.iter_mut() {
            list.sort_unstable();
        }
        Ok(Self {
            rows,
            cols,
            col_adj,
            row_adj,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[usize] {
        &self.row_adj[r]
    }

    pub fn col(&self, c: usize) -> &[usize] {
        &self.col_adj[c]
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.row_adj[r].binary_search(&c).is_ok()
    }

    pub fn num_edges(&self) -> usize {
        self.row_adj.iter().map(Vec::len).sum()
    }

    /// `H c = 0` over GF(2).
    pub fn is_codeword(&self, bits: &[u8]) -> bool {
        bits.len() == self.cols && self.row_adj.iter().all(|row| row.iter().fold(0u8, |a, &c| a ^ bits[c]) == 0)
    }

    /// Number of unsatisfied checks.
    pub fn syndrome_weight(&self, bits: &[u8]) -> usize {
        self.row_adj
            .iter()
            .filter(|row| row.iter().fold(0u8, |a, &c| a ^ (bits[c] & 1)) != 0)
            .count()
    }

    pub fn parse_alist(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let mut next_line = |what: &str| -> Result<(usize, Vec<usize>)> {
            let (no, line) = lines.next().ok_or_else(|| Error::Parse {
                line: text.lines().count() + 1,
                msg: format!("unexpected end of input, expected {what}"),
            })?;
            let nums = line
                .split_whitespace()
                .map(|t| {
                    t.parse::<usize>().map_err(|_| Error::Parse {
                        line: no,
                        msg: format!("`{t}` is not a non-negative integer"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((no, nums))
        };
        let expect_len = |no: usize, v: &[usize], n: usize, what: &str| -> Result<()> {
            if v.len() != n {
                return Err(Error::Parse {
                    line: no,
                    msg: format!("{what}: expected {n} values, found {}", v.len()),
                });
            }
            Ok(())
        };

        let (no, dims) = next_line("dimensions")?;
        expect_len(no, &dims, 2, "dimensions")?;
        let (cols, rows) = (dims[0], dims[1]);
        if cols == 0 || rows == 0 {
            return Err(Error::Parse {
                line: no,
                msg: "empty matrix".into(),
            });
        }
        let (no, maxes) = next_line("maximum degrees")?;
        expect_len(no, &maxes, 2, "maximum degrees")?;
        let (col_deg_line, col_deg) = next_line("column degrees")?;
        expect_len(col_deg_line, &col_deg, cols, "column degrees")?;
        let (row_deg_line, row_deg) = next_line("row degrees")?;
        expect_len(row_deg_line, &row_deg, rows, "row degrees")?;
        if col_deg.iter().sum::<usize>() != row_deg.iter().sum::<usize>() {
            return Err(Error::Parse {
                line: row_deg_line,
                msg: format!(
                    "column degrees sum to {} but row degrees sum to {}",
                    col_deg.iter().sum::<usize>(),
                    row_deg.iter().sum::<usize>()
                ),
            });
        }
        if col_deg.iter().any(|&d| d > maxes[0]) || row_deg.iter().any(|&d| d > maxes[1]) {
            return Err(Error::Parse {
                line: no,
                msg: "a degree exceeds the declared maximum".into(),
            });
        }

        let mut read_lists = |count: usize, degs: &[usize], bound: usize, what: &str| -> Result<Vec<(usize, Vec<usize>)>> {
            let mut out = Vec::with_capacity(count);
            for (i, &deg) in degs.iter().enumerate().take(count) {
                let (no, vals) = next_line(what)?;
                let entries: Vec<usize> = vals.iter().copied().filter(|&v| v != 0).collect();
                if entries.len() != deg {
                    return Err(Error::Parse {
                        line: no,
                        msg: format!("{what} {}: degree {deg} but {} entries", i + 1, entries.len()),
                    });
                }
                if let Some(&bad) = entries.iter().find(|&&v| v > bound) {
                    return Err(Error::Parse {
                        line: no,
                        msg: format!("{what} {}: index {bad} out of range 1..={bound}", i + 1),
                    });
                }
                out.push((no, entries.into_iter().map(|v| v - 1).collect()));
            }
            Ok(out)
        };
        let col_lists = read_lists(cols, &col_deg, rows, "column")?;
        let row_lists = read_lists(rows, &row_deg, cols, "row")?;

        let h = Self::from_rows(cols, row_lists.iter().map(|(_, l)| l.clone()).collect()).map_err(|e| Error::Parse {
            line: row_deg_line,
            msg: e.to_string(),
        })?;
        for (c, (no, list)) in col_lists.iter().enumerate() {
            let mut a = list.clone();
            a.sort_unstable();
            let mut b = h.col_adj[c].clone();
            b.sort_unstable();
            if a != b {
                return Err(Error::Parse {
                    line: *no,
                    msg: format!("column {} disagrees with the row lists", c + 1),
                });
            }
        }
        Ok(h)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse_alist(&std::fs::read_to_string(path)?)
    }

    pub fn to_alist(&self) -> String {
        let max_col = self.col_adj.iter().map(Vec::len).max().unwrap_or(0);
        let max_row = self.row_adj.iter().map(Vec::len).max().unwrap_or(0);
        let join = |v: &mut dyn Iterator<Item = usize>| v.map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
        let mut s = String::new();
        let _ = writeln!(s, "{} {}", self.cols, self.rows);
        let _ = writeln!(s, "{max_col} {max_row}");
        let _ = writeln!(s, "{}", join(&mut self.col_adj.iter().map(Vec::len)));
        let _ = writeln!(s, "{}", join(&mut self.row_adj.iter().map(Vec::len)));
        for (lists, width) in [(&self.col_adj, max_col), (&self.row_adj, max_row)] {
            for list in lists {
                let mut sorted = list.clone();
                sorted.sort_unstable();
                let padded = sorted.iter().map(|v| v + 1).chain(std::iter::repeat(0)).take(width);
                let _ = writeln!(s, "{}", join(&mut padded.into_iter()));
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOY: &str = include_str!("../../codes/toy_6_3.alist");

    #[test]
    fn toy_pattern() {
        let h = ParityCheckMatrix::parse_alist(TOY).unwrap();
        assert_eq!((h.rows(), h.cols()), (3, 6));
        assert_eq!(h.row(0), &[0, 1, 3]);
        assert_eq!(h.row(1), &[1, 2, 4]);
        assert_eq!(h.row(2), &[0, 2, 5]);
        assert!(h.get(2, 5) && !h.get(2, 4));
        assert_eq!(h.num_edges(), 9);
    }

    #[test]
    fn round_trip() {
        let h = ParityCheckMatrix::parse_alist(TOY).unwrap();
        assert_eq!(ParityCheckMatrix::parse_alist(&h.to_alist()).unwrap(), h);
        let big = ParityCheckMatrix::parse_alist(include_str!("../../codes/ira_672_r12.alist")).unwrap();
        assert_eq!((big.rows(), big.cols()), (336, 672));
        assert_eq!(ParityCheckMatrix::parse_alist(&big.to_alist()).unwrap(), big);
    }

    #[test]
    fn validation_errors_carry_line_numbers() {
        let bad_sum = TOY.replacen("2 2 2 1 1 1", "2 2 2 1 1 2", 1);
        assert!(matches!(ParityCheckMatrix::parse_alist(&bad_sum), Err(Error::Parse { line: 4, .. })));
        let bad_token = TOY.replacen("6 3", "6 x", 1);
        assert!(matches!(ParityCheckMatrix::parse_alist(&bad_token), Err(Error::Parse { line: 1, .. })));
        let truncated: String = TOY.lines().take(7).collect::<Vec<_>>().join("\n");
        assert!(matches!(ParityCheckMatrix::parse_alist(&truncated), Err(Error::Parse { .. })));
        // column list contradicting the rows
        let lines: Vec<&str> = TOY.lines().collect();
        let mut swapped = lines.clone();
        swapped[4] = "1 2";
        let err = ParityCheckMatrix::parse_alist(&swapped.join("\n")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 5, .. }), "{err}");
    }

    #[test]
    fn codeword_check() {
        let h = ParityCheckMatrix::parse_alist(TOY).unwrap();
        assert!(h.is_codeword(&[0; 6]));
        assert!(h.is_codeword(&[1, 0, 0, 1, 0, 1]));
        assert!(!h.is_codeword(&[1, 0, 0, 0, 0, 0]));
        assert_eq!(h.syndrome_weight(&[1, 0, 0, 0, 0, 0]), 2);
    }
}
