//! Levenshtein alignment with a variable endpoint on the causal side.
//!
//! The cascaded sequence `x` (rows) must be consumed entirely; the causal
//! sequence `y` (columns) may end anywhere. The best endpoint is the column
//! of the last DP row with minimal cost, ties going to the largest column so
//! the appended causal suffix is as short as possible.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tokens::TokenSeq;

/// One step of an alignment path.
///
/// `Insert` consumes a cascaded token only (vertical move), `Delete` consumes
/// a causal token only (horizontal move).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EditOp {
    Correct,
    Substitute,
    Insert,
    Delete,
}

impl EditOp {
    pub fn is_error(self) -> bool {
        self != EditOp::Correct
    }

    pub fn letter(self) -> char {
        match self {
            EditOp::Correct => 'C',
            EditOp::Substitute => 'S',
            EditOp::Insert => 'I',
            EditOp::Delete => 'D',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignmentOutcome {
    /// `C(m, j)` for `j` in `0..=n` of the (possibly windowed) grid.
    pub last_row_costs: Vec<usize>,
    /// Best endpoint, relative to the window.
    pub best_j: usize,
    pub best_cost: usize,
    /// Ops from cell `(0, 0)` of the windowed grid to `(m, best_j)`.
    pub path: Vec<EditOp>,
    /// Tokens skipped on both sides before alignment.
    pub window_offset: usize,
}

impl AlignmentOutcome {
    /// Number of causal tokens covered by the alignment, counted from the
    /// start of the full causal sequence.
    pub fn causal_end(&self) -> usize {
        self.window_offset + self.best_j
    }

    /// `C(m, n)`: cost of consuming both windowed sequences completely.
    pub fn full_cost(&self) -> usize {
        *self.last_row_costs.last().expect("last row always has n + 1 cells")
    }

    pub fn path_letters(&self) -> String {
        self.path.iter().map(|op| op.letter()).collect()
    }
}

/// Dense `(m + 1) x (n + 1)` Levenshtein cost table.
#[derive(Debug, Clone)]
pub struct CostGrid {
    cols: usize,
    cells: Vec<usize>,
}

impl CostGrid {
    pub fn build<T: PartialEq>(x: &[T], y: &[T]) -> Self {
        let cols = y.len() + 1;
        let mut cells = vec![0; (x.len() + 1) * cols];
        for (j, cell) in cells[..cols].iter_mut().enumerate() {
            *cell = j;
        }
        for i in 1..=x.len() {
            let row = i * cols;
            let prev = row - cols;
            cells[row] = i;
            for j in 1..cols {
                let diag = cells[prev + j - 1] + usize::from(x[i - 1] != y[j - 1]);
                let up = cells[prev + j] + 1;
                let left = cells[row + j - 1] + 1;
                cells[row + j] = diag.min(up).min(left);
            }
        }
        Self { cols, cells }
    }

    pub fn rows(&self) -> usize {
        self.cells.len() / self.cols
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> usize {
        self.cells[i * self.cols + j]
    }

    pub fn last_row(&self) -> &[usize] {
        let start = self.cells.len() - self.cols;
        &self.cells[start..]
    }

    /// Backtrace from `(i, j)` to the origin, preferring
    /// CORRECT > SUBSTITUTE > DELETE > INSERT on ties.
    fn backtrace<T: PartialEq>(&self, x: &[T], y: &[T], mut i: usize, mut j: usize) -> Vec<EditOp> {
        let mut ops = Vec::with_capacity(i + j);
        while i > 0 || j > 0 {
            let here = self.get(i, j);
            if i > 0 && j > 0 {
                let diag = self.get(i - 1, j - 1);
                if x[i - 1] == y[j - 1] && diag == here {
                    ops.push(EditOp::Correct);
                    i -= 1;
                    j -= 1;
                    continue;
                }
                if x[i - 1] != y[j - 1] && diag + 1 == here {
                    ops.push(EditOp::Substitute);
                    i -= 1;
                    j -= 1;
                    continue;
                }
            }
            if j > 0 && self.get(i, j - 1) + 1 == here {
                ops.push(EditOp::Delete);
                j -= 1;
            } else {
                debug_assert!(i > 0 && self.get(i - 1, j) + 1 == here);
                ops.push(EditOp::Insert);
                i -= 1;
            }
        }
        ops.reverse();
        ops
    }
}

/// Largest index among the minima of `row`.
fn last_argmin(row: &[usize]) -> usize {
    let mut best = 0;
    for (j, &cost) in row.iter().enumerate() {
        if cost <= row[best] {
            best = j;
        }
    }
    best
}

/// Variable-endpoint alignment of generic slices, used by both the merge
/// engine (token pieces) and the metrics (words against reference prefixes).
pub fn align_slices<T: PartialEq>(x: &[T], y: &[T]) -> AlignmentOutcome {
    let grid = CostGrid::build(x, y);
    let last_row = grid.last_row().to_vec();
    let best_j = last_argmin(&last_row);
    AlignmentOutcome {
        best_cost: last_row[best_j],
        path: grid.backtrace(x, y, x.len(), best_j),
        last_row_costs: last_row,
        best_j,
        window_offset: 0,
    }
}

/// Full quadratic alignment of cascaded `x` against causal `y`.
pub fn lev_align(x: &TokenSeq, y: &TokenSeq) -> AlignmentOutcome {
    align_slices(x, y)
}

/// Number of leading tokens skipped before a windowed alignment.
///
/// `max(min(m, n) - window, 1)` for non-empty inputs, 0 when either side is
/// empty or when no window is set.
pub fn window_offset(m: usize, n: usize, window: Option<usize>) -> usize {
    match window {
        Some(window) if m > 0 && n > 0 => m.min(n).saturating_sub(window).max(1),
        _ => 0,
    }
}

/// Aligns only the suffixes after the first `P` tokens of each side, which
/// bounds the DP to roughly `window` rows.
pub fn windowed_align(x: &TokenSeq, y: &TokenSeq, window: usize) -> Result<AlignmentOutcome> {
    if window == 0 {
        return Err(Error::InvalidArgument("window must be at least 1".into()));
    }
    Ok(align_with_offset(x, y, window_offset(x.len(), y.len(), Some(window))))
}

pub(crate) fn align_with_offset(x: &TokenSeq, y: &TokenSeq, offset: usize) -> AlignmentOutcome {
    let mut outcome = align_slices(&x[offset..], &y[offset..]);
    outcome.window_offset = offset;
    outcome
}

/// `x ⊕ y[j_star..]`.
pub fn compose(x: &TokenSeq, y: &TokenSeq, j_star: usize) -> Result<TokenSeq> {
    if j_star > y.len() {
        return Err(Error::SplitOutOfRange {
            j_star,
            len: y.len(),
        });
    }
    let mut tokens = Vec::with_capacity(x.len() + y.len() - j_star);
    tokens.extend_from_slice(x);
    tokens.extend_from_slice(&y[j_star..]);
    Ok(TokenSeq::new(tokens).expect("inputs hold no empty tokens"))
}

/// Composite for an outcome produced by [`windowed_align`] or [`lev_align`]:
/// all of `x`, then the causal tokens past the aligned region.
pub fn compose_outcome(x: &TokenSeq, y: &TokenSeq, outcome: &AlignmentOutcome) -> TokenSeq {
    compose(x, y, outcome.causal_end()).expect("alignment endpoint lies inside y")
}

/// `C(m, n) / m` of the grid behind `outcome`; 0 for an empty cascaded side.
pub fn cost_full(outcome: &AlignmentOutcome, m: usize) -> f64 {
    if m == 0 {
        return 0.0;
    }
    outcome.full_cost() as f64 / m as f64
}

/// `(C(m, n) - C(max(m - k, 0), max(n - k, 0))) / min(k, m)` on the full grid;
/// 0 for an empty cascaded side.
pub fn cost_recent_grid(x: &TokenSeq, y: &TokenSeq, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidArgument("recent window k must be at least 1".into()));
    }
    let (m, n) = (x.len(), y.len());
    if m == 0 {
        return Ok(0.0);
    }
    let grid = CostGrid::build(x, y);
    let recent = grid.get(m, n) as f64 - grid.get(m.saturating_sub(k), n.saturating_sub(k)) as f64;
    Ok(recent / k.min(m) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(s: &str) -> TokenSeq {
        TokenSeq::from_text(s)
    }

    fn rosalie() -> (TokenSeq, TokenSeq) {
        (seq("_ro sa l ie _how"), seq("_ro za ee _how _are _you"))
    }

    #[test]
    fn rosalie_grid_cells() {
        let (x, y) = rosalie();
        let grid = CostGrid::build(&x, &y);
        let expected = [
            [0, 1, 2, 3, 4, 5, 6],
            [1, 0, 1, 2, 3, 4, 5],
            [2, 1, 1, 2, 3, 4, 5],
            [3, 2, 2, 2, 3, 4, 5],
            [4, 3, 3, 3, 3, 4, 5],
            [5, 4, 4, 4, 3, 4, 5],
        ];
        for (i, row) in expected.iter().enumerate() {
            for (j, &cost) in row.iter().enumerate() {
                assert_eq!(grid.get(i, j), cost, "cell ({i}, {j})");
            }
        }
    }

    #[test]
    fn rosalie_alignment() {
        let (x, y) = rosalie();
        let out = lev_align(&x, &y);
        assert_eq!(out.last_row_costs, vec![5, 4, 4, 4, 3, 4, 5]);
        assert_eq!(out.best_j, 4);
        assert_eq!(out.best_cost, 3);
        assert_eq!(out.path_letters(), "CISSC");
        assert_eq!(out.window_offset, 0);
        assert_eq!(compose(&x, &y, 4).unwrap().join(), "_ro sa l ie _how _are _you");
    }

    #[test]
    fn identical_sequences() {
        let out = lev_align(&seq("a b"), &seq("a b"));
        assert_eq!((out.best_j, out.best_cost), (2, 0));
        assert_eq!(out.path, vec![EditOp::Correct, EditOp::Correct]);
    }

    #[test]
    fn empty_cascaded_aligns_at_zero() {
        let out = lev_align(&TokenSeq::empty(), &seq("a b"));
        assert_eq!(out.last_row_costs, vec![0, 1, 2]);
        assert_eq!((out.best_j, out.best_cost), (0, 0));
        assert!(out.path.is_empty());
    }

    #[test]
    fn empty_causal_consumes_cascaded_by_insertion() {
        let out = lev_align(&seq("a b"), &TokenSeq::empty());
        assert_eq!((out.best_j, out.best_cost), (0, 2));
        assert_eq!(out.path_letters(), "II");
        assert_eq!(compose_outcome(&seq("a b"), &TokenSeq::empty(), &out).join(), "a b");
    }

    #[test]
    fn ties_go_to_largest_endpoint() {
        // last row [1, 1, 2]: j=0 and j=1 tie, j=1 wins
        let out = lev_align(&seq("a"), &seq("b c"));
        assert_eq!(out.last_row_costs, vec![1, 1, 2]);
        assert_eq!(out.best_j, 1);
        assert_eq!(out.path_letters(), "S");
    }

    #[test]
    fn compose_examples() {
        assert_eq!(compose(&seq("a"), &seq("a"), 1).unwrap().join(), "a");
        assert_eq!(compose(&TokenSeq::empty(), &seq("a b"), 0).unwrap().join(), "a b");
        let err = compose(&seq("a"), &seq("a"), 2).unwrap_err();
        assert!(matches!(err, Error::SplitOutOfRange { j_star: 2, len: 1 }));
    }

    #[test]
    fn window_offset_formula() {
        assert_eq!(window_offset(100, 100, Some(10)), 90);
        assert_eq!(window_offset(5, 6, Some(25)), 1);
        assert_eq!(window_offset(0, 6, Some(25)), 0);
        assert_eq!(window_offset(6, 0, Some(1)), 0);
        assert_eq!(window_offset(40, 30, None), 0);
    }

    #[test]
    fn windowed_identical_long_sequences() {
        let text: Vec<String> = (0..100).map(|i| format!("w{i}")).collect();
        let x = TokenSeq::new(text).unwrap();
        let out = windowed_align(&x, &x, 10).unwrap();
        assert_eq!(out.window_offset, 90);
        assert_eq!(out.path.len(), 10);
        assert_eq!(compose_outcome(&x, &x, &out), x);
        assert!(windowed_align(&x, &x, 0).is_err());
    }

    #[test]
    fn windowed_rosalie_copies_first_token() {
        let (x, y) = rosalie();
        let out = windowed_align(&x, &y, 25).unwrap();
        assert_eq!(out.window_offset, 1);
        assert_eq!(out.causal_end(), 4);
        assert_eq!(compose_outcome(&x, &y, &out).join(), "_ro sa l ie _how _are _you");
    }

    #[test]
    fn full_cost_examples() {
        let (x, y) = rosalie();
        assert_eq!(cost_full(&lev_align(&x, &y), x.len()), 1.0);
        let a = seq("a b c");
        assert_eq!(cost_full(&lev_align(&a, &a), 3), 0.0);
        assert_eq!(cost_full(&lev_align(&seq("a b c d"), &seq("a b")), 4), 0.5);
        assert_eq!(cost_full(&lev_align(&TokenSeq::empty(), &seq("a")), 0), 0.0);
    }

    #[test]
    fn recent_grid_cost_examples() {
        let (x, y) = rosalie();
        assert_eq!(cost_recent_grid(&x, &y, 2).unwrap(), 1.0);
        let a = seq("a b c");
        for k in 1..5 {
            assert_eq!(cost_recent_grid(&a, &a, k).unwrap(), 0.0);
        }
        assert!(cost_recent_grid(&a, &a, 0).is_err());
        assert_eq!(cost_recent_grid(&TokenSeq::empty(), &a, 3).unwrap(), 0.0);
    }
}
