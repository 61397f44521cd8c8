//! Wavenumber selection: match receive harmonics to transmit harmonics so
//! that the summed power `Σ |H_a[r_k, c_k]|²` of the matched entries is
//! maximal, with every row and column used at most once.
//!
//! The problem is a rectangular linear assignment; its LP relaxation is
//! integral, so a Kuhn–Munkres solver returns the exact optimum. Among
//! optimal matchings the lexicographically smallest pair list is returned.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::wavenumber::WavenumberChannel;

/// Selected `(r_k, c_k)` pairs, sorted by row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StreamAssignment {
    pub pairs: Vec<(usize, usize)>,
    pub objective_value: f64,
}

impl StreamAssignment {
    fn from_pairs(mut pairs: Vec<(usize, usize)>, gains: &DMatrix<f64>) -> Self {
        pairs.sort_unstable();
        let objective_value = pairs.iter().map(|&(r, c)| gains[(r, c)]).sum();
        Self { pairs, objective_value }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Keeps the `max_streams` strongest pairs (ties toward earlier pairs).
    pub fn truncated(&self, max_streams: usize, gains: &DMatrix<f64>) -> StreamAssignment {
        if max_streams >= self.pairs.len() {
            return self.clone();
        }
        let mut order: Vec<usize> = (0..self.pairs.len()).collect();
        order.sort_by(|&a, &b| {
            let (ga, gb) = (gains[self.pairs[a]], gains[self.pairs[b]]);
            gb.total_cmp(&ga).then(a.cmp(&b))
        });
        let kept = order[..max_streams].iter().map(|&i| self.pairs[i]).collect();
        StreamAssignment::from_pairs(kept, gains)
    }

    /// Records for the JSON report.
    pub fn records(&self, gains: &DMatrix<f64>) -> Vec<PairRecord> {
        self.pairs
            .iter()
            .map(|&(r, c)| PairRecord {
                r,
                c,
                gain: gains[(r, c)],
            })
            .collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PairRecord {
    pub r: usize,
    pub c: usize,
    pub gain: f64,
}

/// Entrywise `|H_a|²`.
pub fn gain_matrix(h_a: &WavenumberChannel) -> DMatrix<f64> {
    h_a.entries().map(|z| z.norm_sqr())
}

/// Exact maximum-weight matching of size `min(rows, cols)`.
pub fn select_hungarian(gains: &DMatrix<f64>) -> StreamAssignment {
    let (rows, cols) = gains.shape();
    if rows == 0 || cols == 0 {
        return StreamAssignment::from_pairs(Vec::new(), gains);
    }
    let n = rows.max(cols);
    let top = gains.iter().copied().fold(0.0f64, f64::max);
    // Pad to square; dummy cells have gain 0. Minimize top - gain.
    let cost = DMatrix::from_fn(
        n,
        n,
        |i, j| {
            if i < rows && j < cols {
                top - gains[(i, j)]
            } else {
                top
            }
        },
    );
    let (mut row_to_col, u, v) = min_cost_perfect_matching(&cost);
    lexicographic_repair(&cost, &u, &v, &mut row_to_col, gains, rows, cols);
    let pairs = row_to_col
        .iter()
        .enumerate()
        .filter(|&(r, &c)| r < rows && c < cols)
        .map(|(r, &c)| (r, c))
        .collect();
    StreamAssignment::from_pairs(pairs, gains)
}

/// Shortest-augmenting-path Hungarian method, O(n³). Returns the row → column
/// map together with the row and column potentials.
fn min_cost_perfect_matching(cost: &DMatrix<f64>) -> (Vec<usize>, Vec<f64>, Vec<f64>) {
    let n = cost.nrows();
    // 1-based with slot 0 as the virtual root.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut col_owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        col_owner[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = col_owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1, j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[col_owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if col_owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            col_owner[j0] = col_owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_to_col = vec![0usize; n];
    for j in 1..=n {
        row_to_col[col_owner[j] - 1] = j - 1;
    }
    (row_to_col, u[1..].to_vec(), v[1..].to_vec())
}

/// Rewrites an optimal matching into the lexicographically smallest optimal
/// one.
///
/// Every optimal matching uses only edges that are tight under the optimal
/// potentials, so it suffices to search the tight subgraph: rows are fixed in
/// order, each to the smallest column reachable by an alternating cycle.
fn lexicographic_repair(
    cost: &DMatrix<f64>,
    u: &[f64],
    v: &[f64],
    row_to_col: &mut [usize],
    gains: &DMatrix<f64>,
    rows: usize,
    cols: usize,
) {
    let n = cost.nrows();
    let scale = cost.iter().fold(1.0f64, |m, c| m.max(c.abs()));
    let eps = 1e-10 * scale;
    let tight: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| (cost[(i, j)] - u[i] - v[j]).abs() <= eps).collect())
        .collect();
    let real_gain = |r: usize, c: usize| if r < rows && c < cols { gains[(r, c)] } else { 0.0 };
    let mut col_to_row = vec![0usize; n];
    for (r, &c) in row_to_col.iter().enumerate() {
        col_to_row[c] = r;
    }
    let mut fixed = vec![false; n];
    for i in 0..n {
        let current = row_to_col[i];
        for &j in tight[i].iter().take_while(|&&j| j < current) {
            let owner = col_to_row[j];
            if fixed[owner] {
                continue;
            }
            // Path: owner -> ... -> a row that can take `current`.
            let mut visited = vec![false; n];
            visited[j] = true;
            let mut path = Vec::new();
            if !alternating_path(owner, current, &tight, &col_to_row, &fixed, i, &mut visited, &mut path) {
                continue;
            }
            // Only accept the rotation when it does not lose objective.
            let before: f64 = std::iter::once((i, current))
                .chain(path.iter().map(|&(r, _)| (r, row_to_col[r])))
                .map(|(r, c)| real_gain(r, c))
                .sum();
            let after: f64 = std::iter::once((i, j))
                .chain(path.iter().copied())
                .map(|(r, c)| real_gain(r, c))
                .sum();
            if after < before {
                continue;
            }
            row_to_col[i] = j;
            col_to_row[j] = i;
            for &(r, c) in &path {
                row_to_col[r] = c;
                col_to_row[c] = r;
            }
            break;
        }
        fixed[i] = true;
    }
}

/// Depth-first search for an alternating path starting at `row` that ends by
/// assigning some row to `target`. On success `path` holds the new
/// `(row, col)` assignments along the way.
#[allow(clippy::too_many_arguments)]
fn alternating_path(
    row: usize,
    target: usize,
    tight: &[Vec<usize>],
    col_to_row: &[usize],
    fixed: &[bool],
    pivot: usize,
    visited: &mut [bool],
    path: &mut Vec<(usize, usize)>,
) -> bool {
    for &c in &tight[row] {
        if visited[c] {
            continue;
        }
        visited[c] = true;
        if c == target {
            path.push((row, c));
            return true;
        }
        let next = col_to_row[c];
        if fixed[next] || next == pivot {
            continue;
        }
        path.push((row, c));
        if alternating_path(next, target, tight, col_to_row, fixed, pivot, visited, path) {
            return true;
        }
        path.pop();
    }
    false
}

/// Repeatedly takes the largest remaining entry and strikes its row and
/// column. Fast, but not optimal.
pub fn select_greedy(gains: &DMatrix<f64>) -> StreamAssignment {
    let (rows, cols) = gains.shape();
    let mut cells: Vec<(usize, usize)> = (0..rows).flat_map(|r| (0..cols).map(move |c| (r, c))).collect();
    // Stable sort keeps lexicographic order among equal gains.
    cells.sort_by(|&a, &b| gains[b].total_cmp(&gains[a]));
    let mut row_used = vec![false; rows];
    let mut col_used = vec![false; cols];
    let k = rows.min(cols);
    let mut pairs = Vec::with_capacity(k);
    for (r, c) in cells {
        if pairs.len() == k {
            break;
        }
        if !row_used[r] && !col_used[c] {
            row_used[r] = true;
            col_used[c] = true;
            pairs.push((r, c));
        }
    }
    StreamAssignment::from_pairs(pairs, gains)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn m(rows: usize, cols: usize, v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(rows, cols, v)
    }

    /// Exhaustive search over injections of the shorter side into the longer.
    fn brute_force(g: &DMatrix<f64>) -> (f64, Vec<(usize, usize)>) {
        let (rows, cols) = g.shape();
        let transpose = rows > cols;
        let (short, long) = if transpose { (cols, rows) } else { (rows, cols) };
        let mut best = (f64::NEG_INFINITY, Vec::new());
        let mut used = vec![false; long];
        let mut pick = Vec::with_capacity(short);
        #[allow(clippy::too_many_arguments)]
        fn rec(
            depth: usize,
            short: usize,
            long: usize,
            transpose: bool,
            g: &DMatrix<f64>,
            used: &mut Vec<bool>,
            pick: &mut Vec<usize>,
            best: &mut (f64, Vec<(usize, usize)>),
        ) {
            if depth == short {
                let mut pairs: Vec<(usize, usize)> = pick
                    .iter()
                    .enumerate()
                    .map(|(s, &l)| if transpose { (l, s) } else { (s, l) })
                    .collect();
                pairs.sort_unstable();
                let val: f64 = pairs.iter().map(|&p| g[p]).sum();
                if val > best.0 || (val == best.0 && pairs < best.1) {
                    *best = (val, pairs);
                }
                return;
            }
            for l in 0..long {
                if !used[l] {
                    used[l] = true;
                    pick.push(l);
                    rec(depth + 1, short, long, transpose, g, used, pick, best);
                    pick.pop();
                    used[l] = false;
                }
            }
        }
        rec(0, short, long, transpose, g, &mut used, &mut pick, &mut best);
        best
    }

    #[test]
    fn diagonal_dominance() {
        let a = select_hungarian(&m(2, 2, &[5.0, 1.0, 1.0, 5.0]));
        assert_eq!(a.pairs, vec![(0, 0), (1, 1)]);
        assert_eq!(a.objective_value, 10.0);
    }

    #[test]
    fn anti_diagonal_dominance() {
        let a = select_hungarian(&m(2, 2, &[1.0, 5.0, 5.0, 1.0]));
        assert_eq!(a.pairs, vec![(0, 1), (1, 0)]);
        assert_eq!(a.objective_value, 10.0);
    }

    #[test]
    fn greedy_is_suboptimal_on_crafted_case() {
        let g = m(2, 2, &[10.0, 9.0, 9.0, 1.0]);
        let greedy = select_greedy(&g);
        assert_eq!(greedy.pairs, vec![(0, 0), (1, 1)]);
        assert_eq!(greedy.objective_value, 11.0);
        let opt = select_hungarian(&g);
        assert_eq!(opt.pairs, vec![(0, 1), (1, 0)]);
        assert_eq!(opt.objective_value, 18.0);
    }

    #[test]
    fn greedy_matches_optimum_on_diagonal() {
        let g = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, 1.0, 2.0]));
        assert_eq!(select_greedy(&g), select_hungarian(&g));
    }

    #[test]
    fn gain_matrix_squares_magnitudes() {
        use crate::geometry::{ArrayGeometry, SystemParams};
        use crate::wavenumber::{build_dictionary, enumerate_support};
        use num_complex::Complex64;
        let p = SystemParams::new(30e9, 1.0, 1.0).unwrap();
        let g = ArrayGeometry::new(2, 1, p.half_wavelength()).unwrap();
        let d = build_dictionary(&enumerate_support(&g, &p, 1.0).unwrap());
        let ha = WavenumberChannel::new(
            DMatrix::from_row_slice(
                2,
                2,
                &[
                    Complex64::new(3.0, 4.0),
                    Complex64::new(0.0, 0.0),
                    Complex64::new(0.0, 0.0),
                    Complex64::new(1.0, 0.0),
                ],
            ),
            &d,
            &d,
        )
        .unwrap();
        assert_eq!(gain_matrix(&ha), m(2, 2, &[25.0, 0.0, 0.0, 1.0]));
    }

    #[test]
    fn rectangular_matches_brute_force() {
        let g = m(2, 4, &[3.0, 7.0, 1.0, 7.0, 2.0, 8.0, 8.0, 0.0]);
        let a = select_hungarian(&g);
        let (val, pairs) = brute_force(&g);
        assert_eq!(a.objective_value, val);
        assert_eq!(a.pairs, pairs);
        assert_eq!(a.len(), 2);
    }

    #[test]
    fn ties_resolve_lexicographically() {
        let g = DMatrix::from_element(3, 3, 1.0);
        assert_eq!(select_hungarian(&g).pairs, vec![(0, 0), (1, 1), (2, 2)]);
        let g = DMatrix::zeros(2, 4);
        assert_eq!(select_hungarian(&g).pairs, vec![(0, 0), (1, 1)]);
        let g = DMatrix::zeros(4, 2);
        assert_eq!(select_hungarian(&g).pairs, vec![(0, 0), (1, 1)]);
    }

    #[test]
    fn truncation_keeps_strongest() {
        let g = m(3, 3, &[1.0, 0.0, 0.0, 0.0, 5.0, 0.0, 0.0, 0.0, 3.0]);
        let a = select_hungarian(&g).truncated(2, &g);
        assert_eq!(a.pairs, vec![(1, 1), (2, 2)]);
        assert_eq!(a.objective_value, 8.0);
    }

    #[test]
    fn empty_input() {
        let a = select_hungarian(&DMatrix::zeros(0, 3));
        assert!(a.is_empty());
        assert_eq!(a.objective_value, 0.0);
    }

    proptest! {
        #[test]
        fn integer_gains_match_exhaustive_search(
            rows in 1usize..6,
            cols in 1usize..6,
            vals in prop::collection::vec(0u8..6, 36),
        ) {
            let g = DMatrix::from_fn(rows, cols, |i, j| vals[i * 6 + j] as f64);
            let a = select_hungarian(&g);
            let (val, pairs) = brute_force(&g);
            prop_assert_eq!(a.objective_value, val);
            prop_assert_eq!(&a.pairs, &pairs);
            prop_assert!(select_greedy(&g).objective_value <= a.objective_value);
        }

        #[test]
        fn selection_is_a_partial_permutation(
            rows in 1usize..9,
            cols in 1usize..9,
            vals in prop::collection::vec(0.0f64..1.0, 64),
        ) {
            let g = DMatrix::from_fn(rows, cols, |i, j| vals[i * 8 + j]);
            let a = select_hungarian(&g);
            prop_assert_eq!(a.len(), rows.min(cols));
            let mut r: Vec<_> = a.pairs.iter().map(|p| p.0).collect();
            let mut c: Vec<_> = a.pairs.iter().map(|p| p.1).collect();
            r.dedup();
            c.sort_unstable();
            c.dedup();
            prop_assert_eq!(r.len(), a.len());
            prop_assert_eq!(c.len(), a.len());
            let recomputed: f64 = a.pairs.iter().map(|&p| g[p]).sum();
            prop_assert!((recomputed - a.objective_value).abs() <= 1e-9 * recomputed.max(1.0));
        }

        #[test]
        fn scaling_preserves_selection(
            vals in prop::collection::vec(0.0f64..1.0, 25),
            scale in 0.01f64..100.0,
        ) {
            let g = DMatrix::from_row_slice(5, 5, &vals);
            let a = select_hungarian(&g);
            let b = select_hungarian(&(g * scale));
            prop_assert_eq!(&a.pairs, &b.pairs);
            prop_assert!((b.objective_value - scale * a.objective_value).abs() <= 1e-9 * b.objective_value.max(1e-300));
        }
    }
}
