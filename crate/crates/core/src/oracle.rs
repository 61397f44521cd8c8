//! Brute-force reference checks on small instances, run by `wavekit oracle`.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::power::{allocate_dc, capacity_objective, CouplingMatrix, SolverOptions};
use crate::selection::select_hungarian;

/// Best total gain over all matchings of the smaller side into the larger.
pub fn exhaustive_assignment(gains: &DMatrix<f64>) -> f64 {
    let (rows, cols) = gains.shape();
    if rows > cols {
        return exhaustive_assignment(&gains.transpose());
    }
    fn go(g: &DMatrix<f64>, row: usize, used: &mut Vec<bool>) -> f64 {
        if row == g.nrows() {
            return 0.0;
        }
        let mut best = f64::NEG_INFINITY;
        for c in 0..g.ncols() {
            if !used[c] {
                used[c] = true;
                best = best.max(g[(row, c)] + go(g, row + 1, used));
                used[c] = false;
            }
        }
        best
    }
    go(gains, 0, &mut vec![false; cols])
}

/// Largest rate over the lattice `{p = P_T · i / steps, Σ i ≤ steps}`.
pub fn grid_search_allocation(coupling: &CouplingMatrix, steps: usize) -> f64 {
    let k = coupling.num_streams();
    let budget = coupling.budget_w();
    let mut idx = vec![0usize; k];
    let mut p = vec![0.0; k];
    let mut best = f64::NEG_INFINITY;
    loop {
        let used: usize = idx.iter().sum();
        if used <= steps {
            for (pi, &i) in p.iter_mut().zip(&idx) {
                *pi = budget * i as f64 / steps as f64;
            }
            best = best.max(capacity_objective(coupling, &p));
        }
        // Odometer increment, skipping the rest of a digit once over budget.
        let mut d = 0;
        loop {
            if d == k {
                return best;
            }
            idx[d] += 1;
            if idx.iter().sum::<usize>() <= steps {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}

/// Integer gains in `0..10` so that ties are common.
pub fn random_gain_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(0..10) as f64)
}

/// Coupling with log-uniform direct gains in `[0.1, 1e3]`, cross gains in
/// `[1e-3, 10]`, unit noise and budget in `[0.1, 10]`.
pub fn random_coupling<R: Rng + ?Sized>(k: usize, rng: &mut R) -> CouplingMatrix {
    let mut draw = |lo: f64, hi: f64| 10f64.powf(rng.random_range(lo..hi));
    let a: Vec<f64> = (0..k).map(|_| draw(-1.0, 3.0)).collect();
    let b = DMatrix::from_fn(k, k, |i, j| if i == j { 0.0 } else { draw(-3.0, 1.0) });
    CouplingMatrix::new(a, b, 1.0, draw(-1.0, 1.0)).expect("valid random coupling")
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SuiteResult {
    pub name: &'static str,
    pub checked: usize,
    pub passed: usize,
    pub worst_gap: f64,
}

impl SuiteResult {
    pub fn ok(&self) -> bool {
        self.checked == self.passed
    }
}

pub fn assignment_suite(cases: usize, seed: u64) -> SuiteResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut res = SuiteResult {
        name: "assignment vs exhaustive",
        ..Default::default()
    };
    for _ in 0..cases {
        let rows = rng.random_range(1..=7);
        let cols = rng.random_range(1..=9);
        let g = random_gain_matrix(rows, cols, &mut rng);
        let got = select_hungarian(&g).objective_value;
        let want = exhaustive_assignment(&g);
        res.checked += 1;
        res.worst_gap = res.worst_gap.max((want - got).abs());
        if got == want {
            res.passed += 1;
        }
    }
    res
}

/// DC against a simplex grid: `steps` lattice points per axis, relative
/// tolerance `rel_tol`.
pub fn allocation_suite(k: usize, cases: usize, steps: usize, rel_tol: f64, seed: u64) -> Result<SuiteResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut res = SuiteResult {
        name: if k == 2 { "DC vs grid (K=2)" } else { "DC vs grid (K=3)" },
        ..Default::default()
    };
    for i in 0..cases {
        let c = random_coupling(k, &mut rng);
        let dc = allocate_dc(
            &c,
            &SolverOptions {
                seed: seed.wrapping_add(i as u64),
                ..Default::default()
            },
        )?
        .achieved_capacity_bits;
        let grid = grid_search_allocation(&c, steps);
        let gap = (grid - dc) / grid.abs().max(f64::MIN_POSITIVE);
        res.checked += 1;
        res.worst_gap = res.worst_gap.max(gap);
        if gap <= rel_tol {
            res.passed += 1;
        }
    }
    Ok(res)
}

/// The suites run by the CLI: 500 assignments, 100 two-stream and 50
/// three-stream allocations.
pub fn default_suites(seed: u64) -> Result<Vec<SuiteResult>> {
    Ok(vec![
        assignment_suite(500, seed),
        allocation_suite(2, 100, 1000, 1e-3, seed)?,
        allocation_suite(3, 50, 100, 1e-2, seed)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exhaustive_small_cases() {
        let g = DMatrix::from_row_slice(2, 2, &[10.0, 9.0, 9.0, 1.0]);
        assert_eq!(exhaustive_assignment(&g), 18.0);
        let r = DMatrix::from_row_slice(1, 3, &[1.0, 5.0, 2.0]);
        assert_eq!(exhaustive_assignment(&r), 5.0);
        assert_eq!(exhaustive_assignment(&r.transpose()), 5.0);
    }

    #[test]
    fn grid_counts_lattice_and_finds_waterfill() {
        let c = CouplingMatrix::new(vec![1.0, 1.0], DMatrix::zeros(2, 2), 1.0, 2.0).unwrap();
        let best = grid_search_allocation(&c, 100);
        assert!((best - 2.0).abs() < 1e-12);
    }

    #[test]
    fn small_suites_pass() {
        assert!(assignment_suite(40, 1).ok());
        assert!(allocation_suite(2, 5, 200, 1e-2, 1).unwrap().ok());
    }
}
