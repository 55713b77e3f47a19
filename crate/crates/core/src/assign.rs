//! Minimum-cost bipartite assignment and multiset matching of complex values.

use num_complex::Complex64;

/// Hungarian algorithm (successive shortest paths with potentials), O(n^3).
///
/// `cost` is row-major `n x n`. Returns `col_of_row`.
pub fn min_cost_assignment(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    // 1-based internal indexing; column 0 is the virtual start.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut row_of_col = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        row_of_col[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of_col[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
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
                    u[row_of_col[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of_col[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of_col[j0] = row_of_col[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut col_of_row = vec![0; n];
    for j in 1..=n {
        col_of_row[row_of_col[j] - 1] = j - 1;
    }
    col_of_row
}

/// Optimal pairing of two equally sized complex multisets.
#[derive(Debug, Clone)]
pub struct Matching {
    /// `partner[i]` is the index in `b` paired with `a[i]`.
    pub partner: Vec<usize>,
    pub distances: Vec<f64>,
}

impl Matching {
    pub fn max_distance(&self) -> f64 {
        self.distances.iter().cloned().fold(0.0, f64::max)
    }
}

/// Pairs `a` with `b`, minimizing the sum of squared distances.
///
/// Squared distances make the optimum coincide with nearest-neighbour
/// assignment whenever the latter is a bijection.
pub fn match_multisets(a: &[Complex64], b: &[Complex64]) -> Matching {
    assert_eq!(a.len(), b.len(), "multisets must have equal size");
    let cost: Vec<Vec<f64>> = a
        .iter()
        .map(|x| b.iter().map(|y| (x - y).norm_sqr()).collect())
        .collect();
    let partner = min_cost_assignment(&cost);
    let distances = partner
        .iter()
        .enumerate()
        .map(|(i, &j)| (a[i] - b[j]).norm())
        .collect();
    Matching { partner, distances }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force(cost: &[Vec<f64>]) -> f64 {
        fn rec(cost: &[Vec<f64>], row: usize, used: &mut Vec<bool>) -> f64 {
            if row == cost.len() {
                return 0.0;
            }
            let mut best = f64::INFINITY;
            for j in 0..cost.len() {
                if !used[j] {
                    used[j] = true;
                    best = best.min(cost[row][j] + rec(cost, row + 1, used));
                    used[j] = false;
                }
            }
            best
        }
        rec(cost, 0, &mut vec![false; cost.len()])
    }

    #[test]
    fn hungarian_matches_brute_force() {
        let mut seed = 12345u64;
        let mut next = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (seed >> 11) as f64 / (1u64 << 53) as f64
        };
        for n in 1..=7 {
            for _ in 0..20 {
                let cost: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| next()).collect()).collect();
                let p = min_cost_assignment(&cost);
                let total: f64 = p.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
                assert!((total - brute_force(&cost)).abs() < 1e-12);
                let mut seen = p.clone();
                seen.sort();
                assert_eq!(seen, (0..n).collect::<Vec<_>>());
            }
        }
    }

    #[test]
    fn permuted_multiset_matches_exactly() {
        let a: Vec<Complex64> = (0..6).map(|k| Complex64::from_polar(1.0, k as f64)).collect();
        let b: Vec<Complex64> = a.iter().rev().cloned().collect();
        let m = match_multisets(&a, &b);
        assert_eq!(m.max_distance(), 0.0);
        assert_eq!(m.partner, vec![5, 4, 3, 2, 1, 0]);
    }
}
