//! Minimum-cost perfect matching on a square integer cost matrix (Hungarian
//! algorithm with potentials, O(n^3)). Internal building block for the
//! cpWER speaker pairing.

/// Solves the assignment problem for a square `n x n` cost matrix given in
/// row-major order. Returns the minimum total cost and, for each row, the
/// column assigned to it.
///
/// Costs must be small enough that `n * max_cost` fits in `i64`; token
/// counts comfortably qualify.
pub(crate) fn minimize(cost: &[Vec<u64>]) -> (u64, Vec<usize>) {
    let n = cost.len();
    if n == 0 {
        return (0, Vec::new());
    }
    debug_assert!(cost.iter().all(|row| row.len() == n));
    const INF: i64 = i64::MAX / 4;

    // 1-based potentials over rows (u) and columns (v); p[j] is the row
    // matched to column j, with column 0 as the virtual staging slot.
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];

    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![INF; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = INF;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] as i64 - u[i0] - v[j];
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
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut row_to_col = vec![0usize; n];
    let mut total = 0u64;
    for j in 1..=n {
        row_to_col[p[j] - 1] = j - 1;
        total += cost[p[j] - 1][j - 1];
    }
    (total, row_to_col)
}
