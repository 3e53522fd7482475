//! Rectangular linear sum assignment.
//!
//! Shortest augmenting paths with dual potentials (Jonker-Volgenant style),
//! O(n²m) for an n×m matrix with n ≤ m. Wider-than-tall problems are solved
//! on the transpose.

/// Minimum-cost assignment. `cost` is row-major with equal-length rows and
/// finite entries. Returns, per row, the assigned column; every row is
/// assigned when rows ≤ columns, otherwise every column is.
pub fn solve(cost: &[Vec<f64>]) -> Vec<Option<usize>> {
    let rows = cost.len();
    if rows == 0 {
        return Vec::new();
    }
    let cols = cost[0].len();
    assert!(cost.iter().all(|r| r.len() == cols), "ragged cost matrix");
    assert!(
        cost.iter().flatten().all(|c| c.is_finite()),
        "cost matrix must be finite"
    );
    if cols == 0 {
        return vec![None; rows];
    }
    if rows <= cols {
        solve_tall(rows, cols, |i, j| cost[i][j])
            .into_iter()
            .map(Some)
            .collect()
    } else {
        let col_rows = solve_tall(cols, rows, |i, j| cost[j][i]);
        let mut out = vec![None; rows];
        for (c, r) in col_rows.into_iter().enumerate() {
            out[r] = Some(c);
        }
        out
    }
}

/// Maximum-weight assignment over the same shape rules as [`solve`].
pub fn solve_max(weight: &[Vec<f64>]) -> Vec<Option<usize>> {
    let negated: Vec<Vec<f64>> = weight.iter().map(|r| r.iter().map(|w| -w).collect()).collect();
    solve(&negated)
}

/// Total cost of an assignment returned by [`solve`].
pub fn total_cost(cost: &[Vec<f64>], assignment: &[Option<usize>]) -> f64 {
    assignment
        .iter()
        .enumerate()
        .filter_map(|(i, j)| j.map(|j| cost[i][j]))
        .sum()
}

fn solve_tall<F: Fn(usize, usize) -> f64>(nr: usize, nc: usize, c: F) -> Vec<usize> {
    let mut u = vec![0.0; nr];
    let mut v = vec![0.0; nc];
    let mut col4row: Vec<Option<usize>> = vec![None; nr];
    let mut row4col: Vec<Option<usize>> = vec![None; nc];
    let mut shortest = vec![f64::INFINITY; nc];
    let mut path = vec![0usize; nc];
    let mut in_rows = vec![false; nr];
    let mut in_cols = vec![false; nc];
    let mut remaining: Vec<usize> = Vec::with_capacity(nc);

    for cur in 0..nr {
        shortest.iter_mut().for_each(|s| *s = f64::INFINITY);
        in_rows.iter_mut().for_each(|s| *s = false);
        in_cols.iter_mut().for_each(|s| *s = false);
        remaining.clear();
        remaining.extend((0..nc).rev());

        let mut min_val = 0.0;
        let mut i = cur;
        let sink = loop {
            in_rows[i] = true;
            let mut lowest = f64::INFINITY;
            let mut index = 0;
            for (it, &j) in remaining.iter().enumerate() {
                let r = min_val + c(i, j) - u[i] - v[j];
                if r < shortest[j] {
                    path[j] = i;
                    shortest[j] = r;
                }
                if shortest[j] < lowest || (shortest[j] == lowest && row4col[j].is_none()) {
                    lowest = shortest[j];
                    index = it;
                }
            }
            min_val = lowest;
            let j = remaining.swap_remove(index);
            in_cols[j] = true;
            match row4col[j] {
                None => break j,
                Some(next) => i = next,
            }
        };

        u[cur] += min_val;
        for r in 0..nr {
            if in_rows[r] && r != cur {
                let j = col4row[r].expect("visited rows are assigned");
                u[r] += min_val - shortest[j];
            }
        }
        for j in 0..nc {
            if in_cols[j] {
                v[j] -= min_val - shortest[j];
            }
        }

        let mut j = sink;
        loop {
            let i = path[j];
            row4col[j] = Some(i);
            let prev = col4row[i].replace(j);
            if i == cur {
                break;
            }
            j = prev.expect("augmenting path passes through assigned rows");
        }
    }
    col4row.into_iter().map(|j| j.expect("all rows assigned")).collect()
}
