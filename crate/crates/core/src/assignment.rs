//! Linear assignment by the O(n³) Hungarian method with potentials.

use ndarray::Array2;

use crate::scalar::Scalar;

/// Minimum-cost perfect matching on a square cost matrix. Returns the column
/// assigned to each row.
pub fn linear_assignment<T: Scalar>(cost: &Array2<T>) -> Vec<usize> {
    let n = cost.nrows();
    assert_eq!(n, cost.ncols(), "cost matrix must be square");
    let inf = T::infinity();
    let mut u = vec![T::zero(); n + 1];
    let mut v = vec![T::zero(); n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[[i0 - 1, j - 1]] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
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
    let mut col = vec![0; n];
    for j in 1..=n {
        col[p[j] - 1] = j - 1;
    }
    col
}
