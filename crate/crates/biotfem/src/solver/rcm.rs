//! Reverse Cuthill-McKee ordering of a symmetric sparsity pattern.

use crate::sparse::CsrMatrix;

/// Computes a reverse Cuthill-McKee ordering of the pattern of `a`.
/// Returns `perm` with `perm[new] = old`. Works per connected component,
/// starting each traversal from a vertex of minimum degree.
pub fn rcm_order(a: &CsrMatrix) -> Vec<usize> {
    assert_eq!(a.nrows, a.ncols);
    let n = a.nrows;
    // symmetrize the pattern without the diagonal
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        let (cs, _) = a.row(i);
        for &j in cs {
            if i != j {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }
    let degree: Vec<usize> = adj.iter().map(|l| l.len()).collect();

    let mut order = Vec::with_capacity(n);
    let mut visited = vec![false; n];
    let mut queue = std::collections::VecDeque::new();
    loop {
        // lowest-degree unvisited vertex seeds the next component
        let Some(seed) = (0..n).filter(|&i| !visited[i]).min_by_key(|&i| (degree[i], i)) else {
            break;
        };
        visited[seed] = true;
        queue.push_back(seed);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut nbrs: Vec<usize> = adj[v].iter().copied().filter(|&u| !visited[u]).collect();
            nbrs.sort_unstable_by_key(|&u| (degree[u], u));
            for u in nbrs {
                visited[u] = true;
                queue.push_back(u);
            }
        }
    }
    order.reverse();
    order
}

/// Symmetric permutation `B = P A P^T` with `perm[new] = old`.
pub fn permute_symmetric(a: &CsrMatrix, perm: &[usize]) -> CsrMatrix {
    let n = a.nrows;
    assert_eq!(perm.len(), n);
    let mut inv = vec![0usize; n];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }
    let mut b = crate::sparse::CsrBuilder::new(n, n);
    for i in 0..n {
        let (cs, vs) = a.row(i);
        for (&j, &v) in cs.iter().zip(vs) {
            b.add(inv[i], inv[j], v);
        }
    }
    b.finish()
}

/// Maximum of `i - first_column(i)` over all rows; the skyline storage and
/// factorization cost grow with this number.
pub fn bandwidth(a: &CsrMatrix) -> usize {
    let mut bw = 0;
    for i in 0..a.nrows {
        let (cs, _) = a.row(i);
        if let Some(&j) = cs.first() {
            if j < i {
                bw = bw.max(i - j);
            }
        }
    }
    bw
}
