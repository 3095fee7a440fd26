//! Digraph of the off-diagonal sparsity pattern: arc `i -> j` iff `i != j`
//! and `A[i][j]` is structurally non-zero.

use super::SquareMatrix;

/// Entries below this fraction of the infinity norm count as structural zeros.
const STRUCTURAL_ZERO: f64 = 1e-13;

fn adjacency(a: &SquareMatrix) -> Vec<Vec<usize>> {
    let n = a.order();
    let cutoff = STRUCTURAL_ZERO * a.norm_inf();
    (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| j != i && a[(i, j)].abs() > cutoff)
                .collect()
        })
        .collect()
}

/// Strongly connected components (Kosaraju, two reachability passes),
/// returned in topological order of the condensation.
pub fn strongly_connected_components(a: &SquareMatrix) -> Vec<Vec<usize>> {
    let n = a.order();
    let adj = adjacency(a);
    let mut radj = vec![Vec::new(); n];
    for (i, out) in adj.iter().enumerate() {
        for &j in out {
            radj[j].push(i);
        }
    }

    // First pass: finishing order on the forward graph.
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for root in 0..n {
        if visited[root] {
            continue;
        }
        visited[root] = true;
        let mut stack = vec![(root, 0usize)];
        while let Some((v, next)) = stack.last_mut() {
            if let Some(&w) = adj[*v].get(*next) {
                *next += 1;
                if !visited[w] {
                    visited[w] = true;
                    stack.push((w, 0));
                }
            } else {
                order.push(*v);
                stack.pop();
            }
        }
    }

    // Second pass on the reversed graph in reverse finishing order.
    let mut comp = vec![usize::MAX; n];
    let mut comps: Vec<Vec<usize>> = Vec::new();
    for &root in order.iter().rev() {
        if comp[root] != usize::MAX {
            continue;
        }
        let id = comps.len();
        let mut members = vec![root];
        comp[root] = id;
        let mut k = 0;
        while k < members.len() {
            let v = members[k];
            k += 1;
            for &w in &radj[v] {
                if comp[w] == usize::MAX {
                    comp[w] = id;
                    members.push(w);
                }
            }
        }
        members.sort_unstable();
        comps.push(members);
    }
    comps
}

/// Irreducible iff the digraph is strongly connected. A `1 x 1` matrix
/// admits no block split and is always irreducible.
pub fn is_irreducible(a: &SquareMatrix) -> bool {
    if a.order() == 1 {
        return true;
    }
    strongly_connected_components(a).len() == 1
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> SquareMatrix {
        SquareMatrix::from_rows(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn cycle_is_irreducible() {
        let a = m(&[&[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0], &[1.0, 0.0, 0.0]]);
        assert!(is_irreducible(&a));
        assert_eq!(strongly_connected_components(&a).len(), 1);
    }

    #[test]
    fn zero_row_breaks_connectivity() {
        let a = m(&[&[2.0, -1.0, 0.0], &[0.0, 2.0, -1.0], &[0.0, 0.0, 0.0]]);
        assert!(!is_irreducible(&a));
        assert_eq!(strongly_connected_components(&a).len(), 3);
    }

    #[test]
    fn diagonal_is_ignored() {
        assert!(!is_irreducible(&SquareMatrix::identity(2)));
        assert!(is_irreducible(&SquareMatrix::identity(1)));
        assert!(is_irreducible(&SquareMatrix::zeros(1)));
    }

    #[test]
    fn components_are_topologically_ordered() {
        // 0 <-> 1 -> 2 <-> 3
        let a = m(&[
            &[0.0, 1.0, 0.0, 0.0],
            &[1.0, 0.0, 1.0, 0.0],
            &[0.0, 0.0, 0.0, 1.0],
            &[0.0, 0.0, 1.0, 0.0],
        ]);
        let comps = strongly_connected_components(&a);
        assert_eq!(comps, vec![vec![0, 1], vec![2, 3]]);
    }
}
