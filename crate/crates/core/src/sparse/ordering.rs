use alloc::vec;
use alloc::vec::Vec;

/// One node of an elimination tree: the unknowns it eliminates and the
/// nodes below it. Nodes are stored in postorder (children first).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeparatorNode {
    pub vars: Vec<usize>,
    pub children: Vec<usize>,
}

/// Elimination tree over `n` unknowns; every unknown belongs to exactly one node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeparatorTree {
    pub n: usize,
    pub nodes: Vec<SeparatorNode>,
}

impl SeparatorTree {
    /// One dense front holding every unknown.
    pub fn single(n: usize) -> Self {
        Self {
            n,
            nodes: vec![SeparatorNode {
                vars: (0..n).collect(),
                children: Vec::new(),
            }],
        }
    }

    /// Elimination position of each unknown.
    pub fn positions(&self) -> Vec<usize> {
        let mut pos = vec![usize::MAX; self.n];
        let mut next = 0;
        for node in &self.nodes {
            for &v in &node.vars {
                pos[v] = next;
                next += 1;
            }
        }
        pos
    }

    /// Checks that the nodes partition `0..n` and children precede parents.
    pub fn is_valid(&self) -> bool {
        let pos = self.positions();
        if pos.contains(&usize::MAX) {
            return false;
        }
        let total: usize = self.nodes.iter().map(|n| n.vars.len()).sum();
        total == self.n
            && self
                .nodes
                .iter()
                .enumerate()
                .all(|(i, node)| node.children.iter().all(|&c| c < i))
    }
}

/// Geometric nested dissection over unknowns that sit on a doubled integer
/// lattice, e.g. edge midpoints of a structured hexahedral grid.
///
/// Two unknowns may only couple if they share a cell. Any node plane (an even
/// doubled coordinate `s` along one axis) then separates the unknowns with
/// coordinate `< s` from those with `> s`; the unknowns lying in the plane form
/// the separator. Recursion stops once a region holds at most `leaf_size`
/// unknowns or can no longer be cut.
pub fn nested_dissection(points: &[[usize; 3]], leaf_size: usize) -> SeparatorTree {
    let mut nodes = Vec::new();
    let all: Vec<usize> = (0..points.len()).collect();
    if !all.is_empty() {
        dissect(points, all, leaf_size.max(1), &mut nodes);
    }
    SeparatorTree {
        n: points.len(),
        nodes,
    }
}

fn dissect(
    points: &[[usize; 3]],
    vars: Vec<usize>,
    leaf_size: usize,
    nodes: &mut Vec<SeparatorNode>,
) -> usize {
    if vars.len() > leaf_size {
        if let Some((axis, plane)) = choose_plane(points, &vars) {
            let (mut left, mut right, mut sep) = (Vec::new(), Vec::new(), Vec::new());
            for &v in &vars {
                let c = points[v][axis];
                if c < plane {
                    left.push(v);
                } else if c > plane {
                    right.push(v);
                } else {
                    sep.push(v);
                }
            }
            let mut children = Vec::with_capacity(2);
            for part in [left, right] {
                if !part.is_empty() {
                    children.push(dissect(points, part, leaf_size, nodes));
                }
            }
            // An empty separator (disconnected halves) still joins the two subtrees.
            nodes.push(SeparatorNode {
                vars: sep,
                children,
            });
            return nodes.len() - 1;
        }
    }
    nodes.push(SeparatorNode {
        vars,
        children: Vec::new(),
    });
    nodes.len() - 1
}

/// Picks the node plane closest to the median along the widest axis.
fn choose_plane(points: &[[usize; 3]], vars: &[usize]) -> Option<(usize, usize)> {
    let mut lo = [usize::MAX; 3];
    let mut hi = [0usize; 3];
    for &v in vars {
        for a in 0..3 {
            lo[a] = lo[a].min(points[v][a]);
            hi[a] = hi[a].max(points[v][a]);
        }
    }
    let mut axes = [0usize, 1, 2];
    axes.sort_by_key(|&a| core::cmp::Reverse(hi[a] - lo[a]));
    for axis in axes {
        // Interior even coordinates strictly between lo and hi.
        let first = (lo[axis] + 1).next_multiple_of(2);
        if first >= hi[axis] {
            continue;
        }
        let mut coords: Vec<usize> = vars.iter().map(|&v| points[v][axis]).collect();
        let mid = coords.len() / 2;
        let median = *coords.select_nth_unstable(mid).1;
        let mut plane = median - median % 2;
        if plane < first {
            plane = first;
        }
        let last = if hi[axis] % 2 == 0 {
            hi[axis] - 2
        } else {
            hi[axis] - 1
        };
        if plane > last {
            plane = last;
        }
        if plane >= first && plane < hi[axis] {
            return Some((axis, plane));
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::EdgeNumbering;

    #[test]
    fn dissection_partitions_all_unknowns() {
        let e = EdgeNumbering::new([6, 5, 7]);
        let pts: Vec<_> = (0..e.total_edges())
            .map(|i| e.doubled_midpoint(i))
            .collect();
        let tree = nested_dissection(&pts, 20);
        assert!(tree.is_valid());
        assert!(tree.nodes.len() > 10);
        let root = tree.nodes.last().unwrap();
        assert!(!root.vars.is_empty());
    }

    #[test]
    fn separated_regions_do_not_share_cells() {
        let dims = [4, 4, 4];
        let e = EdgeNumbering::new(dims);
        let pts: Vec<_> = (0..e.total_edges())
            .map(|i| e.doubled_midpoint(i))
            .collect();
        let tree = nested_dissection(&pts, 8);
        // All edges of a cell must lie on one root-to-leaf path.
        let mut owner = vec![0usize; e.total_edges()];
        let mut parent = vec![usize::MAX; tree.nodes.len()];
        for (i, n) in tree.nodes.iter().enumerate() {
            n.vars.iter().for_each(|&v| owner[v] = i);
            n.children.iter().for_each(|&c| parent[c] = i);
        }
        let ancestors = |mut n: usize| {
            let mut out = Vec::new();
            while n != usize::MAX {
                out.push(n);
                n = parent[n];
            }
            out
        };
        for k in 0..4 {
            for j in 0..4 {
                for i in 0..4 {
                    let edges = e.cell_edges(i, j, k);
                    for &a in &edges {
                        for &b in &edges {
                            let (na, nb) = (owner[a], owner[b]);
                            assert!(ancestors(na).contains(&nb) || ancestors(nb).contains(&na));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn single_node_tree() {
        let t = SeparatorTree::single(5);
        assert!(t.is_valid());
        assert_eq!(t.positions(), [0, 1, 2, 3, 4]);
    }
}
