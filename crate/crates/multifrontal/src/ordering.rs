//! Elimination trees and geometric nested dissection.
//!
//! Unknowns are grouped into blocks (all unknowns attached to one cell or one
//! face, say). Each block carries a representative point. Dissection works on
//! the block graph and recursively cuts along coordinate planes, keeping the
//! blocks that sit on the plane (plus any block that would otherwise couple the
//! two halves directly) as the separator.

use crate::FactorError;

/// A node of the elimination tree: the variables eliminated together in one
/// dense front.
#[derive(Debug, Clone)]
pub struct TreeNode {
    pub vars: Vec<usize>,
    pub parent: Option<usize>,
}

/// Elimination tree with nodes stored in postorder (every child precedes its
/// parent, and each subtree occupies a contiguous index range).
#[derive(Debug, Clone)]
pub struct EliminationTree {
    nodes: Vec<TreeNode>,
    first_descendant: Vec<usize>,
}

impl EliminationTree {
    /// Validates postorder and contiguity of subtrees.
    pub fn new(nodes: Vec<TreeNode>) -> Result<Self, FactorError> {
        let n = nodes.len();
        let mut first_descendant: Vec<usize> = (0..n).collect();
        for (i, node) in nodes.iter().enumerate() {
            if let Some(p) = node.parent {
                if p <= i || p >= n {
                    return Err(FactorError::InvalidTree(format!(
                        "node {i} has parent {p}, which is not later in postorder"
                    )));
                }
                first_descendant[p] = first_descendant[p].min(first_descendant[i]);
            }
        }
        // contiguity: every node in [first_descendant[p], p) must descend from p
        for (i, node) in nodes.iter().enumerate() {
            if let Some(p) = node.parent {
                if first_descendant[i] < first_descendant[p] {
                    return Err(FactorError::InvalidTree(format!(
                        "subtree of node {p} is not contiguous"
                    )));
                }
            }
        }
        let tree = Self {
            nodes,
            first_descendant,
        };
        for i in 0..n {
            for j in tree.first_descendant[i]..i {
                if !tree.is_ancestor_slow(i, j) {
                    return Err(FactorError::InvalidTree(format!(
                        "node {j} lies in the index range of subtree {i} without descending from it"
                    )));
                }
            }
        }
        Ok(tree)
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn is_ancestor_slow(&self, a: usize, mut b: usize) -> bool {
        while let Some(p) = self.nodes[b].parent {
            if p == a {
                return true;
            }
            b = p;
        }
        false
    }

    /// True when `a` is a strict ancestor of `b`.
    pub fn is_ancestor(&self, a: usize, b: usize) -> bool {
        self.first_descendant[a] <= b && b < a
    }

    /// Maps a block-level tree onto variables: `block_vars[b]` lists the
    /// unknowns carried by block `b`. Blocks absent from every node are
    /// ignored; blocks listed twice are an error.
    pub fn from_blocks(
        block_tree: &EliminationTree,
        block_vars: &[Vec<usize>],
    ) -> Result<Self, FactorError> {
        let mut seen = vec![false; block_vars.len()];
        let nodes = block_tree
            .nodes
            .iter()
            .map(|node| {
                let mut vars = Vec::new();
                for &b in &node.vars {
                    if std::mem::replace(&mut seen[b], true) {
                        return Err(FactorError::InvalidTree(format!("block {b} appears twice")));
                    }
                    vars.extend_from_slice(&block_vars[b]);
                }
                Ok(TreeNode {
                    vars,
                    parent: node.parent,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            nodes,
            first_descendant: block_tree.first_descendant.clone(),
        })
    }
}

/// Parameters for [`nested_dissection`].
#[derive(Debug, Clone, Copy)]
pub struct DissectionOptions {
    /// Sets with at most this many blocks become leaves.
    pub leaf_size: usize,
    /// Number of distinct coordinate values around the median tried as cut planes.
    pub candidates: usize,
}

impl Default for DissectionOptions {
    fn default() -> Self {
        Self {
            leaf_size: 8,
            candidates: 7,
        }
    }
}

/// Geometric nested dissection of a block graph.
///
/// `adjacency[b]` lists the neighbours of block `b` and must be symmetric.
/// Returns a block-level elimination tree in postorder covering every block.
pub fn nested_dissection(
    points: &[[f64; 3]],
    adjacency: &[Vec<usize>],
    options: DissectionOptions,
) -> Result<EliminationTree, FactorError> {
    if points.len() != adjacency.len() {
        return Err(FactorError::DimensionMismatch {
            expected: points.len(),
            found: adjacency.len(),
        });
    }
    let mut state = Dissector {
        points,
        adjacency,
        options,
        label: vec![Side::Outside; points.len()],
        nodes: Vec::new(),
    };
    let all: Vec<usize> = (0..points.len()).collect();
    if !all.is_empty() {
        state.dissect(all);
    }
    EliminationTree::new(state.nodes)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Outside,
    Left,
    Right,
    Separator,
}

struct Dissector<'a> {
    points: &'a [[f64; 3]],
    adjacency: &'a [Vec<usize>],
    options: DissectionOptions,
    label: Vec<Side>,
    nodes: Vec<TreeNode>,
}

struct Cut {
    left: Vec<usize>,
    right: Vec<usize>,
    separator: Vec<usize>,
}

impl Dissector<'_> {
    fn push(&mut self, vars: Vec<usize>, children: &[usize]) -> usize {
        let id = self.nodes.len();
        for &c in children {
            self.nodes[c].parent = Some(id);
        }
        self.nodes.push(TreeNode { vars, parent: None });
        id
    }

    fn dissect(&mut self, set: Vec<usize>) -> usize {
        if set.len() <= self.options.leaf_size {
            return self.push(set, &[]);
        }
        match self.best_cut(&set) {
            Some(cut) => {
                let mut children = Vec::with_capacity(2);
                if !cut.left.is_empty() {
                    children.push(self.dissect(cut.left));
                }
                if !cut.right.is_empty() {
                    children.push(self.dissect(cut.right));
                }
                self.push(cut.separator, &children)
            }
            None => self.push(set, &[]),
        }
    }

    fn best_cut(&mut self, set: &[usize]) -> Option<Cut> {
        let mut best: Option<(usize, Cut)> = None;
        for axis in self.axes_by_extent(set) {
            let mut coords: Vec<f64> = set.iter().map(|&b| self.points[b][axis]).collect();
            coords.sort_by(f64::total_cmp);
            let extent = coords[coords.len() - 1] - coords[0];
            if extent <= 0.0 {
                continue;
            }
            let tol = 1e-9 * extent;
            let mut distinct: Vec<f64> = Vec::new();
            for &c in &coords {
                if distinct.last().is_none_or(|&d| c - d > tol) {
                    distinct.push(c);
                }
            }
            let median = coords[coords.len() / 2];
            let mut order: Vec<f64> = distinct.clone();
            order.sort_by(|a, b| (a - median).abs().total_cmp(&(b - median).abs()));
            for &plane in order.iter().take(self.options.candidates) {
                let cut = self.cut(set, axis, plane, tol);
                let smaller = cut.left.len().min(cut.right.len());
                // reject lopsided cuts; they deepen the tree without shrinking fronts
                if smaller * 4 < set.len().saturating_sub(cut.separator.len()) {
                    continue;
                }
                let score = cut.separator.len();
                if best.as_ref().is_none_or(|(s, _)| score < *s) {
                    best = Some((score, cut));
                }
            }
            if best.is_some() {
                break;
            }
        }
        best.map(|(_, cut)| cut)
    }

    fn axes_by_extent(&self, set: &[usize]) -> Vec<usize> {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for &b in set {
            for a in 0..3 {
                lo[a] = lo[a].min(self.points[b][a]);
                hi[a] = hi[a].max(self.points[b][a]);
            }
        }
        let mut axes = vec![0, 1, 2];
        axes.sort_by(|&a, &b| (hi[b] - lo[b]).total_cmp(&(hi[a] - lo[a])));
        axes
    }

    fn cut(&mut self, set: &[usize], axis: usize, plane: f64, tol: f64) -> Cut {
        for &b in set {
            let c = self.points[b][axis];
            self.label[b] = if c < plane - tol {
                Side::Left
            } else if c > plane + tol {
                Side::Right
            } else {
                Side::Separator
            };
        }
        for &b in set {
            if self.label[b] == Side::Left
                && self.adjacency[b]
                    .iter()
                    .any(|&nb| self.label[nb] == Side::Right)
            {
                self.label[b] = Side::Separator;
            }
        }
        let mut cut = Cut {
            left: Vec::new(),
            right: Vec::new(),
            separator: Vec::new(),
        };
        for &b in set {
            match self.label[b] {
                Side::Left => cut.left.push(b),
                Side::Right => cut.right.push(b),
                _ => cut.separator.push(b),
            }
        }
        for &b in set {
            self.label[b] = Side::Outside;
        }
        cut
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_graph(n: usize) -> (Vec<[f64; 3]>, Vec<Vec<usize>>) {
        let id = |i: usize, j: usize| i * n + j;
        let mut points = Vec::new();
        let mut adj = vec![Vec::new(); n * n];
        for i in 0..n {
            for j in 0..n {
                points.push([i as f64, j as f64, 0.0]);
                if i + 1 < n {
                    adj[id(i, j)].push(id(i + 1, j));
                    adj[id(i + 1, j)].push(id(i, j));
                }
                if j + 1 < n {
                    adj[id(i, j)].push(id(i, j + 1));
                    adj[id(i, j + 1)].push(id(i, j));
                }
            }
        }
        (points, adj)
    }

    #[test]
    fn dissection_covers_every_block_once() {
        let (points, adj) = grid_graph(9);
        let tree = nested_dissection(&points, &adj, DissectionOptions::default()).unwrap();
        let mut seen = vec![0; points.len()];
        for node in tree.nodes() {
            for &b in &node.vars {
                seen[b] += 1;
            }
        }
        assert!(seen.iter().all(|&s| s == 1));
        // a grid line separates the first cut
        let root = tree.nodes().last().unwrap();
        assert_eq!(root.vars.len(), 9);
        assert!(root.parent.is_none());
    }

    #[test]
    fn separators_decouple_subtrees() {
        let (points, adj) = grid_graph(12);
        let tree = nested_dissection(&points, &adj, DissectionOptions::default()).unwrap();
        let mut owner = vec![0; points.len()];
        for (i, node) in tree.nodes().iter().enumerate() {
            for &b in &node.vars {
                owner[b] = i;
            }
        }
        for b in 0..points.len() {
            for &nb in &adj[b] {
                let (x, y) = (owner[b], owner[nb]);
                assert!(x == y || tree.is_ancestor(x, y) || tree.is_ancestor(y, x));
            }
        }
    }

    #[test]
    fn bad_postorder_rejected() {
        let nodes = vec![
            TreeNode {
                vars: vec![0],
                parent: None,
            },
            TreeNode {
                vars: vec![1],
                parent: Some(0),
            },
        ];
        assert!(EliminationTree::new(nodes).is_err());
    }
}
