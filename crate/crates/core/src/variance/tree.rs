//! Nested randomness trees of any depth, e.g. pretraining seed ->
//! finetuning seed -> checkpoint -> value.

use crate::error::{Error, Result};
use crate::variance::estimator::{mean, sample_variance};

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Leaf(f64),
    Branch(Vec<Node>),
}

/// Balanced tree stored densely: `branching[d]` children per node at depth
/// `d`, leaves in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomnessTree {
    branching: Vec<usize>,
    leaves: Vec<f64>,
}

impl RandomnessTree {
    pub fn from_dense(branching: Vec<usize>, leaves: Vec<f64>) -> Result<Self> {
        if branching.is_empty() {
            return Err(Error::InvalidArgument("tree needs at least one level".into()));
        }
        if let Some(d) = branching.iter().position(|&b| b == 0) {
            return Err(Error::TooFewChildren { depth: d, children: 0 });
        }
        let expected: usize = branching.iter().product();
        if leaves.len() != expected {
            return Err(Error::InvalidArgument(format!(
                "{} leaves for branching {:?}",
                leaves.len(),
                branching
            )));
        }
        Ok(RandomnessTree { branching, leaves })
    }

    /// Flatten a nested tree; every node at a given depth must have the same
    /// number of children and all leaves must sit at the same depth.
    pub fn from_nested(root: &Node) -> Result<Self> {
        let mut branching = Vec::new();
        let mut level = vec![root];
        let mut depth = 0;
        loop {
            match level[0] {
                Node::Leaf(_) => {
                    if level.iter().any(|n| matches!(n, Node::Branch(_))) {
                        return Err(Error::UnbalancedTree(depth));
                    }
                    break;
                }
                Node::Branch(first) => {
                    let width = first.len();
                    let mut next = Vec::with_capacity(level.len() * width);
                    for node in &level {
                        match node {
                            Node::Branch(children) if children.len() == width => next.extend(children.iter()),
                            _ => return Err(Error::UnbalancedTree(depth)),
                        }
                    }
                    if width == 0 {
                        return Err(Error::TooFewChildren { depth, children: 0 });
                    }
                    branching.push(width);
                    level = next;
                    depth += 1;
                }
            }
        }
        let leaves = level
            .into_iter()
            .map(|n| match n {
                Node::Leaf(v) => *v,
                Node::Branch(_) => unreachable!(),
            })
            .collect();
        RandomnessTree::from_dense(branching, leaves)
    }

    pub fn depth(&self) -> usize {
        self.branching.len()
    }

    pub fn branching(&self) -> &[usize] {
        &self.branching
    }

    pub fn leaves(&self) -> &[f64] {
        &self.leaves
    }
}

/// `(mean, estimated variance of the mean)` of a subtree.
fn node_stats(values: &[f64], branching: &[usize], depth: usize) -> Result<(f64, f64)> {
    let Some((&n, rest)) = branching.split_first() else {
        return Ok((values[0], 0.0));
    };
    if n < 2 {
        return Err(Error::TooFewChildren { depth, children: n });
    }
    let (core, means, phis) = between_children(values, n, rest, depth)?;
    let phi = core / n as f64 + phis.iter().sum::<f64>() / (n * n) as f64;
    Ok((mean(&means), phi))
}

fn between_children(values: &[f64], n: usize, rest: &[usize], depth: usize) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    let chunk = values.len() / n;
    let mut means = Vec::with_capacity(n);
    let mut phis = Vec::with_capacity(n);
    for child in values.chunks(chunk) {
        let (m, p) = node_stats(child, rest, depth + 1)?;
        means.push(m);
        phis.push(p);
    }
    let core = sample_variance(&means) - mean(&phis);
    Ok((core, means, phis))
}

/// Unbiased estimate of `E_{r_1..r_{n-1}}[Var_{r_n}[E_{r_{n+1}..r_N}[c]]]`
/// for `level = n` in `1..=depth`.
pub fn decompose_tree(tree: &RandomnessTree, level: usize) -> Result<f64> {
    let depth = tree.depth();
    if level == 0 || level > depth {
        return Err(Error::LevelOutOfRange { requested: level, depth });
    }
    let outer: usize = tree.branching[..level - 1].iter().product();
    let n = tree.branching[level - 1];
    if n < 2 {
        return Err(Error::TooFewChildren {
            depth: level - 1,
            children: n,
        });
    }
    let chunk = tree.leaves.len() / outer;
    let mut total = 0.0;
    for node in tree.leaves.chunks(chunk) {
        let (core, _, _) = between_children(node, n, &tree.branching[level..], level)?;
        total += core;
    }
    Ok(total / outer as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn leaves(xs: &[f64]) -> Node {
        Node::Branch(xs.iter().map(|&x| Node::Leaf(x)).collect())
    }

    #[test]
    fn nested_and_dense_agree() {
        let root = Node::Branch(vec![leaves(&[1.0, 0.0]), leaves(&[1.0, 1.0]), leaves(&[0.0, 0.0])]);
        let t = RandomnessTree::from_nested(&root).unwrap();
        assert_eq!(t.branching(), &[3, 2]);
        assert_eq!(t.leaves(), &[1.0, 0.0, 1.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn unbalanced_is_rejected() {
        let root = Node::Branch(vec![leaves(&[1.0, 0.0]), leaves(&[1.0])]);
        assert!(matches!(RandomnessTree::from_nested(&root), Err(Error::UnbalancedTree(1))));
        let mixed = Node::Branch(vec![Node::Leaf(1.0), leaves(&[1.0])]);
        assert!(matches!(RandomnessTree::from_nested(&mixed), Err(Error::UnbalancedTree(1))));
    }

    #[test]
    fn leaf_level_of_constant_tree_is_zero() {
        let t = RandomnessTree::from_dense(vec![2, 3, 4], vec![0.7; 24]).unwrap();
        for level in 1..=3 {
            assert!(decompose_tree(&t, level).unwrap().abs() < 1e-15);
        }
    }

    #[test]
    fn too_few_children() {
        let t = RandomnessTree::from_dense(vec![3, 1], vec![1.0, 0.0, 1.0]).unwrap();
        assert!(matches!(decompose_tree(&t, 1), Err(Error::TooFewChildren { .. })));
        // a single outer node is fine when the level itself branches
        let u = RandomnessTree::from_dense(vec![1, 2], vec![1.0, 0.0]).unwrap();
        assert_eq!(decompose_tree(&u, 2).unwrap(), 0.5);
        assert!(matches!(decompose_tree(&u, 3), Err(Error::LevelOutOfRange { .. })));
    }
}
