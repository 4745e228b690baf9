//! Directed acyclic graphs and d-separation.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::model::VarId;

/// Parent lists over nodes `0..n`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Dag {
    parents: Vec<Vec<VarId>>,
    children: Vec<Vec<VarId>>,
}

impl Dag {
    pub fn new(n: usize) -> Self {
        Dag { parents: vec![Vec::new(); n], children: vec![Vec::new(); n] }
    }

    pub fn from_parents(parents: Vec<Vec<VarId>>) -> Result<Self> {
        let n = parents.len();
        let mut dag = Dag::new(n);
        for (c, ps) in parents.into_iter().enumerate() {
            for p in ps {
                dag.add_edge(p, VarId(c))?;
            }
        }
        dag.topological_order()?;
        Ok(dag)
    }

    pub fn len(&self) -> usize {
        self.parents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parents.is_empty()
    }

    pub fn add_edge(&mut self, parent: VarId, child: VarId) -> Result<()> {
        let n = self.len();
        if parent.index() >= n || child.index() >= n {
            return Err(Error::structure(format!("edge {parent}->{child} out of range")));
        }
        if parent == child {
            return Err(Error::structure(format!("self loop on {child}")));
        }
        if !self.parents[child.index()].contains(&parent) {
            self.parents[child.index()].push(parent);
            self.children[parent.index()].push(child);
        }
        Ok(())
    }

    pub fn parents(&self, v: VarId) -> &[VarId] {
        &self.parents[v.index()]
    }

    pub fn children(&self, v: VarId) -> &[VarId] {
        &self.children[v.index()]
    }

    /// Kahn's algorithm, lowest id first among ready nodes. Errors on a cycle.
    pub fn topological_order(&self) -> Result<Vec<VarId>> {
        let n = self.len();
        let mut indeg: Vec<usize> = self.parents.iter().map(Vec::len).collect();
        let mut ready: std::collections::BTreeSet<usize> =
            (0..n).filter(|&v| indeg[v] == 0).collect();
        let mut out = Vec::with_capacity(n);
        while let Some(v) = ready.pop_first() {
            out.push(VarId(v));
            for c in &self.children[v] {
                indeg[c.index()] -= 1;
                if indeg[c.index()] == 0 {
                    ready.insert(c.index());
                }
            }
        }
        if out.len() != n {
            return Err(Error::structure("directed graph has a cycle"));
        }
        Ok(out)
    }

    /// `seeds` together with all their ancestors, as a membership mask.
    pub fn ancestral_mask(&self, seeds: impl IntoIterator<Item = VarId>) -> Vec<bool> {
        let mut mask = vec![false; self.len()];
        let mut stack: Vec<VarId> = seeds.into_iter().collect();
        while let Some(v) = stack.pop() {
            if !mask[v.index()] {
                mask[v.index()] = true;
                stack.extend(self.parents(v).iter().copied());
            }
        }
        mask
    }

    /// Nodes reachable from `x` by an active trail given `given`, found by a
    /// search over (node, direction) pairs.
    pub fn reachable(&self, x: VarId, given: &[VarId]) -> Vec<bool> {
        let n = self.len();
        let mut observed = vec![false; n];
        for z in given {
            observed[z.index()] = true;
        }
        let anc = self.ancestral_mask(given.iter().copied());

        // direction: false = arriving from a child (moving up), true = from a parent (down)
        let mut visited = vec![[false; 2]; n];
        let mut reach = vec![false; n];
        let mut queue = VecDeque::new();
        queue.push_back((x, false));
        while let Some((v, down)) = queue.pop_front() {
            let vi = v.index();
            if visited[vi][down as usize] {
                continue;
            }
            visited[vi][down as usize] = true;
            if !observed[vi] {
                reach[vi] = true;
            }
            if !down {
                if !observed[vi] {
                    for &p in self.parents(v) {
                        queue.push_back((p, false));
                    }
                    for &c in self.children(v) {
                        queue.push_back((c, true));
                    }
                }
            } else {
                if !observed[vi] {
                    for &c in self.children(v) {
                        queue.push_back((c, true));
                    }
                }
                if anc[vi] {
                    for &p in self.parents(v) {
                        queue.push_back((p, false));
                    }
                }
            }
        }
        reach
    }

    /// True iff every trail from `x` to every variable of `ys` is blocked by `zs`.
    /// Members of `ys` that are also in `zs` are trivially separated.
    pub fn d_separated(&self, x: VarId, ys: &[VarId], zs: &[VarId]) -> Result<bool> {
        if zs.contains(&x) {
            return Err(Error::structure(format!("query variable {x} is in the conditioning set")));
        }
        if ys.is_empty() {
            return Ok(true);
        }
        let reach = self.reachable(x, zs);
        Ok(ys.iter().all(|y| zs.contains(y) || !reach[y.index()]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(i: usize) -> VarId {
        VarId(i)
    }

    #[test]
    fn unobserved_collider_blocks() {
        // 0 -> 2 <- 1
        let dag = Dag::from_parents(vec![vec![], vec![], vec![v(0), v(1)]]).unwrap();
        assert!(dag.d_separated(v(0), &[v(1)], &[]).unwrap());
        assert!(!dag.d_separated(v(0), &[v(1)], &[v(2)]).unwrap());
    }

    #[test]
    fn observed_descendant_of_collider_opens() {
        // 0 -> 2 <- 1, 2 -> 3
        let dag = Dag::from_parents(vec![vec![], vec![], vec![v(0), v(1)], vec![v(2)]]).unwrap();
        assert!(!dag.d_separated(v(0), &[v(1)], &[v(3)]).unwrap());
    }

    #[test]
    fn chain_and_fork() {
        // chain 0 -> 1 -> 2
        let chain = Dag::from_parents(vec![vec![], vec![v(0)], vec![v(1)]]).unwrap();
        assert!(chain.d_separated(v(0), &[v(2)], &[v(1)]).unwrap());
        assert!(!chain.d_separated(v(0), &[v(2)], &[]).unwrap());
        // fork 1 <- 0 -> 2
        let fork = Dag::from_parents(vec![vec![], vec![v(0)], vec![v(0)]]).unwrap();
        assert!(fork.d_separated(v(1), &[v(2)], &[v(0)]).unwrap());
        assert!(!fork.d_separated(v(1), &[v(2)], &[]).unwrap());
    }

    #[test]
    fn cycle_rejected() {
        assert!(Dag::from_parents(vec![vec![v(1)], vec![v(0)]]).is_err());
    }

    #[test]
    fn conditioning_on_query_is_an_error() {
        let dag = Dag::new(2);
        assert!(dag.d_separated(v(0), &[v(1)], &[v(0)]).is_err());
    }

    #[test]
    fn topological_order_prefers_low_ids() {
        let dag = Dag::from_parents(vec![vec![v(2)], vec![], vec![]]).unwrap();
        assert_eq!(dag.topological_order().unwrap(), vec![v(1), v(2), v(0)]);
    }
}
