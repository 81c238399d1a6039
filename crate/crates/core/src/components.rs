//! Incremental connected components.
//!
//! A disjoint-set forest with path halving and union by rank. Unions are
//! applied at the ordered append point while the compressed graph is being
//! built, so component sizes are ready the moment construction finishes.

/// Disjoint-set forest over node ids `0..n`.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<u32>,
    rank: Vec<u8>,
}

/// Dense component labelling produced by [`UnionFind::finalize`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Components {
    /// Component id per node, dense in `0..sizes.len()`.
    pub component_id: Vec<u32>,
    /// Node count per component.
    pub sizes: Vec<u32>,
}

impl Components {
    pub fn count(&self) -> usize {
        self.sizes.len()
    }

    /// Exact size of the component containing `v`.
    pub fn size_of(&self, v: u32) -> u32 {
        self.sizes[self.component_id[v as usize] as usize]
    }
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n as u32).collect(),
            rank: vec![0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    /// Returns the root of `v`, repointing every other node on the path to
    /// its grandparent.
    pub fn find(&mut self, mut v: u32) -> u32 {
        while self.parent[v as usize] != v {
            let grand = self.parent[self.parent[v as usize] as usize];
            self.parent[v as usize] = grand;
            v = grand;
        }
        v
    }

    /// Merges the sets containing `u` and `v`. Returns `false` if they were
    /// already in the same set.
    pub fn union(&mut self, u: u32, v: u32) -> bool {
        let (ru, rv) = (self.find(u), self.find(v));
        if ru == rv {
            return false;
        }
        let (hi, lo) = match self.rank[ru as usize].cmp(&self.rank[rv as usize]) {
            std::cmp::Ordering::Less => (rv, ru),
            std::cmp::Ordering::Greater => (ru, rv),
            std::cmp::Ordering::Equal => {
                self.rank[ru as usize] += 1;
                (ru, rv)
            }
        };
        self.parent[lo as usize] = hi;
        true
    }

    /// Dense component ids in order of each component's lowest node id.
    pub fn finalize(mut self) -> Components {
        let n = self.parent.len();
        let mut id_of_root = vec![u32::MAX; n];
        let mut component_id = Vec::with_capacity(n);
        let mut sizes: Vec<u32> = Vec::new();
        for v in 0..n as u32 {
            let r = self.find(v) as usize;
            if id_of_root[r] == u32::MAX {
                id_of_root[r] = sizes.len() as u32;
                sizes.push(0);
            }
            let c = id_of_root[r];
            sizes[c as usize] += 1;
            component_id.push(c);
        }
        Components {
            component_id,
            sizes,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flood_fill(n: usize, edges: &[(u32, u32)]) -> Vec<u32> {
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in edges {
            adj[a as usize].push(b);
            adj[b as usize].push(a);
        }
        let mut label = vec![u32::MAX; n];
        let mut next = 0;
        for s in 0..n {
            if label[s] != u32::MAX {
                continue;
            }
            label[s] = next;
            let mut stack = vec![s];
            while let Some(v) = stack.pop() {
                for &w in &adj[v] {
                    if label[w as usize] == u32::MAX {
                        label[w as usize] = next;
                        stack.push(w as usize);
                    }
                }
            }
            next += 1;
        }
        label
    }

    #[test]
    fn fresh_structure_is_identity() {
        let mut uf = UnionFind::new(10);
        for k in 0..10 {
            assert_eq!(uf.find(k), k);
        }
    }

    #[test]
    fn union_joins_roots() {
        let mut uf = UnionFind::new(4);
        assert!(uf.union(0, 1));
        assert_eq!(uf.find(0), uf.find(1));
        assert!(!uf.union(1, 0));
        assert_ne!(uf.find(0), uf.find(2));
    }

    #[test]
    fn equal_rank_union_increments_survivor() {
        let mut uf = UnionFind::new(4);
        uf.union(0, 1);
        let r = uf.find(0);
        assert_eq!(uf.rank[r as usize], 1);
        uf.union(2, 3);
        uf.union(0, 2);
        let r = uf.find(3);
        assert_eq!(uf.rank[r as usize], 2);
        // lower rank attaches under higher without changing it
        let mut uf = UnionFind::new(3);
        uf.union(0, 1);
        let big = uf.find(0);
        uf.union(2, 0);
        assert_eq!(uf.find(2), big);
        assert_eq!(uf.rank[big as usize], 1);
    }

    #[test]
    fn path_halving_shortens_chains() {
        let mut uf = UnionFind::new(5);
        // hand-built chain 4 -> 3 -> 2 -> 1 -> 0
        uf.parent = vec![0, 0, 1, 2, 3];
        assert_eq!(uf.find(4), 0);
        assert_eq!(uf.parent, vec![0, 0, 0, 2, 2]);
        assert_eq!(uf.find(4), 0);
    }

    #[test]
    fn finalize_isolated_nodes() {
        let c = UnionFind::new(5).finalize();
        assert_eq!(c.sizes, vec![1; 5]);
        assert_eq!(c.component_id, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn finalize_path_and_triangles() {
        let mut uf = UnionFind::new(6);
        for v in 0..5 {
            uf.union(v, v + 1);
        }
        assert_eq!(uf.finalize().sizes, vec![6]);

        let mut uf = UnionFind::new(6);
        for (a, b) in [(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)] {
            uf.union(a, b);
        }
        let c = uf.finalize();
        assert_eq!(c.sizes, vec![3, 3]);
        assert_eq!(c.component_id, vec![0, 0, 0, 1, 1, 1]);
        assert_eq!(c.size_of(4), 3);
    }

    #[test]
    fn random_unions_match_flood_fill() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let n = 1000;
        let edges: Vec<(u32, u32)> = (0..700)
            .map(|_| (rng.gen_range(0..n as u32), rng.gen_range(0..n as u32)))
            .collect();
        let mut uf = UnionFind::new(n);
        for &(a, b) in &edges {
            uf.union(a, b);
        }
        let c = uf.finalize();
        // both labellings number components by first occurrence
        assert_eq!(c.component_id, flood_fill(n, &edges));
        assert_eq!(c.sizes.iter().map(|&s| s as usize).sum::<usize>(), n);
    }

    proptest::proptest! {
        #[test]
        fn partition_is_independent_of_edge_order(
            edges in proptest::collection::vec((0u32..60, 0u32..60), 0..120),
            seed in 0u64..1000,
        ) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut shuffled = edges.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let run = |es: &[(u32, u32)]| {
                let mut uf = UnionFind::new(60);
                for &(a, b) in es {
                    uf.union(a, b);
                }
                uf.finalize()
            };
            proptest::prop_assert_eq!(run(&edges), run(&shuffled));
        }
    }
}
