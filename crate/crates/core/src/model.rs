//! The hierarchical riffle independent model.
//!
//! A model is a [`Hierarchy`] whose internal nodes carry interleaving tables
//! and whose leaves carry relative-ranking tables. Tables are dense and
//! stored in pre-order (left child first); see [`crate::perm`] for the
//! index conventions.

use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::consistency;
use crate::dense::{DenseDistribution, DEFAULT_DENSE_CAP};
use crate::error::{domain, Error, Result};
use crate::exec::Exec;
use crate::hierarchy::{Hierarchy, DEFAULT_MAX_TABLE_ENTRIES};
use crate::items::{ItemSet, ItemUniverse};
use crate::perm::{lex_rank, lex_unrank, pattern_rank, pattern_unrank};
use crate::ranking::{join_unchecked, restrict_unchecked, PartialRanking, Ranking};

/// Tolerance on table sums accepted by the validating constructors.
pub const TABLE_SUM_TOLERANCE: f64 = 1e-9;

/// The random generator behind every seeded draw. Pinned so sample streams
/// are reproducible.
pub type SeededRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NodeKind {
    Leaf,
    Split { left: usize, right: usize, left_items: ItemSet },
}

/// A flattened hierarchy node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Node {
    pub items: ItemSet,
    /// `items` in ascending order; local positions index into this.
    pub members: Vec<usize>,
    pub kind: NodeKind,
    /// `root`, `root.L`, `root.L.R`, ...
    pub path: String,
}

impl Node {
    pub fn table_len(&self) -> usize {
        match &self.kind {
            NodeKind::Leaf => crate::perm::factorial(self.members.len()) as usize,
            NodeKind::Split { left_items, .. } => crate::perm::binomial(self.members.len(), left_items.len()) as usize,
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.kind == NodeKind::Leaf
    }

    /// Table index of this node's factor of `sigma` (which must cover the
    /// node's items).
    pub(crate) fn index_of(&self, sigma: &Ranking) -> usize {
        let rel = sigma.order().iter().copied().filter(|&i| self.items.contains(i));
        match &self.kind {
            NodeKind::Leaf => {
                let local: Vec<usize> = rel.map(|i| self.members.binary_search(&i).unwrap()).collect();
                lex_rank(&local)
            }
            NodeKind::Split { left_items, .. } => {
                let bits: Vec<bool> = rel.map(|i| !left_items.contains(i)).collect();
                pattern_rank(&bits)
            }
        }
    }

    /// Table indices consistent with `obs` (already covering the universe).
    pub(crate) fn consistent_indices(&self, obs: &PartialRanking) -> Vec<usize> {
        let restricted = restrict_unchecked(obs, self.items);
        match &self.kind {
            NodeKind::Leaf => consistency::ranking_indices(restricted.blocks(), &self.members),
            NodeKind::Split { left_items, .. } => consistency::interleaving_indices(restricted.blocks(), *left_items),
        }
    }
}

pub(crate) fn flatten(h: &Hierarchy) -> Vec<Node> {
    fn go(h: &Hierarchy, path: String, out: &mut Vec<Node>) -> usize {
        let id = out.len();
        out.push(Node { items: h.items(), members: h.items().to_vec(), kind: NodeKind::Leaf, path: path.clone() });
        if let Hierarchy::Split { left, right, .. } = h {
            let l = go(left, format!("{path}.L"), out);
            let r = go(right, format!("{path}.R"), out);
            out[id].kind = NodeKind::Split { left: l, right: r, left_items: left.items() };
        }
        id
    }
    let mut out = Vec::new();
    go(h, "root".to_string(), &mut out);
    out
}

/// A hierarchical riffle independent distribution over the rankings of a
/// universe. Immutable once built.
#[derive(Clone, Debug)]
pub struct RiffleModel {
    universe: Arc<ItemUniverse>,
    hierarchy: Hierarchy,
    nodes: Arc<Vec<Node>>,
    tables: Vec<Vec<f64>>,
}

impl PartialEq for RiffleModel {
    fn eq(&self, other: &Self) -> bool {
        self.universe == other.universe && self.hierarchy == other.hierarchy && self.tables == other.tables
    }
}

impl RiffleModel {
    /// Every table uniform; densifies to the uniform distribution.
    pub fn uniform(universe: Arc<ItemUniverse>, hierarchy: Hierarchy) -> Result<Self> {
        Self::uniform_with_cap(universe, hierarchy, DEFAULT_MAX_TABLE_ENTRIES)
    }

    pub fn uniform_with_cap(universe: Arc<ItemUniverse>, hierarchy: Hierarchy, cap: u128) -> Result<Self> {
        if hierarchy.items() != universe.all() {
            return domain("hierarchy does not cover exactly the universe");
        }
        hierarchy.check_table_cap(cap)?;
        let nodes = flatten(&hierarchy);
        let tables = nodes
            .iter()
            .map(|n| {
                let k = n.table_len();
                vec![1.0 / k as f64; k]
            })
            .collect();
        Ok(RiffleModel { universe, hierarchy, nodes: Arc::new(nodes), tables })
    }

    /// Builds a model from explicit tables in pre-order, validating them.
    pub fn from_tables(universe: Arc<ItemUniverse>, hierarchy: Hierarchy, tables: Vec<Vec<f64>>) -> Result<Self> {
        Self::uniform(universe, hierarchy)?.with_tables(tables)
    }

    /// Same structure, new tables (validated).
    pub fn with_tables(&self, tables: Vec<Vec<f64>>) -> Result<Self> {
        if tables.len() != self.nodes.len() {
            return Err(Error::Schema {
                path: "tables".into(),
                message: format!("expected {} tables, found {}", self.nodes.len(), tables.len()),
            });
        }
        for (k, (t, n)) in tables.iter().zip(self.nodes.iter()).enumerate() {
            if t.len() != n.table_len() {
                return Err(Error::Schema {
                    path: format!("tables[{k}]"),
                    message: format!("expected {} entries, found {}", n.table_len(), t.len()),
                });
            }
            if let Some(j) = t.iter().position(|p| !(p.is_finite() && *p >= 0.0)) {
                return Err(Error::Schema {
                    path: format!("tables[{k}][{j}]"),
                    message: format!("entry {} is negative or not finite", t[j]),
                });
            }
            let s: f64 = t.iter().sum();
            if (s - 1.0).abs() > TABLE_SUM_TOLERANCE {
                return Err(Error::Schema {
                    path: format!("tables[{k}]"),
                    message: format!("entries sum to {s}, expected 1"),
                });
            }
        }
        Ok(self.with_tables_unchecked(tables))
    }

    pub(crate) fn with_tables_unchecked(&self, tables: Vec<Vec<f64>>) -> Self {
        RiffleModel {
            universe: self.universe.clone(),
            hierarchy: self.hierarchy.clone(),
            nodes: self.nodes.clone(),
            tables,
        }
    }

    /// Tables drawn uniformly on the simplex, then sharpened by `power`
    /// (1 gives flat Dirichlet draws; larger values concentrate mass).
    pub fn random<R: Rng>(universe: Arc<ItemUniverse>, hierarchy: Hierarchy, power: f64, rng: &mut R) -> Result<Self> {
        let base = Self::uniform(universe, hierarchy)?;
        let tables = base
            .nodes
            .iter()
            .map(|n| {
                let raw: Vec<f64> = (0..n.table_len()).map(|_| (-(1.0 - rng.gen::<f64>()).ln()).powf(power)).collect();
                let z: f64 = raw.iter().sum();
                raw.into_iter().map(|x| x / z).collect()
            })
            .collect();
        Ok(base.with_tables_unchecked(tables))
    }

    /// Every table a point mass at the corresponding factor of `sigma`.
    pub fn point_mass(universe: Arc<ItemUniverse>, hierarchy: Hierarchy, sigma: &Ranking) -> Result<Self> {
        let base = Self::uniform(universe, hierarchy)?;
        base.check_ranking(sigma)?;
        let tables = base
            .nodes
            .iter()
            .map(|n| {
                let mut t = vec![0.0; n.table_len()];
                t[n.index_of(sigma)] = 1.0;
                t
            })
            .collect();
        Ok(base.with_tables_unchecked(tables))
    }

    pub fn universe(&self) -> &Arc<ItemUniverse> {
        &self.universe
    }

    pub fn hierarchy(&self) -> &Hierarchy {
        &self.hierarchy
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn tables(&self) -> &[Vec<f64>] {
        &self.tables
    }

    pub fn table(&self, node: usize) -> &[f64] {
        &self.tables[node]
    }

    pub fn n_items(&self) -> usize {
        self.universe.len()
    }

    /// Structural equality: same universe, hierarchy and table index spaces.
    pub fn same_structure(&self, other: &Self) -> bool {
        self.universe == other.universe && self.hierarchy == other.hierarchy
    }

    pub fn free_param_count(&self) -> u128 {
        self.hierarchy.free_param_count()
    }

    pub fn table_entries(&self) -> u128 {
        self.hierarchy.table_entries()
    }

    pub(crate) fn check_ranking(&self, sigma: &Ranking) -> Result<()> {
        if sigma.items() != self.universe.all() {
            return domain("ranking is not over the model's universe");
        }
        Ok(())
    }

    pub(crate) fn check_observation(&self, obs: &PartialRanking) -> Result<()> {
        if obs.items() != self.universe.all() {
            return domain("observation is not over the model's universe");
        }
        Ok(())
    }

    /// Per-node table indices of the factors of `sigma`.
    pub fn factor_indices(&self, sigma: &Ranking) -> Result<Vec<usize>> {
        self.check_ranking(sigma)?;
        Ok(self.nodes.iter().map(|n| n.index_of(sigma)).collect())
    }

    /// `h(σ)`: product of the interleaving and leaf table entries at σ's factors.
    pub fn evaluate(&self, sigma: &Ranking) -> Result<f64> {
        self.check_ranking(sigma)?;
        Ok(self.nodes.iter().zip(&self.tables).map(|(n, t)| t[n.index_of(sigma)]).product())
    }

    /// Prior mass of a partial ranking: the product over nodes of the mass
    /// each table puts on its consistent entries.
    pub fn partial_ranking_mass(&self, obs: &PartialRanking) -> Result<f64> {
        self.check_observation(obs)?;
        let mut mass = 1.0;
        for (n, t) in self.nodes.iter().zip(&self.tables) {
            mass *= n.consistent_indices(obs).iter().map(|&i| t[i]).sum::<f64>();
            if mass == 0.0 {
                break;
            }
        }
        Ok(mass)
    }

    pub fn to_dense(&self) -> Result<DenseDistribution> {
        self.to_dense_with(DEFAULT_DENSE_CAP, Exec::default())
    }

    pub fn to_dense_with(&self, cap: usize, exec: Exec) -> Result<DenseDistribution> {
        DenseDistribution::from_fn(self.universe.all(), cap, exec, |s| {
            self.nodes.iter().zip(&self.tables).map(|(n, t)| t[n.index_of(s)]).product()
        })
    }

    pub fn sampler(&self) -> Sampler<'_> {
        Sampler::new(self)
    }

    /// One draw determined entirely by `seed`.
    pub fn sample(&self, seed: u64) -> Ranking {
        self.sampler().draw(&mut seeded_rng(seed))
    }

    /// `count` draws from one seeded stream.
    pub fn sample_many(&self, count: usize, seed: u64) -> Vec<Ranking> {
        let s = self.sampler();
        let mut rng = seeded_rng(seed);
        (0..count).map(|_| s.draw(&mut rng)).collect()
    }
}

/// Exact ancestral sampler: draws each node's factor in pre-order (left
/// child first) and joins bottom-up.
#[derive(Debug)]
pub struct Sampler<'a> {
    model: &'a RiffleModel,
    cdfs: Vec<Vec<f64>>,
}

impl<'a> Sampler<'a> {
    fn new(model: &'a RiffleModel) -> Self {
        let cdfs = model
            .tables
            .iter()
            .map(|t| {
                let mut acc = 0.0;
                t.iter()
                    .map(|p| {
                        acc += p;
                        acc
                    })
                    .collect()
            })
            .collect();
        Sampler { model, cdfs }
    }

    fn pick<R: Rng>(&self, node: usize, rng: &mut R) -> usize {
        let cdf = &self.cdfs[node];
        let u = rng.gen::<f64>() * cdf[cdf.len() - 1];
        let i = cdf.partition_point(|&c| c <= u);
        if i < cdf.len() {
            i
        } else {
            // Rounding put u at the very top: take the last entry with mass.
            let t = &self.model.tables[node];
            t.iter().rposition(|&p| p > 0.0).unwrap_or(t.len() - 1)
        }
    }

    fn draw_node<R: Rng>(&self, node: usize, rng: &mut R) -> Vec<usize> {
        let n = &self.model.nodes[node];
        let idx = self.pick(node, rng);
        match &n.kind {
            NodeKind::Leaf => lex_unrank(idx, n.members.len()).into_iter().map(|i| n.members[i]).collect(),
            NodeKind::Split { left, right, left_items } => {
                let a = left_items.len();
                let bits = pattern_unrank(idx, a, n.members.len() - a);
                let l = self.draw_node(*left, rng);
                let r = self.draw_node(*right, rng);
                join_unchecked(&bits, &l, &r).order().to_vec()
            }
        }
    }

    pub fn draw<R: Rng>(&self, rng: &mut R) -> Ranking {
        Ranking::from_order_unchecked(self.draw_node(0, rng))
    }
}
