//! Exact conditioning of riffle independent models on partial rankings.
//!
//! Each node's table is masked to the entries consistent with the
//! observation restricted to that node's items, then renormalized. The
//! evidence mass is the product of the per-node masses.

use rand::Rng;

use crate::dense::{DenseDistribution, DEFAULT_DENSE_CAP};
use crate::error::{domain, Error, Result};
use crate::exec::Exec;
use crate::model::RiffleModel;
use crate::perm::factorial_f64;
use crate::ranking::{PartialRanking, Ranking};

/// Posterior over the prior's hierarchy plus the prior mass of the evidence.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditioningResult {
    pub posterior: RiffleModel,
    pub evidence_mass: f64,
}

/// Conditions `prior` on the partial ranking `obs`.
pub fn pr_condition(prior: &RiffleModel, obs: &PartialRanking) -> Result<ConditioningResult> {
    pr_condition_with(prior, obs, Exec::Sequential)
}

/// As [`pr_condition`], with node updates optionally spread across workers.
pub fn pr_condition_with(prior: &RiffleModel, obs: &PartialRanking, exec: Exec) -> Result<ConditioningResult> {
    prior.check_observation(obs)?;
    let updates = exec.map_range(prior.nodes().len(), |k| {
        let (node, table) = (&prior.nodes()[k], &prior.tables()[k]);
        let keep = node.consistent_indices(obs);
        if keep.len() == table.len() {
            // Unconstrained node: the posterior table is the prior's, exactly.
            return (table.clone(), 1.0);
        }
        let mass: f64 = keep.iter().map(|&i| table[i]).sum();
        let mut post = vec![0.0; table.len()];
        if mass > 0.0 {
            for &i in &keep {
                post[i] = table[i] / mass;
            }
        }
        (post, mass)
    });
    let mut evidence = 1.0;
    let mut tables = Vec::with_capacity(updates.len());
    for ((post, mass), node) in updates.into_iter().zip(prior.nodes()) {
        if mass <= 0.0 {
            return Err(Error::ImpossibleEvidence { node: node.path.clone() });
        }
        evidence *= mass;
        tables.push(post);
    }
    Ok(ConditioningResult { posterior: prior.with_tables_unchecked(tables), evidence_mass: evidence })
}

/// `count` independent draws from the posterior given `obs`.
pub fn sample_posterior(prior: &RiffleModel, obs: &PartialRanking, count: usize, seed: u64) -> Result<Vec<Ranking>> {
    let post = pr_condition(prior, obs)?.posterior;
    Ok(post.sample_many(count, seed))
}

/// How the noisy likelihood spreads `ε` over rankings outside the observation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum NoiseDenominator {
    /// `ε / (|O| − 1)`.
    #[default]
    ObservationSize,
    /// `ε / (n! − |O|)`: uniform over the complement.
    Complement,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NoiseConfig {
    pub denominator: NoiseDenominator,
    /// Largest mixture allowed when conditioning a mixture again.
    pub max_components: usize,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig { denominator: NoiseDenominator::ObservationSize, max_components: 64 }
    }
}

/// A finite mixture of riffle models sharing one hierarchy.
#[derive(Clone, Debug, PartialEq)]
pub struct MixtureModel {
    components: Vec<(f64, RiffleModel)>,
}

impl MixtureModel {
    pub fn new(components: Vec<(f64, RiffleModel)>) -> Result<Self> {
        if components.is_empty() {
            return domain("mixture needs at least one component");
        }
        if components.iter().any(|(w, _)| !(w.is_finite() && *w >= 0.0)) {
            return domain("mixture weights must be nonnegative");
        }
        let s: f64 = components.iter().map(|(w, _)| w).sum();
        if (s - 1.0).abs() > 1e-9 {
            return domain(format!("mixture weights sum to {s}"));
        }
        let first = &components[0].1;
        if components.iter().any(|(_, m)| !m.same_structure(first)) {
            return domain("mixture components must share one hierarchy");
        }
        Ok(MixtureModel { components })
    }

    pub fn single(model: RiffleModel) -> Self {
        MixtureModel { components: vec![(1.0, model)] }
    }

    pub fn components(&self) -> &[(f64, RiffleModel)] {
        &self.components
    }

    pub fn evaluate(&self, sigma: &Ranking) -> Result<f64> {
        let mut s = 0.0;
        for (w, m) in &self.components {
            s += w * m.evaluate(sigma)?;
        }
        Ok(s)
    }

    pub fn to_dense(&self) -> Result<DenseDistribution> {
        let universe = self.components[0].1.universe().all();
        DenseDistribution::from_fn(universe, DEFAULT_DENSE_CAP, Exec::default(), |s| {
            self.components.iter().map(|(w, m)| w * m.evaluate(s).unwrap()).sum()
        })
    }

    /// Conditions every component on the noisy likelihood; each component
    /// splits into (itself, its noise-free posterior).
    pub fn condition_noisy(&self, obs: &PartialRanking, eps: f64, cfg: &NoiseConfig) -> Result<MixtureModel> {
        let n = self.components[0].1.n_items();
        let (c0, c1) = noise_coefficients(obs, n, eps, cfg.denominator)?;
        let mut raw = Vec::new();
        for (w, m) in &self.components {
            if c0 > 0.0 {
                raw.push((w * c0, m.clone()));
            }
            if c1 > 0.0 {
                let z = m.partial_ranking_mass(obs)?;
                if z > 0.0 {
                    raw.push((w * c1 * z, pr_condition(m, obs)?.posterior));
                }
            }
        }
        let raw: Vec<_> = raw.into_iter().filter(|(w, _)| *w > 0.0).collect();
        if raw.len() > cfg.max_components {
            return Err(Error::Capacity {
                what: "noisy mixture components".into(),
                size: raw.len() as u128,
                cap: cfg.max_components as u128,
            });
        }
        let total: f64 = raw.iter().map(|(w, _)| w).sum();
        if total.is_nan() || total <= 0.0 {
            return Err(Error::ImpossibleEvidence { node: "root".into() });
        }
        Ok(MixtureModel { components: raw.into_iter().map(|(w, m)| (w / total, m)).collect() })
    }
}

/// `L(σ) = c₀ + c₁·1[σ ∈ O]` for the noisy likelihood (`1 − ε` inside `O`).
pub fn noise_coefficients(obs: &PartialRanking, n: usize, eps: f64, denom: NoiseDenominator) -> Result<(f64, f64)> {
    if !(0.0..1.0).contains(&eps) {
        return domain(format!("noise level {eps} outside [0, 1)"));
    }
    let size = obs.cardinality();
    let outside = match denom {
        NoiseDenominator::ObservationSize => {
            if size < 2.0 {
                return domain("noisy likelihood needs an observation with at least 2 rankings");
            }
            size - 1.0
        }
        NoiseDenominator::Complement => {
            let rest = factorial_f64(n) - size;
            if rest < 1.0 {
                return domain("noisy likelihood needs a nonempty complement");
            }
            rest
        }
    };
    let c0 = eps / outside;
    let c1 = (1.0 - eps) - c0;
    if c1 < 0.0 {
        let max_eps = outside / (outside + 1.0);
        return domain(format!(
            "noise level {eps} makes the likelihood larger outside the observation; feasible range is [0, {max_eps}]"
        ));
    }
    Ok((c0, c1))
}

/// Posterior under the noisy likelihood: a two-component mixture of the
/// prior and the noise-free posterior.
pub fn condition_noisy(prior: &RiffleModel, obs: &PartialRanking, eps: f64) -> Result<MixtureModel> {
    condition_noisy_with(prior, obs, eps, &NoiseConfig::default())
}

pub fn condition_noisy_with(
    prior: &RiffleModel,
    obs: &PartialRanking,
    eps: f64,
    cfg: &NoiseConfig,
) -> Result<MixtureModel> {
    prior.check_observation(obs)?;
    MixtureModel::single(prior.clone()).condition_noisy(obs, eps, cfg)
}

/// Draws from a mixture: pick a component, then sample it.
pub fn sample_mixture<R: Rng>(mix: &MixtureModel, rng: &mut R) -> Ranking {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (w, m) in mix.components() {
        acc += w;
        if u < acc {
            return m.sampler().draw(rng);
        }
    }
    mix.components().last().unwrap().1.sampler().draw(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hierarchy::Hierarchy;
    use crate::items::{ItemSet, ItemUniverse};
    use crate::model::seeded_rng;
    use crate::ranking::{contains, Interleaving};
    use std::sync::Arc;

    fn apa() -> (Arc<ItemUniverse>, Hierarchy) {
        let u = Arc::new(ItemUniverse::numbered(5).unwrap());
        let d = ItemSet::from_iter([0, 2]);
        let e = ItemSet::from_iter([3, 4]);
        let h = Hierarchy::split(Hierarchy::split_sets(d, e).unwrap(), Hierarchy::Leaf(ItemSet::singleton(1))).unwrap();
        (u, h)
    }

    #[test]
    fn example_twenty_support() {
        let (u, h) = apa();
        let m = RiffleModel::random(u.clone(), h, 1.0, &mut seeded_rng(1)).unwrap();
        let o = u.parse_partial("3|1,2,4,5").unwrap();
        let res = pr_condition(&m, &o).unwrap();
        // Pre-order: root, root.L (D vs E), ...
        assert_eq!(res.posterior.nodes()[1].path, "root.L");
        let support: Vec<String> = res
            .posterior
            .table(1)
            .iter()
            .enumerate()
            .filter(|(_, p)| **p > 0.0)
            .map(|(i, _)| Interleaving::from_index(i, 2, 2).render_with("D", "E"))
            .collect();
        assert_eq!(support, vec!["D|D|E|E", "D|E|D|E", "D|E|E|D"]);
    }

    #[test]
    fn trivial_observation_is_identity() {
        let (u, h) = apa();
        let m = RiffleModel::random(u.clone(), h, 1.0, &mut seeded_rng(2)).unwrap();
        let res = pr_condition(&m, &PartialRanking::trivial(u.all()).unwrap()).unwrap();
        assert_eq!(res.evidence_mass, 1.0);
        for (a, b) in res.posterior.tables().iter().zip(m.tables()) {
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn impossible_evidence_names_the_node() {
        let (u, h) = apa();
        let s = u.parse_ranking("1|2|3|4|5").unwrap();
        let m = RiffleModel::point_mass(u.clone(), h, &s).unwrap();
        let o = u.parse_observation("2").unwrap();
        match pr_condition(&m, &o) {
            Err(Error::ImpossibleEvidence { node }) => assert_eq!(node, "root"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parallel_and_sequential_agree() {
        let (u, h) = apa();
        let m = RiffleModel::random(u.clone(), h, 1.0, &mut seeded_rng(4)).unwrap();
        let o = u.parse_observation("4|1,3").unwrap();
        assert_eq!(pr_condition_with(&m, &o, Exec::Parallel).unwrap(), pr_condition(&m, &o).unwrap());
    }

    #[test]
    fn noisy_weights_by_hand() {
        let u = Arc::new(ItemUniverse::numbered(3).unwrap());
        let h = Hierarchy::chain(&Ranking::identity(3)).unwrap();
        let m = RiffleModel::uniform(u.clone(), h).unwrap();
        let o = u.parse_observation("1").unwrap();
        let mix = condition_noisy(&m, &o, 0.1).unwrap();
        let w: Vec<f64> = mix.components().iter().map(|c| c.0).collect();
        let z = 0.1 + 0.8 / 3.0;
        assert!((w[0] - 0.1 / z).abs() < 1e-12);
        assert!((w[1] - 0.8 / 3.0 / z).abs() < 1e-12);
        assert!((w[0] - 0.272_727_272_727).abs() < 1e-9);

        let clean = condition_noisy(&m, &o, 0.0).unwrap();
        assert_eq!(clean.components().len(), 1);
        assert_eq!(clean.components()[0].0, 1.0);
    }

    #[test]
    fn noisy_argument_checks() {
        let u = Arc::new(ItemUniverse::numbered(3).unwrap());
        let m = RiffleModel::uniform(u.clone(), Hierarchy::chain(&Ranking::identity(3)).unwrap()).unwrap();
        let full = u.parse_observation("1|2|3").unwrap();
        assert!(condition_noisy(&m, &full, 0.1).is_err());
        let o = u.parse_observation("1").unwrap();
        assert!(condition_noisy(&m, &o, 1.0).is_err());
        assert!(condition_noisy(&m, &o, -0.1).is_err());
        // |O| = 2: c1 >= 0 needs eps <= 1/2.
        let err = condition_noisy(&m, &o, 0.6).unwrap_err();
        assert!(err.to_string().contains("feasible range"));
        assert!(condition_noisy(&m, &o, 0.5).is_ok());
    }

    #[test]
    fn noisy_mixtures_are_capped() {
        let u = Arc::new(ItemUniverse::numbered(4).unwrap());
        let m =
            RiffleModel::random(u.clone(), Hierarchy::chain(&Ranking::identity(4)).unwrap(), 1.0, &mut seeded_rng(3))
                .unwrap();
        let cfg = NoiseConfig { max_components: 4, ..Default::default() };
        let o = u.parse_observation("1").unwrap();
        let mix = condition_noisy_with(&m, &o, 0.1, &cfg).unwrap();
        let mix = mix.condition_noisy(&o, 0.1, &cfg).unwrap();
        assert_eq!(mix.components().len(), 4);
        assert!(matches!(mix.condition_noisy(&o, 0.1, &cfg), Err(Error::Capacity { .. })));
    }

    #[test]
    fn posterior_samples_respect_the_observation() {
        let (u, h) = apa();
        let m = RiffleModel::random(u.clone(), h, 1.0, &mut seeded_rng(8)).unwrap();
        let o = u.parse_observation("3|1").unwrap();
        for s in sample_posterior(&m, &o, 500, 3).unwrap() {
            assert!(contains(&o, &s).unwrap());
        }
        assert_eq!(sample_posterior(&m, &o, 5, 3).unwrap(), sample_posterior(&m, &o, 5, 3).unwrap());
    }
}
