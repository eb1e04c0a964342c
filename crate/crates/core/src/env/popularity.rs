use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// How the content popularity of an environment is initialized and evolved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopularityConfig {
    /// Initial skewness. When absent, drawn uniformly from `skew_choices`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skewness: Option<f64>,
    pub skew_choices: Vec<f64>,
    /// Epochs between popularity changes; 0 keeps the popularity fixed.
    pub shuffle_period: u64,
}

impl Default for PopularityConfig {
    fn default() -> Self {
        Self {
            skewness: None,
            skew_choices: vec![0.5, 1.0, 1.5, 2.0],
            shuffle_period: 500,
        }
    }
}

/// Zipf content popularity over a rank permutation.
///
/// `ranks[f]` is the 1-based popularity rank of item `f`; the request
/// probability is `ranks[f]^-skewness` normalized over all items. Hidden from
/// the agents.
#[derive(Debug, Clone, PartialEq)]
pub struct PopularityModel {
    pub(crate) ranks: Vec<usize>,
    pub(crate) skewness: f64,
    pub(crate) shuffle_period: Option<u64>,
    pub(crate) skew_choices: Vec<f64>,
}

impl PopularityModel {
    /// Item `f` gets rank `f + 1`, never changes.
    pub fn fixed(num_content: usize, skewness: f64) -> Self {
        Self {
            ranks: (1..=num_content).collect(),
            skewness,
            shuffle_period: None,
            skew_choices: vec![skewness],
        }
    }

    pub fn from_config<R: Rng + ?Sized>(
        num_content: usize,
        config: &PopularityConfig,
        rng: &mut R,
    ) -> Self {
        let mut ranks: Vec<usize> = (1..=num_content).collect();
        ranks.shuffle(rng);
        let skewness = match config.skewness {
            Some(k) => k,
            None => *config
                .skew_choices
                .choose(rng)
                .expect("skew_choices validated non-empty"),
        };
        Self {
            ranks,
            skewness,
            shuffle_period: (config.shuffle_period > 0).then_some(config.shuffle_period),
            skew_choices: config.skew_choices.clone(),
        }
    }

    pub fn num_content(&self) -> usize {
        self.ranks.len()
    }

    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }

    pub fn skewness(&self) -> f64 {
        self.skewness
    }

    pub fn shuffle_period(&self) -> Option<u64> {
        self.shuffle_period
    }

    /// Request probability of every item. An infinite skewness puts all mass
    /// on the rank-1 item.
    pub fn probabilities(&self) -> Vec<f64> {
        let weights: Vec<f64> = self
            .ranks
            .iter()
            .map(|&r| (r as f64).powf(-self.skewness))
            .collect();
        let total: f64 = weights.iter().sum();
        weights.into_iter().map(|w| w / total).collect()
    }

    /// Applies the popularity change scheduled for `epoch`, if any: a fresh
    /// uniform rank permutation and a skewness redrawn from the choices.
    pub fn evolve<R: Rng + ?Sized>(&mut self, epoch: u64, rng: &mut R) {
        let Some(period) = self.shuffle_period else {
            return;
        };
        if epoch == 0 || epoch % period != 0 {
            return;
        }
        self.ranks.shuffle(rng);
        if let Some(&k) = self.skew_choices.choose(rng) {
            self.skewness = k;
        }
    }
}
