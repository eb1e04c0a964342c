use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::kv::{KvReader, KvWriter};

use super::mapping::project_feasible;

/// Ornstein-Uhlenbeck exploration noise with a decaying amplitude.
///
/// Each sample advances the process by one unit of time with the exact
/// transition `x' = x e^-theta + sigma sqrt((1 - e^-2theta) / 2theta) N(0,1)`,
/// whose stationary variance is `sigma^2 / (2 theta)` for any step size.
#[derive(Debug, Clone, PartialEq)]
pub struct OuNoise {
    x: Vec<f64>,
    pub theta: f64,
    pub sigma: f64,
    beta: f64,
    pub beta_decay: f64,
    pub beta_floor: f64,
}

impl OuNoise {
    pub fn new(dim: usize, theta: f64, sigma: f64, beta: f64, beta_decay: f64, beta_floor: f64) -> Result<Self> {
        let ok = theta > 0.0
            && theta.is_finite()
            && sigma >= 0.0
            && sigma.is_finite()
            && beta >= 0.0
            && (0.0..=1.0).contains(&beta_decay)
            && beta_floor >= 0.0;
        if !ok {
            return Err(Error::InvalidArgument(format!(
                "invalid OU parameters theta={theta} sigma={sigma} beta={beta} decay={beta_decay} floor={beta_floor}"
            )));
        }
        Ok(Self {
            x: vec![0.0; dim],
            theta,
            sigma,
            beta,
            beta_decay,
            beta_floor,
        })
    }

    /// Unit stationary variance with mean-reversion rate 0.15.
    pub fn unit_variance(dim: usize, beta: f64, beta_decay: f64, beta_floor: f64) -> Result<Self> {
        Self::new(dim, 0.15, (2.0f64 * 0.15).sqrt(), beta, beta_decay, beta_floor)
    }

    pub fn with_state(mut self, x: Vec<f64>) -> Result<Self> {
        if x.len() != self.x.len() || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("bad OU state".into()));
        }
        self.x = x;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn state(&self) -> &[f64] {
        &self.x
    }

    pub fn stationary_variance(&self) -> f64 {
        self.sigma * self.sigma / (2.0 * self.theta)
    }

    pub fn sample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> &[f64] {
        let keep = (-self.theta).exp();
        let scale = self.sigma * ((1.0 - (-2.0 * self.theta).exp()) / (2.0 * self.theta)).sqrt();
        for x in &mut self.x {
            let z: f64 = rng.sample(StandardNormal);
            *x = *x * keep + scale * z;
        }
        &self.x
    }

    /// Shrinks the amplitude by the decay factor without going below the floor.
    pub fn decay(&mut self) {
        if self.beta > self.beta_floor {
            self.beta = (self.beta * self.beta_decay).max(self.beta_floor);
        }
    }

    /// `project(action + beta * noise)` followed by one amplitude decay.
    pub fn explore<R: Rng + ?Sized>(
        &mut self,
        action: &[f64],
        block: usize,
        capacity: f64,
        rng: &mut R,
    ) -> Vec<f64> {
        assert_eq!(action.len(), self.x.len(), "noise dimension");
        let beta = self.beta;
        let noise = self.sample(rng);
        let mut out: Vec<f64> = action
            .iter()
            .zip(noise)
            .map(|(a, n)| a + beta * n)
            .collect();
        project_feasible(&mut out, block, capacity);
        self.decay();
        out
    }

    pub(crate) fn write(&self, w: &mut KvWriter, prefix: &str) {
        w.put(
            &format!("{prefix}.ou"),
            format!(
                "{} {} {} {} {}",
                self.theta, self.sigma, self.beta, self.beta_decay, self.beta_floor
            ),
        )
        .put_seq(&format!("{prefix}.ou_state"), &self.x);
    }

    pub(crate) fn read(r: &mut KvReader<'_>, prefix: &str) -> Result<Self> {
        let p: Vec<f64> = r.get_seq(&format!("{prefix}.ou"))?;
        let [theta, sigma, beta, decay, floor] = p[..] else {
            return Err(Error::InvalidArgument("malformed OU header".into()));
        };
        let x: Vec<f64> = r.get_seq(&format!("{prefix}.ou_state"))?;
        Self::new(x.len(), theta, sigma, beta, decay, floor)?.with_state(x)
    }
}
