//! Critic and actor update rules.
//!
//! The free functions work on explicit input matrices so that every
//! controller (joint, shared-critic, independent) can reuse them; the
//! critic's action slot is addressed by a column offset.

use ndarray::{s, Array2, ArrayView2};
use rand::Rng;

use super::buffer::Experience;
use super::mapping::{map_action, map_action_jacobian};
use crate::error::{check_len, Result};
use crate::kv::{KvReader, KvWriter};
use crate::nn::{read_net, soft_update, write_net, Activation, AdamState, DenseNet, NetSpec, OutputHead};

/// Online network, its optimizer state and its slowly tracking target copy.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackedNet {
    pub net: DenseNet,
    pub adam: AdamState,
    pub target: DenseNet,
}

impl TrackedNet {
    pub fn new(net: DenseNet) -> Self {
        Self {
            adam: AdamState::new(net.params().len()),
            target: net.clone(),
            net,
        }
    }

    pub fn soft_update(&mut self, tau: f64) -> Result<()> {
        let online = self.net.params().to_vec();
        let mut target = self.target.params().to_vec();
        soft_update(&mut target, &online, tau)?;
        self.target.set_params(&target)
    }

    pub(crate) fn write(&self, w: &mut KvWriter, prefix: &str) {
        write_net(w, prefix, &self.net, &self.adam);
        w.put_seq(&format!("{prefix}.target"), self.target.params());
    }

    pub(crate) fn read(r: &mut KvReader<'_>, prefix: &str) -> Result<Self> {
        let (net, adam) = read_net(r, prefix)?;
        let target_params: Vec<f64> = r.get_seq(&format!("{prefix}.target"))?;
        let target = DenseNet::from_params(net.spec().clone(), target_params)?;
        Ok(Self { net, adam, target })
    }
}

/// Builds a row-major matrix from equally long rows.
pub fn stack_rows<'a>(rows: impl IntoIterator<Item = &'a [f64]>, ncols: usize) -> Result<Array2<f64>> {
    let mut data = Vec::new();
    let mut n = 0;
    for row in rows {
        check_len("batch row", ncols, row.len())?;
        data.extend_from_slice(row);
        n += 1;
    }
    Ok(Array2::from_shape_vec((n, ncols), data).expect("rows have ncols entries"))
}

/// Mean squared error of `critic(inputs)` against fixed targets, and its
/// parameter gradient.
pub fn critic_loss_grad(critic: &DenseNet, inputs: ArrayView2<'_, f64>, targets: &[f64]) -> Result<(f64, Vec<f64>)> {
    check_len("critic targets", inputs.nrows(), targets.len())?;
    let fwd = critic.forward(inputs)?;
    let n = targets.len() as f64;
    let mut upstream = Array2::zeros((targets.len(), 1));
    let mut loss = 0.0;
    for (i, &y) in targets.iter().enumerate() {
        let err = fwd.output[[i, 0]] - y;
        loss += err * err;
        upstream[[i, 0]] = 2.0 * err / n;
    }
    let (grads, _) = critic.backward(&fwd, upstream.view())?;
    Ok((loss / n, grads))
}

/// One Adam descent step on the critic loss. Returns the pre-step loss.
pub fn fit_critic(critic: &mut TrackedNet, inputs: ArrayView2<'_, f64>, targets: &[f64], lr: f64) -> Result<f64> {
    let (loss, grads) = critic_loss_grad(&critic.net, inputs, targets)?;
    critic.adam.step(critic.net.params_mut(), &grads, lr)?;
    Ok(loss)
}

/// Mean of `critic` over a batch after writing the mapped actor output into
/// columns `offset..offset + action_dim` of `critic_inputs`.
pub fn surrogate_objective(
    actor: &DenseNet,
    critic: &DenseNet,
    actor_inputs: ArrayView2<'_, f64>,
    critic_inputs: &Array2<f64>,
    offset: usize,
) -> Result<f64> {
    let proto = actor.forward(actor_inputs)?.output;
    let mut joint = critic_inputs.clone();
    for (mut row, p) in joint.rows_mut().into_iter().zip(proto.rows()) {
        let mapped = map_action(p.as_slice().expect("standard layout"));
        row.slice_mut(s![offset..offset + mapped.len()])
            .assign(&ndarray::ArrayView1::from(&mapped));
    }
    let q = critic.forward(joint.view())?.output;
    Ok(q.mean().unwrap_or(0.0))
}

/// Gradient of [`surrogate_objective`] with respect to the actor parameters:
/// the critic's action gradient at the mapped action, masked by the mapping
/// Jacobian, backpropagated through the actor.
pub fn policy_gradient(
    actor: &DenseNet,
    critic: &DenseNet,
    actor_inputs: ArrayView2<'_, f64>,
    critic_inputs: &Array2<f64>,
    offset: usize,
) -> Result<Vec<f64>> {
    check_len("critic batch", actor_inputs.nrows(), critic_inputs.nrows())?;
    let afwd = actor.forward(actor_inputs)?;
    let width = afwd.output.ncols();
    let mut joint = critic_inputs.clone();
    let mut mask = Array2::zeros(afwd.output.dim());
    for (i, p) in afwd.output.rows().into_iter().enumerate() {
        let p = p.as_slice().expect("standard layout");
        let mapped = map_action(p);
        for (j, (m, d)) in mapped.iter().zip(map_action_jacobian(p)).enumerate() {
            joint[[i, offset + j]] = *m;
            mask[[i, j]] = d;
        }
    }
    let cfwd = critic.forward(joint.view())?;
    let n = joint.nrows() as f64;
    let upstream = Array2::from_elem((joint.nrows(), 1), 1.0 / n);
    let (_, dq_dinput) = critic.backward(&cfwd, upstream.view())?;
    let dq_da = dq_dinput.slice(s![.., offset..offset + width]).to_owned() * &mask;
    let (grads, _) = actor.backward(&afwd, dq_da.view())?;
    Ok(grads)
}

/// Adam ascent along `grad`. Returns the gradient's Euclidean norm.
pub fn ascend_actor(actor: &mut TrackedNet, grad: &[f64], lr: f64) -> Result<f64> {
    let neg: Vec<f64> = grad.iter().map(|g| -g).collect();
    actor.adam.step(actor.net.params_mut(), &neg, lr)?;
    Ok(grad.iter().map(|g| g * g).sum::<f64>().sqrt())
}

/// Mapped target-actor actions for a batch of observations, one row each.
pub fn target_actions(actor: &TrackedNet, observations: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    let mut out = actor.target.forward(observations)?.output;
    out.mapv_inplace(|x| x.min(1.0));
    Ok(out)
}

/// Layer widths and activation shared by a family of networks.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetShape {
    pub actor_hidden: Vec<usize>,
    pub critic_hidden: Vec<usize>,
    pub activation: Activation,
}

/// Actor with a softmax-scaled head of `groups` blocks summing to `capacity`.
pub fn build_actor<R: Rng + ?Sized>(
    shape: &NetShape,
    obs_dim: usize,
    action_dim: usize,
    groups: usize,
    capacity: f64,
    rng: &mut R,
) -> Result<TrackedNet> {
    let head = OutputHead::SoftmaxScaled {
        scale: capacity,
        groups,
    };
    let spec = NetSpec::new(obs_dim, &shape.actor_hidden, action_dim, shape.activation, head)?;
    Ok(TrackedNet::new(DenseNet::new(spec, rng)?))
}

/// Scalar-valued critic over `input_dim` inputs.
pub fn build_critic<R: Rng + ?Sized>(shape: &NetShape, input_dim: usize, rng: &mut R) -> Result<TrackedNet> {
    let spec = NetSpec::new(input_dim, &shape.critic_hidden, 1, shape.activation, OutputHead::Scalar)?;
    Ok(TrackedNet::new(DenseNet::new(spec, rng)?))
}

/// One actor and one critic over `[state, action]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ActorCriticPair {
    pub actor: TrackedNet,
    pub critic: TrackedNet,
}

impl ActorCriticPair {
    /// Initializes the actor first, then the critic, from the same stream.
    pub fn new<R: Rng + ?Sized>(
        shape: &NetShape,
        state_dim: usize,
        action_dim: usize,
        groups: usize,
        capacity: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let actor = build_actor(shape, state_dim, action_dim, groups, capacity, rng)?;
        let critic = build_critic(shape, state_dim + action_dim, rng)?;
        Ok(Self { actor, critic })
    }

    pub fn state_dim(&self) -> usize {
        self.actor.net.spec().input_dim()
    }

    pub fn action_dim(&self) -> usize {
        self.actor.net.spec().output_dim()
    }

    /// Greedy mapped action.
    pub fn act(&self, state: &[f64]) -> Result<Vec<f64>> {
        Ok(map_action(&self.actor.net.forward_one(state)?))
    }

    /// Bootstrapped targets `R_h + gamma * Q'(S', map(mu'(S')))`.
    pub fn targets(&self, batch: &[&Experience], gamma: f64) -> Result<Vec<f64>> {
        let sd = self.state_dim();
        let next = stack_rows(batch.iter().map(|e| e.next_state.as_slice()), sd)?;
        let next_actions = target_actions(&self.actor, next.view())?;
        let inputs = ndarray::concatenate![ndarray::Axis(1), next, next_actions];
        let q = self.critic.target.forward(inputs.view())?.output;
        Ok(batch
            .iter()
            .zip(q.column(0))
            .map(|(e, q)| e.homotopy_reward + gamma * q)
            .collect())
    }

    fn joint_inputs(&self, batch: &[&Experience]) -> Result<Array2<f64>> {
        let states = stack_rows(batch.iter().map(|e| e.state.as_slice()), self.state_dim())?;
        let actions = stack_rows(batch.iter().map(|e| e.action.as_slice()), self.action_dim())?;
        Ok(ndarray::concatenate![ndarray::Axis(1), states, actions])
    }

    pub fn critic_train_step(&mut self, batch: &[&Experience], gamma: f64, lr: f64) -> Result<f64> {
        let targets = self.targets(batch, gamma)?;
        let inputs = self.joint_inputs(batch)?;
        fit_critic(&mut self.critic, inputs.view(), &targets, lr)
    }

    pub fn actor_train_step(&mut self, batch: &[&Experience], lr: f64) -> Result<f64> {
        let inputs = self.joint_inputs(batch)?;
        let sd = self.state_dim();
        let states = inputs.slice(s![.., ..sd]);
        let grad = policy_gradient(&self.actor.net, &self.critic.net, states, &inputs, sd)?;
        ascend_actor(&mut self.actor, &grad, lr)
    }

    pub fn soft_update(&mut self, tau: f64) -> Result<()> {
        self.critic.soft_update(tau)?;
        self.actor.soft_update(tau)
    }

    pub(crate) fn write(&self, w: &mut KvWriter, prefix: &str) {
        self.actor.write(w, &format!("{prefix}.actor"));
        self.critic.write(w, &format!("{prefix}.critic"));
    }

    pub(crate) fn read(r: &mut KvReader<'_>, prefix: &str) -> Result<Self> {
        let actor = TrackedNet::read(r, &format!("{prefix}.actor"))?;
        let critic = TrackedNet::read(r, &format!("{prefix}.critic"))?;
        Ok(Self { actor, critic })
    }
}
