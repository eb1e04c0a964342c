//! Plain-text network checkpoints (`coopcache-net v1`).
//!
//! For a prefix `p` the entries are, in order:
//!
//! ```text
//! p.layer_sizes: <input> <hidden...> <output>
//! p.activation: relu | tanh
//! p.head: scalar | softmax <scale> <groups>
//! p.params: <flat parameters, layer by layer: weights row-major, then bias>
//! p.adam: <step> <beta1> <beta2> <eps> <skipped>
//! p.adam_m: <first moments>
//! p.adam_v: <second moments>
//! ```

use super::{AdamState, DenseNet, NetSpec, OutputHead};
use crate::error::{check_len, Error, Result};
use crate::kv::{KvReader, KvWriter};

const FORMAT: &str = "coopcache-net";
const VERSION: u32 = 1;

pub fn write_net(w: &mut KvWriter, prefix: &str, net: &DenseNet, adam: &AdamState) {
    let spec = net.spec();
    w.put_seq(&format!("{prefix}.layer_sizes"), &spec.layer_sizes)
        .put(&format!("{prefix}.activation"), spec.hidden_activation);
    match spec.head {
        OutputHead::Scalar => w.put(&format!("{prefix}.head"), "scalar"),
        OutputHead::SoftmaxScaled { scale, groups } => {
            w.put(&format!("{prefix}.head"), format!("softmax {scale} {groups}"))
        }
    };
    w.put_seq(&format!("{prefix}.params"), net.params())
        .put(
            &format!("{prefix}.adam"),
            format!(
                "{} {} {} {} {}",
                adam.step, adam.beta1, adam.beta2, adam.eps, adam.skipped
            ),
        )
        .put_seq(&format!("{prefix}.adam_m"), &adam.m)
        .put_seq(&format!("{prefix}.adam_v"), &adam.v);
}

pub fn read_net(r: &mut KvReader<'_>, prefix: &str) -> Result<(DenseNet, AdamState)> {
    let layer_sizes: Vec<usize> = r.get_seq(&format!("{prefix}.layer_sizes"))?;
    let hidden_activation = r.get(&format!("{prefix}.activation"))?;
    let head_key = format!("{prefix}.head");
    let (line, head_raw) = r.raw(&head_key)?;
    let bad = |reason: &str| Error::Parse {
        what: "network checkpoint",
        line,
        reason: reason.to_string(),
    };
    let parts: Vec<&str> = head_raw.split_whitespace().collect();
    let head = match parts.as_slice() {
        ["scalar"] => OutputHead::Scalar,
        ["softmax", scale, groups] => OutputHead::SoftmaxScaled {
            scale: scale.parse().map_err(|_| bad("bad head scale"))?,
            groups: groups.parse().map_err(|_| bad("bad head groups"))?,
        },
        _ => return Err(bad("unknown output head")),
    };
    let spec = NetSpec {
        layer_sizes,
        hidden_activation,
        head,
    };
    let params = r.get_seq(&format!("{prefix}.params"))?;
    let net = DenseNet::from_params(spec, params)?;

    let adam_key = format!("{prefix}.adam");
    let (line, adam_raw) = r.raw(&adam_key)?;
    let fields: Vec<&str> = adam_raw.split_whitespace().collect();
    let parse_err = || Error::Parse {
        what: "network checkpoint",
        line,
        reason: "malformed adam header".into(),
    };
    if fields.len() != 5 {
        return Err(parse_err());
    }
    let m: Vec<f64> = r.get_seq(&format!("{prefix}.adam_m"))?;
    let v: Vec<f64> = r.get_seq(&format!("{prefix}.adam_v"))?;
    check_len("adam first moments", net.params().len(), m.len())?;
    check_len("adam second moments", net.params().len(), v.len())?;
    let adam = AdamState {
        m,
        v,
        step: fields[0].parse().map_err(|_| parse_err())?,
        beta1: fields[1].parse().map_err(|_| parse_err())?,
        beta2: fields[2].parse().map_err(|_| parse_err())?,
        eps: fields[3].parse().map_err(|_| parse_err())?,
        skipped: fields[4].parse().map_err(|_| parse_err())?,
    };
    Ok((net, adam))
}

/// A single network with its optimizer state as a standalone document.
#[derive(Debug, Clone, PartialEq)]
pub struct NetCheckpoint {
    pub net: DenseNet,
    pub adam: AdamState,
}

impl NetCheckpoint {
    pub fn to_text(&self) -> String {
        let mut w = KvWriter::new(FORMAT, VERSION);
        write_net(&mut w, "net", &self.net, &self.adam);
        w.finish()
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut r = KvReader::new(text, "network checkpoint", FORMAT, VERSION)?;
        let (net, adam) = read_net(&mut r, "net")?;
        r.finish()?;
        Ok(Self { net, adam })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Activation;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn checkpoint_round_trip_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let head = OutputHead::SoftmaxScaled {
            scale: 0.4 * 5.0,
            groups: 2,
        };
        let spec = NetSpec::new(7, &[5, 3], 10, Activation::Tanh, head).unwrap();
        let mut net = DenseNet::new(spec, &mut rng).unwrap();
        let mut adam = AdamState::new(net.params().len());
        let grads: Vec<f64> = (0..net.params().len()).map(|i| (i as f64).sin()).collect();
        adam.step(net.params_mut(), &grads, 0.01).unwrap();
        let ck = NetCheckpoint { net, adam };
        let text = ck.to_text();
        let back = NetCheckpoint::from_text(&text).unwrap();
        assert_eq!(back, ck);
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn truncated_checkpoint_rejected() {
        let spec = NetSpec::new(2, &[2], 1, Activation::Relu, OutputHead::Scalar).unwrap();
        let ck = NetCheckpoint {
            adam: AdamState::new(spec.num_params()),
            net: DenseNet::zeros(spec).unwrap(),
        };
        let text = ck.to_text();
        let cut: String = text.lines().take(4).map(|l| format!("{l}\n")).collect();
        assert!(NetCheckpoint::from_text(&cut).is_err());
    }
}
