//! Learner checkpoints (`coopcache-learner v1`): configuration, counters,
//! random state, penalty schedule and every agent's networks, optimizer
//! moments, noise state and replay memory. Restoring and continuing is
//! indistinguishable from never having stopped.

use super::agents::{CentralizedAgent, FdAgent, FdAgents, PdAgents};
use super::{AgentSet, ControlMode, Learner, LearnerConfig, Objective};
use crate::env::NetworkConfig;
use crate::error::{Error, Result};
use crate::hddpg::{ActorCriticPair, HomotopySchedule, OuNoise, ReplayBuffer, TrackedNet};
use crate::kv::{KvReader, KvWriter};

const FORMAT: &str = "coopcache-learner";
const VERSION: u32 = 1;

fn parse_mode(s: &str) -> Result<ControlMode> {
    [
        ControlMode::Centralized,
        ControlMode::PartiallyDecentralized,
        ControlMode::FullyDecentralized,
    ]
    .into_iter()
    .find(|m| m.as_str() == s)
    .ok_or_else(|| Error::InvalidArgument(format!("unknown control mode `{s}`")))
}

fn objective_name(o: Objective) -> &'static str {
    match o {
        Objective::Homotopy => "homotopy",
        Objective::Plain => "plain",
    }
}

fn parse_objective(s: &str) -> Result<Objective> {
    match s {
        "homotopy" => Ok(Objective::Homotopy),
        "plain" => Ok(Objective::Plain),
        other => Err(Error::InvalidArgument(format!("unknown objective `{other}`"))),
    }
}

impl Learner {
    pub fn to_checkpoint(&self) -> String {
        let mut w = KvWriter::new(FORMAT, VERSION);
        w.put("mode", self.mode.as_str())
            .put("objective", objective_name(self.objective))
            .put(
                "config",
                serde_json::to_string(&self.config).expect("config serializes"),
            )
            .put("epochs_trained", self.epochs_trained)
            .put_rng("rng", &self.rng);
        self.schedule.write(&mut w, "learner");
        match &self.agents {
            AgentSet::Centralized(a) => {
                a.pair.write(&mut w, "c");
                a.noise.write(&mut w, "c");
                a.buffer.write(&mut w, "c");
            }
            AgentSet::Pd(a) => {
                w.put(
                    "network",
                    serde_json::to_string(a.network()).expect("network serializes"),
                )
                .put("agents", a.actors.len());
                for (b, actor) in a.actors.iter().enumerate() {
                    actor.write(&mut w, &format!("pd{b}.actor"));
                    a.noises[b].write(&mut w, &format!("pd{b}"));
                }
                a.critic.write(&mut w, "pd.critic");
                a.buffer.write(&mut w, "pd");
            }
            AgentSet::Fd(a) => {
                w.put("agents", a.agents.len());
                for (b, agent) in a.agents.iter().enumerate() {
                    let p = format!("fd{b}");
                    agent.pair.write(&mut w, &p);
                    agent.noise.write(&mut w, &p);
                    agent.buffer.write(&mut w, &p);
                }
            }
        }
        w.finish()
    }

    pub fn from_checkpoint(text: &str) -> Result<Self> {
        let mut r = KvReader::new(text, "learner checkpoint", FORMAT, VERSION)?;
        let mode = parse_mode(r.raw("mode")?.1)?;
        let objective = parse_objective(r.raw("objective")?.1)?;
        let config: LearnerConfig = serde_json::from_str(r.raw("config")?.1)?;
        let epochs_trained = r.get("epochs_trained")?;
        let rng = r.get_rng("rng")?;
        let schedule = HomotopySchedule::read(&mut r, "learner")?;
        let agents = match mode {
            ControlMode::Centralized => AgentSet::Centralized(CentralizedAgent {
                pair: ActorCriticPair::read(&mut r, "c")?,
                noise: OuNoise::read(&mut r, "c")?,
                buffer: ReplayBuffer::read(&mut r, "c")?,
            }),
            ControlMode::PartiallyDecentralized => {
                let network: NetworkConfig = serde_json::from_str(r.raw("network")?.1)?;
                let n: usize = r.get("agents")?;
                let mut actors = Vec::with_capacity(n);
                let mut noises = Vec::with_capacity(n);
                for b in 0..n {
                    actors.push(TrackedNet::read(&mut r, &format!("pd{b}.actor"))?);
                    noises.push(OuNoise::read(&mut r, &format!("pd{b}"))?);
                }
                let critic = TrackedNet::read(&mut r, "pd.critic")?;
                let buffer = ReplayBuffer::read(&mut r, "pd")?;
                AgentSet::Pd(PdAgents::from_parts(actors, critic, noises, buffer, network))
            }
            ControlMode::FullyDecentralized => {
                let n: usize = r.get("agents")?;
                let agents = (0..n)
                    .map(|b| {
                        let p = format!("fd{b}");
                        Ok(FdAgent {
                            pair: ActorCriticPair::read(&mut r, &p)?,
                            noise: OuNoise::read(&mut r, &p)?,
                            buffer: ReplayBuffer::read(&mut r, &p)?,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                AgentSet::Fd(FdAgents { agents })
            }
        };
        r.finish()?;
        config.validate()?;
        Ok(Self {
            mode,
            objective,
            config,
            schedule,
            rng,
            epochs_trained,
            agents,
        })
    }
}
