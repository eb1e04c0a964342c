//! Plain-text environment snapshots (`coopcache-env v1`).
//!
//! Entries, in order:
//!
//! ```text
//! coopcache-env v1
//! area_side_m, num_sbs, comm_radius_m, max_users_per_sbs, ppp_density,
//! num_content, cache_capacity, content_size, sbs_spacing_m: <scalar>
//! epoch: <u64>
//! ranks: <num_content 1-based ranks>
//! skewness: <f64>
//! shuffle_period: <u64, 0 = fixed>
//! skew_choices: <f64...>
//! user_positions: <x y pairs>
//! user_requests: <0-based items>
//! user_links: <0/1 per user and SBS, user-major>
//! cache: <num_sbs * num_content fractions, SBS-major>
//! rng: <seed hex> <stream> <word position>
//! ```

use super::{
    check_len, CacheAllocation, EnvState, Environment, NetworkConfig, PopularityModel, UserBatch,
};
use crate::error::Result;
use crate::kv::{KvReader, KvWriter};

const FORMAT: &str = "coopcache-env";
const VERSION: u32 = 1;

impl Environment {
    pub fn snapshot(&self) -> String {
        let c = &self.config;
        let st = &self.state;
        let mut w = KvWriter::new(FORMAT, VERSION);
        w.put("area_side_m", c.area_side_m)
            .put("num_sbs", c.num_sbs)
            .put("comm_radius_m", c.comm_radius_m)
            .put("max_users_per_sbs", c.max_users_per_sbs)
            .put("ppp_density", c.ppp_density)
            .put("num_content", c.num_content)
            .put("cache_capacity", c.cache_capacity)
            .put("content_size", c.content_size)
            .put("sbs_spacing_m", c.sbs_spacing_m)
            .put("epoch", st.epoch)
            .put_seq("ranks", &st.popularity.ranks)
            .put("skewness", st.popularity.skewness)
            .put("shuffle_period", st.popularity.shuffle_period.unwrap_or(0))
            .put_seq("skew_choices", &st.popularity.skew_choices);
        let pos: Vec<f64> = st.users.positions().iter().flatten().copied().collect();
        let links: Vec<u8> = st.users.raw_links().iter().map(|&e| e as u8).collect();
        w.put_seq("user_positions", &pos)
            .put_seq("user_requests", st.users.requests())
            .put_seq("user_links", &links)
            .put_seq("cache", st.cache.as_slice())
            .put_rng("rng", &st.rng);
        w.finish()
    }

    pub fn from_snapshot(text: &str) -> Result<Self> {
        let mut r = KvReader::new(text, "environment snapshot", FORMAT, VERSION)?;
        let config = NetworkConfig {
            area_side_m: r.get("area_side_m")?,
            num_sbs: r.get("num_sbs")?,
            comm_radius_m: r.get("comm_radius_m")?,
            max_users_per_sbs: r.get("max_users_per_sbs")?,
            ppp_density: r.get("ppp_density")?,
            num_content: r.get("num_content")?,
            cache_capacity: r.get("cache_capacity")?,
            content_size: r.get("content_size")?,
            sbs_spacing_m: r.get("sbs_spacing_m")?,
        };
        config.validate()?;
        let epoch = r.get("epoch")?;
        let ranks: Vec<usize> = r.get_seq("ranks")?;
        check_len("snapshot ranks", config.num_content, ranks.len())?;
        let skewness = r.get("skewness")?;
        let period: u64 = r.get("shuffle_period")?;
        let skew_choices = r.get_seq("skew_choices")?;
        let pos: Vec<f64> = r.get_seq("user_positions")?;
        let requests: Vec<usize> = r.get_seq("user_requests")?;
        let links: Vec<u8> = r.get_seq("user_links")?;
        let cache: Vec<f64> = r.get_seq("cache")?;
        let rng = r.get_rng("rng")?;
        r.finish()?;

        let positions = pos.chunks(2).map(|p| [p[0], p[1]]).collect();
        let users = UserBatch::from_parts(
            config.num_sbs,
            positions,
            requests,
            links.into_iter().map(|e| e != 0).collect(),
        )?;
        let cache = CacheAllocation::from_vec(config.num_content, config.num_sbs, cache)?;
        let sbs = super::place_sbs(&config);
        Ok(Self {
            config,
            sbs,
            state: EnvState {
                epoch,
                users,
                cache,
                popularity: PopularityModel {
                    ranks,
                    skewness,
                    shuffle_period: (period > 0).then_some(period),
                    skew_choices,
                },
                rng,
            },
        })
    }
}
