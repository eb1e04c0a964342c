use crate::error::{Error, Result};
use crate::kv::{KvReader, KvWriter};

/// Penalty weight annealed from `lambda_min` up to 0 in `deltas.len()`
/// increments, one every `period` epochs.
#[derive(Debug, Clone, PartialEq)]
pub struct HomotopySchedule {
    lambda: f64,
    lambda_min: f64,
    deltas: Vec<f64>,
    period: u64,
    applied: usize,
}

impl HomotopySchedule {
    /// The increments must be positive and sum to `-lambda_min`.
    pub fn new(lambda_min: f64, deltas: Vec<f64>, period: u64) -> Result<Self> {
        if !(lambda_min <= 0.0) || !lambda_min.is_finite() {
            return Err(Error::invalid("lambda_min", "must be finite and <= 0"));
        }
        if deltas.iter().any(|d| !(*d > 0.0) || !d.is_finite()) {
            return Err(Error::invalid("deltas", "must be positive"));
        }
        let total: f64 = deltas.iter().sum();
        if (total + lambda_min).abs() > 1e-12 {
            return Err(Error::invalid(
                "deltas",
                format!("sum {total} does not cancel lambda_min {lambda_min}"),
            ));
        }
        if period == 0 && !deltas.is_empty() {
            return Err(Error::invalid("homotopy_period", "must be positive"));
        }
        Ok(Self {
            lambda: lambda_min,
            lambda_min,
            deltas,
            period,
            applied: 0,
        })
    }

    /// `steps` equal increments of `-lambda_min / steps`.
    pub fn uniform(lambda_min: f64, steps: usize, period: u64) -> Result<Self> {
        if lambda_min == 0.0 {
            return Self::new(0.0, Vec::new(), period);
        }
        if steps == 0 {
            return Err(Error::invalid("homotopy_steps", "must be positive"));
        }
        Self::new(lambda_min, vec![-lambda_min / steps as f64; steps], period)
    }

    /// Constant zero weight: the objective of plain DDPG.
    pub fn disabled() -> Self {
        Self {
            lambda: 0.0,
            lambda_min: 0.0,
            deltas: Vec::new(),
            period: 0,
            applied: 0,
        }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn lambda_min(&self) -> f64 {
        self.lambda_min
    }

    pub fn period(&self) -> u64 {
        self.period
    }

    pub fn is_finished(&self) -> bool {
        self.applied == self.deltas.len()
    }

    /// Applies the next increment when `epoch` is a positive multiple of the
    /// period. The last increment lands exactly on 0. Returns whether the
    /// weight changed.
    pub fn step(&mut self, epoch: u64) -> bool {
        if self.is_finished() || epoch == 0 || epoch % self.period != 0 {
            return false;
        }
        self.lambda += self.deltas[self.applied];
        self.applied += 1;
        if self.is_finished() {
            self.lambda = 0.0;
        }
        true
    }

    pub(crate) fn write(&self, w: &mut KvWriter, prefix: &str) {
        w.put(
            &format!("{prefix}.homotopy"),
            format!(
                "{} {} {} {}",
                self.lambda, self.lambda_min, self.period, self.applied
            ),
        )
        .put_seq(&format!("{prefix}.homotopy_deltas"), &self.deltas);
    }

    pub(crate) fn read(r: &mut KvReader<'_>, prefix: &str) -> Result<Self> {
        let key = format!("{prefix}.homotopy");
        let (line, raw) = r.raw(&key)?;
        let bad = || Error::Parse {
            what: "homotopy schedule",
            line,
            reason: "expected `lambda lambda_min period applied`".into(),
        };
        let f: Vec<&str> = raw.split_whitespace().collect();
        if f.len() != 4 {
            return Err(bad());
        }
        let lambda: f64 = f[0].parse().map_err(|_| bad())?;
        let lambda_min: f64 = f[1].parse().map_err(|_| bad())?;
        let period: u64 = f[2].parse().map_err(|_| bad())?;
        let applied: usize = f[3].parse().map_err(|_| bad())?;
        let deltas: Vec<f64> = r.get_seq(&format!("{prefix}.homotopy_deltas"))?;
        let mut s = if deltas.is_empty() && lambda_min == 0.0 && period == 0 {
            Self::disabled()
        } else {
            Self::new(lambda_min, deltas, period)?
        };
        if applied > s.deltas.len() {
            return Err(bad());
        }
        s.lambda = lambda;
        s.applied = applied;
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reference_schedule_reaches_zero() {
        let mut s = HomotopySchedule::uniform(-0.005, 10, 1000).unwrap();
        assert_eq!(s.lambda(), -0.005);
        let mut changes = Vec::new();
        for t in 0..=12_000 {
            if s.step(t) {
                changes.push(t);
            }
        }
        assert_eq!(changes, (1..=10).map(|i| i * 1000).collect::<Vec<_>>());
        assert_eq!(s.lambda(), 0.0);
    }

    #[test]
    fn increments_match_tenth_of_floor() {
        let mut s = HomotopySchedule::uniform(-0.005, 10, 1000).unwrap();
        s.step(1000);
        assert!((s.lambda() - (-0.0045)).abs() < 1e-15);
    }

    #[test]
    fn zero_floor_stays_zero() {
        let mut s = HomotopySchedule::uniform(0.0, 10, 1000).unwrap();
        for t in 0..20_000 {
            s.step(t);
            assert_eq!(s.lambda(), 0.0);
        }
        assert_eq!(HomotopySchedule::disabled().lambda(), 0.0);
    }

    #[test]
    fn rejects_inconsistent_increments() {
        assert!(HomotopySchedule::new(-0.005, vec![0.001; 4], 10).is_err());
        assert!(HomotopySchedule::new(0.1, vec![], 10).is_err());
        assert!(HomotopySchedule::new(-0.002, vec![0.003, -0.001], 10).is_err());
    }

    proptest! {
        #[test]
        fn monotone_and_ends_at_zero(lmin in -1.0f64..0.0, steps in 1usize..30, period in 1u64..50) {
            let mut s = HomotopySchedule::uniform(lmin, steps, period).unwrap();
            let mut prev = s.lambda();
            for t in 0..period * (steps as u64 + 3) {
                s.step(t);
                prop_assert!(s.lambda() >= prev);
                prop_assert!(s.lambda() <= 0.0);
                prev = s.lambda();
            }
            prop_assert_eq!(s.lambda(), 0.0);
        }
    }

    #[test]
    fn round_trip() {
        for mut s in [
            HomotopySchedule::uniform(-0.005, 10, 1000).unwrap(),
            HomotopySchedule::disabled(),
        ] {
            s.step(1000);
            let mut w = KvWriter::new("t", 1);
            s.write(&mut w, "h");
            let text = w.finish();
            let mut r = KvReader::new(&text, "t", "t", 1).unwrap();
            assert_eq!(HomotopySchedule::read(&mut r, "h").unwrap(), s);
        }
    }
}
