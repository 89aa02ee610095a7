use crate::error::{Error, Result};

/// Linear exploration decay, clamped at `end` after `decay_steps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
    pub decay_steps: u64,
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        Self {
            start: 0.3,
            end: 0.1,
            decay_steps: 500_000,
        }
    }
}

impl EpsilonSchedule {
    pub fn new(start: f64, end: f64, decay_steps: u64) -> Result<Self> {
        let s = Self {
            start,
            end,
            decay_steps,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.start <= 1.0 && self.start >= self.end && self.end >= 0.0) {
            return Err(Error::config(format!(
                "exploration schedule needs 1 >= start >= end >= 0, got {} -> {}",
                self.start, self.end
            )));
        }
        Ok(())
    }

    pub fn epsilon_at(&self, step: u64) -> f64 {
        if self.decay_steps == 0 || step >= self.decay_steps {
            return self.end;
        }
        let frac = step as f64 / self.decay_steps as f64;
        self.start + (self.end - self.start) * frac
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_schedule_values() {
        let s = EpsilonSchedule::default();
        assert_eq!(s.epsilon_at(0), 0.3);
        assert!((s.epsilon_at(250_000) - 0.2).abs() < 1e-12);
        assert!((s.epsilon_at(500_000) - 0.1).abs() < 1e-12);
        assert!((s.epsilon_at(800_000) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn start_below_end_is_rejected() {
        assert!(EpsilonSchedule::new(0.1, 0.3, 10).is_err());
        assert!(EpsilonSchedule::new(0.3, -0.1, 10).is_err());
    }
}
