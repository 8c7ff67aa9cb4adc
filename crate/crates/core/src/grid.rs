use crate::{Error, PulseShape, Result};

/// Uniform output sampling `t_start, t_start + dt, ..., t_end` (`n_steps + 1`
/// points). Integrators adapt their internal step independently.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t_start: f64,
    t_end: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(t_start: f64, t_end: f64, n_steps: usize) -> Result<Self> {
        if !(t_end > t_start) || !t_start.is_finite() || !t_end.is_finite() {
            return Err(Error::invalid(format!(
                "grid end must exceed start, got [{t_start}, {t_end}]"
            )));
        }
        if n_steps < 2 {
            return Err(Error::invalid("grid needs at least two steps"));
        }
        Ok(Self {
            t_start,
            t_end,
            n_steps,
        })
    }

    /// `[0, 10 η]` with 4000 steps, for a pulse centred at `5 η`.
    pub fn default_for(pulse: &PulseShape) -> Self {
        Self {
            t_start: 0.0,
            t_end: pulse.t0() + 5.0 * pulse.eta(),
            n_steps: 4000,
        }
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }
    pub fn t_end(&self) -> f64 {
        self.t_end
    }
    pub fn n_steps(&self) -> usize {
        self.n_steps
    }
    pub fn dt(&self) -> f64 {
        (self.t_end - self.t_start) / self.n_steps as f64
    }

    pub fn time(&self, i: usize) -> f64 {
        if i == self.n_steps {
            self.t_end
        } else {
            self.t_start + i as f64 * self.dt()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.n_steps).map(|i| self.time(i)).collect()
    }

    /// True if `[t0 - 5η, t0 + 5η]` lies inside the grid.
    pub fn covers(&self, pulse: &PulseShape) -> bool {
        let tol = 1e-9 * pulse.eta();
        self.t_start <= pulse.t0() - 5.0 * pulse.eta() + tol
            && self.t_end >= pulse.t0() + 5.0 * pulse.eta() - tol
    }

    pub fn require_covers(&self, pulse: &PulseShape) -> Result<()> {
        if self.covers(pulse) {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "grid [{}, {}] does not cover the pulse window [{}, {}]",
                self.t_start,
                self.t_end,
                pulse.t0() - 5.0 * pulse.eta(),
                pulse.t0() + 5.0 * pulse.eta()
            )))
        }
    }

    pub fn with_n_steps(&self, n_steps: usize) -> Result<Self> {
        Self::new(self.t_start, self.t_end, n_steps)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_covers_pulse() {
        let p = PulseShape::centered_for_duration(40.0).unwrap();
        let g = TimeGrid::default_for(&p);
        assert!(g.covers(&p));
        assert_eq!(g.t_start(), 0.0);
        assert!((g.t_end() - 10.0 * p.eta()).abs() < 1e-12);
        assert_eq!(g.times().len(), 4001);
        assert_eq!(*g.times().last().unwrap(), g.t_end());
    }

    #[test]
    fn rejects_reversed_interval() {
        assert!(TimeGrid::new(1.0, 1.0, 10).is_err());
        assert!(TimeGrid::new(2.0, 1.0, 10).is_err());
    }

    #[test]
    fn short_grid_does_not_cover() {
        let p = PulseShape::new(10.0, 1.0).unwrap();
        let g = TimeGrid::new(0.0, 14.0, 100).unwrap();
        assert!(!g.covers(&p));
        assert!(g.require_covers(&p).is_err());
    }
}
