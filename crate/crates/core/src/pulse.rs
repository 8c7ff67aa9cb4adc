//! Temporal envelopes of the incoming single-photon wave packets.

use crate::{Error, Result, C64};

/// `2 √(2 ln 2)`: ratio between the amplitude FWHM and the Gaussian width.
pub fn fwhm_factor() -> f64 {
    2.0 * (2.0 * std::f64::consts::LN_2).sqrt()
}

/// Square-normalised Gaussian wave packet
/// `(η √π)^(-1/2) exp(-(t - t0)² / (2 η²))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseShape {
    t0: f64,
    eta: f64,
}

impl PulseShape {
    pub fn new(t0: f64, eta: f64) -> Result<Self> {
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(Error::invalid(format!("pulse width η must be > 0, got {eta}")));
        }
        if !t0.is_finite() {
            return Err(Error::invalid("pulse centre must be finite"));
        }
        Ok(Self { t0, eta })
    }

    /// Pulse of amplitude FWHM `tau_p` centred at `t0`.
    pub fn from_duration(t0: f64, tau_p: f64) -> Result<Self> {
        Self::new(t0, tau_p / fwhm_factor())
    }

    /// Pulse of duration `tau_p` centred at `5 η`, so that `[0, 10 η]`
    /// contains it with negligible truncation.
    pub fn centered_for_duration(tau_p: f64) -> Result<Self> {
        let eta = tau_p / fwhm_factor();
        Self::new(5.0 * eta, eta)
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }
    pub fn eta(&self) -> f64 {
        self.eta
    }
    pub fn tau_p(&self) -> f64 {
        self.eta * fwhm_factor()
    }

    pub fn amplitude(&self, t: f64) -> f64 {
        let x = (t - self.t0) / self.eta;
        (self.eta * std::f64::consts::PI.sqrt()).powf(-0.5) * (-0.5 * x * x).exp()
    }

    pub fn peak(&self) -> f64 {
        (self.eta * std::f64::consts::PI.sqrt()).powf(-0.5)
    }
}

/// Envelope value of a Gaussian pulse at time `t`.
pub fn gaussian_envelope(pulse: &PulseShape, t: f64) -> C64 {
    C64::new(pulse.amplitude(t), 0.0)
}

/// User-supplied envelope sampled on a uniform grid, linearly interpolated
/// and zero outside the sampled window.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledEnvelope {
    t_start: f64,
    dt: f64,
    values: Vec<C64>,
}

impl SampledEnvelope {
    pub fn new(t_start: f64, dt: f64, values: Vec<C64>) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::invalid("sample spacing must be > 0"));
        }
        if values.len() < 2 {
            return Err(Error::invalid("a sampled envelope needs at least two samples"));
        }
        Ok(Self { t_start, dt, values })
    }

    pub fn amplitude(&self, t: f64) -> C64 {
        let x = (t - self.t_start) / self.dt;
        if x < 0.0 {
            return C64::new(0.0, 0.0);
        }
        let i = x.floor() as usize;
        if i + 1 >= self.values.len() {
            return if i + 1 == self.values.len() && x == i as f64 {
                self.values[i]
            } else {
                C64::new(0.0, 0.0)
            };
        }
        let f = x - i as f64;
        self.values[i] * (1.0 - f) + self.values[i + 1] * f
    }

    pub fn support(&self) -> (f64, f64) {
        (
            self.t_start,
            self.t_start + self.dt * (self.values.len() - 1) as f64,
        )
    }
}

/// Input envelope of one port.
#[derive(Debug, Clone, PartialEq)]
pub enum Envelope {
    Gaussian(PulseShape),
    Sampled(SampledEnvelope),
}

impl Envelope {
    pub fn amplitude(&self, t: f64) -> C64 {
        match self {
            Envelope::Gaussian(p) => gaussian_envelope(p, t),
            Envelope::Sampled(s) => s.amplitude(t),
        }
    }

    /// Interval outside of which the envelope is negligible (±6 η for a
    /// Gaussian).
    pub fn support(&self) -> (f64, f64) {
        match self {
            Envelope::Gaussian(p) => (p.t0 - 6.0 * p.eta, p.t0 + 6.0 * p.eta),
            Envelope::Sampled(s) => s.support(),
        }
    }

    /// Shortest time scale over which the envelope changes; used to cap
    /// integrator steps so that a pulse is never stepped over.
    pub fn time_scale(&self) -> f64 {
        match self {
            Envelope::Gaussian(p) => p.eta,
            Envelope::Sampled(s) => s.dt,
        }
    }
}

impl From<PulseShape> for Envelope {
    fn from(p: PulseShape) -> Self {
        Envelope::Gaussian(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn peak_value() {
        let p = PulseShape::new(3.0, 2.0).unwrap();
        assert_eq!(p.amplitude(3.0), (2.0 * std::f64::consts::PI.sqrt()).powf(-0.5));
        assert_eq!(gaussian_envelope(&p, 3.0).im, 0.0);
    }

    #[test]
    fn normalised_over_six_widths() {
        let p = PulseShape::centered_for_duration(40.0).unwrap();
        let n = 20_000;
        let (a, b) = (p.t0() - 6.0 * p.eta(), p.t0() + 6.0 * p.eta());
        let dt = (b - a) / n as f64;
        let norm = crate::trapezoid(dt, (0..=n).map(|i| p.amplitude(a + i as f64 * dt).powi(2)));
        assert!((norm - 1.0).abs() < 1e-8, "norm = {norm}");
    }

    #[test]
    fn duration_is_full_width_at_half_amplitude() {
        let p = PulseShape::new(0.0, 1.7).unwrap();
        let half = p.eta() * (2.0 * std::f64::consts::LN_2).sqrt();
        for t in [-half, half] {
            assert!((p.amplitude(t) / p.peak() - 0.5).abs() < 1e-14);
            // intensity is a quarter of its peak there
            assert!((p.amplitude(t).powi(2) / p.peak().powi(2) - 0.25).abs() < 1e-14);
        }
        assert!((p.tau_p() - 2.0 * half).abs() < 1e-14);
    }

    #[test]
    fn duration_ratio_is_exact() {
        let p = PulseShape::from_duration(0.0, 40.0).unwrap();
        assert!((p.tau_p() / p.eta() - 2.0 * (2.0 * std::f64::consts::LN_2).sqrt()).abs() < 1e-15);
        assert!((p.tau_p() - 40.0).abs() < 1e-12);
    }

    #[test]
    fn non_positive_width_is_rejected() {
        assert!(matches!(PulseShape::new(0.0, 0.0), Err(Error::InvalidParameter(_))));
        assert!(matches!(PulseShape::new(0.0, -1.0), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn sampled_envelope_interpolates() {
        let s = SampledEnvelope::new(1.0, 0.5, vec![C64::new(0.0, 0.0), C64::new(2.0, 0.0), C64::new(0.0, 2.0)])
            .unwrap();
        assert_eq!(s.amplitude(0.9), C64::new(0.0, 0.0));
        assert_eq!(s.amplitude(1.25), C64::new(1.0, 0.0));
        assert_eq!(s.amplitude(1.75), C64::new(1.0, 1.0));
        assert_eq!(s.amplitude(2.0), C64::new(0.0, 2.0));
        assert_eq!(s.amplitude(2.1), C64::new(0.0, 0.0));
    }
}
