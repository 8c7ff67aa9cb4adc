//! Adaptive Dormand–Prince 5(4) integrator with 4th-order dense output,
//! for complex-valued first-order systems.

use crate::{Error, Result, C64};

/// Right-hand side of `dy/dt = f(t, y)`.
pub trait OdeSystem {
    fn dim(&self) -> usize;
    fn rhs(&self, t: f64, y: &[C64], dy: &mut [C64]);
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    /// Upper bound on the internal step.
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for Dopri5 {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-12,
            h_max: f64::INFINITY,
            max_steps: 2_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

const C2: f64 = 0.2;
const C3: f64 = 0.3;
const C4: f64 = 0.8;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 0.2;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

struct Workspace {
    k: [Vec<C64>; 7],
    tmp: Vec<C64>,
    y_new: Vec<C64>,
    err: Vec<C64>,
    cont: [Vec<C64>; 5],
    interp: Vec<C64>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        let z = || vec![C64::new(0.0, 0.0); n];
        Self {
            k: [z(), z(), z(), z(), z(), z(), z()],
            tmp: z(),
            y_new: z(),
            err: z(),
            cont: [z(), z(), z(), z(), z()],
            interp: z(),
        }
    }
}

impl Dopri5 {
    pub fn with_tolerances(rtol: f64, atol: f64) -> Self {
        Self {
            rtol,
            atol,
            ..Self::default()
        }
    }

    pub fn with_h_max(mut self, h_max: f64) -> Self {
        self.h_max = h_max;
        self
    }

    /// Integrates from `times[0]` with initial value `y0`, calling
    /// `on_sample(i, t_i, y(t_i))` for every requested time (including the
    /// first). `times` must be non-decreasing.
    pub fn integrate<S, F>(&self, sys: &S, y0: Vec<C64>, times: &[f64], mut on_sample: F) -> Result<OdeStats>
    where
        S: OdeSystem + ?Sized,
        F: FnMut(usize, f64, &[C64]) -> Result<()>,
    {
        let n = sys.dim();
        assert_eq!(y0.len(), n, "initial state has wrong dimension");
        let mut stats = OdeStats::default();
        if times.is_empty() {
            return Ok(stats);
        }
        let mut t = times[0];
        let t_end = *times.last().unwrap();
        let mut y = y0;
        on_sample(0, t, &y)?;
        let mut next = 1;
        if next >= times.len() {
            return Ok(stats);
        }

        let mut w = Workspace::new(n);
        sys.rhs(t, &y, &mut w.k[0]);
        stats.rhs_evals += 1;

        let span = t_end - t;
        let mut h = self.initial_step(&y, &w.k[0], span).min(self.h_max);
        let mut last_rejected = false;

        while next < times.len() {
            if stats.accepted + stats.rejected >= self.max_steps {
                return Err(Error::numerical(t, "maximum number of integrator steps exceeded"));
            }
            let mut clipped = false;
            if t + h >= t_end {
                h = t_end - t;
                clipped = true;
            }
            if h <= 1e-14 * t.abs().max(1.0) {
                // Only exactly-representable remaining sample points can trigger this.
                if t_end - t <= 1e-12 * t.abs().max(1.0) {
                    while next < times.len() {
                        on_sample(next, times[next], &y)?;
                        next += 1;
                    }
                    break;
                }
                return Err(Error::numerical(t, format!("step size underflow (h = {h:e})")));
            }

            self.stages(sys, t, h, &y, &mut w);
            stats.rhs_evals += 6;

            let mut err = 0.0f64;
            for i in 0..n {
                let sc = self.atol + self.rtol * y[i].norm().max(w.y_new[i].norm());
                err = err.max(w.err[i].norm() / sc);
            }
            if !err.is_finite() {
                return Err(Error::numerical(t, "non-finite state or error estimate"));
            }

            if err <= 1.0 {
                stats.accepted += 1;
                let t_new = if clipped { t_end } else { t + h };
                // Dense output coefficients.
                for i in 0..n {
                    let ydiff = w.y_new[i] - y[i];
                    let bspl = w.k[0][i] * h - ydiff;
                    w.cont[0][i] = y[i];
                    w.cont[1][i] = ydiff;
                    w.cont[2][i] = bspl;
                    w.cont[3][i] = ydiff - w.k[6][i] * h - bspl;
                    w.cont[4][i] = (w.k[0][i] * D1
                        + w.k[2][i] * D3
                        + w.k[3][i] * D4
                        + w.k[4][i] * D5
                        + w.k[5][i] * D6
                        + w.k[6][i] * D7)
                        * h;
                }
                while next < times.len() && times[next] <= t_new {
                    let s = (times[next] - t) / h;
                    let s1 = 1.0 - s;
                    for i in 0..n {
                        w.interp[i] = w.cont[0][i]
                            + (w.cont[1][i]
                                + (w.cont[2][i] + (w.cont[3][i] + w.cont[4][i] * s1) * s) * s1)
                                * s;
                    }
                    on_sample(next, times[next], &w.interp)?;
                    next += 1;
                }
                t = t_new;
                std::mem::swap(&mut y, &mut w.y_new);
                // FSAL: k7 is f(t_new, y_new).
                w.k.swap(0, 6);

                let mut fac = 0.9 * err.max(1e-10).powf(-0.2);
                fac = fac.clamp(0.2, 5.0);
                if last_rejected {
                    fac = fac.min(1.0);
                }
                h = (h * fac).min(self.h_max);
                last_rejected = false;
            } else {
                stats.rejected += 1;
                let fac = (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
                h *= fac;
                last_rejected = true;
            }
        }
        Ok(stats)
    }

    fn initial_step(&self, y: &[C64], f0: &[C64], span: f64) -> f64 {
        let mut d0 = 0.0f64;
        let mut d1 = 0.0f64;
        for (yi, fi) in y.iter().zip(f0) {
            let sc = self.atol + self.rtol * yi.norm();
            d0 = d0.max(yi.norm() / sc);
            d1 = d1.max(fi.norm() / sc);
        }
        let h = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6 * span.max(1.0)
        } else {
            0.01 * d0 / d1
        };
        h.min(0.01 * span).max(1e-10 * span)
    }

    fn stages<S: OdeSystem + ?Sized>(&self, sys: &S, t: f64, h: f64, y: &[C64], w: &mut Workspace) {
        let n = y.len();
        let Workspace { k, tmp, y_new, err, .. } = w;
        let [k1, k2, k3, k4, k5, k6, k7] = k;

        for i in 0..n {
            tmp[i] = y[i] + k1[i] * (h * A21);
        }
        sys.rhs(t + C2 * h, tmp, k2);
        for i in 0..n {
            tmp[i] = y[i] + (k1[i] * A31 + k2[i] * A32) * h;
        }
        sys.rhs(t + C3 * h, tmp, k3);
        for i in 0..n {
            tmp[i] = y[i] + (k1[i] * A41 + k2[i] * A42 + k3[i] * A43) * h;
        }
        sys.rhs(t + C4 * h, tmp, k4);
        for i in 0..n {
            tmp[i] = y[i] + (k1[i] * A51 + k2[i] * A52 + k3[i] * A53 + k4[i] * A54) * h;
        }
        sys.rhs(t + C5 * h, tmp, k5);
        for i in 0..n {
            tmp[i] = y[i] + (k1[i] * A61 + k2[i] * A62 + k3[i] * A63 + k4[i] * A64 + k5[i] * A65) * h;
        }
        sys.rhs(t + h, tmp, k6);
        for i in 0..n {
            y_new[i] = y[i] + (k1[i] * A71 + k3[i] * A73 + k4[i] * A74 + k5[i] * A75 + k6[i] * A76) * h;
        }
        sys.rhs(t + h, y_new, k7);
        for i in 0..n {
            err[i] = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * h;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Oscillator {
        omega: f64,
        damping: f64,
    }

    impl OdeSystem for Oscillator {
        fn dim(&self) -> usize {
            1
        }
        fn rhs(&self, _t: f64, y: &[C64], dy: &mut [C64]) {
            dy[0] = C64::new(-self.damping, -self.omega) * y[0];
        }
    }

    #[test]
    fn damped_rotation_matches_exact_solution_at_dense_samples() {
        let sys = Oscillator {
            omega: 3.0,
            damping: 0.5,
        };
        let times: Vec<f64> = (0..=200).map(|i| i as f64 * 0.05).collect();
        let mut max_err = 0.0f64;
        Dopri5::default()
            .integrate(&sys, vec![C64::new(1.0, 0.0)], &times, |_, t, y| {
                let exact = (C64::new(-0.5, -3.0) * t).exp();
                max_err = max_err.max((y[0] - exact).norm());
                Ok(())
            })
            .unwrap();
        assert!(max_err < 1e-8, "max error {max_err}");
    }

    struct Driven;

    impl OdeSystem for Driven {
        fn dim(&self) -> usize {
            2
        }
        fn rhs(&self, t: f64, y: &[C64], dy: &mut [C64]) {
            // y0' = cos t, y1' = -y1
            dy[0] = C64::new(t.cos(), 0.0);
            dy[1] = -y[1];
        }
    }

    #[test]
    fn respects_h_max_and_samples_every_point() {
        let times: Vec<f64> = (0..=10).map(|i| i as f64).collect();
        let mut seen = Vec::new();
        let stats = Dopri5::default()
            .with_h_max(0.25)
            .integrate(&Driven, vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)], &times, |i, t, y| {
                seen.push(i);
                assert!((y[0].re - t.sin()).abs() < 1e-8);
                assert!((y[1].re - (-t).exp()).abs() < 1e-8);
                Ok(())
            })
            .unwrap();
        assert_eq!(seen, (0..=10).collect::<Vec<_>>());
        assert!(stats.accepted >= 40);
    }

    #[test]
    fn callback_errors_propagate() {
        let times = [0.0, 1.0, 2.0];
        let r = Dopri5::default().integrate(&Driven, vec![C64::new(0.0, 0.0); 2], &times, |i, t, _| {
            if i == 1 {
                Err(Error::numerical(t, "stop"))
            } else {
                Ok(())
            }
        });
        assert!(matches!(r, Err(Error::Numerical { .. })));
    }
}
