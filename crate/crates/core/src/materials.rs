//! Pointwise constitutive laws of the phase-field model.

use crate::error::{Error, Result};
use alloc::format;
use num_traits::Float;

/// Physical parameters of the two fluids and the diffuse interface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseParams {
    pub rho1: f64,
    pub rho2: f64,
    pub nu1: f64,
    pub nu2: f64,
    /// Physical surface tension.
    pub sigma: f64,
    /// Interface width.
    pub eps: f64,
    /// Mobility coefficient.
    pub gamma: f64,
}

impl PhaseParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("rho1", self.rho1),
            ("rho2", self.rho2),
            ("nu1", self.nu1),
            ("nu2", self.nu2),
            ("eps", self.eps),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("sigma", self.sigma), ("gamma", self.gamma)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be non-negative, got {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn density(&self, phi: f64) -> f64 {
        density(phi, self.rho1, self.rho2)
    }

    pub fn viscosity(&self, phi: f64) -> f64 {
        density(phi, self.nu1, self.nu2)
    }

    pub fn density_clamped(&self, phi: f64) -> f64 {
        clamped_average(phi, self.rho1, self.rho2)
    }

    pub fn viscosity_clamped(&self, phi: f64) -> f64 {
        clamped_average(phi, self.nu1, self.nu2)
    }

    pub fn mobility(&self, phi: f64) -> f64 {
        mobility(phi, self.gamma)
    }

    pub fn sigma_tilde(&self) -> f64 {
        scaled_surface_tension(self.sigma)
    }
}

/// `(W, W', W'')` of the quartic double well `W = (phi^2 - 1)^2 / 4`.
pub fn double_well(phi: f64) -> (f64, f64, f64) {
    let a = phi * phi - 1.0;
    (0.25 * a * a, phi * a, 3.0 * phi * phi - 1.0)
}

/// `W'(old) + W''(old) (new - old) / 2`.
pub fn linearized_dw(phi_old: f64, phi_new: f64) -> f64 {
    let (_, d1, d2) = double_well(phi_old);
    d1 + 0.5 * d2 * (phi_new - phi_old)
}

/// `gamma (phi^2 - 1)^2`.
pub fn mobility(phi: f64, gamma: f64) -> f64 {
    let a = phi * phi - 1.0;
    gamma * a * a
}

/// Linear average `v1 (1 + phi)/2 + v2 (1 - phi)/2`.
pub fn density(phi: f64, v1: f64, v2: f64) -> f64 {
    0.5 * v1 * (1.0 + phi) + 0.5 * v2 * (1.0 - phi)
}

/// Linear average clamped to the pure-phase values outside `[-1, 1]`.
pub fn clamped_average(phi: f64, v1: f64, v2: f64) -> f64 {
    if phi > 1.0 {
        v1
    } else if phi < -1.0 {
        v2
    } else {
        density(phi, v1, v2)
    }
}

/// `3 sigma / (2 sqrt 2)`.
pub fn scaled_surface_tension(sigma: f64) -> f64 {
    3.0 * sigma / (2.0 * 2.0.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn double_well_values() {
        assert_eq!(double_well(0.0), (0.25, 0.0, -1.0));
        assert_eq!(double_well(1.0), (0.0, 0.0, 2.0));
        assert_eq!(double_well(-1.0), (0.0, 0.0, 2.0));
        let h = 1e-5;
        let x = 0.3;
        let (_, d1, d2) = double_well(x);
        let fd1 = (double_well(x + h).0 - double_well(x - h).0) / (2.0 * h);
        let fd2 = (double_well(x + h).1 - double_well(x - h).1) / (2.0 * h);
        assert!((fd1 - d1).abs() < 1e-8);
        assert!((fd2 - d2).abs() < 1e-8);
    }

    #[test]
    fn linearization() {
        assert_eq!(linearized_dw(0.4, 0.4), double_well(0.4).1);
        assert!((linearized_dw(0.0, 0.2) + 0.1).abs() < 1e-15);
        // The linearization matches W'(old + d/2) + W''(old) d/2 - W''(old) d/2,
        // i.e. it tracks W' at the midpoint to second order in the increment.
        let old = 0.3;
        let mut prev = f64::INFINITY;
        for d in [1e-1, 1e-2, 1e-3] {
            let mid = old + 0.5 * d;
            let err = (linearized_dw(old, old + d) - double_well(mid).1).abs();
            assert!(err <= 2.0 * d * d);
            assert!(err < prev);
            prev = err;
        }
    }

    #[test]
    fn mobility_values() {
        assert_eq!(mobility(1.0, 0.3), 0.0);
        assert_eq!(mobility(-1.0, 0.3), 0.0);
        assert_eq!(mobility(0.0, 0.3), 0.3);
        assert_eq!(mobility(2.0, 0.5), 4.5);
    }

    #[test]
    fn averages_and_clamps() {
        assert_eq!(density(0.0, 1000.0, 100.0), 550.0);
        assert_eq!(clamped_average(2.0, 1000.0, 100.0), 1000.0);
        assert_eq!(clamped_average(-2.0, 1000.0, 100.0), 100.0);
        assert_eq!(density(1.0, 10.0, 1.0), 10.0);
        assert_eq!(density(-1.0, 10.0, 1.0), 1.0);
    }

    #[test]
    fn surface_tension_scaling() {
        assert_eq!(scaled_surface_tension(0.0), 0.0);
        assert!((scaled_surface_tension(24.5) - 25.986_174_208_605_618).abs() < 1e-12);
        assert!((scaled_surface_tension(1.96) - 2.078_893_936_688_449_4).abs() < 1e-12);
    }

    #[test]
    fn validation() {
        let p = PhaseParams {
            rho1: 1.0,
            rho2: 1.0,
            nu1: 1.0,
            nu2: 1.0,
            sigma: 0.0,
            eps: 0.1,
            gamma: 0.0,
        };
        assert!(p.validate().is_ok());
        assert!(PhaseParams { rho1: 0.0, ..p }.validate().is_err());
        assert!(PhaseParams { gamma: -1.0, ..p }.validate().is_err());
    }

    proptest! {
        #[test]
        fn clamped_values_are_bounded(phi in -10.0f64..10.0, a in 0.1f64..100.0, b in 0.1f64..100.0) {
            let v = clamped_average(phi, a, b);
            prop_assert!(v >= a.min(b) - 1e-12 && v <= a.max(b) + 1e-12);
            prop_assert!(mobility(phi, a) >= 0.0);
        }

        #[test]
        fn linearization_is_affine(old in -2.0f64..2.0, x in -2.0f64..2.0, y in -2.0f64..2.0, s in -3.0f64..3.0) {
            let base = linearized_dw(old, 0.0);
            let lx = linearized_dw(old, x) - base;
            let ly = linearized_dw(old, y) - base;
            let lxy = linearized_dw(old, x + s * y) - base;
            prop_assert!((lxy - (lx + s * ly)).abs() < 1e-10 * (1.0 + lx.abs() + ly.abs() * s.abs()));
        }
    }
}
