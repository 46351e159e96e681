//! Smooth periodic exact solution of the full model and its source terms.
//!
//! `phi = sin(pi t) sin(2 pi x) sin(2 pi y)`, `mu` from the chemical potential
//! relation and a divergence-free velocity with stream function
//! `xi = 0.2 sin(pi t) sin(2 pi x) sin(2 pi y) / (2 pi)`, `u = (xi_y, -xi_x)`.
//! The pressure is taken to be zero; the sources close both equations.

use crate::materials::{double_well, PhaseParams};
use core::f64::consts::PI;

const AMP: f64 = 0.2;
const K: f64 = 2.0 * PI;

/// Parameters of the accuracy test.
pub fn accuracy_params() -> PhaseParams {
    let eps = 0.04;
    PhaseParams {
        rho1: 100.0,
        rho2: 10.0,
        nu1: 10.0,
        nu2: 1.0,
        sigma: 10.0,
        eps,
        gamma: 1e-3 * eps,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Manufactured {
    pub params: PhaseParams,
}

impl Manufactured {
    pub fn new(params: PhaseParams) -> Self {
        Self { params }
    }

    fn basis(x: f64, y: f64) -> (f64, f64, f64, f64) {
        ((K * x).sin(), (K * x).cos(), (K * y).sin(), (K * y).cos())
    }

    pub fn phi(&self, x: f64, y: f64, t: f64) -> f64 {
        let (sx, _, sy, _) = Self::basis(x, y);
        (PI * t).sin() * sx * sy
    }

    pub fn grad_phi(&self, x: f64, y: f64, t: f64) -> [f64; 2] {
        let (sx, cx, sy, cy) = Self::basis(x, y);
        let a = (PI * t).sin() * K;
        [a * cx * sy, a * sx * cy]
    }

    /// `d mu / d phi` along the solution, so that `grad mu = g grad phi`.
    fn mu_slope(&self, phi: f64) -> f64 {
        let p = &self.params;
        p.sigma_tilde() * ((3.0 * phi * phi - 1.0) / p.eps + 2.0 * K * K * p.eps)
    }

    pub fn mu(&self, x: f64, y: f64, t: f64) -> f64 {
        let p = &self.params;
        let phi = self.phi(x, y, t);
        let lap = -2.0 * K * K * phi;
        p.sigma_tilde() * (double_well(phi).1 / p.eps - p.eps * lap)
    }

    pub fn stream(&self, x: f64, y: f64, t: f64) -> f64 {
        let (sx, _, sy, _) = Self::basis(x, y);
        AMP * (PI * t).sin() * sx * sy / K
    }

    pub fn velocity(&self, x: f64, y: f64, t: f64) -> [f64; 2] {
        let (sx, cx, sy, cy) = Self::basis(x, y);
        let a = AMP * (PI * t).sin();
        [a * sx * cy, -a * cx * sy]
    }

    /// `grad[i][j] = d u_i / d x_j`.
    pub fn velocity_grad(&self, x: f64, y: f64, t: f64) -> [[f64; 2]; 2] {
        let (sx, cx, sy, cy) = Self::basis(x, y);
        let a = AMP * (PI * t).sin() * K;
        [[a * cx * cy, -a * sx * sy], [a * sx * sy, -a * cx * cy]]
    }

    /// Source of the phase equation:
    /// `phi_t + u . grad phi - div(M(phi) grad mu)`.
    pub fn phase_source(&self, x: f64, y: f64, t: f64) -> f64 {
        let p = &self.params;
        let (sx, _, sy, _) = Self::basis(x, y);
        let phi = self.phi(x, y, t);
        let phi_t = PI * (PI * t).cos() * sx * sy;
        let g = self.grad_phi(x, y, t);
        let u = self.velocity(x, y, t);
        let g2 = g[0] * g[0] + g[1] * g[1];
        let lap_phi = -2.0 * K * K * phi;
        let slope = self.mu_slope(phi);
        let dslope = p.sigma_tilde() * 6.0 * phi / p.eps;
        let lap_mu = dslope * g2 + slope * lap_phi;
        let a = phi * phi - 1.0;
        let mob = p.gamma * a * a;
        let dmob = 4.0 * p.gamma * phi * a;
        phi_t + u[0] * g[0] + u[1] * g[1] - (dmob * slope * g2 + mob * lap_mu)
    }

    /// Body force per unit mass closing the momentum equation with zero
    /// pressure: `rho f = rho (u_t + (u . grad) u) - div(2 nu D(u)) - mu grad phi`.
    pub fn force(&self, x: f64, y: f64, t: f64) -> [f64; 2] {
        let p = &self.params;
        let (sx, cx, sy, cy) = Self::basis(x, y);
        let phi = self.phi(x, y, t);
        let rho = p.density(phi);
        let nu = p.viscosity(phi);
        let dnu = 0.5 * (p.nu1 - p.nu2);
        let at = AMP * PI * (PI * t).cos();
        let u_t = [at * sx * cy, -at * cx * sy];
        let u = self.velocity(x, y, t);
        let gu = self.velocity_grad(x, y, t);
        let conv = [
            u[0] * gu[0][0] + u[1] * gu[0][1],
            u[0] * gu[1][0] + u[1] * gu[1][1],
        ];
        let lap_u = [-2.0 * K * K * u[0], -2.0 * K * K * u[1]];
        let d = [
            [gu[0][0], 0.5 * (gu[0][1] + gu[1][0])],
            [0.5 * (gu[0][1] + gu[1][0]), gu[1][1]],
        ];
        let gp = self.grad_phi(x, y, t);
        let gnu = [dnu * gp[0], dnu * gp[1]];
        let mu = self.mu(x, y, t);
        let mut f = [0.0; 2];
        for i in 0..2 {
            let visc = nu * lap_u[i] + 2.0 * (d[i][0] * gnu[0] + d[i][1] * gnu[1]);
            f[i] = (rho * (u_t[i] + conv[i]) - visc - mu * gp[i]) / rho;
        }
        f
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const H: f64 = 1e-3;

    fn d1(f: impl Fn(f64) -> f64, x: f64) -> f64 {
        (-f(x + 2.0 * H) + 8.0 * f(x + H) - 8.0 * f(x - H) + f(x - 2.0 * H)) / (12.0 * H)
    }

    fn m() -> Manufactured {
        Manufactured::new(accuracy_params())
    }

    const POINTS: [(f64, f64, f64); 4] = [(0.13, 0.71, 0.3), (0.52, 0.27, 0.45), (0.9, 0.05, 0.1), (0.33, 0.38, 0.5)];

    #[test]
    fn stream_generates_velocity() {
        let m = m();
        for (x, y, t) in POINTS {
            let u = m.velocity(x, y, t);
            let sy = d1(|s| m.stream(x, s, t), y);
            let sx = d1(|s| m.stream(s, y, t), x);
            assert!((u[0] - sy).abs() < 1e-9 && (u[1] + sx).abs() < 1e-9);
            let g = m.velocity_grad(x, y, t);
            assert!((g[0][0] + g[1][1]).abs() < 1e-14);
        }
    }

    #[test]
    fn phase_source_matches_finite_differences() {
        let m = m();
        let p = m.params;
        for (x, y, t) in POINTS {
            let phi_t = d1(|s| m.phi(x, y, s), t);
            let u = m.velocity(x, y, t);
            let px = d1(|s| m.phi(s, y, t), x);
            let py = d1(|s| m.phi(x, s, t), y);
            let flux_x = |xx: f64, yy: f64| p.mobility(m.phi(xx, yy, t)) * d1(|s| m.mu(s, yy, t), xx);
            let flux_y = |xx: f64, yy: f64| p.mobility(m.phi(xx, yy, t)) * d1(|s| m.mu(xx, s, t), yy);
            let div = d1(|s| flux_x(s, y), x) + d1(|s| flux_y(x, s), y);
            let fd = phi_t + u[0] * px + u[1] * py - div;
            let exact = m.phase_source(x, y, t);
            assert!((fd - exact).abs() < 1e-6 * (1.0 + exact.abs()), "{fd} vs {exact}");
        }
    }

    #[test]
    fn chemical_potential_matches_finite_differences() {
        let m = m();
        let p = m.params;
        for (x, y, t) in POINTS {
            let lap = {
                let fxx = (m.phi(x + H, y, t) - 2.0 * m.phi(x, y, t) + m.phi(x - H, y, t)) / (H * H);
                let fyy = (m.phi(x, y + H, t) - 2.0 * m.phi(x, y, t) + m.phi(x, y - H, t)) / (H * H);
                fxx + fyy
            };
            let phi = m.phi(x, y, t);
            let fd = p.sigma_tilde() * (double_well(phi).1 / p.eps - p.eps * lap);
            assert!((fd - m.mu(x, y, t)).abs() < 1e-3 * (1.0 + fd.abs()));
        }
    }

    #[test]
    fn force_matches_finite_differences() {
        let m = m();
        let p = m.params;
        for (x, y, t) in POINTS {
            let phi = m.phi(x, y, t);
            let rho = p.density(phi);
            let u = m.velocity(x, y, t);
            let gp = m.grad_phi(x, y, t);
            let mu = m.mu(x, y, t);
            // Viscous stress sigma_ij = 2 nu D_ij from finite-difference gradients.
            let stress = |xx: f64, yy: f64, i: usize, j: usize| {
                let gx = |c: usize| d1(|s| m.velocity(s, yy, t)[c], xx);
                let gy = |c: usize| d1(|s| m.velocity(xx, s, t)[c], yy);
                let g = [[gx(0), gy(0)], [gx(1), gy(1)]];
                p.viscosity(m.phi(xx, yy, t)) * (g[i][j] + g[j][i])
            };
            let f = m.force(x, y, t);
            for i in 0..2 {
                let u_t = d1(|s| m.velocity(x, y, s)[i], t);
                let ux = d1(|s| m.velocity(s, y, t)[i], x);
                let uy = d1(|s| m.velocity(x, s, t)[i], y);
                let div = d1(|s| stress(s, y, i, 0), x) + d1(|s| stress(x, s, i, 1), y);
                let fd = (rho * (u_t + u[0] * ux + u[1] * uy) - div - mu * gp[i]) / rho;
                assert!((fd - f[i]).abs() < 1e-6 * (1.0 + f[i].abs()), "{fd} vs {}", f[i]);
            }
        }
    }

    #[test]
    fn solution_is_periodic() {
        let m = m();
        for (x, y, t) in POINTS {
            assert!((m.phi(x, y, t) - m.phi(x + 1.0, y, t)).abs() < 1e-12);
            assert!((m.stream(x, y, t) - m.stream(x, y + 1.0, t)).abs() < 1e-12);
        }
        assert_eq!(m.stream(0.0, 0.0, 0.3), 0.0);
    }
}
