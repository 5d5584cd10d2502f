//! The function `rho_2`: `u rho_2'(u) = rho_2(u) - 2 rho_2(u - 1)` for `u > 1`,
//! `rho_2(u) = u` on `[0, 1]`.
//!
//! Integration is classical RK4, restarted at every integer so each step
//! stays inside one unit interval where the solution is smooth. The delay
//! term at half steps comes from cubic interpolation on the previous unit
//! interval.

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::sums::{friable_sum, Weight};

/// Cubic Lagrange weights for the value halfway between nodes 1 and 2 of four
/// equally spaced nodes, and for the two one-sided variants.
const MID_INTERIOR: [f64; 4] = [-1.0 / 16.0, 9.0 / 16.0, 9.0 / 16.0, -1.0 / 16.0];
const MID_FIRST: [f64; 4] = [5.0 / 16.0, 15.0 / 16.0, -5.0 / 16.0, 1.0 / 16.0];
const MID_LAST: [f64; 4] = [1.0 / 16.0, -5.0 / 16.0, 15.0 / 16.0, 5.0 / 16.0];

#[derive(Debug, Clone)]
pub struct Rho2Table {
    step: f64,
    per_unit: usize,
    u_max: f64,
    /// `values[i] = rho_2(i h)`, through the last integer at or above `u_max`
    values: Vec<f64>,
}

/// Value at the midpoint between local nodes `i` and `i + 1` of a segment
/// holding `seg.len() = m + 1` nodes.
fn segment_midpoint(seg: &[f64], i: usize) -> f64 {
    let m = seg.len() - 1;
    let (w, base) = if i == 0 {
        (MID_FIRST, 0)
    } else if i + 1 == m {
        (MID_LAST, m - 3)
    } else {
        (MID_INTERIOR, i - 1)
    };
    w.iter().zip(&seg[base..base + 4]).map(|(a, b)| a * b).sum()
}

impl Rho2Table {
    pub fn build(u_max: f64, step: f64) -> Result<Self> {
        if !(u_max >= 1.0) || !u_max.is_finite() {
            return Err(LabError::InvalidArgument(format!("u_max = {u_max} must be at least 1")));
        }
        if !(step > 0.0 && step <= 1e-3) {
            return Err(LabError::InvalidArgument(format!(
                "step {step} too coarse; need 0 < h <= 1e-3"
            )));
        }
        let per_unit = (1.0 / step).round() as usize;
        if ((per_unit as f64) * step - 1.0).abs() > 1e-9 {
            return Err(LabError::InvalidArgument(format!(
                "step {step} must divide 1 so that integers are grid points"
            )));
        }
        let h = 1.0 / per_unit as f64;
        let units = u_max.ceil() as usize;
        let mut values: Vec<f64> = (0..=per_unit).map(|i| i as f64 * h).collect();
        values.reserve(per_unit * units.saturating_sub(1));
        for j in 1..units {
            let prev_start = (j - 1) * per_unit;
            for i in 0..per_unit {
                let u = j as f64 + i as f64 * h;
                let (d0, dm, d1) = {
                    let seg = &values[prev_start..=prev_start + per_unit];
                    (seg[i], segment_midpoint(seg, i), seg[i + 1])
                };
                let y = values[j * per_unit + i];
                let f = |u: f64, y: f64, delay: f64| (y - 2.0 * delay) / u;
                let k1 = f(u, y, d0);
                let k2 = f(u + h / 2.0, y + h / 2.0 * k1, dm);
                let k3 = f(u + h / 2.0, y + h / 2.0 * k2, dm);
                let k4 = f(u + h, y + h * k3, d1);
                values.push(y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
            }
        }
        Ok(Self {
            step: h,
            per_unit,
            u_max,
            values,
        })
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn u_max(&self) -> f64 {
        self.u_max
    }

    /// Grid nodes `(u, rho_2(u))` up to `u_max`.
    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let last = (self.u_max * self.per_unit as f64).round() as usize;
        self.values[..=last.min(self.values.len() - 1)]
            .iter()
            .enumerate()
            .map(|(i, &v)| (i as f64 * self.step, v))
    }

    /// `rho_2(u)` by cubic interpolation inside the unit interval containing `u`.
    pub fn value(&self, u: f64) -> Result<f64> {
        if !(0.0..=self.u_max).contains(&u) {
            return Err(LabError::InvalidArgument(format!(
                "u = {u} outside the table [0, {}]",
                self.u_max
            )));
        }
        if u <= 1.0 {
            return Ok(u);
        }
        let m = self.per_unit;
        let pos = u * m as f64;
        let node = pos.round();
        if (pos - node).abs() < 1e-9 {
            return Ok(self.values[node as usize]);
        }
        let j = (u.floor() as usize).min(self.values.len() / m - 1);
        let seg = &self.values[j * m..=(j + 1) * m];
        let local = pos - (j * m) as f64;
        let base = (local.floor() as usize).saturating_sub(1).min(m - 3);
        let t = local - base as f64;
        let w = [
            -(t - 1.0) * (t - 2.0) * (t - 3.0) / 6.0,
            t * (t - 2.0) * (t - 3.0) / 2.0,
            -t * (t - 1.0) * (t - 3.0) / 2.0,
            t * (t - 1.0) * (t - 2.0) / 6.0,
        ];
        Ok(w.iter().zip(&seg[base..base + 4]).map(|(a, b)| a * b).sum())
    }

    /// Derivative at node `i` by five-point stencils that stay inside one unit interval.
    fn derivative_at(&self, i: usize) -> f64 {
        let m = self.per_unit;
        let f = &self.values;
        let h12 = 12.0 * self.step;
        match i % m {
            // integer node: backward stencil from the interval on the left
            0 => (25.0 * f[i] - 48.0 * f[i - 1] + 36.0 * f[i - 2] - 16.0 * f[i - 3] + 3.0 * f[i - 4]) / h12,
            1 => (-3.0 * f[i - 1] - 10.0 * f[i] + 18.0 * f[i + 1] - 6.0 * f[i + 2] + f[i + 3]) / h12,
            l if l + 1 == m => {
                (3.0 * f[i + 1] + 10.0 * f[i] - 18.0 * f[i - 1] + 6.0 * f[i - 2] - f[i - 3]) / h12
            }
            _ => (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) / h12,
        }
    }

    /// Largest `|u rho_2'(u) - rho_2(u) + 2 rho_2(u - 1)|` over grid nodes in
    /// `(1, min(u_max, u_end)]`, with `rho_2'` from finite differences of the table.
    pub fn residual(&self, u_end: f64) -> ResidualReport {
        let m = self.per_unit;
        let last = ((u_end.min(self.u_max)) * m as f64).round() as usize;
        let last = last.min(self.values.len() - 1);
        let mut report = ResidualReport {
            max_abs: 0.0,
            at_u: 1.0,
            points: 0,
        };
        for i in m + 1..=last {
            let u = i as f64 * self.step;
            let r = u * self.derivative_at(i) - self.values[i] + 2.0 * self.values[i - m];
            report.points += 1;
            if r.abs() > report.max_abs {
                report.max_abs = r.abs();
                report.at_u = u;
            }
        }
        report
    }

    /// Smallest table value on `[0, u_max]` excluding `u = 0`.
    pub fn min_positive_part(&self) -> f64 {
        self.nodes().skip(1).map(|(_, v)| v).fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ResidualReport {
    pub max_abs: f64,
    pub at_u: f64,
    pub points: usize,
}

/// `rho_2(2) = 4 - 4 log 2`, from integrating the equation on `[1, 2]`.
pub fn rho2_at_two() -> f64 {
    4.0 - 4.0 * std::f64::consts::LN_2
}

/// Closed form on `[1, 2]`: `3u - 2u log u - 2`.
pub fn rho2_closed_form_1_2(u: f64) -> f64 {
    3.0 * u - 2.0 * u * u.ln() - 2.0
}

/// `Psi(x, y; tau) / (rho_2(u) x log y)` with `u = log x / log y`.
pub fn bruijn_ratio(table: &Rho2Table, x: f64, y: f64) -> Result<f64> {
    if !(2.0 <= y && y <= x) {
        return Err(LabError::InvalidArgument(format!(
            "need 2 <= y <= x, got x = {x}, y = {y}"
        )));
    }
    let u = x.ln() / y.ln();
    let rho = table.value(u)?;
    let psi = friable_sum(x, y, Weight::Tau)?.value;
    Ok(psi / (rho * x * y.ln()))
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayPoint {
    pub u: f64,
    pub rho2: f64,
    /// `-log rho_2(u) / (u log u)`
    pub profile: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayProfile {
    pub points: Vec<DecayPoint>,
    /// Every profile value with `5 <= u <= 10` lies in `[0.5, 1.5]`.
    pub in_window: bool,
}

/// Profile values on the grid `u = 1.5, 2, 2.5, ...` up to `u_max`.
pub fn decay_profile(table: &Rho2Table) -> Result<DecayProfile> {
    let mut points = Vec::new();
    let mut u = 1.5;
    while u <= table.u_max() + 1e-12 {
        let rho2 = table.value(u)?;
        points.push(DecayPoint {
            u,
            rho2,
            profile: -rho2.ln() / (u * u.ln()),
        });
        u += 0.5;
    }
    let in_window = points
        .iter()
        .filter(|p| (5.0..=10.0).contains(&p.u))
        .all(|p| (0.5..=1.5).contains(&p.profile));
    Ok(DecayProfile { points, in_window })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn initial_segment_and_closed_form() {
        let t = Rho2Table::build(3.0, 1e-3).unwrap();
        assert_eq!(t.value(0.5).unwrap(), 0.5);
        assert_eq!(t.value(1.0).unwrap(), 1.0);
        assert!((t.value(2.0).unwrap() - rho2_at_two()).abs() < 1e-9);
        for &u in &[1.25, 1.5, 1.8765] {
            assert!((t.value(u).unwrap() - rho2_closed_form_1_2(u)).abs() < 1e-9, "u={u}");
        }
        assert!((rho2_at_two() - 1.2274113).abs() < 1e-7);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(Rho2Table::build(0.5, 1e-3).is_err());
        assert!(Rho2Table::build(5.0, 1e-2).is_err());
        assert!(Rho2Table::build(5.0, 3e-4).is_err());
        let t = Rho2Table::build(2.0, 1e-3).unwrap();
        assert!(t.value(2.5).is_err());
        assert!(t.value(-0.1).is_err());
    }

    #[test]
    fn midpoint_weights_reproduce_cubics() {
        let seg: Vec<f64> = (0..=6).map(|i| {
            let x = i as f64;
            x * x * x - 2.0 * x + 1.0
        }).collect();
        for i in 0..6 {
            let x = i as f64 + 0.5;
            assert!((segment_midpoint(&seg, i) - (x * x * x - 2.0 * x + 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn residual_small() {
        let t = Rho2Table::build(4.0, 1e-3).unwrap();
        let r = t.residual(4.0);
        assert!(r.max_abs < 1e-8, "{r:?}");
        assert_eq!(r.points, 3000);
    }

    #[test]
    fn halving_step_agrees() {
        let a = Rho2Table::build(10.0, 1e-3).unwrap();
        let b = Rho2Table::build(10.0, 5e-4).unwrap();
        let worst = a
            .nodes()
            .map(|(u, v)| (b.value(u).unwrap() - v).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-8, "{worst}");
    }

    #[test]
    fn positive_and_decaying() {
        let t = Rho2Table::build(10.0, 1e-3).unwrap();
        assert!(t.min_positive_part() > 0.0);
        let r10 = t.value(10.0).unwrap();
        assert!(r10 > 0.0 && r10 < 1e-6, "{r10}");
        let prof = decay_profile(&t).unwrap();
        // the normalized exponent grows towards 1 from below
        let tail: Vec<f64> = prof.points.iter().filter(|p| p.u >= 3.0).map(|p| p.profile).collect();
        assert!(tail.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn interpolation_between_nodes() {
        let t = Rho2Table::build(2.0, 1e-3).unwrap();
        for &u in &[1.00037, 1.4999, 1.99971] {
            assert!((t.value(u).unwrap() - rho2_closed_form_1_2(u)).abs() < 1e-12, "u={u}");
        }
    }
}
