//! Closed-form radial solution for the constant-exponent single-phase case.

use crate::error::{Error, Result};

/// Radial profile solving `-div(|grad u|^{p-2} grad u) = c` on the ball of the
/// given radius in `R^n` with `u = 0` on the boundary:
/// `u(r) = ((p-1)/p) (c/n)^{1/(p-1)} (R^{p/(p-1)} - r^{p/(p-1)})`.
#[derive(Clone, Copy, Debug)]
pub struct RadialSolution {
    pub p: f64,
    pub n: usize,
    pub c: f64,
    pub radius: f64,
}

impl RadialSolution {
    pub fn eval(&self, r: f64) -> f64 {
        let rr = r.clamp(0.0, self.radius);
        let pp = self.p / (self.p - 1.0);
        (self.p - 1.0) / self.p
            * (self.c / self.n as f64).powf(1.0 / (self.p - 1.0))
            * (self.radius.powf(pp) - rr.powf(pp))
    }

    pub fn center_value(&self) -> f64 {
        self.eval(0.0)
    }
}

pub fn analytic_radial_plaplace(p: f64, n: usize, c: f64, radius: f64) -> Result<RadialSolution> {
    if !(p > 1.0) {
        return Err(Error::invalid(format!("exponent p = {p} must exceed 1")));
    }
    if c < 0.0 {
        return Err(Error::invalid(format!("source c = {c} must be nonnegative")));
    }
    if !(radius > 0.0) {
        return Err(Error::invalid(format!("radius {radius} must be positive")));
    }
    if n < 2 {
        return Err(Error::invalid(format!("dimension {n} must be >= 2")));
    }
    Ok(RadialSolution { p, n, c, radius })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poisson_disk_profile() {
        let s = analytic_radial_plaplace(2.0, 2, 1.0, 1.0).unwrap();
        assert!((s.center_value() - 0.25).abs() < 1e-15);
        for r in [0.0, 0.3, 0.7, 1.0] {
            assert!((s.eval(r) - (1.0 - r * r) / 4.0).abs() < 1e-15);
        }
    }

    #[test]
    fn plaplace_center_values() {
        let s = analytic_radial_plaplace(1.5, 2, 1.0, 1.0).unwrap();
        assert!((s.center_value() - 1.0 / 12.0).abs() < 1e-15);
        let s = analytic_radial_plaplace(2.0, 3, 1.0, 1.0).unwrap();
        assert!((s.center_value() - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn satisfies_the_radial_equation() {
        // Substitute into r^{1-n} (r^{n-1} |u'|^{p-2} u')' = -c by central
        // finite differences of the flux.
        let (p, n, c, radius) = (1.7, 3usize, 2.5, 0.8);
        let s = analytic_radial_plaplace(p, n, c, radius).unwrap();
        let dr = 1e-6;
        for r in [0.2, 0.4, 0.6] {
            let flux = |rr: f64| {
                let du = (s.eval(rr + dr) - s.eval(rr - dr)) / (2.0 * dr);
                rr.powi(n as i32 - 1) * du.abs().powf(p - 2.0) * du
            };
            let div = (flux(r + dr) - flux(r - dr)) / (2.0 * dr) / r.powi(n as i32 - 1);
            assert!((div + c).abs() < 1e-3, "r = {r}: div = {div}");
        }
    }

    #[test]
    fn zero_source_gives_zero_profile() {
        let s = analytic_radial_plaplace(1.8, 2, 0.0, 1.0).unwrap();
        assert_eq!(s.eval(0.5), 0.0);
    }

    #[test]
    fn rejects_bad_exponents() {
        assert!(analytic_radial_plaplace(1.0, 2, 1.0, 1.0).is_err());
        assert!(analytic_radial_plaplace(2.0, 2, -1.0, 1.0).is_err());
    }
}
