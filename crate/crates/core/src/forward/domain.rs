//! Smooth bounded domains `D = {ell < 0}` with `|grad ell| = 1` on the boundary.
//!
//! Both kinds share one radial profile: `ell = s - r` for `s >= r/2`, and an
//! even degree-six polynomial inside that matches value and the first three
//! derivatives at `s = r/2`. The profile is C^3 and has no critical point
//! other than the center.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `ell` for the projection root-find.
pub const PROJECTION_TOL: f64 = 1e-12;
const PROJECTION_MAX_ITER: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainKind {
    Interval { lo: f64, hi: f64 },
    Ball { radius: f64, dim: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    kind: DomainKind,
    profile: RadialProfile,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct RadialProfile {
    radius: f64,
    knot: f64,
    c0: f64,
    c2: f64,
    c4: f64,
    c6: f64,
}

impl RadialProfile {
    fn new(radius: f64) -> Self {
        let a = 0.5 * radius;
        RadialProfile {
            radius,
            knot: a,
            c0: 5.0 * a / 16.0 - radius,
            c2: 15.0 / (16.0 * a),
            c4: -5.0 / (16.0 * a.powi(3)),
            c6: 1.0 / (16.0 * a.powi(5)),
        }
    }

    fn value(&self, s: f64) -> f64 {
        if s >= self.knot {
            s - self.radius
        } else {
            let s2 = s * s;
            self.c0 + s2 * (self.c2 + s2 * (self.c4 + s2 * self.c6))
        }
    }

    fn d1(&self, s: f64) -> f64 {
        if s >= self.knot {
            1.0
        } else {
            let s2 = s * s;
            s * (2.0 * self.c2 + s2 * (4.0 * self.c4 + 6.0 * self.c6 * s2))
        }
    }

    fn d2(&self, s: f64) -> f64 {
        if s >= self.knot {
            0.0
        } else {
            let s2 = s * s;
            2.0 * self.c2 + s2 * (12.0 * self.c4 + 30.0 * self.c6 * s2)
        }
    }

    /// `d1(s) / s`, finite at the center.
    fn d1_over_s(&self, s: f64) -> f64 {
        if s >= self.knot {
            1.0 / s
        } else {
            let s2 = s * s;
            2.0 * self.c2 + s2 * (4.0 * self.c4 + 6.0 * self.c6 * s2)
        }
    }
}

impl Domain {
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::DegenerateDomain(format!("interval ({lo}, {hi})")));
        }
        Ok(Domain { kind: DomainKind::Interval { lo, hi }, profile: RadialProfile::new(0.5 * (hi - lo)) })
    }

    pub fn from_kind(kind: DomainKind) -> Result<Self> {
        match kind {
            DomainKind::Interval { lo, hi } => Domain::interval(lo, hi),
            DomainKind::Ball { radius, dim } => Domain::ball(radius, dim),
        }
    }

    pub fn ball(radius: f64, dim: usize) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) || dim == 0 {
            return Err(Error::DegenerateDomain(format!("ball of radius {radius} in dimension {dim}")));
        }
        Ok(Domain { kind: DomainKind::Ball { radius, dim }, profile: RadialProfile::new(radius) })
    }

    pub fn kind(&self) -> DomainKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        match self.kind {
            DomainKind::Interval { .. } => 1,
            DomainKind::Ball { dim, .. } => dim,
        }
    }

    /// `(lo, hi)` for an interval.
    pub fn bounds_1d(&self) -> Option<(f64, f64)> {
        match self.kind {
            DomainKind::Interval { lo, hi } => Some((lo, hi)),
            DomainKind::Ball { .. } => None,
        }
    }

    /// Every point of the closure satisfies `|x| <= bounding_radius`.
    pub fn bounding_radius(&self) -> f64 {
        match self.kind {
            DomainKind::Interval { lo, hi } => lo.abs().max(hi.abs()),
            DomainKind::Ball { radius, .. } => radius,
        }
    }

    fn centered(&self, x: &[f64]) -> (f64, f64) {
        match self.kind {
            DomainKind::Interval { lo, hi } => {
                let s = x[0] - 0.5 * (lo + hi);
                (s.abs(), s.signum())
            }
            DomainKind::Ball { .. } => (x.iter().map(|v| v * v).sum::<f64>().sqrt(), 1.0),
        }
    }

    pub fn ell(&self, x: &[f64]) -> f64 {
        self.profile.value(self.centered(x).0)
    }

    pub fn grad(&self, x: &[f64], out: &mut [f64]) {
        match self.kind {
            DomainKind::Interval { .. } => {
                let (s, sign) = self.centered(x);
                out[0] = if s == 0.0 { 0.0 } else { sign * self.profile.d1(s) };
            }
            DomainKind::Ball { .. } => {
                let (rho, _) = self.centered(x);
                let k = self.profile.d1_over_s(rho);
                for (o, v) in out.iter_mut().zip(x) {
                    *o = k * v;
                }
            }
        }
    }

    pub fn grad_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim()];
        self.grad(x, &mut g);
        g
    }

    /// Row-major `d x d` Hessian.
    pub fn hessian(&self, x: &[f64], out: &mut [f64]) {
        match self.kind {
            DomainKind::Interval { .. } => out[0] = self.profile.d2(self.centered(x).0),
            DomainKind::Ball { dim, .. } => {
                let (rho, _) = self.centered(x);
                let tangential = self.profile.d1_over_s(rho);
                let normal = self.profile.d2(rho);
                for i in 0..dim {
                    for j in 0..dim {
                        let radial = if rho > 0.0 { x[i] * x[j] / (rho * rho) } else { 0.0 };
                        let id = if i == j { 1.0 } else { 0.0 };
                        out[i * dim + j] = normal * radial + tangential * (id - radial);
                    }
                }
            }
        }
    }

    pub fn contains_closure(&self, x: &[f64], tol: f64) -> bool {
        self.ell(x) <= tol
    }

    /// One-step implicit projection `X = p - delta grad ell(X)` with
    /// `ell(X) = 0` and `delta >= 0`; the identity when `ell(p) <= 0`.
    ///
    /// Returns the projected point and `delta`.
    pub fn project(&self, predictor: &[f64], time: f64) -> Result<(Vec<f64>, f64)> {
        let excess = self.ell(predictor);
        if excess <= 0.0 {
            return Ok((predictor.to_vec(), 0.0));
        }
        if excess > self.bounding_radius() {
            return Err(Error::StepRejected { time, excess });
        }
        let d = self.dim();
        let mut x = predictor.to_vec();
        let mut normal = vec![0.0; d];
        let mut trial = vec![0.0; d];
        let mut delta = 0.0;
        for _ in 0..PROJECTION_MAX_ITER {
            self.grad(&x, &mut normal);
            delta = self.solve_along(predictor, &normal, &mut trial, time)?;
            let moved: f64 = x.iter().zip(&trial).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            x.copy_from_slice(&trial);
            if moved <= 1e-13 && self.ell(&x).abs() <= PROJECTION_TOL {
                return Ok((x, delta));
            }
        }
        if self.ell(&x).abs() <= PROJECTION_TOL {
            return Ok((x, delta));
        }
        Err(Error::StepRejected { time, excess })
    }

    /// Root of `delta -> ell(p - delta n)` by Newton with bisection fallback.
    fn solve_along(&self, p: &[f64], n: &[f64], x: &mut [f64], time: f64) -> Result<f64> {
        let at = |delta: f64, x: &mut [f64]| {
            for ((xi, pi), ni) in x.iter_mut().zip(p).zip(n) {
                *xi = pi - delta * ni;
            }
            self.ell(x)
        };
        let mut lo = 0.0;
        let mut hi = self.ell(p).max(1e-12);
        let mut tries = 0;
        while at(hi, x) > 0.0 {
            hi *= 2.0;
            tries += 1;
            if tries > 60 {
                return Err(Error::StepRejected { time, excess: self.ell(p) });
            }
        }
        let mut delta = self.ell(p);
        let mut grad = vec![0.0; n.len()];
        for _ in 0..PROJECTION_MAX_ITER {
            let val = at(delta, x);
            if val.abs() <= PROJECTION_TOL {
                return Ok(delta);
            }
            if val > 0.0 {
                lo = delta;
            } else {
                hi = delta;
            }
            self.grad(x, &mut grad);
            let slope: f64 = -grad.iter().zip(n).map(|(g, v)| g * v).sum::<f64>();
            let newton = if slope != 0.0 { delta - val / slope } else { f64::NAN };
            delta = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        }
        let val = at(delta, x);
        if val.abs() <= PROJECTION_TOL {
            Ok(delta)
        } else {
            Err(Error::StepRejected { time, excess: self.ell(p) })
        }
    }

    pub fn sample_boundary<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self.kind {
            DomainKind::Interval { lo, hi } => vec![if rng.random_bool(0.5) { lo } else { hi }],
            DomainKind::Ball { radius, dim } => {
                let dir = random_direction(rng, dim);
                dir.into_iter().map(|v| radius * v).collect()
            }
        }
    }

    pub fn sample_closure<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self.kind {
            DomainKind::Interval { lo, hi } => vec![rng.random_range(lo..=hi)],
            DomainKind::Ball { radius, dim } => {
                let dir = random_direction(rng, dim);
                let r = radius * rng.random::<f64>().powf(1.0 / dim as f64);
                dir.into_iter().map(|v| r * v).collect()
            }
        }
    }
}

fn random_direction<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn unit_gradient_on_boundary() {
        let d = Domain::interval(-1.0, 2.0).unwrap();
        assert!(d.ell(&[-1.0]).abs() < 1e-15 && d.ell(&[2.0]).abs() < 1e-15);
        assert_eq!(d.grad_vec(&[2.0]), vec![1.0]);
        assert_eq!(d.grad_vec(&[-1.0]), vec![-1.0]);
        let b = Domain::ball(1.5, 3).unwrap();
        let mut rng = stream(1, "t", 0);
        for _ in 0..100 {
            let x = b.sample_boundary(&mut rng);
            assert!(b.ell(&x).abs() < 1e-10);
            let g = b.grad_vec(&x);
            assert!((g.iter().map(|v| v * v).sum::<f64>().sqrt() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn profile_is_c3_at_knot() {
        let p = RadialProfile::new(1.0);
        let a = p.knot;
        let h = 1e-6;
        // inner polynomial versus linear continuation
        let inner = |s: f64| p.c0 + p.c2 * s * s + p.c4 * s.powi(4) + p.c6 * s.powi(6);
        assert!((inner(a) - (a - 1.0)).abs() < 1e-14);
        assert!(((inner(a + h) - inner(a - h)) / (2.0 * h) - 1.0).abs() < 1e-8);
        let d2 = |s: f64| 2.0 * p.c2 + 12.0 * p.c4 * s * s + 30.0 * p.c6 * s.powi(4);
        assert!(d2(a).abs() < 1e-12);
        let d3 = |s: f64| 24.0 * p.c4 * s + 120.0 * p.c6 * s.powi(3);
        assert!(d3(a).abs() < 1e-12);
    }

    #[test]
    fn sign_structure() {
        let d = Domain::interval(-1.0, 1.0).unwrap();
        for x in [-0.99, -0.5, 0.0, 0.3, 0.999] {
            assert!(d.ell(&[x]) < 0.0);
        }
        for x in [-1.01, 1.2, 5.0] {
            assert!(d.ell(&[x]) > 0.0);
        }
    }

    #[test]
    fn hessian_matches_finite_differences() {
        let b = Domain::ball(1.0, 2).unwrap();
        let x = [0.2, -0.1];
        let mut h = [0.0; 4];
        b.hessian(&x, &mut h);
        let eps = 1e-6;
        for j in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[j] += eps;
            xm[j] -= eps;
            let gp = b.grad_vec(&xp);
            let gm = b.grad_vec(&xm);
            for i in 0..2 {
                let fd = (gp[i] - gm[i]) / (2.0 * eps);
                assert!((fd - h[i * 2 + j]).abs() < 1e-6, "H[{i}{j}] {fd} vs {}", h[i * 2 + j]);
            }
        }
    }

    #[test]
    fn projection_is_exact_for_interval_and_ball() {
        let d = Domain::interval(-1.0, 1.0).unwrap();
        let (x, delta) = d.project(&[1.3], 0.0).unwrap();
        assert_eq!(x, vec![1.0]);
        assert!((delta - 0.3).abs() < 1e-15);
        let (x, delta) = d.project(&[0.4], 0.0).unwrap();
        assert_eq!((x, delta), (vec![0.4], 0.0));
        let b = Domain::ball(2.0, 2).unwrap();
        let (x, delta) = b.project(&[1.8, 2.4], 0.0).unwrap();
        assert!((x[0] - 1.2).abs() < 1e-12 && (x[1] - 1.6).abs() < 1e-12);
        assert!((delta - 1.0).abs() < 1e-12);
    }

    #[test]
    fn far_predictor_is_rejected() {
        let d = Domain::interval(-1.0, 1.0).unwrap();
        assert!(matches!(d.project(&[10.0], 0.5), Err(Error::StepRejected { .. })));
    }

    #[test]
    fn degenerate_domains_are_rejected() {
        assert!(Domain::interval(1.0, 1.0).is_err());
        assert!(Domain::ball(0.0, 2).is_err());
    }
}
