//! Convex-analysis toolkit: evaluation, resolvents, Moreau envelopes and
//! subgradient certificates for a small family of convex functions on R^m.
//!
//! Every function in the family is proper, convex, lower semicontinuous and
//! normalized so that `phi(y) >= phi(0) = 0`.

mod compat;
mod selftest;
mod splitting;

pub use compat::{check_compatibility, CompatSample, CompatibilityReport, ConditionResidual};
pub use selftest::{builtin_specs, selftest, SelftestRow, SELFTEST_EPSILONS};
pub use splitting::{joint_resolvent, Envelope, JointResolvent, ProxOperator};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for membership in an indicator box.
pub const DOM_TOL: f64 = 1e-12;
/// Stopping tolerance of the splitting iteration for `sum` specs.
pub const SPLIT_TOL: f64 = 1e-10;
/// Iteration cap of the splitting iteration for `sum` specs.
pub const SPLIT_MAX_ITER: usize = 10_000;

/// A value in `(-inf, +inf]`. `PosInf` carries no arithmetic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtReal {
    Finite(f64),
    PosInf,
}

impl ExtReal {
    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(v) => Some(v),
            ExtReal::PosInf => None,
        }
    }
}

/// The built-in kinds. Serialized as a record tagged by `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConvexKind {
    /// `phi = 0`.
    Zero,
    /// `phi(y) = scale |y|^2 / 2`.
    Quadratic { scale: f64 },
    /// `phi(y) = scale * sum_i |y_i|`.
    AbsNorm { scale: f64 },
    /// Indicator of the box `lo <= y <= hi`; bounds may be infinite.
    IndicatorBox { lo: Vec<f64>, hi: Vec<f64> },
    /// Pointwise sum of the parts.
    Sum { parts: Vec<ConvexSpec> },
    /// Piecewise-linear convex function of one variable, interpolating
    /// `values` at `breakpoints` and extended linearly beyond the ends.
    Custom1d { breakpoints: Vec<f64>, values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexSpec {
    #[serde(flatten)]
    kind: ConvexKind,
    dim: usize,
}

/// Regularization parameter of the Moreau envelope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoreauParams {
    epsilon: f64,
}

impl MoreauParams {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
        }
        Ok(MoreauParams { epsilon })
    }

    pub fn epsilon(self) -> f64 {
        self.epsilon
    }
}

impl ConvexSpec {
    pub fn new(kind: ConvexKind, dim: usize) -> Result<Self> {
        let spec = ConvexSpec { kind, dim };
        spec.validate()?;
        Ok(spec)
    }

    pub fn zero(dim: usize) -> Self {
        ConvexSpec { kind: ConvexKind::Zero, dim }
    }

    pub fn quadratic(scale: f64, dim: usize) -> Result<Self> {
        Self::new(ConvexKind::Quadratic { scale }, dim)
    }

    pub fn abs_norm(scale: f64, dim: usize) -> Result<Self> {
        Self::new(ConvexKind::AbsNorm { scale }, dim)
    }

    pub fn indicator_box(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        let dim = lo.len();
        Self::new(ConvexKind::IndicatorBox { lo, hi }, dim)
    }

    pub fn sum(parts: Vec<ConvexSpec>) -> Result<Self> {
        let dim = parts.first().map(|p| p.dim).unwrap_or(0);
        Self::new(ConvexKind::Sum { parts }, dim)
    }

    pub fn custom_1d(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::new(ConvexKind::Custom1d { breakpoints, values }, 1)
    }

    pub fn kind(&self) -> &ConvexKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        match &self.kind {
            ConvexKind::Zero => true,
            ConvexKind::Quadratic { scale } | ConvexKind::AbsNorm { scale } => *scale == 0.0,
            ConvexKind::IndicatorBox { lo, hi } => {
                lo.iter().all(|l| *l == f64::NEG_INFINITY) && hi.iter().all(|h| *h == f64::INFINITY)
            }
            ConvexKind::Sum { parts } => parts.iter().all(ConvexSpec::is_zero),
            ConvexKind::Custom1d { values, .. } => values.iter().all(|v| *v == 0.0),
        }
    }

    /// Checks the structural invariants, including the normalization
    /// `phi >= phi(0) = 0`.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        if self.dim == 0 {
            return bad("dimension must be positive".into());
        }
        match &self.kind {
            ConvexKind::Zero => Ok(()),
            ConvexKind::Quadratic { scale } => {
                if !(*scale > 0.0 && scale.is_finite()) {
                    return bad(format!("quadratic scale must be positive, got {scale}"));
                }
                Ok(())
            }
            ConvexKind::AbsNorm { scale } => {
                if !(*scale >= 0.0 && scale.is_finite()) {
                    return bad(format!("abs_norm scale must be nonnegative, got {scale}"));
                }
                Ok(())
            }
            ConvexKind::IndicatorBox { lo, hi } => {
                if lo.len() != self.dim || hi.len() != self.dim {
                    return bad(format!("box bounds must have length {}", self.dim));
                }
                for (l, h) in lo.iter().zip(hi) {
                    if l.is_nan() || h.is_nan() || *l == f64::INFINITY || *h == f64::NEG_INFINITY {
                        return bad("box bounds must lie in the extended reals with lo < +inf, hi > -inf".into());
                    }
                    if !(*l <= 0.0 && 0.0 <= *h) {
                        return bad(format!("box [{l}, {h}] must contain 0"));
                    }
                }
                Ok(())
            }
            ConvexKind::Sum { parts } => {
                if parts.is_empty() {
                    return bad("sum needs at least one part".into());
                }
                for p in parts {
                    if p.dim != self.dim {
                        return Err(Error::DimensionMismatch { expected: self.dim, got: p.dim });
                    }
                    p.validate()?;
                }
                Ok(())
            }
            ConvexKind::Custom1d { breakpoints, values } => {
                if self.dim != 1 {
                    return bad("custom_1d is one-dimensional".into());
                }
                if breakpoints.len() < 2 || breakpoints.len() != values.len() {
                    return bad("custom_1d needs at least two breakpoints with one value each".into());
                }
                if breakpoints.iter().chain(values).any(|v| !v.is_finite()) {
                    return bad("custom_1d breakpoints and values must be finite".into());
                }
                if breakpoints.windows(2).any(|w| w[1] <= w[0]) {
                    return bad("custom_1d breakpoints must be strictly increasing".into());
                }
                let slopes = custom_slopes(breakpoints, values);
                if slopes.windows(2).any(|w| w[1] < w[0] - 1e-12 * (1.0 + w[0].abs())) {
                    return bad("custom_1d values are not convex".into());
                }
                let Some(zero) = breakpoints.iter().position(|b| *b == 0.0) else {
                    return bad("custom_1d must have a breakpoint at 0".into());
                };
                if values[zero] != 0.0 {
                    return bad("custom_1d must vanish at 0".into());
                }
                let left = if zero == 0 { slopes[0] } else { slopes[zero - 1] };
                let right = if zero == slopes.len() { slopes[zero - 1] } else { slopes[zero] };
                if left > 0.0 || right < 0.0 {
                    return bad("custom_1d must attain its minimum at 0".into());
                }
                Ok(())
            }
        }
    }

    fn check_dim(&self, y: &[f64]) -> Result<()> {
        if y.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: y.len() });
        }
        Ok(())
    }

    /// `phi(y)`, with `PosInf` exactly outside the effective domain.
    pub fn evaluate(&self, y: &[f64]) -> Result<ExtReal> {
        self.check_dim(y)?;
        Ok(self.eval_unchecked(y))
    }

    fn eval_unchecked(&self, y: &[f64]) -> ExtReal {
        match &self.kind {
            ConvexKind::Zero => ExtReal::Finite(0.0),
            ConvexKind::Quadratic { scale } => ExtReal::Finite(0.5 * scale * norm_sq(y)),
            ConvexKind::AbsNorm { scale } => ExtReal::Finite(scale * y.iter().map(|v| v.abs()).sum::<f64>()),
            ConvexKind::IndicatorBox { lo, hi } => {
                let inside = y.iter().zip(lo.iter().zip(hi)).all(|(v, (l, h))| *v >= l - DOM_TOL && *v <= h + DOM_TOL);
                if inside {
                    ExtReal::Finite(0.0)
                } else {
                    ExtReal::PosInf
                }
            }
            ConvexKind::Sum { parts } => {
                let mut total = 0.0;
                for p in parts {
                    match p.eval_unchecked(y) {
                        ExtReal::Finite(v) => total += v,
                        ExtReal::PosInf => return ExtReal::PosInf,
                    }
                }
                ExtReal::Finite(total)
            }
            ConvexKind::Custom1d { breakpoints, values } => ExtReal::Finite(custom_eval(breakpoints, values, y[0])),
        }
    }

    /// `J_eps(y) = (I + eps d phi)^{-1}(y)`.
    pub fn resolvent(&self, eps: MoreauParams, y: &[f64]) -> Result<Vec<f64>> {
        self.prox(eps.epsilon, y)
    }

    /// Resolvent with an arbitrary step `lambda >= 0`; `lambda = 0` is the identity.
    pub fn prox(&self, lambda: f64, y: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(y)?;
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!("resolvent step must be nonnegative, got {lambda}")));
        }
        if lambda == 0.0 {
            return Ok(y.to_vec());
        }
        match &self.kind {
            ConvexKind::Zero => Ok(y.to_vec()),
            ConvexKind::Quadratic { scale } => Ok(y.iter().map(|v| v / (1.0 + lambda * scale)).collect()),
            ConvexKind::AbsNorm { scale } => {
                let thr = lambda * scale;
                Ok(y.iter().map(|v| v.signum() * (v.abs() - thr).max(0.0)).collect())
            }
            ConvexKind::IndicatorBox { lo, hi } => {
                Ok(y.iter().zip(lo.iter().zip(hi)).map(|(v, (l, h))| v.clamp(*l, *h)).collect())
            }
            ConvexKind::Sum { parts } => {
                if parts.len() == 1 {
                    return parts[0].prox(lambda, y);
                }
                if let Some(z) = self.separable_sum_prox(lambda, y) {
                    return Ok(z);
                }
                let weighted: Vec<(&ConvexSpec, f64)> = parts.iter().map(|p| (p, lambda)).collect();
                let mut z = joint_resolvent(&weighted, y, SPLIT_TOL, SPLIT_MAX_ITER)?.point;
                // Land exactly inside every box part.
                for p in parts {
                    if let ConvexKind::IndicatorBox { lo, hi } = &p.kind {
                        for (v, (l, h)) in z.iter_mut().zip(lo.iter().zip(hi)) {
                            *v = v.clamp(*l, *h);
                        }
                    }
                }
                Ok(z)
            }
            ConvexKind::Custom1d { breakpoints, values } => Ok(vec![custom_prox(breakpoints, values, lambda, y[0])]),
        }
    }

    fn flatten<'a>(&'a self, out: &mut Vec<&'a ConvexSpec>) {
        match &self.kind {
            ConvexKind::Sum { parts } => parts.iter().for_each(|p| p.flatten(out)),
            _ => out.push(self),
        }
    }

    /// Closed-form resolvent of a sum whose parts act coordinatewise: boxes
    /// plus either quadratic and l1 terms, or a single other part. In one
    /// coordinate the resolvent of `f + indicator[l, h]` is the clamp of the
    /// resolvent of `f`.
    fn separable_sum_prox(&self, lambda: f64, y: &[f64]) -> Option<Vec<f64>> {
        let mut flat = Vec::new();
        self.flatten(&mut flat);
        let mut lo = vec![f64::NEG_INFINITY; self.dim];
        let mut hi = vec![f64::INFINITY; self.dim];
        let (mut quad, mut abs) = (0.0, 0.0);
        let mut other: Vec<&ConvexSpec> = Vec::new();
        for p in flat {
            match &p.kind {
                ConvexKind::Zero => {}
                ConvexKind::Quadratic { scale } => quad += scale,
                ConvexKind::AbsNorm { scale } => abs += scale,
                ConvexKind::IndicatorBox { lo: l, hi: h } => {
                    for k in 0..self.dim {
                        lo[k] = lo[k].max(l[k]);
                        hi[k] = hi[k].min(h[k]);
                    }
                }
                _ => other.push(p),
            }
        }
        let inner: Vec<f64> = match other.as_slice() {
            [] => y.iter().map(|v| v.signum() * (v.abs() - lambda * abs).max(0.0) / (1.0 + lambda * quad)).collect(),
            [single] if quad == 0.0 && abs == 0.0 => single.prox(lambda, y).ok()?,
            _ => return None,
        };
        Some(inner.iter().zip(lo.iter().zip(&hi)).map(|(v, (l, h))| v.clamp(*l, *h)).collect())
    }

    /// `grad phi_eps(y) = (y - J_eps(y)) / eps`.
    pub fn moreau_gradient(&self, eps: MoreauParams, y: &[f64]) -> Result<Vec<f64>> {
        let j = self.resolvent(eps, y)?;
        Ok(y.iter().zip(&j).map(|(a, b)| (a - b) / eps.epsilon).collect())
    }

    /// `phi_eps(y)` through `eps/2 |grad phi_eps(y)|^2 + phi(J_eps(y))`.
    pub fn moreau_envelope(&self, eps: MoreauParams, y: &[f64]) -> Result<f64> {
        let j = self.resolvent(eps, y)?;
        let grad_sq: f64 = y.iter().zip(&j).map(|(a, b)| ((a - b) / eps.epsilon).powi(2)).sum();
        let at_j = self.eval_unchecked(&j).finite().ok_or(Error::NotInDomain)?;
        Ok(0.5 * eps.epsilon * grad_sq + at_j)
    }

    /// Largest violation of `<u, z - y> + phi(y) <= phi(z)` over the probes.
    /// Zero certifies `u` as a subgradient at `y` relative to the probe set.
    pub fn subgradient_inequality_residual(&self, y: &[f64], u: &[f64], probes: &[Vec<f64>]) -> Result<f64> {
        self.check_dim(y)?;
        self.check_dim(u)?;
        let at_y = self.eval_unchecked(y).finite().ok_or(Error::NotInDomain)?;
        let mut worst = 0.0f64;
        for z in probes {
            self.check_dim(z)?;
            let Some(at_z) = self.eval_unchecked(z).finite() else {
                continue;
            };
            let lhs: f64 = u.iter().zip(z.iter().zip(y)).map(|(ui, (zi, yi))| ui * (zi - yi)).sum::<f64>() + at_y;
            worst = worst.max(lhs - at_z);
        }
        Ok(worst)
    }
}

pub(crate) fn norm_sq(y: &[f64]) -> f64 {
    y.iter().map(|v| v * v).sum()
}

fn custom_slopes(b: &[f64], v: &[f64]) -> Vec<f64> {
    b.windows(2).zip(v.windows(2)).map(|(bw, vw)| (vw[1] - vw[0]) / (bw[1] - bw[0])).collect()
}

fn custom_eval(b: &[f64], v: &[f64], y: f64) -> f64 {
    let n = b.len();
    // segment index k such that b[k] <= y < b[k+1], clamped to the end segments
    let k = b.partition_point(|bk| *bk <= y).saturating_sub(1).min(n - 2);
    let slope = (v[k + 1] - v[k]) / (b[k + 1] - b[k]);
    v[k] + slope * (y - b[k])
}

fn custom_prox(b: &[f64], v: &[f64], lambda: f64, y: f64) -> f64 {
    let s = custom_slopes(b, v);
    let n = b.len();
    let left = |i: usize| if i == 0 { s[0] } else { s[i - 1] };
    let right = |i: usize| if i == n - 1 { s[n - 2] } else { s[i] };
    // z + lambda * d phi(z) maps breakpoint i onto [lo_i, hi_i]; these
    // intervals are increasing in i and separated by the linear pieces.
    let i = (0..n).collect::<Vec<_>>().partition_point(|&i| b[i] + lambda * left(i) <= y);
    if i == 0 {
        return y - lambda * s[0];
    }
    let j = i - 1;
    if y <= b[j] + lambda * right(j) {
        b[j]
    } else {
        y - lambda * right(j)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eps(e: f64) -> MoreauParams {
        MoreauParams::new(e).unwrap()
    }

    fn unit_box() -> ConvexSpec {
        ConvexSpec::indicator_box(vec![-1.0], vec![1.0]).unwrap()
    }

    #[test]
    fn evaluate_examples() {
        let zero = ConvexSpec::zero(2);
        assert_eq!(zero.evaluate(&[3.0, -1.0]).unwrap(), ExtReal::Finite(0.0));
        let b = unit_box();
        assert_eq!(b.evaluate(&[0.5]).unwrap(), ExtReal::Finite(0.0));
        assert_eq!(b.evaluate(&[2.0]).unwrap(), ExtReal::PosInf);
        let q = ConvexSpec::quadratic(1.0, 1).unwrap();
        assert_eq!(q.evaluate(&[2.0]).unwrap(), ExtReal::Finite(2.0));
    }

    #[test]
    fn evaluate_rejects_wrong_dimension() {
        let q = ConvexSpec::quadratic(1.0, 2).unwrap();
        assert_eq!(q.evaluate(&[1.0]), Err(Error::DimensionMismatch { expected: 2, got: 1 }));
    }

    #[test]
    fn box_membership_tolerance() {
        let b = unit_box();
        assert!(b.evaluate(&[1.0 + 5e-13]).unwrap().is_finite());
        assert!(!b.evaluate(&[1.0 + 1e-11]).unwrap().is_finite());
    }

    #[test]
    fn resolvent_examples() {
        assert_eq!(ConvexSpec::zero(1).resolvent(eps(0.3), &[7.0]).unwrap(), vec![7.0]);
        assert_eq!(unit_box().resolvent(eps(0.5), &[2.0]).unwrap(), vec![1.0]);
        let q = ConvexSpec::quadratic(1.0, 1).unwrap();
        assert_eq!(q.resolvent(eps(1.0), &[2.0]).unwrap(), vec![1.0]);
    }

    #[test]
    fn moreau_gradient_examples() {
        assert_eq!(unit_box().moreau_gradient(eps(0.5), &[3.0]).unwrap(), vec![4.0]);
        let a = ConvexSpec::abs_norm(1.0, 1).unwrap();
        assert_eq!(a.moreau_gradient(eps(1.0), &[0.5]).unwrap(), vec![0.5]);
        for spec in [unit_box(), a.clone(), ConvexSpec::quadratic(2.0, 1).unwrap(), ConvexSpec::zero(1)] {
            assert_eq!(spec.moreau_gradient(eps(0.7), &[0.0]).unwrap(), vec![0.0]);
        }
    }

    #[test]
    fn moreau_envelope_examples() {
        assert_eq!(ConvexSpec::zero(1).moreau_envelope(eps(1.0), &[5.0]).unwrap(), 0.0);
        let a = ConvexSpec::abs_norm(1.0, 1).unwrap();
        assert!((a.moreau_envelope(eps(1.0), &[0.5]).unwrap() - 0.125).abs() < 1e-15);
        let q = ConvexSpec::quadratic(1.0, 1).unwrap();
        assert!((q.moreau_envelope(eps(1.0), &[2.0]).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn subgradient_residual_examples() {
        let z = ConvexSpec::zero(1);
        assert_eq!(z.subgradient_inequality_residual(&[0.3], &[0.0], &[vec![5.0], vec![-2.0]]).unwrap(), 0.0);
        let probes = vec![vec![-1.0], vec![0.0], vec![1.0]];
        assert_eq!(unit_box().subgradient_inequality_residual(&[1.0], &[5.0], &probes).unwrap(), 0.0);
        let q = ConvexSpec::quadratic(1.0, 1).unwrap();
        assert_eq!(q.subgradient_inequality_residual(&[1.0], &[2.0], &[vec![0.0]]).unwrap(), 0.0);
        let r = q.subgradient_inequality_residual(&[1.0], &[0.1], &[vec![0.0]]).unwrap();
        assert!((r - 0.4).abs() < 1e-15);
    }

    #[test]
    fn subgradient_residual_requires_domain_point() {
        assert_eq!(unit_box().subgradient_inequality_residual(&[2.0], &[0.0], &[vec![0.0]]), Err(Error::NotInDomain));
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(ConvexSpec::indicator_box(vec![0.5], vec![1.0]).is_err());
        assert!(ConvexSpec::quadratic(0.0, 1).is_err());
        assert!(ConvexSpec::custom_1d(vec![-1.0, 0.0, 1.0], vec![1.0, 0.0, -0.5]).is_err());
        assert!(ConvexSpec::custom_1d(vec![-1.0, 1.0], vec![1.0, 1.0]).is_err());
        assert!(ConvexSpec::custom_1d(vec![-1.0, 0.0, 1.0], vec![2.0, 0.0, 1.0]).is_ok());
        assert!(ConvexSpec::sum(vec![ConvexSpec::zero(1), ConvexSpec::zero(2)]).is_err());
        assert!(MoreauParams::new(0.0).is_err());
    }

    #[test]
    fn custom_1d_matches_abs_norm() {
        let c = ConvexSpec::custom_1d(vec![-1.0, 0.0, 1.0], vec![1.0, 0.0, 1.0]).unwrap();
        let a = ConvexSpec::abs_norm(1.0, 1).unwrap();
        for y in [-3.0, -1.2, -0.4, 0.0, 0.25, 0.9, 2.5] {
            assert_eq!(c.evaluate(&[y]).unwrap(), a.evaluate(&[y]).unwrap());
            let jc = c.prox(0.6, &[y]).unwrap()[0];
            let ja = a.prox(0.6, &[y]).unwrap()[0];
            assert!((jc - ja).abs() < 1e-14, "y={y}: {jc} vs {ja}");
        }
    }

    #[test]
    fn custom_1d_prox_sticks_at_kinks() {
        // slopes -2, 0.5, 3 around breakpoints -1, 0, 2
        let c = ConvexSpec::custom_1d(vec![-1.0, 0.0, 2.0, 3.0], vec![0.5, 0.0, 1.0, 4.0]).unwrap();
        // at z = 2 the subdifferential is [0.5, 3]; lambda = 1 maps it onto [2.5, 5]
        assert_eq!(c.prox(1.0, &[3.0]).unwrap(), vec![2.0]);
        assert_eq!(c.prox(1.0, &[1.5]).unwrap(), vec![1.0]);
        assert_eq!(c.prox(1.0, &[6.0]).unwrap(), vec![3.0]);
    }

    #[test]
    fn sum_of_box_and_quadratic() {
        let s = ConvexSpec::sum(vec![unit_box(), ConvexSpec::quadratic(1.0, 1).unwrap()]).unwrap();
        // minimize (z-y)^2/2 + lambda z^2/2 over [-1,1]: clamp(y/(1+lambda))
        for y in [-5.0, -1.0, 0.3, 1.8, 2.2, 4.0] {
            let z = s.prox(1.0, &[y]).unwrap()[0];
            assert!((z - (y / 2.0).clamp(-1.0, 1.0)).abs() < 1e-9, "y={y} z={z}");
            assert!(s.evaluate(&[z]).unwrap().is_finite());
        }
    }

    #[test]
    fn serde_tagged_record() {
        #[derive(Deserialize)]
        struct Wrap {
            phi: ConvexSpec,
        }
        let w: Wrap = toml::from_str("[phi]\nkind = \"indicator_box\"\nlo = [-1.0]\nhi = [1.0]\ndim = 1\n").unwrap();
        assert_eq!(w.phi, unit_box());
        let w: Wrap = toml::from_str("[phi]\nkind = \"indicator_box\"\nlo = [-inf]\nhi = [0.5]\ndim = 1\n").unwrap();
        assert!(w.phi.validate().is_ok());
    }
}
