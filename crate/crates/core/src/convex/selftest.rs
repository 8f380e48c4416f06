use rand::Rng;
use rayon::prelude::*;

use super::{ConvexSpec, MoreauParams};
use crate::error::Result;
use crate::rng::StreamKey;

/// Parameters swept by [`selftest`].
pub const SELFTEST_EPSILONS: [f64; 3] = [1e-3, 1e-1, 1.0];

/// Worst residual of each identity over the trials for one spec.
#[derive(Debug, Clone, PartialEq)]
pub struct SelftestRow {
    pub name: String,
    pub trials: usize,
    /// `phi_eps(y)` against `phi(z) + |y - z|^2 / (2 eps)` at probes `z`.
    pub envelope_minimality: f64,
    pub firm_nonexpansive: f64,
    pub gradient_lipschitz: f64,
    pub subgradient: f64,
    /// `phi_{eps1}(y) - phi_{eps2}(y)` for `eps1 > eps2`, positive part.
    pub envelope_monotone: f64,
    /// `phi(sum rho_i y_i) - sum rho_i phi(y_i)`, positive part.
    pub jensen: f64,
}

impl SelftestRow {
    pub fn max_residual(&self) -> f64 {
        [
            self.envelope_minimality,
            self.firm_nonexpansive,
            self.gradient_lipschitz,
            self.subgradient,
            self.envelope_monotone,
            self.jensen,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    pub fn csv_header() -> &'static str {
        "spec,trials,envelope_minimality,firm_nonexpansive,gradient_lipschitz,subgradient,envelope_monotone,jensen"
    }

    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{:e},{:e},{:e},{:e},{:e},{:e}",
            self.name,
            self.trials,
            self.envelope_minimality,
            self.firm_nonexpansive,
            self.gradient_lipschitz,
            self.subgradient,
            self.envelope_monotone,
            self.jensen
        )
    }
}

/// The built-in specs exercised by [`selftest`], with display names.
pub fn builtin_specs() -> Vec<(String, ConvexSpec)> {
    let inf = f64::INFINITY;
    let b = |lo: Vec<f64>, hi: Vec<f64>| ConvexSpec::indicator_box(lo, hi).expect("valid box");
    vec![
        ("zero".into(), ConvexSpec::zero(2)),
        ("quadratic".into(), ConvexSpec::quadratic(1.5, 2).expect("valid")),
        ("abs_norm".into(), ConvexSpec::abs_norm(0.7, 2).expect("valid")),
        ("indicator_box".into(), b(vec![-0.5, -1.0], vec![1.0, 0.25])),
        ("half_line".into(), b(vec![-inf], vec![0.6])),
        (
            "sum_box_quadratic".into(),
            ConvexSpec::sum(vec![b(vec![-1.0, -inf], vec![0.5, 2.0]), ConvexSpec::quadratic(0.8, 2).expect("valid")])
                .expect("valid"),
        ),
        (
            "custom_1d".into(),
            ConvexSpec::custom_1d(vec![-1.0, 0.0, 0.5, 2.0], vec![1.0, 0.0, 0.1, 1.5]).expect("valid"),
        ),
    ]
}

fn sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn point<R: Rng + ?Sized>(rng: &mut R, m: usize) -> Vec<f64> {
    (0..m).map(|_| rng.random_range(-3.0..3.0)).collect()
}

#[derive(Default)]
struct Worst([f64; 6]);

impl Worst {
    fn merge(mut self, other: Worst) -> Worst {
        for (a, b) in self.0.iter_mut().zip(other.0) {
            *a = a.max(b);
        }
        self
    }
}

fn trial(spec: &ConvexSpec, key: StreamKey, i: u64) -> Result<Worst> {
    let mut rng = key.stream(i);
    let m = spec.dim();
    let mut w = Worst::default();
    let e = SELFTEST_EPSILONS[(i % 3) as usize];
    let eps = MoreauParams::new(e)?;
    let (y1, y2) = (point(&mut rng, m), point(&mut rng, m));
    let (j1, j2) = (spec.resolvent(eps, &y1)?, spec.resolvent(eps, &y2)?);
    let (g1, g2) = (spec.moreau_gradient(eps, &y1)?, spec.moreau_gradient(eps, &y2)?);
    let probes: Vec<Vec<f64>> = (0..8).map(|_| point(&mut rng, m)).collect();

    let env = spec.moreau_envelope(eps, &y1)?;
    for z in &probes {
        if let Some(v) = spec.evaluate(z)?.finite() {
            w.0[0] = w.0[0].max(env - v - sq(&y1, z) / (2.0 * e));
        }
    }
    let inner: f64 = j1.iter().zip(&j2).zip(y1.iter().zip(&y2)).map(|((a, b), (c, d))| (a - b) * (c - d)).sum();
    w.0[1] = sq(&j1, &j2) - inner;
    w.0[2] = sq(&g1, &g2).sqrt() - sq(&y1, &y2).sqrt() / e;
    w.0[3] = spec.subgradient_inequality_residual(&j1, &g1, &probes)?;
    let coarse = MoreauParams::new(10.0 * e)?;
    w.0[4] = spec.moreau_envelope(coarse, &y1)? - env;

    let n = rng.random_range(2..6);
    let ys: Vec<Vec<f64>> = (0..n).map(|_| spec.resolvent(eps, &point(&mut rng, m))).collect::<Result<_>>()?;
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let rho: Vec<f64> = raw.iter().map(|r| r / total).collect();
    let mut avg = vec![0.0; m];
    let mut rhs = 0.0;
    for (y, r) in ys.iter().zip(&rho) {
        for (a, v) in avg.iter_mut().zip(y) {
            *a += r * v;
        }
        rhs += r * spec.evaluate(y)?.finite().unwrap_or(f64::INFINITY);
    }
    w.0[5] = spec.evaluate(&avg)?.finite().map_or(0.0, |lhs| lhs - rhs);
    Ok(w)
}

/// Randomized check of the envelope and resolvent identities, `trials`
/// per spec, cycling `eps` through [`SELFTEST_EPSILONS`]. Residuals are
/// reported as positive parts, so zero means the identity held exactly.
pub fn selftest(specs: &[(String, ConvexSpec)], trials: usize, key: StreamKey) -> Result<Vec<SelftestRow>> {
    specs
        .iter()
        .enumerate()
        .map(|(k, (name, spec))| {
            let sub = key.child("spec", k as u64);
            let w = (0..trials as u64)
                .into_par_iter()
                .map(|i| trial(spec, sub, i))
                .try_reduce(Worst::default, |a, b| Ok(a.merge(b)))?;
            let [minimality, firm, lip, sub_r, mono, jensen] = w.0.map(|v| v.max(0.0));
            Ok(SelftestRow {
                name: name.clone(),
                trials,
                envelope_minimality: minimality,
                firm_nonexpansive: firm,
                gradient_lipschitz: lip,
                subgradient: sub_r,
                envelope_monotone: mono,
                jensen,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_pass() {
        let rows = selftest(&builtin_specs(), 500, StreamKey::new(3, "selftest")).unwrap();
        assert_eq!(rows.len(), builtin_specs().len());
        for r in &rows {
            assert!(r.max_residual() <= 1e-8, "{r:?}");
        }
    }

    #[test]
    fn deterministic() {
        let key = StreamKey::new(5, "selftest");
        assert_eq!(selftest(&builtin_specs(), 64, key).unwrap(), selftest(&builtin_specs(), 64, key).unwrap());
    }
}
