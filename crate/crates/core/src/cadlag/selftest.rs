use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;

use super::{
    ibp_residual, jump_covariation_between, refinement_sequence, stieltjes_left, stieltjes_right, BVPath, CadlagPath,
    Interp,
};
use crate::error::Result;
use crate::rng::StreamKey;

/// Roundoff allowance when comparing refinement sums of nested partitions.
pub const MONOTONE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct CadlagSelftest {
    /// Dyadic refinement sums of `sin(2 pi (t + 0.1))` on `[0, 1]`, levels `1..=depth`.
    pub tv_sequence: Vec<f64>,
    pub tv_monotone: bool,
    /// `|V_depth - 4|`.
    pub tv_error: f64,
    pub pairs: usize,
    pub ibp_max: f64,
    /// `max |(right - left) - [x, k]|` over random windows.
    pub side_gap_max: f64,
}

impl CadlagSelftest {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("check,index,value\n");
        for (i, v) in self.tv_sequence.iter().enumerate() {
            out.push_str(&format!("tv_refinement,{},{v}\n", i + 1));
        }
        out.push_str(&format!("tv_monotone,0,{}\n", u8::from(self.tv_monotone)));
        out.push_str(&format!("tv_error,0,{:e}\n", self.tv_error));
        out.push_str(&format!("ibp_max,{},{:e}\n", self.pairs, self.ibp_max));
        out.push_str(&format!("side_gap_max,{},{:e}\n", self.pairs, self.side_gap_max));
        out
    }
}

/// Step path on a random grid of `[0, 1]` with `n` cells.
pub fn random_step_path<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Result<CadlagPath> {
    let mut times: Vec<f64> = (0..n - 1).map(|_| rng.random_range(0.0..1.0)).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    times.retain(|t| *t > 0.0);
    times.insert(0, 0.0);
    times.push(1.0);
    let values = times.iter().map(|_| rng.random_range(-2.0..2.0)).collect();
    CadlagPath::scalar(times, values, Interp::Step)
}

pub fn sine_path(level: u32) -> Result<CadlagPath> {
    let n = 1usize << level;
    let times = (0..=n).map(|i| i as f64 / n as f64).collect();
    CadlagPath::from_fn(times, Interp::Linear, |t| (2.0 * PI * (t + 0.1)).sin())
}

/// Refinement of the sine variation to `depth`, and integration by parts
/// and the left/right jump identity on `pairs` random step-path pairs.
pub fn selftest(depth: u32, pairs: usize, key: StreamKey) -> Result<CadlagSelftest> {
    let sine = BVPath::new(sine_path(depth.max(1))?);
    let tv_sequence = refinement_sequence(&sine, depth);
    let tv_monotone = tv_sequence.windows(2).all(|w| w[1] >= w[0] - MONOTONE_SLACK);
    let tv_error = tv_sequence.last().map_or(f64::INFINITY, |v| (v - 4.0).abs());
    let (ibp_max, side_gap_max) = (0..pairs as u64)
        .into_par_iter()
        .map(|i| -> Result<(f64, f64)> {
            let mut rng = key.stream(i);
            let n1 = rng.random_range(2..40);
            let n2 = rng.random_range(2..40);
            let l = random_step_path(&mut rng, n1)?;
            let k = random_step_path(&mut rng, n2)?;
            let t = rng.random_range(0.0..=1.0);
            let (a, b): (f64, f64) = (rng.random_range(0.0..1.0), rng.random_range(0.0..1.0));
            let (s, u) = (a.min(b), a.max(b));
            let (lb, kb) = (BVPath::new(l.clone()), BVPath::new(k.clone()));
            let ibp = ibp_residual(&lb, &kb, t);
            let gap = stieltjes_right(&l, &kb, s, u) - stieltjes_left(&l, &kb, s, u);
            Ok((ibp, (gap - jump_covariation_between(&l, &k, s, u)).abs()))
        })
        .try_reduce(|| (0.0, 0.0), |a, b| Ok((a.0.max(b.0), a.1.max(b.1))))?;
    Ok(CadlagSelftest { tv_sequence, tv_monotone, tv_error, pairs, ibp_max, side_gap_max })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn passes_at_moderate_size() {
        let r = selftest(12, 200, StreamKey::new(1, "cadlag")).unwrap();
        assert!(r.tv_monotone);
        assert!(r.tv_error < 1e-3);
        assert!(r.ibp_max <= 1e-10 && r.side_gap_max <= 1e-10, "{r:?}");
        assert!(r.to_csv().starts_with("check,index,value\ntv_refinement,1,"));
    }

    #[test]
    fn refinement_is_not_exact_early() {
        let r = selftest(6, 1, StreamKey::new(1, "cadlag")).unwrap();
        assert!(r.tv_sequence[1] < 4.0 - 1e-3);
    }
}
