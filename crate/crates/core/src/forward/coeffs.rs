use std::fmt;
use std::sync::Arc;

/// `(t, x) -> out`, used for the drift (`d`) and diffusion (`d x d`, row-major).
pub type FieldFn = Arc<dyn Fn(f64, &[f64], &mut [f64]) + Send + Sync>;
/// `(t, x, y) -> out` in R^m.
pub type DriverFn = Arc<dyn Fn(f64, &[f64], &[f64], &mut [f64]) + Send + Sync>;
/// `x -> out` in R^m.
pub type TerminalFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

/// Constants of the standing assumptions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssumptionConstants {
    /// Monotonicity constant of `f` and `g` in `y`; also the Lipschitz
    /// constant of `g` in `(t, x, y)`.
    pub beta: f64,
    /// Linear growth constant of `f` and `g`.
    pub gamma: f64,
    /// Lipschitz constant of `b` and `sigma` in `x`.
    pub lipschitz: f64,
    /// Bound on `phi(h)` and `psi(h)`.
    pub bound: f64,
}

/// Coefficients of the forward-backward system on `[0, horizon]`.
#[derive(Clone)]
pub struct CoefficientSet {
    pub state_dim: usize,
    pub value_dim: usize,
    pub horizon: f64,
    pub drift: FieldFn,
    pub diffusion: FieldFn,
    pub driver: DriverFn,
    pub boundary_driver: DriverFn,
    pub terminal: TerminalFn,
    pub constants: AssumptionConstants,
    /// `b` and `sigma` do not depend on `t`; lets transition weights be cached.
    pub time_homogeneous: bool,
}

impl fmt::Debug for CoefficientSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoefficientSet")
            .field("state_dim", &self.state_dim)
            .field("value_dim", &self.value_dim)
            .field("horizon", &self.horizon)
            .field("constants", &self.constants)
            .field("time_homogeneous", &self.time_homogeneous)
            .finish_non_exhaustive()
    }
}

impl CoefficientSet {
    pub fn b(&self, t: f64, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.state_dim];
        (self.drift)(t, x, &mut out);
        out
    }

    pub fn sigma(&self, t: f64, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.state_dim * self.state_dim];
        (self.diffusion)(t, x, &mut out);
        out
    }

    pub fn f(&self, t: f64, x: &[f64], y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.value_dim];
        (self.driver)(t, x, y, &mut out);
        out
    }

    pub fn g(&self, t: f64, x: &[f64], y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.value_dim];
        (self.boundary_driver)(t, x, y, &mut out);
        out
    }

    pub fn h(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.value_dim];
        (self.terminal)(x, &mut out);
        out
    }

    /// Returns a copy with the terminal map replaced by `scale * h`.
    pub fn with_scaled_terminal(&self, scale: f64) -> Self {
        let h = self.terminal.clone();
        let mut out = self.clone();
        out.terminal = Arc::new(move |x, o| {
            h(x, o);
            o.iter_mut().for_each(|v| *v *= scale);
        });
        out
    }

    /// Returns a copy with a different terminal map.
    pub fn with_terminal(&self, terminal: TerminalFn) -> Self {
        let mut out = self.clone();
        out.terminal = terminal;
        out
    }
}
