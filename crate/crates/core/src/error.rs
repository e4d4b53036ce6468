use alloc::string::String;

/// Failures raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("{context}: expected {expected_rows}x{expected_cols}, found {rows}x{cols}")]
    Shape {
        context: &'static str,
        expected_rows: usize,
        expected_cols: usize,
        rows: usize,
        cols: usize,
    },

    #[error("{context}: non-finite entry at ({row}, {col})")]
    NonFinite {
        context: &'static str,
        row: usize,
        col: usize,
    },

    #[error("{context}: matrix is not Hermitian (asymmetry {asymmetry:.3e} > {tolerance:.3e})")]
    NotHermitian {
        context: &'static str,
        asymmetry: f64,
        tolerance: f64,
    },

    #[error("semigroup overflow: t * lambda_max = {exponent:.3e} exceeds 700")]
    Overflow { exponent: f64 },

    #[error("Sylvester spectra too close: gap {gap:.3e} < {tolerance:.3e}")]
    SpectralCollision { gap: f64, tolerance: f64 },

    #[error("{context}: eigenvalue {eigenvalue} lies within {tolerance:.1e} of probe {probe}")]
    GapViolation {
        context: &'static str,
        probe: f64,
        eigenvalue: f64,
        tolerance: f64,
    },

    #[error("{context}: residual {residual:.3e} exceeds {tolerance:.3e}")]
    Inaccurate {
        context: &'static str,
        residual: f64,
        tolerance: f64,
    },

    #[error("{0} did not converge")]
    NoConvergence(&'static str),

    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("potential violates |V(x)| <= C(1+|x|)^-rho at x = {x}: |V| = {value:.3e} > {bound:.3e}")]
    DecayViolation { x: f64, value: f64, bound: f64 },

    #[error("potential has not decayed at the box edge: |V({x})| = {value:.3e}")]
    NotDecayed { x: f64, value: f64 },

    #[error("shift {shift} is not below the spectrum (lowest eigenvalue {lowest})")]
    ShiftInSpectrum { shift: f64, lowest: f64 },

    #[error("energy must be positive, got {0}")]
    NonPositiveEnergy(f64),

    #[error("I + V0 T0 is near-singular (condition number {condition:.3e})")]
    NearSingular { condition: f64 },

    #[error("kernel is singular or non-finite at t = {t}")]
    KernelSingular { t: f64 },

    #[error("kernel bound violated at t = {t}: t*||K(t)|| = {value:.6e} > C1 = {bound:.6e}")]
    KernelBound { t: f64, value: f64, bound: f64 },

    #[error("trace bound integral diverges near lambda = {lambda:.3e}")]
    DivergentTraceBound { lambda: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;
