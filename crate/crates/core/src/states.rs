//! Initial pure states: bipartite states in Schmidt form and generalized GHZ
//! states.
//!
//! Composite basis convention: `|i_A⟩|j_B⟩` sits at flat index `i * t + j`
//! (row-major, first factor most significant). Three-qubit states use the
//! same rule, `|abc⟩ ↦ 4a + 2b + c`.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::ComplexMatrix;

const NORM_TOL: f64 = 1e-12;

/// `Σ cᵢ |i_A⟩|i_B⟩` with `dim(H_A) = s ≤ t = dim(H_B)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SchmidtState {
    coeffs: Vec<f64>,
    dim_b: usize,
}

impl SchmidtState {
    /// Validates the coefficients as given: nonnegative, non-increasing,
    /// unit norm, and `s ≤ t`. Nothing is rescaled.
    pub fn new(coeffs: Vec<f64>, dim_b: usize) -> Result<Self> {
        let s = coeffs.len();
        if s == 0 {
            return Err(Error::InvalidState("at least one Schmidt coefficient is required".into()));
        }
        if dim_b < s {
            return Err(Error::InvalidState(format!(
                "dim_b = {dim_b} is smaller than the number of coefficients s = {s}"
            )));
        }
        if let Some(c) = coeffs.iter().find(|c| !c.is_finite() || **c < 0.0) {
            return Err(Error::InvalidState(format!("coefficient {c} is not a nonnegative number")));
        }
        if coeffs.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::InvalidState("coefficients must be in non-increasing order".into()));
        }
        let norm2: f64 = coeffs.iter().map(|c| c * c).sum();
        if (norm2 - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!(
                "squared coefficients sum to {norm2}, expected 1"
            )));
        }
        Ok(Self { coeffs, dim_b })
    }

    /// Square dimensions, `t = s`.
    pub fn square(coeffs: Vec<f64>) -> Result<Self> {
        let t = coeffs.len();
        Self::new(coeffs, t)
    }

    /// Rescales `coeffs` to unit norm before validating. Returns the state
    /// and the factor every coefficient was multiplied by.
    pub fn normalized(coeffs: Vec<f64>, dim_b: usize) -> Result<(Self, f64)> {
        let norm = coeffs.iter().map(|c| c * c).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidState("coefficients have zero or non-finite norm".into()));
        }
        let factor = 1.0 / norm;
        let state = Self::new(coeffs.iter().map(|c| c * factor).collect(), dim_b)?;
        Ok((state, factor))
    }

    /// Two-qubit state `c₁|00⟩ + c₂|11⟩` with `2c₁c₂ = l`.
    pub fn qubit_with_l(l: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&l) {
            return Err(Error::InvalidState(format!("L = {l} is outside [0, 1]")));
        }
        let r = (1.0 - l * l).sqrt();
        let c1 = ((1.0 + r) / 2.0).sqrt();
        let c2 = ((1.0 - r) / 2.0).sqrt();
        let norm = (c1 * c1 + c2 * c2).sqrt();
        Self::new(vec![c1 / norm, c2 / norm], 2)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn dim_a(&self) -> usize {
        self.coeffs.len()
    }

    pub fn dim_b(&self) -> usize {
        self.dim_b
    }

    pub fn is_entangled(&self) -> bool {
        self.coeffs.iter().filter(|&&c| c > 0.0).count() >= 2
    }

    /// `L = 2(c₁c₂ + c₃c₄ + …)` over consecutive disjoint pairs; for odd `s`
    /// the last coefficient has no partner.
    pub fn l_value(&self) -> f64 {
        2.0 * self.coeffs.chunks_exact(2).map(|p| p[0] * p[1]).sum::<f64>()
    }

    /// `|ψ⟩⟨ψ| = Σ cᵢcⱼ |ii⟩⟨jj|`
    pub fn density(&self) -> ComplexMatrix {
        let t = self.dim_b;
        let mut rho = ComplexMatrix::zeros(self.dim_a() * t);
        for (i, ci) in self.coeffs.iter().enumerate() {
            for (j, cj) in self.coeffs.iter().enumerate() {
                rho[(i * t + i, j * t + j)] = Complex64::new(ci * cj, 0.0);
            }
        }
        rho
    }
}

/// Free-function spelling of [`SchmidtState::density`].
pub fn density_bipartite(state: &SchmidtState) -> ComplexMatrix {
    state.density()
}

/// Free-function spelling of [`SchmidtState::l_value`].
pub fn schmidt_l(state: &SchmidtState) -> f64 {
    state.l_value()
}

/// `cos α |000⟩ + sin α |111⟩`, `α ∈ (0, π/2)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GhzState {
    alpha: f64,
}

impl GhzState {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < FRAC_PI_2) {
            return Err(Error::InvalidState(format!("alpha = {alpha} is outside (0, pi/2)")));
        }
        Ok(Self { alpha })
    }

    /// The state with `α ∈ (0, π/4]` whose `sin²2α` equals `value`.
    pub fn from_sin2_2alpha(value: f64) -> Result<Self> {
        if !(value > 0.0 && value <= 1.0) {
            return Err(Error::InvalidState(format!("sin^2(2 alpha) = {value} is outside (0, 1]")));
        }
        Self::new(value.sqrt().asin() / 2.0)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn sin_2alpha(&self) -> f64 {
        (2.0 * self.alpha).sin()
    }

    pub fn sin2_2alpha(&self) -> f64 {
        self.sin_2alpha().powi(2)
    }

    pub fn density(&self) -> ComplexMatrix {
        let (s, c) = self.alpha.sin_cos();
        let mut rho = ComplexMatrix::zeros(8);
        rho[(0, 0)] = Complex64::new(c * c, 0.0);
        rho[(7, 7)] = Complex64::new(s * s, 0.0);
        rho[(0, 7)] = Complex64::new(c * s, 0.0);
        rho[(7, 0)] = Complex64::new(c * s, 0.0);
        rho
    }
}

/// Free-function spelling of [`GhzState::density`].
pub fn density_ghz(state: &GhzState) -> ComplexMatrix {
    state.density()
}
