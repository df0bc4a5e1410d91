//! Two-outcome POVMs for every observer, and the sharpness schedules that
//! keep each sequential observer above the local bound.
//!
//! Every effect here has the form `½(I + g·P)` with `P` Hermitian and
//! `P² = I`: `g = 1` gives a projective measurement, `g = γ < 1` an unsharp
//! one. In `d` dimensions the block operator is `P = I_{⌊d/2⌋} ⊗ q`, followed
//! by a trailing `1` on the diagonal when `d` is odd, where `q` is a unit
//! Bloch-vector combination of Pauli matrices.

use std::f64::consts::{FRAC_PI_4, SQRT_2};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::matrix::{kron, ComplexMatrix, PSD_CLAMP};

const COMPLETENESS_TOL: f64 = 1e-12;
const SPECTRUM_TOL: f64 = 1e-10;

pub(crate) fn check_theta(theta: f64) -> Result<()> {
    if theta > 0.0 && theta <= FRAC_PI_4 + 1e-12 {
        Ok(())
    } else {
        Err(Error::InvalidTheta(theta))
    }
}

pub(crate) fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidGamma(gamma))
    }
}

/// One observer's binary measurement for one input: effects `{E, I − E}`
/// with their principal square roots.
#[derive(Clone, Debug)]
pub struct PovmPair {
    effects: [ComplexMatrix; 2],
    sqrts: [ComplexMatrix; 2],
}

impl PovmPair {
    /// Completes `effect0` to `{effect0, I − effect0}` and caches both square
    /// roots.
    pub fn from_effect(effect0: ComplexMatrix) -> Result<Self> {
        let eig = effect0.eigen_hermitian()?;
        let (lo, hi) = (eig.values[0], *eig.values.last().unwrap());
        if lo < -SPECTRUM_TOL || hi > 1.0 + SPECTRUM_TOL {
            return Err(Error::InvalidMeasurement(format!(
                "effect spectrum [{lo}, {hi}] is not inside [0, 1]"
            )));
        }
        let effect1 = &ComplexMatrix::identity(effect0.dim()) - &effect0;
        let sqrt0 = effect0.psd_sqrt()?;
        let sqrt1 = effect1.psd_sqrt()?;
        Ok(Self { effects: [effect0, effect1], sqrts: [sqrt0, sqrt1] })
    }

    /// `½(I + g·P)`
    pub fn unsharp(block: &ComplexMatrix, g: f64) -> Result<Self> {
        Self::from_effect(unsharp_effect(block, g))
    }

    pub fn dim(&self) -> usize {
        self.effects[0].dim()
    }

    pub fn effect(&self, outcome: usize) -> &ComplexMatrix {
        &self.effects[outcome]
    }

    pub fn sqrt_effect(&self, outcome: usize) -> &ComplexMatrix {
        &self.sqrts[outcome]
    }

    pub fn effects(&self) -> &[ComplexMatrix; 2] {
        &self.effects
    }

    pub fn sqrt_effects(&self) -> &[ComplexMatrix; 2] {
        &self.sqrts
    }

    /// `E₀ − E₁`
    pub fn observable(&self) -> Observable {
        Observable(&self.effects[0] - &self.effects[1])
    }

    /// Largest entry of `E₀ + E₁ − I`.
    pub fn completeness_error(&self) -> f64 {
        let sum = &self.effects[0] + &self.effects[1];
        sum.max_abs_diff(&ComplexMatrix::identity(self.dim()))
    }

    /// Checks the stored pair against its invariants: completeness,
    /// PSD effects, and `sqrtᵢ² = effectᵢ`.
    pub fn validate(&self) -> Result<()> {
        let err = self.completeness_error();
        if err > COMPLETENESS_TOL {
            return Err(Error::InvalidMeasurement(format!("effects sum to I only within {err:e}")));
        }
        for (e, r) in self.effects.iter().zip(&self.sqrts) {
            let min = e.min_eigenvalue()?;
            if min < -PSD_CLAMP {
                return Err(Error::NotPsd(min));
            }
            let sq = (r * r).max_abs_diff(e);
            if sq > 1e-9 {
                return Err(Error::InvalidMeasurement(format!("square root is off by {sq:e}")));
            }
        }
        Ok(())
    }
}

/// Hermitian operator with spectrum in `[−1, 1]`.
#[derive(Clone, Debug)]
pub struct Observable(ComplexMatrix);

impl Observable {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let eig = matrix.eigen_hermitian()?;
        let (lo, hi) = (eig.values[0], *eig.values.last().unwrap());
        if lo < -1.0 - SPECTRUM_TOL || hi > 1.0 + SPECTRUM_TOL {
            return Err(Error::InvalidMeasurement(format!(
                "observable spectrum [{lo}, {hi}] is not inside [-1, 1]"
            )));
        }
        Ok(Self(matrix))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }
}

/// `diag(I_{⌊d/2⌋} ⊗ q, 1)` for odd `d`, `I_{d/2} ⊗ q` for even `d`.
pub fn parity_block(dim: usize, q: &ComplexMatrix) -> ComplexMatrix {
    assert!(dim >= 2, "parity blocks need dimension >= 2");
    assert_eq!(q.dim(), 2, "parity blocks are built from 2x2 operators");
    let paired = kron(&ComplexMatrix::identity(dim / 2), q);
    if dim % 2 == 1 {
        paired.direct_sum(&ComplexMatrix::identity(1))
    } else {
        paired
    }
}

/// `½(I + g·P)`
pub fn unsharp_effect(block: &ComplexMatrix, g: f64) -> ComplexMatrix {
    (&ComplexMatrix::identity(block.dim()) + &block.scale(g)).scale(0.5)
}

/// Closed-form principal root of `½(I ± γP)` for `P² = I`:
/// `[(√(1+γ) + √(1−γ)) I ± (√(1+γ) − √(1−γ)) P] / (2√2)`.
///
/// Independent of the eigendecomposition route; used to cross-check it.
pub fn unsharp_sqrt_closed_form(block: &ComplexMatrix, gamma: f64, sign: f64) -> ComplexMatrix {
    let (a, b) = ((1.0 + gamma).sqrt(), (1.0 - gamma).sqrt());
    let norm = 2.0 * SQRT_2;
    &ComplexMatrix::identity(block.dim()).scale((a + b) / norm) + &block.scale(sign * (a - b) / norm)
}

fn rotated(cos_coeff: f64, z_like: &ComplexMatrix, sin_coeff: f64, x_like: &ComplexMatrix) -> ComplexMatrix {
    &z_like.scale(cos_coeff) + &x_like.scale(sin_coeff)
}

/// Alice's two projective measurements in dimension `s`, with block operators
/// built from `cos θ σ₃ ± sin θ σ₁`. Index = input.
pub fn alice_povms_bipartite(s: usize, theta: f64) -> Result<[PovmPair; 2]> {
    check_theta(theta)?;
    if s < 2 {
        return Err(Error::InvalidConfig(format!("Alice needs dimension >= 2, got {s}")));
    }
    let (sin, cos) = theta.sin_cos();
    let (z, x) = (ComplexMatrix::pauli_z(), ComplexMatrix::pauli_x());
    let p0 = parity_block(s, &rotated(cos, &z, sin, &x));
    let p1 = parity_block(s, &rotated(cos, &z, -sin, &x));
    Ok([PovmPair::unsharp(&p0, 1.0)?, PovmPair::unsharp(&p1, 1.0)?])
}

/// The k-th Bob's measurements in dimension `t`: input 0 is the projective
/// `σ₃` block, input 1 the `σ₁` block at sharpness `γ_k`.
pub fn bob_povms_bipartite(t: usize, gamma: f64) -> Result<[PovmPair; 2]> {
    check_gamma(gamma)?;
    if t < 2 {
        return Err(Error::InvalidConfig(format!("Bob needs dimension >= 2, got {t}")));
    }
    let p0 = parity_block(t, &ComplexMatrix::pauli_z());
    let p1 = parity_block(t, &ComplexMatrix::pauli_x());
    Ok([PovmPair::unsharp(&p0, 1.0)?, PovmPair::unsharp(&p1, gamma)?])
}

/// Qubit measurements for the three-party scenario.
#[derive(Clone, Debug)]
pub struct TripartiteMeasurements {
    pub alice: [PovmPair; 2],
    pub bob: [PovmPair; 2],
    pub charlie: [PovmPair; 2],
}

impl TripartiteMeasurements {
    /// `[A₀, A₁, B₀, B₁, C₀, C₁]`
    pub fn observables(&self) -> [Observable; 6] {
        [
            self.alice[0].observable(),
            self.alice[1].observable(),
            self.bob[0].observable(),
            self.bob[1].observable(),
            self.charlie[0].observable(),
            self.charlie[1].observable(),
        ]
    }
}

/// Alice measures `σ₁`/`σ₂`, Bob `cos θ σ₁ ∓ sin θ σ₂`, and the k-th Charlie
/// `σ₁` sharply and `σ₂` at sharpness `γ_k`.
pub fn tripartite_povms(theta: f64, gamma: f64) -> Result<TripartiteMeasurements> {
    check_theta(theta)?;
    check_gamma(gamma)?;
    let (sin, cos) = theta.sin_cos();
    let (x, y) = (ComplexMatrix::pauli_x(), ComplexMatrix::pauli_y());
    Ok(TripartiteMeasurements {
        alice: [PovmPair::unsharp(&x, 1.0)?, PovmPair::unsharp(&y, 1.0)?],
        bob: [
            PovmPair::unsharp(&rotated(cos, &x, -sin, &y), 1.0)?,
            PovmPair::unsharp(&rotated(cos, &x, sin, &y), 1.0)?,
        ],
        charlie: [PovmPair::unsharp(&x, 1.0)?, PovmPair::unsharp(&y, gamma)?],
    })
}

/// One entry of a sharpness schedule. `Unbounded` marks every observer after
/// the recursion left `(0, 1)`; it carries no number on purpose.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Sharpness {
    Finite(f64),
    Unbounded,
}

impl Sharpness {
    pub fn value(self) -> Option<f64> {
        match self {
            Sharpness::Finite(g) => Some(g),
            Sharpness::Unbounded => None,
        }
    }

    /// Usable as an unsharp measurement, i.e. inside `(0, 1)`.
    pub fn is_feasible(self) -> bool {
        matches!(self, Sharpness::Finite(g) if g > 0.0 && g < 1.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scenario {
    Chsh,
    Svetlichny,
}

impl Scenario {
    /// Largest value reachable by local (CHSH) or bi-local (Svetlichny)
    /// hidden-variable models.
    pub fn local_bound(self) -> f64 {
        match self {
            Scenario::Chsh => 2.0,
            Scenario::Svetlichny => 4.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ScheduleContext {
    Chsh { l: f64 },
    Svetlichny { sin_2alpha: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SharpnessSchedule {
    gammas: Vec<Sharpness>,
    theta: f64,
    epsilon: f64,
    context: ScheduleContext,
}

impl SharpnessSchedule {
    pub fn gammas(&self) -> &[Sharpness] {
        &self.gammas
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn context(&self) -> ScheduleContext {
        self.context
    }

    pub fn scenario(&self) -> Scenario {
        match self.context {
            ScheduleContext::Chsh { .. } => Scenario::Chsh,
            ScheduleContext::Svetlichny { .. } => Scenario::Svetlichny,
        }
    }

    pub fn len(&self) -> usize {
        self.gammas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gammas.is_empty()
    }

    /// All finite entries, in order (the last one may be ≥ 1).
    pub fn finite(&self) -> Vec<f64> {
        self.gammas.iter().map_while(|g| g.value()).collect()
    }

    /// Number of leading entries inside `(0, 1)`.
    pub fn feasible_len(&self) -> usize {
        self.gammas.iter().take_while(|g| g.is_feasible()).count()
    }

    /// The first `n` sharpness values, if all of them are inside `(0, 1)`.
    pub fn feasible_prefix(&self, n: usize) -> Option<Vec<f64>> {
        (self.feasible_len() >= n).then(|| self.gammas[..n].iter().filter_map(|g| g.value()).collect())
    }
}

/// Builds `n` entries from `next(∏_{j<k}(1 + √(1 − γ_j²)))`. The first value
/// outside `(0, 1)` is kept; everything after it is `Unbounded`.
fn build_schedule(n: usize, mut next: impl FnMut(&Products) -> f64) -> Vec<Sharpness> {
    let mut out = Vec::with_capacity(n);
    let mut products = Products::new();
    while out.len() < n {
        let g = next(&products);
        if !g.is_finite() {
            break;
        }
        out.push(Sharpness::Finite(g));
        if !(g > 0.0 && g < 1.0) {
            break;
        }
        products.push(g);
    }
    out.resize(n, Sharpness::Unbounded);
    out
}

/// Running `∏ (1 + √(1 − γ_j²))` together with its deficit from `2^{k−1}`,
/// the latter accumulated without cancellation for small `γ`.
struct Products {
    product: f64,
    deficit: f64,
    power: f64,
}

impl Products {
    fn new() -> Self {
        Self { product: 1.0, deficit: 0.0, power: 1.0 }
    }

    fn push(&mut self, gamma: f64) {
        let root = (1.0 - gamma * gamma).max(0.0).sqrt();
        // 1 - √(1-γ²) written without subtraction
        let d = gamma * gamma / (1.0 + root);
        self.deficit = 2.0 * self.deficit + d * self.product;
        self.product *= 1.0 + root;
        self.power *= 2.0;
    }
}

/// CHSH schedule: `γ_k = (1+ε)(2^{k−1} − cos θ ∏_{j<k}(1 + √(1 − γ_j²))) / (L sin θ)`,
/// continued only while the previous entry lies in `(0, 1)`.
pub fn gamma_schedule_chsh(l: f64, epsilon: f64, theta: f64, n: usize) -> SharpnessSchedule {
    let context = ScheduleContext::Chsh { l };
    let gammas = if l > 0.0 {
        let (sin, cos) = theta.sin_cos();
        let one_minus_cos = 2.0 * (theta / 2.0).sin().powi(2);
        build_schedule(n, |p| {
            // 2^{k-1} - cosθ·∏ = (2^{k-1} - ∏) + (1 - cosθ)·∏
            let numerator = p.deficit + one_minus_cos * p.product;
            debug_assert!((numerator - (p.power - cos * p.product)).abs() < 1e-9 * p.power);
            (1.0 + epsilon) * numerator / (l * sin)
        })
    } else {
        vec![Sharpness::Unbounded; n]
    };
    SharpnessSchedule { gammas, theta, epsilon, context }
}

/// Svetlichny schedule: `γ_k = (1+ε)(2^k / (sin 2α (cos θ + sin θ)) − ∏_{j<k}(1 + √(1 − γ_j²)))`.
pub fn gamma_schedule_svetlichny(sin_2alpha: f64, epsilon: f64, theta: f64, n: usize) -> SharpnessSchedule {
    let context = ScheduleContext::Svetlichny { sin_2alpha };
    let (sin, cos) = theta.sin_cos();
    let scale = 1.0 / (sin_2alpha * (cos + sin));
    let gammas = build_schedule(n, |p| (1.0 + epsilon) * (2.0 * p.power * scale - p.product));
    SharpnessSchedule { gammas, theta, epsilon, context }
}

/// Result of a θ feasibility search.
#[derive(Clone, Debug)]
pub struct ThetaSearch {
    /// Edge of the feasible region found by the search.
    pub theta_n: f64,
    /// Working angle, strictly inside the feasible region.
    pub theta: f64,
    pub schedule: SharpnessSchedule,
}

/// Grid-plus-bisection search over `θ ∈ (0, π/4]`.
#[derive(Clone, Copy, Debug)]
pub struct GridSearch {
    pub points: usize,
    pub bisection_steps: usize,
    pub floor: f64,
    pub execution: Execution,
}

impl Default for GridSearch {
    fn default() -> Self {
        Self { points: 10_000, bisection_steps: 60, floor: 1e-9, execution: Execution::default() }
    }
}

impl GridSearch {
    pub fn sequential() -> Self {
        Self { execution: Execution::Sequential, ..Self::default() }
    }

    /// `θ_i = i·(π/4)/points`, `i = 1..=points`.
    pub fn grid(&self) -> Vec<f64> {
        let step = FRAC_PI_4 / self.points as f64;
        (1..=self.points).map(|i| if i == self.points { FRAC_PI_4 } else { i as f64 * step }).collect()
    }

    fn check_inputs(n: usize, epsilon: f64) -> Result<()> {
        if n == 0 {
            return Err(Error::InvalidConfig("n must be at least 1".into()));
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidConfig(format!("epsilon = {epsilon} must be positive")));
        }
        Ok(())
    }

    /// Largest θ on the grid (refined by bisection) with `γ_k(θ) < 1` for all
    /// `k ≤ n`; the working angle is half of it.
    pub fn find_theta_chsh(&self, n: usize, l: f64, epsilon: f64) -> Result<ThetaSearch> {
        Self::check_inputs(n, epsilon)?;
        if !(l > 0.0 && l <= 1.0 + 1e-12) {
            return Err(Error::InvalidConfig(format!("L = {l} must lie in (0, 1]")));
        }
        let feasible_len = |theta: f64| gamma_schedule_chsh(l, epsilon, theta, n).feasible_len();
        let feasible = |theta: f64| feasible_len(theta) >= n;

        let grid = self.grid();
        let lens = self.execution.map(&grid, |&t| feasible_len(t));
        let (mut lo, mut hi) = match lens.iter().rposition(|&m| m >= n) {
            Some(i) if i + 1 == grid.len() => (grid[i], grid[i]),
            Some(i) => (grid[i], grid[i + 1]),
            None => {
                let mut hi = grid[0];
                let mut lo = hi / 2.0;
                while !feasible(lo) {
                    hi = lo;
                    lo /= 2.0;
                    if lo < self.floor {
                        let best = lens.iter().copied().max().unwrap_or(0).max(feasible_len(self.floor));
                        return Err(Error::SearchFailed(format!(
                            "no feasible theta for k={} above {:e} (L = {l}, epsilon = {epsilon})",
                            best + 1,
                            self.floor
                        )));
                    }
                }
                (lo, hi)
            }
        };
        if lo < hi {
            for _ in 0..self.bisection_steps {
                let mid = 0.5 * (lo + hi);
                if feasible(mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
        }
        let theta_n = lo;
        let theta = theta_n / 2.0;
        let schedule = gamma_schedule_chsh(l, epsilon, theta, n);
        if schedule.feasible_len() < n {
            return Err(Error::SearchFailed(format!(
                "schedule at theta_n/2 = {theta} is not feasible for k={}",
                schedule.feasible_len() + 1
            )));
        }
        Ok(ThetaSearch { theta_n, theta, schedule })
    }

    /// Largest grid θ with `γ_k(θ) < 1` for all `k ≤ n` on the Svetlichny
    /// schedule. Both `theta_n` and `theta` report that grid point.
    pub fn find_theta_svetlichny(&self, n: usize, sin_2alpha: f64, epsilon: f64) -> Result<ThetaSearch> {
        Self::check_inputs(n, epsilon)?;
        if !(sin_2alpha > 0.0 && sin_2alpha <= 1.0) {
            return Err(Error::InvalidConfig(format!("sin(2 alpha) = {sin_2alpha} must lie in (0, 1]")));
        }
        let grid = self.grid();
        let lens = self
            .execution
            .map(&grid, |&t| gamma_schedule_svetlichny(sin_2alpha, epsilon, t, n).feasible_len());
        match lens.iter().rposition(|&m| m >= n) {
            Some(i) => {
                let theta = grid[i];
                let schedule = gamma_schedule_svetlichny(sin_2alpha, epsilon, theta, n);
                Ok(ThetaSearch { theta_n: theta, theta, schedule })
            }
            None => {
                let best = lens.iter().copied().max().unwrap_or(0);
                Err(Error::SearchFailed(format!("no feasible theta for k={}", best + 1)))
            }
        }
    }
}

/// [`GridSearch::find_theta_chsh`] with the default grid.
pub fn find_theta_n(n: usize, l: f64, epsilon: f64) -> Result<ThetaSearch> {
    GridSearch::default().find_theta_chsh(n, l, epsilon)
}

/// [`GridSearch::find_theta_svetlichny`] with the default grid.
pub fn find_theta_svetlichny(n: usize, sin_2alpha: f64, epsilon: f64) -> Result<ThetaSearch> {
    GridSearch::default().find_theta_svetlichny(n, sin_2alpha, epsilon)
}
