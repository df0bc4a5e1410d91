//! Sequential observers on one subsystem.
//!
//! Each observer picks one of two inputs uniformly at random, measures, and
//! forwards the post-measurement system. Averaged over inputs and outcomes
//! the state evolves through the Lüders channel
//!
//! ```text
//! ρ ↦ ½ Σ_{y,b} (I ⊗ √E_{b|y}) ρ (I ⊗ √E_{b|y})
//! ```
//!
//! which is trace preserving. Expectations are computed exactly by trace,
//! and the closed forms live next to them so every step can be compared
//! against theory.

use crate::error::{Error, Result};
use crate::matrix::{kron, ComplexMatrix, HERMITIAN_TOL, PSD_CLAMP};
use crate::measurements::{
    alice_povms_bipartite, bob_povms_bipartite, check_gamma, check_theta, tripartite_povms,
    Observable, PovmPair, Scenario, SharpnessSchedule,
};
use crate::states::{GhzState, SchmidtState};

/// Imaginary parts of expectation values above this are treated as a bug.
pub const IMAG_TOL: f64 = 1e-10;

/// Tolerance on the trace, Hermiticity and PSD checks run at every step.
pub const CHANNEL_TOL: f64 = 1e-10;

/// Places a local operator at a position of a tensor product:
/// `I_before ⊗ op ⊗ I_after`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Embedding {
    pub before: usize,
    pub after: usize,
}

impl Embedding {
    /// Operator acts on the last tensor factor.
    pub fn last(leading_dim: usize) -> Self {
        Self { before: leading_dim, after: 1 }
    }

    pub fn total_dim(&self, local_dim: usize) -> usize {
        self.before * local_dim * self.after
    }

    pub fn apply(&self, op: &ComplexMatrix) -> ComplexMatrix {
        let mut out = op.clone();
        if self.before > 1 {
            out = kron(&ComplexMatrix::identity(self.before), &out);
        }
        if self.after > 1 {
            out = kron(&out, &ComplexMatrix::identity(self.after));
        }
        out
    }
}

/// One averaged Lüders update by an observer with two inputs.
pub fn luders_step(rho: &ComplexMatrix, measured: &[PovmPair; 2], embedding: Embedding) -> Result<ComplexMatrix> {
    for pair in measured {
        let dim = embedding.total_dim(pair.dim());
        if dim != rho.dim() {
            return Err(Error::DimensionMismatch(format!(
                "embedded effect is {dim}x{dim} but the state is {n}x{n}",
                n = rho.dim()
            )));
        }
    }
    let mut out = ComplexMatrix::zeros(rho.dim());
    for pair in measured {
        for root in pair.sqrt_effects() {
            let k = embedding.apply(root);
            out = &out + &rho.sandwich(&k);
        }
    }
    Ok(out.scale(0.5))
}

/// `Re Tr(op · ρ)`, refusing a non-negligible imaginary part.
pub fn expectation(rho: &ComplexMatrix, op: &ComplexMatrix) -> Result<f64> {
    if rho.dim() != op.dim() {
        return Err(Error::DimensionMismatch(format!(
            "operator is {}x{} but the state is {}x{}",
            op.dim(),
            op.dim(),
            rho.dim(),
            rho.dim()
        )));
    }
    let n = rho.dim();
    let mut z = num_complex::Complex64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            z += op[(i, j)] * rho[(j, i)];
        }
    }
    if z.im.abs() > IMAG_TOL {
        return Err(Error::ImaginaryResidue(z.im));
    }
    Ok(z.re)
}

/// `A₀⊗B₀ + A₀⊗B₁ + A₁⊗B₀ − A₁⊗B₁`
pub fn chsh_operator(a0: &Observable, a1: &Observable, b0: &Observable, b1: &Observable) -> ComplexMatrix {
    let (a0, a1, b0, b1) = (a0.matrix(), a1.matrix(), b0.matrix(), b1.matrix());
    let sum = b0 + b1;
    let diff = b0 - b1;
    &kron(a0, &sum) + &kron(a1, &diff)
}

pub fn chsh_expectation(
    rho: &ComplexMatrix,
    a0: &Observable,
    a1: &Observable,
    b0: &Observable,
    b1: &Observable,
) -> Result<f64> {
    if a0.dim() != a1.dim() || b0.dim() != b1.dim() {
        return Err(Error::DimensionMismatch("paired observables differ in size".into()));
    }
    expectation(rho, &chsh_operator(a0, a1, b0, b1))
}

fn kron3(a: &ComplexMatrix, b: &ComplexMatrix, c: &ComplexMatrix) -> ComplexMatrix {
    kron(&kron(a, b), c)
}

/// `A₀(B₀+B₁)C₀ + A₀(B₀−B₁)C₁ + A₁(B₀−B₁)C₀ − A₁(B₀+B₁)C₁`
pub fn svetlichny_operator(obs: &[Observable; 6]) -> ComplexMatrix {
    let [a0, a1, b0, b1, c0, c1] = obs.each_ref().map(Observable::matrix);
    let sum = b0 + b1;
    let diff = b0 - b1;
    let terms = [
        kron3(a0, &sum, c0),
        kron3(a0, &diff, c1),
        kron3(a1, &diff, c0),
        kron3(a1, &sum, c1).scale(-1.0),
    ];
    terms.iter().skip(1).fold(terms[0].clone(), |acc, t| &acc + t)
}

/// Observables ordered `[A₀, A₁, B₀, B₁, C₀, C₁]`, all qubit operators.
pub fn svetlichny_expectation(rho: &ComplexMatrix, obs: &[Observable; 6]) -> Result<f64> {
    if obs.iter().any(|o| o.dim() != 2) {
        return Err(Error::DimensionMismatch("Svetlichny observables must be 2x2".into()));
    }
    if rho.dim() != 8 {
        return Err(Error::DimensionMismatch(format!("three-qubit state must be 8x8, got {}", rho.dim())));
    }
    expectation(rho, &svetlichny_operator(obs))
}

/// `∏_{j<k} (1 + √(1 − γ_j²))`
fn disturbance_product(gammas: &[f64], k: usize) -> f64 {
    gammas[..k - 1].iter().map(|g| 1.0 + (1.0 - g * g).max(0.0).sqrt()).product()
}

/// Lower bound on the CHSH value seen by the k-th Bob:
/// `2^{2−k} [γ_k L sin θ + cos θ ∏_{j<k}(1 + √(1 − γ_j²))]`.
/// Exact when both local dimensions are even.
pub fn chsh_lower_bound(k: usize, l: f64, theta: f64, gammas: &[f64]) -> f64 {
    assert!(k >= 1 && gammas.len() >= k, "need gammas for observers 1..=k");
    let (sin, cos) = theta.sin_cos();
    2f64.powi(2 - k as i32) * (gammas[k - 1] * l * sin + cos * disturbance_product(gammas, k))
}

/// Exact CHSH value for the first Bob:
/// `2 cos θ (1 − c_s²) + 2 c_s² + 2 γ₁ L sin θ` when `s` is odd (the unpaired
/// last level contributes without the `cos θ` factor), and
/// `2 cos θ + 2 γ₁ L sin θ` when `s` is even.
pub fn chsh_first_observer_exact(state: &SchmidtState, theta: f64, gamma1: f64) -> f64 {
    let (sin, cos) = theta.sin_cos();
    let tail = if state.dim_a() % 2 == 1 { state.coeffs().last().unwrap().powi(2) } else { 0.0 };
    2.0 * cos * (1.0 - tail) + 2.0 * tail + 2.0 * gamma1 * state.l_value() * sin
}

/// Svetlichny value seen by the k-th Charlie:
/// `2^{2−k} sin 2α (cos θ + sin θ)(γ_k + ∏_{j<k}(1 + √(1 − γ_j²)))`.
pub fn svetlichny_closed_form(k: usize, sin_2alpha: f64, theta: f64, gammas: &[f64]) -> f64 {
    assert!(k >= 1 && gammas.len() >= k, "need gammas for observers 1..=k");
    let (sin, cos) = theta.sin_cos();
    2f64.powi(2 - k as i32) * sin_2alpha * (cos + sin) * (gammas[k - 1] + disturbance_product(gammas, k))
}

#[derive(Clone, Debug, PartialEq)]
pub enum InitialState {
    Bipartite(SchmidtState),
    Ghz(GhzState),
}

impl InitialState {
    pub fn scenario(&self) -> Scenario {
        match self {
            InitialState::Bipartite(_) => Scenario::Chsh,
            InitialState::Ghz(_) => Scenario::Svetlichny,
        }
    }

    pub fn density(&self) -> ComplexMatrix {
        match self {
            InitialState::Bipartite(s) => s.density(),
            InitialState::Ghz(g) => g.density(),
        }
    }
}

/// Everything needed to run `n = gammas.len()` sequential observers.
#[derive(Clone, Debug, PartialEq)]
pub struct CascadeConfig {
    state: InitialState,
    theta: f64,
    gammas: Vec<f64>,
}

impl CascadeConfig {
    pub fn new(state: InitialState, theta: f64, gammas: Vec<f64>) -> Result<Self> {
        check_theta(theta)?;
        if gammas.is_empty() {
            return Err(Error::InvalidConfig("a cascade needs at least one observer".into()));
        }
        for &g in &gammas {
            check_gamma(g)?;
        }
        if let InitialState::Bipartite(s) = &state {
            if s.dim_a() < 2 {
                return Err(Error::InvalidConfig("bipartite cascades need dim_a >= 2".into()));
            }
        }
        Ok(Self { state, theta, gammas })
    }

    /// The first `n` observers of `schedule`, which must all be inside `(0, 1)`.
    pub fn from_schedule(state: InitialState, schedule: &SharpnessSchedule, n: usize) -> Result<Self> {
        if state.scenario() != schedule.scenario() {
            return Err(Error::InvalidConfig("schedule was built for a different scenario".into()));
        }
        let gammas = schedule.feasible_prefix(n).ok_or_else(|| {
            Error::InvalidConfig(format!(
                "schedule has only {} usable observers, {n} requested",
                schedule.feasible_len()
            ))
        })?;
        Self::new(state, schedule.theta(), gammas)
    }

    pub fn state(&self) -> &InitialState {
        &self.state
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    pub fn n(&self) -> usize {
        self.gammas.len()
    }

    pub fn scenario(&self) -> Scenario {
        self.state.scenario()
    }

    /// Sequential observers' measurements and where they act.
    fn observers(&self) -> Result<(Embedding, Vec<[PovmPair; 2]>)> {
        match &self.state {
            InitialState::Bipartite(s) => {
                let povms = self
                    .gammas
                    .iter()
                    .map(|&g| bob_povms_bipartite(s.dim_b(), g))
                    .collect::<Result<_>>()?;
                Ok((Embedding::last(s.dim_a()), povms))
            }
            InitialState::Ghz(_) => {
                let povms = self
                    .gammas
                    .iter()
                    .map(|&g| tripartite_povms(self.theta, g).map(|m| m.charlie))
                    .collect::<Result<_>>()?;
                Ok((Embedding::last(4), povms))
            }
        }
    }
}

/// Numbers behind the per-step channel checks.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StateCheck {
    pub trace: f64,
    pub hermiticity_error: f64,
    pub min_eigenvalue: f64,
}

/// Verifies unit trace, Hermiticity and positivity of the state handed to
/// observer `observer`.
pub fn check_density(rho: &ComplexMatrix, observer: usize) -> Result<StateCheck> {
    let fail = |detail: String| Error::ChannelViolation { observer, detail };
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > CHANNEL_TOL || tr.im.abs() > CHANNEL_TOL {
        return Err(fail(format!("trace = {tr}")));
    }
    let herm = rho.hermiticity_error();
    if herm > HERMITIAN_TOL {
        return Err(fail(format!("hermiticity error {herm:e}")));
    }
    let min = rho.min_eigenvalue()?;
    if min < -PSD_CLAMP {
        return Err(fail(format!("smallest eigenvalue {min:e}")));
    }
    Ok(StateCheck { trace: tr.re, hermiticity_error: herm, min_eigenvalue: min })
}

/// `ρ^(1), …, ρ^(n)`: the state each sequential observer receives.
pub fn state_sequence(cfg: &CascadeConfig) -> Result<Vec<ComplexMatrix>> {
    let (embedding, observers) = cfg.observers()?;
    let mut states = Vec::with_capacity(cfg.n());
    let mut rho = cfg.state.density();
    for (idx, povms) in observers.iter().enumerate() {
        if idx + 1 == observers.len() {
            states.push(rho);
            break;
        }
        let next = luders_step(&rho, povms, embedding)?;
        states.push(rho);
        rho = next;
    }
    Ok(states)
}

/// Per-observer record of a cascade run.
#[derive(Clone, Debug, PartialEq)]
pub struct CascadeStep {
    pub k: usize,
    pub gamma: f64,
    /// Exact `Tr(𝔹ρ^(k))` or `Tr(Sρ^(k))`.
    pub simulated: f64,
    /// Theory value: the lower bound for CHSH, the exact value for Svetlichny.
    pub closed_form: f64,
    pub violated: bool,
    pub check: StateCheck,
}

impl CascadeStep {
    pub fn gap(&self) -> f64 {
        self.simulated - self.closed_form
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CascadeResult {
    pub scenario: Scenario,
    pub theta: f64,
    pub steps: Vec<CascadeStep>,
}

impl CascadeResult {
    pub fn all_violated(&self) -> bool {
        self.steps.iter().all(|s| s.violated)
    }

    /// Number of leading observers that see a violation.
    pub fn leading_violations(&self) -> usize {
        self.steps.iter().take_while(|s| s.violated).count()
    }

    pub fn final_trace(&self) -> f64 {
        self.steps.last().map_or(1.0, |s| s.check.trace)
    }
}

pub fn run_chsh_cascade(cfg: &CascadeConfig) -> Result<CascadeResult> {
    let InitialState::Bipartite(state) = cfg.state() else {
        return Err(Error::InvalidConfig("CHSH cascades need a bipartite Schmidt state".into()));
    };
    let [a0, a1] = alice_povms_bipartite(state.dim_a(), cfg.theta)?.map(|p| p.observable());
    let l = state.l_value();
    let (_, observers) = cfg.observers()?;
    let states = state_sequence(cfg)?;

    let mut steps = Vec::with_capacity(cfg.n());
    for (idx, (rho, bob)) in states.iter().zip(&observers).enumerate() {
        let k = idx + 1;
        let check = check_density(rho, k)?;
        let simulated = chsh_expectation(rho, &a0, &a1, &bob[0].observable(), &bob[1].observable())?;
        steps.push(CascadeStep {
            k,
            gamma: cfg.gammas[idx],
            simulated,
            closed_form: chsh_lower_bound(k, l, cfg.theta, &cfg.gammas),
            violated: simulated > Scenario::Chsh.local_bound(),
            check,
        });
    }
    Ok(CascadeResult { scenario: Scenario::Chsh, theta: cfg.theta, steps })
}

pub fn run_svetlichny_cascade(cfg: &CascadeConfig) -> Result<CascadeResult> {
    let InitialState::Ghz(ghz) = cfg.state() else {
        return Err(Error::InvalidConfig("Svetlichny cascades need a GHZ state".into()));
    };
    let states = state_sequence(cfg)?;

    let mut steps = Vec::with_capacity(cfg.n());
    for (idx, rho) in states.iter().enumerate() {
        let k = idx + 1;
        let check = check_density(rho, k)?;
        let obs = tripartite_povms(cfg.theta, cfg.gammas[idx])?.observables();
        let simulated = svetlichny_expectation(rho, &obs)?;
        steps.push(CascadeStep {
            k,
            gamma: cfg.gammas[idx],
            simulated,
            closed_form: svetlichny_closed_form(k, ghz.sin_2alpha(), cfg.theta, &cfg.gammas),
            violated: simulated > Scenario::Svetlichny.local_bound(),
            check,
        });
    }
    Ok(CascadeResult { scenario: Scenario::Svetlichny, theta: cfg.theta, steps })
}

/// Dispatches on the initial state.
pub fn run_cascade(cfg: &CascadeConfig) -> Result<CascadeResult> {
    match cfg.scenario() {
        Scenario::Chsh => run_chsh_cascade(cfg),
        Scenario::Svetlichny => run_svetlichny_cascade(cfg),
    }
}
