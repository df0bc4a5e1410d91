//! Self-check harness: closed forms against brute-force simulation on seeded
//! random and fixed grids.

use std::f64::consts::{FRAC_PI_4, FRAC_PI_8, SQRT_2};
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cascade::{
    chsh_first_observer_exact, run_cascade, CascadeConfig, CascadeResult, InitialState,
};
use crate::error::{Error, Result};
use crate::matrix::ComplexMatrix;
use crate::measurements::{
    alice_povms_bipartite, bob_povms_bipartite, gamma_schedule_svetlichny, unsharp_sqrt_closed_form, GridSearch, PovmPair,
};
use crate::states::{GhzState, SchmidtState};
use crate::table::{Table, Value};

const SEED: u64 = 0x5eed_cafe;
const EXACT_TOL: f64 = 1e-10;
const CEILING_TOL: f64 = 1e-9;
const SCHEDULE_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    AppendixA,
    Theorem3,
    Theorem4,
    Channel,
    All,
}

impl Suite {
    pub const NAMES: [&'static str; 5] = ["appendix-a", "theorem-3", "theorem-4", "channel", "all"];

    pub fn name(self) -> &'static str {
        match self {
            Suite::AppendixA => "appendix-a",
            Suite::Theorem3 => "theorem-3",
            Suite::Theorem4 => "theorem-4",
            Suite::Channel => "channel",
            Suite::All => "all",
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "appendix-a" => Ok(Suite::AppendixA),
            "theorem-3" => Ok(Suite::Theorem3),
            "theorem-4" => Ok(Suite::Theorem4),
            "channel" => Ok(Suite::Channel),
            "all" => Ok(Suite::All),
            other => Err(Error::InvalidConfig(format!(
                "unknown suite '{other}', expected one of {}",
                Suite::NAMES.join(", ")
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub suite: Suite,
    pub name: &'static str,
    pub max_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn new(suite: Suite, name: &'static str, max_error: f64, tolerance: f64) -> Self {
        Self { suite, name, max_error, tolerance, passed: max_error <= tolerance }
    }
}

pub fn run_suite(suite: Suite) -> Result<Vec<Check>> {
    match suite {
        Suite::AppendixA => appendix_a(),
        Suite::Theorem3 => svetlichny_checks(),
        Suite::Theorem4 => threshold_checks(),
        Suite::Channel => channel(),
        Suite::All => {
            let mut all = Vec::new();
            for s in [Suite::AppendixA, Suite::Theorem3, Suite::Theorem4, Suite::Channel] {
                all.extend(run_suite(s)?);
            }
            Ok(all)
        }
    }
}

pub fn checks_table(checks: &[Check]) -> Table {
    let mut table = Table::new(&["suite", "check", "max_error", "tolerance", "passed"]);
    for c in checks {
        table.push(vec![
            c.suite.name().into(),
            c.name.into(),
            c.max_error.into(),
            c.tolerance.into(),
            Value::Bool(c.passed),
        ]);
    }
    table
}

fn random_schmidt(rng: &mut ChaCha8Rng, s: usize, t: usize) -> SchmidtState {
    let mut c: Vec<f64> = (0..s).map(|_| rng.gen_range(0.05..1.0)).collect();
    c.sort_by(|a, b| b.total_cmp(a));
    SchmidtState::normalized(c, t).expect("random coefficients are valid").0
}

fn random_theta(rng: &mut ChaCha8Rng) -> f64 {
    rng.gen_range(0.01..=FRAC_PI_4)
}

fn random_gammas(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(0.05..=1.0)).collect()
}

fn max_gap(result: &CascadeResult) -> f64 {
    result.steps.iter().map(|s| s.gap().abs()).fold(0.0, f64::max)
}

fn bipartite(state: SchmidtState, theta: f64, gammas: Vec<f64>) -> Result<CascadeResult> {
    run_cascade(&CascadeConfig::new(InitialState::Bipartite(state), theta, gammas)?)
}

fn sqrt_error(pair: &PovmPair, block: &ComplexMatrix, gamma: f64) -> Result<f64> {
    let mut err: f64 = 0.0;
    for (outcome, sign) in [(0, 1.0), (1, -1.0)] {
        let eig = pair.effect(outcome).psd_sqrt()?;
        err = err.max(eig.max_abs_diff(&unsharp_sqrt_closed_form(block, gamma, sign)));
    }
    Ok(err)
}

fn appendix_a() -> Result<Vec<Check>> {
    let suite = Suite::AppendixA;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut checks = Vec::new();

    // Eigendecomposition root against the closed form, both parities.
    let mut err: f64 = 0.0;
    for dim in 2..=7 {
        for theta in [0.1, FRAC_PI_8, FRAC_PI_4] {
            for pair in alice_povms_bipartite(dim, theta)? {
                let block = pair.observable().matrix().clone();
                err = err.max(sqrt_error(&pair, &block, 1.0)?);
            }
        }
        for i in 1..=10 {
            let gamma = i as f64 / 10.0;
            let [_, pair] = bob_povms_bipartite(dim, gamma)?;
            let block = pair.observable().matrix().scale(1.0 / gamma);
            err = err.max(sqrt_error(&pair, &block, gamma)?);
        }
    }
    checks.push(Check::new(suite, "sqrt_closed_form", err, EXACT_TOL));

    let mut err: f64 = 0.0;
    for dim in [2, 4, 6] {
        for _ in 0..5 {
            let state = random_schmidt(&mut rng, dim, dim);
            let (theta, gammas) = (random_theta(&mut rng), random_gammas(&mut rng, 5));
            err = err.max(max_gap(&bipartite(state, theta, gammas)?));
        }
    }
    checks.push(Check::new(suite, "even_dimension_equality", err, EXACT_TOL));

    let mut err: f64 = 0.0;
    for (s, t) in [(2, 2), (3, 3), (2, 3), (3, 4), (4, 5), (5, 5)] {
        for _ in 0..4 {
            let state = random_schmidt(&mut rng, s, t);
            let (theta, gammas) = (random_theta(&mut rng), random_gammas(&mut rng, 1));
            let exact = chsh_first_observer_exact(&state, theta, gammas[0]);
            let sim = bipartite(state, theta, gammas)?.steps[0].simulated;
            err = err.max((sim - exact).abs());
        }
    }
    checks.push(Check::new(suite, "first_observer_all_parities", err, EXACT_TOL));

    // The bound may be loose for odd dimensions but never exceeds the value.
    let mut err: f64 = 0.0;
    for (s, t) in [(3, 3), (2, 3), (3, 4), (4, 5), (5, 6)] {
        for _ in 0..4 {
            let state = random_schmidt(&mut rng, s, t);
            let (theta, gammas) = (random_theta(&mut rng), random_gammas(&mut rng, 4));
            let res = bipartite(state, theta, gammas)?;
            err = err.max(res.steps.iter().map(|st| (-st.gap()).max(0.0)).fold(0.0, f64::max));
        }
    }
    checks.push(Check::new(suite, "lower_bound_all_parities", err, EXACT_TOL));
    Ok(checks)
}

fn svetlichny_checks() -> Result<Vec<Check>> {
    let suite = Suite::Theorem3;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 3);
    let mut err: f64 = 0.0;
    for alpha in [0.2, FRAC_PI_8, FRAC_PI_4, 1.2] {
        for theta in [0.1, 0.4, FRAC_PI_4] {
            let gammas = random_gammas(&mut rng, 4);
            let cfg = CascadeConfig::new(InitialState::Ghz(GhzState::new(alpha)?), theta, gammas)?;
            err = err.max(max_gap(&run_cascade(&cfg)?));
        }
    }
    let ghz = InitialState::Ghz(GhzState::new(FRAC_PI_4)?);
    let top = run_cascade(&CascadeConfig::new(ghz, FRAC_PI_4, vec![1.0])?)?.steps[0].simulated;
    Ok(vec![
        Check::new(suite, "svetlichny_equality", err, EXACT_TOL),
        Check::new(suite, "svetlichny_maximum", (top - 4.0 * SQRT_2).abs(), EXACT_TOL),
    ])
}

/// Minimum of `γ₁(θ)` over the search grid.
fn gamma1_minimum(sin_2alpha: f64, epsilon: f64) -> f64 {
    GridSearch::sequential()
        .grid()
        .into_iter()
        .filter_map(|t| gamma_schedule_svetlichny(sin_2alpha, epsilon, t, 1).gammas()[0].value())
        .fold(f64::INFINITY, f64::min)
}

fn threshold_checks() -> Result<Vec<Check>> {
    let suite = Suite::Theorem4;
    let eps = 1e-6;
    let search = GridSearch::sequential();
    let boundary = (8.0f64 / 9.0).sqrt();

    let g_boundary = gamma1_minimum(boundary, eps);
    let g_max = gamma1_minimum(1.0, eps);

    // Count of parameters where a second sharing Charlie was (wrongly) found.
    let mut found = 0.0;
    for v in [8.0 / 9.0 + 1e-6, 8.0 / 9.0, 0.85, 0.7] {
        if search.find_theta_svetlichny(2, f64::sqrt(v), eps).is_ok() {
            found += 1.0;
        }
    }

    // Above the exact two-Charlie threshold both see a violation.
    let ghz = GhzState::from_sin2_2alpha(0.97)?;
    let pair = search.find_theta_svetlichny(2, ghz.sin_2alpha(), 0.01)?;
    let res = run_cascade(&CascadeConfig::from_schedule(InitialState::Ghz(ghz), &pair.schedule, 2)?)?;
    let shortfall = res.steps.iter().map(|s| (4.0 + SCHEDULE_TOL - s.simulated).max(0.0)).fold(0.0, f64::max);

    Ok(vec![
        Check::new(suite, "gamma1_minimum_at_boundary", (g_boundary - 0.5).abs(), SCHEDULE_TOL),
        Check::new(suite, "gamma1_minimum_at_maximal", (g_max - (SQRT_2 - 1.0)).abs(), SCHEDULE_TOL),
        Check::new(suite, "no_second_charlie_below_boundary", found, 0.0),
        Check::new(suite, "two_charlies_when_strongly_entangled", shortfall, 0.0),
    ])
}

fn channel() -> Result<Vec<Check>> {
    let suite = Suite::Channel;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 7);
    let mut results = Vec::new();
    for (s, t) in [(2, 2), (3, 3), (4, 4), (2, 5)] {
        for _ in 0..3 {
            let state = random_schmidt(&mut rng, s, t);
            let (theta, gammas) = (random_theta(&mut rng), random_gammas(&mut rng, 5));
            results.push(bipartite(state, theta, gammas)?);
        }
    }
    for n in 1..=4 {
        let found = GridSearch::sequential().find_theta_chsh(n, 1.0, 0.01)?;
        let state = SchmidtState::qubit_with_l(1.0)?;
        results.push(run_cascade(&CascadeConfig::from_schedule(
            InitialState::Bipartite(state),
            &found.schedule,
            n,
        )?)?);
    }
    let chsh_count = results.len();
    for alpha in [0.3, FRAC_PI_4] {
        let gammas = random_gammas(&mut rng, 4);
        let theta = random_theta(&mut rng);
        results.push(run_cascade(&CascadeConfig::new(InitialState::Ghz(GhzState::new(alpha)?), theta, gammas)?)?);
    }
    // Sharp schedules from the Svetlichny recursion as well.
    let sched = gamma_schedule_svetlichny(1.0, 0.01, FRAC_PI_4, 2);
    results.push(run_cascade(&CascadeConfig::from_schedule(
        InitialState::Ghz(GhzState::new(FRAC_PI_4)?),
        &sched,
        sched.feasible_len(),
    )?)?);

    let steps = || results.iter().flat_map(|r| r.steps.iter());
    let trace = steps().map(|s| (s.check.trace - 1.0).abs()).fold(0.0, f64::max);
    let herm = steps().map(|s| s.check.hermiticity_error).fold(0.0, f64::max);
    let neg = steps().map(|s| (-s.check.min_eigenvalue).max(0.0)).fold(0.0, f64::max);
    let over = |rs: &[CascadeResult], ceiling: f64| {
        rs.iter().flat_map(|r| r.steps.iter()).map(|s| (s.simulated.abs() - ceiling).max(0.0)).fold(0.0, f64::max)
    };

    Ok(vec![
        Check::new(suite, "trace_preserved", trace, EXACT_TOL),
        Check::new(suite, "hermiticity", herm, EXACT_TOL),
        Check::new(suite, "positivity", neg, EXACT_TOL),
        Check::new(suite, "tsirelson_ceiling", over(&results[..chsh_count], 2.0 * SQRT_2), CEILING_TOL),
        Check::new(suite, "svetlichny_ceiling", over(&results[chsh_count..], 4.0 * SQRT_2), CEILING_TOL),
    ])
}
