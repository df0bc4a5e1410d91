use cascade_core::cascade::{CHANNEL_TOL, IMAG_TOL};
use cascade_core::matrix::{HERMITIAN_TOL, PSD_CLAMP};
use cascade_core::sweep::{self, Range};
use cascade_core::table::{format_sig, Table, SIG_DIGITS};
use cascade_core::verify::{self, Suite};
use cascade_core::{
    gamma_schedule_chsh, gamma_schedule_svetlichny, run_cascade, CascadeConfig, CascadeResult,
    Execution, GhzState, GridSearch, InitialState, SchmidtState, SharpnessSchedule, ThetaSearch,
};

use crate::args::{
    ChshArgs, FindThetaArgs, GhzArgs, GridArg, Scenario, SvetlichnyArgs, SweepKind, ThetaArgs,
    VerifyArgs,
};
use crate::error::CliError;
use crate::output::{object, Meta};

type Output = Result<(Table, Meta), CliError>;

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::InvalidArgument(msg.into())
}

fn check_epsilon(epsilon: f64) -> Result<(), CliError> {
    if epsilon > 0.0 && epsilon.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("epsilon = {epsilon} must be positive")))
    }
}

fn check_theta(theta: f64) -> Result<(), CliError> {
    if theta > 0.0 && theta <= std::f64::consts::FRAC_PI_4 + 1e-12 {
        Ok(())
    } else {
        Err(cascade_core::Error::InvalidTheta(theta).into())
    }
}

fn tolerances() -> Meta {
    let mut t = object();
    t.set("hermitian", HERMITIAN_TOL)
        .set("psd_clamp", PSD_CLAMP)
        .set("imaginary_residue", IMAG_TOL)
        .set("channel", CHANNEL_TOL)
        .set("significant_digits", SIG_DIGITS);
    t
}

/// Where the observers' angle and sharpness values come from.
enum Plan {
    Explicit { theta: f64, gammas: Vec<f64> },
    Schedule { theta: f64, n: usize },
    Search { n: usize },
}

impl Plan {
    fn from_args(theta: &ThetaArgs, n: Option<usize>, gammas: &Option<Vec<f64>>) -> Result<Self, CliError> {
        if n == Some(0) {
            return Err(invalid("--n must be at least 1"));
        }
        match (gammas, theta.fixed()) {
            (Some(g), Some(theta)) => {
                if n.is_some_and(|n| n != g.len()) {
                    return Err(invalid(format!("--n = {} but {} gammas were given", n.unwrap(), g.len())));
                }
                Ok(Plan::Explicit { theta, gammas: g.clone() })
            }
            (Some(_), None) => Err(invalid("--gammas needs a fixed --theta or --theta-frac-pi")),
            (None, fixed) => {
                let n = n.ok_or_else(|| invalid("--n is required unless --gammas is given"))?;
                Ok(match fixed {
                    Some(theta) => Plan::Schedule { theta, n },
                    None => Plan::Search { n },
                })
            }
        }
    }

    fn describe(&self) -> &'static str {
        match self {
            Plan::Explicit { .. } => "explicit",
            Plan::Schedule { .. } => "schedule",
            Plan::Search { .. } => "search",
        }
    }
}

/// Turns a plan into a config; `schedule` builds the recursion at a fixed
/// angle and `search` runs the θ search.
fn resolve(
    plan: &Plan,
    state: InitialState,
    schedule: impl Fn(f64, usize) -> SharpnessSchedule,
    search: impl Fn(usize) -> cascade_core::Result<ThetaSearch>,
) -> Result<(CascadeConfig, Option<f64>), CliError> {
    match plan {
        Plan::Explicit { theta, gammas } => Ok((CascadeConfig::new(state, *theta, gammas.clone())?, None)),
        Plan::Schedule { theta, n } => {
            check_theta(*theta)?;
            let sched = schedule(*theta, *n);
            let m = sched.feasible_len();
            if m < *n {
                return Err(CliError::SearchFailed(format!(
                    "sharpness leaves (0, 1) at k={} for theta = {}",
                    m + 1,
                    format_sig(*theta, SIG_DIGITS)
                )));
            }
            Ok((CascadeConfig::from_schedule(state, &sched, *n)?, None))
        }
        Plan::Search { n } => {
            let found = search(*n)?;
            Ok((CascadeConfig::from_schedule(state, &found.schedule, *n)?, Some(found.theta_n)))
        }
    }
}

/// The violation flag is decided on the emitted (rounded) value so that it
/// can always be recomputed from the output.
fn emitted_violation(simulated: f64, local_bound: f64) -> bool {
    format_sig(simulated, SIG_DIGITS).parse::<f64>().map_or(false, |v| v > local_bound)
}

fn cascade_table(result: &CascadeResult, closed_form_column: &str) -> Table {
    let bound = result.scenario.local_bound();
    let mut table = Table::new(&["k", "gamma_k", "simulated", closed_form_column, "violated"]);
    for step in &result.steps {
        table.push(vec![
            step.k.into(),
            step.gamma.into(),
            step.simulated.into(),
            step.closed_form.into(),
            emitted_violation(step.simulated, bound).into(),
        ]);
    }
    table
}

pub fn chsh_cascade(a: &ChshArgs) -> Output {
    check_epsilon(a.epsilon)?;
    let dim_b = a.dim_b.unwrap_or(a.coeffs.len());
    let (state, factor) = if a.normalize {
        SchmidtState::normalized(a.coeffs.clone(), dim_b)?
    } else {
        let state = SchmidtState::new(a.coeffs.clone(), dim_b).map_err(|e| {
            let norm2: f64 = a.coeffs.iter().map(|c| c * c).sum();
            if (norm2 - 1.0).abs() > 1e-12 {
                invalid(format!("{e} (pass --normalize to rescale)"))
            } else {
                e.into()
            }
        })?;
        (state, 1.0)
    };
    let l = state.l_value();
    let plan = Plan::from_args(&a.theta, a.n, &a.gammas)?;
    if !matches!(plan, Plan::Explicit { .. }) && l <= 0.0 {
        return Err(invalid("the state has L = 0, so no sharpness schedule exists"));
    }
    let (cfg, theta_n) = resolve(
        &plan,
        InitialState::Bipartite(state.clone()),
        |theta, n| gamma_schedule_chsh(l, a.epsilon, theta, n),
        |n| GridSearch::default().find_theta_chsh(n, l, a.epsilon),
    )?;
    let result = run_cascade(&cfg)?;

    let mut params = object();
    params
        .set("coeffs", state.coeffs())
        .set("dim_b", dim_b)
        .set("L", l)
        .set("normalize", a.normalize)
        .set("normalize_factor", factor)
        .set("n", cfg.n())
        .set("epsilon", a.epsilon)
        .set("theta_source", plan.describe())
        .set("theta", cfg.theta())
        .set("theta_n", theta_n);
    let mut meta = Meta::new("chsh-cascade");
    meta.set("parameters", params).set("tolerances", tolerances()).set("local_bound", 2.0);
    Ok((cascade_table(&result, "bound"), meta))
}

fn ghz_state(args: &GhzArgs) -> Result<GhzState, CliError> {
    Ok(match (args.sin2_2alpha, args.alpha) {
        (Some(v), _) => GhzState::from_sin2_2alpha(v)?,
        (None, Some(alpha)) => GhzState::new(alpha)?,
        (None, None) => return Err(invalid("one of --sin2-2alpha or --alpha is required")),
    })
}

pub fn svetlichny_cascade(a: &SvetlichnyArgs) -> Output {
    check_epsilon(a.epsilon)?;
    let ghz = ghz_state(&a.state)?;
    let sin_2alpha = ghz.sin_2alpha();
    let plan = Plan::from_args(&a.theta, a.n, &a.gammas)?;
    let (cfg, theta_n) = resolve(
        &plan,
        InitialState::Ghz(ghz),
        |theta, n| gamma_schedule_svetlichny(sin_2alpha, a.epsilon, theta, n),
        |n| GridSearch::default().find_theta_svetlichny(n, sin_2alpha, a.epsilon),
    )?;
    let result = run_cascade(&cfg)?;

    let mut params = object();
    params
        .set("alpha", ghz.alpha())
        .set("sin2_2alpha", ghz.sin2_2alpha())
        .set("n", cfg.n())
        .set("epsilon", a.epsilon)
        .set("theta_source", plan.describe())
        .set("theta", cfg.theta())
        .set("theta_n", theta_n);
    let mut meta = Meta::new("svetlichny-cascade");
    meta.set("parameters", params).set("tolerances", tolerances()).set("local_bound", 4.0);
    Ok((cascade_table(&result, "closed_form"), meta))
}

pub fn find_theta(a: &FindThetaArgs) -> Output {
    check_epsilon(a.epsilon)?;
    if a.n == 0 {
        return Err(invalid("--n must be at least 1"));
    }
    let search = GridSearch::default();
    let mut params = object();
    params.set("n", a.n).set("epsilon", a.epsilon);
    let found = match a.scenario {
        Scenario::Chsh => {
            params.set("scenario", "chsh").set("L", a.l);
            search.find_theta_chsh(a.n, a.l, a.epsilon)?
        }
        Scenario::Svetlichny => {
            if !(a.sin2_2alpha > 0.0 && a.sin2_2alpha <= 1.0) {
                return Err(invalid(format!("sin^2(2 alpha) = {} is outside (0, 1]", a.sin2_2alpha)));
            }
            params.set("scenario", "svetlichny").set("sin2_2alpha", a.sin2_2alpha);
            search.find_theta_svetlichny(a.n, a.sin2_2alpha.sqrt(), a.epsilon)?
        }
    };
    params
        .set("grid_points", search.points)
        .set("bisection_steps", search.bisection_steps)
        .set("floor", search.floor);

    let mut table = Table::new(&["n", "theta_n", "theta", "k", "gamma_k"]);
    for (idx, gamma) in found.schedule.finite().into_iter().enumerate() {
        table.push(vec![a.n.into(), found.theta_n.into(), found.theta.into(), (idx + 1).into(), gamma.into()]);
    }
    let mut meta = Meta::new("find-theta");
    meta.set("parameters", params).set("tolerances", tolerances());
    Ok((table, meta))
}

fn range(g: GridArg) -> Result<Range, CliError> {
    Ok(Range::new(g.start, g.stop, g.steps)?)
}

fn grid_meta(g: GridArg) -> Meta {
    let mut m = object();
    m.set("start", g.start).set("stop", g.stop).set("steps", g.steps);
    m
}

pub fn sweep(kind: &SweepKind) -> Output {
    let exec = Execution::default();
    let mut params = object();
    let (name, table) = match kind {
        SweepKind::Gamma1 { theta, l, epsilon, .. } => {
            params.set("theta", grid_meta(*theta)).set("L", *l).set("epsilon", *epsilon);
            ("gamma1", sweep::sweep_gamma1(range(*theta)?, *l, *epsilon, exec)?)
        }
        SweepKind::ThetaN { n_range, l, epsilon, .. } => {
            let (start, stop) = match n_range.as_slice() {
                [n] => (*n, *n),
                [a, b] => (*a, *b),
                _ => return Err(invalid("--n-range expects START,STOP")),
            };
            params.set("n_start", start).set("n_stop", stop).set("L", *l).set("epsilon", *epsilon);
            ("theta-n", sweep::sweep_theta_n(start, stop, *l, *epsilon, exec)?)
        }
        SweepKind::SvetlichnyMaxK { sin2_2alpha, epsilon, n_max, .. } => {
            params.set("sin2_2alpha", grid_meta(*sin2_2alpha)).set("epsilon", *epsilon).set("n_max", *n_max);
            (
                "svetlichny-max-k",
                sweep::sweep_svetlichny_max_k(range(*sin2_2alpha)?, *epsilon, *n_max, exec)?,
            )
        }
        SweepKind::ChshMaxK { theta, l, epsilon, n_max, .. } => {
            params
                .set("theta", grid_meta(*theta))
                .set("L", grid_meta(*l))
                .set("epsilon", *epsilon)
                .set("n_max", *n_max);
            ("chsh-max-k", sweep::sweep_chsh_max_k(range(*theta)?, range(*l)?, *epsilon, *n_max, exec)?)
        }
    };
    let mut meta = Meta::new("sweep");
    meta.set("kind", name).set("parameters", params).set("tolerances", tolerances());
    Ok((table, meta))
}

/// Returns the table and the number of failed checks.
pub fn verify(a: &VerifyArgs) -> Result<(Table, Meta, usize), CliError> {
    let suite: Suite = a.suite.parse()?;
    let checks = verify::run_suite(suite)?;
    let failed = checks.iter().filter(|c| !c.passed).count();
    let mut meta = Meta::new("verify");
    meta.set("suite", suite.name()).set("failed", failed);
    Ok((verify::checks_table(&checks), meta, failed))
}
