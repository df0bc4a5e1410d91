//! Parameter sweeps over one or two grid axes.
//!
//! Grid points are evaluated through [`Execution`]; rows always come back in
//! lexicographic order of the grid indices (first axis slowest).

use std::f64::consts::FRAC_PI_4;

use crate::cascade::{run_cascade, CascadeConfig, InitialState};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::measurements::{gamma_schedule_chsh, GridSearch, Sharpness};
use crate::states::{GhzState, SchmidtState};
use crate::table::{Table, Value};

/// Inclusive linear grid `start, …, stop` with `steps` points.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Range {
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl Range {
    pub fn new(start: f64, stop: f64, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InvalidConfig("a range needs at least one step".into()));
        }
        if !(start.is_finite() && stop.is_finite()) {
            return Err(Error::InvalidConfig(format!("range ({start}, {stop}) is not finite")));
        }
        Ok(Self { start, stop, steps })
    }

    /// A single point.
    pub fn point(x: f64) -> Self {
        Self { start: x, stop: x, steps: 1 }
    }

    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.start];
        }
        let last = self.steps - 1;
        let step = (self.stop - self.start) / last as f64;
        (0..self.steps)
            .map(|i| if i == last { self.stop } else { self.start + i as f64 * step })
            .collect()
    }

    fn check_within(&self, name: &str, ok: impl Fn(f64) -> bool) -> Result<Vec<f64>> {
        let values = self.values();
        match values.iter().find(|&&v| !ok(v)) {
            Some(v) => Err(Error::InvalidConfig(format!("{name} = {v} is out of range"))),
            None => Ok(values),
        }
    }
}

fn theta_ok(t: f64) -> bool {
    t > 0.0 && t <= FRAC_PI_4 + 1e-12
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("epsilon = {epsilon} must be positive")))
    }
}

fn sharpness_value(g: Sharpness) -> Value {
    match g {
        Sharpness::Finite(x) => Value::Float(x),
        Sharpness::Unbounded => Value::Missing,
    }
}

/// First CHSH sharpness `γ₁(θ)` at fixed `L`.
pub fn sweep_gamma1(theta: Range, l: f64, epsilon: f64, execution: Execution) -> Result<Table> {
    check_epsilon(epsilon)?;
    if !(l > 0.0 && l <= 1.0) {
        return Err(Error::InvalidConfig(format!("L = {l} must lie in (0, 1]")));
    }
    let thetas = theta.check_within("theta", theta_ok)?;
    let gammas = execution.map(&thetas, |&t| gamma_schedule_chsh(l, epsilon, t, 1).gammas()[0]);
    let mut table = Table::new(&["theta", "gamma_1"]);
    for (t, g) in thetas.iter().zip(gammas) {
        table.push(vec![(*t).into(), sharpness_value(g)]);
    }
    Ok(table)
}

/// `θ_n` and the working angle for every `n` in `n_start..=n_stop`. Points
/// where the search fails are left empty.
pub fn sweep_theta_n(
    n_start: usize,
    n_stop: usize,
    l: f64,
    epsilon: f64,
    execution: Execution,
) -> Result<Table> {
    check_epsilon(epsilon)?;
    if n_start == 0 || n_stop < n_start {
        return Err(Error::InvalidConfig(format!("n range {n_start}..={n_stop} is empty or starts at 0")));
    }
    if !(l > 0.0 && l <= 1.0) {
        return Err(Error::InvalidConfig(format!("L = {l} must lie in (0, 1]")));
    }
    let ns: Vec<usize> = (n_start..=n_stop).collect();
    let search = GridSearch::sequential();
    let results = execution.map(&ns, |&n| search.find_theta_chsh(n, l, epsilon));
    let mut table = Table::new(&["n", "theta_n", "theta"]);
    for (n, res) in ns.iter().zip(results) {
        match res {
            Ok(found) => table.push(vec![(*n).into(), found.theta_n.into(), found.theta.into()]),
            Err(Error::SearchFailed(_)) => table.push(vec![(*n).into(), Value::Missing, Value::Missing]),
            Err(e) => return Err(e),
        }
    }
    Ok(table)
}

/// Largest `n ≤ n_max` for which a feasible Svetlichny schedule exists and
/// every one of the `n` simulated values exceeds 4.
pub fn svetlichny_max_k(sin2_2alpha: f64, epsilon: f64, n_max: usize) -> Result<usize> {
    let ghz = GhzState::from_sin2_2alpha(sin2_2alpha)?;
    let search = GridSearch::sequential();
    let mut best = 0;
    for n in 1..=n_max {
        let found = match search.find_theta_svetlichny(n, ghz.sin_2alpha(), epsilon) {
            Ok(found) => found,
            Err(Error::SearchFailed(_)) => break,
            Err(e) => return Err(e),
        };
        let cfg = CascadeConfig::from_schedule(InitialState::Ghz(ghz), &found.schedule, n)?;
        if !run_cascade(&cfg)?.all_violated() {
            break;
        }
        best = n;
    }
    Ok(best)
}

pub fn sweep_svetlichny_max_k(
    sin2_2alpha: Range,
    epsilon: f64,
    n_max: usize,
    execution: Execution,
) -> Result<Table> {
    check_epsilon(epsilon)?;
    let values = sin2_2alpha.check_within("sin^2(2 alpha)", |v| v > 0.0 && v <= 1.0)?;
    let ks = execution.map(&values, |&v| svetlichny_max_k(v, epsilon, n_max));
    let mut table = Table::new(&["sin2_2alpha", "max_k_violated"]);
    for (v, k) in values.iter().zip(ks) {
        table.push(vec![(*v).into(), k?.into()]);
    }
    Ok(table)
}

/// Number of leading Bobs violating CHSH on the two-qubit state with the
/// given `L`, using the schedule at angle `theta` truncated to its feasible
/// prefix and to `n_max`.
pub fn chsh_max_k(theta: f64, l: f64, epsilon: f64, n_max: usize) -> Result<usize> {
    let schedule = gamma_schedule_chsh(l, epsilon, theta, n_max);
    let m = schedule.feasible_len();
    if m == 0 {
        return Ok(0);
    }
    let state = SchmidtState::qubit_with_l(l)?;
    let cfg = CascadeConfig::from_schedule(InitialState::Bipartite(state), &schedule, m)?;
    Ok(run_cascade(&cfg)?.leading_violations())
}

pub fn sweep_chsh_max_k(
    theta: Range,
    l: Range,
    epsilon: f64,
    n_max: usize,
    execution: Execution,
) -> Result<Table> {
    check_epsilon(epsilon)?;
    let thetas = theta.check_within("theta", theta_ok)?;
    let ls = l.check_within("L", |v| v > 0.0 && v <= 1.0)?;
    let points: Vec<(f64, f64)> = thetas.iter().flat_map(|&t| ls.iter().map(move |&l| (t, l))).collect();
    let ks = execution.map(&points, |&(t, l)| chsh_max_k(t, l, epsilon, n_max));
    let mut table = Table::new(&["theta", "L", "max_k_violated"]);
    for ((t, l), k) in points.iter().zip(ks) {
        table.push(vec![(*t).into(), (*l).into(), k?.into()]);
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn floats(t: &Table, col: &str) -> Vec<f64> {
        t.column(col)
            .unwrap()
            .into_iter()
            .map(|v| match v {
                Value::Float(x) => *x,
                other => panic!("unexpected {other:?}"),
            })
            .collect()
    }

    #[test]
    fn range_values() {
        assert_eq!(Range::point(0.3).values(), vec![0.3]);
        let v = Range::new(0.0, 1.0, 5).unwrap().values();
        assert_eq!(v, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!(Range::new(0.0, 1.0, 0).is_err());
    }

    #[test]
    fn gamma1_increases_with_theta() {
        let t = sweep_gamma1(Range::new(0.01, FRAC_PI_4, 100).unwrap(), 1.0, 0.01, Execution::default()).unwrap();
        let g = floats(&t, "gamma_1");
        assert_eq!(g.len(), 100);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn theta_n_decreases() {
        let t = sweep_theta_n(1, 5, 1.0, 0.01, Execution::default()).unwrap();
        let th = floats(&t, "theta_n");
        // θ₁ and θ₂ both sit at the right edge of the grid.
        assert_eq!(th[0], th[1]);
        assert!(th[1..].windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn svetlichny_sweep_is_step_like() {
        let t = sweep_svetlichny_max_k(Range::new(0.5, 1.0, 11).unwrap(), 0.01, 3, Execution::default()).unwrap();
        let ks: Vec<i64> = t
            .column("max_k_violated")
            .unwrap()
            .into_iter()
            .map(|v| if let Value::Int(k) = v { *k } else { panic!() })
            .collect();
        assert!(ks.windows(2).all(|w| w[1] >= w[0]));
        assert_eq!(ks[0], 0);
        assert_eq!(*ks.last().unwrap(), 2);
        // Never more than two sharing observers.
        assert!(ks.iter().all(|&k| k <= 2));
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let th = Range::new(0.05, FRAC_PI_4, 4).unwrap();
        let l = Range::new(0.5, 1.0, 3).unwrap();
        let a = sweep_chsh_max_k(th, l, 0.01, 3, Execution::Sequential).unwrap();
        let b = sweep_chsh_max_k(th, l, 0.01, 3, Execution::Parallel).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.rows().len(), 12);
        assert_eq!(a.rows()[1][0], Value::Float(0.05));
        assert_eq!(a.rows()[1][1], Value::Float(0.75));
    }

    #[test]
    fn rejects_bad_ranges() {
        assert!(sweep_gamma1(Range::new(0.0, 0.5, 3).unwrap(), 1.0, 0.01, Execution::Sequential).is_err());
        assert!(sweep_gamma1(Range::point(0.5), 1.0, 0.0, Execution::Sequential).is_err());
        assert!(sweep_theta_n(0, 3, 1.0, 0.01, Execution::Sequential).is_err());
    }
}
