//! Radial shooting: integrates the singular Cauchy problem
//! `u'' + (N-1)/r · u' = f(u) ± g(u')`, `u(0) = u0 > 0`, `u'(0) = 0`
//! (and its Pucci-operator generalization), detecting global existence
//! versus finite-radius blow-up.
//!
//! The origin is a removable singularity: integration starts at a small
//! `r_start` from the second-order Taylor seed `u = u0 + c r²`,
//! `u' = 2 c r` with `c = H(u0, 0)/(2N)`. Blow-up is declared only on two
//! corroborating signals: a state component crossing the threshold *and*
//! collapse of the accepted step size; a threshold alone can misread
//! steep-but-global growth.

mod dopri;

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::criteria::{self, CriterionVerdict, IntegralKind, IntegralStatus};
use crate::nonlin::{NonlinearitySpec, Primitive};
use dopri::{Dopri5, StepOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Plus,
    Minus,
}

/// The `M`/`m` weights that turn the extremal operator into a weighted
/// radial Laplacian on convex radial functions.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PucciReduction {
    pub lambda: f64,
}

impl PucciReduction {
    pub fn big_m(&self, s: f64) -> f64 {
        if s >= 0.0 {
            s
        } else {
            s / self.lambda
        }
    }

    pub fn small_m(&self, s: f64) -> f64 {
        if s >= 0.0 {
            s
        } else {
            self.lambda * s
        }
    }
}

#[derive(Clone)]
pub enum Operator {
    Laplacian,
    Pucci { lambda: f64 },
    GeneralH { h: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>, lambda: f64 },
}

impl fmt::Debug for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operator::Laplacian => write!(f, "Laplacian"),
            Operator::Pucci { lambda } => write!(f, "Pucci(lambda={lambda})"),
            Operator::GeneralH { lambda, .. } => write!(f, "GeneralH(lambda={lambda})"),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ShootError {
    #[error("initial value must be positive (got u0 = {u0})")]
    NonPositiveInitialValue { u0: f64 },
    #[error("dimension must satisfy N >= 2 (got {n})")]
    DimensionTooSmall { n: u32 },
    #[error("at least one of f, g must be present")]
    NoSourceTerm,
    #[error("the minus-sign problem needs the absorption term f")]
    MinusWithoutF,
    #[error("ellipticity ratio must satisfy 0 < lambda <= 1 (got {lambda})")]
    BadLambda { lambda: f64 },
    #[error("H(u0, 0) must be positive (got {value} at u0 = {u0})")]
    NonCoerciveAtSeed { u0: f64, value: f64 },
    #[error("tolerance policy must have positive tolerances")]
    BadPolicy,
    #[error("right-hand side became non-finite at r = {r} (u = {u}, u' = {du})")]
    NonFinite { r: f64, u: f64, du: f64 },
    #[error(transparent)]
    Criteria(#[from] criteria::CriteriaError),
}

/// The radial Cauchy problem. `f` or `g` may be absent so the pure
/// absorption and pure gradient equations are integrable without a
/// degenerate zero nonlinearity.
#[derive(Debug, Clone)]
pub struct CauchyProblem {
    pub sign: Sign,
    pub f: Option<NonlinearitySpec>,
    pub g: Option<NonlinearitySpec>,
    pub n: u32,
    pub u0: f64,
    pub operator: Operator,
}

impl CauchyProblem {
    pub fn validate(&self) -> Result<(), ShootError> {
        if !(self.u0 > 0.0) || !self.u0.is_finite() {
            return Err(ShootError::NonPositiveInitialValue { u0: self.u0 });
        }
        if self.n < 2 {
            return Err(ShootError::DimensionTooSmall { n: self.n });
        }
        match &self.operator {
            Operator::GeneralH { lambda, .. } | Operator::Pucci { lambda } => {
                if !(*lambda > 0.0 && *lambda <= 1.0) {
                    return Err(ShootError::BadLambda { lambda: *lambda });
                }
            }
            Operator::Laplacian => {}
        }
        if matches!(self.operator, Operator::Laplacian | Operator::Pucci { .. }) {
            if self.f.is_none() && self.g.is_none() {
                return Err(ShootError::NoSourceTerm);
            }
            if self.sign == Sign::Minus && self.f.is_none() {
                return Err(ShootError::MinusWithoutF);
            }
        }
        Ok(())
    }

    /// `H(u, p)` — the operator right-hand side at value `u`, gradient `p`.
    fn source(&self, u: f64, p: f64) -> f64 {
        if let Operator::GeneralH { h, .. } = &self.operator {
            return h(u, p);
        }
        let fv = self.f.as_ref().map_or(0.0, |f| f.eval_at(u));
        let gv = self.g.as_ref().map_or(0.0, |g| g.eval_at(p));
        match self.sign {
            Sign::Plus => fv + gv,
            Sign::Minus => fv - gv,
        }
    }

    fn pucci(&self) -> Option<PucciReduction> {
        match &self.operator {
            Operator::Laplacian => None,
            Operator::Pucci { lambda } | Operator::GeneralH { lambda, .. } => {
                Some(PucciReduction { lambda: *lambda })
            }
        }
    }
}

/// Integration tolerances and blow-up thresholds.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TolerancePolicy {
    pub rtol: f64,
    pub atol: f64,
    /// Where the Taylor seed hands over to the integrator.
    pub r_start: f64,
    /// Blow-up when `u` or `u'` crosses this...
    pub blowup_threshold: f64,
    /// ...and the accepted step drops below `step_collapse · r`.
    pub step_collapse: f64,
    /// Gradient-only blow-up if `u` stayed below this while `u'` crossed.
    pub value_cap_for_gradient_only: f64,
    pub max_steps: u64,
}

impl Default for TolerancePolicy {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-12,
            r_start: 1e-6,
            blowup_threshold: 1e10,
            step_collapse: 1e-14,
            value_cap_for_gradient_only: 1e6,
            max_steps: 20_000_000,
        }
    }
}

impl TolerancePolicy {
    pub fn validate(&self) -> Result<(), ShootError> {
        if self.rtol > 0.0 && self.atol > 0.0 && self.r_start > 0.0 && self.max_steps > 0 {
            Ok(())
        } else {
            Err(ShootError::BadPolicy)
        }
    }

    /// Scale `rtol`/`atol` by a factor (CLI `--tolerance-scale`).
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            rtol: self.rtol * factor,
            atol: self.atol * factor,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlowUpMode {
    ValueAndGradient,
    GradientOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Outcome {
    Global { r_max: f64 },
    BlowUp { r_estimate: f64, r_error: f64, mode: BlowUpMode },
    Inconclusive { reason: String },
}

impl Outcome {
    pub fn is_global(&self) -> bool {
        matches!(self, Outcome::Global { .. })
    }

    pub fn is_blow_up(&self) -> bool {
        matches!(self, Outcome::BlowUp { .. })
    }
}

/// An accepted integrator node.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TrajNode {
    pub r: f64,
    pub u: f64,
    pub du: f64,
}

/// A uniform output-grid node with the two blow-up diagnostics:
/// `A = r^{N-1} u'/√F(u)` and `W = 1 + g(u')/f(u) - u'²/(2F(u))`.
/// `NaN` marks points where a diagnostic is undefined (absent `f` or `g`,
/// or `F(u) = 0`).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GridNode {
    pub r: f64,
    pub u: f64,
    pub du: f64,
    pub a: f64,
    pub w: f64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct IntegrationStats {
    pub steps_accepted: u64,
    pub steps_rejected: u64,
    pub rhs_evals: u64,
    pub last_step: f64,
    /// Sum of accepted local error estimates (state component 0 scale).
    pub accumulated_error: f64,
}

/// Number of uniform output-grid nodes kept per trajectory.
pub const OUTPUT_GRID: usize = 1024;

#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub nodes: Vec<TrajNode>,
    pub grid: Vec<GridNode>,
    pub outcome: Outcome,
    pub stats: IntegrationStats,
}

/// Worst-case signed violations of the structural trajectory facts
/// (`u' > 0`, `u'' ≥ 0`, the secant bound, and the minus-sign first
/// integrals). Negative-or-tiny values mean the invariant held.
#[derive(Debug, Clone, Serialize)]
pub struct InvariantReport {
    pub min_du: f64,
    /// max over nodes of `-(u'' + 1e-8 (1 + |u''|))`
    pub convexity_violation: f64,
    /// max over nodes of `u - (u0 + r u') - 1e-8`
    pub secant_violation: f64,
    /// minus sign only: max of `g(u') - f(u) - 1e-8`
    pub coercivity_violation: Option<f64>,
    /// minus sign only: max of `u' - √(2F(u)) - 1e-8`
    pub gradient_energy_violation: Option<f64>,
}

impl Trajectory {
    pub fn last_node(&self) -> TrajNode {
        *self.nodes.last().expect("trajectory has at least the seed node")
    }

    /// Check the structural facts on every stored node.
    pub fn verify_invariants(&self, problem: &CauchyProblem) -> InvariantReport {
        let slack = 1e-8;
        let mut min_du = f64::INFINITY;
        let mut convexity = f64::NEG_INFINITY;
        let mut secant = f64::NEG_INFINITY;
        let mut coercivity: Option<f64> = None;
        let mut energy: Option<f64> = None;
        let f_prim = problem.f.as_ref().map(Primitive::new);
        for node in self.nodes.iter().skip(1) {
            min_du = min_du.min(node.du);
            let ddu = radial_rhs(problem, node.r, [node.u, node.du])[1];
            convexity = convexity.max(-(ddu + slack * (1.0 + ddu.abs())));
            secant = secant.max(node.u - problem.u0 - node.r * node.du - slack);
            if problem.sign == Sign::Minus && problem.f.is_some() {
                let fv = problem.f.as_ref().unwrap().eval_at(node.u);
                let gv = problem.g.as_ref().map_or(0.0, |g| g.eval_at(node.du));
                let c = coercivity.get_or_insert(f64::NEG_INFINITY);
                *c = c.max(gv - fv - slack * (1.0 + fv.abs()));
                if let Some(fp) = &f_prim {
                    if let Ok(big_f) = fp.eval(node.u) {
                        let bound = (2.0 * big_f).sqrt();
                        let e = energy.get_or_insert(f64::NEG_INFINITY);
                        *e = e.max(node.du - bound - slack * (1.0 + bound));
                    }
                }
            }
        }
        InvariantReport {
            min_du,
            convexity_violation: convexity,
            secant_violation: secant,
            coercivity_violation: coercivity,
            gradient_energy_violation: energy,
        }
    }
}

/// `[u', u'']` for the radial equation at `(r, [u, u'])`.
fn radial_rhs(problem: &CauchyProblem, r: f64, y: [f64; 2]) -> [f64; 2] {
    let (u, v) = (y[0], y[1]);
    let drift = (problem.n - 1) as f64 / r;
    let ddu = match problem.pucci() {
        None => problem.source(u, v) - drift * v,
        Some(red) => red.big_m(problem.source(u, v) - drift * red.small_m(v)),
    };
    [v, ddu]
}

/// Integrate the Cauchy problem out to `r_max`.
///
/// Terminates with `Global` when `r_max` is reached; with `BlowUp` when a
/// state component has crossed `blowup_threshold` *and* the accepted step
/// has collapsed below `step_collapse · r` (the estimate error is the gap
/// between the last two accepted nodes); with `Inconclusive` when the step
/// collapses without a threshold crossing or the step budget runs out.
pub fn integrate(
    problem: &CauchyProblem,
    r_max: f64,
    policy: &TolerancePolicy,
) -> Result<Trajectory, ShootError> {
    problem.validate()?;
    policy.validate()?;
    let seed_h = problem.source(problem.u0, 0.0);
    if matches!(problem.operator, Operator::GeneralH { .. }) && !(seed_h > 0.0) {
        return Err(ShootError::NonCoerciveAtSeed { u0: problem.u0, value: seed_h });
    }

    let n = problem.n as f64;
    let curvature = seed_h / (2.0 * n);
    let r_start = policy.r_start.min(r_max / 2.0);
    let taylor = |r: f64| [problem.u0 + curvature * r * r, 2.0 * curvature * r];

    let y_start = taylor(r_start);
    let mut stepper = Dopri5::new(|r, y| radial_rhs(problem, r, y), r_start, y_start, 0.1 * r_start);

    let mut nodes = vec![
        TrajNode { r: 0.0, u: problem.u0, du: 0.0 },
        TrajNode { r: r_start, u: y_start[0], du: y_start[1] },
    ];
    let mut stats = IntegrationStats::default();
    let mut value_crossed = false;
    let mut gradient_crossed = false;
    let mut prev_r = r_start;

    // dense segments retained for output-grid interpolation
    let mut segments: Vec<dopri::DenseOutput> = Vec::new();

    let outcome = loop {
        if stepper.t >= r_max * (1.0 - 1e-12) {
            break Outcome::Global { r_max };
        }
        if stats.steps_accepted + stats.steps_rejected >= policy.max_steps {
            break Outcome::Inconclusive {
                reason: format!("step budget {} exhausted at r = {}", policy.max_steps, stepper.t),
            };
        }
        let cap = r_max - stepper.t;
        match stepper.step(cap, policy.rtol, policy.atol) {
            StepOutcome::Accepted(acc) => {
                stats.steps_accepted += 1;
                stats.last_step = acc.h_used;
                stats.accumulated_error += acc.error_estimate;
                prev_r = nodes.last().map(|n| n.r).unwrap_or(r_start);
                nodes.push(TrajNode { r: acc.t_new, u: acc.y_new[0], du: acc.y_new[1] });
                segments.push(acc.dense);
                if acc.y_new[0] >= policy.blowup_threshold {
                    value_crossed = true;
                }
                if acc.y_new[1] >= policy.blowup_threshold {
                    gradient_crossed = true;
                }
                if acc.h_used < policy.step_collapse * acc.t_new {
                    if value_crossed || gradient_crossed {
                        let u_final = acc.y_new[0];
                        let mode = if gradient_crossed
                            && u_final < policy.value_cap_for_gradient_only
                        {
                            BlowUpMode::GradientOnly
                        } else {
                            BlowUpMode::ValueAndGradient
                        };
                        break Outcome::BlowUp {
                            r_estimate: acc.t_new,
                            r_error: acc.t_new - prev_r,
                            mode,
                        };
                    }
                    break Outcome::Inconclusive {
                        reason: format!(
                            "step collapsed to {:e} at r = {} without a threshold crossing",
                            acc.h_used, acc.t_new
                        ),
                    };
                }
            }
            StepOutcome::Rejected => {
                stats.steps_rejected += 1;
            }
            StepOutcome::NonFinite => {
                let last = *nodes.last().unwrap();
                return Err(ShootError::NonFinite { r: last.r, u: last.u, du: last.du });
            }
        }
    };
    stats.rhs_evals = stepper.rhs_evals;

    let r_end = nodes.last().unwrap().r;
    let grid = build_grid(problem, &segments, taylor, r_start, r_end);

    Ok(Trajectory { nodes, grid, outcome, stats })
}

/// Sample the trajectory on the uniform 1024-point output grid and attach
/// the `A`, `W` diagnostics.
fn build_grid(
    problem: &CauchyProblem,
    segments: &[dopri::DenseOutput],
    taylor: impl Fn(f64) -> [f64; 2],
    r_start: f64,
    r_end: f64,
) -> Vec<GridNode> {
    let f_prim = problem.f.as_ref().map(Primitive::new);
    let diag = |r: f64, u: f64, du: f64| -> (f64, f64) {
        let (fv, big_f) = match (&problem.f, &f_prim) {
            (Some(f), Some(fp)) => (f.eval_at(u), fp.eval(u).unwrap_or(f64::NAN)),
            _ => (f64::NAN, f64::NAN),
        };
        let gv = problem.g.as_ref().map_or(0.0, |g| g.eval_at(du));
        let a = r.powi(problem.n as i32 - 1) * du / big_f.sqrt();
        let w = 1.0 + gv / fv - du * du / (2.0 * big_f);
        (a, w)
    };

    let mut grid = Vec::with_capacity(OUTPUT_GRID);
    let mut seg_idx = 0usize;
    for i in 0..OUTPUT_GRID {
        let r = r_end * i as f64 / (OUTPUT_GRID - 1) as f64;
        let [u, du] = if r <= r_start || segments.is_empty() {
            taylor(r)
        } else {
            while seg_idx + 1 < segments.len()
                && segments[seg_idx].t_old + segments[seg_idx].h < r
            {
                seg_idx += 1;
            }
            segments[seg_idx].eval(r)
        };
        let (a, w) = diag(r, u, du);
        grid.push(GridNode { r, u, du, a, w });
    }
    grid
}

/// Observed blow-up mode cross-checked against the `∫ s/g(s) ds` dichotomy:
/// a divergent integral predicts the solution value must blow up alongside
/// the gradient; a convergent one predicts it stays bounded.
#[derive(Debug, Clone, Serialize)]
pub struct BlowUpModeReport {
    pub observed: ObservedMode,
    pub expected_from_ugrowth: Option<BlowUpMode>,
    pub ugrowth: Option<CriterionVerdict>,
    /// `None` when the trajectory is global or the criterion refused.
    pub agrees: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObservedMode {
    ValueAndGradient,
    GradientOnly,
    NotBlowUp,
}

/// Report the observed blow-up mode of a finished trajectory; mismatches
/// with the integral prediction are surfaced, never silently resolved.
pub fn blowup_mode(
    traj: &Trajectory,
    g: Option<&NonlinearitySpec>,
) -> Result<BlowUpModeReport, ShootError> {
    let observed = match &traj.outcome {
        Outcome::BlowUp { mode: BlowUpMode::ValueAndGradient, .. } => ObservedMode::ValueAndGradient,
        Outcome::BlowUp { mode: BlowUpMode::GradientOnly, .. } => ObservedMode::GradientOnly,
        _ => ObservedMode::NotBlowUp,
    };
    let ugrowth = match g {
        Some(g) => Some(criteria::classify_integral(IntegralKind::UGrowth, None, Some(g), 2)?),
        None => None,
    };
    let expected = ugrowth.as_ref().and_then(|v| match v.status {
        IntegralStatus::Diverges => Some(BlowUpMode::ValueAndGradient),
        IntegralStatus::Converges => Some(BlowUpMode::GradientOnly),
        IntegralStatus::Inconclusive => None,
    });
    let agrees = match (observed, expected) {
        (ObservedMode::NotBlowUp, _) | (_, None) => None,
        (ObservedMode::ValueAndGradient, Some(m)) => Some(m == BlowUpMode::ValueAndGradient),
        (ObservedMode::GradientOnly, Some(m)) => Some(m == BlowUpMode::GradientOnly),
    };
    Ok(BlowUpModeReport { observed, expected_from_ugrowth: expected, ugrowth, agrees })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Consensus {
    AllGlobal,
    AllBlowUp,
    Mixed,
}

#[derive(Debug, Clone, Serialize)]
pub struct InitialValueRun {
    pub u0: f64,
    pub outcome: RunOutcome,
}

/// Per-run outcome in an initial-value sweep; integration errors are data
/// here, not failures of the sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RunOutcome {
    Global { r_max: f64 },
    BlowUp { r_estimate: f64, r_error: f64, mode: BlowUpMode },
    Inconclusive { reason: String },
    Error { message: String },
}

impl RunOutcome {
    fn from_result(res: Result<Trajectory, ShootError>) -> Self {
        match res {
            Ok(t) => match t.outcome {
                Outcome::Global { r_max } => RunOutcome::Global { r_max },
                Outcome::BlowUp { r_estimate, r_error, mode } => {
                    RunOutcome::BlowUp { r_estimate, r_error, mode }
                }
                Outcome::Inconclusive { reason } => RunOutcome::Inconclusive { reason },
            },
            Err(e) => RunOutcome::Error { message: e.to_string() },
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct InitialValueSweep {
    pub runs: Vec<InitialValueRun>,
    pub consensus: Consensus,
}

/// Shoot the same problem from several initial values; distinct runs are
/// independent and execute in parallel.
pub fn sample_initial_values(
    problem: &CauchyProblem,
    u0_set: &[f64],
    r_max: f64,
    policy: &TolerancePolicy,
) -> InitialValueSweep {
    let runs: Vec<InitialValueRun> = u0_set
        .par_iter()
        .map(|&u0| {
            let mut p = problem.clone();
            p.u0 = u0;
            InitialValueRun {
                u0,
                outcome: RunOutcome::from_result(integrate(&p, r_max, policy)),
            }
        })
        .collect();
    let consensus = if !runs.is_empty() && runs.iter().all(|r| matches!(r.outcome, RunOutcome::Global { .. })) {
        Consensus::AllGlobal
    } else if !runs.is_empty() && runs.iter().all(|r| matches!(r.outcome, RunOutcome::BlowUp { .. })) {
        Consensus::AllBlowUp
    } else {
        Consensus::Mixed
    };
    InitialValueSweep { runs, consensus }
}
