//! Penalised variational objective, its gradients, the restart loop and the
//! multi-angle sign readout that turns an optimised state into a bipartition.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ansatz::{build_ansatz, AnsatzSpec};
use crate::error::{Error, Result};
use crate::evalmetrics::cut_value;
use crate::graph::{
    build_laplacian, connected_components, gaussian_affinity, knn_sparsify, rescale_features, Dataset, Laplacian,
};
use crate::optim::{minimize, Bounds, LbfgsOptions, StopReason};
use crate::simcore::{
    apply_circuit, check_observable, component_sign_value, quadratic_form, uniform_overlap_amps, CircuitProgram,
    SignBackend, Statevector,
};

pub const DEFAULT_LAMBDAS: [f64; 4] = [0.0, FRAC_PI_4, FRAC_PI_2, 3.0 * FRAC_PI_4];
pub const FD_STEP: f64 = 1e-6;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientMode {
    #[default]
    ParameterShift,
    FiniteDifference,
}

/// How the penalty weight is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Penalty {
    /// Use this `τ` as is.
    Fixed(f64),
    /// `τ = α · ⟨ψ(θ₀)|L|ψ(θ₀)⟩`.
    Relative(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObjectiveConfig {
    pub tau: Option<f64>,
    pub alpha: Option<f64>,
    pub max_itr: usize,
    pub convergence_tol: f64,
    pub gradient_mode: GradientMode,
    pub restarts: usize,
    pub seed: u64,
    /// Box for every parameter.
    pub bounds: (f64, f64),
    /// L-BFGS history length.
    pub memory: usize,
}

impl Default for ObjectiveConfig {
    fn default() -> Self {
        Self {
            tau: None,
            alpha: None,
            max_itr: 2000,
            convergence_tol: 1e-8,
            gradient_mode: GradientMode::ParameterShift,
            restarts: 1,
            seed: 0,
            bounds: (-2.0 * PI, 2.0 * PI),
            memory: 10,
        }
    }
}

impl ObjectiveConfig {
    pub fn with_tau(tau: f64) -> Self {
        Self {
            tau: Some(tau),
            ..Self::default()
        }
    }

    pub fn with_alpha(alpha: f64) -> Self {
        Self {
            alpha: Some(alpha),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        match (self.tau, self.alpha) {
            (Some(_), Some(_)) => return bad("set tau or alpha, not both".into()),
            (Some(t), None) if !(t >= 0.0 && t.is_finite()) => return bad(format!("tau must be nonnegative, got {t}")),
            (None, Some(a)) if !(a > 0.0 && a.is_finite()) => return bad(format!("alpha must be positive, got {a}")),
            _ => {}
        }
        if self.max_itr < 1 {
            return bad("max_itr must be at least 1".into());
        }
        if self.convergence_tol.is_nan() || self.convergence_tol <= 0.0 {
            return bad("convergence_tol must be positive".into());
        }
        if self.restarts < 1 {
            return bad("restarts must be at least 1".into());
        }
        if self.memory < 1 {
            return bad("memory must be at least 1".into());
        }
        let (lo, hi) = self.bounds;
        if !(lo < hi && lo.is_finite() && hi.is_finite()) {
            return bad(format!("bounds ({lo}, {hi}) are not a finite interval"));
        }
        Ok(())
    }

    /// Explicit `tau` wins, otherwise the relative rule with `α = 1` by default.
    pub fn penalty(&self) -> Penalty {
        match (self.tau, self.alpha) {
            (Some(t), _) => Penalty::Fixed(t),
            (None, Some(a)) => Penalty::Relative(a),
            (None, None) => Penalty::Relative(1.0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveValue {
    pub j: f64,
    pub sigma1: f64,
    pub sigma2: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OptimizationTrace {
    /// `(J, σ1, σ2)` at the start point and after every accepted step of the winning restart.
    pub iterations: Vec<ObjectiveValue>,
    pub theta_star: Vec<f64>,
    pub converged: bool,
    pub stop_reason: StopReason,
    pub tau: f64,
    /// Seed of the winning restart.
    pub seed: u64,
    /// Final `J` of every restart, in seed order.
    pub restart_values: Vec<f64>,
    pub gradient_mode: GradientMode,
    pub evaluations: usize,
}

impl OptimizationTrace {
    pub fn final_value(&self) -> ObjectiveValue {
        *self.iterations.last().expect("trace holds at least the start point")
    }
}

fn check_problem(program: &CircuitProgram, l: &DMatrix<f64>, tau: f64) -> Result<()> {
    check_observable(1 << program.n_qubits(), l)?;
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(Error::InvalidArgument(format!("tau must be nonnegative, got {tau}")));
    }
    Ok(())
}

fn evaluate(program: &CircuitProgram, l: &DMatrix<f64>, tau: f64, theta: &[f64]) -> Result<ObjectiveValue> {
    let psi = apply_circuit(program, theta)?;
    let sigma1 = quadratic_form(psi.amplitudes(), l);
    let sigma2 = uniform_overlap_amps(psi.amplitudes());
    Ok(ObjectiveValue {
        j: sigma1 + tau * sigma2,
        sigma1,
        sigma2,
    })
}

/// `J(θ) = ⟨ψ|L|ψ⟩ + τ |⟨+…+|ψ⟩|²`.
pub fn objective(theta: &[f64], l: &DMatrix<f64>, tau: f64, program: &CircuitProgram) -> Result<ObjectiveValue> {
    check_problem(program, l, tau)?;
    evaluate(program, l, tau, theta)
}

/// `τ = α · ⟨ψ(θ₀)|L|ψ(θ₀)⟩`.
pub fn init_tau(l: &DMatrix<f64>, program: &CircuitProgram, theta0: &[f64], alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidArgument(format!("alpha must be positive, got {alpha}")));
    }
    check_problem(program, l, 0.0)?;
    let tau = alpha * evaluate(program, l, 0.0, theta0)?.sigma1;
    if tau <= 0.0 {
        log::warn!("initial Laplacian expectation is {tau}; the penalty is degenerate");
    }
    Ok(tau)
}

/// First slot that the ±π/2 shift rule cannot differentiate.
fn shift_rule_blocker(program: &CircuitProgram) -> Option<Error> {
    program
        .slot_kinds()
        .into_iter()
        .enumerate()
        .find(|(_, k)| !k.is_rotation())
        .map(|(slot, kind)| Error::ShiftRuleInapplicable {
            slot,
            kind: kind.to_string(),
        })
}

fn gradient_unchecked(
    program: &CircuitProgram,
    l: &DMatrix<f64>,
    tau: f64,
    theta: &[f64],
    mode: GradientMode,
) -> Result<Vec<f64>> {
    let (shift, scale) = match mode {
        GradientMode::ParameterShift => (FRAC_PI_2, 0.5),
        GradientMode::FiniteDifference => (FD_STEP, 0.5 / FD_STEP),
    };
    let mut work = theta.to_vec();
    (0..theta.len())
        .map(|i| {
            work[i] = theta[i] + shift;
            let plus = evaluate(program, l, tau, &work)?.j;
            work[i] = theta[i] - shift;
            let minus = evaluate(program, l, tau, &work)?.j;
            work[i] = theta[i];
            Ok(scale * (plus - minus))
        })
        .collect()
}

/// `∂J/∂θ` by the parameter-shift rule or central differences.
pub fn gradient(
    theta: &[f64],
    l: &DMatrix<f64>,
    tau: f64,
    program: &CircuitProgram,
    mode: GradientMode,
) -> Result<Vec<f64>> {
    check_problem(program, l, tau)?;
    if mode == GradientMode::ParameterShift {
        if let Some(e) = shift_rule_blocker(program) {
            return Err(e);
        }
    }
    if theta.len() != program.n_params() {
        return Err(Error::ParamLength {
            expected: program.n_params(),
            got: theta.len(),
        });
    }
    gradient_unchecked(program, l, tau, theta, mode)
}

/// `θ₀ ~ U[-π, π)ᵖ` from a seeded generator.
pub fn initial_theta(n_params: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_params).map(|_| rng.random_range(-PI..PI)).collect()
}

fn laplacian_components(l: &DMatrix<f64>) -> usize {
    let w = DMatrix::from_fn(l.nrows(), l.ncols(), |i, j| if i == j { 0.0 } else { -l[(i, j)] });
    connected_components(&w)
}

struct RestartOutcome {
    seed: u64,
    trace: Vec<ObjectiveValue>,
    theta: Vec<f64>,
    reason: StopReason,
    evaluations: usize,
}

fn run_restart(
    program: &CircuitProgram,
    l: &DMatrix<f64>,
    tau: f64,
    seed: u64,
    mode: GradientMode,
    config: &ObjectiveConfig,
) -> Result<RestartOutcome> {
    let theta0 = initial_theta(program.n_params(), seed);
    let bounds = Bounds::uniform(program.n_params(), config.bounds.0, config.bounds.1)?;
    let opts = LbfgsOptions {
        memory: config.memory,
        max_iter: config.max_itr,
        f_tol: config.convergence_tol,
        ..LbfgsOptions::default()
    };
    let mut trace = Vec::new();
    let fg = |x: &[f64]| -> Result<(f64, Vec<f64>)> {
        let j = evaluate(program, l, tau, x)?.j;
        Ok((j, gradient_unchecked(program, l, tau, x, mode)?))
    };
    let min = minimize(fg, &theta0, &bounds, &opts, |x, _| {
        trace.push(evaluate(program, l, tau, x)?);
        Ok(())
    })?;
    Ok(RestartOutcome {
        seed,
        trace,
        theta: min.x,
        reason: min.reason,
        evaluations: min.evaluations,
    })
}

/// Minimises `J` from `restarts` seeded starts (seeds `seed, seed+1, …`) and
/// keeps the lowest final `J`, ties going to the lower seed.
///
/// In relative-penalty mode `τ` is fixed once from the first start so that all
/// restarts optimise the same objective.
pub fn optimize(l: &DMatrix<f64>, program: &CircuitProgram, config: &ObjectiveConfig) -> Result<OptimizationTrace> {
    config.validate()?;
    check_problem(program, l, 0.0)?;
    let components = laplacian_components(l);
    if components > 1 {
        log::warn!("Laplacian has {components} connected components; the Fiedler value is zero");
    }
    let tau = match config.penalty() {
        Penalty::Fixed(t) => t,
        Penalty::Relative(a) => init_tau(l, program, &initial_theta(program.n_params(), config.seed), a)?,
    };
    let mut mode = config.gradient_mode;
    if mode == GradientMode::ParameterShift {
        if let Some(e) = shift_rule_blocker(program) {
            log::warn!("{e}; falling back to finite differences");
            mode = GradientMode::FiniteDifference;
        }
    }

    let seeds: Vec<u64> = (0..config.restarts as u64)
        .map(|r| config.seed.wrapping_add(r))
        .collect();
    let run = |&seed: &u64| run_restart(program, l, tau, seed, mode, config);
    #[cfg(feature = "parallel")]
    let outcomes: Vec<RestartOutcome> = {
        use rayon::prelude::*;
        seeds.par_iter().map(run).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let outcomes: Vec<RestartOutcome> = seeds.iter().map(run).collect::<Result<_>>()?;

    let final_j = |o: &RestartOutcome| o.trace.last().map_or(f64::INFINITY, |v| v.j);
    let restart_values: Vec<f64> = outcomes.iter().map(final_j).collect();
    let evaluations = outcomes.iter().map(|o| o.evaluations).sum();
    let best = outcomes
        .into_iter()
        .reduce(|a, b| if final_j(&b) < final_j(&a) { b } else { a })
        .expect("at least one restart");
    Ok(OptimizationTrace {
        iterations: best.trace,
        theta_star: best.theta,
        converged: best.reason.converged(),
        stop_reason: best.reason,
        tau,
        seed: best.seed,
        restart_values,
        gradient_mode: mode,
        evaluations,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaCut {
    pub lambda: f64,
    pub cut_value: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClusterResult {
    pub signs: Vec<i8>,
    pub chosen_lambda: f64,
    pub cut_value: f64,
    pub labels: Vec<usize>,
    /// Cut value obtained at every angle tried, in order.
    pub lambda_cuts: Vec<LambdaCut>,
    /// Share of amplitudes with `|ψ_j| < 1/(4√N)`.
    pub settling_fraction: f64,
    pub statevector_dump: Option<Vec<Complex64>>,
}

impl ClusterResult {
    pub fn settling_warning(&self) -> bool {
        self.settling_fraction > SETTLING_WARN_FRACTION
    }
}

pub const SETTLING_WARN_FRACTION: f64 = 0.5;

/// Fraction of components whose magnitude is below `1/(4√N)`.
pub fn settling_fraction(psi: &Statevector) -> f64 {
    let n = psi.dim() as f64;
    let threshold = 0.25 / n.sqrt();
    psi.amplitudes().iter().filter(|a| a.norm() < threshold).count() as f64 / n
}

fn signs_from_values(values: impl Iterator<Item = f64>) -> Vec<i8> {
    values.map(|t| if t < 0.0 { -1 } else { 1 }).collect()
}

fn pick_best(
    l: &DMatrix<f64>,
    lambdas: &[f64],
    mut signs_at: impl FnMut(f64) -> Result<Vec<i8>>,
    psi: &Statevector,
) -> Result<ClusterResult> {
    if lambdas.is_empty() {
        return Err(Error::EmptyAngleSet);
    }
    let mut best: Option<(Vec<i8>, f64, f64)> = None;
    let mut lambda_cuts = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let signs = signs_at(lambda)?;
        let w = cut_value(&signs, l)?;
        lambda_cuts.push(LambdaCut { lambda, cut_value: w });
        if best.as_ref().is_none_or(|(_, _, bw)| w < *bw) {
            best = Some((signs, lambda, w));
        }
    }
    let (signs, chosen_lambda, cut_value) = best.expect("nonempty angle set");
    let labels = signs.iter().map(|&s| usize::from(s > 0)).collect();
    let settling = settling_fraction(psi);
    if settling > SETTLING_WARN_FRACTION {
        log::warn!(
            "{:.0}% of amplitudes are near zero; the state may have settled",
            100.0 * settling
        );
    }
    Ok(ClusterResult {
        signs,
        chosen_lambda,
        cut_value,
        labels,
        lambda_cuts,
        settling_fraction: settling,
        statevector_dump: None,
    })
}

/// Sign readout of an explicit state: `f_j = sign(Re(e^{iλ} ψ_j))`, zero
/// counting as `+1`, minimised over `λ ∈ lambdas`.
pub fn readout_state(psi: &Statevector, lambdas: &[f64], l: &DMatrix<f64>) -> Result<ClusterResult> {
    let amps = psi.amplitudes();
    pick_best(
        l,
        lambdas,
        |lambda| {
            let phase = Complex64::from_polar(1.0, lambda);
            Ok(signs_from_values(amps.iter().map(|a| (phase * a).re)))
        },
        psi,
    )
}

/// Sign readout of `U(θ*)|0⟩` through [`component_sign_value`].
pub fn readout_signs(
    program: &CircuitProgram,
    theta_star: &[f64],
    lambdas: &[f64],
    l: &DMatrix<f64>,
    backend: SignBackend,
) -> Result<ClusterResult> {
    let psi = apply_circuit(program, theta_star)?;
    match backend {
        SignBackend::Direct => readout_state(&psi, lambdas, l),
        SignBackend::Ancilla => pick_best(
            l,
            lambdas,
            |lambda| {
                let values = (0..psi.dim())
                    .map(|j| component_sign_value(program, theta_star, j, lambda, backend))
                    .collect::<Result<Vec<_>>>()?;
                Ok(signs_from_values(values.into_iter()))
            },
            &psi,
        ),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphConfig {
    pub gamma: f64,
    /// `None` keeps the dense Gaussian graph.
    pub k: Option<usize>,
}

impl Default for GraphConfig {
    fn default() -> Self {
        Self { gamma: 1.0, k: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReadoutConfig {
    pub lambdas: Vec<f64>,
    pub backend: SignBackend,
    pub dump_statevector: bool,
}

impl Default for ReadoutConfig {
    fn default() -> Self {
        Self {
            lambdas: DEFAULT_LAMBDAS.to_vec(),
            backend: SignBackend::Direct,
            dump_statevector: false,
        }
    }
}

/// Rescale, Gaussian affinity, optional k-NN sparsification and Laplacian.
pub fn build_graph(points: &DMatrix<f64>, config: &GraphConfig) -> Result<Laplacian> {
    let x = rescale_features(points)?;
    let mut aff = gaussian_affinity(&x, config.gamma)?;
    if let Some(k) = config.k {
        aff = knn_sparsify(&aff, k)?;
    }
    Ok(build_laplacian(&aff))
}

/// `log2 N` when `N` is a power of two and at least 2.
pub fn qubits_for(n_points: usize) -> Result<usize> {
    if n_points < 2 || !n_points.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(n_points));
    }
    Ok(n_points.trailing_zeros() as usize)
}

#[derive(Clone, Debug)]
pub struct ClusterRun {
    pub result: ClusterResult,
    pub trace: OptimizationTrace,
    pub laplacian: Laplacian,
}

/// The full pipeline from a point cloud to a bipartition.
pub fn cluster(
    dataset: &Dataset,
    graph: &GraphConfig,
    spec: &AnsatzSpec,
    objective: &ObjectiveConfig,
    readout: &ReadoutConfig,
) -> Result<ClusterRun> {
    let n_qubits = qubits_for(dataset.len())?;
    if spec.n_qubits != n_qubits {
        return Err(Error::InvalidArgument(format!(
            "ansatz has {} qubits but {} points need {n_qubits}",
            spec.n_qubits,
            dataset.len()
        )));
    }
    objective.validate()?;
    let laplacian = build_graph(&dataset.points, graph)?;
    if !laplacian.connected() {
        let components = laplacian_components(laplacian.matrix());
        return Err(Error::Disconnected { components });
    }
    let program = build_ansatz(spec)?;
    let trace = optimize(laplacian.matrix(), &program, objective)?;
    let mut result = readout_signs(
        &program,
        &trace.theta_star,
        &readout.lambdas,
        laplacian.matrix(),
        readout.backend,
    )?;
    if readout.dump_statevector {
        result.statevector_dump = Some(apply_circuit(&program, &trace.theta_star)?.into_amplitudes());
    }
    Ok(ClusterRun {
        result,
        trace,
        laplacian,
    })
}
