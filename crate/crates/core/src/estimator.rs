//! The multiband weighted delay estimation pipeline: reduced steering
//! matrices, the weighted subspace-fitting (WSF) cost and its analytic
//! gradient, a Levenberg-Marquardt solver on the separable nonlinear LS
//! problem, a two-stage initializer, and the amplitude LS back-substitution.

use ndarray::{s, Array1, Array2};
use ndarray_linalg::QR;

use crate::error::{MbError, Result};
use crate::linalg;
use crate::model::{build_full_steering, BandPlan, MultibandCsi, C64};
use crate::stacking::{self, StackConfig};
use crate::subspace::{self, SubspaceEstimate};

/// Initial Levenberg-Marquardt damping.
const LM_LAMBDA0: f64 = 1e-3;
/// Relative rank tolerance on the triangular factor of the steering matrix.
const RANK_TOL: f64 = 1e-10;
/// Phase increment used to separate coincident initial delays.
const COLLISION_NUDGE: f64 = 0.01;

/// Which data extensions the pipeline applies before the SVD.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Plain,
    Fb,
    Nr,
    FbNr,
}

impl Variant {
    pub fn use_fb(self) -> bool {
        matches!(self, Variant::Fb | Variant::FbNr)
    }

    pub fn use_nr(self) -> bool {
        matches!(self, Variant::Nr | Variant::FbNr)
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Plain => "plain",
            Variant::Fb => "fb",
            Variant::Nr => "nr",
            Variant::FbNr => "fb-nr",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = MbError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "plain" => Ok(Variant::Plain),
            "fb" => Ok(Variant::Fb),
            "nr" => Ok(Variant::Nr),
            "fb-nr" | "fbnr" | "fb&nr" | "fb_nr" => Ok(Variant::FbNr),
            other => Err(MbError::Config(format!(
                "unknown variant '{other}' (expected plain|fb|nr|fb-nr)"
            ))),
        }
    }
}

/// The fixed data of one WSF problem: basis, weights, and the steering
/// geometry needed to build `A'(phi)`.
#[derive(Debug, Clone)]
pub struct WsfProblem {
    /// `LP x K` orthonormal signal-subspace basis.
    pub basis: Array2<C64>,
    /// Diagonal of the `K x K` weighting matrix.
    pub weights: Array1<f64>,
    pub band_plan: BandPlan,
    pub p_rows: usize,
    pub k_order: usize,
    /// Cached `basis * diag(weights)`.
    weighted_basis: Array2<C64>,
}

impl WsfProblem {
    pub fn new(
        basis: Array2<C64>,
        weights: Array1<f64>,
        band_plan: BandPlan,
        p_rows: usize,
    ) -> Result<Self> {
        let k_order = basis.ncols();
        if k_order == 0 {
            return Err(MbError::Invalid("empty subspace basis".into()));
        }
        if weights.len() != k_order {
            return Err(MbError::Invalid("one weight per basis column required".into()));
        }
        if weights.iter().any(|&w| w <= 0.0) {
            return Err(MbError::Invalid("weights must be positive".into()));
        }
        if basis.nrows() != band_plan.n_bands() * p_rows {
            return Err(MbError::Invalid(format!(
                "basis rows {} do not match L*P = {}",
                basis.nrows(),
                band_plan.n_bands() * p_rows
            )));
        }
        let mut weighted_basis = basis.clone();
        for (j, &w) in weights.iter().enumerate() {
            weighted_basis.column_mut(j).mapv_inplace(|z| z * w);
        }
        Ok(Self { basis, weights, band_plan, p_rows, k_order, weighted_basis })
    }

    pub fn unweighted(
        est: &SubspaceEstimate,
        band_plan: BandPlan,
        p_rows: usize,
    ) -> Result<Self> {
        Self::new(est.basis.clone(), Array1::ones(est.k_order), band_plan, p_rows)
    }
}

/// Full estimation result.
#[derive(Debug, Clone)]
pub struct DelayEstimate {
    /// Delays in seconds, ascending.
    pub delays: Vec<f64>,
    /// Per-snapshot complex path gains, ordered like `delays`.
    pub amplitudes: Vec<Array1<C64>>,
    /// `phi_k = w_sc * tau_k`.
    pub phases: Vec<f64>,
    pub k_order: usize,
    /// WSF cost after every accepted step, starting with the initial cost.
    pub cost_trace: Vec<f64>,
    pub converged: bool,
    /// Per-delay CRB values, filled in by the caller when requested.
    pub crb: Option<Vec<f64>>,
}

/// `LP x K` reduced steering matrix: stack over bands of the first `P`
/// Vandermonde rows, phase-advanced per band; entry `(iP + r, k)` is
/// `exp(-j (n_i + r) phi_k)`.
pub fn build_reduced_steering(
    phases: &[f64],
    p_rows: usize,
    band_plan: &BandPlan,
) -> Array2<C64> {
    let l = band_plan.n_bands();
    let k = phases.len();
    let mut a = Array2::zeros((l * p_rows, k));
    for (kk, &phi) in phases.iter().enumerate() {
        let step = C64::from_polar(1.0, -phi);
        for (i, &off) in band_plan.band_offsets.iter().enumerate() {
            let mut cur = C64::from_polar(1.0, -(off as f64) * phi);
            for r in 0..p_rows {
                a[(i * p_rows + r, kk)] = cur;
                cur *= step;
            }
        }
    }
    a
}

/// Columnwise derivative of the reduced steering matrix with respect to each
/// phase: entry `(iP + r, k)` is `-j (n_i + r) exp(-j (n_i + r) phi_k)`.
fn reduced_steering_derivative(
    phases: &[f64],
    p_rows: usize,
    band_plan: &BandPlan,
) -> Array2<C64> {
    let l = band_plan.n_bands();
    let k = phases.len();
    let mut d = Array2::zeros((l * p_rows, k));
    for (kk, &phi) in phases.iter().enumerate() {
        for (i, &off) in band_plan.band_offsets.iter().enumerate() {
            for r in 0..p_rows {
                let g = off as f64 + r as f64;
                d[(i * p_rows + r, kk)] = C64::new(0.0, -g) * C64::from_polar(1.0, -g * phi);
            }
        }
    }
    d
}

/// Gaussian elimination with partial pivoting for small complex systems.
fn solve_small_c(mut a: Array2<C64>, mut b: Array2<C64>) -> Result<Array2<C64>> {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n {
        return Err(MbError::Invalid("solve_small_c: shape mismatch".into()));
    }
    let m = b.ncols();
    for col in 0..n {
        let (piv, mag) = (col..n)
            .map(|r| (r, a[(r, col)].norm()))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap();
        if mag == 0.0 {
            return Err(MbError::Numerical("singular small system".into()));
        }
        if piv != col {
            for j in 0..n {
                a.swap((piv, j), (col, j));
            }
            for j in 0..m {
                b.swap((piv, j), (col, j));
            }
        }
        let d = a[(col, col)];
        for r in col + 1..n {
            let f = a[(r, col)] / d;
            if f == C64::new(0.0, 0.0) {
                continue;
            }
            for j in col..n {
                let v = a[(col, j)];
                a[(r, j)] -= f * v;
            }
            for j in 0..m {
                let v = b[(col, j)];
                b[(r, j)] -= f * v;
            }
        }
    }
    for col in (0..n).rev() {
        for j in 0..m {
            let mut acc = b[(col, j)];
            for r in col + 1..n {
                acc -= a[(col, r)] * b[(r, j)];
            }
            b[(col, j)] = acc / a[(col, col)];
        }
    }
    Ok(b)
}

/// Gaussian elimination with partial pivoting for small real systems.
fn solve_small_f(mut a: Array2<f64>, mut b: Array1<f64>) -> Result<Array1<f64>> {
    let n = a.nrows();
    for col in 0..n {
        let (piv, mag) = (col..n)
            .map(|r| (r, a[(r, col)].abs()))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap();
        if mag == 0.0 {
            return Err(MbError::Numerical("singular normal equations".into()));
        }
        if piv != col {
            for j in 0..n {
                a.swap((piv, j), (col, j));
            }
            b.swap(piv, col);
        }
        for r in col + 1..n {
            let f = a[(r, col)] / a[(col, col)];
            for j in col..n {
                let v = a[(col, j)];
                a[(r, j)] -= f * v;
            }
            b[r] -= f * b[col];
        }
    }
    for col in (0..n).rev() {
        let mut acc = b[col];
        for r in col + 1..n {
            acc -= a[(col, r)] * b[r];
        }
        b[col] = acc / a[(col, col)];
    }
    Ok(b)
}

/// Back substitution for an upper-triangular system with matrix RHS.
fn solve_upper(r: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let n = r.nrows();
    let m = b.ncols();
    let mut x = b.clone();
    for col in (0..n).rev() {
        for j in 0..m {
            let mut acc = x[(col, j)];
            for rr in col + 1..n {
                acc -= r[(col, rr)] * x[(rr, j)];
            }
            x[(col, j)] = acc / r[(col, col)];
        }
    }
    x
}

/// QR of `A'(phi)` with a rank check that names the colliding pair.
fn steering_qr(
    problem: &WsfProblem,
    phases: &[f64],
) -> Result<(Array2<C64>, Array2<C64>)> {
    let a = build_reduced_steering(phases, problem.p_rows, &problem.band_plan);
    let (q1, r) = a
        .qr()
        .map_err(|e| MbError::Numerical(format!("steering QR failed: {e}")))?;
    let k = phases.len();
    let diag: Vec<f64> = (0..k).map(|i| r[(i, i)].norm()).collect();
    let dmax = diag.iter().cloned().fold(0.0f64, f64::max);
    if diag.iter().any(|&d| d <= RANK_TOL * dmax) {
        let (mut bi, mut bj, mut best) = (0, 1, f64::INFINITY);
        for i in 0..k {
            for j in i + 1..k {
                let d = (phases[i] - phases[j]).abs();
                if d < best {
                    best = d;
                    bi = i;
                    bj = j;
                }
            }
        }
        return Err(MbError::Numerical(format!(
            "steering matrix rank deficient: phases {bi} and {bj} coincide \
             ({:.6e} vs {:.6e})",
            phases[bi], phases[bj]
        )));
    }
    Ok((q1, r))
}

/// WSF cost `J(phi) = || P_perp(phi) * U W ||_F^2`, evaluated through a thin
/// QR of the steering matrix so no pseudo-inverse is squared.
pub fn wsf_cost(problem: &WsfProblem, phases: &[f64]) -> Result<f64> {
    if phases.len() != problem.k_order {
        return Err(MbError::Invalid("one phase per path required".into()));
    }
    let (q1, _) = steering_qr(problem, phases)?;
    let g = &problem.weighted_basis;
    let t = linalg::adjoint(&q1.view()).dot(g);
    let res = g - &q1.dot(&t);
    Ok(res.iter().map(|z| z.norm_sqr()).sum())
}

/// Everything the gradient and the LM step need at one point.
struct WsfEval {
    cost: f64,
    /// `P_perp G`, LP x K.
    residual: Array2<C64>,
    /// `A'^+ G`, K x K.
    b: Array2<C64>,
    q1: Array2<C64>,
    /// `Q1 R^{-H}`, LP x K (columns are the `q_k` of the Jacobian).
    qrh: Array2<C64>,
    /// Steering derivative columns at this point.
    da: Array2<C64>,
}

fn wsf_evaluate(problem: &WsfProblem, phases: &[f64]) -> Result<WsfEval> {
    let (q1, r) = steering_qr(problem, phases)?;
    let g = &problem.weighted_basis;
    let t = linalg::adjoint(&q1.view()).dot(g);
    let residual = g - &q1.dot(&t);
    let cost = residual.iter().map(|z| z.norm_sqr()).sum();
    let b = solve_upper(&r, &t);
    let k = problem.k_order;
    let rinv = solve_upper(&r, &Array2::eye(k));
    let qrh = q1.dot(&linalg::adjoint(&rinv.view()));
    let da = reduced_steering_derivative(phases, problem.p_rows, &problem.band_plan);
    Ok(WsfEval { cost, residual, b, q1, qrh, da })
}

/// Analytic gradient of the WSF cost.
pub fn wsf_gradient(problem: &WsfProblem, phases: &[f64]) -> Result<Array1<f64>> {
    if phases.len() != problem.k_order {
        return Err(MbError::Invalid("one phase per path required".into()));
    }
    let ev = wsf_evaluate(problem, phases)?;
    let k = problem.k_order;
    // P_perp da_k, then v_k = residual^H (P_perp da_k)
    let qt_da = linalg::adjoint(&ev.q1.view()).dot(&ev.da);
    let pda = &ev.da - &ev.q1.dot(&qt_da);
    let mut grad = Array1::zeros(k);
    for kk in 0..k {
        let v: Array1<C64> = ev
            .residual
            .columns()
            .into_iter()
            .map(|col| col.iter().zip(pda.column(kk)).map(|(r, d)| r.conj() * d).sum())
            .collect();
        let s: C64 = (0..k).map(|j| ev.b[(kk, j)] * v[j]).sum();
        grad[kk] = -2.0 * s.re;
    }
    Ok(grad)
}

/// Levenberg-Marquardt on the WSF residual.
///
/// Damping is adapted multiplicatively (x10 on reject, /10 on accept) from
/// `1e-3`; accepted steps never increase the cost. Returns the phases, the
/// cost after each accepted step (starting with the initial cost), and a
/// convergence flag.
pub fn lm_minimize(
    problem: &WsfProblem,
    phases0: &[f64],
    max_iters: usize,
    tol: f64,
) -> Result<(Vec<f64>, Vec<f64>, bool)> {
    let k = problem.k_order;
    if phases0.len() != k {
        return Err(MbError::Invalid("one initial phase per path required".into()));
    }
    let mut phases = phases0.to_vec();
    let mut ev = wsf_evaluate(problem, &phases)?;
    let mut trace = vec![ev.cost];
    let mut lambda = LM_LAMBDA0;
    let mut converged = false;
    let scale: f64 = phases.iter().fold(1.0f64, |m, p| m.max(p.abs()));

    for _ in 0..max_iters {
        // Real Gauss-Newton pieces from the complex Jacobian columns
        // J_k = -(P_perp da_k) b_k^T - q_k (da_k^H residual).
        let qt_da = linalg::adjoint(&ev.q1.view()).dot(&ev.da);
        let pda = &ev.da - &ev.q1.dot(&qt_da);
        let lp = problem.basis.nrows();
        let mut jac: Vec<Array2<C64>> = Vec::with_capacity(k);
        for kk in 0..k {
            let mut jk = Array2::<C64>::zeros((lp, k));
            let dah_res: Array1<C64> = ev
                .residual
                .columns()
                .into_iter()
                .map(|col| {
                    ev.da
                        .column(kk)
                        .iter()
                        .zip(col)
                        .map(|(d, r)| d.conj() * r)
                        .sum()
                })
                .collect();
            for j in 0..k {
                let bj = ev.b[(kk, j)];
                let dj = dah_res[j];
                for i in 0..lp {
                    jk[(i, j)] = -pda[(i, kk)] * bj - ev.qrh[(i, kk)] * dj;
                }
            }
            jac.push(jk);
        }
        let mut h = Array2::<f64>::zeros((k, k));
        let mut g = Array1::<f64>::zeros(k);
        for a in 0..k {
            for b in a..k {
                let v: f64 = jac[a]
                    .iter()
                    .zip(jac[b].iter())
                    .map(|(x, y)| (x.conj() * y).re)
                    .sum();
                h[(a, b)] = v;
                h[(b, a)] = v;
            }
            g[a] = jac[a]
                .iter()
                .zip(ev.residual.iter())
                .map(|(x, y)| (x.conj() * y).re)
                .sum();
        }

        let mut accepted = false;
        for _ in 0..16 {
            let mut damped = h.clone();
            let dmax = (0..k).map(|i| h[(i, i)]).fold(f64::MIN_POSITIVE, f64::max);
            for i in 0..k {
                damped[(i, i)] += lambda * h[(i, i)].max(1e-12 * dmax);
            }
            let step = match solve_small_f(damped, -&g) {
                Ok(s) => s,
                Err(_) => {
                    lambda *= 10.0;
                    continue;
                }
            };
            let trial: Vec<f64> =
                phases.iter().zip(&step).map(|(p, d)| p + d).collect();
            let trial_ev = match wsf_evaluate(problem, &trial) {
                Ok(e) => e,
                Err(_) => {
                    lambda *= 10.0;
                    continue;
                }
            };
            if trial_ev.cost <= ev.cost {
                let decrease = ev.cost - trial_ev.cost;
                let step_norm = step.iter().map(|d| d * d).sum::<f64>().sqrt();
                phases = trial;
                ev = trial_ev;
                trace.push(ev.cost);
                lambda = (lambda / 10.0).max(1e-15);
                accepted = true;
                if decrease <= tol * ev.cost.max(f64::MIN_POSITIVE)
                    || step_norm <= tol * scale
                {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            // damping exhausted: no descent direction left
            converged = true;
        }
        if converged {
            break;
        }
    }
    Ok((phases, trace, converged))
}

/// Shift-invariance (ESPRIT) phase estimates from a Hankel-structured data
/// matrix: signal subspace, rotation `Psi = U1^+ U2`, and its eigen-angles.
pub fn esprit_phases(data: &Array2<C64>, k_order: usize) -> Result<Vec<f64>> {
    let p = data.nrows();
    if k_order < 1 || k_order + 1 > p || k_order > data.ncols() {
        return Err(MbError::Invalid(format!(
            "k_order {k_order} exceeds achievable rank for a {p}x{} matrix",
            data.ncols()
        )));
    }
    let (_, u) = linalg::left_svd(&data.view())?;
    let us = u.slice(s![.., ..k_order]).to_owned();
    let u1 = us.slice(s![..p - 1, ..]).to_owned();
    let u2 = us.slice(s![1.., ..]).to_owned();
    let u1h = linalg::adjoint(&u1.view());
    let psi = solve_small_c(u1h.dot(&u1), u1h.dot(&u2))?;
    let eig = linalg::eigvals_into(psi)?;
    let mut phases: Vec<f64> = eig.iter().map(|z| -z.arg()).collect();
    phases.sort_by(f64::total_cmp);
    Ok(phases)
}

/// Coordinate-wise grid refinement of the WSF cost around each phase.
///
/// Each phase is swept over `n_points` samples spanning `+-half_span` while
/// the others are held fixed; `sweeps` full passes are made. A single-point
/// grid returns the input unchanged.
pub fn refine_phases(
    problem: &WsfProblem,
    phases: &[f64],
    half_span: f64,
    n_points: usize,
    sweeps: usize,
) -> Result<Vec<f64>> {
    let mut cur = phases.to_vec();
    if n_points <= 1 || sweeps == 0 {
        return Ok(cur);
    }
    let mut best_cost = partial_wsf_cost(problem, &cur).unwrap_or(f64::INFINITY);
    for _ in 0..sweeps {
        for k in 0..cur.len() {
            let center = cur[k];
            for t in 0..n_points {
                let offset = -half_span
                    + 2.0 * half_span * t as f64 / (n_points - 1) as f64;
                let mut cand = cur.clone();
                cand[k] = center + offset;
                if let Ok(c) = partial_wsf_cost(problem, &cand) {
                    if c < best_cost {
                        best_cost = c;
                        cur = cand;
                    }
                }
            }
        }
    }
    Ok(cur)
}

/// Separate coincident phases by a fixed nudge so the steering matrix stays
/// full rank.
fn separate_collisions(phases: &mut [f64]) {
    phases.sort_by(f64::total_cmp);
    for i in 1..phases.len() {
        if phases[i] - phases[i - 1] < 1e-12 {
            phases[i] = phases[i - 1] + COLLISION_NUDGE;
        }
    }
}

/// Partial WSF cost: like [`wsf_cost`] but accepts fewer phases than the
/// problem's model order, fitting only the selected steering columns.
fn partial_wsf_cost(problem: &WsfProblem, phases: &[f64]) -> Result<f64> {
    let (q1, _) = steering_qr(problem, phases)?;
    let g = &problem.weighted_basis;
    let t = linalg::adjoint(&q1.view()).dot(g);
    let res = g - &q1.dot(&t);
    Ok(res.iter().map(|z| z.norm_sqr()).sum())
}

/// Greedy full-aperture grid initialization: delays are added one at a time,
/// each chosen on a grid over `[0, t_max]` to minimize the partial WSF cost
/// given the delays already selected. Robust to noise because every candidate
/// is scored against the full multiband subspace rather than a single band.
pub fn greedy_grid_phases(problem: &WsfProblem, t_max: f64) -> Result<Vec<f64>> {
    if !(t_max > 0.0) {
        return Err(MbError::Invalid("greedy grid: t_max must be positive".into()));
    }
    let w = problem.band_plan.omega_sc();
    let aperture = problem.band_plan.aperture_subcarriers() as f64;
    // a quarter of the full-aperture resolution keeps every basin sampled
    let step = 2.0 * std::f64::consts::PI / (4.0 * aperture);
    let max_phi = w * t_max;
    let n_grid = (max_phi / step).ceil() as usize + 1;
    let mut selected: Vec<f64> = Vec::with_capacity(problem.k_order);
    for _ in 0..problem.k_order {
        let mut best_cost = f64::INFINITY;
        let mut best_phi = 0.0;
        for g in 0..n_grid {
            let phi = g as f64 * step;
            if selected.iter().any(|&s| (s - phi).abs() < 1e-12) {
                continue;
            }
            let mut cand = selected.clone();
            cand.push(phi);
            if let Ok(c) = partial_wsf_cost(problem, &cand) {
                if c < best_cost {
                    best_cost = c;
                    best_phi = phi;
                }
            }
        }
        if !best_cost.is_finite() {
            return Err(MbError::Numerical(
                "greedy initialization found no viable grid point".into(),
            ));
        }
        selected.push(best_phi);
        // local refit of all selected phases so the residue of off-grid
        // mismatch does not outcompete genuinely weaker paths later
        selected = refine_phases(problem, &selected, step, 9, 1)?;
    }
    selected.sort_by(f64::total_cmp);
    Ok(selected)
}

/// Default delay window for the greedy initializer: twice the inverse of a
/// single band's bandwidth (100 ns at the default numerology), which covers
/// indoor delay spreads.
fn default_init_t_max(plan: &BandPlan) -> f64 {
    2.0 / (plan.n_subcarriers as f64 * plan.subcarrier_spacing)
}

/// Coarse phase candidates from the subspace pseudospectrum: the normalized
/// residual `(||a(phi)||^2 - ||U^H a(phi)||^2) / ||a(phi)||^2` is evaluated
/// on a grid over `[0, t_max]` and its deepest well-separated local minima
/// are returned (ascending). A notch at a true delay is deep regardless of
/// that path's power, so weak paths are found as reliably as strong ones.
/// Fewer than `k_order` notches are padded from the remaining minima, then
/// with nudged duplicates.
pub fn spectrum_init_phases(problem: &WsfProblem, t_max: f64) -> Result<Vec<f64>> {
    if !(t_max > 0.0) {
        return Err(MbError::Invalid("spectrum init: t_max must be positive".into()));
    }
    let w = problem.band_plan.omega_sc();
    let aperture = problem.band_plan.aperture_subcarriers() as f64;
    // a sixteenth of the full-aperture resolution resolves every notch
    let step = 2.0 * std::f64::consts::PI / (16.0 * aperture);
    let n_grid = (w * t_max / step).ceil() as usize + 1;
    let mut resid = Vec::with_capacity(n_grid);
    for g in 0..n_grid {
        let phi = g as f64 * step;
        let a = build_reduced_steering(&[phi], problem.p_rows, &problem.band_plan);
        let norm2: f64 = a.iter().map(|z| z.norm_sqr()).sum();
        let proj: f64 = problem
            .basis
            .columns()
            .into_iter()
            .map(|col| {
                col.iter()
                    .zip(a.column(0))
                    .map(|(e, x)| e.conj() * x)
                    .sum::<C64>()
                    .norm_sqr()
            })
            .sum();
        resid.push((norm2 - proj).max(0.0) / norm2.max(f64::MIN_POSITIVE));
    }
    let mut minima: Vec<usize> = (1..n_grid.saturating_sub(1))
        .filter(|&i| resid[i] < resid[i - 1] && resid[i] < resid[i + 1])
        .collect();
    minima.sort_by(|&a, &b| resid[a].total_cmp(&resid[b]));
    let mut chosen: Vec<usize> = Vec::new();
    // deepest minima with a minimum spacing first, then relax the spacing
    for pass in 0..2 {
        for &i in &minima {
            if chosen.len() == problem.k_order {
                break;
            }
            let ok = match pass {
                0 => chosen.iter().all(|&j| i.abs_diff(j) >= 3),
                _ => !chosen.contains(&i),
            };
            if ok {
                chosen.push(i);
            }
        }
    }
    let mut phases: Vec<f64> = chosen.into_iter().map(|i| i as f64 * step).collect();
    // still short (e.g. coincident paths): pad with nudged duplicates of the
    // deepest notch, or zero when the spectrum had no minima at all
    let anchor = phases.first().copied().unwrap_or(0.0);
    while phases.len() < problem.k_order {
        phases.push(anchor);
    }
    separate_collisions(&mut phases);
    Ok(phases)
}

fn initialize_phases_with(
    csi: &MultibandCsi,
    _cfg: &StackConfig,
    problem: &WsfProblem,
) -> Result<Vec<f64>> {
    let mut coarse = spectrum_init_phases(problem, default_init_t_max(&csi.band_plan))?;
    separate_collisions(&mut coarse);
    // Tight coordinate polish: the span is a few pseudospectrum grid steps,
    // small enough that no path can be relocated into a neighbor's basin
    // (wide spans let greedy per-delay moves stack two paths together and
    // strand the subsequent descent in a local minimum).
    let aperture = problem.band_plan.aperture_subcarriers() as f64;
    let grid_step = 2.0 * std::f64::consts::PI / (16.0 * aperture);
    let mut refined = refine_phases(problem, &coarse, 3.0 * grid_step, 25, 2)?;
    separate_collisions(&mut refined);
    Ok(refined)
}

/// Two-stage initializer: greedy full-aperture grid selection for coarse
/// delays, then per-delay grid refinement of the WSF cost over the aperture
/// ambiguity neighborhood. Output in seconds, ascending.
pub fn initialize_delays(
    csi: &MultibandCsi,
    cfg: &StackConfig,
    k_order: usize,
) -> Result<Vec<f64>> {
    let stacked = stacking::stack_snapshots(csi, cfg)?;
    let sub = subspace::truncated_svd(&stacked, k_order)?;
    let problem = WsfProblem::unweighted(&sub, csi.band_plan.clone(), cfg.p_rows)?;
    let phases = initialize_phases_with(csi, cfg, &problem)?;
    let w = csi.band_plan.omega_sc();
    Ok(phases.iter().map(|p| p / w).collect())
}

/// Per-snapshot least-squares path amplitudes against the full steering
/// matrix built from `delays`.
pub fn estimate_amplitudes(
    delays: &[f64],
    csi: &MultibandCsi,
) -> Result<Vec<Array1<C64>>> {
    csi.validate()?;
    if delays.is_empty() {
        return Err(MbError::Invalid("need at least one delay".into()));
    }
    let a = build_full_steering(delays, &csi.band_plan);
    let (q1, r) = a
        .qr()
        .map_err(|e| MbError::Numerical(format!("steering QR failed: {e}")))?;
    let k = delays.len();
    let diag: Vec<f64> = (0..k).map(|i| r[(i, i)].norm()).collect();
    let dmax = diag.iter().cloned().fold(0.0f64, f64::max);
    if diag.iter().any(|&d| d <= RANK_TOL * dmax) {
        return Err(MbError::Numerical(
            "steering matrix rank deficient; delays too close".into(),
        ));
    }
    let q1h = linalg::adjoint(&q1.view());
    let mut out = Vec::with_capacity(csi.n_snapshots());
    for m in 0..csi.n_snapshots() {
        let h = csi.stacked_vector(m);
        let rhs = q1h.dot(&h).insert_axis(ndarray::Axis(1));
        let alpha = solve_upper(&r, &rhs);
        out.push(alpha.column(0).to_owned());
    }
    Ok(out)
}

/// The full pipeline: stack, extend, SVD (+ MDL when `k_order` is absent),
/// weight, initialize, LM-minimize, and back-substitute amplitudes.
pub fn mbwde(
    csi: &MultibandCsi,
    cfg: &StackConfig,
    k_order: Option<usize>,
    variant: Variant,
    weighted: bool,
    max_iters: usize,
    tol: f64,
) -> Result<DelayEstimate> {
    csi.validate()?;
    let mut cfg = *cfg;
    cfg.use_fb = variant.use_fb();
    cfg.use_nr = variant.use_nr();

    let stacked = stacking::stack_snapshots(csi, &cfg)?;
    let extended = if cfg.use_fb {
        stacking::fb_extend(&stacked, &csi.band_plan)?
    } else {
        stacked
    };

    // SVD of the pre-NR matrix: feeds MDL, and is the final subspace when no
    // noise-reduction pass follows. With a fixed order and noise reduction it
    // is never consulted, so skip the (expensive) full decomposition.
    let d = extended.n_rows().min(extended.n_cols());
    let pre = if k_order.is_none() || !cfg.use_nr {
        Some(subspace::truncated_svd(&extended, d)?)
    } else {
        None
    };
    let k = match k_order {
        Some(k) => {
            cfg.check_rank(&csi.band_plan, csi.n_snapshots(), k)?;
            if k > d {
                return Err(MbError::Invalid(format!(
                    "k_order {k} exceeds data rank bound {d}"
                )));
            }
            k
        }
        None => subspace::estimate_model_order_mdl(
            pre.as_ref()
                .expect("pre-NR SVD computed for MDL")
                .singular_values
                .as_slice()
                .expect("contiguous"),
            d,
        )?
        .max(1),
    };

    let sub = if cfg.use_nr {
        let factors = stacking::nr_factors(csi, &cfg, k, &extended)?;
        subspace::truncated_svd_factored(&factors, k)?
    } else {
        retruncate(pre.as_ref().expect("pre-NR SVD computed without NR"), k)
    };

    let weights = if weighted {
        subspace::wsf_column_scales(&sub)
    } else {
        Array1::ones(k)
    };
    let problem = WsfProblem::new(
        sub.basis.clone(),
        weights,
        csi.band_plan.clone(),
        cfg.p_rows,
    )?;

    let phases0 = initialize_phases_with(csi, &cfg, &problem)?;
    let (mut phases, cost_trace, converged) =
        lm_minimize(&problem, &phases0, max_iters, tol)?;
    phases.sort_by(f64::total_cmp);
    let w = csi.band_plan.omega_sc();
    let delays: Vec<f64> = phases.iter().map(|p| p / w).collect();
    let amplitudes = estimate_amplitudes(&delays, csi)?;
    Ok(DelayEstimate {
        delays,
        amplitudes,
        phases,
        k_order: k,
        cost_trace,
        converged,
        crb: None,
    })
}

/// Narrow a full subspace estimate to its first `k` columns, recomputing the
/// discarded-value noise power.
fn retruncate(est: &SubspaceEstimate, k: usize) -> SubspaceEstimate {
    let d = est.singular_values.len();
    let c = est.n_cols as f64;
    let noise_power = if k >= d {
        0.0
    } else {
        est.singular_values
            .iter()
            .skip(k)
            .map(|s| s * s / c)
            .sum::<f64>()
            / (d - k) as f64
    };
    SubspaceEstimate {
        basis: est.basis.slice(s![.., ..k]).to_owned(),
        singular_values: est.singular_values.clone(),
        k_order: k,
        noise_power,
        n_cols: est.n_cols,
    }
}
