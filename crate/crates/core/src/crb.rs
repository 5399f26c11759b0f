//! Fisher information and Cramér-Rao bounds for the multiband delay model.

use ndarray::{Array1, Array2};

use crate::error::{MbError, Result};
use crate::linalg;
use crate::model::{build_full_steering, BandPlan, MultipathChannel, C64};

/// Condition-number threshold beyond which the FIM inverse is flagged
/// unreliable (closely spaced paths break assumption A3-style invertibility).
const CONDITION_LIMIT: f64 = 1e12;

/// Inputs to the bound computations.
#[derive(Debug, Clone)]
pub struct CrbInputs {
    /// Path delays in seconds.
    pub delays: Vec<f64>,
    /// `K x K` Hermitian PSD amplitude covariance (diagonal under WSSUS).
    pub amplitude_cov: Array2<C64>,
    /// Per-entry noise variance.
    pub noise_variance: f64,
    pub m_snapshots: usize,
    pub band_plan: BandPlan,
}

impl CrbInputs {
    pub fn new(
        delays: Vec<f64>,
        amplitude_cov: Array2<C64>,
        noise_variance: f64,
        m_snapshots: usize,
        band_plan: BandPlan,
    ) -> Result<Self> {
        let k = delays.len();
        if k == 0 {
            return Err(MbError::Invalid("need at least one delay".into()));
        }
        if amplitude_cov.nrows() != k || amplitude_cov.ncols() != k {
            return Err(MbError::Invalid("amplitude covariance must be K x K".into()));
        }
        for i in 0..k {
            if amplitude_cov[(i, i)].im.abs() > 1e-12 * amplitude_cov[(i, i)].re.abs().max(1.0)
                || amplitude_cov[(i, i)].re < 0.0
            {
                return Err(MbError::Invalid("amplitude covariance diagonal must be real nonnegative".into()));
            }
            for j in 0..k {
                let d = (amplitude_cov[(i, j)] - amplitude_cov[(j, i)].conj()).norm();
                if d > 1e-10 * amplitude_cov[(i, i)].norm().max(1.0) {
                    return Err(MbError::Invalid("amplitude covariance must be Hermitian".into()));
                }
            }
        }
        if noise_variance <= 0.0 {
            return Err(MbError::Invalid("noise variance must be positive".into()));
        }
        if m_snapshots == 0 {
            return Err(MbError::Invalid("need at least one snapshot".into()));
        }
        Ok(Self { delays, amplitude_cov, noise_variance, m_snapshots, band_plan })
    }

    /// WSSUS inputs from a channel at a reference-path SNR.
    pub fn from_channel_snr(
        channel: &MultipathChannel,
        band_plan: &BandPlan,
        m_snapshots: usize,
        snr_db: f64,
    ) -> Result<Self> {
        let sigma_q = crate::model::noise_variance_for_snr(channel, snr_db);
        if sigma_q <= 0.0 {
            return Err(MbError::Invalid("CRB needs a finite SNR".into()));
        }
        let k = channel.n_paths();
        let mut cov = Array2::zeros((k, k));
        for (i, &p) in channel.avg_powers.iter().enumerate() {
            cov[(i, i)] = C64::new(p, 0.0);
        }
        Self::new(channel.delays.clone(), cov, sigma_q, m_snapshots, band_plan.clone())
    }

    fn per_path_snr(&self, k: usize) -> f64 {
        self.amplitude_cov[(k, k)].re / self.noise_variance
    }
}

/// Fisher information matrix with conditioning diagnostics.
#[derive(Debug, Clone)]
pub struct FimResult {
    pub matrix: Array2<f64>,
    pub condition: f64,
    /// False when the condition number exceeds the reliability threshold;
    /// values are still usable, with caution.
    pub reliable: bool,
}

/// Per-delay CRB values (variances, seconds squared).
#[derive(Debug, Clone)]
pub struct CrbResult {
    pub variances: Vec<f64>,
    pub condition: f64,
    pub reliable: bool,
}

/// Global subcarrier indices in band-stacked order.
fn global_indices(plan: &BandPlan) -> Vec<f64> {
    let n = plan.n_subcarriers as i64;
    plan.band_offsets
        .iter()
        .flat_map(|&off| (0..n).map(move |i| (off + i) as f64))
        .collect()
}

/// `LN x K` derivative of the full steering matrix: column `k` holds
/// `-j w_sc n exp(-j w_sc n tau_k)` over the global subcarrier indices.
pub fn steering_derivatives(delays: &[f64], band_plan: &BandPlan) -> Array2<C64> {
    let idx = global_indices(band_plan);
    let w = band_plan.omega_sc();
    let mut d = Array2::zeros((idx.len(), delays.len()));
    for (k, &tau) in delays.iter().enumerate() {
        for (r, &n) in idx.iter().enumerate() {
            d[(r, k)] = C64::new(0.0, -w * n) * C64::from_polar(1.0, -w * n * tau);
        }
    }
    d
}

/// `P_perp D` through a thin QR of the steering matrix, with a rank check.
fn project_out_steering(inputs: &CrbInputs, d: &Array2<C64>) -> Result<Array2<C64>> {
    let a = build_full_steering(&inputs.delays, &inputs.band_plan);
    let (q1, r) = ndarray_linalg::QR::qr(&a)
        .map_err(|e| MbError::Numerical(format!("steering QR failed: {e}")))?;
    let k = inputs.delays.len();
    let diag: Vec<f64> = (0..k).map(|i| r[(i, i)].norm()).collect();
    let dmax = diag.iter().cloned().fold(0.0f64, f64::max);
    if diag.iter().any(|&x| x <= 1e-12 * dmax) {
        return Err(MbError::Numerical("steering matrix rank deficient".into()));
    }
    let t = linalg::adjoint(&q1.view()).dot(d);
    Ok(d - &q1.dot(&t))
}

/// FIM for the delays conditioned on Gaussian amplitudes:
/// `F = (2M / sigma_q^2) Re{ D^H P_perp D (hadamard) R_alpha }`.
pub fn fim(inputs: &CrbInputs) -> Result<FimResult> {
    let d = steering_derivatives(&inputs.delays, &inputs.band_plan);
    let pd = project_out_steering(inputs, &d)?;
    // D^H P_perp D = (P_perp D)^H (P_perp D): Hermitian PSD by construction
    let core = linalg::adjoint(&pd.view()).dot(&pd);
    let k = inputs.delays.len();
    let scale = 2.0 * inputs.m_snapshots as f64 / inputs.noise_variance;
    let mut f = Array2::zeros((k, k));
    for i in 0..k {
        for j in 0..k {
            f[(i, j)] = scale * (core[(i, j)] * inputs.amplitude_cov[(i, j)]).re;
        }
    }
    let fc = f.mapv(|x| C64::new(x, 0.0));
    let sv = linalg::singular_values(&fc.view())?;
    let condition = sv[0] / sv[sv.len() - 1].max(f64::MIN_POSITIVE);
    Ok(FimResult { matrix: f, condition, reliable: condition <= CONDITION_LIMIT })
}

/// Per-delay CRB: the diagonal of the FIM inverse.
pub fn crb(inputs: &CrbInputs) -> Result<CrbResult> {
    let f = fim(inputs)?;
    let k = f.matrix.nrows();
    let mut variances = Vec::with_capacity(k);
    // invert column by column via Gaussian elimination on the real matrix
    for j in 0..k {
        let mut e = Array1::zeros(k);
        e[j] = 1.0;
        let col = solve_real(f.matrix.clone(), e)?;
        variances.push(col[j]);
    }
    if variances.iter().any(|&v| !v.is_finite()) {
        return Err(MbError::Numerical("FIM inverse not finite".into()));
    }
    Ok(CrbResult { variances, condition: f.condition, reliable: f.reliable })
}

fn solve_real(mut a: Array2<f64>, mut b: Array1<f64>) -> Result<Array1<f64>> {
    let n = a.nrows();
    for col in 0..n {
        let (piv, mag) = (col..n)
            .map(|r| (r, a[(r, col)].abs()))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap();
        if mag == 0.0 {
            return Err(MbError::Numerical("singular FIM".into()));
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

/// Decoupled per-path CRB `1 / (2 M SNR_k b(tau_k))` with
/// `b = d^H (I - P_A) d` (projector form).
pub fn crb_decoupled(inputs: &CrbInputs, path_k: usize) -> Result<f64> {
    let k = inputs.delays.len();
    if path_k >= k {
        return Err(MbError::Invalid(format!("path index {path_k} out of range")));
    }
    for i in 0..k {
        for j in 0..k {
            if i != j && inputs.amplitude_cov[(i, j)].norm() > 1e-12 {
                return Err(MbError::Invalid(
                    "decoupled CRB requires a diagonal amplitude covariance".into(),
                ));
            }
        }
    }
    let d = steering_derivatives(&inputs.delays, &inputs.band_plan);
    let pd = project_out_steering(inputs, &d)?;
    let b: f64 = pd.column(path_k).iter().map(|z| z.norm_sqr()).sum();
    let snr = inputs.per_path_snr(path_k);
    if snr.is_infinite() {
        return Ok(0.0);
    }
    let denom = 2.0 * inputs.m_snapshots as f64 * snr * b;
    if denom <= 0.0 {
        return Err(MbError::Numerical("decoupled CRB denominator vanished".into()));
    }
    Ok(1.0 / denom)
}

/// Fully decoupled AWGN-style bound using `b = sum (w_sc n)^2` over the
/// mean-centered used-subcarrier index set (centering makes the value
/// invariant to the index origin, matching the centered index-set form).
pub fn crb_decoupled_awgn(inputs: &CrbInputs, path_k: usize) -> Result<f64> {
    let k = inputs.delays.len();
    if path_k >= k {
        return Err(MbError::Invalid(format!("path index {path_k} out of range")));
    }
    let idx = global_indices(&inputs.band_plan);
    let mean = idx.iter().sum::<f64>() / idx.len() as f64;
    let w = inputs.band_plan.omega_sc();
    let b: f64 = idx.iter().map(|n| (w * (n - mean)).powi(2)).sum();
    let snr = inputs.per_path_snr(path_k);
    if snr.is_infinite() {
        return Ok(0.0);
    }
    Ok(1.0 / (2.0 * inputs.m_snapshots as f64 * snr * b))
}
