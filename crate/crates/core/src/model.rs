//! Domain types for multipath channels, band plans, and multiband CSI,
//! plus synthetic CSI generation and phase-offset elimination.
//!
//! A channel is a sum of discrete paths; the CSI of band `i` follows the
//! frequency-domain model `h_i = M Phi^{n_i} alpha + q_i`, where `M` is a
//! Vandermonde matrix in the per-subcarrier phase shifts and `Phi` collects
//! the unit-circle phase factors of the path delays.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::error::{MbError, Result};
use crate::rng;

pub type C64 = Complex64;

/// A multipath channel: `K` path delays with complex gains and average powers.
#[derive(Debug, Clone)]
pub struct MultipathChannel {
    /// Path delays in seconds, strictly increasing; the first is the LOS path.
    pub delays: Vec<f64>,
    /// Complex path gains used when amplitudes are held fixed across snapshots.
    pub amplitudes: Vec<C64>,
    /// Average path powers (linear scale) used when amplitudes are redrawn.
    pub avg_powers: Vec<f64>,
}

impl MultipathChannel {
    pub fn new(delays: Vec<f64>, amplitudes: Vec<C64>, avg_powers: Vec<f64>) -> Result<Self> {
        if delays.is_empty() {
            return Err(MbError::Invalid("channel needs at least one path".into()));
        }
        if delays.len() != amplitudes.len() || delays.len() != avg_powers.len() {
            return Err(MbError::Invalid("delays/amplitudes/powers length mismatch".into()));
        }
        if delays[0] < 0.0 {
            return Err(MbError::Invalid("delays must be nonnegative".into()));
        }
        if delays.windows(2).any(|w| w[0] >= w[1]) {
            return Err(MbError::Invalid("delays must be strictly increasing".into()));
        }
        if avg_powers.iter().any(|&p| p <= 0.0) {
            return Err(MbError::Invalid("average powers must be positive".into()));
        }
        Ok(Self { delays, amplitudes, avg_powers })
    }

    /// Convenience constructor from delays in ns and powers in dB; the fixed
    /// amplitudes are set to the RMS magnitude of each path.
    pub fn from_ns_db(delays_ns: &[f64], powers_db: &[f64]) -> Result<Self> {
        let delays = delays_ns.iter().map(|d| d * 1e-9).collect();
        let powers: Vec<f64> = powers_db.iter().map(|p| 10f64.powf(p / 10.0)).collect();
        let amps = powers.iter().map(|p| C64::new(p.sqrt(), 0.0)).collect();
        Self::new(delays, amps, powers)
    }

    pub fn n_paths(&self) -> usize {
        self.delays.len()
    }
}

/// Placement of the `L` probed bands on a common subcarrier grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BandPlan {
    /// Subcarrier spacing in Hz.
    pub subcarrier_spacing: f64,
    /// Subcarriers per band (even).
    pub n_subcarriers: usize,
    /// Band offsets in subcarrier units, strictly increasing, first is 0.
    pub band_offsets: Vec<i64>,
    /// Carrier frequency of band 0 in Hz (informational).
    pub base_frequency: f64,
}

impl BandPlan {
    pub fn new(
        subcarrier_spacing: f64,
        n_subcarriers: usize,
        band_offsets: Vec<i64>,
        base_frequency: f64,
    ) -> Result<Self> {
        if n_subcarriers < 2 || n_subcarriers % 2 != 0 {
            return Err(MbError::Invalid("n_subcarriers must be even and >= 2".into()));
        }
        if subcarrier_spacing <= 0.0 {
            return Err(MbError::Invalid("subcarrier spacing must be positive".into()));
        }
        if band_offsets.is_empty() {
            return Err(MbError::Invalid("need at least one band".into()));
        }
        if band_offsets[0] != 0 {
            return Err(MbError::Invalid("first band offset must be 0".into()));
        }
        if band_offsets.windows(2).any(|w| w[0] >= w[1]) {
            return Err(MbError::Invalid("band offsets must be strictly increasing".into()));
        }
        Ok(Self { subcarrier_spacing, n_subcarriers, band_offsets, base_frequency })
    }

    /// Offsets derived from band center frequencies; each spacing must land on
    /// the subcarrier grid.
    pub fn from_center_frequencies(
        centers_hz: &[f64],
        subcarrier_spacing: f64,
        n_subcarriers: usize,
    ) -> Result<Self> {
        if centers_hz.is_empty() {
            return Err(MbError::Invalid("need at least one band center".into()));
        }
        let f0 = centers_hz[0];
        let mut offsets = Vec::with_capacity(centers_hz.len());
        for &f in centers_hz {
            let n = (f - f0) / subcarrier_spacing;
            if (n - n.round()).abs() > 1e-6 {
                return Err(MbError::Invalid(format!(
                    "band center {f} Hz is not on the subcarrier grid"
                )));
            }
            offsets.push(n.round() as i64);
        }
        Self::new(subcarrier_spacing, n_subcarriers, offsets, f0)
    }

    pub fn n_bands(&self) -> usize {
        self.band_offsets.len()
    }

    /// Angular subcarrier spacing in rad/s.
    pub fn omega_sc(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.subcarrier_spacing
    }

    /// Per-band bandwidth in Hz.
    pub fn bandwidth(&self) -> f64 {
        self.n_subcarriers as f64 * self.subcarrier_spacing
    }

    /// Total aperture in subcarrier units (last used index + 1).
    pub fn aperture_subcarriers(&self) -> i64 {
        self.band_offsets[self.n_bands() - 1] + self.n_subcarriers as i64
    }
}

/// One snapshot of multiband CSI: `L` per-band vectors of length `N`.
#[derive(Debug, Clone)]
pub struct CsiSnapshot {
    pub per_band: Vec<Array1<C64>>,
    pub snapshot_id: usize,
}

/// `M` snapshots of multiband CSI with their band plan.
#[derive(Debug, Clone)]
pub struct MultibandCsi {
    pub snapshots: Vec<CsiSnapshot>,
    pub band_plan: BandPlan,
    /// Known noise variance, when available.
    pub noise_variance: Option<f64>,
}

impl MultibandCsi {
    pub fn validate(&self) -> Result<()> {
        if self.snapshots.is_empty() {
            return Err(MbError::Invalid("need at least one snapshot".into()));
        }
        let l = self.band_plan.n_bands();
        let n = self.band_plan.n_subcarriers;
        for s in &self.snapshots {
            if s.per_band.len() != l || s.per_band.iter().any(|b| b.len() != n) {
                return Err(MbError::Invalid("snapshot does not conform to band plan".into()));
            }
        }
        Ok(())
    }

    pub fn n_snapshots(&self) -> usize {
        self.snapshots.len()
    }

    /// The stacked length-`LN` CSI vector of snapshot `m`.
    pub fn stacked_vector(&self, m: usize) -> Array1<C64> {
        let n = self.band_plan.n_subcarriers;
        let l = self.band_plan.n_bands();
        let mut out = Array1::zeros(l * n);
        for (i, band) in self.snapshots[m].per_band.iter().enumerate() {
            out.slice_mut(ndarray::s![i * n..(i + 1) * n]).assign(band);
        }
        out
    }
}

/// OFDM training-signal parameters. The RF-chain response is taken as
/// calibrated (all-ones), so CSI is produced directly.
#[derive(Debug, Clone)]
pub struct OfdmConfig {
    pub symbol_duration: f64,
    pub cyclic_prefix: f64,
    pub training_symbols: Array1<C64>,
}

impl OfdmConfig {
    pub fn new(symbol_duration: f64, cyclic_prefix: f64, training_symbols: Array1<C64>) -> Result<Self> {
        if training_symbols.iter().any(|s| s.norm() == 0.0) {
            return Err(MbError::Invalid("training symbols must be nonzero".into()));
        }
        Ok(Self { symbol_duration, cyclic_prefix, training_symbols })
    }

    pub fn unit_training(band_plan: &BandPlan) -> Self {
        let n = band_plan.n_subcarriers;
        Self {
            symbol_duration: 1.0 / band_plan.subcarrier_spacing,
            cyclic_prefix: 0.25 / band_plan.subcarrier_spacing,
            training_symbols: Array1::from_elem(n, C64::new(1.0, 0.0)),
        }
    }
}

/// The `N x K` Vandermonde matrix of per-subcarrier phase shifts and the
/// diagonal of the per-band phase factor matrix.
///
/// The global carrier phase factor is absorbed into the path amplitudes, so
/// entry `(n, k)` is `exp(-j n w_sc tau_k)`.
pub fn subcarrier_phases(
    channel: &MultipathChannel,
    band_plan: &BandPlan,
) -> (Array2<C64>, Array1<C64>) {
    let n = band_plan.n_subcarriers;
    let k = channel.n_paths();
    let w = band_plan.omega_sc();
    let phi: Array1<C64> = channel
        .delays
        .iter()
        .map(|&t| C64::from_polar(1.0, -w * t))
        .collect();
    let mut m = Array2::zeros((n, k));
    for kk in 0..k {
        let mut cur = C64::new(1.0, 0.0);
        for nn in 0..n {
            m[(nn, kk)] = cur;
            cur *= phi[kk];
        }
    }
    (m, phi)
}

/// Full `LN x K` steering matrix: vertical stack of `M Phi^{n_i}` over bands.
pub fn build_full_steering(delays: &[f64], band_plan: &BandPlan) -> Array2<C64> {
    let n = band_plan.n_subcarriers;
    let l = band_plan.n_bands();
    let k = delays.len();
    let w = band_plan.omega_sc();
    let mut a = Array2::zeros((l * n, k));
    for (kk, &tau) in delays.iter().enumerate() {
        for (i, &off) in band_plan.band_offsets.iter().enumerate() {
            for nn in 0..n {
                let g = off as f64 + nn as f64;
                a[(i * n + nn, kk)] = C64::from_polar(1.0, -w * g * tau);
            }
        }
    }
    a
}

/// Column of the steering matrix for a single delay.
pub fn steering_column(tau: f64, band_plan: &BandPlan) -> Array1<C64> {
    build_full_steering(&[tau], band_plan).column(0).to_owned()
}

/// Noise variance for a target per-path SNR referenced to the first path.
pub fn noise_variance_for_snr(channel: &MultipathChannel, snr_db: f64) -> f64 {
    if snr_db.is_infinite() {
        0.0
    } else {
        channel.avg_powers[0] / 10f64.powf(snr_db / 10.0)
    }
}

/// Synthesize multiband CSI snapshots from the discrete data model.
///
/// Noise is circular complex Gaussian with variance set so the per-path SNR
/// of the reference path (path 1) equals `snr_db`. With `redraw_amplitudes`
/// the gains are drawn i.i.d. complex Gaussian per snapshot with the channel's
/// average powers (Rayleigh magnitudes); otherwise the fixed gains are reused.
pub fn generate_csi(
    channel: &MultipathChannel,
    band_plan: &BandPlan,
    m_snapshots: usize,
    snr_db: f64,
    redraw_amplitudes: bool,
    rng_seed: u64,
) -> Result<MultibandCsi> {
    if m_snapshots == 0 {
        return Err(MbError::Invalid("need at least one snapshot".into()));
    }
    let l = band_plan.n_bands();
    let k = channel.n_paths();
    let sigma_q = noise_variance_for_snr(channel, snr_db);
    let (m_mat, phi) = subcarrier_phases(channel, band_plan);
    let mut rng = rng::stream_rng(rng_seed, 0);

    let mut snapshots = Vec::with_capacity(m_snapshots);
    for m in 0..m_snapshots {
        let alpha: Vec<C64> = if redraw_amplitudes {
            channel
                .avg_powers
                .iter()
                .map(|&p| rng::complex_gaussian(&mut rng, p))
                .collect()
        } else {
            channel.amplitudes.clone()
        };
        let mut per_band = Vec::with_capacity(l);
        for &off in &band_plan.band_offsets {
            // alpha scaled by the band-dependent phase Phi^{n_i}
            let scaled: Array1<C64> = (0..k)
                .map(|kk| phi[kk].powi(off as i32) * alpha[kk])
                .collect();
            let mut h = m_mat.dot(&scaled);
            if sigma_q > 0.0 {
                for v in h.iter_mut() {
                    *v += rng::complex_gaussian(&mut rng, sigma_q);
                }
            }
            per_band.push(h);
        }
        snapshots.push(CsiSnapshot { per_band, snapshot_id: m });
    }
    Ok(MultibandCsi {
        snapshots,
        band_plan: band_plan.clone(),
        noise_variance: (sigma_q > 0.0).then_some(sigma_q),
    })
}

/// CSI after square-root phase-offset elimination, with the unresolved
/// per-band sign ambiguity flagged.
#[derive(Debug, Clone)]
pub struct PhaseAlignedCsi {
    pub csi: MultibandCsi,
    /// One flag per band: the recovered vector equals the true CSI up to a
    /// band-wise sign.
    pub sign_ambiguous: Vec<bool>,
}

/// Eliminate the unknown per-band phase offset between mobile- and
/// anchor-side CSI by the element-wise principal square root of their
/// point-wise product. The result satisfies the steering model up to a
/// per-band sign, which is reported, not resolved.
pub fn eliminate_phase_offset(
    csi_mobile: &MultibandCsi,
    csi_anchor: &MultibandCsi,
) -> Result<PhaseAlignedCsi> {
    if csi_mobile.band_plan != csi_anchor.band_plan {
        return Err(MbError::Invalid("band plans differ".into()));
    }
    if csi_mobile.n_snapshots() != csi_anchor.n_snapshots() {
        return Err(MbError::Invalid("snapshot counts differ".into()));
    }
    csi_mobile.validate()?;
    csi_anchor.validate()?;
    let l = csi_mobile.band_plan.n_bands();
    let mut snapshots = Vec::with_capacity(csi_mobile.n_snapshots());
    for (sm, sa) in csi_mobile.snapshots.iter().zip(&csi_anchor.snapshots) {
        let per_band = sm
            .per_band
            .iter()
            .zip(&sa.per_band)
            .map(|(hm, ha)| {
                ndarray::Zip::from(hm).and(ha).map_collect(|&m, &a| (m * a).sqrt())
            })
            .collect();
        snapshots.push(CsiSnapshot { per_band, snapshot_id: sm.snapshot_id });
    }
    Ok(PhaseAlignedCsi {
        csi: MultibandCsi {
            snapshots,
            band_plan: csi_mobile.band_plan.clone(),
            noise_variance: None,
        },
        sign_ambiguous: vec![true; l],
    })
}
