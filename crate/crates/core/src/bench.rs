//! Monte Carlo benchmark harness, error quantiles, 2-D positioning, and
//! result emission.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::crb::{self, CrbInputs};
use crate::error::{MbError, Result};
use crate::estimator::{mbwde, Variant};
use crate::io::Config;
use crate::model::{generate_csi, BandPlan, MultipathChannel};
use crate::stacking::{self, StackConfig};

/// Model-order policy for a benchmark run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KOrderPolicy {
    Fixed(usize),
    Mdl,
}

/// One benchmark scenario: channel, sampling geometry, estimator settings,
/// and the Monte Carlo sweep.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub channel: MultipathChannel,
    pub band_plan: BandPlan,
    pub m_snapshots: usize,
    /// Hankel rows per band; `None` picks the default P = ceil(2N/3) with
    /// rank backoff.
    pub p_rows: Option<usize>,
    pub variant: Variant,
    pub weighted: bool,
    pub snr_db: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub k_order: KOrderPolicy,
    pub max_iters: usize,
    pub tol: f64,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(MbError::Invalid("trials must be at least 1".into()));
        }
        if self.snr_db.is_empty() {
            return Err(MbError::Invalid("SNR sweep must be nonempty".into()));
        }
        if self.m_snapshots == 0 {
            return Err(MbError::Invalid("need at least one snapshot".into()));
        }
        if let KOrderPolicy::Fixed(0) = self.k_order {
            return Err(MbError::Invalid("fixed model order must be at least 1".into()));
        }
        Ok(())
    }

    pub fn resolved_p_rows(&self) -> usize {
        let k = match self.k_order {
            KOrderPolicy::Fixed(k) => k,
            KOrderPolicy::Mdl => self.channel.n_paths(),
        };
        self.p_rows.unwrap_or_else(|| {
            stacking::default_p_rows(
                self.band_plan.n_subcarriers,
                self.m_snapshots,
                k,
                self.variant.use_fb(),
            )
        })
    }

    /// Build a scenario from a sectioned config file. Sections:
    /// `[channel] delays_ns powers_db`, `[band] spacing_hz n_subcarriers
    /// offsets base_frequency_hz`, `[estimator] p_rows variant weighted
    /// k_order max_iters tol`, `[run] snr_db trials seed m_snapshots`.
    pub fn from_config(cfg: &Config) -> Result<Self> {
        let delays_ns = cfg.require_f64_list("channel", "delays_ns")?;
        let powers_db = cfg.require_f64_list("channel", "powers_db")?;
        let channel = MultipathChannel::from_ns_db(&delays_ns, &powers_db)?;

        let spacing = cfg.get_f64("band", "spacing_hz")?.unwrap_or(78.125e3);
        let n_sub = cfg
            .get_usize("band", "n_subcarriers")?
            .ok_or_else(|| MbError::Config("missing `n_subcarriers` in section [band]".into()))?;
        let offsets = cfg
            .get_i64_list("band", "offsets")?
            .ok_or_else(|| MbError::Config("missing `offsets` in section [band]".into()))?;
        let base = cfg.get_f64("band", "base_frequency_hz")?.unwrap_or(6.0e9);
        let band_plan = BandPlan::new(spacing, n_sub, offsets, base)?;

        let variant = cfg
            .get("estimator", "variant")
            .unwrap_or("fb-nr")
            .parse::<Variant>()?;
        let weighted = cfg.get_bool("estimator", "weighted")?.unwrap_or(true);
        let k_order = match cfg.get("estimator", "k_order") {
            None => KOrderPolicy::Fixed(channel.n_paths()),
            Some("mdl") => KOrderPolicy::Mdl,
            Some(v) => KOrderPolicy::Fixed(v.parse().map_err(|_| {
                MbError::Config(format!("[estimator] k_order: `{v}` is neither `mdl` nor an integer"))
            })?),
        };
        let scenario = Scenario {
            channel,
            band_plan,
            m_snapshots: cfg.get_usize("run", "m_snapshots")?.unwrap_or(12),
            p_rows: cfg.get_usize("estimator", "p_rows")?,
            variant,
            weighted,
            snr_db: cfg.require_f64_list("run", "snr_db")?,
            trials: cfg.get_usize("run", "trials")?.unwrap_or(200),
            seed: cfg.get_u64("run", "seed")?.unwrap_or(1),
            k_order,
            max_iters: cfg.get_usize("estimator", "max_iters")?.unwrap_or(20),
            tol: cfg.get_f64("estimator", "tol")?.unwrap_or(1e-6),
        };
        scenario.validate()?;
        Ok(scenario)
    }
}

/// Per-SNR benchmark row.
#[derive(Debug, Clone)]
pub struct SnrRow {
    pub snr_db: f64,
    pub rmse_ns: f64,
    pub crb_ns: f64,
    pub trials: usize,
    pub diverged: usize,
    /// Signed LOS delay errors (ns) of the non-diverged trials, trial order.
    pub errors_ns: Vec<f64>,
}

/// Full benchmark output.
#[derive(Debug, Clone)]
pub struct BenchResult {
    pub rows: Vec<SnrRow>,
    pub elapsed_seconds: f64,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D049BB133111EB);
    x ^ (x >> 31)
}

/// Deterministic per-trial seed independent of scheduling.
fn trial_seed(seed: u64, snr_idx: usize, trial: usize) -> u64 {
    splitmix64(seed ^ splitmix64(((snr_idx as u64) << 32) | trial as u64))
}

/// One Monte Carlo trial: simulate, estimate, return the signed LOS delay
/// error in nanoseconds. `None` marks a diverged (failed or non-finite) run.
fn run_trial(scenario: &Scenario, cfg: &StackConfig, snr_idx: usize, trial: usize) -> Option<f64> {
    let seed = trial_seed(scenario.seed, snr_idx, trial);
    let csi = generate_csi(
        &scenario.channel,
        &scenario.band_plan,
        scenario.m_snapshots,
        scenario.snr_db[snr_idx],
        true,
        seed,
    )
    .ok()?;
    let k = match scenario.k_order {
        KOrderPolicy::Fixed(k) => Some(k),
        KOrderPolicy::Mdl => None,
    };
    let est = mbwde(
        &csi,
        cfg,
        k,
        scenario.variant,
        scenario.weighted,
        scenario.max_iters,
        scenario.tol,
    )
    .ok()?;
    // LOS candidate = smallest estimated delay
    let los = est.delays.iter().cloned().fold(f64::INFINITY, f64::min);
    if !los.is_finite() {
        return None;
    }
    Some((los - scenario.channel.delays[0]) * 1e9)
}

/// Run the Monte Carlo sweep with `n_threads` workers. Identical scenario +
/// seed produce identical results at any thread count: trial seeds depend
/// only on (seed, snr index, trial index) and the reduction walks trials in
/// index order.
pub fn run_monte_carlo(scenario: &Scenario, n_threads: usize) -> Result<BenchResult> {
    scenario.validate()?;
    let started = std::time::Instant::now();
    let p = scenario.resolved_p_rows();
    let cfg = StackConfig {
        p_rows: p,
        use_fb: scenario.variant.use_fb(),
        use_nr: scenario.variant.use_nr(),
    };
    cfg.check_rank(
        &scenario.band_plan,
        scenario.m_snapshots,
        match scenario.k_order {
            KOrderPolicy::Fixed(k) => k,
            KOrderPolicy::Mdl => scenario.channel.n_paths(),
        },
    )?;
    let workers = n_threads.max(1);
    let mut rows = Vec::with_capacity(scenario.snr_db.len());
    for (snr_idx, &snr) in scenario.snr_db.iter().enumerate() {
        let outcomes: Vec<Option<f64>> = if workers == 1 {
            (0..scenario.trials)
                .map(|t| run_trial(scenario, &cfg, snr_idx, t))
                .collect()
        } else {
            let slots: Mutex<Vec<Option<f64>>> = Mutex::new(vec![None; scenario.trials]);
            let next = AtomicUsize::new(0);
            std::thread::scope(|scope| {
                for _ in 0..workers {
                    scope.spawn(|| loop {
                        let t = next.fetch_add(1, Ordering::Relaxed);
                        if t >= scenario.trials {
                            break;
                        }
                        let out = run_trial(scenario, &cfg, snr_idx, t);
                        slots.lock().unwrap()[t] = out;
                    });
                }
            });
            slots.into_inner().unwrap()
        };
        // trial-index-ordered reduction
        let mut errors = Vec::new();
        let mut diverged = 0usize;
        for out in outcomes {
            match out {
                Some(e) => errors.push(e),
                None => diverged += 1,
            }
        }
        let rmse = if errors.is_empty() {
            f64::NAN
        } else {
            (errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64).sqrt()
        };
        let crb_ns = los_crb_ns(scenario, snr)?;
        rows.push(SnrRow {
            snr_db: snr,
            rmse_ns: rmse,
            crb_ns,
            trials: scenario.trials,
            diverged,
            errors_ns: errors,
        });
    }
    Ok(BenchResult { rows, elapsed_seconds: started.elapsed().as_secs_f64() })
}

/// CRB of the LOS delay (ns RMS) for the scenario at one SNR.
pub fn los_crb_ns(scenario: &Scenario, snr_db: f64) -> Result<f64> {
    if snr_db.is_infinite() {
        return Ok(0.0);
    }
    let inputs = CrbInputs::from_channel_snr(
        &scenario.channel,
        &scenario.band_plan,
        scenario.m_snapshots,
        snr_db,
    )?;
    let c = crb::crb(&inputs)?;
    Ok(c.variances[0].max(0.0).sqrt() * 1e9)
}

/// Robust error quantiles (all in the input's units).
#[derive(Debug, Clone, Copy)]
pub struct Quantiles {
    pub median: f64,
    /// P90 - P10.
    pub q80: f64,
    /// P97.5 - P2.5.
    pub q95: f64,
}

fn percentile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p / 100.0;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    let frac = h - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

pub fn error_quantiles(errors: &[f64]) -> Result<Quantiles> {
    if errors.is_empty() {
        return Err(MbError::Invalid("quantiles of an empty sample".into()));
    }
    let mut sorted = errors.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(Quantiles {
        median: percentile(&sorted, 50.0),
        q80: percentile(&sorted, 90.0) - percentile(&sorted, 10.0),
        q95: percentile(&sorted, 97.5) - percentile(&sorted, 2.5),
    })
}

/// Anchor geometry plus ground truth for positioning runs.
#[derive(Debug, Clone)]
pub struct AnchorSet {
    pub anchors: Vec<[f64; 2]>,
    pub true_positions: Vec<[f64; 2]>,
}

impl AnchorSet {
    pub fn new(anchors: Vec<[f64; 2]>, true_positions: Vec<[f64; 2]>) -> Result<Self> {
        if anchors.len() < 3 {
            return Err(MbError::Invalid("2-D fix needs at least 3 anchors".into()));
        }
        Ok(Self { anchors, true_positions })
    }
}

/// 2-D position from anchor ranges: linearized LS (subtracting the first
/// anchor's circle equation), then one Gauss-Newton step on the range
/// residuals.
pub fn trilaterate(anchors: &[[f64; 2]], ranges: &[f64]) -> Result<[f64; 2]> {
    let n = anchors.len();
    if n < 3 {
        return Err(MbError::Invalid("2-D fix needs at least 3 anchors".into()));
    }
    if ranges.len() != n {
        return Err(MbError::Invalid("need one range per anchor".into()));
    }
    if ranges.iter().any(|&d| d < 0.0 || !d.is_finite()) {
        return Err(MbError::Invalid("ranges must be finite and nonnegative".into()));
    }
    // rows: 2 (a_i - a_0)^T p = d_0^2 - d_i^2 + |a_i|^2 - |a_0|^2
    let a0 = anchors[0];
    let n0 = a0[0] * a0[0] + a0[1] * a0[1];
    let mut ata = [[0.0f64; 2]; 2];
    let mut atb = [0.0f64; 2];
    for i in 1..n {
        let ai = anchors[i];
        let row = [2.0 * (ai[0] - a0[0]), 2.0 * (ai[1] - a0[1])];
        let rhs = ranges[0] * ranges[0] - ranges[i] * ranges[i] + ai[0] * ai[0] + ai[1] * ai[1] - n0;
        for r in 0..2 {
            for c in 0..2 {
                ata[r][c] += row[r] * row[c];
            }
            atb[r] += row[r] * rhs;
        }
    }
    let det = ata[0][0] * ata[1][1] - ata[0][1] * ata[1][0];
    let scale = (ata[0][0] + ata[1][1]).max(f64::MIN_POSITIVE);
    if det.abs() <= 1e-12 * scale * scale {
        return Err(MbError::Numerical("collinear anchors: 2-D fix is degenerate".into()));
    }
    let mut p = [
        (atb[0] * ata[1][1] - atb[1] * ata[0][1]) / det,
        (atb[1] * ata[0][0] - atb[0] * ata[1][0]) / det,
    ];
    // one Gauss-Newton step on sum (|p - a_i| - d_i)^2
    let mut jtj = [[0.0f64; 2]; 2];
    let mut jtr = [0.0f64; 2];
    for i in 0..n {
        let dx = p[0] - anchors[i][0];
        let dy = p[1] - anchors[i][1];
        let dist = (dx * dx + dy * dy).sqrt();
        if dist <= 1e-12 {
            continue; // at the anchor: residual gradient undefined, skip row
        }
        let j = [dx / dist, dy / dist];
        let r = dist - ranges[i];
        for a in 0..2 {
            for b in 0..2 {
                jtj[a][b] += j[a] * j[b];
            }
            jtr[a] += j[a] * r;
        }
    }
    let det2 = jtj[0][0] * jtj[1][1] - jtj[0][1] * jtj[1][0];
    if det2.abs() > 1e-12 {
        p[0] -= (jtr[0] * jtj[1][1] - jtr[1] * jtj[0][1]) / det2;
        p[1] -= (jtr[1] * jtj[0][0] - jtr[0] * jtj[1][0]) / det2;
    }
    Ok(p)
}

/// Write `rmse.csv`, `errors.csv`, and a plot-script stub into `dir`.
pub fn emit_results(result: &BenchResult, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut rmse = String::from("snr_db,rmse_ns,crb_ns,trials,diverged\n");
    for row in &result.rows {
        let _ = writeln!(
            rmse,
            "{:e},{:e},{:e},{},{}",
            row.snr_db, row.rmse_ns, row.crb_ns, row.trials, row.diverged
        );
    }
    std::fs::write(dir.join("rmse.csv"), rmse)?;

    let mut errors = String::from("snr_db,trial,error_ns\n");
    for row in &result.rows {
        for (t, e) in row.errors_ns.iter().enumerate() {
            let _ = writeln!(errors, "{:e},{},{:e}", row.snr_db, t, e);
        }
    }
    std::fs::write(dir.join("errors.csv"), errors)?;

    let plot = "\
#!/usr/bin/env python3
\"\"\"Plot RMSE vs SNR against the CRB from rmse.csv / errors.csv.\"\"\"
import csv
import matplotlib.pyplot as plt

snr, rmse, crb = [], [], []
with open('rmse.csv') as f:
    for row in csv.DictReader(f):
        snr.append(float(row['snr_db']))
        rmse.append(float(row['rmse_ns']))
        crb.append(float(row['crb_ns']))

plt.semilogy(snr, rmse, 'o-', label='RMSE')
plt.semilogy(snr, crb, 'k--', label='CRB')
plt.xlabel('SNR (dB)')
plt.ylabel('LOS delay error (ns)')
plt.legend()
plt.grid(True, which='both', alpha=0.3)
plt.savefig('rmse.png', dpi=150, bbox_inches='tight')
";
    std::fs::write(dir.join("plot_rmse.py"), plot)?;
    Ok(())
}
