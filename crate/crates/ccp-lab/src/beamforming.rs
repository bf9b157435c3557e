//! Minimum-variance distortionless-response beamforming with a
//! chance-constrained steering-vector mismatch model.
//!
//! The robust design minimizes output power subject to
//! `P[Re((a + delta)^H w) >= 1] >= p` for a random mismatch `delta`,
//! reformulated as `k_p ||Gamma_delta^{1/2} w|| / 2 <= Re(a^H w) - 1` with
//! `Im(a^H w) = 0`. The factor pairs the printed 1/2 with a sqrt(2)-scaled
//! safety coefficient, so the product equals the usual quantile over the
//! sqrt(2) of the half-variance identity.

use ccp_core::ambiguity::inflate_moments;
use ccp_core::dist::{marginal_quantile, sample_complex, CesFamily, SeededStream};
use ccp_core::moments::{
    hermitian_embedding, psd_sqrt, CMatrix, CVector, MomentTriple,
};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use socp::{solve, ConeBlock, SocpProblem, Status};

use crate::csv::{fmt, CsvBuilder};
use crate::LabError;

/// Uniform linear array with narrowband interferers.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArrayModel {
    pub sensors: usize,
    /// Inter-element spacing in wavelengths.
    pub spacing: f64,
    pub signal_doa_deg: f64,
    pub interferer_doas_deg: Vec<f64>,
    pub interferer_inr_db: Vec<f64>,
    pub noise_power: f64,
}

impl ArrayModel {
    /// The standard experiment geometry: 8 sensors at half-wavelength
    /// spacing, signal from 3 degrees, interferers at 15 and 30 degrees.
    pub fn standard(inr_db: f64) -> Self {
        ArrayModel {
            sensors: 8,
            spacing: 0.5,
            signal_doa_deg: 3.0,
            interferer_doas_deg: vec![15.0, 30.0],
            interferer_inr_db: vec![inr_db, inr_db],
            noise_power: 1.0,
        }
    }
}

/// Steering vector of a uniform linear array:
/// `exp(i 2 pi spacing k sin(angle))`, `k = 0..M-1`.
pub fn ula_steering(model: &ArrayModel, angle_deg: f64) -> CVector {
    let phase = std::f64::consts::TAU * model.spacing * angle_deg.to_radians().sin();
    CVector::from_fn(model.sensors, |k, _| {
        Complex64::from_polar(1.0, phase * k as f64)
    })
}

/// Interference-plus-noise covariance
/// `R = sum INR_k sigma_n^2 a_k a_k^H + sigma_n^2 I`.
pub fn interference_noise_cov(model: &ArrayModel) -> CMatrix {
    let m = model.sensors;
    let mut r = CMatrix::identity(m, m) * Complex64::new(model.noise_power, 0.0);
    for (doa, inr_db) in model
        .interferer_doas_deg
        .iter()
        .zip(&model.interferer_inr_db)
    {
        let a = ula_steering(model, *doa);
        let power = model.noise_power * 10f64.powf(inr_db / 10.0);
        r += &a * a.adjoint() * Complex64::new(power, 0.0);
    }
    r
}

#[derive(Debug, Clone)]
pub struct BeamformerResult {
    pub w: CVector,
    /// Output interference-plus-noise power `w^H R w`.
    pub objective: f64,
    /// SINR at unit signal power toward the design steering vector, in dB.
    pub sinr_db: f64,
    /// `|Re(a^H w) - 1|` (distortionless residual) and `|Im(a^H w)|`.
    pub distortion: (f64, f64),
}

fn result_from_w(w: CVector, r: &CMatrix, a: &CVector) -> BeamformerResult {
    let wrw = (w.adjoint() * r * &w)[(0, 0)].re;
    let gain = (a.adjoint() * &w)[(0, 0)];
    BeamformerResult {
        objective: wrw,
        sinr_db: 10.0 * (gain.norm_sqr() / wrw).log10(),
        distortion: ((gain.re - 1.0).abs(), gain.im.abs()),
        w,
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BeamformingError {
    #[error("covariance solve failed (matrix singular?)")]
    Singular,
    #[error("robust design {status}: uncertainty too large for the target level?")]
    NotOptimal { status: &'static str },
    #[error(transparent)]
    Problem(#[from] socp::ProblemError),
}

/// `w = R^{-1} a / (a^H R^{-1} a)`.
pub fn mvdr_closed_form(r: &CMatrix, a: &CVector) -> Result<BeamformerResult, BeamformingError> {
    let lu = r.clone().lu();
    let ra = lu.solve(a).ok_or(BeamformingError::Singular)?;
    let denom = (a.adjoint() * &ra)[(0, 0)];
    if denom.norm() < 1e-300 {
        return Err(BeamformingError::Singular);
    }
    let w = ra / denom;
    Ok(result_from_w(w, r, a))
}

/// Mismatch uncertainty model for the robust design.
#[derive(Debug, Clone)]
pub enum MismatchModel {
    /// Proper Gaussian mismatch with known covariance.
    Gaussian,
    /// Only the first two moments known.
    MomentExact,
    /// Empirically estimated mismatch moments with concentration radii.
    DataDriven {
        est: MomentTriple,
        r1: f64,
        r2: f64,
    },
}

impl MismatchModel {
    /// sqrt(2)-scaled safety coefficient paired with the /2 in the cone.
    fn factor(&self, p: f64) -> Result<f64, LabError> {
        let base = match self {
            MismatchModel::Gaussian => marginal_quantile(CesFamily::Gaussian, p)?,
            MismatchModel::MomentExact | MismatchModel::DataDriven { .. } => {
                (p / (1.0 - p)).sqrt()
            }
        };
        Ok(base * 2f64.sqrt())
    }
}

/// Solves `min w^H R w` s.t. the mismatch cone, `Re(a^H w) >= 1` implied,
/// and `Im(a^H w) = 0`.
pub fn robust_mvdr(
    r: &CMatrix,
    a: &CVector,
    gamma_delta: &CMatrix,
    p: f64,
    model: &MismatchModel,
    tol: f64,
) -> Result<BeamformerResult, LabError> {
    let m = a.len();
    let (aux, extra) = match model {
        MismatchModel::DataDriven { r1, .. } if *r1 > 0.0 => (2, true),
        _ => (0, false),
    };
    let nvars = 2 * m + 1 + aux;
    let t_idx = 2 * m;

    let mut socp = SocpProblem::new(DVector::zeros(nvars));
    socp.objective[t_idx] = 1.0;

    // objective epigraph ||R^{1/2} w|| <= t (minimizing t minimizes w^H R w)
    let f_r = psd_sqrt(&hermitian_embedding(r));
    let mut a_obj = DMatrix::zeros(2 * m, nvars);
    a_obj.view_mut((0, 0), (2 * m, 2 * m)).copy_from(&f_r);
    let mut c_obj = DVector::zeros(nvars);
    c_obj[t_idx] = 1.0;
    socp.cone_blocks.push(ConeBlock {
        a: a_obj,
        b: DVector::zeros(2 * m),
        c: c_obj,
        d: 0.0,
    });

    // distortionless gain coefficients: Re(a^H w) and Im(a^H w)
    let mut gain_re = DVector::zeros(nvars);
    let mut gain_im = DVector::zeros(nvars);
    for k in 0..m {
        gain_re[k] = a[k].re;
        gain_re[m + k] = a[k].im;
        gain_im[k] = -a[k].im;
        gain_im[m + k] = a[k].re;
    }

    let k_p = model.factor(p)?;
    match model {
        MismatchModel::Gaussian | MismatchModel::MomentExact => {
            let f_d = psd_sqrt(&hermitian_embedding(gamma_delta));
            let mut a_cone = DMatrix::zeros(2 * m, nvars);
            a_cone
                .view_mut((0, 0), (2 * m, 2 * m))
                .copy_from(&(k_p / 2.0 * f_d));
            socp.cone_blocks.push(ConeBlock {
                a: a_cone,
                b: DVector::zeros(2 * m),
                c: gain_re.clone(),
                d: -1.0,
            });
        }
        MismatchModel::DataDriven { est, r1, r2 } => {
            // k sqrt((w^H (G+r2 I) w + Re(w^T (J+r2 I) w))/2) + Re(mu w)
            //   + r1 ||w|| <= Re(a^H w) - 1
            let inflated = inflate_moments(est, *r2);
            let f_q = psd_sqrt(&inflated.constraint_matrix());
            let cantelli = (p / (1.0 - p)).sqrt();
            let mut mean_row = DVector::zeros(nvars);
            for k in 0..m {
                mean_row[k] = est.mean[k].re;
                mean_row[m + k] = -est.mean[k].im;
            }
            if extra {
                let (u_idx, v_idx) = (2 * m + 1, 2 * m + 2);
                let mut a_norm = DMatrix::zeros(2 * m, nvars);
                for j in 0..2 * m {
                    a_norm[(j, j)] = *r1;
                }
                let mut c_u = DVector::zeros(nvars);
                c_u[u_idx] = 1.0;
                socp.cone_blocks.push(ConeBlock {
                    a: a_norm,
                    b: DVector::zeros(2 * m),
                    c: c_u,
                    d: 0.0,
                });
                let mut a_var = DMatrix::zeros(2 * m, nvars);
                a_var
                    .view_mut((0, 0), (2 * m, 2 * m))
                    .copy_from(&(cantelli * &f_q));
                let mut c_v = DVector::zeros(nvars);
                c_v[v_idx] = 1.0;
                socp.cone_blocks.push(ConeBlock {
                    a: a_var,
                    b: DVector::zeros(2 * m),
                    c: c_v,
                    d: 0.0,
                });
                let mut lin = &gain_re - &mean_row;
                lin[u_idx] = -1.0;
                lin[v_idx] = -1.0;
                socp.cone_blocks.push(ConeBlock::linear(lin, -1.0));
            } else {
                let mut a_cone = DMatrix::zeros(2 * m, nvars);
                a_cone
                    .view_mut((0, 0), (2 * m, 2 * m))
                    .copy_from(&(cantelli * &f_q));
                socp.cone_blocks.push(ConeBlock {
                    a: a_cone,
                    b: DVector::zeros(2 * m),
                    c: &gain_re - &mean_row,
                    d: -1.0,
                });
            }
        }
    }

    // Im(a^H w) = 0
    let mut e = DMatrix::zeros(1, nvars);
    e.row_mut(0).copy_from(&gain_im.transpose());
    socp.equalities = Some((e, DVector::zeros(1)));

    let sol = solve(&socp, tol)?;
    if sol.status != Status::Optimal {
        return Err(LabError::Beamforming(BeamformingError::NotOptimal {
            status: match sol.status {
                Status::Infeasible => "infeasible",
                Status::Unbounded => "unbounded",
                _ => "not converged",
            },
        }));
    }
    let w = CVector::from_fn(m, |k, _| Complex64::new(sol.x[k], sol.x[m + k]));
    Ok(result_from_w(w, r, a))
}

// ------------------------------------------------------------- snr sweep --

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepConfig {
    pub model: ArrayModel,
    pub p: f64,
    pub snr_grid_db: Vec<f64>,
    pub trials: usize,
    /// Mismatch variance: covariance is `mismatch_var / M * I`.
    pub mismatch_var: f64,
    pub estimation_samples: Vec<usize>,
    pub estimation_delta: f64,
    /// When set, also emit rows where R is estimated from this many
    /// snapshots per trial instead of the analytic covariance.
    pub snapshots: Option<usize>,
    pub seed: u64,
    pub tol: f64,
}

impl SweepConfig {
    pub fn desk(inr_db: f64) -> Self {
        SweepConfig {
            model: ArrayModel::standard(inr_db),
            p: 0.7,
            snr_grid_db: vec![-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0],
            trials: 100,
            mismatch_var: 1.0,
            estimation_samples: vec![100_000],
            estimation_delta: 0.05,
            snapshots: None,
            seed: 4242,
            tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub snr_db: f64,
    pub r_mode: &'static str,
    pub design: String,
    pub estimation_samples: usize,
    pub mean_sinr_db: f64,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    pub csv: String,
}

/// Mismatch draws, beamformer solves per design, SINR averaged over trials
/// against the true (mismatched) steering vector.
pub fn snr_sweep(cfg: &SweepConfig) -> Result<SweepOutcome, LabError> {
    let m = cfg.model.sensors;
    let a = ula_steering(&cfg.model, cfg.signal_doa());
    let r = interference_noise_cov(&cfg.model);
    let gamma = CMatrix::identity(m, m) * Complex64::new(cfg.mismatch_var / m as f64, 0.0);
    let delta_moments = MomentTriple::proper(CVector::zeros(m), gamma.clone()).unwrap();

    // designs solved against the analytic covariance (they do not depend
    // on the signal power)
    let mut designs: Vec<(String, usize, MismatchModel)> = vec![
        ("true_gaussian".into(), 0, MismatchModel::Gaussian),
        ("known_moments".into(), 0, MismatchModel::MomentExact),
    ];
    for &count in &cfg.estimation_samples {
        let draws = sample_complex(
            CesFamily::Gaussian,
            &delta_moments,
            count,
            SeededStream::new(cfg.seed, 900),
        )?;
        let set = ccp_core::estimation::SampleSet::new(draws)?;
        let est = ccp_core::estimation::empirical_moments(&set);
        let radius = ccp_core::estimation::support_radius(&set);
        let radii =
            ccp_core::estimation::concentration_radii(radius, count, cfg.estimation_delta)?;
        designs.push((
            "estimated_moments".into(),
            count,
            MismatchModel::DataDriven {
                est,
                r1: radii.r1,
                r2: radii.r2,
            },
        ));
    }

    // per-trial mismatch draws shared across designs and SNR points
    let mismatches = sample_complex(
        CesFamily::Gaussian,
        &delta_moments,
        cfg.trials,
        SeededStream::new(cfg.seed, 901),
    )?;

    let mut rows = Vec::new();
    for (label, est_count, model) in &designs {
        let bf = robust_mvdr(&r, &a, &gamma, cfg.p, model, cfg.tol)?;
        let mean_gain: f64 = mismatches
            .iter()
            .map(|d| {
                let true_a = &a + d;
                (true_a.adjoint() * &bf.w)[(0, 0)].norm_sqr()
            })
            .sum::<f64>()
            / cfg.trials as f64;
        for &snr in &cfg.snr_grid_db {
            let signal_power = cfg.model.noise_power * 10f64.powf(snr / 10.0);
            rows.push(SweepRow {
                snr_db: snr,
                r_mode: "analytic",
                design: label.clone(),
                estimation_samples: *est_count,
                mean_sinr_db: 10.0 * (signal_power * mean_gain / bf.objective).log10(),
            });
        }
    }

    if let Some(snapshots) = cfg.snapshots {
        let mut snap_stream = SeededStream::new(cfg.seed, 902).rng();
        for (label, est_count, model) in &designs {
            let mut sums = vec![0.0f64; cfg.snr_grid_db.len()];
            for d in mismatches.iter() {
                let r_hat = snapshot_cov(&cfg.model, snapshots, &mut snap_stream);
                let bf = robust_mvdr(&r_hat, &a, &gamma, cfg.p, model, cfg.tol)?;
                let true_a = &a + d;
                let gain = (true_a.adjoint() * &bf.w)[(0, 0)].norm_sqr();
                let power = (bf.w.adjoint() * &r * &bf.w)[(0, 0)].re;
                for (k, &snr) in cfg.snr_grid_db.iter().enumerate() {
                    let signal_power = cfg.model.noise_power * 10f64.powf(snr / 10.0);
                    sums[k] += signal_power * gain / power;
                }
            }
            for (k, &snr) in cfg.snr_grid_db.iter().enumerate() {
                rows.push(SweepRow {
                    snr_db: snr,
                    r_mode: "snapshot",
                    design: label.clone(),
                    estimation_samples: *est_count,
                    mean_sinr_db: 10.0 * (sums[k] / cfg.trials as f64).log10(),
                });
            }
        }
    }

    let mut csv = CsvBuilder::new(
        cfg,
        &[("seed", cfg.seed)],
        &["snr_db", "r_mode", "design", "estimation_samples", "mean_sinr_db"],
    );
    for row in &rows {
        csv.row(&[
            fmt(row.snr_db),
            row.r_mode.to_string(),
            row.design.clone(),
            row.estimation_samples.to_string(),
            fmt(row.mean_sinr_db),
        ]);
    }
    Ok(SweepOutcome {
        rows,
        csv: csv.finish(),
    })
}

impl SweepConfig {
    fn signal_doa(&self) -> f64 {
        self.model.signal_doa_deg
    }
}

/// Sample covariance of interference-plus-noise snapshots.
fn snapshot_cov(
    model: &ArrayModel,
    snapshots: usize,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> CMatrix {
    use rand::Rng as _;
    use rand_distr::StandardNormal;
    let m = model.sensors;
    let steers: Vec<CVector> = model
        .interferer_doas_deg
        .iter()
        .map(|&doa| ula_steering(model, doa))
        .collect();
    let powers: Vec<f64> = model
        .interferer_inr_db
        .iter()
        .map(|&db| model.noise_power * 10f64.powf(db / 10.0))
        .collect();
    let mut r = CMatrix::zeros(m, m);
    for _ in 0..snapshots {
        let mut x = CVector::from_fn(m, |_, _| {
            Complex64::new(
                rng.sample::<f64, _>(StandardNormal),
                rng.sample::<f64, _>(StandardNormal),
            ) * Complex64::new((model.noise_power / 2.0).sqrt(), 0.0)
        });
        for (s, &pw) in steers.iter().zip(&powers) {
            let amp = Complex64::new(
                rng.sample::<f64, _>(StandardNormal),
                rng.sample::<f64, _>(StandardNormal),
            ) * Complex64::new((pw / 2.0).sqrt(), 0.0);
            x += s * amp;
        }
        r += &x * x.adjoint();
    }
    r / Complex64::new(snapshots as f64, 0.0)
}
