//! Rank-one beamformers and received SNR.
//!
//! The optimal transmit beam is the dominant right singular vector of `H`
//! with a matched-filter receiver. It is computed two ways: power iteration on
//! `H^H H` ([`optimal_beamformer`]) and the `L x L` eigenproblem
//! `(A V^H V) x = lambda x` with `V = [conj(alpha_1) v_1, ...]` and
//! `A(i, j) = u_i^H u_j` ([`reduced_optimal_beamformer`]); the transmit beam is
//! then `V x`. The remaining schemes are the low-complexity alternatives:
//! steering along the strongest path at one or both ends, or splitting power
//! equally across two paths. [`grid_search_beamformer`] brute-forces the
//! Rayleigh quotient over beams built from the path directions and serves as
//! the reference for everything else.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::channel::{
    assemble_channel, channel_power, path_steering, ChannelMatrix, PathComponent,
};
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::linalg::{
    canonicalize_phase, columns, dominant_right_singular, hermitian_eigen, hermitian_sqrt, CMatrix,
    CVector, PowerIterationOptions,
};
use crate::steering::ArrayGeometry;

/// Unit-norm transmit/receive pair and the normalized SNR it achieves,
/// `|rx^H H tx|^2 / (Nt Nr)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerPair {
    pub tx: CVector,
    pub rx: CVector,
    pub normalized_snr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrReport {
    pub pre_beamforming_snr: f64,
    pub received_snr: f64,
    pub normalized_snr: f64,
    /// `10 log10(optimal / this)`, once a reference is supplied.
    pub delta_snr_db: Option<f64>,
}

impl SnrReport {
    pub fn relative_to(mut self, optimal_normalized_snr: f64) -> Self {
        self.delta_snr_db = Some(ratio_db(optimal_normalized_snr, self.normalized_snr));
        self
    }
}

/// `10 log10(num / den)`; `+inf` when `den` is zero.
pub fn ratio_db(num: f64, den: f64) -> f64 {
    if den <= 0.0 {
        f64::INFINITY
    } else {
        10.0 * (num / den).log10()
    }
}

fn check_len(v: &CVector, expected: usize) -> Result<()> {
    if v.len() != expected {
        return Err(Error::Dimension {
            expected,
            got: v.len(),
        });
    }
    Ok(())
}

fn antenna_product(h: &ChannelMatrix) -> f64 {
    (h.nt() * h.nr()) as f64
}

/// `rho |g^H H f|^2 / (g^H g)` and its normalized form.
pub fn received_snr(h: &ChannelMatrix, f: &CVector, g: &CVector, rho: f64) -> Result<SnrReport> {
    check_len(f, h.nt())?;
    check_len(g, h.nr())?;
    if !(rho.is_finite() && rho > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "pre-beamforming SNR must be positive, got {rho}"
        )));
    }
    if f.norm() > 1.0 + 1e-12 {
        return Err(Error::InvalidArgument(
            "transmit beam exceeds unit energy".into(),
        ));
    }
    let gg = g.norm_squared();
    if gg == 0.0 {
        return Err(Error::InvalidArgument("receive combiner is zero".into()));
    }
    let gain = g.dotc(&(h.entries() * f)).norm_sqr() / gg;
    Ok(SnrReport {
        pre_beamforming_snr: rho,
        received_snr: rho * gain,
        normalized_snr: gain / antenna_product(h),
        delta_snr_db: None,
    })
}

/// `g = H f / ||H f||`.
pub fn matched_filter(h: &ChannelMatrix, f: &CVector) -> Result<CVector> {
    check_len(f, h.nt())?;
    let hf = h.entries() * f;
    let norm = hf.norm();
    let scale = h.entries().norm() * f.norm();
    if norm == 0.0 || norm <= 1e-14 * scale {
        return Err(Error::DegenerateChannel("H f vanishes".into()));
    }
    Ok(hf / Complex64::new(norm, 0.0))
}

fn normalized(v: CVector) -> CVector {
    let n = v.norm();
    v / Complex64::new(n, 0.0)
}

fn pair_snr(h: &ChannelMatrix, tx: &CVector, rx: &CVector) -> f64 {
    rx.dotc(&(h.entries() * tx)).norm_sqr() / antenna_product(h)
}

/// Normalizes `tx` and closes the link with a matched filter.
pub fn pair_with_matched_filter(h: &ChannelMatrix, tx: CVector) -> Result<BeamformerPair> {
    let tx = normalized(tx);
    let rx = matched_filter(h, &tx)?;
    let normalized_snr = pair_snr(h, &tx, &rx);
    Ok(BeamformerPair {
        tx,
        rx,
        normalized_snr,
    })
}

/// Dominant right singular vector with matched-filter receiver. The returned
/// `tx` has its first entry real and nonnegative.
pub fn optimal_beamformer(
    h: &ChannelMatrix,
    opts: PowerIterationOptions,
) -> Result<BeamformerPair> {
    if channel_power(h) == 0.0 {
        return Err(Error::DegenerateChannel("zero channel".into()));
    }
    let it = dominant_right_singular(h.entries(), opts);
    let mut tx = it.vector;
    canonicalize_phase(&mut tx);
    let pair = pair_with_matched_filter(h, tx)?;
    if !it.converged {
        return Err(Error::Convergence {
            iterations: it.iterations,
            best: Box::new(pair),
        });
    }
    Ok(pair)
}

#[derive(Debug, Clone)]
pub struct ReducedBeamformer {
    pub pair: BeamformerPair,
    /// Eigenvalues of the reduced problem scaled to `H^H H` units, descending.
    pub eigenvalues: Vec<f64>,
    /// Dominant eigenvector `x`; the transmit beam is proportional to `V x`.
    pub coefficients: CVector,
    /// The reduced problem was unusable and the power-iteration route was used.
    pub fell_back: bool,
}

/// Optimal beam from the `L x L` path-domain eigenproblem.
///
/// `A G` (with `G = V^H V`) is not Hermitian, so it is solved through the
/// similar Hermitian matrix `S G S`, `S = A^(1/2)`: if `S G S y = lambda y` then
/// `x = S y` satisfies `A G x = lambda x`.
pub fn reduced_optimal_beamformer(
    paths: &[PathComponent],
    tx_geom: &ArrayGeometry,
    rx_geom: &ArrayGeometry,
) -> Result<ReducedBeamformer> {
    let h = assemble_channel(paths, tx_geom, rx_geom)?;
    let l = paths.len();
    let (vs, us) = path_steering(paths, tx_geom, rx_geom);
    let weighted: Vec<CVector> = paths
        .iter()
        .zip(&vs)
        .map(|(p, v)| v.as_vector() * p.gain.conj())
        .collect();
    let v_mat = columns(h.nt(), &weighted);
    let a = CMatrix::from_fn(l, l, |i, j| us[i].as_vector().dotc(us[j].as_vector()));
    let gram = v_mat.adjoint() * &v_mat;

    let s = hermitian_sqrt(&a);
    let sym = &s * &gram * &s;
    let sym = (&sym + sym.adjoint()) * Complex64::new(0.5, 0.0);
    let (values, vectors) = hermitian_eigen(&sym);
    let lambda = values[0];
    let x = &s * vectors.column(0);
    let residual = (&a * (&gram * &x) - &x * Complex64::new(lambda, 0.0)).norm();

    let usable = lambda.is_finite()
        && lambda > 1e-14 * sym.trace().re.abs()
        && residual <= 1e-8 * lambda * x.norm();
    let mut tx = &v_mat * &x;
    if !usable || tx.norm() == 0.0 {
        let pair = optimal_beamformer(&h, PowerIterationOptions::default())?;
        return Ok(ReducedBeamformer {
            pair,
            eigenvalues: Vec::new(),
            coefficients: x,
            fell_back: true,
        });
    }
    canonicalize_phase(&mut tx);
    let pair = pair_with_matched_filter(&h, tx)?;
    let scale = antenna_product(&h) / l as f64;
    Ok(ReducedBeamformer {
        pair,
        eigenvalues: values.iter().map(|v| v * scale).collect(),
        coefficients: x,
        fell_back: false,
    })
}

/// Index of the path with the largest `|alpha|`; the lowest index wins ties.
pub fn dominant_index(paths: &[PathComponent]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, p) in paths.iter().enumerate() {
        let m = p.gain.norm();
        if best.is_none_or(|(_, bm)| m > bm) {
            best = Some((i, m));
        }
    }
    best.map(|(i, _)| i)
}

fn require_paths(paths: &[PathComponent]) -> Result<usize> {
    dominant_index(paths).ok_or_else(|| Error::InvalidArgument("at least one path required".into()))
}

/// Transmit along the strongest path's AoD, matched filter at the receiver.
/// If that beam is nulled by the channel the receiver falls back to the
/// strongest path's AoA steering vector (the SNR is zero either way).
pub fn dominant_path_beamformer(
    paths: &[PathComponent],
    tx_geom: &ArrayGeometry,
    rx_geom: &ArrayGeometry,
) -> Result<BeamformerPair> {
    let best = require_paths(paths)?;
    let h = assemble_channel(paths, tx_geom, rx_geom)?;
    let (vs, us) = path_steering(paths, tx_geom, rx_geom);
    let tx = vs[best].as_vector().clone();
    let rx = match matched_filter(&h, &tx) {
        Ok(g) => g,
        Err(Error::DegenerateChannel(_)) => us[best].as_vector().clone(),
        Err(e) => return Err(e),
    };
    let normalized_snr = pair_snr(&h, &tx, &rx);
    Ok(BeamformerPair {
        tx,
        rx,
        normalized_snr,
    })
}

/// Steering vectors of the strongest path at both ends.
pub fn bidirectional_beamformer(
    paths: &[PathComponent],
    tx_geom: &ArrayGeometry,
    rx_geom: &ArrayGeometry,
) -> Result<BeamformerPair> {
    let best = require_paths(paths)?;
    let h = assemble_channel(paths, tx_geom, rx_geom)?;
    let (vs, us) = path_steering(paths, tx_geom, rx_geom);
    let tx = vs[best].as_vector().clone();
    let rx = us[best].as_vector().clone();
    let normalized_snr = pair_snr(&h, &tx, &rx);
    Ok(BeamformerPair {
        tx,
        rx,
        normalized_snr,
    })
}

#[derive(Debug, Clone)]
pub struct EqualPowerBeamformer {
    pub pair: BeamformerPair,
    /// Relative phase of the second path's component, in [0, 2 pi).
    pub theta: f64,
}

const EQUAL_POWER_GRID: usize = 720;
const EQUAL_POWER_REFINEMENTS: usize = 3;

/// `tx ∝ v_1 + exp(j theta) v_2` with `theta` chosen to maximize the SNR under
/// a matched filter: a 720-point sweep followed by three halving passes around
/// the best point. Two-path channels only.
pub fn equal_power_beamformer(
    paths: &[PathComponent],
    tx_geom: &ArrayGeometry,
    rx_geom: &ArrayGeometry,
) -> Result<EqualPowerBeamformer> {
    if paths.len() != 2 {
        return Err(Error::Unsupported(format!(
            "equal-power beamforming needs exactly 2 paths, got {}",
            paths.len()
        )));
    }
    let h = assemble_channel(paths, tx_geom, rx_geom)?;
    let (vs, _) = path_steering(paths, tx_geom, rx_geom);
    let v1 = vs[0].as_vector();
    let v2 = vs[1].as_vector();
    let h1 = h.entries() * v1;
    let h2 = h.entries() * v2;
    let cross = v1.dotc(v2);

    // ||H f||^2 / ||f||^2 for f = v1 + e^{j theta} v2.
    let objective = |theta: f64| -> f64 {
        let rot = Complex64::from_polar(1.0, theta);
        let ff = 2.0 + 2.0 * (rot * cross).re;
        if ff < 1e-12 {
            return f64::NEG_INFINITY;
        }
        (&h1 + &h2 * rot).norm_squared() / ff
    };

    let step = TAU / EQUAL_POWER_GRID as f64;
    let (mut theta, mut best) = (0..EQUAL_POWER_GRID)
        .map(|k| (k as f64 * step, objective(k as f64 * step)))
        .fold((0.0, f64::NEG_INFINITY), |acc, cand| {
            if cand.1 > acc.1 {
                cand
            } else {
                acc
            }
        });
    let mut half = 0.5 * step;
    for _ in 0..EQUAL_POWER_REFINEMENTS {
        for cand in [theta - half, theta + half] {
            let value = objective(cand);
            if value > best {
                best = value;
                theta = cand;
            }
        }
        half *= 0.5;
    }
    if !best.is_finite() {
        return Err(Error::DegenerateChannel("no valid equal-power beam".into()));
    }
    let theta = theta.rem_euclid(TAU);
    let tx = v1 + v2 * Complex64::from_polar(1.0, theta);
    let pair = pair_with_matched_filter(&h, tx)?;
    Ok(EqualPowerBeamformer { pair, theta })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    /// Points per amplitude coordinate `beta_1 .. beta_{L-1}` on [0, 1].
    pub beta_steps: usize,
    /// Points per phase coordinate `theta_2 .. theta_L` on [0, 2 pi).
    pub theta_steps: usize,
    /// Refuse grids with more candidate points than this.
    pub max_points: u128,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            beta_steps: 201,
            theta_steps: 360,
            max_points: 100_000_000,
        }
    }
}

impl GridSpec {
    pub fn new(beta_steps: usize, theta_steps: usize) -> Self {
        Self {
            beta_steps,
            theta_steps,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone)]
pub struct GridOptimum {
    pub pair: BeamformerPair,
    /// Amplitudes `beta_1 .. beta_L` with `sum beta_i^2 = 1`.
    pub betas: Vec<f64>,
    /// Phases `theta_1 = 0, theta_2 .. theta_L`.
    pub thetas: Vec<f64>,
}

/// Exhaustive search over `f = beta_1 v_1 + sum_{i>=2} exp(j theta_i) beta_i v_i`
/// with `beta_L = sqrt(1 - sum_{j<L} beta_j^2)`, maximizing the Rayleigh quotient
/// `f^H H^H H f / f^H f`. Ties go to the lowest grid index (amplitude
/// coordinates outermost).
pub fn grid_search_beamformer(
    paths: &[PathComponent],
    tx_geom: &ArrayGeometry,
    rx_geom: &ArrayGeometry,
    grid: &GridSpec,
    exec: Execution,
) -> Result<GridOptimum> {
    let l = paths.len();
    if l == 0 {
        return Err(Error::InvalidArgument("at least one path required".into()));
    }
    if grid.beta_steps < 2 || grid.theta_steps < 2 {
        return Err(Error::InvalidArgument(
            "grid resolutions must be at least 2".into(),
        ));
    }
    let h = assemble_channel(paths, tx_geom, rx_geom)?;
    let (vs, _) = path_steering(paths, tx_geom, rx_geom);
    let v_mat = columns(h.nt(), vs.iter().map(|v| v.as_vector()));
    if l == 1 {
        let pair = pair_with_matched_filter(&h, v_mat.column(0).clone_owned())?;
        return Ok(GridOptimum {
            pair,
            betas: vec![1.0],
            thetas: vec![0.0],
        });
    }

    let dims = (l - 1) as u32;
    let beta_total = (grid.beta_steps as u128).pow(dims);
    let theta_total = (grid.theta_steps as u128).pow(dims);
    let points = beta_total * theta_total;
    if points > grid.max_points || points > u64::MAX as u128 {
        return Err(Error::Resource {
            points,
            cap: grid.max_points,
        });
    }
    let theta_total = theta_total as u64;

    // Quadratic forms in the path-coefficient domain.
    let hv = h.entries() * &v_mat;
    let q = hv.adjoint() * &hv;
    let gram = v_mat.adjoint() * &v_mat;
    let beta_step = 1.0 / (grid.beta_steps - 1) as f64;
    let theta_step = TAU / grid.theta_steps as f64;

    let decode = |index: u64| -> Option<(Vec<f64>, Vec<f64>)> {
        let mut b_idx = index / theta_total;
        let mut t_idx = index % theta_total;
        let mut betas = Vec::with_capacity(l);
        let mut thetas = vec![0.0; l];
        let mut used = 0.0;
        for _ in 0..l - 1 {
            let b = (b_idx % grid.beta_steps as u64) as f64 * beta_step;
            b_idx /= grid.beta_steps as u64;
            used += b * b;
            betas.push(b);
        }
        if used > 1.0 + 1e-12 {
            return None;
        }
        betas.push((1.0 - used).max(0.0).sqrt());
        for theta in thetas.iter_mut().skip(1) {
            *theta = (t_idx % grid.theta_steps as u64) as f64 * theta_step;
            t_idx /= grid.theta_steps as u64;
        }
        Some((betas, thetas))
    };
    let coefficients = |betas: &[f64], thetas: &[f64]| -> CVector {
        CVector::from_fn(l, |i, _| Complex64::from_polar(betas[i], thetas[i]))
    };

    let best = exec::argmax(exec, points as u64, |index| {
        let (betas, thetas) = decode(index)?;
        let c = coefficients(&betas, &thetas);
        let den = c.dotc(&(&gram * &c)).re;
        if den <= 1e-300 {
            return None;
        }
        Some(c.dotc(&(&q * &c)).re / den)
    });
    let (index, _) = best.ok_or_else(|| Error::DegenerateChannel("no valid grid point".into()))?;
    let (betas, thetas) = decode(index).expect("winning index decodes");
    let tx = &v_mat * coefficients(&betas, &thetas);
    let pair = pair_with_matched_filter(&h, tx)?;
    Ok(GridOptimum {
        pair,
        betas,
        thetas,
    })
}
