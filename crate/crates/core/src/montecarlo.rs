//! Monte Carlo SNR-loss statistics over random sparse channels.
//!
//! Every trial draws its paths from its own generator stream, keyed only by
//! `(seed, trial_index)`, so the collected samples do not depend on how trials
//! are scheduled.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::beamformer::{
    bidirectional_beamformer, dominant_path_beamformer, equal_power_beamformer, optimal_beamformer,
    ratio_db, BeamformerPair,
};
use crate::channel::{assemble_channel, complex_gaussian, PathComponent};
use crate::error::{Error, Result};
use crate::exec::{map_indexed, Execution};
use crate::linalg::PowerIterationOptions;
use crate::steering::{AngleSpec, ArrayGeometry};

/// Generator used for trial sampling; recorded alongside results.
pub const RNG_ALGORITHM: &str =
    "ChaCha8Rng (rand_chacha 0.9), seed_from_u64(seed), stream = trial index";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GainModel {
    /// Independent `CN(0, 1)` path gains.
    ComplexGaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Strongest-path steering vectors at both ends.
    Bidirectional,
    /// Strongest-path steering vector at the transmitter, matched filter at the receiver.
    DominantTxMfRx,
    /// Equal power on both paths with optimized relative phase (two paths only).
    EqualPower,
}

/// Serialized keys match the `ccdf` command-line flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct McConfig {
    #[serde(rename = "paths")]
    pub num_paths: usize,
    pub nt: usize,
    pub nr: usize,
    #[serde(rename = "spacing")]
    pub spacing_wavelengths: f64,
    pub trials: u64,
    pub seed: u64,
    /// Azimuths are drawn uniformly in degrees over `90 ± fov_deg / 2`.
    #[serde(rename = "fov")]
    pub fov_deg: f64,
    pub gain_model: GainModel,
    pub scheme: Scheme,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            num_paths: 2,
            nt: 64,
            nr: 4,
            spacing_wavelengths: 0.5,
            trials: 10_000,
            seed: 0,
            fov_deg: 120.0,
            gain_model: GainModel::ComplexGaussian,
            scheme: Scheme::Bidirectional,
        }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.num_paths == 0 {
            return bad("num_paths must be at least 1".into());
        }
        if self.nt == 0 || self.nr == 0 {
            return bad("antenna counts must be positive".into());
        }
        if !(self.spacing_wavelengths.is_finite() && self.spacing_wavelengths > 0.0) {
            return bad(format!("invalid spacing {}", self.spacing_wavelengths));
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if !(self.fov_deg > 0.0 && self.fov_deg <= 180.0) {
            return bad(format!(
                "fov_deg must lie in (0, 180], got {}",
                self.fov_deg
            ));
        }
        if self.scheme == Scheme::EqualPower && self.num_paths != 2 {
            return Err(Error::Unsupported(
                "equal_power scheme requires num_paths = 2".into(),
            ));
        }
        Ok(())
    }

    fn geometries(&self) -> Result<(ArrayGeometry, ArrayGeometry)> {
        Ok((
            ArrayGeometry::new(self.nt, self.spacing_wavelengths)?,
            ArrayGeometry::new(self.nr, self.spacing_wavelengths)?,
        ))
    }

    fn trial_rng(&self, trial_index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(trial_index);
        rng
    }
}

fn draw_paths<R: Rng>(cfg: &McConfig, rng: &mut R) -> Vec<PathComponent> {
    let lo = 90.0 - 0.5 * cfg.fov_deg;
    let hi = 90.0 + 0.5 * cfg.fov_deg;
    (0..cfg.num_paths)
        .map(|_| {
            let gain = match cfg.gain_model {
                GainModel::ComplexGaussian => complex_gaussian(rng),
            };
            let aod = AngleSpec::azimuth_deg(rng.random_range(lo..=hi));
            let aoa = AngleSpec::azimuth_deg(rng.random_range(lo..=hi));
            PathComponent::new(gain, aod, aoa)
        })
        .collect()
}

fn degenerate(paths: &[PathComponent]) -> bool {
    paths.iter().map(|p| p.gain.norm_sqr()).sum::<f64>() < 1e-24
}

/// Paths for one trial together with the number of degenerate draws that
/// were discarded before them.
pub fn sample_paths_counted(cfg: &McConfig, trial_index: u64) -> (Vec<PathComponent>, u64) {
    let mut rng = cfg.trial_rng(trial_index);
    let mut discarded = 0;
    loop {
        let paths = draw_paths(cfg, &mut rng);
        if !degenerate(&paths) {
            return (paths, discarded);
        }
        discarded += 1;
    }
}

pub fn sample_paths(cfg: &McConfig, trial_index: u64) -> Vec<PathComponent> {
    sample_paths_counted(cfg, trial_index).0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub optimal_snr: f64,
    pub scheme_snr: f64,
    pub delta_snr_db: f64,
    pub resampled: u64,
    pub converged: bool,
}

/// Optimal and scheme SNR for a single trial.
pub fn run_trial(cfg: &McConfig, trial_index: u64) -> Result<TrialOutcome> {
    let (tx, rx) = cfg.geometries()?;
    let (paths, resampled) = sample_paths_counted(cfg, trial_index);
    let h = assemble_channel(&paths, &tx, &rx)?;
    let (optimal, converged) = match optimal_beamformer(&h, PowerIterationOptions::default()) {
        Ok(pair) => (pair, true),
        Err(Error::Convergence { best, .. }) => (*best, false),
        Err(e) => return Err(e),
    };
    let scheme: BeamformerPair = match cfg.scheme {
        Scheme::Bidirectional => bidirectional_beamformer(&paths, &tx, &rx)?,
        Scheme::DominantTxMfRx => dominant_path_beamformer(&paths, &tx, &rx)?,
        Scheme::EqualPower => equal_power_beamformer(&paths, &tx, &rx)?.pair,
    };
    Ok(TrialOutcome {
        optimal_snr: optimal.normalized_snr,
        scheme_snr: scheme.normalized_snr,
        delta_snr_db: ratio_db(optimal.normalized_snr, scheme.normalized_snr),
        resampled,
        converged,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CcdfTable {
    /// ΔSNR samples in dB, ascending.
    pub samples_db: Vec<f64>,
    /// `ccdf[i]` = fraction of samples at or above `samples_db[i]`, i.e.
    /// `(n - i) / n`.
    pub ccdf: Vec<f64>,
    /// Degenerate (all-zero-gain) draws that were redrawn.
    pub resampled: u64,
    /// Trials whose optimal beam came from an unconverged power iteration.
    pub nonconverged: u64,
}

impl CcdfTable {
    pub fn from_samples(mut samples_db: Vec<f64>) -> Self {
        samples_db.sort_by(f64::total_cmp);
        let n = samples_db.len() as f64;
        let ccdf = (0..samples_db.len()).map(|i| (n - i as f64) / n).collect();
        Self {
            samples_db,
            ccdf,
            resampled: 0,
            nonconverged: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.samples_db.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples_db.is_empty()
    }

    pub fn median(&self) -> Result<f64> {
        percentile(self, 0.5)
    }

    /// `delta_snr_db,ccdf` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("delta_snr_db,ccdf\n");
        for (x, c) in self.samples_db.iter().zip(&self.ccdf) {
            out.push_str(&format!("{x},{c}\n"));
        }
        out
    }
}

pub fn run_ccdf(cfg: &McConfig, exec: Execution) -> Result<CcdfTable> {
    cfg.validate()?;
    let outcomes = map_indexed(exec, cfg.trials, |i| run_trial(cfg, i));
    let mut samples = Vec::with_capacity(outcomes.len());
    let (mut resampled, mut nonconverged) = (0, 0);
    for outcome in outcomes {
        let o = outcome?;
        samples.push(o.delta_snr_db);
        resampled += o.resampled;
        nonconverged += u64::from(!o.converged);
    }
    let mut table = CcdfTable::from_samples(samples);
    table.resampled = resampled;
    table.nonconverged = nonconverged;
    Ok(table)
}

/// Nearest-rank `p`-quantile: the smallest sample with at least a fraction
/// `p` of the samples at or below it.
pub fn percentile(table: &CcdfTable, p: f64) -> Result<f64> {
    if table.is_empty() {
        return Err(Error::EmptyTable);
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "percentile must lie in (0, 1), got {p}"
        )));
    }
    let n = table.len();
    let x = p * n as f64;
    // p * n lands a few ulps above an integer for e.g. p = 0.7, n = 10.
    let nearest = x.round();
    let rank = if (x - nearest).abs() <= 1e-9 * x.max(1.0) {
        nearest
    } else {
        x.ceil()
    };
    let rank = (rank as usize).clamp(1, n);
    Ok(table.samples_db[rank - 1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn small(num_paths: usize, trials: u64) -> McConfig {
        McConfig {
            num_paths,
            nt: 16,
            nr: 4,
            trials,
            seed: 7,
            ..McConfig::default()
        }
    }

    #[test]
    fn sampling_is_deterministic_and_in_range() {
        let cfg = small(5, 1);
        assert_eq!(sample_paths(&cfg, 3), sample_paths(&cfg, 3));
        assert_ne!(sample_paths(&cfg, 3), sample_paths(&cfg, 4));
        let other_seed = McConfig {
            seed: 8,
            ..cfg.clone()
        };
        assert_ne!(sample_paths(&cfg, 3), sample_paths(&other_seed, 3));
        for i in 0..200 {
            for p in sample_paths(&cfg, i) {
                for a in [p.aod, p.aoa] {
                    let deg = a.azimuth_rad().to_degrees();
                    assert!((30.0 - 1e-9..=150.0 + 1e-9).contains(&deg), "{deg}");
                }
            }
        }
    }

    #[test]
    fn gain_second_moment() {
        let cfg = small(1, 1);
        let n = 100_000;
        let mean: f64 = (0..n)
            .map(|i| sample_paths(&cfg, i)[0].gain.norm_sqr())
            .sum::<f64>()
            / n as f64;
        assert!((mean - 1.0).abs() < 0.02, "{mean}");
    }

    #[test]
    fn single_path_has_no_loss() {
        let table = run_ccdf(&small(1, 200), Execution::Sequential).unwrap();
        assert!(table.samples_db.iter().all(|x| x.abs() < 1e-6));
        assert_eq!(table.len(), 200);
        assert_eq!(table.ccdf[0], 1.0);
    }

    #[test]
    fn losses_nonnegative_and_execution_independent() {
        for scheme in [
            Scheme::Bidirectional,
            Scheme::DominantTxMfRx,
            Scheme::EqualPower,
        ] {
            let cfg = McConfig {
                scheme,
                ..small(2, 300)
            };
            let seq = run_ccdf(&cfg, Execution::Sequential).unwrap();
            let par = run_ccdf(&cfg, Execution::Parallel).unwrap();
            assert_eq!(seq, par);
            assert!(seq.samples_db.iter().all(|&x| x >= -1e-9));
            assert!(seq.ccdf.windows(2).all(|w| w[0] >= w[1]));
            assert!(seq.samples_db.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn matched_filter_receiver_beats_bidirectional() {
        let cfg = small(3, 100);
        for i in 0..cfg.trials {
            let bi = run_trial(&cfg, i).unwrap();
            let mf = run_trial(
                &McConfig {
                    scheme: Scheme::DominantTxMfRx,
                    ..cfg.clone()
                },
                i,
            )
            .unwrap();
            assert!(mf.scheme_snr >= bi.scheme_snr * (1.0 - 1e-12));
            assert_eq!(mf.optimal_snr, bi.optimal_snr);
        }
    }

    #[test]
    fn trials_are_independent_of_partitioning() {
        let cfg = small(3, 64);
        let whole = run_ccdf(&cfg, Execution::Sequential).unwrap();
        let mut pieces: Vec<f64> = (0..cfg.trials)
            .rev()
            .map(|i| run_trial(&cfg, i).unwrap().delta_snr_db)
            .collect();
        pieces.sort_by(f64::total_cmp);
        assert_eq!(whole.samples_db, pieces);
    }

    #[test]
    fn config_validation() {
        assert!(McConfig::default().validate().is_ok());
        for bad in [
            McConfig {
                trials: 0,
                ..McConfig::default()
            },
            McConfig {
                fov_deg: 0.0,
                ..McConfig::default()
            },
            McConfig {
                fov_deg: 181.0,
                ..McConfig::default()
            },
            McConfig {
                num_paths: 0,
                ..McConfig::default()
            },
            McConfig {
                nt: 0,
                ..McConfig::default()
            },
            McConfig {
                scheme: Scheme::EqualPower,
                num_paths: 3,
                ..McConfig::default()
            },
        ] {
            assert!(run_ccdf(&bad, Execution::Sequential).is_err());
        }
    }

    #[test]
    fn config_serde_round_trip() {
        let cfg = McConfig {
            scheme: Scheme::DominantTxMfRx,
            ..small(4, 12)
        };
        let json = serde_json::to_string(&cfg).unwrap();
        assert!(json.contains("\"dominant_tx_mf_rx\""));
        assert_eq!(serde_json::from_str::<McConfig>(&json).unwrap(), cfg);
        assert!(serde_json::from_str::<McConfig>(&json.replace("\"seed\"", "\"sed\"")).is_err());
    }

    #[test]
    fn percentile_nearest_rank() {
        let t = CcdfTable::from_samples(vec![4.0, 0.0, 3.0, 1.0, 2.0]);
        assert_eq!(percentile(&t, 0.5).unwrap(), 2.0);
        assert_eq!(t.ccdf, vec![1.0, 0.8, 0.6, 0.4, 0.2]);
        let zeros = CcdfTable::from_samples(vec![0.0; 9]);
        assert_eq!(percentile(&zeros, 0.37).unwrap(), 0.0);
        let ten = CcdfTable::from_samples((1..=10).map(f64::from).collect());
        assert_eq!(percentile(&ten, 0.7).unwrap(), 7.0);
        assert_eq!(percentile(&ten, 0.9).unwrap(), 9.0);
        assert_eq!(percentile(&ten, 0.91).unwrap(), 10.0);
        assert!(matches!(
            percentile(&CcdfTable::from_samples(vec![]), 0.5),
            Err(Error::EmptyTable)
        ));
        assert!(percentile(&ten, 1.0).is_err());
    }

    #[test]
    fn csv_layout() {
        let t = CcdfTable::from_samples(vec![0.5, 0.25]);
        assert_eq!(t.to_csv(), "delta_snr_db,ccdf\n0.25,1\n0.5,0.5\n");
    }

    proptest! {
        #[test]
        fn percentile_matches_sort_and_index(mut xs in proptest::collection::vec(-5.0f64..5.0, 1..300), p in 0.001f64..0.999) {
            let t = CcdfTable::from_samples(xs.clone());
            xs.sort_by(f64::total_cmp);
            // Reference: smallest x with #{samples <= x} >= p n.
            let n = xs.len() as f64;
            let reference = xs.iter().enumerate().find(|(i, _)| (*i as f64 + 1.0) >= p * n - 1e-9 * n).map(|(_, &x)| x).unwrap();
            prop_assert_eq!(percentile(&t, p).unwrap(), reference);
            prop_assert!(percentile(&t, 0.9).unwrap() >= percentile(&t, 0.5).unwrap());
        }
    }
}
