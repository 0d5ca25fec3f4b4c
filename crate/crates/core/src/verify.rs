//! Oracle batteries that check the closed forms and the reduced eigenproblem
//! against brute force on random draws.

use std::f64::consts::{PI, SQRT_2, TAU};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::beamformer::{optimal_beamformer, reduced_optimal_beamformer};
use crate::channel::{assemble_channel, complex_gaussian, path_steering, PathComponent};
use crate::closedform::{
    beta_opt_u_orth, beta_opt_u_parallel, beta_opt_v_orth, delta_snr_u_orth, delta_snr_v_orth,
    two_path_objective, AllocationPoint, TwoPathParams,
};
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::linalg::{columns, span_residual, PowerIterationOptions};
use crate::steering::{AngleSpec, ArrayGeometry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Prop1,
    Prop2,
    Prop3,
    Prop4,
    Bounds,
}

impl Suite {
    pub const ALL: [Suite; 5] = [
        Suite::Prop1,
        Suite::Prop2,
        Suite::Prop3,
        Suite::Prop4,
        Suite::Bounds,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Prop1 => "prop1",
            Suite::Prop2 => "prop2",
            Suite::Prop3 => "prop3",
            Suite::Prop4 => "prop4",
            Suite::Bounds => "bounds",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown suite {s:?}")))
    }
}

/// Worst observed value of one checked quantity against its tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub name: String,
    pub worst: f64,
    pub tolerance: f64,
    pub failures: u64,
}

impl Metric {
    fn new(name: &str, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            worst: 0.0,
            tolerance,
            failures: 0,
        }
    }

    /// Records a discrepancy (smaller is better); returns whether it passed.
    fn record(&mut self, value: f64) -> bool {
        let ok = value <= self.tolerance;
        if !ok || value.is_nan() {
            self.failures += 1;
        }
        if value > self.worst || value.is_nan() {
            self.worst = value;
        }
        ok && !value.is_nan()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub suite: Suite,
    pub cases: u64,
    pub passed: u64,
    pub failed: u64,
    pub metrics: Vec<Metric>,
}

impl VerifyReport {
    pub fn ok(&self) -> bool {
        self.failed == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TwoPathGrid {
    pub beta_steps: usize,
    pub phi_steps: usize,
}

impl Default for TwoPathGrid {
    fn default() -> Self {
        Self {
            beta_steps: 201,
            phi_steps: 360,
        }
    }
}

impl TwoPathGrid {
    pub fn beta_step(&self) -> f64 {
        1.0 / (self.beta_steps - 1) as f64
    }
}

/// Brute-force maximum of the two-path objective over `beta = i / (n - 1)`
/// and `phi = theta + arg(v1^H v2) = 2 pi j / m`. Ties go to the smallest
/// `(i, j)` in row-major order.
pub fn two_path_grid_optimum(
    p: &TwoPathParams,
    grid: TwoPathGrid,
    exec: Execution,
) -> Result<(AllocationPoint, f64)> {
    if grid.beta_steps < 2 || grid.phi_steps < 1 {
        return Err(Error::InvalidArgument("grid too small".into()));
    }
    let m = grid.phi_steps as u64;
    let point = |index: u64| {
        let beta = (index / m) as f64 * grid.beta_step();
        let phi = (index % m) as f64 * TAU / m as f64;
        AllocationPoint {
            beta,
            theta: (phi - p.vv_phase).rem_euclid(TAU),
        }
    };
    let total = grid.beta_steps as u64 * m;
    let (index, value) = exec::argmax(exec, total, |i| two_path_objective(p, point(i)).ok())
        .ok_or_else(|| Error::Undefined("objective undefined on the whole grid".into()))?;
    Ok((point(index), value))
}

/// [`two_path_grid_optimum`] followed by zoom passes on a 41 x 41 grid. The
/// first pass spans two coarse `beta` cells either side and the whole phase
/// circle (at `beta = 0` or `1` the coarse phase is arbitrary); each later pass
/// shrinks the window fourfold. The coarse `beta` step alone is too wide near
/// `beta = 1` to pin the optimal SNR to 1e-3.
pub fn two_path_refined_optimum(
    p: &TwoPathParams,
    grid: TwoPathGrid,
    exec: Execution,
) -> Result<(AllocationPoint, AllocationPoint, f64)> {
    let (coarse, coarse_value) = two_path_grid_optimum(p, grid, exec)?;
    let mut best = (coarse, coarse_value);
    let mut beta_half = 2.0 * grid.beta_step();
    let mut phi_half = PI;
    const SIDE: usize = 41;
    for _ in 0..12 {
        let centre = best.0;
        let point = |index: u64| {
            let i = (index / SIDE as u64) as f64;
            let j = (index % SIDE as u64) as f64;
            let off = |k: f64, half: f64| (2.0 * k / (SIDE - 1) as f64 - 1.0) * half;
            AllocationPoint {
                beta: (centre.beta + off(i, beta_half)).clamp(0.0, 1.0),
                theta: (centre.theta + off(j, phi_half)).rem_euclid(TAU),
            }
        };
        if let Some((index, value)) = exec::argmax(exec, (SIDE * SIDE) as u64, |i| {
            two_path_objective(p, point(i)).ok()
        }) {
            if value > best.1 {
                best = (point(index), value);
            }
        }
        beta_half /= 4.0;
        phi_half /= 4.0;
    }
    Ok((coarse, best.0, best.1))
}

fn draw_two_path(rng: &mut ChaCha8Rng, uu: Option<f64>, vv: Option<f64>) -> TwoPathParams {
    let unit_open = |rng: &mut ChaCha8Rng| loop {
        let x: f64 = rng.random();
        if x > 0.0 {
            return x;
        }
    };
    let mag_a1 = rng.random_range(0.1..=2.0);
    let mag_a2 = rng.random_range(0.1..=2.0);
    let phase_diff = rng.random_range(-PI..PI);
    let uu_mag = uu.unwrap_or_else(|| unit_open(rng));
    let vv_mag = vv.unwrap_or_else(|| unit_open(rng));
    TwoPathParams {
        mag_a1,
        mag_a2,
        phase_diff,
        uu_mag,
        uu_phase: rng.random_range(-PI..PI),
        vv_mag,
        vv_phase: rng.random_range(-PI..PI),
    }
}

/// Closed-form allocation vs. grid argmax, and closed-form SNR vs. grid optimum.
fn two_path_battery(
    suite: Suite,
    trials: u64,
    seed: u64,
    exec: Execution,
    draw: impl Fn(&mut ChaCha8Rng) -> TwoPathParams,
    closed: impl Fn(&TwoPathParams) -> Result<AllocationPoint>,
) -> Result<VerifyReport> {
    let grid = TwoPathGrid::default();
    let step = grid.beta_step();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut beta = Metric::new("abs(beta_closed - beta_grid)", step);
    let mut beta_sq = Metric::new("abs(beta_sq_closed - beta_sq_grid)", 2.0 * step);
    let mut deficit = Metric::new("grid_snr - closed_snr", 1e-6);
    let mut rel = Metric::new("abs(closed_snr - grid_snr) / closed_snr", 1e-3);
    let mut passed = 0;
    for _ in 0..trials {
        let p = draw(&mut rng);
        let alloc = closed(&p)?;
        let snr = two_path_objective(&p, alloc)?;
        let (g, _, g_snr) = two_path_refined_optimum(&p, grid, exec)?;
        let ok = [
            beta.record((alloc.beta - g.beta).abs()),
            beta_sq.record((alloc.beta_sq() - g.beta_sq()).abs()),
            deficit.record(g_snr - snr),
            rel.record((snr - g_snr).abs() / snr),
        ];
        passed += u64::from(ok.iter().all(|&x| x));
    }
    Ok(VerifyReport {
        suite,
        cases: trials,
        passed,
        failed: trials - passed,
        metrics: vec![beta, beta_sq, deficit, rel],
    })
}

/// Optimal beam lies in the path span; reduced and power-iteration routes agree.
fn prop1(trials: u64, seed: u64) -> Result<VerifyReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tx_span = Metric::new("tx span residual", 1e-8);
    let mut rx_span = Metric::new("rx span residual", 1e-8);
    let mut agree = Metric::new("reduced vs power-iteration relative SNR gap", 1e-9);
    let mut passed = 0;
    for _ in 0..trials {
        let l = [1, 2, 3, 5][rng.random_range(0..4)];
        let nt = [8, 16, 64][rng.random_range(0..3)];
        let nr = [2, 4][rng.random_range(0..2)];
        let paths: Vec<PathComponent> = (0..l)
            .map(|_| {
                PathComponent::new(
                    complex_gaussian(&mut rng),
                    AngleSpec::azimuth_deg(rng.random_range(30.0..=150.0)),
                    AngleSpec::azimuth_deg(rng.random_range(30.0..=150.0)),
                )
            })
            .collect();
        let (tx, rx) = (ArrayGeometry::ula(nt)?, ArrayGeometry::ula(nr)?);
        let h = assemble_channel(&paths, &tx, &rx)?;
        let opt = optimal_beamformer(&h, PowerIterationOptions::default())?;
        let reduced = reduced_optimal_beamformer(&paths, &tx, &rx)?;
        let (vs, us) = path_steering(&paths, &tx, &rx);
        let vb = columns(nt, vs.iter().map(|v| v.as_vector()));
        let ub = columns(nr, us.iter().map(|u| u.as_vector()));
        let ok = [
            tx_span.record(span_residual(&opt.tx, &vb)),
            rx_span.record(span_residual(&opt.rx, &ub)),
            agree.record(
                (reduced.pair.normalized_snr - opt.normalized_snr).abs() / opt.normalized_snr,
            ),
            !reduced.fell_back,
        ];
        passed += u64::from(ok.iter().all(|&x| x));
    }
    Ok(VerifyReport {
        suite: Suite::Prop1,
        cases: trials,
        passed,
        failed: trials - passed,
        metrics: vec![tx_span, rx_span, agree],
    })
}

fn bounds() -> Result<VerifyReport> {
    let mut checks = Vec::new();
    let unit = |mag_a1: f64, uu_mag: f64, vv_mag: f64| TwoPathParams {
        mag_a1,
        mag_a2: 1.0,
        phase_diff: 0.0,
        uu_mag,
        uu_phase: 0.0,
        vv_mag,
        vv_phase: 0.0,
    };

    let mut exact = Metric::new("abs(v-orth loss at a = b, uu = 1 minus 2)", 0.0);
    exact.record((delta_snr_v_orth(&unit(1.0, 1.0, 0.0))?.ratio - 2.0).abs());
    checks.push(exact);

    // Sup over a 100 x 100 (K, uu) grid, K in [1, 100].
    let mut sup = Metric::new("v-orth loss above 2", 1e-12);
    let mut mono = Metric::new("v-orth loss decrease along uu", 1e-12);
    for i in 0..100 {
        let k = 1.0 + 99.0 * i as f64 / 99.0;
        let mut prev = f64::NEG_INFINITY;
        for j in 0..100 {
            let d = delta_snr_v_orth(&unit(k, j as f64 / 99.0, 0.0))?.ratio;
            sup.record(d - 2.0);
            mono.record(prev - d);
            prev = d;
        }
    }
    checks.push(sup);
    checks.push(mono);

    // Equal gains, receive directions orthogonal: loss peaks at vv = sqrt(2) - 1.
    let n = 10_000;
    let mut best = (0.0, f64::NEG_INFINITY);
    for k in 0..=n {
        let vv = k as f64 / n as f64;
        let d = delta_snr_u_orth(&unit(1.0, 0.0, vv))?.ratio;
        if d > best.1 {
            best = (vv, d);
        }
    }
    let mut arg = Metric::new("u-orth argmax distance from sqrt(2) - 1", 1.0 / n as f64);
    arg.record((best.0 - (SQRT_2 - 1.0)).abs());
    let mut peak = Metric::new("u-orth peak vs (sqrt(2) + 1) / 2", 1e-9);
    peak.record((best.1 - (SQRT_2 + 1.0) / 2.0).abs());
    checks.push(arg);
    checks.push(peak);

    let failed = checks.iter().filter(|m| m.failures > 0).count() as u64;
    Ok(VerifyReport {
        suite: Suite::Bounds,
        cases: checks.len() as u64,
        passed: checks.len() as u64 - failed,
        failed,
        metrics: checks,
    })
}

pub fn run_suite(suite: Suite, trials: u64, seed: u64, exec: Execution) -> Result<VerifyReport> {
    match suite {
        Suite::Prop1 => prop1(trials, seed),
        Suite::Prop2 => two_path_battery(
            suite,
            trials,
            seed,
            exec,
            |rng| draw_two_path(rng, None, Some(0.0)),
            beta_opt_v_orth,
        ),
        Suite::Prop3 => two_path_battery(
            suite,
            trials,
            seed,
            exec,
            |rng| loop {
                let p = draw_two_path(rng, Some(0.0), None);
                if p.vv_mag >= 1e-6 {
                    return p;
                }
            },
            beta_opt_u_orth,
        ),
        Suite::Prop4 => two_path_battery(
            suite,
            trials,
            seed,
            exec,
            |rng| draw_two_path(rng, Some(1.0), None),
            beta_opt_u_parallel,
        ),
        Suite::Bounds => bounds(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("prop9".parse::<Suite>().is_err());
    }

    #[test]
    fn grid_oracle_finds_dominant_point() {
        // Orthogonal everything: all power on the stronger path.
        let p = TwoPathParams {
            mag_a1: 2.0,
            mag_a2: 1.0,
            phase_diff: 0.0,
            uu_mag: 0.0,
            uu_phase: 0.0,
            vv_mag: 0.0,
            vv_phase: 0.0,
        };
        let (alloc, v) =
            two_path_grid_optimum(&p, TwoPathGrid::default(), Execution::Sequential).unwrap();
        assert_eq!(alloc.beta, 1.0);
        assert!((v - 2.0).abs() < 1e-15);
    }

    #[test]
    fn small_batteries_pass() {
        for suite in Suite::ALL {
            let r = run_suite(suite, 10, 3, Execution::default()).unwrap();
            assert!(r.ok(), "{r:?}");
        }
    }

    #[test]
    fn metric_counts_nan_as_failure() {
        let mut m = Metric::new("x", 1.0);
        assert!(!m.record(f64::NAN));
        assert_eq!(m.failures, 1);
    }
}
