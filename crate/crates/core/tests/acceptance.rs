//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

use std::f64::consts::{PI, SQRT_2, TAU};
use std::process::Command;
use std::time::{Duration, Instant};

use dirbeam::channel::{assemble_channel, channel_power};
use dirbeam::closedform::{
    delta_snr_u_orth, delta_snr_u_parallel, delta_snr_v_orth, realize_two_path, snr_dominant_path,
    snr_equal_power_coherent, two_path_objective, AllocationPoint, TwoPathParams,
};
use dirbeam::exec::Execution;
use dirbeam::montecarlo::{percentile, run_ccdf, sample_paths, McConfig};
use dirbeam::steering::ArrayGeometry;
use dirbeam::verify::{run_suite, Suite, VerifyReport};
use dirbeam::{dominant_path_beamformer, equal_power_beamformer};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn db(ratio: f64) -> f64 {
    10.0 * ratio.log10()
}

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn params(a1: f64, a2: f64, phase_diff: f64, uu: f64, vv: f64) -> TwoPathParams {
    TwoPathParams {
        mag_a1: a1,
        mag_a2: a2,
        phase_diff,
        uu_mag: uu,
        uu_phase: 0.0,
        vv_mag: vv,
        vv_phase: 0.0,
    }
}

fn report_summary(r: &VerifyReport) -> String {
    let metrics: Vec<String> = r
        .metrics
        .iter()
        .map(|m| format!("{} worst {:.3e} (tol {:.1e})", m.name, m.worst, m.tolerance))
        .collect();
    format!(
        "{}/{} cases pass; {}",
        r.passed,
        r.cases,
        metrics.join("; ")
    )
}

fn normalization() -> Outcome {
    let start = Instant::now();
    let cfg = McConfig {
        num_paths: 3,
        seed: 1,
        ..McConfig::default()
    };
    let tx = ArrayGeometry::ula(cfg.nt).unwrap();
    let rx = ArrayGeometry::ula(cfg.nr).unwrap();
    let draws = 100_000u64;
    let total: f64 = (0..draws)
        .map(|i| {
            let h = assemble_channel(&sample_paths(&cfg, i), &tx, &rx).unwrap();
            channel_power(&h) / (cfg.nt * cfg.nr) as f64
        })
        .sum();
    let mean = total / draws as f64;
    let elapsed = start.elapsed();
    check(
        (0.99..=1.01).contains(&mean) && elapsed < Duration::from_secs(10),
        format!(
            "mean ||H||_F^2 / (Nr Nt) = {mean:.5} over {draws} draws (L=3, 64x4) in {elapsed:.2?}"
        ),
    )
}

fn eigen_route() -> Outcome {
    let r = run_suite(Suite::Prop1, 1000, 2, Execution::default()).unwrap();
    check(r.ok(), report_summary(&r))
}

fn v_orthogonal_allocation() -> Outcome {
    let r = run_suite(Suite::Prop2, 500, 3, Execution::default()).unwrap();
    check(r.ok(), report_summary(&r))
}

fn v_orthogonal_bound() -> Outcome {
    let worst = delta_snr_v_orth(&params(1.0, 1.0, 0.0, 1.0, 0.0)).unwrap();
    let exact = worst.ratio == 2.0;
    let vs_log2 = (worst.db() - db(2.0)).abs();
    let vs_quoted = (worst.db() - 3.0103).abs();
    let mut sup = f64::NEG_INFINITY;
    for i in 0..100 {
        let k = 1.0 + 99.0 * i as f64 / 99.0;
        for j in 0..100 {
            let d = delta_snr_v_orth(&params(k, 1.0, 0.0, j as f64 / 99.0, 0.0)).unwrap();
            sup = sup.max(d.ratio);
        }
    }
    check(
        exact && vs_log2 <= 1e-9 && vs_quoted < 1e-4 && sup <= 2.0 + 1e-12,
        format!(
            "ratio {} ({:.10} dB; |dB - 10log10 2| = {vs_log2:.1e}, |dB - 3.0103| = {vs_quoted:.1e}); sup over 100x100 (K, uu) grid = {sup}",
            worst.ratio,
            worst.db()
        ),
    )
}

fn u_orthogonal_bound() -> Outcome {
    let n = 10_000;
    let (mut arg, mut best) = (0.0, f64::NEG_INFINITY);
    for k in 0..=n {
        let vv = k as f64 / n as f64;
        let d = delta_snr_u_orth(&params(1.0, 1.0, 0.0, 0.0, vv))
            .unwrap()
            .ratio;
        if d > best {
            best = d;
            arg = vv;
        }
    }
    let target = (SQRT_2 + 1.0) / 2.0;
    check(
        (arg - (SQRT_2 - 1.0)).abs() <= 1.0 / n as f64
            && (best - target).abs() <= 1e-9
            && (db(best) - 0.8175).abs() <= 1e-4,
        format!(
            "argmax vv = {arg} (sqrt2-1 = {:.6}), max = {best:.12} (target {target:.12}), {:.5} dB",
            SQRT_2 - 1.0,
            db(best)
        ),
    )
}

fn v_parallel_flat() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let p = params(
            rng.random_range(0.1..2.0),
            rng.random_range(0.1..2.0),
            rng.random_range(-PI..PI),
            rng.random_range(0.0..=1.0),
            1.0,
        );
        let theta = rng.random_range(0.0..TAU);
        let values: Vec<f64> = (0..100)
            .map(|i| {
                two_path_objective(&p, AllocationPoint::new(i as f64 / 99.0, theta).unwrap())
                    .unwrap()
            })
            .collect();
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        worst = worst.max(hi - lo);
    }
    check(
        worst < 1e-10,
        format!("max spread over 100-point beta grid, 100 draws: {worst:.2e}"),
    )
}

fn u_parallel() -> Outcome {
    let r = run_suite(Suite::Prop4, 500, 4, Execution::default()).unwrap();
    let example = delta_snr_u_parallel(&params(1.0, 1.0, PI, 1.0, 0.9)).unwrap();
    check(
        r.ok() && (example.db() - 13.01).abs() <= 0.01,
        format!(
            "{}; example a=b=1, vv=0.9, nu=180deg: {:.4} dB",
            report_summary(&r),
            example.db()
        ),
    )
}

fn equal_power_limit() -> Outcome {
    let quoted = 3.0103;
    let limit = params(1e4, 1.0, 0.0, 0.0, 0.0);
    let limit_db = db(snr_dominant_path(&limit) / snr_equal_power_coherent(&limit));

    let k100 = params(100.0, 1.0, 0.0, 0.0, 0.0);
    let closed_db = db(snr_dominant_path(&k100) / snr_equal_power_coherent(&k100));
    let (paths, tx, rx, real) = realize_two_path(&k100, 64, 4).unwrap();
    let ep = equal_power_beamformer(&paths, &tx, &rx)
        .unwrap()
        .pair
        .normalized_snr;
    let dom = dominant_path_beamformer(&paths, &tx, &rx)
        .unwrap()
        .normalized_snr;
    let matrix_db = db(dom / ep);
    check(
        (limit_db - quoted).abs() <= 1e-6
            && (closed_db - quoted).abs() <= 0.01
            && (matrix_db - quoted).abs() <= 0.01
            && real.uu_mag < 1e-12
            && real.vv_mag < 1e-12,
        format!(
            "K=1e4 closed form {limit_db:.8} dB; K=100 closed form {closed_db:.5} dB, 64x4 channel {matrix_db:.5} dB"
        ),
    )
}

fn ccdf_properties() -> Outcome {
    let start = Instant::now();
    let mut medians = Vec::new();
    let mut problems = Vec::new();
    for l in [1usize, 2, 3, 5] {
        let cfg = McConfig {
            num_paths: l,
            seed: 42,
            ..McConfig::default()
        };
        let t = run_ccdf(&cfg, Execution::default()).unwrap();
        let median = t.median().unwrap();
        let p90 = percentile(&t, 0.9).unwrap();
        if t.samples_db[0] < -1e-9 {
            problems.push(format!("L={l}: min sample {}", t.samples_db[0]));
        }
        if p90 < median {
            problems.push(format!("L={l}: p90 {p90} < median {median}"));
        }
        if l == 1 && median.abs() > 1e-6 {
            problems.push(format!("L=1 median {median}"));
        }
        medians.push((l, median, p90, t.nonconverged));
    }
    let m: Vec<f64> = medians.iter().map(|x| x.1).collect();
    if !(m[1] <= m[2] && m[2] <= m[3]) {
        problems.push("medians not nondecreasing in L".into());
    }
    let elapsed = start.elapsed();
    if elapsed > Duration::from_secs(60) {
        problems.push(format!("runtime {elapsed:.1?}"));
    }
    let reference = [(2, 0.3), (3, 0.95), (5, 1.85)];
    let mut detail: Vec<String> = medians
        .iter()
        .map(|(l, med, p90, nc)| {
            format!("L={l} median {med:.4} dB p90 {p90:.4} dB (unconverged {nc})")
        })
        .collect();
    detail.push(format!(
        "published medians for reference only: {}",
        reference
            .iter()
            .map(|(l, r)| format!("L={l} {r} dB"))
            .collect::<Vec<_>>()
            .join(", ")
    ));
    detail.push(format!("{elapsed:.2?}"));
    detail.extend(problems.iter().cloned());
    check(problems.is_empty(), detail.join("; "))
}

fn determinism() -> Outcome {
    let exe = env!("CARGO_BIN_EXE_dirbeam");
    let mut outputs = Vec::new();
    // Identical invocations, each in its own directory, so the echoed config matches too.
    for _ in 0..2 {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let status = Command::new(exe)
            .current_dir(dir.path())
            .args([
                "ccdf", "--paths", "3", "--nt", "64", "--nr", "4", "--trials", "10000", "--seed",
                "42",
            ])
            .args(["--out", "ccdf.csv"])
            .status()
            .map_err(|e| e.to_string())?;
        if !status.success() {
            return Err(format!("dirbeam exited with {status}"));
        }
        let csv = std::fs::read(dir.path().join("ccdf.csv")).map_err(|e| e.to_string())?;
        let meta =
            std::fs::read(dir.path().join("ccdf.csv.meta.json")).map_err(|e| e.to_string())?;
        outputs.push((csv, meta));
    }
    let same = outputs[0] == outputs[1];
    check(
        same && outputs[0].0.starts_with(b"delta_snr_db,ccdf\n"),
        format!(
            "two ccdf runs (L=3, 10^4 trials, seed 42): {} CSV + {} metadata bytes each, identical = {same}",
            outputs[0].0.len(),
            outputs[0].1.len()
        ),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("channel normalization", normalization),
        (
            "optimal beam in path span / reduced eigenproblem",
            eigen_route,
        ),
        (
            "v-orthogonal allocation vs grid oracle",
            v_orthogonal_allocation,
        ),
        ("v-orthogonal worst-case loss of 3 dB", v_orthogonal_bound),
        (
            "u-orthogonal worst-case loss of 0.8175 dB",
            u_orthogonal_bound,
        ),
        (
            "v-parallel objective independent of allocation",
            v_parallel_flat,
        ),
        ("u-parallel allocation and 13 dB example", u_parallel),
        (
            "equal-power 3 dB loss for orthogonal paths",
            equal_power_limit,
        ),
        ("Monte Carlo CCDF properties", ccdf_properties),
        ("byte-identical ccdf output", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    println!(
        "{} of {} acceptance criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
