//! Small complex linear-algebra helpers shared by the beamformer and the
//! verification batteries.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::channel::complex_gaussian;

pub type CVector = DVector<Complex64>;
pub type CMatrix = DMatrix<Complex64>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerIterationOptions {
    /// Stop when the Rayleigh quotient changes by less than this, relative.
    pub rel_tol: f64,
    pub max_iters: usize,
}

impl Default for PowerIterationOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-13,
            max_iters: 10_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PowerIterate {
    /// Unit-norm iterate with the largest Rayleigh quotient seen.
    pub vector: CVector,
    /// `x^H H^H H x` for `vector`.
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    pub restarted: bool,
}

const RESTART_SEED: u64 = 0x00d1_7ec7_10a1;

/// Dominant eigenpair of `H^H H` by power iteration, applying `H` and `H^H`
/// in turn so the Gram matrix is never formed.
///
/// Starts from the normalized all-ones vector. If that start is annihilated by
/// `H` or is already a fixed point (converged within two steps), the run is
/// repeated once from a fixed pseudo-random vector and the better of the two
/// is kept, since a fixed point reached that quickly may be a non-dominant
/// eigenvector.
pub fn dominant_right_singular(h: &CMatrix, opts: PowerIterationOptions) -> PowerIterate {
    let nt = h.ncols();
    let ones = CVector::from_element(nt, Complex64::new(1.0 / (nt as f64).sqrt(), 0.0));
    let first = power_run(h, ones, opts);
    let stagnated = first.value == 0.0 || (first.converged && first.iterations <= 2);
    if !stagnated {
        return first;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(RESTART_SEED);
    let start = CVector::from_fn(nt, |_, _| complex_gaussian(&mut rng));
    let mut second = power_run(h, start, opts);
    second.restarted = true;
    if second.value > first.value {
        second
    } else {
        PowerIterate {
            restarted: true,
            ..first
        }
    }
}

fn power_run(h: &CMatrix, start: CVector, opts: PowerIterationOptions) -> PowerIterate {
    let norm = start.norm();
    let mut x = start / Complex64::new(norm, 0.0);
    let mut y = h * &x;
    let mut prev = y.norm_squared();
    let mut best = PowerIterate {
        vector: x.clone(),
        value: prev,
        iterations: 0,
        converged: false,
        restarted: false,
    };
    if prev == 0.0 {
        return best;
    }
    for k in 1..=opts.max_iters {
        let z = h.ad_mul(&y);
        let zn = z.norm();
        if zn == 0.0 {
            break;
        }
        x = z / Complex64::new(zn, 0.0);
        y = h * &x;
        let value = y.norm_squared();
        best.iterations = k;
        if value >= best.value {
            best.vector = x.clone();
            best.value = value;
        }
        if (value - prev).abs() <= opts.rel_tol * value {
            best.converged = true;
            return best;
        }
        prev = value;
    }
    best
}

/// Rotates `x` so its first non-negligible entry is real and nonnegative.
pub fn canonicalize_phase(x: &mut CVector) {
    let scale = x.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return;
    }
    if let Some(k) = x.iter().position(|z| z.norm() > 1e-12 * scale) {
        let pivot = x[k];
        let rot = pivot.conj() / pivot.norm();
        x.iter_mut().for_each(|z| *z *= rot);
        // Exact, rather than real up to rounding.
        x[k] = Complex64::new(pivot.norm(), 0.0);
    }
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues sorted descending
/// with matching eigenvector columns.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(m.nrows(), order.len(), |r, c| {
        eig.eigenvectors[(r, order[c])]
    });
    (values, vectors)
}

/// Principal square root of a Hermitian positive semidefinite matrix.
/// Slightly negative eigenvalues from rounding are clamped to zero.
pub fn hermitian_sqrt(m: &CMatrix) -> CMatrix {
    let (values, vectors) = hermitian_eigen(m);
    let roots = DVector::from_iterator(
        values.len(),
        values
            .iter()
            .map(|&l| Complex64::new(l.max(0.0).sqrt(), 0.0)),
    );
    let scaled = CMatrix::from_fn(vectors.nrows(), vectors.ncols(), |r, c| {
        vectors[(r, c)] * roots[c]
    });
    scaled * vectors.adjoint()
}

/// `||x - P x|| / ||x||` where `P` projects onto the column span of `basis`.
pub fn span_residual(x: &CVector, basis: &CMatrix) -> f64 {
    let xn = x.norm();
    if xn == 0.0 {
        return 0.0;
    }
    let svd = basis.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let mut r = x.clone();
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > 1e-10 * smax {
            let q = u.column(k);
            let coef = q.dotc(x);
            r -= q * coef;
        }
    }
    r.norm() / xn
}

/// Stacks vectors as matrix columns.
pub fn columns<'a, I>(rows: usize, cols: I) -> CMatrix
where
    I: IntoIterator<Item = &'a CVector>,
{
    let cols: Vec<&CVector> = cols.into_iter().collect();
    CMatrix::from_fn(rows, cols.len(), |r, c| cols[c][r])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> CMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        CMatrix::from_fn(rows, cols, |_, _| complex_gaussian(&mut rng))
    }

    #[test]
    fn power_iteration_matches_largest_singular_value() {
        for seed in 0..20 {
            let h = random_matrix(4, 9, seed);
            let it = dominant_right_singular(&h, PowerIterationOptions::default());
            assert!(it.converged);
            let smax = h.singular_values().max();
            assert_relative_eq!(it.value, smax * smax, max_relative = 1e-9);
            assert_relative_eq!(it.vector.norm(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn start_orthogonal_to_dominant_direction_restarts() {
        // H^H H = R diag(1, 4) R^H with R's first column equal to the all-ones
        // start, so the start is the weak eigenvector.
        let mut d = CMatrix::zeros(2, 2);
        d[(0, 0)] = Complex64::new(1.0, 0.0);
        d[(1, 1)] = Complex64::new(2.0, 0.0);
        let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let rot = CMatrix::from_row_slice(2, 2, &[s, s, s, -s]);
        let h = &d * rot.adjoint();
        let it = dominant_right_singular(&h, PowerIterationOptions::default());
        assert!(it.restarted);
        assert_relative_eq!(it.value, 4.0, max_relative = 1e-12);
    }

    #[test]
    fn annihilated_start_restarts() {
        // H has the all-ones vector in its null space.
        let h =
            CMatrix::from_row_slice(1, 2, &[Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)]);
        let it = dominant_right_singular(&h, PowerIterationOptions::default());
        assert!(it.restarted);
        assert_relative_eq!(it.value, 2.0, max_relative = 1e-12);
    }

    #[test]
    fn non_convergence_is_reported() {
        let h = random_matrix(3, 3, 7);
        let it = dominant_right_singular(
            &h,
            PowerIterationOptions {
                rel_tol: 0.0,
                max_iters: 5,
            },
        );
        assert!(!it.converged);
        assert_eq!(it.iterations, 5);
    }

    #[test]
    fn canonical_phase_first_entry_real() {
        let mut x = CVector::from_vec(vec![Complex64::new(0.0, -2.0), Complex64::new(1.0, 1.0)]);
        canonicalize_phase(&mut x);
        assert!(x[0].re > 0.0 && x[0].im == 0.0);
        assert_relative_eq!(x[1].norm(), 2f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn hermitian_sqrt_squares_back() {
        let b = random_matrix(4, 4, 3);
        let m = &b * b.adjoint();
        let r = hermitian_sqrt(&m);
        assert!((&r * &r - &m).norm() < 1e-10 * m.norm());
        assert!((&r - r.adjoint()).norm() < 1e-12 * r.norm());
        let (values, vectors) = hermitian_eigen(&m);
        assert!(values.windows(2).all(|w| w[0] >= w[1]));
        let v0 = vectors.column(0).clone_owned();
        assert!((&m * &v0 - v0 * Complex64::new(values[0], 0.0)).norm() < 1e-10 * values[0]);
    }

    #[test]
    fn span_residual_detects_components() {
        let basis = random_matrix(6, 2, 1);
        let inside = basis.column(0) * Complex64::new(0.3, -1.0)
            + basis.column(1) * Complex64::new(2.0, 0.5);
        assert!(span_residual(&inside.clone_owned(), &basis) < 1e-12);
        let outside = random_matrix(6, 1, 2).column(0).clone_owned();
        assert!(span_residual(&outside, &basis) > 1e-3);
    }
}
