//! Small dense Hermitian helpers for the lifted-coefficient machinery.
//!
//! Everything here operates on `DMatrix<Complex64>` values that are Hermitian
//! by construction (or get symmetrized first). Matrices are tiny (N+1 ~ 17),
//! so full eigendecompositions are the pragmatic tool.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Top eigenpair of a Hermitian matrix plus the gap to the runner-up.
#[derive(Clone, Debug)]
pub struct TopEigenpair {
    pub value: f64,
    /// Unit eigenvector, phase-normalized (largest-magnitude entry real positive).
    pub vector: DVector<Complex64>,
    /// `lambda_1 - lambda_2`; infinite for 1x1 matrices.
    pub gap: f64,
}

/// `(m + m^H) / 2`, forcing exact Hermitian symmetry.
pub fn hermitianize(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Real part of the trace.
pub fn trace_re(m: &DMatrix<Complex64>) -> f64 {
    m.diagonal().iter().map(|d| d.re).sum()
}

/// `re(v^H m v)`; equals `tr(m * v v^H)` for Hermitian `m`.
pub fn quad_form(m: &DMatrix<Complex64>, v: &DVector<Complex64>) -> f64 {
    let n = v.len();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        let mut row = Complex64::new(0.0, 0.0);
        for j in 0..n {
            row += m[(i, j)] * v[j];
        }
        acc += v[i].conj() * row;
    }
    acc.re
}

/// Deterministic top eigenpair of a Hermitian matrix.
///
/// Ties are broken by taking the first maximal eigenvalue in the solver's
/// output order; the eigenvector phase is fixed by rotating its
/// largest-magnitude entry onto the positive real axis.
pub fn top_eigenpair(m: &DMatrix<Complex64>) -> TopEigenpair {
    let n = m.nrows();
    let se = m.clone().symmetric_eigen();
    let mut top = 0;
    for i in 1..n {
        if se.eigenvalues[i] > se.eigenvalues[top] {
            top = i;
        }
    }
    let mut second = f64::NEG_INFINITY;
    for i in 0..n {
        if i != top {
            second = second.max(se.eigenvalues[i]);
        }
    }
    let mut vector: DVector<Complex64> = se.eigenvectors.column(top).into();
    let mut pivot = 0;
    for i in 1..n {
        if vector[i].norm_sqr() > vector[pivot].norm_sqr() {
            pivot = i;
        }
    }
    let pv = vector[pivot];
    if pv.norm() > 0.0 {
        let rot = pv.conj() / pv.norm();
        vector *= rot;
    }
    TopEigenpair {
        value: se.eigenvalues[top],
        vector,
        gap: if n > 1 { se.eigenvalues[top] - second } else { f64::INFINITY },
    }
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(m: &DMatrix<Complex64>) -> f64 {
    m.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

/// Euclidean projection onto the PSD cone: eigendecompose and clip negative
/// eigenvalues to zero.
pub fn psd_project(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = m.nrows();
    let se = hermitianize(m).symmetric_eigen();
    let mut out = DMatrix::<Complex64>::zeros(n, n);
    for i in 0..n {
        let lam = se.eigenvalues[i];
        if lam > 0.0 {
            let v: DVector<Complex64> = se.eigenvectors.column(i).into();
            // out += lam * v v^H, lower cost than forming v v^H separately.
            for r in 0..n {
                let s = v[r] * lam;
                for c in 0..n {
                    out[(r, c)] += s * v[c].conj();
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<Complex64> {
        let a = DMatrix::from_fn(n, n, |_, _| {
            Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        });
        hermitianize(&a)
    }

    #[test]
    fn top_pair_satisfies_eigen_equation() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let m = random_hermitian(9, &mut rng);
            let top = top_eigenpair(&m);
            let res = (&m * &top.vector - &top.vector * Complex64::new(top.value, 0.0)).norm();
            assert!(res < 1e-10, "residual {res}");
            assert!((top.vector.norm() - 1.0).abs() < 1e-12);
            assert!((quad_form(&m, &top.vector) - top.value).abs() < 1e-10);
        }
    }

    #[test]
    fn psd_projection_is_idempotent_and_dominates() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..20 {
            let m = random_hermitian(7, &mut rng);
            let p = psd_project(&m);
            assert!(min_eigenvalue(&p) >= -1e-12);
            let again = psd_project(&p);
            assert!((&again - &p).norm() <= 1e-10 * p.norm().max(1.0));
            // Projection of an already PSD matrix is the identity map.
            let spd = &m * m.adjoint();
            let q = psd_project(&spd);
            assert!((&q - &spd).norm() <= 1e-9 * spd.norm());
        }
    }

    #[test]
    fn quad_form_matches_trace_of_rank_one_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = random_hermitian(6, &mut rng);
        let v = DVector::from_fn(6, |_, _| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
        let outer = &v * v.adjoint();
        let tr = trace_re(&(&m * &outer));
        assert!((quad_form(&m, &v) - tr).abs() <= 1e-10 * tr.abs().max(1.0));
    }
}
