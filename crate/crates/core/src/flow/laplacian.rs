use nalgebra::{DMatrix, DVector};

/// Components up to this many vertices are factorised densely.
pub(crate) const DENSE_LIMIT: usize = 1500;

/// Weighted graph Laplacian on a connected vertex set, grounded at local
/// vertex 0 so that the reduced system is positive definite.
pub(crate) enum LaplacianSolver {
    Dense(nalgebra::Cholesky<f64, nalgebra::Dyn>),
    Iterative { n: usize, ends: Vec<(usize, usize)>, weights: Vec<f64>, diag: Vec<f64> },
}

impl LaplacianSolver {
    /// `ends[e] = (tail, head)` in local indices; weights must be positive.
    pub(crate) fn new(n: usize, ends: &[(usize, usize)], weights: &[f64]) -> Self {
        if n <= DENSE_LIMIT {
            let mut m = DMatrix::<f64>::zeros(n - 1, n - 1);
            for (&(a, b), &w) in ends.iter().zip(weights) {
                if a > 0 {
                    m[(a - 1, a - 1)] += w;
                }
                if b > 0 {
                    m[(b - 1, b - 1)] += w;
                }
                if a > 0 && b > 0 {
                    m[(a - 1, b - 1)] -= w;
                    m[(b - 1, a - 1)] -= w;
                }
            }
            let mut jitter = 0.0;
            let scale = (0..n - 1).map(|i| m[(i, i)]).fold(0.0, f64::max);
            for _ in 0..8 {
                let mut shifted = m.clone();
                for i in 0..n - 1 {
                    shifted[(i, i)] += jitter;
                }
                if let Some(ch) = shifted.cholesky() {
                    return LaplacianSolver::Dense(ch);
                }
                jitter = if jitter == 0.0 { scale * 1e-14 } else { jitter * 100.0 };
            }
        }
        let mut diag = vec![0.0; n];
        for (&(a, b), &w) in ends.iter().zip(weights) {
            diag[a] += w;
            diag[b] += w;
        }
        LaplacianSolver::Iterative { n, ends: ends.to_vec(), weights: weights.to_vec(), diag }
    }

    /// Solves `L φ = rhs` with `φ[0] = 0`; `rhs` should sum to zero.
    pub(crate) fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        match self {
            LaplacianSolver::Dense(ch) => {
                let b = DVector::from_iterator(rhs.len() - 1, rhs[1..].iter().copied());
                let x = ch.solve(&b);
                std::iter::once(0.0).chain(x.iter().copied()).collect()
            }
            LaplacianSolver::Iterative { n, ends, weights, diag } => pcg(*n, ends, weights, diag, rhs),
        }
    }
}

/// Jacobi-preconditioned conjugate gradients on the grounded system.
fn pcg(n: usize, ends: &[(usize, usize)], weights: &[f64], diag: &[f64], rhs: &[f64]) -> Vec<f64> {
    let apply = |x: &[f64], out: &mut [f64]| {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (&(a, b), &w) in ends.iter().zip(weights) {
            let f = w * (x[a] - x[b]);
            out[a] += f;
            out[b] -= f;
        }
        out[0] = 0.0;
    };
    let mut x = vec![0.0; n];
    let mut r: Vec<f64> = rhs.to_vec();
    r[0] = 0.0;
    let precond = |r: &[f64], z: &mut [f64]| {
        for i in 1..n {
            z[i] = r[i] / diag[i];
        }
        z[0] = 0.0;
    };
    let mut z = vec![0.0; n];
    precond(&r, &mut z);
    let mut d = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let norm0 = r.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut q = vec![0.0; n];
    for _ in 0..10 * n + 100 {
        let rn = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if rn <= 1e-14 * norm0.max(1e-300) {
            break;
        }
        apply(&d, &mut q);
        let dq: f64 = d.iter().zip(&q).map(|(a, b)| a * b).sum();
        if dq <= 0.0 {
            break;
        }
        let step = rz / dq;
        for i in 0..n {
            x[i] += step * d[i];
            r[i] -= step * q[i];
        }
        precond(&r, &mut z);
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let ratio = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            d[i] = z[i] + ratio * d[i];
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    fn residual(n: usize, ends: &[(usize, usize)], w: &[f64], phi: &[f64], rhs: &[f64]) -> f64 {
        let mut out = vec![0.0; n];
        for (&(a, b), &wi) in ends.iter().zip(w) {
            let f = wi * (phi[a] - phi[b]);
            out[a] += f;
            out[b] -= f;
        }
        (1..n).map(|i| (out[i] - rhs[i]).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn dense_and_iterative_agree() {
        // wheel: hub 0 joined to a 6-cycle
        let mut ends = Vec::new();
        for i in 1..=6 {
            ends.push((0, i));
            ends.push((i, i % 6 + 1));
        }
        let w: Vec<f64> = (0..ends.len()).map(|i| 0.5 + i as f64).collect();
        let rhs = vec![-3.0, 1.0, 0.5, -0.5, 0.0, 1.0, 1.0];
        let dense = LaplacianSolver::new(7, &ends, &w).solve(&rhs);
        let iter = pcg(7, &ends, &w, &{
            let mut d = vec![0.0; 7];
            for (&(a, b), &wi) in ends.iter().zip(&w) {
                d[a] += wi;
                d[b] += wi;
            }
            d
        }, &rhs);
        assert!(residual(7, &ends, &w, &dense, &rhs) < 1e-12);
        assert!(residual(7, &ends, &w, &iter, &rhs) < 1e-10);
        for (a, b) in dense.iter().zip(&iter) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}
