//! Conjugate gradients, a thick-restart Lanczos eigensolver and a small dense
//! Jacobi eigensolver.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::par;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    par::sum(a.len(), |r| {
        let (a, b) = (&a[r.clone()], &b[r]);
        let mut acc = [0.0; 4];
        let mut ca = a.chunks_exact(4);
        let mut cb = b.chunks_exact(4);
        for (x, y) in (&mut ca).zip(&mut cb) {
            for k in 0..4 {
                acc[k] += x[k] * y[k];
            }
        }
        let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
        (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
    })
}

pub fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

/// `y += alpha * x`.
fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    par::fill(y, |start, chunk| {
        let len = chunk.len();
        for (v, xv) in chunk.iter_mut().zip(&x[start..start + len]) {
            *v += alpha * xv;
        }
    });
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOutcome {
    pub iterations: usize,
    /// Final `‖b − Ax‖ / ‖b‖`.
    pub relative_residual: f64,
}

/// Solves `A x = b` for symmetric positive definite `A`, starting from `x`,
/// until `‖b − Ax‖ ≤ tol ‖b‖`. At least one iteration is taken unless the
/// start is exact, so warm starts always make progress.
pub fn conjugate_gradient<A>(apply: A, b: &[f64], x: &mut [f64], tol: f64, max_iter: usize) -> Result<CgOutcome>
where
    A: Fn(&[f64], &mut [f64]),
{
    let n = b.len();
    let bn = norm(b);
    if bn == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(CgOutcome {
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let mut r = alloc::vec![0.0; n];
    apply(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let mut p = r.clone();
    let mut ap = alloc::vec![0.0; n];
    let mut rr = dot(&r, &r);
    for it in 0..max_iter {
        let rel = libm::sqrt(rr) / bn;
        if rel <= tol && (it > 0 || rr == 0.0) {
            return Ok(CgOutcome {
                iterations: it,
                relative_residual: rel,
            });
        }
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::LinearSolveFailure {
                iterations: it,
                residual: rel,
            });
        }
        let alpha = rr / pap;
        axpy(x, alpha, &p);
        axpy(&mut r, -alpha, &ap);
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        par::fill(&mut p, |start, chunk| {
            let len = chunk.len();
            for (v, rv) in chunk.iter_mut().zip(&r[start..start + len]) {
                *v = rv + beta * *v;
            }
        });
    }
    let rel = libm::sqrt(rr) / bn;
    if rel <= tol {
        Ok(CgOutcome {
            iterations: max_iter,
            relative_residual: rel,
        })
    } else {
        Err(Error::LinearSolveFailure {
            iterations: max_iter,
            residual: rel,
        })
    }
}

/// Eigen-decomposition of a dense symmetric matrix (row-major `n × n`) by
/// cyclic Jacobi rotations. Returns eigenvalues ascending and the matching
/// eigenvectors as columns of a row-major matrix.
pub fn jacobi_eigen(a: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut m = a.to_vec();
    let mut v = alloc::vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i * n + j] * m[i * n + j])
            .sum();
        let diag: f64 = (0..n).map(|i| m[i * n + i] * m[i * n + i]).sum();
        if off <= 1e-30 * diag.max(1e-300) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + libm::sqrt(1.0 + theta * theta))
                } else {
                    -1.0 / (-theta + libm::sqrt(1.0 + theta * theta))
                };
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[i * n + i].total_cmp(&m[j * n + j]));
    let vals = order.iter().map(|&i| m[i * n + i]).collect();
    let mut vecs = alloc::vec![0.0; n * n];
    for (c, &i) in order.iter().enumerate() {
        for k in 0..n {
            vecs[k * n + c] = v[k * n + i];
        }
    }
    (vals, vecs)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenOutcome {
    /// Ascending.
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    /// Explicit `‖Aφ − λφ‖ / ‖φ‖` for each pair.
    pub residuals: Vec<f64>,
    pub matvecs: usize,
}

fn orthogonalise(x: &mut [f64], against: &[Vec<f64>]) {
    for _ in 0..2 {
        for v in against {
            let c = dot(v, x);
            axpy(x, -c, v);
        }
    }
}

/// The `k` smallest eigenpairs of the symmetric operator `apply` on vectors of
/// length `n`, by Lanczos with full reorthogonalisation and thick restarts.
/// Converged pairs have residual at most `tol` (relative to `‖φ‖ = 1`).
///
/// A single Krylov space holds one vector per eigenspace, so the run is
/// repeated in the orthogonal complement of every pair found so far until
/// no further eigenvalue below the current `k`-th appears. Multiplicities
/// are therefore resolved.
pub fn lanczos_smallest<A>(apply: A, n: usize, k: usize, tol: f64, max_matvecs: usize, seed: u64) -> Result<EigenOutcome>
where
    A: Fn(&[f64], &mut [f64]),
{
    let k = k.min(n);
    let mut found = lanczos_deflated(&apply, n, k, tol, max_matvecs, seed, &[])?;
    let mut matvecs = found.matvecs;
    // The lowest value never depends on multiplicity, so k − 1 rounds suffice.
    for round in 1..k {
        let room = k.min(n - found.vectors.len());
        if room == 0 || found.values.len() < k {
            break;
        }
        let kth = found.values[k - 1];
        let more = lanczos_deflated(&apply, n, room, tol, max_matvecs, seed.wrapping_add(round as u64), &found.vectors)?;
        matvecs += more.matvecs;
        // Ties within the solver tolerance are the same eigenvalue found twice.
        let below: Vec<usize> = (0..more.values.len()).filter(|&i| more.values[i] < kth - tol).collect();
        let mut pairs: Vec<(f64, Vec<f64>, f64)> = found
            .values
            .into_iter()
            .zip(found.vectors)
            .zip(found.residuals)
            .map(|((l, v), r)| (l, v, r))
            .collect();
        let stop = below.is_empty();
        for (i, ((l, v), r)) in more.values.into_iter().zip(more.vectors).zip(more.residuals).enumerate() {
            if below.contains(&i) {
                pairs.push((l, v, r));
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        found = EigenOutcome {
            values: pairs.iter().map(|p| p.0).collect(),
            vectors: pairs.iter().map(|p| p.1.clone()).collect(),
            residuals: pairs.iter().map(|p| p.2).collect(),
            matvecs,
        };
        if stop {
            break;
        }
    }
    found.values.truncate(k);
    found.vectors.truncate(k);
    found.residuals.truncate(k);
    found.matvecs = matvecs;
    Ok(found)
}

/// One thick-restart Lanczos run restricted to the complement of `locked`.
fn lanczos_deflated<A>(apply: &A, n: usize, k: usize, tol: f64, max_matvecs: usize, seed: u64, locked: &[Vec<f64>]) -> Result<EigenOutcome>
where
    A: Fn(&[f64], &mut [f64]),
{
    use rand::{Rng, SeedableRng};
    let k = k.min(n - locked.len());
    if k == 0 {
        return Ok(EigenOutcome {
            values: Vec::new(),
            vectors: Vec::new(),
            residuals: Vec::new(),
            matvecs: 0,
        });
    }
    let ncv = (2 * k + 12).min(n - locked.len());
    let keep = (k + (ncv - k) / 2).min(ncv - 1).max(k);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(ncv + 1);
    let mut start: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    orthogonalise(&mut start, locked);
    let s = norm(&start);
    start.iter_mut().for_each(|v| *v /= s);
    basis.push(start);
    let mut t = alloc::vec![0.0; ncv * ncv];
    let mut w = alloc::vec![0.0; n];
    let mut matvecs = 0;
    let mut best_res = f64::INFINITY;
    loop {
        let mut j = basis.len() - 1;
        let mut beta = 0.0;
        while j < ncv {
            apply(&basis[j], &mut w);
            matvecs += 1;
            orthogonalise(&mut w, locked);
            // Classical Gram–Schmidt, twice.
            let mut h = alloc::vec![0.0; j + 1];
            for _ in 0..2 {
                for (i, v) in basis.iter().enumerate() {
                    let c = dot(v, &w);
                    h[i] += c;
                    axpy(&mut w, -c, v);
                }
            }
            orthogonalise(&mut w, locked);
            for i in 0..=j {
                t[i * ncv + j] = h[i];
                t[j * ncv + i] = h[i];
            }
            beta = norm(&w);
            if beta <= 1e-14 * libm::sqrt(h.iter().map(|x| x * x).sum::<f64>()).max(1e-300) {
                // Invariant subspace: continue with a fresh random direction.
                let mut r: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                orthogonalise(&mut r, locked);
                orthogonalise(&mut r, &basis);
                let rn = norm(&r);
                r.iter_mut().for_each(|x| *x /= rn);
                w.copy_from_slice(&r);
                beta = 0.0;
            } else {
                w.iter_mut().for_each(|x| *x /= beta);
            }
            basis.push(w.clone());
            j += 1;
        }
        let (theta, y) = jacobi_eigen(&t, ncv);
        let ritz_res: Vec<f64> = (0..ncv).map(|c| (beta * y[(ncv - 1) * ncv + c]).abs()).collect();
        let worst = ritz_res[..k].iter().fold(0.0f64, |a, b| a.max(*b));
        best_res = best_res.min(worst);
        let done = worst <= 0.1 * tol;
        let give_up = matvecs >= max_matvecs;
        let m = if done || give_up { k } else { keep };
        let residual_vec = basis.pop().unwrap_or_default();
        let mut new_basis: Vec<Vec<f64>> = Vec::with_capacity(ncv + 1);
        for c in 0..m {
            let mut x = alloc::vec![0.0; n];
            for (i, v) in basis.iter().enumerate() {
                axpy(&mut x, y[i * ncv + c], v);
            }
            new_basis.push(x);
        }
        if done || give_up {
            let mut residuals = Vec::with_capacity(k);
            let mut ax = alloc::vec![0.0; n];
            for (c, x) in new_basis.iter().enumerate() {
                apply(x, &mut ax);
                axpy(&mut ax, -theta[c], x);
                residuals.push(norm(&ax) / norm(x));
            }
            let worst = residuals.iter().fold(0.0f64, |a, b| a.max(*b));
            if worst > tol {
                return Err(Error::EigSolverStall { residual: worst });
            }
            return Ok(EigenOutcome {
                values: theta[..k].to_vec(),
                vectors: new_basis,
                residuals,
                matvecs,
            });
        }
        t.iter_mut().for_each(|x| *x = 0.0);
        for c in 0..m {
            t[c * ncv + c] = theta[c];
        }
        new_basis.push(residual_vec);
        basis = new_basis;
    }
}
