use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ldl::{Inertia, LdlFactor};
use super::operator::LocalOperator;
use crate::error::{Error, Result};
use crate::geometry::Field;

/// Eigenvalue with an `h^2`-normalized eigenfunction.
#[derive(Clone, Debug)]
pub struct EigenPair {
    pub eigenvalue: f64,
    pub vector: Field,
}

const MAX_ITERS: usize = 2000;
const GUARD: usize = 2;

/// The `k` algebraically smallest eigenpairs of `-Δ_h - V` on the whole grid.
pub fn smallest_eigenpairs(potential: &Field, k: usize, tol: f64) -> Result<Vec<EigenPair>> {
    smallest_eigenpairs_masked(potential, None, k, tol)
}

/// As [`smallest_eigenpairs`], restricted to the nodes where `mask` is true
/// (Dirichlet conditions on the complement).
pub fn smallest_eigenpairs_masked(
    potential: &Field,
    mask: Option<&[bool]>,
    k: usize,
    tol: f64,
) -> Result<Vec<EigenPair>> {
    if !(1..=4).contains(&k) {
        return Err(Error::invalid(format!("k must be in 1..=4, got {k}")));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid("eigen tolerance must be positive"));
    }
    let grid = potential.grid();
    let v = potential.values();
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("potential must be finite"));
    }
    let op = LocalOperator::assemble(grid, |i| -v[i], mask)?;
    let n = op.global.len();
    let m = (k + GUARD).min(n);
    if k > n {
        return Err(Error::invalid("more eigenpairs requested than nodes"));
    }

    // -Δ_h is positive definite, so -Δ_h - V - σ is definite for σ < -max V
    let vmax = op.global.iter().map(|&i| v[i]).fold(f64::NEG_INFINITY, f64::max);
    let mut sigma = -vmax - 1.0;
    let mut factor = shifted_factor(&op, sigma)?;
    let mut shift_refined = false;

    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_e16e);
    let mut block: Vec<Vec<f64>> =
        (0..m).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    orthonormalize(&mut block);

    let mut theta = vec![0.0; m];
    let mut resid = vec![f64::INFINITY; m];
    let mut av = vec![0.0; n];
    for it in 0..MAX_ITERS {
        for x in block.iter_mut() {
            factor.solve_in_place(x);
        }
        orthonormalize(&mut block);
        let (vals, rotated) = rayleigh_ritz(&op, &block);
        block = rotated;
        theta = vals;
        for (j, x) in block.iter().enumerate() {
            op.matrix.mul_vec(x, &mut av);
            resid[j] = av.iter().zip(x).map(|(a, b)| (a - theta[j] * b).powi(2)).sum::<f64>().sqrt();
        }
        if resid.iter().take(k).all(|&r| r <= tol) {
            break;
        }
        // move the shift just below the lowest Ritz value once it has settled
        if !shift_refined && it >= 10 && resid[0] < 1e-2 * (1.0 + theta[0].abs()) {
            let gap = (theta[k.min(m - 1)] - theta[0]).abs().max(1e-6);
            let mut trial = theta[0] - 0.1 * gap - resid[0];
            for _ in 0..20 {
                if trial <= sigma {
                    break;
                }
                match shifted_factor(&op, trial) {
                    Ok(f) if f.is_positive_definite() => {
                        factor = f;
                        sigma = trial;
                        break;
                    }
                    _ => trial = sigma + 0.5 * (trial - sigma),
                }
            }
            shift_refined = true;
        }
        if it + 1 == MAX_ITERS {
            return Err(Error::EigenNotConverged { rayleigh: theta[..k].to_vec() });
        }
    }
    let h = grid.h();
    Ok((0..k)
        .map(|j| {
            let vec = op.scatter(&block[j], grid.len());
            let scale = 1.0 / h;
            EigenPair {
                eigenvalue: theta[j],
                vector: Field::from_parts(grid.clone(), vec.iter().map(|x| x * scale).collect()),
            }
        })
        .collect())
}

fn shifted_factor(op: &LocalOperator, sigma: f64) -> Result<LdlFactor> {
    let mut shifted = op.matrix.clone();
    for j in 0..shifted.n {
        for p in shifted.col_ptr[j]..shifted.col_ptr[j + 1] {
            if shifted.row_idx[p] as usize == j {
                shifted.values[p] -= sigma;
            }
        }
    }
    LdlFactor::new(&shifted, &op.coords)
}

/// Inertia of `-Δ_h - V - shift` on the masked node set.
pub fn shifted_inertia(potential: &Field, mask: Option<&[bool]>, shift: f64) -> Result<Inertia> {
    let v = potential.values();
    let op = LocalOperator::assemble(potential.grid(), |i| -v[i] - shift, mask)?;
    Ok(op.factorize()?.inertia())
}

/// Number of eigenvalues of `-Δ_h - V` below `threshold`, by Sylvester's law of inertia.
pub fn count_eigenvalues_below(potential: &Field, mask: Option<&[bool]>, threshold: f64) -> Result<usize> {
    let inertia = shifted_inertia(potential, mask, threshold)?;
    if inertia.zero > 0 {
        return Err(Error::ZeroPivot(0));
    }
    Ok(inertia.negative)
}

fn orthonormalize(block: &mut [Vec<f64>]) {
    for j in 0..block.len() {
        for _ in 0..2 {
            for i in 0..j {
                let (head, tail) = block.split_at_mut(j);
                let c: f64 = head[i].iter().zip(tail[0].iter()).map(|(a, b)| a * b).sum();
                for (t, s) in tail[0].iter_mut().zip(&head[i]) {
                    *t -= c * s;
                }
            }
        }
        let nrm = block[j].iter().map(|x| x * x).sum::<f64>().sqrt();
        if nrm > 0.0 {
            block[j].iter_mut().for_each(|x| *x /= nrm);
        }
    }
}

fn rayleigh_ritz(op: &LocalOperator, block: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let m = block.len();
    let n = op.global.len();
    let mut images = vec![vec![0.0; n]; m];
    for (x, ax) in block.iter().zip(images.iter_mut()) {
        op.matrix.mul_vec(x, ax);
    }
    let t = DMatrix::from_fn(m, m, |i, j| {
        let a: f64 = block[i].iter().zip(&images[j]).map(|(a, b)| a * b).sum();
        let b: f64 = block[j].iter().zip(&images[i]).map(|(a, b)| a * b).sum();
        0.5 * (a + b)
    });
    let eig = SymmetricEigen::new(t);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let rotated = order
        .iter()
        .map(|&c| {
            let mut out = vec![0.0; n];
            for (r, x) in block.iter().enumerate() {
                let w = eig.eigenvectors[(r, c)];
                for (o, xi) in out.iter_mut().zip(x) {
                    *o += w * xi;
                }
            }
            out
        })
        .collect();
    (vals, rotated)
}
