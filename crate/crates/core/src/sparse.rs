//! Minimal real CSR storage and a BiCGSTAB solver.

use rayon::prelude::*;

#[derive(Clone, Debug, Default)]
pub struct CsrMatrix {
    ncols: usize,
    offsets: Vec<usize>,
    entries: Vec<(usize, f64)>,
}

impl CsrMatrix {
    pub fn from_rows(ncols: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        let mut offsets = Vec::with_capacity(rows.len() + 1);
        offsets.push(0);
        let mut entries = Vec::with_capacity(rows.iter().map(Vec::len).sum());
        for row in rows {
            entries.extend(row);
            offsets.push(entries.len());
        }
        Self {
            ncols,
            offsets,
            entries,
        }
    }

    pub fn nrows(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.entries[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.ncols + 1];
        for &(j, _) in &self.entries {
            counts[j + 1] += 1;
        }
        for j in 0..self.ncols {
            counts[j + 1] += counts[j];
        }
        let offsets = counts.clone();
        let mut fill = counts;
        let mut entries = vec![(0usize, 0.0); self.entries.len()];
        for i in 0..self.nrows() {
            for &(j, w) in self.row(i) {
                entries[fill[j]] = (i, w);
                fill[j] += 1;
            }
        }
        Self {
            ncols: self.nrows(),
            offsets,
            entries,
        }
    }

    /// `y = A x`.
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        y.par_iter_mut().enumerate().for_each(|(i, yi)| {
            *yi = self.row(i).iter().map(|&(j, w)| w * x[j]).sum();
        });
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.par_iter().zip(b.par_iter()).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Deterministic shadow vector with no exact cancellations against sparse
/// residuals.
fn shadow(r: &[f64]) -> Vec<f64> {
    let scale = norm(r) / (r.len() as f64).sqrt();
    r.iter()
        .enumerate()
        .map(|(i, &ri)| ri + scale * (0.5 + (i as f64 * 0.618_033_988_749_894_9).fract()))
        .collect()
}

/// Solves `A x = b` for an operator given as `apply(x, y): y = A x`.
/// Restarts from the current iterate on breakdown. Returns the final
/// relative residual on failure.
pub fn bicgstab<F>(n: usize, apply: F, b: &[f64], tol: f64, max_iter: usize) -> Result<Vec<f64>, f64>
where
    F: Fn(&[f64], &mut [f64]),
{
    let bnorm = norm(b).max(f64::MIN_POSITIVE);
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut r_hat = shadow(&r);
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut t = vec![0.0; n];
    let mut res = norm(&r) / bnorm;
    let mut iter = 0;
    while iter < max_iter {
        iter += 1;
        if res < tol {
            return Ok(x);
        }
        let rho_new = dot(&r_hat, &r);
        let breakdown = rho_new.abs() < 1e-300 || omega == 0.0;
        let denom = if breakdown {
            0.0
        } else {
            let beta = (rho_new / rho) * (alpha / omega);
            rho = rho_new;
            p.par_iter_mut()
                .zip(r.par_iter().zip(v.par_iter()))
                .for_each(|(pi, (ri, vi))| *pi = ri + beta * (*pi - omega * vi));
            apply(&p, &mut v);
            dot(&r_hat, &v)
        };
        if breakdown || denom.abs() < 1e-300 {
            // Recompute the true residual and restart.
            apply(&x, &mut t);
            r.iter_mut().zip(b.iter().zip(t.iter())).for_each(|(ri, (bi, ti))| *ri = bi - ti);
            r_hat = shadow(&r);
            rho = 1.0;
            alpha = 1.0;
            omega = 1.0;
            v.iter_mut().for_each(|e| *e = 0.0);
            p.iter_mut().for_each(|e| *e = 0.0);
            res = norm(&r) / bnorm;
            continue;
        }
        alpha = rho / denom;
        s.par_iter_mut()
            .zip(r.par_iter().zip(v.par_iter()))
            .for_each(|(si, (ri, vi))| *si = ri - alpha * vi);
        if norm(&s) / bnorm < tol {
            x.par_iter_mut().zip(p.par_iter()).for_each(|(xi, pi)| *xi += alpha * pi);
            break;
        }
        apply(&s, &mut t);
        let tt = dot(&t, &t);
        omega = if tt == 0.0 { 0.0 } else { dot(&t, &s) / tt };
        x.par_iter_mut()
            .zip(p.par_iter().zip(s.par_iter()))
            .for_each(|(xi, (pi, si))| *xi += alpha * pi + omega * si);
        r.par_iter_mut()
            .zip(s.par_iter().zip(t.par_iter()))
            .for_each(|(ri, (si, ti))| *ri = si - omega * ti);
        res = norm(&r) / bnorm;
    }
    let mut ax = vec![0.0; n];
    apply(&x, &mut ax);
    let true_res = ax.iter().zip(b).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt() / bnorm;
    if true_res < tol {
        Ok(x)
    } else {
        Err(true_res)
    }
}
