//! Least squares by modified Gram-Schmidt with one re-orthogonalization
//! pass. Columns that are zero or numerically dependent on earlier columns
//! are dropped rather than failing the fit.

/// Relative residual norm below which a column counts as dependent.
const DEPENDENCE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquares {
    /// Coefficients, zero for dropped columns.
    pub coef: Vec<f64>,
    /// Indices of dropped columns, ascending.
    pub dropped: Vec<usize>,
    pub residuals: Vec<f64>,
    pub rss: f64,
    /// Total sum of squares about the mean of `y`.
    pub tss: f64,
}

impl LeastSquares {
    pub fn r_squared(&self) -> f64 {
        if self.tss > 0.0 {
            1.0 - self.rss / self.tss
        } else if self.rss == 0.0 {
            1.0
        } else {
            0.0
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `min ||y - X b||` for row-major `rows` with `p` columns.
pub fn least_squares(rows: &[Vec<f64>], y: &[f64], p: usize) -> LeastSquares {
    let n = rows.len();
    let mut q: Vec<Vec<f64>> = Vec::new();
    let mut kept: Vec<usize> = Vec::new();
    // r[k][j]: coefficient of q_k in column j (upper triangle over kept columns)
    let mut r: Vec<Vec<f64>> = Vec::new();
    let mut dropped = Vec::new();

    for j in 0..p {
        let mut v: Vec<f64> = rows.iter().map(|row| row[j]).collect();
        let norm0 = dot(&v, &v).sqrt();
        if norm0 == 0.0 {
            dropped.push(j);
            continue;
        }
        let mut rj = vec![0.0; q.len()];
        for _ in 0..2 {
            for (k, qk) in q.iter().enumerate() {
                let c = dot(qk, &v);
                rj[k] += c;
                v.iter_mut().zip(qk).for_each(|(vi, qi)| *vi -= c * qi);
            }
        }
        let nv = dot(&v, &v).sqrt();
        if nv <= DEPENDENCE_TOL * norm0 {
            dropped.push(j);
            continue;
        }
        v.iter_mut().for_each(|x| *x /= nv);
        rj.push(nv);
        q.push(v);
        r.push(rj);
        kept.push(j);
    }

    // Qᵀy, also with a second pass
    let m = q.len();
    let mut qty = vec![0.0; m];
    let mut resid = y.to_vec();
    for _ in 0..2 {
        for (k, qk) in q.iter().enumerate() {
            let c = dot(qk, &resid);
            qty[k] += c;
            resid.iter_mut().zip(qk).for_each(|(ri, qi)| *ri -= c * qi);
        }
    }

    // back substitution: r[k] holds column k's coefficients on q_0..q_k
    let mut b = vec![0.0; m];
    for k in (0..m).rev() {
        let mut s = qty[k];
        for l in k + 1..m {
            s -= r[l][k] * b[l];
        }
        b[k] = s / r[k][k];
    }
    let mut coef = vec![0.0; p];
    for (k, &j) in kept.iter().enumerate() {
        coef[j] = b[k];
    }

    let residuals: Vec<f64> = rows.iter().zip(y).map(|(row, yi)| yi - dot(row, &coef)).collect();
    let rss = dot(&residuals, &residuals);
    let mean = if n > 0 { y.iter().sum::<f64>() / n as f64 } else { 0.0 };
    let tss = y.iter().map(|v| (v - mean).powi(2)).sum();
    LeastSquares { coef, dropped, residuals, rss, tss }
}
