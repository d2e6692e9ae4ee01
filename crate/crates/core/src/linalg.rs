//! Thin SVD built on the symmetric eigensolver of the smaller Gram matrix.
//!
//! nalgebra 0.35's bidiagonal SVD returns wrong factors for a sizeable share
//! of exactly rank-deficient inputs (centered data with N ≤ d, low-rank
//! Jacobians), while `SymmetricEigen` is reliable on the same inputs.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// `A = U diag(s) Vᵀ` with `r = min(m, n)` columns, `s` descending.
pub(crate) struct ThinSvd {
    pub u: DMatrix<f64>,
    pub s: DVector<f64>,
    pub v: DMatrix<f64>,
    /// `s²` summed directly from the entries of `A v`, without the rounding
    /// of a square root.
    pub s_sq: DVector<f64>,
}

pub(crate) fn thin_svd(a: &DMatrix<f64>) -> Option<ThinSvd> {
    let (m, n) = a.shape();
    if n > m {
        let t = thin_svd(&a.transpose())?;
        return Some(ThinSvd {
            u: t.v,
            s: t.s,
            v: t.u,
            s_sq: t.s_sq,
        });
    }
    let gram = a.tr_mul(a);
    let eig = SymmetricEigen::try_new(gram, f64::EPSILON, 0)?;
    // ‖A v_k‖ is a more accurate singular value than √λ_k for small λ_k.
    let av = a * &eig.eigenvectors;
    let sq: Vec<f64> = av.column_iter().map(|c| c.norm_squared()).collect();
    let norms: Vec<f64> = sq.iter().map(|v| v.sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]).then(i.cmp(&j)));
    let v = DMatrix::from_columns(&order.iter().map(|&i| eig.eigenvectors.column(i)).collect::<Vec<_>>());
    let s = DVector::from_iterator(n, order.iter().map(|&i| norms[i]));
    let s_sq = DVector::from_iterator(n, order.iter().map(|&i| sq[i]));
    let floor = s.iter().copied().fold(0.0, f64::max) * (m.max(n) as f64) * f64::EPSILON;

    let mut u = DMatrix::zeros(m, n);
    let mut filled = vec![false; n];
    for (k, &i) in order.iter().enumerate() {
        // Re-orthogonalizing against the earlier, larger columns repairs the
        // precision the Gram matrix loses on small singular values.
        let col = (s[k] > floor)
            .then(|| {
                let mut c: DVector<f64> = av.column(i) / s[k];
                orthogonalize(&mut c, &u, &filled);
                let norm = c.norm();
                (norm > 0.5).then(|| c / norm)
            })
            .flatten()
            .unwrap_or_else(|| complement(&u, &filled, m));
        u.set_column(k, &col);
        filled[k] = true;
    }
    Some(ThinSvd { u, s, v, s_sq })
}

fn orthogonalize(c: &mut DVector<f64>, u: &DMatrix<f64>, filled: &[bool]) {
    for _ in 0..2 {
        for (k, _) in filled.iter().enumerate().filter(|(_, f)| **f) {
            let col = u.column(k);
            *c -= col * col.dot(c);
        }
    }
}

fn complement(u: &DMatrix<f64>, filled: &[bool], m: usize) -> DVector<f64> {
    let mut best = DVector::zeros(m);
    let mut best_norm = -1.0;
    for e in 0..m {
        let mut c = DVector::zeros(m);
        c[e] = 1.0;
        orthogonalize(&mut c, u, filled);
        let norm = c.norm();
        if norm > best_norm {
            best_norm = norm;
            best = c / norm;
        }
    }
    best
}
