//! Weighted least squares: Cholesky of `X'WX` first, Householder QR of
//! `√W·X` when the Cholesky factor is missing or has a vanishing pivot.

use nalgebra::{linalg::Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

// Squared sine of the angle between a column and the span of the previous
// ones, below which the Cholesky route is abandoned.
const CHOL_PIVOT_RATIO: f64 = 1e-12;
// Same quantity, unsquared, below which QR declares the design singular.
const QR_PIVOT_RATIO: f64 = 1e-7;

fn scaled_rows(x: &DMatrix<f64>, w: &[f64]) -> DMatrix<f64> {
    let mut xs = x.clone();
    for (i, &wi) in w.iter().enumerate() {
        let s = wi.sqrt();
        xs.row_mut(i).scale_mut(s);
    }
    xs
}

fn cholesky(gram: DMatrix<f64>) -> Option<Cholesky<f64, Dyn>> {
    let diag: Vec<f64> = gram.diagonal().iter().copied().collect();
    let chol = Cholesky::new(gram)?;
    let l = chol.l_dirty();
    let ok = diag
        .iter()
        .enumerate()
        .all(|(j, &a)| a > 0.0 && l[(j, j)].powi(2) >= CHOL_PIVOT_RATIO * a);
    ok.then_some(chol)
}

fn collinear_columns(xs: &DMatrix<f64>, names: &[String]) -> Vec<String> {
    let r = xs.clone().qr().r();
    (0..xs.ncols())
        .filter(|&j| {
            let norm = xs.column(j).norm();
            norm == 0.0 || r[(j, j)].abs() < QR_PIVOT_RATIO * norm
        })
        .map(|j| {
            names
                .get(j)
                .cloned()
                .unwrap_or_else(|| format!("column {j}"))
        })
        .collect()
}

/// Solves `min Σ w_i (z_i − x_i'β)²`.
pub fn solve_wls(x: &DMatrix<f64>, w: &[f64], z: &[f64], names: &[String]) -> Result<DVector<f64>> {
    let xs = scaled_rows(x, w);
    let zs = DVector::from_iterator(z.len(), z.iter().zip(w).map(|(zi, wi)| zi * wi.sqrt()));
    if let Some(chol) = cholesky(xs.tr_mul(&xs)) {
        return Ok(chol.solve(&xs.tr_mul(&zs)));
    }
    let singular = collinear_columns(&xs, names);
    if !singular.is_empty() {
        return Err(Error::SingularDesign(singular));
    }
    let qr = xs.qr();
    let qtb = qr.q().tr_mul(&zs);
    qr.r()
        .solve_upper_triangular(&qtb)
        .ok_or_else(|| Error::SingularDesign(names.to_vec()))
}

/// `(X'WX)⁻¹`.
pub fn inverse_gram(x: &DMatrix<f64>, w: &[f64], names: &[String]) -> Result<DMatrix<f64>> {
    let xs = scaled_rows(x, w);
    if let Some(chol) = cholesky(xs.tr_mul(&xs)) {
        return Ok(chol.inverse());
    }
    let singular = collinear_columns(&xs, names);
    if !singular.is_empty() {
        return Err(Error::SingularDesign(singular));
    }
    let r = xs.qr().r();
    let p = r.ncols();
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(p, p))
        .ok_or_else(|| Error::SingularDesign(names.to_vec()))?;
    Ok(&r_inv * r_inv.transpose())
}
