//! Dense least squares via Householder QR, sized for surrogate fitting
//! (tens of columns, hundreds of rows).

use crate::scalar::Scalar;

/// Outcome of a least-squares solve.
#[derive(Debug, Clone)]
pub struct LstsqSolution<T> {
    pub coeffs: Vec<T>,
    /// True when the design was numerically rank deficient and the ridge
    /// augmented system was solved instead.
    pub ridge: bool,
}

/// Relative threshold on `|R_jj| / max |R_kk|` below which a column is
/// treated as dependent.
const RANK_TOL: f64 = 1e-10;

/// Solves `min ||X b - y||` for a row-major `rows x cols` design. Falls back
/// to ridge regression with penalty `lambda` when the design is rank
/// deficient. Returns `None` when there are fewer rows than columns.
pub fn lstsq<T: Scalar>(design: &[T], rows: usize, cols: usize, y: &[T], lambda: T) -> Option<LstsqSolution<T>> {
    if rows < cols || design.len() != rows * cols || y.len() != rows {
        return None;
    }
    if let Some(b) = qr_solve(design.to_vec(), rows, cols, y.to_vec()) {
        return Some(LstsqSolution { coeffs: b, ridge: false });
    }
    // Augment with sqrt(lambda) * I, which has full column rank.
    let aug_rows = rows + cols;
    let mut a = Vec::with_capacity(aug_rows * cols);
    a.extend_from_slice(design);
    let s = lambda.sqrt();
    for j in 0..cols {
        for k in 0..cols {
            a.push(if j == k { s } else { T::zero() });
        }
    }
    let mut rhs = y.to_vec();
    rhs.extend(std::iter::repeat_n(T::zero(), cols));
    let b = qr_solve_unchecked(a, aug_rows, cols, rhs);
    Some(LstsqSolution { coeffs: b, ridge: true })
}

fn householder<T: Scalar>(a: &mut [T], rows: usize, cols: usize, y: &mut [T]) -> Vec<T> {
    let mut diag = vec![T::zero(); cols];
    for j in 0..cols {
        let mut norm = T::zero();
        for i in j..rows {
            norm += a[i * cols + j] * a[i * cols + j];
        }
        let norm = norm.sqrt();
        if norm == T::zero() {
            diag[j] = T::zero();
            continue;
        }
        let alpha = if a[j * cols + j] > T::zero() { -norm } else { norm };
        // v = x - alpha e1, stored in place
        a[j * cols + j] -= alpha;
        let mut vnorm2 = T::zero();
        for i in j..rows {
            vnorm2 += a[i * cols + j] * a[i * cols + j];
        }
        if vnorm2 > T::zero() {
            let two = T::lit(2.0);
            for k in (j + 1)..cols {
                let mut dot = T::zero();
                for i in j..rows {
                    dot += a[i * cols + j] * a[i * cols + k];
                }
                let f = two * dot / vnorm2;
                for i in j..rows {
                    let vij = a[i * cols + j];
                    a[i * cols + k] -= f * vij;
                }
            }
            let mut dot = T::zero();
            for i in j..rows {
                dot += a[i * cols + j] * y[i];
            }
            let f = two * dot / vnorm2;
            for i in j..rows {
                y[i] -= f * a[i * cols + j];
            }
        }
        diag[j] = alpha;
    }
    diag
}

fn back_substitute<T: Scalar>(a: &[T], cols: usize, diag: &[T], y: &[T]) -> Vec<T> {
    let mut b = vec![T::zero(); cols];
    for j in (0..cols).rev() {
        let mut acc = y[j];
        for k in (j + 1)..cols {
            acc -= a[j * cols + k] * b[k];
        }
        b[j] = acc / diag[j];
    }
    b
}

fn qr_solve<T: Scalar>(mut a: Vec<T>, rows: usize, cols: usize, mut y: Vec<T>) -> Option<Vec<T>> {
    let diag = householder(&mut a, rows, cols, &mut y);
    let max = diag.iter().fold(T::zero(), |m, d| m.max(d.abs()));
    let tol = max * T::lit(RANK_TOL);
    if max == T::zero() || diag.iter().any(|d| d.abs() <= tol) {
        return None;
    }
    Some(back_substitute(&a, cols, &diag, &y))
}

fn qr_solve_unchecked<T: Scalar>(mut a: Vec<T>, rows: usize, cols: usize, mut y: Vec<T>) -> Vec<T> {
    let diag = householder(&mut a, rows, cols, &mut y);
    back_substitute(&a, cols, &diag, &y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_overdetermined_line() {
        // y = 2 + 3x, exact
        let xs = [0.0, 1.0, 2.0, 3.0, 4.0];
        let design: Vec<f64> = xs.iter().flat_map(|&x| [1.0, x]).collect();
        let y: Vec<f64> = xs.iter().map(|x| 2.0 + 3.0 * x).collect();
        let sol = lstsq(&design, 5, 2, &y, 1e-8).unwrap();
        assert!(!sol.ridge);
        assert!((sol.coeffs[0] - 2.0).abs() < 1e-12);
        assert!((sol.coeffs[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn least_squares_of_noisy_points_matches_normal_equations() {
        let pts = [(0.0, 1.0), (1.0, 2.9), (2.0, 5.2), (3.0, 6.8)];
        let design: Vec<f64> = pts.iter().flat_map(|&(x, _)| [1.0, x]).collect();
        let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
        let sol = lstsq(&design, 4, 2, &y, 1e-8).unwrap();
        // closed-form simple regression
        let n = 4.0;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        let icept = (sy - slope * sx) / n;
        assert!((sol.coeffs[1] - slope).abs() < 1e-12);
        assert!((sol.coeffs[0] - icept).abs() < 1e-12);
    }

    #[test]
    fn rank_deficient_falls_back_to_ridge() {
        // second column duplicates the first
        let design = vec![1.0, 1.0, 2.0, 2.0, 3.0, 3.0];
        let y = vec![2.0, 4.0, 6.0];
        let sol = lstsq::<f64>(&design, 3, 2, &y, 1e-8).unwrap();
        assert!(sol.ridge);
        // minimum-norm-like split of the slope 2
        assert!((sol.coeffs[0] + sol.coeffs[1] - 2.0).abs() < 1e-6);
        assert!((sol.coeffs[0] - sol.coeffs[1]).abs() < 1e-6);
    }

    #[test]
    fn too_few_rows() {
        assert!(lstsq(&[1.0, 2.0], 1, 2, &[1.0], 1e-8).is_none());
    }
}
