//! Independent numerical oracles for the test suites.
//!
//! Nothing here touches the library under test: matrices are plain nested
//! vectors and the eigenvalue route (Householder tridiagonalisation plus
//! Sturm-sequence bisection) shares no code with the Jacobi SVD it is used
//! to cross-check.

/// Singular values of a dense matrix (rows of equal length), computed as
/// square roots of the eigenvalues of the Gram matrix `A^T A`, sorted
/// non-increasing.
pub fn gram_singular_values(a: &[Vec<f64>]) -> Vec<f64> {
    let rows = a.len();
    assert!(rows > 0, "empty matrix");
    let cols = a[0].len();
    assert!(a.iter().all(|r| r.len() == cols), "ragged matrix");

    // Work on the smaller Gram matrix.
    let gram = if rows >= cols { gram_at_a(a, rows, cols) } else { gram_a_at(a, rows, cols) };
    let mut eig = symmetric_eigenvalues(gram);
    // Round-off can push tiny eigenvalues slightly negative.
    for v in eig.iter_mut() {
        *v = v.max(0.0).sqrt();
    }
    eig.sort_by(|x, y| y.partial_cmp(x).unwrap());
    eig
}

fn gram_at_a(a: &[Vec<f64>], rows: usize, cols: usize) -> Vec<Vec<f64>> {
    let mut g = vec![vec![0.0; cols]; cols];
    for i in 0..cols {
        for j in i..cols {
            let mut acc = 0.0;
            for k in 0..rows {
                acc += a[k][i] * a[k][j];
            }
            g[i][j] = acc;
            g[j][i] = acc;
        }
    }
    g
}

fn gram_a_at(a: &[Vec<f64>], rows: usize, cols: usize) -> Vec<Vec<f64>> {
    let mut g = vec![vec![0.0; rows]; rows];
    for i in 0..rows {
        for j in i..rows {
            let mut acc = 0.0;
            for k in 0..cols {
                acc += a[i][k] * a[j][k];
            }
            g[i][j] = acc;
            g[j][i] = acc;
        }
    }
    g
}

/// All eigenvalues of a symmetric matrix, ascending.
pub fn symmetric_eigenvalues(mut g: Vec<Vec<f64>>) -> Vec<f64> {
    let n = g.len();
    if n == 1 {
        return vec![g[0][0]];
    }
    tridiagonalize(&mut g);
    let diag: Vec<f64> = (0..n).map(|i| g[i][i]).collect();
    let mut off = vec![0.0; n];
    for i in 1..n {
        off[i] = g[i][i - 1];
    }
    bisect_all(&diag, &off)
}

/// Householder similarity reduction of a symmetric matrix to tridiagonal
/// form (in place; only the tridiagonal band is meaningful afterwards).
fn tridiagonalize(g: &mut [Vec<f64>]) {
    let n = g.len();
    for k in 0..n.saturating_sub(2) {
        let mut norm2 = 0.0;
        for i in k + 1..n {
            norm2 += g[i][k] * g[i][k];
        }
        if norm2 == 0.0 {
            continue;
        }
        let alpha = -g[k + 1][k].signum() * norm2.sqrt();
        let mut v = vec![0.0; n];
        v[k + 1] = g[k + 1][k] - alpha;
        for i in k + 2..n {
            v[i] = g[i][k];
        }
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        // H = I - 2 v v^T / |v|^2;  G <- H G H.
        let mut w = vec![0.0; n];
        for i in 0..n {
            let mut acc = 0.0;
            for j in 0..n {
                acc += g[i][j] * v[j];
            }
            w[i] = 2.0 * acc / vnorm2;
        }
        let kappa: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() / vnorm2;
        for i in 0..n {
            let ui = w[i] - kappa * v[i];
            for j in 0..n {
                let uj = w[j] - kappa * v[j];
                g[i][j] -= v[i] * uj + ui * v[j];
            }
        }
    }
}

/// Count of eigenvalues of the tridiagonal matrix strictly below `x`
/// (Sturm sequence).
fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let n = diag.len();
    let mut count = 0usize;
    let mut q = diag[0] - x;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..n {
        let denom = if q == 0.0 { 1e-300 } else { q };
        q = diag[i] - x - off[i] * off[i] / denom;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

fn bisect_all(diag: &[f64], off: &[f64]) -> Vec<f64> {
    let n = diag.len();
    // Gershgorin interval.
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = off[i].abs() + if i + 1 < n { off[i + 1].abs() } else { 0.0 };
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    let scale = hi.abs().max(lo.abs()).max(1.0);
    let tol = 1e-14 * scale;
    (0..n)
        .map(|j| {
            let mut a = lo;
            let mut b = hi;
            // Find eigenvalue j (ascending): smallest x with count(x) > j.
            for _ in 0..120 {
                if b - a <= tol {
                    break;
                }
                let mid = 0.5 * (a + b);
                if sturm_count(diag, off, mid) > j {
                    b = mid;
                } else {
                    a = mid;
                }
            }
            0.5 * (a + b)
        })
        .collect()
}
