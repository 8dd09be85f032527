//! Scalar special functions: the complementary error function, the standard
//! normal density/CDF, and Gauss-Hermite quadrature for expectations against
//! the standard Gaussian.
#![allow(clippy::excessive_precision)] // published coefficient tables keep their digits
//!
//! `erfc` follows Cody's rational Chebyshev approximations (the SPECFUN
//! coefficient set), accurate to close to machine precision on all three
//! ranges. Quadrature nodes are found by Newton iteration on the orthonormal
//! Hermite recurrence, which stays bounded even for high degree.

/// Complementary error function.
pub fn erfc(x: f64) -> f64 {
    let y = x.abs();
    let r = if y <= 0.46875 {
        return 1.0 - erf_small(x);
    } else if y <= 4.0 {
        erfc_mid(y)
    } else {
        erfc_large(y)
    };
    if x < 0.0 {
        2.0 - r
    } else {
        r
    }
}

/// Error function.
pub fn erf(x: f64) -> f64 {
    if x.abs() <= 0.46875 {
        erf_small(x)
    } else {
        1.0 - erfc(x)
    }
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

const ERF_A: [f64; 5] = [
    3.16112374387056560e0,
    1.13864154151050156e2,
    3.77485237685302021e2,
    3.20937758913846947e3,
    1.85777706184603153e-1,
];
const ERF_B: [f64; 4] =
    [2.36012909523441209e1, 2.44024637934444173e2, 1.28261652607737228e3, 2.84423683343917062e3];
const ERF_C: [f64; 9] = [
    5.64188496988670089e-1,
    8.88314979438837594e0,
    6.61191906371416295e1,
    2.98635138197400131e2,
    8.81952221241769090e2,
    1.71204761263407058e3,
    2.05107837782607147e3,
    1.23033935479799725e3,
    2.15311535474403846e-8,
];
const ERF_D: [f64; 8] = [
    1.57449261107098347e1,
    1.17693950891312499e2,
    5.37181101862009858e2,
    1.62138957456669019e3,
    3.29079923573345963e3,
    4.36261909014324716e3,
    3.43936767414372164e3,
    1.23033935480374942e3,
];
const ERF_P: [f64; 6] = [
    3.05326634961232344e-1,
    3.60344899949804439e-1,
    1.25781726111229246e-1,
    1.60837851487422766e-2,
    6.58749161529837803e-4,
    1.63153871373020978e-2,
];
const ERF_Q: [f64; 5] = [
    2.56852019228982242e0,
    1.87295284992346047e0,
    5.27905102951428412e-1,
    6.05183413124413191e-2,
    2.33520497626869185e-3,
];

fn erf_small(x: f64) -> f64 {
    let ysq = if x.abs() > 1e-300 { x * x } else { 0.0 };
    let mut num = ERF_A[4] * ysq;
    let mut den = ysq;
    for i in 0..3 {
        num = (num + ERF_A[i]) * ysq;
        den = (den + ERF_B[i]) * ysq;
    }
    x * (num + ERF_A[3]) / (den + ERF_B[3])
}

fn erfc_mid(y: f64) -> f64 {
    let mut num = ERF_C[8] * y;
    let mut den = y;
    for i in 0..7 {
        num = (num + ERF_C[i]) * y;
        den = (den + ERF_D[i]) * y;
    }
    let r = (num + ERF_C[7]) / (den + ERF_D[7]);
    scale_by_exp_neg_sq(y, r)
}

fn erfc_large(y: f64) -> f64 {
    if y >= 26.6 {
        return 0.0;
    }
    let ysq = 1.0 / (y * y);
    let mut num = ERF_P[5] * ysq;
    let mut den = ysq;
    for i in 0..4 {
        num = (num + ERF_P[i]) * ysq;
        den = (den + ERF_Q[i]) * ysq;
    }
    let mut r = ysq * (num + ERF_P[4]) / (den + ERF_Q[4]);
    r = (std::f64::consts::FRAC_1_PI.sqrt() - r) / y;
    scale_by_exp_neg_sq(y, r)
}

/// Multiplies by `exp(-y^2)` with the split-argument trick that preserves
/// relative accuracy in the tail.
fn scale_by_exp_neg_sq(y: f64, r: f64) -> f64 {
    let ysq = (y * 16.0).trunc() / 16.0;
    let del = (y - ysq) * (y + ysq);
    (-ysq * ysq).exp() * (-del).exp() * r
}

/// Nodes and weights for `integral of exp(-x^2) f(x) dx` with `n` points.
///
/// Uses the orthonormal Hermite recurrence and Newton iteration; nodes come
/// in symmetric pairs.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 2, "need at least two quadrature nodes");
    const EPS: f64 = 3e-14;
    const PIM4: f64 = 0.751_125_544_464_942_5; // pi^(-1/4)
    const MAX_NEWTON: usize = 100;

    let mut x = vec![0.0f64; n];
    let mut w = vec![0.0f64; n];
    let m = (n + 1) / 2;
    let mut z = 0.0f64;
    for i in 1..=m {
        z = match i {
            1 => {
                let t = (2 * n + 1) as f64;
                t.sqrt() - 1.85575 * t.powf(-1.0 / 6.0)
            }
            2 => z - 1.14 * (n as f64).powf(0.426) / z,
            3 => 1.86 * z - 0.86 * x[0],
            4 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 3],
        };
        let mut pp = 0.0;
        for _ in 0..MAX_NEWTON {
            let mut p1 = PIM4;
            let mut p2 = 0.0;
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                p1 = z * (2.0 / j as f64).sqrt() * p2 - (((j - 1) as f64) / j as f64).sqrt() * p3;
            }
            pp = (2.0 * n as f64).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= EPS {
                break;
            }
        }
        x[i - 1] = z;
        x[n - i] = -z;
        w[i - 1] = 2.0 / (pp * pp);
        w[n - i] = w[i - 1];
    }
    (x, w)
}

/// `E[f(g)]` for `g ~ N(0, 1)` by Gauss-Hermite quadrature with `n` nodes.
pub fn gaussian_expectation(f: impl Fn(f64) -> f64, n: usize) -> f64 {
    let (x, w) = gauss_hermite(n);
    let scale = 1.0 / std::f64::consts::PI.sqrt();
    let mut acc = 0.0;
    for (xi, wi) in x.iter().zip(&w) {
        acc += wi * f(std::f64::consts::SQRT_2 * xi);
    }
    scale * acc
}
