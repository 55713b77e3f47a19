//! Small dense linear-algebra kit: 2x2 real representations of complex
//! arithmetic, a balanced nonsymmetric eigensolver and inverse iteration.

use nalgebra::{DMatrix, DVector, Hessenberg};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Real 2x2 matrix of multiplication by `c`: `[[re, -im], [im, re]]`.
pub fn mult_block(c: Complex64) -> [[f64; 2]; 2] {
    [[c.re, -c.im], [c.im, c.re]]
}

/// Real 2x2 matrix of the real-linear map `w -> a w + b conj(w)`.
pub fn real_linear_block(a: Complex64, b: Complex64) -> [[f64; 2]; 2] {
    [[a.re + b.re, -a.im + b.im], [a.im + b.im, a.re - b.re]]
}

/// Adds `block` into the 2x2 block at block coordinates `(row, col)`.
pub fn add_block(m: &mut DMatrix<f64>, row: usize, col: usize, block: [[f64; 2]; 2]) {
    for (r, line) in block.iter().enumerate() {
        for (c, &x) in line.iter().enumerate() {
            m[(2 * row + r, 2 * col + c)] += x;
        }
    }
}

/// Kronecker product of two dense real matrices.
pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    DMatrix::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

/// Parlett-Reinsch balancing by powers of two; returns the similar matrix.
fn balance(mut m: DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let radix = 2.0f64;
    let mut converged = false;
    while !converged {
        converged = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += m[(j, i)].abs();
                    r += m[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / radix;
            while c < g {
                f *= radix;
                c *= radix * radix;
            }
            g = r * radix;
            while c > g {
                f /= radix;
                c /= radix * radix;
            }
            if (c + r) / f < 0.95 * s {
                converged = false;
                for j in 0..n {
                    m[(i, j)] /= f;
                }
                for j in 0..n {
                    m[(j, i)] *= f;
                }
            }
        }
    }
    m
}

/// All eigenvalues of a real square matrix: balancing, Householder
/// Hessenberg reduction, then Francis double-shift QR.
pub fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::InvalidParameter("eigenvalues of a non-square matrix".into()));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::EigenFailure("matrix has non-finite entries".into()));
    }
    let balanced = balance(m.clone());
    let mut h = Hessenberg::new(balanced).h();
    hessenberg_qr(&mut h)
}

/// Eigenvalues of an upper Hessenberg matrix by the implicit double-shift
/// QR iteration with exceptional shifts every ten stalled sweeps. `h` is
/// overwritten.
pub fn hessenberg_qr(h: &mut DMatrix<f64>) -> Result<Vec<Complex64>> {
    const MAX_ITS: usize = 60;
    let n = h.nrows() as isize;
    let mut out = vec![Complex64::new(0.0, 0.0); n as usize];
    let at = |i: isize, j: isize| (i as usize, j as usize);
    let mut anorm = 0.0;
    for i in 0..n {
        for j in (i - 1).max(0)..n {
            anorm += h[at(i, j)].abs();
        }
    }
    let eps = f64::EPSILON;
    let mut nn = n - 1;
    let mut t = 0.0;
    while nn >= 0 {
        let mut its = 0;
        loop {
            let mut l = nn;
            while l > 0 {
                let mut s = h[at(l - 1, l - 1)].abs() + h[at(l, l)].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if h[at(l, l - 1)].abs() <= eps * s {
                    h[at(l, l - 1)] = 0.0;
                    break;
                }
                l -= 1;
            }
            let mut x = h[at(nn, nn)];
            if l == nn {
                out[nn as usize] = Complex64::new(x + t, 0.0);
                nn -= 1;
            } else {
                let mut y = h[at(nn - 1, nn - 1)];
                let mut w = h[at(nn, nn - 1)] * h[at(nn - 1, nn)];
                if l == nn - 1 {
                    let p = 0.5 * (y - x);
                    let q = p * p + w;
                    let z = q.abs().sqrt();
                    x += t;
                    if q >= 0.0 {
                        let z = p + z.copysign(p);
                        out[(nn - 1) as usize] = Complex64::new(x + z, 0.0);
                        out[nn as usize] = Complex64::new(if z != 0.0 { x - w / z } else { x + z }, 0.0);
                    } else {
                        out[nn as usize] = Complex64::new(x + p, -z);
                        out[(nn - 1) as usize] = Complex64::new(x + p, z);
                    }
                    nn -= 2;
                } else {
                    if its == MAX_ITS {
                        return Err(Error::EigenFailure(format!(
                            "QR iteration stalled at order {} of {n}",
                            nn + 1
                        )));
                    }
                    if its > 0 && its % 10 == 0 {
                        t += x;
                        for i in 0..=nn {
                            h[at(i, i)] -= x;
                        }
                        let s = h[at(nn, nn - 1)].abs() + h[at(nn - 1, nn - 2)].abs();
                        x = 0.75 * s;
                        y = x;
                        w = -0.4375 * s * s;
                    }
                    its += 1;
                    let (mut p, mut q, mut r) = (0.0, 0.0, 0.0);
                    let mut m = nn - 2;
                    while m >= l {
                        let z = h[at(m, m)];
                        let rr = x - z;
                        let ss = y - z;
                        p = (rr * ss - w) / h[at(m + 1, m)] + h[at(m, m + 1)];
                        q = h[at(m + 1, m + 1)] - z - rr - ss;
                        r = h[at(m + 2, m + 1)];
                        let s = p.abs() + q.abs() + r.abs();
                        p /= s;
                        q /= s;
                        r /= s;
                        if m == l {
                            break;
                        }
                        let u = h[at(m, m - 1)].abs() * (q.abs() + r.abs());
                        let v = p.abs() * (h[at(m - 1, m - 1)].abs() + z.abs() + h[at(m + 1, m + 1)].abs());
                        if u <= eps * v {
                            break;
                        }
                        m -= 1;
                    }
                    for i in m..nn - 1 {
                        h[at(i + 2, i)] = 0.0;
                        if i != m {
                            h[at(i + 2, i - 1)] = 0.0;
                        }
                    }
                    for k in m..nn {
                        if k != m {
                            p = h[at(k, k - 1)];
                            q = h[at(k + 1, k - 1)];
                            r = if k + 1 != nn { h[at(k + 2, k - 1)] } else { 0.0 };
                            x = p.abs() + q.abs() + r.abs();
                            if x != 0.0 {
                                p /= x;
                                q /= x;
                                r /= x;
                            }
                        }
                        let s = (p * p + q * q + r * r).sqrt().copysign(p);
                        if s != 0.0 {
                            if k == m {
                                if l != m {
                                    h[at(k, k - 1)] = -h[at(k, k - 1)];
                                }
                            } else {
                                h[at(k, k - 1)] = -s * x;
                            }
                            p += s;
                            x = p / s;
                            y = q / s;
                            let z = r / s;
                            q /= p;
                            r /= p;
                            for j in k..=nn {
                                let mut pj = h[at(k, j)] + q * h[at(k + 1, j)];
                                if k + 1 != nn {
                                    pj += r * h[at(k + 2, j)];
                                    h[at(k + 2, j)] -= pj * z;
                                }
                                h[at(k + 1, j)] -= pj * y;
                                h[at(k, j)] -= pj * x;
                            }
                            let mmin = if nn < k + 3 { nn } else { k + 3 };
                            for i in l..=mmin {
                                let mut pi = x * h[at(i, k)] + y * h[at(i, k + 1)];
                                if k + 1 != nn {
                                    pi += z * h[at(i, k + 2)];
                                    h[at(i, k + 2)] -= pi * r;
                                }
                                h[at(i, k + 1)] -= pi * q;
                                h[at(i, k)] -= pi;
                            }
                        }
                    }
                }
            }
            if l >= nn - 1 {
                break;
            }
        }
    }
    Ok(out)
}

pub fn to_complex(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|x| Complex64::new(x, 0.0))
}

/// Approximate null vector of a (numerically) singular complex matrix by
/// inverse iteration with a tiny diagonal shift. Normalized to unit 2-norm.
pub fn null_vector(m: &DMatrix<Complex64>) -> Result<DVector<Complex64>> {
    let n = m.nrows();
    let scale = m.iter().map(|x| x.norm()).fold(1.0, f64::max);
    let shift = Complex64::new(1e-11 * scale, 0.7e-11 * scale);
    let shifted = m + DMatrix::<Complex64>::identity(n, n) * shift;
    let lu = shifted.lu();
    let mut x = DVector::from_fn(n, |i, _| Complex64::new(1.0 + 0.1 * i as f64, 0.3 - 0.05 * i as f64));
    for _ in 0..3 {
        x = lu
            .solve(&x)
            .ok_or_else(|| Error::EigenFailure("inverse iteration hit an exactly singular system".into()))?;
        let nrm = x.norm();
        if !nrm.is_finite() || nrm == 0.0 {
            return Err(Error::EigenFailure("inverse iteration produced a degenerate vector".into()));
        }
        x /= Complex64::new(nrm, 0.0);
    }
    Ok(x)
}

/// Residual `||A x - lambda x|| / ||x||` for the inverse-iteration
/// eigenvector of `lambda`.
pub fn eigen_residual(a: &DMatrix<f64>, lambda: Complex64) -> Result<f64> {
    let n = a.nrows();
    let ac = to_complex(a);
    let shifted = &ac - DMatrix::<Complex64>::identity(n, n) * lambda;
    let x = null_vector(&shifted)?;
    Ok((&ac * &x - &x * lambda).norm() / x.norm())
}

/// Frobenius-style max-abs norm used for relative residual thresholds.
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

/// Sorts complex values by (Re, Im).
pub fn sort_complex(values: &mut [Complex64]) {
    values.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}
