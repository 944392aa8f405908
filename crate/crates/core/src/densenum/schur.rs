//! General real eigenvalues via Hessenberg reduction and Francis QR.
//!
//! Householder reduction to upper Hessenberg form followed by the implicit
//! double-shift QR iteration to real Schur form, both accumulating the
//! orthogonal transform so the result can be residual-checked against the
//! input. Derived from the classic Algol `orthes`/`hqr2` procedures (Martin &
//! Wilkinson) as found in EISPACK and Jama.
//!
//! Deflation uses the standard criterion: a subdiagonal `h[i, i-1]` is
//! negligible when it is below `eps * (|h[i-1, i-1]| + |h[i, i]|)`.
//! Exceptional shifts kick in after 10 and 20 stalled iterations on a block;
//! a block that has not deflated after 100 iterations aborts with
//! `NoConvergence`.

use super::{ComplexEigenvalue, Matrix, NumError, TOL_EIG};

/// Iterations allowed per deflation before giving up.
const MAX_ITER_PER_EIG: usize = 100;

/// All eigenvalues (with multiplicity) of a square real matrix.
///
/// Complex eigenvalues are produced in exact conjugate pairs. The computed
/// Schur factorization `a Z = Z T` is verified to
/// `TOL_EIG * max(1, max|a|)` before eigenvalues are returned; a violation
/// (never observed on finite input) reports `NoConvergence`.
pub fn general_eig(a: &Matrix) -> Result<Vec<ComplexEigenvalue>, NumError> {
    assert!(a.is_square(), "eigenvalues require a square matrix");
    let n = a.rows();
    if n == 0 {
        return Ok(Vec::new());
    }
    if !a.is_finite() {
        return Err(NumError::NoConvergence);
    }
    if n == 1 {
        return Ok(vec![ComplexEigenvalue::real(a[(0, 0)])]);
    }

    let mut h = a.clone();
    let mut z = Matrix::identity(n);
    hessenberg(&mut h, &mut z);
    let (re, im) = francis_qr(&mut h, &mut z)?;

    // Residual check against the Schur factorization: a Z = Z T.
    let resid = a.matmul(&z).max_diff(&z.matmul(&h));
    if resid > TOL_EIG * a.norm_max().max(1.0) {
        return Err(NumError::NoConvergence);
    }

    Ok(re
        .into_iter()
        .zip(im)
        .map(|(re, im)| ComplexEigenvalue { re, im })
        .collect())
}

/// Householder reduction to upper Hessenberg form, accumulating the
/// orthogonal factor into `z` (which must come in as the identity).
fn hessenberg(h: &mut Matrix, z: &mut Matrix) {
    let n = h.rows();
    if n < 3 {
        return; // already Hessenberg
    }
    let high = n - 1;
    let mut ort = vec![0.0; n];

    for m in 1..=high - 1 {
        let mut scale = 0.0;
        for i in m..=high {
            scale += h[(i, m - 1)].abs();
        }
        if scale == 0.0 {
            continue;
        }
        let mut hsum = 0.0;
        for i in (m..=high).rev() {
            ort[i] = h[(i, m - 1)] / scale;
            hsum += ort[i] * ort[i];
        }
        let mut g = hsum.sqrt();
        if ort[m] > 0.0 {
            g = -g;
        }
        hsum -= ort[m] * g;
        ort[m] -= g;

        // H <- (I - u u^T / hsum) H (I - u u^T / hsum)
        for j in m..n {
            let mut f = 0.0;
            for i in (m..=high).rev() {
                f += ort[i] * h[(i, j)];
            }
            f /= hsum;
            for i in m..=high {
                h[(i, j)] -= f * ort[i];
            }
        }
        for i in 0..=high {
            let mut f = 0.0;
            for j in (m..=high).rev() {
                f += ort[j] * h[(i, j)];
            }
            f /= hsum;
            for j in m..=high {
                h[(i, j)] -= f * ort[j];
            }
        }
        ort[m] *= scale;
        h[(m, m - 1)] = scale * g;
    }

    // Accumulate the transformations (Algol's ortran); the Householder
    // vectors live below the subdiagonal of h.
    for m in (1..=high - 1).rev() {
        if h[(m, m - 1)] == 0.0 {
            continue;
        }
        for i in m + 1..=high {
            ort[i] = h[(i, m - 1)];
        }
        for j in m..=high {
            let mut g = 0.0;
            for i in m..=high {
                g += ort[i] * z[(i, j)];
            }
            // double division avoids possible underflow
            g = (g / ort[m]) / h[(m, m - 1)];
            for i in m..=high {
                z[(i, j)] += g * ort[i];
            }
        }
    }

    // Clear the Householder storage below the subdiagonal; the similarity
    // has exact zeros there.
    for i in 2..n {
        for j in 0..i - 1 {
            h[(i, j)] = 0.0;
        }
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix, to real Schur form.
/// Returns the eigenvalues as parallel (re, im) vectors.
fn francis_qr(h: &mut Matrix, z: &mut Matrix) -> Result<(Vec<f64>, Vec<f64>), NumError> {
    let nn = h.rows();
    let low = 0usize;
    let high = nn - 1;
    let eps = 2.0_f64.powi(-52);

    let mut d = vec![0.0; nn];
    let mut e = vec![0.0; nn];

    let mut norm = 0.0;
    for i in 0..nn {
        for j in i.saturating_sub(1)..nn {
            norm += h[(i, j)].abs();
        }
    }

    let mut n = high;
    let mut exshift = 0.0;
    let mut iter = 0usize;
    let (mut p, mut q, mut r, mut s, mut zz, mut w, mut x, mut y);

    loop {
        // Look for a single small subdiagonal element.
        let mut l = n;
        while l > low {
            s = h[(l - 1, l - 1)].abs() + h[(l, l)].abs();
            if s == 0.0 {
                s = norm;
            }
            if h[(l, l - 1)].abs() <= eps * s {
                break;
            }
            l -= 1;
        }

        if l == n {
            // One root found.
            h[(n, n)] += exshift;
            d[n] = h[(n, n)];
            e[n] = 0.0;
            iter = 0;
            if n == low {
                break;
            }
            n -= 1;
        } else if l + 1 == n {
            // Two roots found.
            w = h[(n, n - 1)] * h[(n - 1, n)];
            p = (h[(n - 1, n - 1)] - h[(n, n)]) / 2.0;
            q = p * p + w;
            zz = q.abs().sqrt();
            h[(n, n)] += exshift;
            h[(n - 1, n - 1)] += exshift;
            x = h[(n, n)];

            if q >= 0.0 {
                // Real pair: split the block with a rotation.
                zz = if p >= 0.0 { p + zz } else { p - zz };
                d[n - 1] = x + zz;
                d[n] = if zz != 0.0 { x - w / zz } else { d[n - 1] };
                e[n - 1] = 0.0;
                e[n] = 0.0;
                x = h[(n, n - 1)];
                s = x.abs() + zz.abs();
                if s != 0.0 {
                    p = x / s;
                    q = zz / s;
                    r = (p * p + q * q).sqrt();
                    p /= r;
                    q /= r;
                    for j in n - 1..nn {
                        zz = h[(n - 1, j)];
                        h[(n - 1, j)] = q * zz + p * h[(n, j)];
                        h[(n, j)] = q * h[(n, j)] - p * zz;
                    }
                    for i in 0..=n {
                        zz = h[(i, n - 1)];
                        h[(i, n - 1)] = q * zz + p * h[(i, n)];
                        h[(i, n)] = q * h[(i, n)] - p * zz;
                    }
                    for i in low..=high {
                        zz = z[(i, n - 1)];
                        z[(i, n - 1)] = q * zz + p * z[(i, n)];
                        z[(i, n)] = q * z[(i, n)] - p * zz;
                    }
                }
            } else {
                // Complex conjugate pair.
                d[n - 1] = x + p;
                d[n] = x + p;
                e[n - 1] = zz;
                e[n] = -zz;
            }
            iter = 0;
            if n < low + 2 {
                break;
            }
            n -= 2;
        } else {
            // No convergence yet: form a shift.
            x = h[(n, n)];
            y = h[(n - 1, n - 1)];
            w = h[(n, n - 1)] * h[(n - 1, n)];

            if iter == 10 || iter == 20 {
                // Wilkinson's exceptional shift.
                exshift += x;
                for i in low..=n {
                    h[(i, i)] -= x;
                }
                s = h[(n, n - 1)].abs() + h[(n - 1, n - 2)].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            if iter == 30 {
                // MATLAB's ad hoc shift.
                s = (y - x) / 2.0;
                s = s * s + w;
                if s > 0.0 {
                    s = s.sqrt();
                    if y < x {
                        s = -s;
                    }
                    s = x - w / ((y - x) / 2.0 + s);
                    for i in low..=n {
                        h[(i, i)] -= s;
                    }
                    exshift += s;
                    x = 0.964;
                    y = x;
                    w = x;
                }
            }

            iter += 1;
            if iter > MAX_ITER_PER_EIG {
                return Err(NumError::NoConvergence);
            }

            // Look for two consecutive small subdiagonal elements.
            let mut m = n - 2;
            loop {
                zz = h[(m, m)];
                r = x - zz;
                s = y - zz;
                p = (r * s - w) / h[(m + 1, m)] + h[(m, m + 1)];
                q = h[(m + 1, m + 1)] - zz - r - s;
                r = h[(m + 2, m + 1)];
                s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                if h[(m, m - 1)].abs() * (q.abs() + r.abs())
                    < eps
                        * (p.abs() * (h[(m - 1, m - 1)].abs() + zz.abs() + h[(m + 1, m + 1)].abs()))
                {
                    break;
                }
                m -= 1;
            }
            for i in m + 2..=n {
                h[(i, i - 2)] = 0.0;
                if i > m + 2 {
                    h[(i, i - 3)] = 0.0;
                }
            }

            // Double QR step on rows l..=n and columns m..=n.
            for k in m..n {
                let notlast = k != n - 1;
                if k != m {
                    p = h[(k, k - 1)];
                    q = h[(k + 1, k - 1)];
                    r = if notlast { h[(k + 2, k - 1)] } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x == 0.0 {
                        continue;
                    }
                    p /= x;
                    q /= x;
                    r /= x;
                }
                s = (p * p + q * q + r * r).sqrt();
                if p < 0.0 {
                    s = -s;
                }
                if s == 0.0 {
                    continue;
                }
                if k != m {
                    h[(k, k - 1)] = -s * x;
                } else if l != m {
                    h[(k, k - 1)] = -h[(k, k - 1)];
                }
                p += s;
                x = p / s;
                y = q / s;
                zz = r / s;
                q /= p;
                r /= p;

                for j in k..nn {
                    p = h[(k, j)] + q * h[(k + 1, j)];
                    if notlast {
                        p += r * h[(k + 2, j)];
                        h[(k + 2, j)] -= p * zz;
                    }
                    h[(k, j)] -= p * x;
                    h[(k + 1, j)] -= p * y;
                }
                for i in 0..=n.min(k + 3) {
                    p = x * h[(i, k)] + y * h[(i, k + 1)];
                    if notlast {
                        p += zz * h[(i, k + 2)];
                        h[(i, k + 2)] -= p * r;
                    }
                    h[(i, k)] -= p;
                    h[(i, k + 1)] -= p * q;
                }
                for i in low..=high {
                    p = x * z[(i, k)] + y * z[(i, k + 1)];
                    if notlast {
                        p += zz * z[(i, k + 2)];
                        z[(i, k + 2)] -= p * r;
                    }
                    z[(i, k)] -= p;
                    z[(i, k + 1)] -= p * q;
                }
            }
        }
    }

    // The bulge chase reads but never rewrites the entries it annihilates
    // below the first subdiagonal; they hold stale pre-reflector values and
    // are structurally zero in the Schur form.
    for i in 2..nn {
        for j in 0..i - 1 {
            h[(i, j)] = 0.0;
        }
    }

    Ok((d, e))
}
