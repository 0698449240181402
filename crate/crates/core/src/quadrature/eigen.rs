//! Implicit-shift QL for symmetric tridiagonal matrices, tracking only the
//! first row of the eigenvector matrix (all Golub–Welsch needs).

use rug::{Assign, Float};

use crate::error::{Error, Result};

/// Eigenvalues (ascending) and first eigenvector components of the symmetric
/// tridiagonal matrix with diagonal `diag` and off-diagonal `offdiag`.
pub fn tridiagonal_eigen(diag: &[Float], offdiag: &[Float], precision: u32) -> Result<(Vec<Float>, Vec<Float>)> {
    let n = diag.len();
    assert_eq!(offdiag.len() + 1, n.max(1), "off-diagonal must have n-1 entries");
    let mut d: Vec<Float> = diag.iter().map(|v| Float::with_val(precision, v)).collect();
    let mut e: Vec<Float> = offdiag.iter().map(|v| Float::with_val(precision, v)).collect();
    e.push(Float::new(precision));
    let mut z: Vec<Float> = (0..n).map(|i| Float::with_val(precision, (i == 0) as u32)).collect();

    let mut eps = Float::with_val(precision, 1);
    eps >>= precision;
    let one = Float::with_val(precision, 1);

    let mut f = Float::new(precision);
    let mut b = Float::new(precision);
    let mut g = Float::new(precision);
    let mut r = Float::new(precision);
    let mut s = Float::new(precision);
    let mut c = Float::new(precision);
    let mut p = Float::new(precision);
    let mut tst = Float::new(precision);

    for l in 0..n {
        let mut iterations = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                tst.assign(d[m].abs_ref());
                tst += &*d[m + 1].as_abs();
                tst *= &eps;
                if e[m].is_zero() || *e[m].as_abs() <= tst {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            if iterations == 30 {
                return Err(Error::EigenFailure { dimension: n, index: l });
            }
            iterations += 1;

            g.assign(&d[l + 1] - &d[l]);
            g /= &e[l];
            g /= 2;
            r.assign(g.hypot_ref(&one));
            if g.is_sign_negative() {
                r = -r;
            }
            r += &g;
            g.assign(&e[l] / &r);
            g += &d[m];
            g -= &d[l];

            s.assign(1);
            c.assign(1);
            p.assign(0);
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                f.assign(&s * &e[i]);
                b.assign(&c * &e[i]);
                r.assign(f.hypot_ref(&g));
                e[i + 1].assign(&r);
                if r.is_zero() {
                    d[i + 1] -= &p;
                    e[m].assign(0);
                    underflow = true;
                    break;
                }
                s.assign(&f / &r);
                c.assign(&g / &r);
                g.assign(&d[i + 1] - &p);
                r.assign(&d[i] - &g);
                r *= &s;
                f.assign(&c * &b);
                f *= 2;
                r += &f;
                p.assign(&s * &r);
                d[i + 1].assign(&g + &p);
                g.assign(&c * &r);
                g -= &b;

                f.assign(&z[i + 1]);
                let zi = Float::with_val(precision, &z[i]);
                z[i + 1].assign(&s * &zi);
                z[i + 1] += &c * &f;
                z[i].assign(&c * &zi);
                z[i] -= &s * &f;
            }
            if underflow {
                continue;
            }
            d[l] -= &p;
            e[l].assign(&g);
            e[m].assign(0);
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].partial_cmp(&d[b]).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&i| d[i].clone()).collect();
    let firsts = order.iter().map(|&i| z[i].clone()).collect();
    Ok((values, firsts))
}
