//! Exact rational arithmetic helpers for the combinatorial geometry.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

pub type Rat = BigRational;

pub fn rat(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

/// Exact rational from an `f64` (every finite double is a rational).
pub fn rat_from_f64(v: f64) -> Rat {
    Rat::from_float(v).expect("finite float")
}

pub fn rat_to_f64(v: &Rat) -> f64 {
    v.to_f64().expect("rational fits in f64")
}

pub fn rvec(v: &[i64]) -> Vec<Rat> {
    v.iter().map(|&c| rat(c)).collect()
}

pub fn rvec_to_f64(v: &[Rat]) -> Vec<f64> {
    v.iter().map(rat_to_f64).collect()
}

pub fn rdot(a: &[Rat], b: &[Rat]) -> Rat {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn rdot_int(a: &[i64], b: &[Rat]) -> Rat {
    a.iter().zip(b).map(|(&x, y)| y * BigInt::from(x)).sum()
}

pub fn rsub(a: &[Rat], b: &[Rat]) -> Vec<Rat> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn radd(a: &[Rat], b: &[Rat]) -> Vec<Rat> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn rscale(a: &[Rat], c: &Rat) -> Vec<Rat> {
    a.iter().map(|x| x * c).collect()
}

/// gcd of the absolute values of the entries.
pub fn gcd_vec(v: &[i64]) -> i64 {
    v.iter().fold(0i64, |g, &c| g.gcd(&c.abs()))
}

/// Is the integer vector primitive (gcd of entries = 1)?
pub fn is_primitive(v: &[i64]) -> bool {
    gcd_vec(v) == 1
}

/// Scale a nonzero rational vector to a primitive integer vector with the
/// same direction.
pub fn primitive_direction(v: &[Rat]) -> Option<Vec<i64>> {
    if v.iter().all(|c| c.is_zero()) {
        return None;
    }
    let mut lcm = BigInt::from(1);
    for c in v {
        lcm = lcm.lcm(c.denom());
    }
    let ints: Vec<BigInt> = v.iter().map(|c| c.numer() * (&lcm / c.denom())).collect();
    let mut g = BigInt::zero();
    for c in &ints {
        g = g.gcd(&c.abs());
    }
    Some(ints.iter().map(|c| (c / &g).to_i64().expect("primitive direction fits i64")).collect())
}

/// Solve the square rational system `A x = b` exactly by fraction-free
/// Gaussian elimination. Returns `None` if `A` is singular.
pub fn rsolve(a: &[Vec<Rat>], b: &[Rat]) -> Option<Vec<Rat>> {
    let n = a.len();
    assert!(a.iter().all(|r| r.len() == n));
    assert_eq!(b.len(), n);
    let mut m: Vec<Vec<Rat>> = a
        .iter()
        .zip(b)
        .map(|(row, rhs)| {
            let mut r = row.clone();
            r.push(rhs.clone());
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, piv);
        let d = m[col][col].clone();
        for r in (col + 1)..n {
            if m[r][col].is_zero() {
                continue;
            }
            let f = &m[r][col] / &d;
            for j in col..=n {
                let v = &m[col][j] * &f;
                m[r][j] = &m[r][j] - v;
            }
        }
    }
    let mut x = vec![Rat::zero(); n];
    for col in (0..n).rev() {
        let mut s = m[col][n].clone();
        for j in (col + 1)..n {
            s -= &m[col][j] * &x[j];
        }
        x[col] = s / &m[col][col];
    }
    Some(x)
}

/// Exact determinant of a square integer matrix.
pub fn idet(rows: &[Vec<i64>]) -> BigInt {
    let n = rows.len();
    let m: Vec<Vec<Rat>> = rows.iter().map(|r| rvec(r)).collect();
    let mut det = Rat::from_integer(BigInt::from(1));
    let mut a = m;
    for col in 0..n {
        let piv = match (col..n).find(|&r| !a[r][col].is_zero()) {
            Some(p) => p,
            None => return BigInt::zero(),
        };
        if piv != col {
            a.swap(col, piv);
            det = -det;
        }
        let d = a[col][col].clone();
        det *= &d;
        for r in (col + 1)..n {
            if a[r][col].is_zero() {
                continue;
            }
            let f = &a[r][col] / &d;
            for j in col..n {
                let v = &a[col][j] * &f;
                a[r][j] = &a[r][j] - v;
            }
        }
    }
    debug_assert!(det.is_integer());
    det.to_integer()
}

/// Rank of a set of integer vectors (exact).
pub fn irank(vectors: &[Vec<i64>]) -> usize {
    if vectors.is_empty() {
        return 0;
    }
    let cols = vectors[0].len();
    let mut m: Vec<Vec<Rat>> = vectors.iter().map(|v| rvec(v)).collect();
    let mut rank = 0;
    for col in 0..cols {
        let piv = (rank..m.len()).find(|&r| !m[r][col].is_zero());
        let piv = match piv {
            Some(p) => p,
            None => continue,
        };
        m.swap(rank, piv);
        let d = m[rank][col].clone();
        for r in (rank + 1)..m.len() {
            if m[r][col].is_zero() {
                continue;
            }
            let f = &m[r][col] / &d;
            for j in col..cols {
                let v = &m[rank][j] * &f;
                m[r][j] = &m[r][j] - v;
            }
        }
        rank += 1;
        if rank == m.len() {
            break;
        }
    }
    rank
}
