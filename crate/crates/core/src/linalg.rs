//! Small exact-rational linear algebra for ambient dimension <= 4.
//!
//! Everything here works over `BigRational`; nothing in the geometry layer
//! touches floating point.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::traits::{One, Signed, ToPrimitive, Zero};

pub type Rat = BigRational;

pub fn rat_i(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_to_f64(r: &Rat) -> f64 {
    r.to_f64().expect("rational out of f64 range")
}

/// Parse "p/q" or "p" into an exact rational.
pub fn parse_rat(s: &str) -> Option<Rat> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().ok()?;
        let q: BigInt = q.trim().parse().ok()?;
        if q.is_zero() {
            return None;
        }
        Some(Rat::new(p, q))
    } else {
        let p: BigInt = s.parse().ok()?;
        Some(Rat::from_integer(p))
    }
}

pub fn format_rat(r: &Rat) -> String {
    if r.denom().is_one() {
        format!("{}", r.numer())
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Determinant by fraction-free-ish Gaussian elimination (tiny matrices).
pub fn det(m: &[Vec<Rat>]) -> Rat {
    let n = m.len();
    let mut a: Vec<Vec<Rat>> = m.to_vec();
    let mut sign = Rat::one();
    let mut d = Rat::one();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero());
        let pivot = match pivot {
            Some(p) => p,
            None => return Rat::zero(),
        };
        if pivot != col {
            a.swap(pivot, col);
            sign = -sign;
        }
        let p = a[col][col].clone();
        d *= &p;
        for r in col + 1..n {
            if a[r][col].is_zero() {
                continue;
            }
            let f = &a[r][col] / &p;
            for c in col..n {
                let sub = &f * &a[col][c];
                a[r][c] -= sub;
            }
        }
    }
    sign * d
}

/// Solve `a x = b` for square nonsingular `a`; `None` if singular.
pub fn solve(a: &[Vec<Rat>], b: &[Rat]) -> Option<Vec<Rat>> {
    let n = a.len();
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
        let pivot = (col..n).find(|&r| !m[r][col].is_zero())?;
        m.swap(pivot, col);
        let p = m[col][col].clone();
        for c in col..=n {
            m[col][c] = &m[col][c] / &p;
        }
        for r in 0..n {
            if r != col && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                for c in col..=n {
                    let sub = &f * &m[col][c];
                    m[r][c] -= sub;
                }
            }
        }
    }
    Some(m.into_iter().map(|row| row[n].clone()).collect())
}

/// Rank of a list of row vectors.
pub fn rank(rows: &[Vec<Rat>]) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let ncols = rows[0].len();
    let mut a: Vec<Vec<Rat>> = rows.to_vec();
    let mut rk = 0;
    for col in 0..ncols {
        let pivot = (rk..a.len()).find(|&r| !a[r][col].is_zero());
        let pivot = match pivot {
            Some(p) => p,
            None => continue,
        };
        a.swap(pivot, rk);
        let p = a[rk][col].clone();
        for r in rk + 1..a.len() {
            if a[r][col].is_zero() {
                continue;
            }
            let f = &a[r][col] / &p;
            for c in col..ncols {
                let sub = &f * &a[rk][c];
                a[r][c] -= sub;
            }
        }
        rk += 1;
        if rk == a.len() {
            break;
        }
    }
    rk
}

/// A normal to the hyperplane spanned by `diffs` (d-1 vectors in R^d),
/// via cofactor expansion. Returns `None` when the vectors are dependent.
pub fn hyperplane_normal(diffs: &[Vec<Rat>], dim: usize) -> Option<Vec<Rat>> {
    assert_eq!(diffs.len(), dim - 1);
    let mut n = vec![Rat::zero(); dim];
    let mut nonzero = false;
    for j in 0..dim {
        // minor: drop column j
        let minor: Vec<Vec<Rat>> = diffs
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(c, _)| *c != j)
                    .map(|(_, v)| v.clone())
                    .collect()
            })
            .collect();
        let mut d = det(&minor);
        if j % 2 == 1 {
            d = -d;
        }
        if !d.is_zero() {
            nonzero = true;
        }
        n[j] = d;
    }
    if nonzero {
        Some(n)
    } else {
        None
    }
}

/// Scale a nonzero rational vector to a primitive integer vector
/// (positive gcd, orientation preserved).
pub fn primitive_integer(v: &[Rat]) -> Option<Vec<i64>> {
    let mut lcm = BigInt::one();
    for x in v {
        lcm = num::integer::lcm(lcm, x.denom().clone());
    }
    let ints: Vec<BigInt> = v.iter().map(|x| x.numer() * (&lcm / x.denom())).collect();
    let mut g = BigInt::zero();
    for x in &ints {
        g = num::integer::gcd(g, x.abs());
    }
    if g.is_zero() {
        return None;
    }
    ints.iter().map(|x| (x / &g).to_i64()).collect()
}

pub fn gcd_i64(a: i64, b: i64) -> i64 {
    num::integer::gcd(a, b)
}

/// For a primitive integer vector `n`, return `(v, basis)` where
/// `<v, n> = 1` and `basis` spans the lattice kernel of `n`.
///
/// Built from the unimodular column reduction `n V = (1, 0, ..., 0)`.
pub fn kernel_basis(n: &[i64]) -> Option<(Vec<i64>, Vec<Vec<i64>>)> {
    let d = n.len();
    let mut g: Vec<i64> = n.to_vec();
    // columns of V
    let mut v: Vec<Vec<i64>> = (0..d)
        .map(|j| (0..d).map(|i| if i == j { 1 } else { 0 }).collect())
        .collect();
    for i in 1..d {
        // Euclid on (g[0], g[i]) with matching column ops.
        while g[i] != 0 {
            let q = g[0].div_euclid(g[i]);
            g[0] -= q * g[i];
            for r in 0..d {
                let sub = q * v[i][r];
                v[0][r] -= sub;
            }
            g.swap(0, i);
            v.swap(0, i);
        }
    }
    if g[0] == -1 {
        g[0] = 1;
        for r in 0..d {
            v[0][r] = -v[0][r];
        }
    }
    if g[0] != 1 {
        return None; // not primitive
    }
    let first = v[0].clone();
    let rest = v[1..].to_vec();
    Some((first, rest))
}

/// All size-k index combinations of 0..n, lexicographic.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        // advance
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn det_2x2() {
        let m = vec![vec![rat_i(2), rat_i(1)], vec![rat_i(5), rat_i(3)]];
        assert_eq!(det(&m), rat_i(1));
    }

    #[test]
    fn solve_3x3() {
        let a = vec![
            vec![rat_i(1), rat_i(0), rat_i(2)],
            vec![rat_i(0), rat_i(3), rat_i(0)],
            vec![rat_i(1), rat_i(1), rat_i(1)],
        ];
        let b = vec![rat_i(5), rat_i(6), rat_i(4)];
        let x = solve(&a, &b).unwrap();
        assert_eq!(x, vec![rat_i(-1), rat_i(2), rat_i(3)]);
    }

    #[test]
    fn kernel_basis_pairing() {
        for n in [
            vec![1, 0],
            vec![1, -1],
            vec![2, 3],
            vec![3, -5, 7],
            vec![1, 2, 3, 4].iter().map(|x| x - 1).collect::<Vec<_>>(), // (0,1,2,3)
        ] {
            let g = n.iter().fold(0i64, |a, &b| gcd_i64(a, b.abs()));
            if g != 1 {
                continue;
            }
            let (v, basis) = kernel_basis(&n).unwrap();
            let dot = |a: &[i64], b: &[i64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<i64>();
            assert_eq!(dot(&v, &n), 1);
            assert_eq!(basis.len(), n.len() - 1);
            for b in &basis {
                assert_eq!(dot(b, &n), 0);
            }
        }
    }

    #[test]
    fn kernel_rejects_non_primitive() {
        assert!(kernel_basis(&[2, 4]).is_none());
    }

    #[test]
    fn combos() {
        assert_eq!(combinations(4, 2).len(), 6);
        assert_eq!(combinations(3, 3), vec![vec![0, 1, 2]]);
    }

    #[test]
    fn parse_and_format() {
        assert_eq!(parse_rat("-1/4").unwrap(), rat(-1, 4));
        assert_eq!(parse_rat("3").unwrap(), rat_i(3));
        assert!(parse_rat("1/0").is_none());
        assert_eq!(format_rat(&rat(-1, 4)), "-1/4");
    }
}
