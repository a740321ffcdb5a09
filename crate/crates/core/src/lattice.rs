//! Integer lattice helpers: gcds and the rank/index of the group generated
//! by a finite set of integer vectors.

pub fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.unsigned_abs(), b.unsigned_abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a as i64
}

pub fn gcd_all<I: IntoIterator<Item = i64>>(values: I) -> i64 {
    values.into_iter().fold(0, gcd)
}

/// Index of the subgroup of `Z^d` generated by `vectors`, or `None` when
/// the generated group has rank < d.
///
/// Row-reduces the generator matrix to Hermite form with extended gcd
/// steps; the index is the absolute product of the pivots.
pub fn generated_index(vectors: &[Vec<i64>], dim: usize) -> Option<u128> {
    let mut rows: Vec<Vec<i128>> = vectors
        .iter()
        .map(|v| v.iter().map(|&c| c as i128).collect())
        .collect();
    let mut pivots = Vec::with_capacity(dim);
    let mut top = 0;
    for col in 0..dim {
        // Euclid on the column below `top` until a single nonzero remains.
        loop {
            let nonzero: Vec<usize> = (top..rows.len()).filter(|&r| rows[r][col] != 0).collect();
            if nonzero.len() <= 1 {
                break;
            }
            let pivot = *nonzero
                .iter()
                .min_by_key(|&&r| rows[r][col].unsigned_abs())
                .unwrap();
            for &r in &nonzero {
                if r == pivot {
                    continue;
                }
                let f = rows[r][col] / rows[pivot][col];
                let (src, dst) = if pivot < r {
                    let (a, b) = rows.split_at_mut(r);
                    (&a[pivot], &mut b[0])
                } else {
                    let (a, b) = rows.split_at_mut(pivot);
                    (&b[0], &mut a[r])
                };
                for (d, s) in dst.iter_mut().zip(src.iter()) {
                    *d -= f * s;
                }
            }
        }
        let r = (top..rows.len()).find(|&r| rows[r][col] != 0)?;
        rows.swap(top, r);
        pivots.push(rows[top][col].unsigned_abs());
        top += 1;
    }
    Some(pivots.into_iter().product())
}

/// Period of a one-dimensional walk with the given increments: the gcd of
/// the lengths of its elementary zero-sum loops. Returns `None` when no
/// loop exists (all increments of one strict sign).
pub fn loop_period(increments: &[i64]) -> Option<i64> {
    let mut g = 0;
    if increments.contains(&0) {
        g = 1;
    }
    for &p in increments.iter().filter(|&&y| y > 0) {
        for &n in increments.iter().filter(|&&y| y < 0) {
            let d = gcd(p, n);
            g = gcd(g, (p - n) / d);
        }
    }
    (g != 0).then_some(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_of_standard_and_even_lattices() {
        let std = vec![vec![1, 0], vec![-1, 0], vec![0, 1], vec![0, -1]];
        assert_eq!(generated_index(&std, 2), Some(1));
        let even = vec![vec![2, 0], vec![0, 2], vec![-2, 0], vec![0, -2]];
        assert_eq!(generated_index(&even, 2), Some(4));
        let skew = vec![vec![1, 1], vec![1, -1]];
        assert_eq!(generated_index(&skew, 2), Some(2));
        let line = vec![vec![1, 1], vec![2, 2]];
        assert_eq!(generated_index(&line, 2), None);
        let mixed = vec![vec![3, 0], vec![5, 0], vec![0, 1]];
        assert_eq!(generated_index(&mixed, 2), Some(1));
    }

    #[test]
    fn periods() {
        assert_eq!(loop_period(&[1, -1]), Some(2));
        assert_eq!(loop_period(&[1, -1, 0]), Some(1));
        assert_eq!(loop_period(&[2, -1]), Some(3));
        assert_eq!(loop_period(&[2, -1, 1]), Some(1));
        assert_eq!(loop_period(&[2, -2]), Some(2));
        assert_eq!(loop_period(&[1, 2]), None);
    }
}
