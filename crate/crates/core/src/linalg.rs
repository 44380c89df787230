//! Small dense-free solvers for the time stepper: a banded LU with partial
//! pivoting (LAPACK `gbtrf`/`gbtrs` layout) for the step matrix, and the
//! classical double-sweep (Thomas) solve for tridiagonal systems.

use crate::Error;

/// Band matrix in LAPACK storage: entry (i, j) lives at
/// `ab[(kl+ku+i-j)·n + j]`; the extra `kl` storage rows on top hold the fill
/// produced by row interchanges.
#[derive(Clone, Debug)]
pub struct BandedMatrix {
    pub n: usize,
    pub kl: usize,
    pub ku: usize,
    ab: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        BandedMatrix { n, kl, ku, ab: vec![0.0; (2 * kl + ku + 1) * n] }
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.n && j < self.n);
        debug_assert!(j as isize - i as isize <= self.ku as isize);
        debug_assert!(i as isize - j as isize <= self.kl as isize);
        (self.kl + self.ku + i - j) * self.n + j
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let s = self.slot(i, j);
        self.ab[s] = v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j + self.kl < i || i + self.ku < j {
            return 0.0;
        }
        self.ab[self.slot(i, j)]
    }

    /// Factor in place with partial pivoting.
    pub fn factor(self) -> Result<BandedLu, Error> {
        let BandedMatrix { n, kl, ku, mut ab } = self;
        let kv = kl + ku;
        let stride = n;
        let at = |row: usize, col: usize| row * stride + col;
        let mut ipiv = vec![0usize; n];
        let mut ju = 0usize;

        for j in 0..n {
            let km = kl.min(n - 1 - j);
            // pivot among matrix rows j..=j+km (storage rows kv..=kv+km)
            let mut jp = 0usize;
            let mut best = ab[at(kv, j)].abs();
            for t in 1..=km {
                let v = ab[at(kv + t, j)].abs();
                if v > best {
                    best = v;
                    jp = t;
                }
            }
            ipiv[j] = j + jp;
            if ab[at(kv + jp, j)] == 0.0 {
                return Err(Error::SingularSystem {
                    degrees: String::new(),
                    reason: format!("step matrix singular at column {j}"),
                });
            }
            ju = ju.max((j + ku + jp).min(n - 1));
            if jp != 0 {
                for col in j..=ju {
                    let a = kv + j - col;
                    let b = kv + j + jp - col;
                    ab.swap(at(a, col), at(b, col));
                }
            }
            if km > 0 {
                let pivot = ab[at(kv, j)];
                for t in 1..=km {
                    ab[at(kv + t, j)] /= pivot;
                }
                for col in (j + 1)..=ju {
                    let head = ab[at(kv + j - col, col)];
                    if head != 0.0 {
                        for t in 1..=km {
                            ab[at(kv + j + t - col, col)] -= ab[at(kv + t, j)] * head;
                        }
                    }
                }
            }
        }
        Ok(BandedLu { n, kl, ku, ab, ipiv })
    }
}

/// Factored band matrix; `solve` costs O(n·(kl+ku)) per right-hand side.
#[derive(Clone, Debug)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    ab: Vec<f64>,
    ipiv: Vec<usize>,
}

impl BandedLu {
    pub fn solve(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.n);
        let kv = self.kl + self.ku;
        let at = |row: usize, col: usize| row * self.n + col;
        for j in 0..self.n.saturating_sub(1) {
            let p = self.ipiv[j];
            if p != j {
                b.swap(j, p);
            }
            let km = self.kl.min(self.n - 1 - j);
            for t in 1..=km {
                b[j + t] -= self.ab[at(kv + t, j)] * b[j];
            }
        }
        for j in (0..self.n).rev() {
            b[j] /= self.ab[at(kv, j)];
            let lo = j.saturating_sub(kv);
            for i in lo..j {
                b[i] -= self.ab[at(kv + i - j, j)] * b[j];
            }
        }
    }
}

/// Double-sweep solve of a tridiagonal system. `sub`/`sup` have length n−1.
/// No pivoting; the compact-scheme systems this serves are strictly
/// diagonally dominant for D, h > 0, and a vanishing sweep pivot is reported
/// rather than propagated.
pub fn solve_tridiagonal(
    sub: &[f64],
    diag: &[f64],
    sup: &[f64],
    rhs: &mut [f64],
) -> Result<(), Error> {
    let n = diag.len();
    assert!(n >= 2 && sub.len() == n - 1 && sup.len() == n - 1 && rhs.len() == n);
    let mut work = vec![0.0; n];
    let mut piv = diag[0];
    if piv == 0.0 {
        return Err(Error::SingularSystem {
            degrees: String::new(),
            reason: "tridiagonal sweep pivot vanished at row 0".into(),
        });
    }
    rhs[0] /= piv;
    for i in 1..n {
        work[i] = sup[i - 1] / piv;
        piv = diag[i] - sub[i - 1] * work[i];
        if piv == 0.0 {
            return Err(Error::SingularSystem {
                degrees: String::new(),
                reason: format!("tridiagonal sweep pivot vanished at row {i}"),
            });
        }
        rhs[i] = (rhs[i] - sub[i - 1] * rhs[i - 1]) / piv;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= work[i + 1] * rhs[i + 1];
    }
    Ok(())
}
