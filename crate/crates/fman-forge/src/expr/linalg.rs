//! Linear solves and matrix inversion over jets.
//!
//! Values are factored once (LU, partial pivoting); derivatives come from
//! implicit differentiation of `A x = b`:
//!
//!   x_s  = A^-1 (b_s - A_s x)
//!   x_st = A^-1 (b_st - A_st x - A_s x_t - A_t x_s)
//!
//! so no derivative of the factorization itself is ever needed.

use super::jet::{sym_index, Jet, Scalar};
use crate::error::{Error, Result};

/// Relative singularity threshold: |det| below this multiple of the product
/// of Euclidean row norms raises `SingularSystem`.
pub const SINGULARITY_RATIO: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct JetMatrix<S: Scalar> {
    pub n: usize,
    entries: Vec<Jet<S>>,
}

impl<S: Scalar> JetMatrix<S> {
    pub fn from_rows(n: usize, entries: Vec<Jet<S>>) -> Self {
        assert_eq!(entries.len(), n * n);
        JetMatrix { n, entries }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Jet<S>) -> Self {
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                entries.push(f(i, j));
            }
        }
        JetMatrix { n, entries }
    }

    pub fn at(&self, i: usize, j: usize) -> &Jet<S> {
        &self.entries[i * self.n + j]
    }

    pub fn order(&self) -> usize {
        self.entries.iter().map(|e| e.order()).min().unwrap_or(0)
    }

    pub fn slots(&self) -> usize {
        self.entries[0].slots()
    }

    pub fn values(&self) -> Vec<S> {
        self.entries.iter().map(|e| e.value()).collect()
    }

    pub fn mat_vec(&self, v: &[Jet<S>]) -> Vec<Jet<S>> {
        (0..self.n)
            .map(|i| {
                let mut acc = self.at(i, 0).mul(&v[0]);
                for j in 1..self.n {
                    acc = acc.add(&self.at(i, j).mul(&v[j]));
                }
                acc
            })
            .collect()
    }
}

struct Lu<S: Scalar> {
    n: usize,
    a: Vec<S>,
    piv: Vec<usize>,
}

/// Factor the value matrix; errors out when |det| falls below
/// `SINGULARITY_RATIO` times the product of row norms.
fn lu_factor<S: Scalar>(values: &[S], n: usize) -> Result<Lu<S>> {
    let mut row_norm_product = 1.0f64;
    for i in 0..n {
        let norm: f64 = (0..n).map(|j| values[i * n + j].abs().powi(2)).sum::<f64>().sqrt();
        row_norm_product *= norm;
    }
    let threshold = SINGULARITY_RATIO * row_norm_product;

    let mut a = values.to_vec();
    let mut piv = Vec::with_capacity(n);
    let mut det_mag = 1.0f64;
    for col in 0..n {
        let mut best = col;
        let mut best_mag = a[col * n + col].abs();
        for r in col + 1..n {
            let mag = a[r * n + col].abs();
            if mag > best_mag {
                best = r;
                best_mag = mag;
            }
        }
        piv.push(best);
        if best != col {
            for j in 0..n {
                a.swap(col * n + j, best * n + j);
            }
        }
        let pivot = a[col * n + col];
        det_mag *= pivot.abs();
        if pivot.abs() == 0.0 {
            return Err(Error::SingularSystem {
                det_mag: 0.0,
                threshold,
            });
        }
        for r in col + 1..n {
            let factor = a[r * n + col] / pivot;
            a[r * n + col] = factor;
            for j in col + 1..n {
                let sub = factor * a[col * n + j];
                a[r * n + j] = a[r * n + j] - sub;
            }
        }
    }
    if det_mag < threshold {
        return Err(Error::SingularSystem { det_mag, threshold });
    }
    Ok(Lu { n, a, piv })
}

impl<S: Scalar> Lu<S> {
    fn solve(&self, rhs: &[S]) -> Vec<S> {
        let n = self.n;
        let mut x = rhs.to_vec();
        for col in 0..n {
            x.swap(col, self.piv[col]);
            for r in col + 1..n {
                let sub = self.a[r * n + col] * x[col];
                x[r] = x[r] - sub;
            }
        }
        for col in (0..n).rev() {
            x[col] = x[col] / self.a[col * n + col];
            for r in 0..col {
                let sub = self.a[r * n + col] * x[col];
                x[r] = x[r] - sub;
            }
        }
        x
    }
}

/// Solve `A x = b` for jets, propagating first and second derivatives.
pub fn solve_linear_jet<S: Scalar>(a: &JetMatrix<S>, b: &[Jet<S>]) -> Result<Vec<Jet<S>>> {
    let n = a.n;
    assert_eq!(b.len(), n);
    let order = a.order().min(b.iter().map(|j| j.order()).min().unwrap_or(0));
    let slots = a.slots();

    let lu = lu_factor(&a.values(), n)?;
    let x0 = lu.solve(&b.iter().map(|j| j.value()).collect::<Vec<_>>());

    let mut xg: Vec<Vec<S>> = Vec::new();
    if order >= 1 {
        for s in 0..slots {
            let rhs: Vec<S> = (0..n)
                .map(|i| {
                    let mut acc = b[i].partial(s);
                    for j in 0..n {
                        acc = acc - a.at(i, j).partial(s) * x0[j];
                    }
                    acc
                })
                .collect();
            xg.push(lu.solve(&rhs));
        }
    }

    let mut xh: Vec<Vec<S>> = Vec::new();
    if order >= 2 {
        for s in 0..slots {
            for t in s..slots {
                let rhs: Vec<S> = (0..n)
                    .map(|i| {
                        let mut acc = b[i].second(s, t);
                        for j in 0..n {
                            acc = acc
                                - a.at(i, j).second(s, t) * x0[j]
                                - a.at(i, j).partial(s) * xg[t][j]
                                - a.at(i, j).partial(t) * xg[s][j];
                        }
                        acc
                    })
                    .collect();
                xh.push(lu.solve(&rhs));
            }
        }
    }

    Ok((0..n)
        .map(|i| {
            Jet::from_parts(
                x0[i],
                slots,
                order,
                |s| xg[s][i],
                |s, t| xh[sym_index(slots, s, t)][i],
            )
        })
        .collect())
}

/// Invert a jet matrix entry-wise, with derivatives from
/// `d(A^-1) = -A^-1 dA A^-1` and its second-order analogue.
pub fn invert_matrix_jet<S: Scalar>(a: &JetMatrix<S>) -> Result<JetMatrix<S>> {
    let n = a.n;
    let order = a.order();
    let slots = a.slots();
    let lu = lu_factor(&a.values(), n)?;

    // Columns of the value inverse.
    let mut inv = vec![S::zero(); n * n];
    for c in 0..n {
        let mut e = vec![S::zero(); n];
        e[c] = S::one();
        let col = lu.solve(&e);
        for r in 0..n {
            inv[r * n + c] = col[r];
        }
    }

    let mat_mul = |lhs: &dyn Fn(usize, usize) -> S, rhs: &dyn Fn(usize, usize) -> S| {
        let mut out = vec![S::zero(); n * n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = S::zero();
                for k in 0..n {
                    acc = acc + lhs(i, k) * rhs(k, j);
                }
                out[i * n + j] = acc;
            }
        }
        out
    };
    let x = |i: usize, j: usize| inv[i * n + j];

    let mut xg: Vec<Vec<S>> = Vec::new();
    if order >= 1 {
        for s in 0..slots {
            let ag = |i: usize, j: usize| a.at(i, j).partial(s);
            let agx = mat_mul(&ag, &x);
            let mut m = mat_mul(&x, &|i, j| agx[i * n + j]);
            for v in &mut m {
                *v = -*v;
            }
            xg.push(m);
        }
    }

    let mut xh: Vec<Vec<S>> = Vec::new();
    if order >= 2 {
        for s in 0..slots {
            for t in s..slots {
                // A_st X + A_s X_t + A_t X_s, then multiply by -A^-1 on the left.
                let ah = |i: usize, j: usize| a.at(i, j).second(s, t);
                let mut inner = mat_mul(&ah, &x);
                let a_s = |i: usize, j: usize| a.at(i, j).partial(s);
                let a_t = |i: usize, j: usize| a.at(i, j).partial(t);
                let term2 = mat_mul(&a_s, &|i, j| xg[t][i * n + j]);
                let term3 = mat_mul(&a_t, &|i, j| xg[s][i * n + j]);
                for i in 0..n * n {
                    inner[i] = inner[i] + term2[i] + term3[i];
                }
                let mut m = mat_mul(&x, &|i, j| inner[i * n + j]);
                for v in &mut m {
                    *v = -*v;
                }
                xh.push(m);
            }
        }
    }

    Ok(JetMatrix::from_fn(n, |i, j| {
        Jet::from_parts(
            inv[i * n + j],
            slots,
            order,
            |s| xg[s][i * n + j],
            |s, t| xh[sym_index(slots, s, t)][i * n + j],
        )
    }))
}
