//! One-sided Jacobi SVD for the small dense matrices of a mortality fit.

const MAX_SWEEPS: usize = 100;

/// Thin SVD `A = U diag(s) Vᵀ` of a `rows × cols` matrix.
#[derive(Debug, Clone)]
pub(crate) struct Svd {
    /// Left singular vectors, one `Vec` of length `rows` per column.
    pub u: Vec<Vec<f64>>,
    pub s: Vec<f64>,
    /// Right singular vectors, one `Vec` of length `cols` per column.
    pub v: Vec<Vec<f64>>,
}

impl Svd {
    /// Index of the largest singular value.
    pub fn leading(&self) -> Option<usize> {
        self.s
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn rotate(a: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (left, right) = a.split_at_mut(q);
    for (x, y) in left[p].iter_mut().zip(right[0].iter_mut()) {
        let (xp, yq) = (*x, *y);
        *x = c * xp - s * yq;
        *y = s * xp + c * yq;
    }
}

/// Hestenes one-sided Jacobi: rotates column pairs of `A` until all are
/// mutually orthogonal. `columns[j]` is column `j` of `A`.
pub(crate) fn jacobi_svd(mut columns: Vec<Vec<f64>>) -> Svd {
    let n = columns.len();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let eps = f64::EPSILON;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = dot(&columns[p], &columns[p]);
                let beta = dot(&columns[q], &columns[q]);
                let gamma = dot(&columns[p], &columns[q]);
                if alpha == 0.0 || beta == 0.0 || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut columns, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }
    let s: Vec<f64> = columns.iter().map(|c| dot(c, c).sqrt()).collect();
    let u = columns
        .into_iter()
        .zip(&s)
        .map(|(c, &norm)| {
            if norm > 0.0 {
                c.into_iter().map(|x| x / norm).collect()
            } else {
                c
            }
        })
        .collect();
    Svd { u, s, v }
}
