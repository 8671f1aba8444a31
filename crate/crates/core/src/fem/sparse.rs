//! Compressed sparse rows.

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col: Vec<usize>,
    pub val: Vec<f64>,
}

impl CsrMatrix {
    /// Sums duplicate entries.
    pub fn from_triplets(n: usize, mut entries: Vec<(usize, usize, f64)>) -> CsrMatrix {
        entries.sort_unstable_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0; n + 1];
        let mut col = Vec::with_capacity(entries.len() / 2);
        let mut val: Vec<f64> = Vec::with_capacity(entries.len() / 2);
        let mut last = None;
        for (i, j, v) in entries {
            if last == Some((i, j)) {
                *val.last_mut().unwrap() += v;
            } else {
                col.push(j);
                val.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix { n, row_ptr, col, val }
    }

    pub fn mul_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let r = self.row_ptr[i]..self.row_ptr[i + 1];
            *yi = self.col[r.clone()].iter().zip(&self.val[r]).map(|(&j, v)| v * x[j]).sum();
        }
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_into(x, &mut y);
        y
    }

    /// `|b - A x| / |b|`, or `|A x|` when `b` vanishes.
    pub fn relative_residual(&self, x: &[f64], b: &[f64]) -> f64 {
        let r: f64 = self.mul(x).iter().zip(b).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let scale = dot(b, b).sqrt();
        if scale > 0.0 {
            r / scale
        } else {
            r
        }
    }

    /// `x^T A x`.
    pub fn energy(&self, x: &[f64]) -> f64 {
        dot(x, &self.mul(x))
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
