//! Dense row-major matrices and the three matmul orientations backprop
//! needs.

use rand::Rng;

/// Dense real matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor2 {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
}

impl Tensor2 {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Tensor2 {
            rows,
            cols,
            values: vec![0.0; rows * cols],
        }
    }

    pub fn from_values(rows: usize, cols: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), rows * cols, "buffer does not match shape");
        Tensor2 { rows, cols, values }
    }

    /// Glorot-uniform initialization over fan-in and fan-out.
    pub fn glorot<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Self {
        let limit = (6.0 / (rows + cols) as f64).sqrt();
        let values = (0..rows * cols)
            .map(|_| rng.gen_range(-limit..=limit))
            .collect();
        Tensor2 { rows, cols, values }
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.values[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.values[r * self.cols..(r + 1) * self.cols]
    }

    pub fn fill(&mut self, value: f64) {
        self.values.fill(value);
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// `A (n x k) * B (k x m)`.
pub fn matmul(a: &Tensor2, b: &Tensor2) -> Tensor2 {
    assert_eq!(a.cols, b.rows, "inner dimensions differ");
    let mut out = Tensor2::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        let a_row = a.row(i);
        let out_row = out.row_mut(i);
        for (k, &a_ik) in a_row.iter().enumerate() {
            if a_ik == 0.0 {
                continue;
            }
            let b_row = b.row(k);
            for (o, &b_kj) in out_row.iter_mut().zip(b_row) {
                *o += a_ik * b_kj;
            }
        }
    }
    out
}

/// `A^T (k x n) * B (n x m)` without materializing the transpose.
pub fn matmul_tn(a: &Tensor2, b: &Tensor2) -> Tensor2 {
    assert_eq!(a.rows, b.rows, "outer dimensions differ");
    let mut out = Tensor2::zeros(a.cols, b.cols);
    for i in 0..a.rows {
        let a_row = a.row(i);
        let b_row = b.row(i);
        for (k, &a_ik) in a_row.iter().enumerate() {
            if a_ik == 0.0 {
                continue;
            }
            let out_row = out.row_mut(k);
            for (o, &b_ij) in out_row.iter_mut().zip(b_row) {
                *o += a_ik * b_ij;
            }
        }
    }
    out
}

/// `A (n x k) * B^T (k x m)` without materializing the transpose.
pub fn matmul_nt(a: &Tensor2, b: &Tensor2) -> Tensor2 {
    assert_eq!(a.cols, b.cols, "inner dimensions differ");
    let mut out = Tensor2::zeros(a.rows, b.rows);
    for i in 0..a.rows {
        let a_row = a.row(i);
        let out_row = out.row_mut(i);
        for j in 0..b.rows {
            let b_row = b.row(j);
            let mut acc = 0.0;
            for (&x, &y) in a_row.iter().zip(b_row) {
                acc += x * y;
            }
            out_row[j] = acc;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_small_example() {
        let a = Tensor2::from_values(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let b = Tensor2::from_values(3, 2, vec![7.0, 8.0, 9.0, 10.0, 11.0, 12.0]);
        let c = matmul(&a, &b);
        assert_eq!(c.values, vec![58.0, 64.0, 139.0, 154.0]);
    }

    #[test]
    fn transposed_variants_agree_with_explicit_transpose() {
        let a = Tensor2::from_values(2, 3, vec![1.0, -2.0, 0.5, 3.0, 1.5, -1.0]);
        let b = Tensor2::from_values(2, 4, (0..8).map(|i| i as f64 * 0.3 - 1.0).collect());
        let at = Tensor2::from_values(3, 2, vec![1.0, 3.0, -2.0, 1.5, 0.5, -1.0]);
        assert_eq!(matmul_tn(&a, &b).values, matmul(&at, &b).values);

        let c = Tensor2::from_values(3, 3, (0..9).map(|i| (i as f64).sin()).collect());
        let ct = {
            let mut t = Tensor2::zeros(3, 3);
            for i in 0..3 {
                for j in 0..3 {
                    t.values[j * 3 + i] = c.values[i * 3 + j];
                }
            }
            t
        };
        let d = Tensor2::from_values(2, 3, vec![1.0, 0.0, 2.0, -1.0, 1.0, 0.5]);
        assert_eq!(matmul_nt(&d, &c).values, matmul(&d, &ct).values);
    }

    #[test]
    fn glorot_respects_limit() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let t = Tensor2::glorot(30, 20, &mut rng);
        let limit = (6.0 / 50.0f64).sqrt();
        assert!(t.values.iter().all(|v| v.abs() <= limit));
    }
}
