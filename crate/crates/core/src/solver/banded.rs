//! Banded LU with partial pivoting for the Newton systems. Lexicographic
//! node ordering keeps the wide-stencil Jacobian inside a band of width
//! about one lattice row.

pub(crate) struct BandedMatrix {
    n: usize,
    lower: usize,
    upper: usize,
    /// Row-major storage; row `i` holds columns `i - lower ..= i + lower + upper`
    /// (the extra `lower` diagonals absorb pivoting fill-in).
    data: Vec<f64>,
    width: usize,
}

impl BandedMatrix {
    pub fn new(n: usize, lower: usize, upper: usize) -> Self {
        let width = 2 * lower + upper + 1;
        BandedMatrix {
            n,
            lower,
            upper,
            data: vec![0.0; n * width],
            width,
        }
    }

    #[inline]
    fn slot(&self, row: usize, col: usize) -> Option<usize> {
        let lo = row.saturating_sub(self.lower);
        if col < lo || col > row + self.lower + self.upper || col >= self.n {
            return None;
        }
        Some(row * self.width + (col + self.lower - row))
    }

    pub fn add(&mut self, row: usize, col: usize, v: f64) {
        let s = self
            .slot(row, col)
            .expect("entry outside the declared band");
        self.data[s] += v;
    }

    fn get(&self, row: usize, col: usize) -> f64 {
        self.slot(row, col).map(|s| self.data[s]).unwrap_or(0.0)
    }

    fn set(&mut self, row: usize, col: usize, v: f64) {
        let s = self.slot(row, col).expect("entry outside the band");
        self.data[s] = v;
    }

    /// Solves `A x = b` in place, destroying `A`. Returns `None` on a zero
    /// pivot.
    pub fn solve(mut self, b: &mut [f64]) -> Option<()> {
        let n = self.n;
        let reach = self.lower + self.upper;
        for k in 0..n {
            let last_row = (k + self.lower).min(n - 1);
            let (mut piv, mut best) = (k, self.get(k, k).abs());
            for r in k + 1..=last_row {
                let v = self.get(r, k).abs();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if !(best > 0.0) || !best.is_finite() {
                return None;
            }
            let last_col = (k + reach).min(n - 1);
            if piv != k {
                for c in k..=last_col {
                    let a = self.get(k, c);
                    let p = self.get(piv, c);
                    self.set(k, c, p);
                    self.set(piv, c, a);
                }
                b.swap(k, piv);
            }
            let pivot = self.get(k, k);
            for r in k + 1..=last_row {
                let factor = self.get(r, k) / pivot;
                if factor == 0.0 {
                    continue;
                }
                self.set(r, k, 0.0);
                for c in k + 1..=last_col {
                    let v = self.get(r, c) - factor * self.get(k, c);
                    self.set(r, c, v);
                }
                b[r] -= factor * b[k];
            }
        }
        for k in (0..n).rev() {
            let last_col = (k + reach).min(n - 1);
            let mut acc = b[k];
            for c in k + 1..=last_col {
                acc -= self.get(k, c) * b[c];
            }
            b[k] = acc / self.get(k, k);
        }
        b.iter().all(|v| v.is_finite()).then_some(())
    }
}
