//! Small dense linear algebra and deterministic sampling utilities.
//!
//! All models in this crate live in ambient dimension <= 4 with facet
//! tangent spaces of dimension <= 3, so everything here is written for
//! tiny sizes and favors clarity and determinism over throughput.

/// Dot product.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Euclidean norm.
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `a - b`.
pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// `a + b`.
pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// `a + t * v`.
pub fn axpy(a: &[f64], t: f64, v: &[f64]) -> Vec<f64> {
    a.iter().zip(v).map(|(x, y)| x + t * y).collect()
}

/// `s * a`.
pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

/// Normalize to unit length; returns None for near-zero vectors.
pub fn normalized(a: &[f64]) -> Option<Vec<f64>> {
    let n = norm(a);
    if n < 1e-300 {
        None
    } else {
        Some(scale(a, 1.0 / n))
    }
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    norm(&sub(a, b))
}

/// 2-D cross product (z component).
pub fn cross2(a: &[f64], b: &[f64]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

/// Dense row-major matrix, sized for tangent maps (rows x cols <= 3x3).
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            debug_assert_eq!(row.len(), c);
            data.extend_from_slice(row);
        }
        Mat { rows: r, cols: c, data }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.at(i, j) * v[j]).sum())
            .collect()
    }

    pub fn matmul(&self, other: &Mat) -> Mat {
        debug_assert_eq!(self.cols, other.rows);
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.at(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.at(k, j);
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> Mat {
        let mut out = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.at(i, j));
            }
        }
        out
    }

    pub fn det(&self) -> f64 {
        debug_assert_eq!(self.rows, self.cols);
        match self.rows {
            0 => 1.0,
            1 => self.at(0, 0),
            2 => self.at(0, 0) * self.at(1, 1) - self.at(0, 1) * self.at(1, 0),
            3 => {
                self.at(0, 0) * (self.at(1, 1) * self.at(2, 2) - self.at(1, 2) * self.at(2, 1))
                    - self.at(0, 1)
                        * (self.at(1, 0) * self.at(2, 2) - self.at(1, 2) * self.at(2, 0))
                    + self.at(0, 2)
                        * (self.at(1, 0) * self.at(2, 1) - self.at(1, 1) * self.at(2, 0))
            }
            n => {
                // Gaussian elimination fallback.
                let mut a = self.clone();
                let mut det = 1.0;
                for col in 0..n {
                    let mut piv = col;
                    for r in col + 1..n {
                        if a.at(r, col).abs() > a.at(piv, col).abs() {
                            piv = r;
                        }
                    }
                    if a.at(piv, col).abs() < 1e-300 {
                        return 0.0;
                    }
                    if piv != col {
                        for j in 0..n {
                            let t = a.at(piv, j);
                            a.set(piv, j, a.at(col, j));
                            a.set(col, j, t);
                        }
                        det = -det;
                    }
                    det *= a.at(col, col);
                    for r in col + 1..n {
                        let f = a.at(r, col) / a.at(col, col);
                        for j in col..n {
                            a.set(r, j, a.at(r, j) - f * a.at(col, j));
                        }
                    }
                }
                det
            }
        }
    }

    /// Singular values, descending. Exact for 1x1 and 2x2, Jacobi sweep otherwise.
    pub fn singular_values(&self) -> Vec<f64> {
        let k = self.rows.min(self.cols);
        if k == 0 {
            return vec![];
        }
        if self.rows == 1 || self.cols == 1 {
            return vec![norm(&self.data)];
        }
        if self.rows == 2 && self.cols == 2 {
            let (a, b, c, d) = (self.at(0, 0), self.at(0, 1), self.at(1, 0), self.at(1, 1));
            let e = (a + d) / 2.0;
            let f = (a - d) / 2.0;
            let g = (c + b) / 2.0;
            let h = (c - b) / 2.0;
            let q = (e * e + h * h).sqrt();
            let r = (f * f + g * g).sqrt();
            return vec![q + r, (q - r).abs()];
        }
        // One-sided Jacobi on A^T A.
        let mut ata = self.transpose().matmul(self);
        let n = ata.rows;
        for _ in 0..60 {
            let mut off = 0.0;
            for p in 0..n {
                for q in p + 1..n {
                    off += ata.at(p, q).abs();
                }
            }
            if off < 1e-15 {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    let apq = ata.at(p, q);
                    if apq.abs() < 1e-300 {
                        continue;
                    }
                    let app = ata.at(p, p);
                    let aqq = ata.at(q, q);
                    let theta = -0.5 * (aqq - app).atan2(2.0 * apq);
                    let (c, s) = (theta.cos(), theta.sin());
                    for j in 0..n {
                        let ap = ata.at(p, j);
                        let aq = ata.at(q, j);
                        ata.set(p, j, c * ap - s * aq);
                        ata.set(q, j, s * ap + c * aq);
                    }
                    for i in 0..n {
                        let ap = ata.at(i, p);
                        let aq = ata.at(i, q);
                        ata.set(i, p, c * ap - s * aq);
                        ata.set(i, q, s * ap + c * aq);
                    }
                }
            }
        }
        let mut sv: Vec<f64> = (0..n).map(|i| ata.at(i, i).max(0.0).sqrt()).collect();
        sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
        sv.truncate(k);
        sv
    }
}

/// QR factorization by modified Gram-Schmidt. Returns (Q, diag(R)).
///
/// Only the diagonal of R is needed by the Lyapunov accumulator.
#[allow(clippy::needless_range_loop)]
pub fn qr_gram_schmidt(a: &Mat) -> (Mat, Vec<f64>) {
    let n = a.rows;
    let k = a.cols;
    let mut q = a.clone();
    let mut rdiag = vec![0.0; k];
    for j in 0..k {
        let mut col: Vec<f64> = (0..n).map(|i| q.at(i, j)).collect();
        for p in 0..j {
            let qp: Vec<f64> = (0..n).map(|i| q.at(i, p)).collect();
            let proj = dot(&col, &qp);
            for i in 0..n {
                col[i] -= proj * qp[i];
            }
        }
        let r = norm(&col);
        rdiag[j] = r;
        if r > 1e-300 {
            for i in 0..n {
                q.set(i, j, col[i] / r);
            }
        } else {
            for i in 0..n {
                q.set(i, j, if i == j { 1.0 } else { 0.0 });
            }
        }
    }
    (q, rdiag)
}

/// Solve `A x = b` for square A by Gaussian elimination with partial pivoting.
#[allow(clippy::needless_range_loop)]
pub fn solve(a: &Mat, b: &[f64]) -> Option<Vec<f64>> {
    let n = a.rows;
    debug_assert_eq!(a.cols, n);
    debug_assert_eq!(b.len(), n);
    let mut m = a.clone();
    let mut rhs = b.to_vec();
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if m.at(r, col).abs() > m.at(piv, col).abs() {
                piv = r;
            }
        }
        if m.at(piv, col).abs() < 1e-12 {
            return None;
        }
        if piv != col {
            for j in 0..n {
                let t = m.at(piv, j);
                m.set(piv, j, m.at(col, j));
                m.set(col, j, t);
            }
            rhs.swap(piv, col);
        }
        for r in col + 1..n {
            let f = m.at(r, col) / m.at(col, col);
            if f == 0.0 {
                continue;
            }
            for j in col..n {
                m.set(r, j, m.at(r, j) - f * m.at(col, j));
            }
            rhs[r] -= f * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = rhs[i];
        for j in i + 1..n {
            s -= m.at(i, j) * x[j];
        }
        x[i] = s / m.at(i, i);
    }
    Some(x)
}

/// Gram-Schmidt orthonormal basis of the span of `vectors`.
pub fn orthonormal_basis(vectors: &[Vec<f64>], tol: f64) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for v in vectors {
        let mut w = v.clone();
        for b in &basis {
            let p = dot(&w, b);
            w = axpy(&w, -p, b);
        }
        let n = norm(&w);
        if n > tol {
            basis.push(scale(&w, 1.0 / n));
        }
    }
    basis
}

/// Splittable counter-based pseudo random generator (splitmix64 core).
///
/// Step k of a stream consumes exactly one `draw`, which makes coupled
/// runs with shared seed reproduce the same decision sequence exactly.
#[derive(Debug, Clone, Copy)]
pub struct SplitMix {
    state: u64,
}

impl SplitMix {
    pub fn new(seed: u64) -> Self {
        SplitMix { state: seed }
    }

    /// Derive an independent stream for ensemble member `index`.
    pub fn split(seed: u64, index: u64) -> Self {
        let mut s = SplitMix::new(seed ^ index.wrapping_mul(0x9e3779b97f4a7c15));
        s.next_u64();
        s
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [lo, hi).
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Keyed draw for step `k`, independent of generator state.
    pub fn keyed(seed: u64, k: u64) -> f64 {
        let mut s = SplitMix::new(seed.wrapping_add(k.wrapping_mul(0x2545f4914f6cdd1d)));
        s.next_f64()
    }
}

/// Run `f` over `items` with up to `threads` workers, preserving order.
///
/// Each item gets an independent seed stream, so results do not depend on
/// the scheduling; reductions downstream stay deterministic.
pub fn parallel_map<T, R, F>(items: Vec<T>, threads: usize, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync,
{
    let threads = threads.max(1);
    if threads == 1 || items.len() <= 1 {
        return items.into_iter().map(f).collect();
    }
    let n = items.len();
    let mut slots: Vec<Option<R>> = (0..n).map(|_| None).collect();
    let work: Vec<(usize, T)> = items.into_iter().enumerate().collect();
    let queue = std::sync::Mutex::new(work);
    let slots_ref = std::sync::Mutex::new(&mut slots);
    std::thread::scope(|scope| {
        for _ in 0..threads.min(n) {
            scope.spawn(|| loop {
                let item = { queue.lock().unwrap().pop() };
                match item {
                    Some((i, t)) => {
                        let r = f(t);
                        slots_ref.lock().unwrap()[i] = Some(r);
                    }
                    None => break,
                }
            });
        }
    });
    slots.into_iter().map(|s| s.unwrap()).collect()
}

/// Thread budget from `PSB_THREADS`, defaulting to available parallelism.
pub fn thread_budget() -> usize {
    if let Ok(v) = std::env::var("PSB_THREADS") {
        if let Ok(n) = v.trim().parse::<usize>() {
            return n.max(1);
        }
    }
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svd_2x2_matches_known() {
        // diag(3, 1) rotated is still {3, 1}.
        let m = Mat::from_rows(&[vec![3.0, 0.0], vec![0.0, 1.0]]);
        let sv = m.singular_values();
        assert!((sv[0] - 3.0).abs() < 1e-12 && (sv[1] - 1.0).abs() < 1e-12);
        let shear = Mat::from_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]);
        let sv = shear.singular_values();
        // golden ratio singular values of [[1,1],[0,1]]
        let phi = (1.0 + 5.0_f64.sqrt()) / 2.0;
        assert!((sv[0] - phi).abs() < 1e-12);
        assert!((sv[1] - 1.0 / phi).abs() < 1e-12);
    }

    #[test]
    fn qr_diag_positive_and_orthonormal() {
        let a = Mat::from_rows(&[vec![2.0, 1.0], vec![0.0, 1.0]]);
        let (q, r) = qr_gram_schmidt(&a);
        assert!(r.iter().all(|&x| x > 0.0));
        let qtq = q.transpose().matmul(&q);
        for i in 0..2 {
            for j in 0..2 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((qtq.at(i, j) - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn solve_small_system() {
        let a = Mat::from_rows(&[vec![2.0, 0.0, 1.0], vec![0.0, 1.0, 0.0], vec![1.0, 0.0, 1.0]]);
        let x = solve(&a, &[5.0, 2.0, 4.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12);
        assert!((x[1] - 2.0).abs() < 1e-12);
        assert!((x[2] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn splitmix_is_deterministic() {
        let mut a = SplitMix::new(7);
        let mut b = SplitMix::new(7);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
        assert_eq!(SplitMix::keyed(7, 42), SplitMix::keyed(7, 42));
        assert_ne!(SplitMix::keyed(7, 42), SplitMix::keyed(7, 43));
    }

    #[test]
    fn parallel_map_preserves_order() {
        let out = parallel_map((0..64).collect::<Vec<_>>(), 4, |x| x * 2);
        assert_eq!(out, (0..64).map(|x| x * 2).collect::<Vec<_>>());
    }
}
