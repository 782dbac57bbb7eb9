//! Complex dense linear algebra for the preprocessing chain: MMSE channel
//! extension, shifting/scaling, complex (Gaussian-integer) LLL lattice
//! reduction and QR decomposition.
//!
//! Everything here runs in floating point; only the per-symbol detection
//! datapath is fixed-point. Matrices are small (antenna dimensions), so the
//! implementations favor clarity and contractual post-conditions over
//! asymptotics.

use num_complex::Complex64;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("column {col} is numerically rank deficient")]
    RankDeficient { col: usize },
    #[error("matrix entries must be finite")]
    NonFinite,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("lattice reduction did not settle after {steps} steps")]
    LllStalled { steps: usize },
}

/// Dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self, LinalgError> {
        if data.len() != rows * cols {
            return Err(LinalgError::DimensionMismatch(format!(
                "{}x{} matrix needs {} entries, got {}",
                rows,
                cols,
                rows * cols,
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(LinalgError::NonFinite);
        }
        Ok(CMatrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix { rows, cols, data: vec![Complex64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CMatrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Complex64::new(1.0, 0.0));
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        CMatrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Complex64) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[Complex64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn col(&self, c: usize) -> Vec<Complex64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    /// Conjugate transpose.
    pub fn hermitian(&self) -> CMatrix {
        CMatrix::from_fn(self.cols, self.rows, |r, c| self.get(c, r).conj())
    }

    pub fn mul_mat(&self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, rhs.rows, "mul_mat shape mismatch");
        CMatrix::from_fn(self.rows, rhs.cols, |r, c| {
            (0..self.cols).map(|k| self.get(r, k) * rhs.get(k, c)).sum()
        })
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.cols, v.len(), "mul_vec shape mismatch");
        (0..self.rows)
            .map(|r| self.row(r).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Determinant by LU with partial pivoting. Square matrices only.
    pub fn det(&self) -> Complex64 {
        assert_eq!(self.rows, self.cols, "det of non-square matrix");
        let n = self.rows;
        let mut a = self.data.clone();
        let mut det = Complex64::new(1.0, 0.0);
        for k in 0..n {
            let pivot = (k..n)
                .max_by(|&i, &j| {
                    a[i * n + k].norm_sqr().partial_cmp(&a[j * n + k].norm_sqr()).unwrap()
                })
                .unwrap();
            if a[pivot * n + k].norm_sqr() == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            if pivot != k {
                for c in 0..n {
                    a.swap(k * n + c, pivot * n + c);
                }
                det = -det;
            }
            let d = a[k * n + k];
            det *= d;
            for i in k + 1..n {
                let f = a[i * n + k] / d;
                for c in k..n {
                    let sub = f * a[k * n + c];
                    a[i * n + c] -= sub;
                }
            }
        }
        det
    }

    /// Plain-text serialization: first line "rows cols", then one row per
    /// line with entries printed as "a+bi" at full (round-trip) precision.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {}", self.rows, self.cols);
        for r in 0..self.rows {
            let line: Vec<String> = self.row(r).iter().map(|z| format_complex(*z)).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<CMatrix, LinalgError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (ln, header) = lines
            .next()
            .ok_or(LinalgError::Parse { line: 1, message: "empty matrix file".into() })?;
        let mut it = header.split_whitespace();
        let parse_dim = |tok: Option<&str>| -> Result<usize, LinalgError> {
            tok.and_then(|t| t.parse().ok()).ok_or(LinalgError::Parse {
                line: ln + 1,
                message: format!("expected \"rows cols\" header, got {header:?}"),
            })
        };
        let rows = parse_dim(it.next())?;
        let cols = parse_dim(it.next())?;
        if it.next().is_some() {
            return Err(LinalgError::Parse {
                line: ln + 1,
                message: "header has trailing tokens".into(),
            });
        }
        let mut data = Vec::with_capacity(rows * cols);
        let mut seen = 0usize;
        for (ln, line) in lines {
            let entries: Vec<&str> = line.split_whitespace().collect();
            if entries.len() != cols {
                return Err(LinalgError::Parse {
                    line: ln + 1,
                    message: format!("expected {} entries in row, got {}", cols, entries.len()),
                });
            }
            for tok in entries {
                let z = parse_complex(tok).map_err(|message| LinalgError::Parse {
                    line: ln + 1,
                    message,
                })?;
                data.push(z);
            }
            seen += 1;
            if seen == rows {
                break;
            }
        }
        if seen != rows {
            return Err(LinalgError::Parse {
                line: text.lines().count(),
                message: format!("expected {} rows, got {}", rows, seen),
            });
        }
        CMatrix::new(rows, cols, data)
    }
}

/// Formats a complex entry as "a+bi" with shortest round-trip precision.
pub fn format_complex(z: Complex64) -> String {
    if z.im.is_sign_negative() {
        format!("{}-{}i", z.re, -z.im)
    } else {
        format!("{}+{}i", z.re, z.im)
    }
}

/// Parses "a+bi" / "a-bi" (also accepts a bare real part).
pub fn parse_complex(tok: &str) -> Result<Complex64, String> {
    let bad = || format!("malformed complex entry {tok:?}");
    if let Some(body) = tok.strip_suffix('i') {
        // split at the sign that separates the parts (not a leading sign,
        // not an exponent sign)
        let bytes = body.as_bytes();
        let mut split = None;
        for i in (1..bytes.len()).rev() {
            let c = bytes[i];
            if (c == b'+' || c == b'-') && bytes[i - 1] != b'e' && bytes[i - 1] != b'E' {
                split = Some(i);
                break;
            }
        }
        let i = split.ok_or_else(bad)?;
        let re: f64 = body[..i].parse().map_err(|_| bad())?;
        let sign = if bytes[i] == b'-' { -1.0 } else { 1.0 };
        let im: f64 = body[i + 1..].parse().map_err(|_| bad())?;
        let z = Complex64::new(re, sign * im);
        if !z.re.is_finite() || !z.im.is_finite() {
            return Err(bad());
        }
        Ok(z)
    } else {
        let re: f64 = tok.parse().map_err(|_| bad())?;
        if !re.is_finite() {
            return Err(bad());
        }
        Ok(Complex64::new(re, 0.0))
    }
}

/// Vector helpers reuse the matrix text format as an n-by-1 matrix.
pub fn vector_to_text(v: &[Complex64]) -> String {
    let m = CMatrix::from_fn(v.len(), 1, |r, _| v[r]);
    m.to_text()
}

pub fn vector_from_text(text: &str) -> Result<Vec<Complex64>, LinalgError> {
    let m = CMatrix::from_text(text)?;
    if m.cols() != 1 {
        return Err(LinalgError::Parse {
            line: 1,
            message: format!("expected a column vector (1 column), got {}", m.cols()),
        });
    }
    Ok((0..m.rows()).map(|r| m.get(r, 0)).collect())
}

/// MMSE extension: stacks `sqrt(noise_power / (2 signal_variance)) * I`
/// under H and a zero block under y.
pub fn mmse_extend(
    h: &CMatrix,
    y: &[Complex64],
    noise_power: f64,
    signal_variance: f64,
) -> Result<(CMatrix, Vec<Complex64>), LinalgError> {
    if y.len() != h.rows() {
        return Err(LinalgError::DimensionMismatch(format!(
            "received vector has {} entries for a {}x{} channel",
            y.len(),
            h.rows(),
            h.cols()
        )));
    }
    if !(noise_power >= 0.0) {
        return Err(LinalgError::InvalidArgument(format!(
            "noise power must be >= 0, got {noise_power}"
        )));
    }
    if !(signal_variance > 0.0) {
        return Err(LinalgError::InvalidArgument(format!(
            "signal variance must be > 0, got {signal_variance}"
        )));
    }
    let (n_r, n_t) = (h.rows(), h.cols());
    let alpha = (noise_power / (2.0 * signal_variance)).sqrt();
    let h_bar = CMatrix::from_fn(n_r + n_t, n_t, |r, c| {
        if r < n_r {
            h.get(r, c)
        } else if r - n_r == c {
            Complex64::new(alpha, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let mut y_bar = y.to_vec();
    y_bar.resize(n_r + n_t, Complex64::new(0.0, 0.0));
    Ok((h_bar, y_bar))
}

/// Shifting and scaling of the extended received vector:
/// `(y_bar - H_bar (1+i) 1) / 2`.
pub fn shift_scale(y_bar: &[Complex64], h_bar: &CMatrix) -> Result<Vec<Complex64>, LinalgError> {
    if y_bar.len() != h_bar.rows() {
        return Err(LinalgError::DimensionMismatch(format!(
            "vector has {} entries for a {}x{} matrix",
            y_bar.len(),
            h_bar.rows(),
            h_bar.cols()
        )));
    }
    let one = Complex64::new(1.0, 1.0);
    Ok((0..h_bar.rows())
        .map(|r| {
            let shift: Complex64 = h_bar.row(r).iter().map(|h| h * one).sum();
            (y_bar[r] - shift) / 2.0
        })
        .collect())
}

/// Rotation by the conjugate transpose of Q: `Q^H y`.
pub fn rotate_received(q: &CMatrix, y: &[Complex64]) -> Result<Vec<Complex64>, LinalgError> {
    if y.len() != q.rows() {
        return Err(LinalgError::DimensionMismatch(format!(
            "vector has {} entries for a {}x{} Q",
            y.len(),
            q.rows(),
            q.cols()
        )));
    }
    Ok((0..q.cols())
        .map(|c| (0..q.rows()).map(|r| q.get(r, c).conj() * y[r]).sum())
        .collect())
}

/// Output of lattice reduction: `reduced_basis = input * transform` with a
/// unimodular Gaussian-integer `transform`.
#[derive(Debug, Clone)]
pub struct LrOutput {
    pub reduced_basis: CMatrix,
    pub transform: CMatrix,
}

const UNIMODULAR_TOL: f64 = 1e-9;

/// True iff every entry is within 1e-9 of a Gaussian integer and |det| is
/// within 1e-9 of 1.
pub fn is_unimodular(t: &CMatrix) -> bool {
    if t.rows() != t.cols() {
        return false;
    }
    for r in 0..t.rows() {
        for c in 0..t.cols() {
            let z = t.get(r, c);
            if (z.re - z.re.round()).abs() > UNIMODULAR_TOL
                || (z.im - z.im.round()).abs() > UNIMODULAR_TOL
            {
                return false;
            }
        }
    }
    (t.det().norm() - 1.0).abs() <= UNIMODULAR_TOL
}

/// Orthogonality defect: product of column norms over sqrt(det(B^H B)).
/// Equals 1 exactly when the columns are orthogonal.
pub fn orthogonality_defect(b: &CMatrix) -> f64 {
    let gram = b.hermitian().mul_mat(b);
    let det = gram.det().re.max(f64::MIN_POSITIVE);
    let prod: f64 = (0..b.cols())
        .map(|j| b.col(j).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
        .product();
    prod / det.sqrt()
}

fn gauss_round(z: Complex64) -> Complex64 {
    // half-to-even keeps mu' = +-1/2 size-reduced instead of re-rounding
    Complex64::new(z.re.round_ties_even(), z.im.round_ties_even())
}

struct GsState {
    // Gram-Schmidt of the current basis columns
    bstar: Vec<Vec<Complex64>>,
    bstar_sq: Vec<f64>,
    mu: Vec<Vec<Complex64>>, // mu[k][l], l < k
}

fn inner(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    x.iter().zip(y).map(|(a, b)| a * b.conj()).sum()
}

impl GsState {
    fn recompute_from(&mut self, cols: &[Vec<Complex64>], start: usize) -> Result<(), LinalgError> {
        for k in start..cols.len() {
            let mut v = cols[k].clone();
            for l in 0..k {
                let mu_kl = if self.bstar_sq[l] > 0.0 {
                    inner(&cols[k], &self.bstar[l]) / self.bstar_sq[l]
                } else {
                    Complex64::new(0.0, 0.0)
                };
                self.mu[k][l] = mu_kl;
                for (vi, bi) in v.iter_mut().zip(&self.bstar[l]) {
                    *vi -= mu_kl * bi;
                }
            }
            let nsq: f64 = v.iter().map(|z| z.norm_sqr()).sum();
            let col_sq: f64 = cols[k].iter().map(|z| z.norm_sqr()).sum();
            if nsq <= 1e-24 * col_sq.max(f64::MIN_POSITIVE) {
                return Err(LinalgError::RankDeficient { col: k });
            }
            self.bstar[k] = v;
            self.bstar_sq[k] = nsq;
        }
        Ok(())
    }
}

/// Complex (Gaussian-integer) LLL reduction of the columns of `b`.
///
/// Returns a reduced basis and the unimodular transform relating it to the
/// input. `delta` is the Lovasz parameter in (0.25, 1].
pub fn lll_reduce(b: &CMatrix, delta: f64) -> Result<LrOutput, LinalgError> {
    if !(delta > 0.25 && delta <= 1.0) {
        return Err(LinalgError::InvalidArgument(format!(
            "delta must lie in (0.25, 1], got {delta}"
        )));
    }
    let n = b.cols();
    if n == 0 || b.rows() < n {
        return Err(LinalgError::DimensionMismatch(format!(
            "basis must be tall ({}x{} given)",
            b.rows(),
            b.cols()
        )));
    }
    let mut cols: Vec<Vec<Complex64>> = (0..n).map(|j| b.col(j)).collect();
    let mut t: Vec<Vec<Complex64>> = (0..n)
        .map(|j| {
            (0..n)
                .map(|i| Complex64::new(if i == j { 1.0 } else { 0.0 }, 0.0))
                .collect()
        })
        .collect();
    let mut gs = GsState {
        bstar: vec![Vec::new(); n],
        bstar_sq: vec![0.0; n],
        mu: vec![vec![Complex64::new(0.0, 0.0); n]; n],
    };
    gs.recompute_from(&cols, 0)?;

    // size-reduce column k against column l, updating mu incrementally
    let size_reduce = |cols: &mut Vec<Vec<Complex64>>,
                       t: &mut Vec<Vec<Complex64>>,
                       gs: &mut GsState,
                       k: usize,
                       l: usize| {
        let c = gauss_round(gs.mu[k][l]);
        if c.norm_sqr() == 0.0 {
            return;
        }
        for i in 0..cols[k].len() {
            let sub = c * cols[l][i];
            cols[k][i] -= sub;
        }
        for i in 0..n {
            let sub = c * t[l][i];
            t[k][i] -= sub;
        }
        gs.mu[k][l] -= c;
        for j in 0..l {
            let sub = c * gs.mu[l][j];
            gs.mu[k][j] -= sub;
        }
    };

    let max_steps = 10_000 * n * n + 10_000;
    let mut steps = 0usize;
    let mut k = 1usize;
    while k < n {
        steps += 1;
        if steps > max_steps {
            return Err(LinalgError::LllStalled { steps });
        }
        size_reduce(&mut cols, &mut t, &mut gs, k, k - 1);
        let lhs = gs.bstar_sq[k];
        let rhs = (delta - gs.mu[k][k - 1].norm_sqr()) * gs.bstar_sq[k - 1];
        if lhs >= rhs {
            for l in (0..k.saturating_sub(1)).rev() {
                size_reduce(&mut cols, &mut t, &mut gs, k, l);
            }
            k += 1;
        } else {
            cols.swap(k - 1, k);
            t.swap(k - 1, k);
            gs.recompute_from(&cols, k - 1)?;
            k = k.max(2) - 1;
        }
    }

    let reduced = CMatrix::from_fn(b.rows(), n, |r, c| cols[c][r]);
    let transform = CMatrix::from_fn(n, n, |r, c| t[c][r]);
    Ok(LrOutput { reduced_basis: reduced, transform })
}

/// QR decomposition with full square Q (Householder reflections) and a
/// positive real diagonal on R.
pub fn qr_decompose(a: &CMatrix) -> Result<(CMatrix, CMatrix), LinalgError> {
    let (m, n) = (a.rows(), a.cols());
    if m < n {
        return Err(LinalgError::DimensionMismatch(format!(
            "QR needs rows >= cols, got {m}x{n}"
        )));
    }
    let mut r = a.clone();
    let mut q = CMatrix::identity(m);
    let col_scale: Vec<f64> = (0..n)
        .map(|j| a.col(j).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
        .collect();
    let mut v = vec![Complex64::new(0.0, 0.0); m];

    for k in 0..n {
        let norm_sq: f64 = (k..m).map(|i| r.get(i, k).norm_sqr()).sum();
        let norm = norm_sq.sqrt();
        if norm <= 1e-13 * col_scale[k].max(f64::MIN_POSITIVE) {
            return Err(LinalgError::RankDeficient { col: k });
        }
        let x0 = r.get(k, k);
        let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { Complex64::new(1.0, 0.0) };
        let alpha = -phase * norm;
        for i in k..m {
            v[i] = r.get(i, k);
        }
        v[k] -= alpha;
        let vnorm_sq: f64 = (k..m).map(|i| v[i].norm_sqr()).sum();
        if vnorm_sq > 0.0 {
            let scale = 2.0 / vnorm_sq;
            for j in k..n {
                let w: Complex64 = (k..m).map(|i| v[i].conj() * r.get(i, j)).sum();
                let w = w * scale;
                for i in k..m {
                    let cur = r.get(i, j);
                    r.set(i, j, cur - w * v[i]);
                }
            }
            for i in 0..m {
                let w: Complex64 = (k..m).map(|j| q.get(i, j) * v[j]).sum();
                let w = w * scale;
                for j in k..m {
                    let cur = q.get(i, j);
                    q.set(i, j, cur - w * v[j].conj());
                }
            }
        }
        r.set(k, k, alpha);
        for i in k + 1..m {
            r.set(i, k, Complex64::new(0.0, 0.0));
        }
    }
    // normalize to a strictly positive real diagonal
    for k in 0..n {
        let d = r.get(k, k);
        let ad = d.norm();
        if ad <= 1e-13 * col_scale[k].max(f64::MIN_POSITIVE) {
            return Err(LinalgError::RankDeficient { col: k });
        }
        let ph = d / ad;
        let phc = ph.conj();
        for j in k..n {
            let cur = r.get(k, j);
            r.set(k, j, cur * phc);
        }
        r.set(k, k, Complex64::new(ad, 0.0));
        for i in 0..m {
            let cur = q.get(i, k);
            q.set(i, k, cur * ph);
        }
    }
    // rows below the n-th are exactly zero in R
    for i in n..m {
        for j in 0..n {
            r.set(i, j, Complex64::new(0.0, 0.0));
        }
    }
    Ok((q, r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMatrix {
        CMatrix::from_fn(rows, cols, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }

    #[test]
    fn mmse_extend_examples() {
        let h = CMatrix::identity(2);
        let y = vec![c(0.3, -0.7), c(1.5, 0.2)];
        // noise 2, variance 1 -> factor sqrt(2/2) = 1
        let (hb, yb) = mmse_extend(&h, &y, 2.0, 1.0).unwrap();
        assert_eq!(hb.rows(), 4);
        assert_eq!(hb.get(2, 0), c(1.0, 0.0));
        assert_eq!(hb.get(3, 1), c(1.0, 0.0));
        assert_eq!(hb.get(2, 1), c(0.0, 0.0));
        assert_eq!(yb[2], c(0.0, 0.0));
        assert_eq!(yb[3], c(0.0, 0.0));
        assert_eq!(yb[0], y[0]);

        // zero noise power -> regularizer vanishes
        let (hb0, _) = mmse_extend(&h, &y, 0.0, 1.0).unwrap();
        assert_eq!(hb0.get(2, 0), c(0.0, 0.0));
        assert_eq!(hb0.get(3, 1), c(0.0, 0.0));

        // noise 8, variance 1 -> factor 2
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let hr = random_matrix(&mut rng, 2, 2);
        let (hb2, _) = mmse_extend(&hr, &y, 8.0, 1.0).unwrap();
        assert_eq!(hb2.get(2, 0), c(2.0, 0.0));
        assert_eq!(hb2.get(3, 1), c(2.0, 0.0));
    }

    #[test]
    fn mmse_extend_rejects_bad_dims() {
        let h = CMatrix::identity(2);
        assert!(matches!(
            mmse_extend(&h, &[c(1.0, 0.0)], 1.0, 1.0),
            Err(LinalgError::DimensionMismatch(_))
        ));
        assert!(mmse_extend(&h, &[c(1.0, 0.0); 2], 1.0, 0.0).is_err());
        assert!(mmse_extend(&h, &[c(1.0, 0.0); 2], -1.0, 1.0).is_err());
    }

    #[test]
    fn shift_scale_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let hb = random_matrix(&mut rng, 4, 2);
        // y_bar exactly H_bar (1+i) 1 -> zero output
        let ones = vec![c(1.0, 1.0); 2];
        let yb = hb.mul_vec(&ones);
        for z in shift_scale(&yb, &hb).unwrap() {
            assert!(z.norm() < 1e-12);
        }
        // zero matrix -> y/2
        let zero = CMatrix::zeros(3, 2);
        let y = vec![c(2.0, -4.0), c(1.0, 0.0), c(0.0, 6.0)];
        let out = shift_scale(&y, &zero).unwrap();
        assert_eq!(out, vec![c(1.0, -2.0), c(0.5, 0.0), c(0.0, 3.0)]);
        // 1x1 worked example: (3+3i - (1+i)) / 2 = 1+i
        let h1 = CMatrix::identity(1);
        let out = shift_scale(&[c(3.0, 3.0)], &h1).unwrap();
        assert_eq!(out, vec![c(1.0, 1.0)]);
    }

    #[test]
    fn qr_examples() {
        let (q, r) = qr_decompose(&CMatrix::identity(3)).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((q.get(i, j) - c(e, 0.0)).norm() < 1e-12);
                assert!((r.get(i, j) - c(e, 0.0)).norm() < 1e-12);
            }
        }

        let d = CMatrix::from_fn(2, 2, |i, j| {
            if i == j { c(if i == 0 { 2.0 } else { 3.0 }, 0.0) } else { c(0.0, 0.0) }
        });
        let (q, r) = qr_decompose(&d).unwrap();
        assert!((q.get(0, 0) - c(1.0, 0.0)).norm() < 1e-12);
        assert!((r.get(0, 0) - c(2.0, 0.0)).norm() < 1e-12);
        assert!((r.get(1, 1) - c(3.0, 0.0)).norm() < 1e-12);

        let x = CMatrix::new(2, 2, vec![c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])
            .unwrap();
        let (q, r) = qr_decompose(&x).unwrap();
        assert!((q.get(0, 1) - c(1.0, 0.0)).norm() < 1e-12);
        assert!((q.get(1, 0) - c(1.0, 0.0)).norm() < 1e-12);
        assert!((r.get(0, 0) - c(1.0, 0.0)).norm() < 1e-12);
        assert!((r.get(1, 1) - c(1.0, 0.0)).norm() < 1e-12);
        assert!(r.get(0, 1).norm() < 1e-12);
    }

    fn qr_residuals(a: &CMatrix) -> (f64, f64) {
        let (q, r) = qr_decompose(a).unwrap();
        let qhq = q.hermitian().mul_mat(&q);
        let mut unit = 0.0f64;
        for i in 0..q.rows() {
            for j in 0..q.cols() {
                let e = if i == j { 1.0 } else { 0.0 };
                unit = unit.max((qhq.get(i, j) - c(e, 0.0)).norm());
            }
        }
        let qr = q.mul_mat(&r);
        let mut rec = 0.0f64;
        for i in 0..a.rows() {
            for j in 0..a.cols() {
                rec = rec.max((qr.get(i, j) - a.get(i, j)).norm());
            }
        }
        // R strictly triangular below the diagonal, exact zeros
        for i in 0..r.rows() {
            for j in 0..r.cols().min(i) {
                assert_eq!(r.get(i, j), c(0.0, 0.0));
            }
        }
        for k in 0..a.cols() {
            assert!(r.get(k, k).im == 0.0 && r.get(k, k).re > 0.0);
        }
        (unit, rec)
    }

    #[test]
    fn qr_random_residuals() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..100 {
            let a = random_matrix(&mut rng, 6, 4);
            let (unit, rec) = qr_residuals(&a);
            assert!(unit < 1e-12 && rec < 1e-12, "unit={unit} rec={rec}");
        }
    }

    #[test]
    fn qr_rank_deficiency_detected() {
        let a = CMatrix::new(
            3,
            2,
            vec![c(1.0, 0.0), c(2.0, 0.0), c(1.0, 1.0), c(2.0, 2.0), c(-0.5, 0.25), c(-1.0, 0.5)],
        )
        .unwrap();
        assert!(matches!(qr_decompose(&a), Err(LinalgError::RankDeficient { col: 1 })));
    }

    #[test]
    fn rotate_received_examples() {
        let y = vec![c(1.0, 2.0), c(-0.5, 0.25)];
        let out = rotate_received(&CMatrix::identity(2), &y).unwrap();
        assert_eq!(out, y);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_matrix(&mut rng, 4, 4);
        let (q, _) = qr_decompose(&a).unwrap();
        let y: Vec<Complex64> = (0..4).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let out = rotate_received(&q, &y).unwrap();
        let ny: f64 = y.iter().map(|z| z.norm_sqr()).sum();
        let no: f64 = out.iter().map(|z| z.norm_sqr()).sum();
        assert!((ny.sqrt() - no.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn is_unimodular_examples() {
        assert!(is_unimodular(&CMatrix::identity(3)));
        let d = CMatrix::from_fn(2, 2, |i, j| {
            if i == j { c(if i == 0 { 2.0 } else { 1.0 }, 0.0) } else { c(0.0, 0.0) }
        });
        assert!(!is_unimodular(&d));
        let t = CMatrix::new(2, 2, vec![c(1.0, 0.0), c(1.0, 1.0), c(0.0, 0.0), c(1.0, 0.0)])
            .unwrap();
        assert!(is_unimodular(&t));
        // non-integer entries
        let f = CMatrix::new(2, 2, vec![c(0.5, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(2.0, 0.0)])
            .unwrap();
        assert!(!is_unimodular(&f));
    }

    #[test]
    fn lll_identity_is_fixed_point() {
        let out = lll_reduce(&CMatrix::identity(4), 0.75).unwrap();
        assert_eq!(out.reduced_basis, CMatrix::identity(4));
        assert_eq!(out.transform, CMatrix::identity(4));
    }

    #[test]
    fn lll_sorts_permuted_orthogonal_basis() {
        // orthogonal columns with well-separated norms, presented out of
        // order: reduction must sort them back with a pure permutation
        let b = CMatrix::new(
            3,
            3,
            vec![
                c(0.0, 4.0), c(0.0, 0.0), c(0.0, 0.0),
                c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0),
                c(0.0, 0.0), c(0.0, 0.0), c(2.0, 0.0),
            ],
        )
        .unwrap();
        let out = lll_reduce(&b, 0.75).unwrap();
        assert!(is_unimodular(&out.transform));
        // transform is a signed permutation: one unit entry per row/column
        for i in 0..3 {
            let row_nonzero = (0..3).filter(|&j| out.transform.get(i, j).norm() > 1e-9).count();
            let col_nonzero = (0..3).filter(|&j| out.transform.get(j, i).norm() > 1e-9).count();
            assert_eq!(row_nonzero, 1);
            assert_eq!(col_nonzero, 1);
        }
        // and the reduced norms come out nondecreasing
        let norms: Vec<f64> = (0..3)
            .map(|j| out.reduced_basis.col(j).iter().map(|z| z.norm_sqr()).sum::<f64>())
            .collect();
        assert!(norms[0] <= norms[1] && norms[1] <= norms[2]);
    }

    #[test]
    fn lll_reduces_random_bases() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let b = random_matrix(&mut rng, 4, 2);
            let out = lll_reduce(&b, 0.75).unwrap();
            // reduced = b * transform, recomputed directly
            let prod = b.mul_mat(&out.transform);
            for i in 0..4 {
                for j in 0..2 {
                    assert!((prod.get(i, j) - out.reduced_basis.get(i, j)).norm() < 1e-9);
                }
            }
            assert!(is_unimodular(&out.transform));
            let d_in = orthogonality_defect(&b);
            let d_out = orthogonality_defect(&out.reduced_basis);
            assert!(d_out <= d_in * (1.0 + 1e-9), "defect grew: {d_out} > {d_in}");
        }
    }

    #[test]
    fn lll_rejects_rank_deficient() {
        let b = CMatrix::new(
            2,
            2,
            vec![c(1.0, 0.0), c(2.0, 0.0), c(0.5, 0.5), c(1.0, 1.0)],
        )
        .unwrap();
        match lll_reduce(&b, 0.75) {
            Err(LinalgError::RankDeficient { col }) => assert_eq!(col, 1),
            other => panic!("expected rank deficiency, got {other:?}"),
        }
    }

    #[test]
    fn lll_rejects_bad_delta() {
        assert!(lll_reduce(&CMatrix::identity(2), 0.25).is_err());
        assert!(lll_reduce(&CMatrix::identity(2), 1.01).is_err());
    }

    #[test]
    fn text_format_round_trip_and_errors() {
        let m = CMatrix::new(
            2,
            2,
            vec![c(1.5, -2.25), c(0.0, 0.0), c(-1e-3, 3.0), c(7.0, -0.125)],
        )
        .unwrap();
        let text = m.to_text();
        assert!(text.starts_with("2 2\n"));
        let back = CMatrix::from_text(&text).unwrap();
        assert_eq!(m, back);

        let err = CMatrix::from_text("2 2\n1+0i 2+0i\n3+0i nope\n").unwrap_err();
        match err {
            LinalgError::Parse { line, message } => {
                assert_eq!(line, 3);
                assert!(message.contains("nope"));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(CMatrix::from_text("").is_err());
        assert!(CMatrix::from_text("2 2\n1+0i\n1+0i 2+0i\n").is_err());
    }

    #[test]
    fn vector_text_round_trip() {
        let v = vec![c(1.0, -1.0), c(0.25, 1e-9)];
        let back = vector_from_text(&vector_to_text(&v)).unwrap();
        assert_eq!(v, back);
    }

    proptest! {
        #[test]
        fn complex_entry_round_trips(re in -1e6f64..1e6, im in -1e6f64..1e6) {
            let z = c(re, im);
            let back = parse_complex(&format_complex(z)).unwrap();
            prop_assert_eq!(z, back);
        }
    }
}
