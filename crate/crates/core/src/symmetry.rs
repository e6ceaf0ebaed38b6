//! Fourier descriptors of closed contours in n-dimensional phase space:
//! translation, scale and rotation indicators, similarity normalization and a
//! closeness measure between normalized spectra.

use std::f64::consts::{PI, TAU};
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed loop of `m` points in `n` dimensions; point `m-1` is adjacent to point 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contour {
    m: usize,
    n: usize,
    /// Row-major `m x n`.
    points: Vec<f64>,
}

impl Contour {
    pub fn new(m: usize, n: usize, points: Vec<f64>) -> Result<Self> {
        if m < 3 {
            return Err(Error::invalid(format!("a contour needs at least 3 points, got {m}")));
        }
        if n < 2 {
            return Err(Error::invalid(format!("a contour needs at least 2 dimensions, got {n}")));
        }
        if points.len() != m * n {
            return Err(Error::ShapeMismatch(format!("{} values for a {m}x{n} contour", points.len())));
        }
        if points.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("contour values must be finite"));
        }
        Ok(Self { m, n, points })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::ShapeMismatch("contour rows differ in length".into()));
        }
        Self::new(rows.len(), n, rows.concat())
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn point(&self, p: usize) -> &[f64] {
        &self.points[p * self.n..(p + 1) * self.n]
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Applies `x -> scale * R x + shift` to every point.
    pub fn transformed(&self, rotation: &DMatrix<f64>, scale: f64, shift: &[f64]) -> Result<Self> {
        if rotation.shape() != (self.n, self.n) || shift.len() != self.n {
            return Err(Error::ShapeMismatch("transform does not match contour dimension".into()));
        }
        let mut pts = Vec::with_capacity(self.points.len());
        for p in 0..self.m {
            let x = self.point(p);
            for i in 0..self.n {
                let rx: f64 = (0..self.n).map(|j| rotation[(i, j)] * x[j]).sum();
                pts.push(scale * rx + shift[i]);
            }
        }
        Self::new(self.m, self.n, pts)
    }
}

/// Per-dimension DFT coefficients; row `k` holds harmonic `k` of every dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourSpectrum {
    m: usize,
    n: usize,
    /// Row-major `m x n`.
    coeffs: Vec<Complex64>,
}

impl ContourSpectrum {
    pub fn new(m: usize, n: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != m * n || m == 0 || n == 0 {
            return Err(Error::ShapeMismatch(format!("{} coefficients for a {m}x{n} spectrum", coeffs.len())));
        }
        Ok(Self { m, n, coeffs })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, k: usize, d: usize) -> Complex64 {
        self.coeffs[k * self.n + d]
    }

    pub fn harmonic(&self, k: usize) -> &[Complex64] {
        &self.coeffs[k * self.n..(k + 1) * self.n]
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self { m: self.m, n: self.n, coeffs: self.coeffs.iter().map(|&c| f(c)).collect() }
    }

    /// Right-multiplies every harmonic row by the real `n x n` matrix `r`.
    fn times(&self, r: &DMatrix<f64>) -> Self {
        let mut out = vec![Complex64::new(0.0, 0.0); self.coeffs.len()];
        for k in 0..self.m {
            let row = self.harmonic(k);
            for j in 0..self.n {
                out[k * self.n + j] = (0..self.n).map(|i| row[i] * r[(i, j)]).sum();
            }
        }
        Self { m: self.m, n: self.n, coeffs: out }
    }

    /// Keeps the mean and the first `k` harmonic pairs, zeroing the rest.
    pub fn smoothed(&self, k: usize) -> Self {
        let mut out = self.clone();
        for h in (k + 1)..self.m.saturating_sub(k) {
            for d in 0..self.n {
                out.coeffs[h * self.n + d] = Complex64::new(0.0, 0.0);
            }
        }
        out
    }

    /// CSV with a `re_d,im_d` column pair per dimension.
    pub fn to_csv_string(&self) -> String {
        let header: Vec<String> = (1..=self.n).map(|d| format!("re_{d},im_{d}")).collect();
        let mut out = format!("k,{}\n", header.join(","));
        for k in 0..self.m {
            let cells: Vec<String> = self.harmonic(k).iter().map(|c| format!("{},{}", c.re, c.im)).collect();
            out.push_str(&format!("{k},{}\n", cells.join(",")));
        }
        out
    }
}

fn dft_rows(m: usize, n: usize, input: impl Fn(usize, usize) -> Complex64, sign: f64) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); m * n];
    for k in 0..m {
        for p in 0..m {
            // Reduce the phase index first so large m keeps full accuracy.
            let w = Complex64::from_polar(1.0, sign * TAU * ((k * p) % m) as f64 / m as f64);
            for d in 0..n {
                out[k * n + d] += input(p, d) * w;
            }
        }
    }
    out
}

/// Forward transform, unnormalized: `s[k][d] = sum_p x[p][d] exp(-2 pi i k p / m)`.
pub fn dft_contour(c: &Contour) -> ContourSpectrum {
    let coeffs = dft_rows(c.m, c.n, |p, d| Complex64::new(c.points[p * c.n + d], 0.0), -1.0);
    ContourSpectrum { m: c.m, n: c.n, coeffs }
}

/// Inverse transform with the `1/m` factor; imaginary residue is dropped.
pub fn idft_contour(s: &ContourSpectrum) -> Result<Contour> {
    let raw = dft_rows(s.m, s.n, |p, d| s.get(p, d), 1.0);
    Contour::new(s.m, s.n, raw.iter().map(|c| c.re / s.m as f64).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetryDescriptors {
    /// Harmonic 0 of each dimension, i.e. `m` times the centroid.
    pub k_translate: Vec<f64>,
    /// Euclidean length of the first-harmonic vector.
    pub k_scale: f64,
    /// Angle of the real first-harmonic components in each plane `(k, k+1)`, in `[0, 2 pi)`.
    pub k_rotate: Vec<f64>,
}

fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Angles of a real vector in consecutive coordinate planes. A plane where
/// both components vanish relative to `scale` gets angle 0.
fn plane_angles(v: &[f64], scale: f64) -> Vec<f64> {
    let tiny = 1e-13 * scale;
    v.windows(2).map(|w| if w[0].hypot(w[1]) <= tiny { 0.0 } else { wrap_angle(w[1].atan2(w[0])) }).collect()
}

pub fn descriptors(s: &ContourSpectrum) -> Result<SymmetryDescriptors> {
    if s.m < 2 {
        return Err(Error::Degenerate("spectrum has no first harmonic".into()));
    }
    let k_translate = s.harmonic(0).iter().map(|c| c.re).collect();
    let first = s.harmonic(1);
    let k_scale = first.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let re: Vec<f64> = first.iter().map(|c| c.re).collect();
    let re_norm = re.iter().map(|v| v * v).sum::<f64>().sqrt();
    let total = s.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if !(re_norm > 1e-12 * total) {
        return Err(Error::Degenerate("first harmonic has no real component; rotation angles are undefined".into()));
    }
    Ok(SymmetryDescriptors { k_translate, k_scale, k_rotate: plane_angles(&re, re_norm) })
}

/// Identity except for the block `[[cos a, sin a], [-sin a, cos a]]` in
/// rows and columns `(k, k+1)`, with `k` 1-based.
pub fn plane_rotation(n: usize, k: usize, angle: f64) -> Result<DMatrix<f64>> {
    if k == 0 || k >= n {
        return Err(Error::invalid(format!("plane index {k} outside 1..={}", n.saturating_sub(1))));
    }
    let mut m = DMatrix::identity(n, n);
    let (s, c) = angle.sin_cos();
    let i = k - 1;
    m[(i, i)] = c;
    m[(i, i + 1)] = s;
    m[(i + 1, i)] = -s;
    m[(i + 1, i + 1)] = c;
    Ok(m)
}

/// Orthonormal frame whose first axis is the real first harmonic and whose
/// remaining axes follow the imaginary first harmonic and then the higher
/// harmonics (Gram-Schmidt), completed with coordinate axes and oriented to
/// determinant +1.
fn canonical_frame(s: &ContourSpectrum) -> Result<DMatrix<f64>> {
    let n = s.n;
    let mut sources: Vec<Vec<f64>> = Vec::with_capacity(2 * s.m);
    for k in 1..s.m {
        sources.push(s.harmonic(k).iter().map(|c| c.re).collect());
        sources.push(s.harmonic(k).iter().map(|c| c.im).collect());
    }
    let scale = sources.iter().map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt()).fold(0.0, f64::max);
    let first_norm = sources[0].iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(first_norm > 1e-12 * scale) {
        return Err(Error::Degenerate("first harmonic has no real component; rotation is undefined".into()));
    }
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n);
    let tol = 1e-9 * scale;
    let candidates = sources.into_iter().chain((0..n).map(|i| {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        e
    }));
    for (idx, mut v) in candidates.enumerate() {
        if basis.len() == n {
            break;
        }
        // Two passes of modified Gram-Schmidt keep the frame orthonormal to rounding.
        for _ in 0..2 {
            for b in &basis {
                let dot: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= dot * y);
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let is_data = idx < 2 * (s.m - 1);
        let threshold = if is_data { tol } else { 1e-6 };
        if norm > threshold {
            v.iter_mut().for_each(|x| *x /= norm);
            basis.push(v);
        }
    }
    let mut q = DMatrix::from_fn(n, n, |i, j| basis[j][i]);
    if q.determinant() < 0.0 {
        // When the data spans fewer than n axes the last axis is a completion
        // axis with no content, so the flip leaves the spectrum unchanged.
        q.column_mut(n - 1).neg_mut();
    }
    Ok(q)
}

/// Removes translation, scale and rotation from a spectrum, optionally after
/// keeping only `smoothing` harmonic pairs.
///
/// Afterwards harmonic 0 is zero, the first-harmonic vector has unit length and
/// its real part lies on the positive first axis.
pub fn normalize(s: &ContourSpectrum, smoothing: Option<usize>) -> Result<ContourSpectrum> {
    let mut out = match smoothing {
        Some(k) => s.smoothed(k),
        None => s.clone(),
    };
    for d in 0..out.n {
        out.coeffs[d] = Complex64::new(0.0, 0.0);
    }
    let k_scale = out.harmonic(1).iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if !(k_scale > 0.0) {
        return Err(Error::Degenerate("first harmonic is zero".into()));
    }
    out = out.map(|c| c / k_scale);
    let q = canonical_frame(&out)?;
    Ok(out.times(&q))
}

/// Harmonic-discounted inner product of two normalized spectra over rows
/// `1..=floor(m/2)+1` (1-based, so the first term is harmonic 0).
pub fn closeness(a: &ContourSpectrum, b: &ContourSpectrum) -> Result<f64> {
    if a.m != b.m || a.n != b.n {
        return Err(Error::ShapeMismatch(format!("spectra {}x{} and {}x{}", a.m, a.n, b.m, b.n)));
    }
    let top = (a.m / 2 + 1).min(a.m);
    Ok((1..=top)
        .map(|k| {
            let dot: f64 = a.harmonic(k - 1).iter().zip(b.harmonic(k - 1)).map(|(x, y)| x.re * y.re + x.im * y.im).sum();
            dot / k as f64
        })
        .sum())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetryReport {
    pub a: SymmetryDescriptors,
    pub b: SymmetryDescriptors,
    /// `B - A` for each indicator.
    pub delta_translate: Vec<f64>,
    pub delta_scale: f64,
    /// Rotation differences wrapped to `(-pi, pi]`.
    pub delta_rotate: Vec<f64>,
    pub closeness: f64,
    pub self_closeness_a: f64,
    pub self_closeness_b: f64,
}

fn wrap_signed(a: f64) -> f64 {
    let w = wrap_angle(a);
    if w > PI {
        w - TAU
    } else {
        w
    }
}

/// Indicator differences and closeness of two contours of equal shape.
pub fn symmetry_between(a: &Contour, b: &Contour, smoothing: Option<usize>) -> Result<SymmetryReport> {
    if a.m != b.m || a.n != b.n {
        return Err(Error::ShapeMismatch(format!("contours {}x{} and {}x{}", a.m, a.n, b.m, b.n)));
    }
    let (sa, sb) = (dft_contour(a), dft_contour(b));
    let (da, db) = (descriptors(&sa)?, descriptors(&sb)?);
    let (na, nb) = (normalize(&sa, smoothing)?, normalize(&sb, smoothing)?);
    Ok(SymmetryReport {
        delta_translate: db.k_translate.iter().zip(&da.k_translate).map(|(y, x)| y - x).collect(),
        delta_scale: db.k_scale - da.k_scale,
        delta_rotate: db.k_rotate.iter().zip(&da.k_rotate).map(|(y, x)| wrap_signed(y - x)).collect(),
        closeness: closeness(&na, &nb)?,
        self_closeness_a: closeness(&na, &na)?,
        self_closeness_b: closeness(&nb, &nb)?,
        a: da,
        b: db,
    })
}

/// Parses `m` rows of `n` comma-separated numbers; a non-numeric first line is a header.
pub fn parse_contour_csv(text: &str, origin: &Path) -> Result<Contour> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: std::result::Result<Vec<f64>, _> = fields.iter().map(|f| f.parse::<f64>()).collect();
        match parsed {
            Ok(v) => rows.push(v),
            Err(_) if rows.is_empty() && i == 0 => continue,
            Err(e) => return Err(Error::Parse { path: origin.to_path_buf(), row: i + 1, message: e.to_string() }),
        }
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput(format!("{} has no contour rows", origin.display())));
    }
    Contour::from_rows(&rows)
}

pub fn load_contour_csv(path: impl AsRef<Path>) -> Result<Contour> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    parse_contour_csv(&text, path)
}

pub fn contour_to_csv_string(c: &Contour) -> String {
    let header: Vec<String> = (1..=c.n).map(|d| format!("x{d}")).collect();
    let mut out = header.join(",") + "\n";
    for p in 0..c.m {
        let cells: Vec<String> = c.point(p).iter().map(|v| v.to_string()).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}
