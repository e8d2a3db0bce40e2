//! Per-sample evaluation shared by the solvers.

use alloc::vec::Vec;
use core::ops::AddAssign;

use num_complex::Complex64 as C64;

use crate::bath::Correlation;
use crate::error::Result;
use crate::exec::Executor;
use crate::mat2::{HermitianExp, Mat2};
use crate::pairings::{InfluenceScratch, PairingTable};
use crate::sampling::{Phase, RngStream, CHUNK};

/// Four basis accumulators `K_ij`, indexed by spin index.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Basis(pub [[Mat2; 2]; 2]);

impl Basis {
    pub fn zero() -> Self {
        Basis::default()
    }

    pub fn scale_re(&self, s: f64) -> Self {
        let mut out = *self;
        for row in out.0.iter_mut() {
            for m in row.iter_mut() {
                *m = m.scale_re(s);
            }
        }
        out
    }

    /// Adds `w · X|i⟩⟨j|Y` to every `K_ij`.
    #[inline]
    pub fn add_split(&mut self, x: &Mat2, y: &Mat2, w: C64) {
        for i in 0..2 {
            let col = x.column(i);
            let col = [col[0] * w, col[1] * w];
            for j in 0..2 {
                self.0[i][j] += Mat2::outer(col, y.row(j));
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().map(Mat2::max_abs).fold(0.0, f64::max)
    }
}

impl AddAssign for Basis {
    fn add_assign(&mut self, o: Basis) {
        for i in 0..2 {
            for j in 0..2 {
                self.0[i][j] += o.0[i][j];
            }
        }
    }
}

/// Source of same-sign propagator segments.
pub trait Segments: Sync {
    /// Segment `[a, a + len]` with `a ≥ 0`.
    fn forward(&self, len: f64) -> Result<Mat2>;
    /// Segment `[b − len, b]` with `b ≤ 0`.
    fn backward(&self, len: f64) -> Result<Mat2>;
}

/// Bare propagators `e^{±i·len·H_s}`.
pub struct Bare<'a>(pub &'a HermitianExp);

impl Segments for Bare<'_> {
    #[inline]
    fn forward(&self, len: f64) -> Result<Mat2> {
        Ok(self.0.exp_i(len))
    }

    #[inline]
    fn backward(&self, len: f64) -> Result<Mat2> {
        Ok(self.0.exp_i(-len))
    }
}

/// Splits the system functional on `[−t, t]` as `U_ij = X |i⟩⟨j| Y`.
///
/// `points[..neg]` lie left of zero and `points[neg..]` right of it (a point
/// at exactly zero may sit on either side, giving the two one-sided limits).
/// The crossing segment is thin; the others come from `seg`.
pub fn split_functional<S: Segments + ?Sized>(
    seg: &S,
    h: &HermitianExp,
    w: &Mat2,
    points: &[f64],
    neg: usize,
    t: f64,
) -> Result<(Mat2, Mat2)> {
    let mut y = Mat2::identity();
    let mut prev = -t;
    for &s in &points[..neg] {
        y = *w * seg.backward(s - prev)? * y;
        prev = s;
    }
    let y = h.exp_i(prev) * y;
    let mut x = Mat2::identity();
    let mut next = t;
    for &s in points[neg..].iter().rev() {
        x = x * seg.forward(next - s)? * *w;
        next = s;
    }
    Ok((x * h.exp_i(next), y))
}

/// Number of strictly negative points.
#[inline]
pub fn negatives(points: &[f64]) -> usize {
    points.iter().take_while(|&&s| s < 0.0).count()
}

/// `i^k` for integer `k ≥ 0`.
#[inline]
pub fn i_pow(k: usize) -> C64 {
    match k % 4 {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    }
}

/// Scratch space reused across the samples of one chunk.
#[derive(Default)]
pub struct Workspace {
    pub points: Vec<f64>,
    pub influence: InfluenceScratch,
}

impl Workspace {
    /// Sum over `table` of `Π B` on `points` (with `t` appended if given).
    pub fn influence(&mut self, corr: &Correlation, table: &PairingTable, t: Option<f64>) -> C64 {
        if let Some(t) = t {
            self.points.push(t);
        }
        corr.fill_pairs(&self.points, &mut self.influence.phasors, &mut self.influence.pairs);
        if t.is_some() {
            self.points.pop();
        }
        table.evaluate(&self.influence.pairs)
    }
}

/// Stream key for one Monte Carlo sum.
#[derive(Debug, Clone, Copy)]
pub struct StreamKey {
    pub seed: u64,
    pub phase: Phase,
    pub step: usize,
    pub m: usize,
}

/// Sum of `count` sample contributions, `m` points each. `sample` draws the
/// points into `ws.points`; `eval` adds the sample's contribution to the
/// accumulator. Chunks are reduced in index order.
pub fn mc_sum<E, A, S, V>(exec: &E, key: StreamKey, count: u64, sample: S, eval: V) -> Result<A>
where
    E: Executor + ?Sized,
    A: Default + AddAssign + Send,
    S: Fn(&mut [f64], &mut RngStream) + Sync + Send,
    V: Fn(&mut Workspace, &mut A) -> Result<()> + Sync + Send,
{
    let chunks = count.div_ceil(CHUNK as u64) as usize;
    let partial = exec.map_chunks(chunks, |c| -> Result<A> {
        let mut rng = RngStream::new(key.seed, key.phase, key.step as u64, key.m as u64, c as u64);
        let mut ws = Workspace::default();
        ws.points.resize(key.m, 0.0);
        let mut acc = A::default();
        let len = (count - (c * CHUNK) as u64).min(CHUNK as u64);
        for _ in 0..len {
            sample(&mut ws.points, &mut rng);
            eval(&mut ws, &mut acc)?;
        }
        Ok(acc)
    });
    let mut total = A::default();
    for p in partial {
        total += p?;
    }
    Ok(total)
}
