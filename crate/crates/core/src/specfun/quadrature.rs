//! Globally adaptive Gauss–Kronrod (7/15) quadrature over finite or infinite
//! intervals, with caller-supplied breakpoints seeding the initial panels.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

// Gauss weights for the odd-indexed Kronrod nodes 1, 3, 5, 7.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_panels: usize,
    /// Length scale for the map of a half-line onto [0, 1).
    pub tail_scale: f64,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            abs_tol: 1e-10,
            rel_tol: 0.0,
            max_panels: 4000,
            tail_scale: 1.0,
        }
    }
}

impl QuadOptions {
    pub fn abs(tol: f64) -> Self {
        QuadOptions {
            abs_tol: tol,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub panels: usize,
}

#[derive(Clone, Copy)]
enum Segment {
    Finite,
    Upper { a: f64, scale: f64 },
    Lower { b: f64, scale: f64 },
}

impl Segment {
    // Maps t to (x, dx/dt).
    #[inline]
    fn map(&self, t: f64) -> (f64, f64) {
        match *self {
            Segment::Finite => (t, 1.0),
            Segment::Upper { a, scale } => {
                let q = 1.0 - t;
                (a + scale * t / q, scale / (q * q))
            }
            Segment::Lower { b, scale } => {
                let q = 1.0 - t;
                (b - scale * t / q, scale / (q * q))
            }
        }
    }
}

struct Panel {
    lo: f64,
    hi: f64,
    seg: usize,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15<F: Fn(f64) -> f64>(f: &F, seg: &Segment, lo: f64, hi: f64) -> (f64, f64) {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let eval = |t: f64| {
        let (x, jac) = seg.map(t);
        let y = f(x);
        if y == 0.0 {
            0.0
        } else {
            y * jac
        }
    };
    let fc = eval(center);
    let mut res_k = fc * WGK[7];
    let mut res_g = fc * WG[3];
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = eval(center - dx);
        let f2 = eval(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = res_k * half;
    res_abs *= half.abs();
    res_asc *= half.abs();
    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    (value, err)
}

/// Integrates `f` over `[lo, hi]`, either endpoint possibly infinite.
///
/// Breakpoints outside the open interval are ignored; those inside split the
/// initial panels so that jumps of `f` sit on panel edges.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    breakpoints: &[f64],
    opts: &QuadOptions,
) -> Result<Estimate> {
    if lo.is_nan() || hi.is_nan() {
        return Err(crate::error::invalid("integration limit is NaN"));
    }
    if lo == hi {
        return Ok(Estimate {
            value: 0.0,
            error: 0.0,
            panels: 0,
        });
    }
    if lo > hi {
        let e = integrate(f, hi, lo, breakpoints, opts)?;
        return Ok(Estimate {
            value: -e.value,
            ..e
        });
    }

    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|b| b.is_finite() && *b > lo && *b < hi)
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    if lo.is_infinite() && hi.is_infinite() && cuts.is_empty() {
        cuts.push(0.0);
    }
    let mut nodes = Vec::with_capacity(cuts.len() + 2);
    nodes.push(lo);
    nodes.extend(cuts);
    nodes.push(hi);

    let scale = opts.tail_scale.max(f64::MIN_POSITIVE);
    let mut segments = Vec::new();
    let mut heap = BinaryHeap::new();
    for w in nodes.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (seg, tlo, thi) = if a.is_infinite() {
            (Segment::Lower { b, scale }, 0.0, 1.0)
        } else if b.is_infinite() {
            (Segment::Upper { a, scale }, 0.0, 1.0)
        } else {
            (Segment::Finite, a, b)
        };
        let idx = segments.len();
        segments.push(seg);
        let (value, error) = gk15(&f, &seg, tlo, thi);
        heap.push(Panel {
            lo: tlo,
            hi: thi,
            seg: idx,
            value,
            error,
        });
    }

    // Panels too narrow to split further are parked in the running sums.
    let mut total: f64 = heap.iter().map(|p| p.value).sum();
    let mut err: f64 = heap.iter().map(|p| p.error).sum();
    let mut panels = heap.len();
    loop {
        let tol = opts.abs_tol.max(opts.rel_tol * total.abs());
        if err <= tol {
            return Ok(Estimate {
                value: total,
                error: err,
                panels,
            });
        }
        if panels >= opts.max_panels || heap.is_empty() {
            return Err(Error::QuadratureFailure {
                estimate: total,
                error: err,
                tolerance: tol,
            });
        }
        let worst = heap.pop().expect("heap is nonempty");
        let mid = 0.5 * (worst.lo + worst.hi);
        if !(mid > worst.lo && mid < worst.hi)
            || (worst.hi - worst.lo) < 1e-14 * mid.abs().max(f64::MIN_POSITIVE)
        {
            // Cannot refine: its error stays in the total, the panel leaves the queue.
            continue;
        }
        let seg = segments[worst.seg];
        let (v1, e1) = gk15(&f, &seg, worst.lo, mid);
        let (v2, e2) = gk15(&f, &seg, mid, worst.hi);
        total += v1 + v2 - worst.value;
        err += e1 + e2 - worst.error;
        heap.push(Panel {
            lo: worst.lo,
            hi: mid,
            seg: worst.seg,
            value: v1,
            error: e1,
        });
        heap.push(Panel {
            lo: mid,
            hi: worst.hi,
            seg: worst.seg,
            value: v2,
            error: e2,
        });
        panels += 1;
    }
}
