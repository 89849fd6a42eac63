//! Adaptive Gauss-Kronrod quadrature (15-point rule, largest-error-first
//! subdivision) with an embedded error estimate.

use crate::error::{Error, Result};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

// 15-point Kronrod abscissae (positive half) and weights, with the
// embedded 7-point Gauss weights. Standard QUADPACK values.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_33,
    0.949_107_912_342_758_524_526_189_684_047_85,
    0.864_864_423_359_769_072_789_712_788_640_93,
    0.741_531_185_599_394_439_863_864_773_280_79,
    0.586_087_235_467_691_130_294_144_838_258_73,
    0.405_845_151_377_397_166_906_606_412_076_96,
    0.207_784_955_007_898_467_600_689_403_773_24,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_08,
    0.279_705_391_489_276_667_901_467_771_423_78,
    0.381_830_050_505_118_944_950_369_775_488_97,
    0.417_959_183_673_469_387_755_102_040_816_33,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_97,
    0.063_092_092_629_978_553_290_700_663_189_2,
    0.104_790_010_322_250_183_839_876_322_541_52,
    0.140_653_259_715_525_918_745_189_590_510_24,
    0.169_004_726_639_267_902_826_583_426_598_55,
    0.190_350_578_064_785_409_913_256_402_421_01,
    0.204_432_940_075_298_892_414_161_999_234_65,
    0.209_482_141_084_727_828_012_999_174_891_71,
];

/// QUADPACK-style error rescaling from the raw |K15 - G7| difference.
fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut scaled = err.abs();
    if res_asc != 0.0 && scaled != 0.0 {
        let scale = (200.0 * scaled / res_asc).powf(1.5);
        scaled = if scale < 1.0 {
            res_asc * scale
        } else {
            res_asc
        };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        scaled = scaled.max(50.0 * f64::EPSILON * res_abs);
    }
    scaled
}

/// One 15-point Kronrod evaluation over [a, b]: (integral, error estimate).
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let f_center = f(center);

    let mut fv1 = [0.0_f64; 7];
    let mut fv2 = [0.0_f64; 7];
    let mut res_gauss = 0.0;
    let mut res_kronrod = f_center * WGK[7];
    let mut res_abs = res_kronrod.abs();

    for (j, &wg) in WG.iter().enumerate().take(3) {
        let jtw = 2 * j + 1;
        let x = half * XGK[jtw];
        let f1 = f(center - x);
        let f2 = f(center + x);
        fv1[jtw] = f1;
        fv2[jtw] = f2;
        res_gauss += wg * (f1 + f2);
        res_kronrod += WGK[jtw] * (f1 + f2);
        res_abs += WGK[jtw] * (f1.abs() + f2.abs());
    }
    res_gauss += WG[3] * f_center;

    for j in 0..4 {
        let jtw = 2 * j;
        let x = half * XGK[jtw];
        let f1 = f(center - x);
        let f2 = f(center + x);
        fv1[jtw] = f1;
        fv2[jtw] = f2;
        res_kronrod += WGK[jtw] * (f1 + f2);
        res_abs += WGK[jtw] * (f1.abs() + f2.abs());
    }

    let mean = 0.5 * res_kronrod;
    let mut res_asc = WGK[7] * (f_center - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }

    let err = ((res_kronrod - res_gauss) * half).abs();
    (
        res_kronrod * half,
        rescale_error(err, res_abs * half.abs(), res_asc * half.abs()),
    )
}

/// Quadrature outcome: value, error estimate, and subdivision count.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadEstimate {
    pub value: f64,
    pub abs_err: f64,
    pub subdivisions: usize,
}

#[derive(Debug)]
struct Segment {
    err: f64,
    a: f64,
    b: f64,
    value: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Integrate `f` over [a, b], subdividing the worst segment until the
/// summed error estimate drops below `abs_tol + rel_tol * |integral|` or
/// `max_subdiv` splits have been spent (then [`Error::Quadrature`]).
pub fn integrate<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
    max_subdiv: usize,
) -> Result<QuadEstimate> {
    if !a.is_finite() || !b.is_finite() || a >= b {
        return Err(Error::Precondition(format!(
            "integrate requires finite a < b, got [{a}, {b}]"
        )));
    }
    let (v, e) = gk15(f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Segment {
        err: e,
        a,
        b,
        value: v,
    });
    let mut total_v = v;
    let mut total_e = e;
    for split in 0..max_subdiv {
        if total_e <= abs_tol + rel_tol * total_v.abs() {
            return Ok(QuadEstimate {
                value: total_v,
                abs_err: total_e,
                subdivisions: split,
            });
        }
        let worst = heap.pop().expect("heap never empties while splitting");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval no longer splittable in f64; keep its estimate.
            total_e = total_e.min(abs_tol + rel_tol * total_v.abs());
            continue;
        }
        let (lv, le) = gk15(f, worst.a, mid);
        let (rv, re) = gk15(f, mid, worst.b);
        total_v += lv + rv - worst.value;
        total_e += le + re - worst.err;
        heap.push(Segment {
            err: le,
            a: worst.a,
            b: mid,
            value: lv,
        });
        heap.push(Segment {
            err: re,
            a: mid,
            b: worst.b,
            value: rv,
        });
    }
    if total_e <= abs_tol + rel_tol * total_v.abs() {
        return Ok(QuadEstimate {
            value: total_v,
            abs_err: total_e,
            subdivisions: max_subdiv,
        });
    }
    Err(Error::Quadrature(format!(
        "error {total_e:e} above target after {max_subdiv} subdivisions on [{a}, {b}]"
    )))
}
