//! The GOE Tracy-Widom law (index one).
//!
//! Evaluation is table driven. `data/tw1_table.csv` holds `ln F1` and
//! `ln(1 - F1)` together with their exact derivatives on a uniform grid over
//! `[-10, 12]` (step 0.01); see `data/PROVENANCE.md` for how it was made.
//! Between nodes the log-CDF (or log-survival) is interpolated by a cubic
//! Hermite polynomial whose slopes are clipped with the Fritsch–Carlson
//! rule, so the result is monotone. Outside the grid the leading tail
//! asymptotics are glued on:
//!
//! ```text
//!   ln F1(x)     ~ -|x|^3/24 - |x|^(3/2)/(3 sqrt 2) - ln|x|/16   (x -> -inf)
//!   ln(1-F1(x))  ~ -(2/3) x^(3/2) - (3/4) ln x                  (x -> +inf)
//! ```
//!
//! Once the CDF exceeds `1 - 1e-8` the survival function is evaluated
//! directly from the log-survival column rather than as `1 - F1`, so tiny
//! p-values keep their relative precision.

use std::sync::OnceLock;

/// `E[X]` for `X ~ TW1`, by quadrature over the embedded table.
pub const TW1_MEAN: f64 = -1.206_533_574_582_3;
/// `sqrt(Var[X])` for `X ~ TW1`, by quadrature over the embedded table.
pub const TW1_STD: f64 = 1.267_983_057_685_6;

const TABLE: &str = include_str!("../data/tw1_table.csv");

/// Probability mass above which the survival function is read directly.
const RIGHT_CROSSOVER_SF: f64 = 1e-8;

#[derive(Debug)]
pub struct Tw1Distribution {
    start: f64,
    step: f64,
    ln_cdf: Vec<f64>,
    dln_cdf: Vec<f64>,
    ln_sf: Vec<f64>,
    dln_sf: Vec<f64>,
    /// First grid index at which the survival column takes over.
    crossover: usize,
    /// Continuity factor applied to the survival column at the crossover.
    sf_scale: f64,
}

impl Tw1Distribution {
    fn from_table(text: &str) -> Tw1Distribution {
        let mut xs = Vec::new();
        let mut cols: [Vec<f64>; 4] = Default::default();
        for line in text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty()) {
            let mut fields = line.split(',').map(|f| f.trim().parse::<f64>().expect("numeric table"));
            xs.push(fields.next().expect("x column"));
            for col in cols.iter_mut() {
                col.push(fields.next().expect("table column"));
            }
        }
        let [ln_cdf, dln_cdf, ln_sf, dln_sf] = cols;
        let step = (xs[xs.len() - 1] - xs[0]) / (xs.len() - 1) as f64;
        let crossover = ln_sf
            .iter()
            .position(|&l| l < RIGHT_CROSSOVER_SF.ln())
            .unwrap_or(xs.len() - 1);
        let from_cdf = -ln_cdf[crossover].exp_m1();
        let sf_scale = from_cdf / ln_sf[crossover].exp();
        Tw1Distribution {
            start: xs[0],
            step,
            ln_cdf,
            dln_cdf,
            ln_sf,
            dln_sf,
            crossover,
            sf_scale,
        }
    }

    /// The shared, lazily parsed table.
    pub fn get() -> &'static Tw1Distribution {
        static DIST: OnceLock<Tw1Distribution> = OnceLock::new();
        DIST.get_or_init(|| Tw1Distribution::from_table(TABLE))
    }

    pub fn grid(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.ln_cdf.len()).map(|i| self.node(i))
    }

    fn node(&self, i: usize) -> f64 {
        self.start + self.step * i as f64
    }

    fn end(&self) -> f64 {
        self.node(self.ln_cdf.len() - 1)
    }

    fn crossover_x(&self) -> f64 {
        self.node(self.crossover)
    }

    /// Locates `x` in the grid: interval index and local coordinate in [0, 1].
    fn locate(&self, x: f64) -> (usize, f64) {
        let last = self.ln_cdf.len() - 2;
        let pos = (x - self.start) / self.step;
        let i = (pos.floor().max(0.0) as usize).min(last);
        (i, (pos - i as f64).clamp(0.0, 1.0))
    }

    fn ln_cdf_interior(&self, x: f64) -> (f64, f64) {
        let (i, t) = self.locate(x);
        hermite(&self.ln_cdf, &self.dln_cdf, i, t, self.step)
    }

    fn ln_sf_interior(&self, x: f64) -> (f64, f64) {
        let (i, t) = self.locate(x);
        hermite(&self.ln_sf, &self.dln_sf, i, t, self.step)
    }

    fn left_tail_shape(x: f64) -> f64 {
        let a = -x;
        -a.powi(3) / 24.0 - a.powf(1.5) / (3.0 * std::f64::consts::SQRT_2) - a.ln() / 16.0
    }

    fn right_tail_shape(x: f64) -> f64 {
        -2.0 / 3.0 * x.powf(1.5) - 0.75 * x.ln()
    }

    /// `ln F1(x)` on the CDF side of the crossover.
    fn ln_cdf_left(&self, x: f64) -> f64 {
        if x < self.start {
            self.ln_cdf[0] + Self::left_tail_shape(x) - Self::left_tail_shape(self.start)
        } else {
            self.ln_cdf_interior(x).0
        }
    }

    /// `ln(1 - F1(x))` on the survival side of the crossover.
    fn ln_sf_right(&self, x: f64) -> f64 {
        let raw = if x > self.end() {
            let last = self.ln_sf.len() - 1;
            self.ln_sf[last] + Self::right_tail_shape(x) - Self::right_tail_shape(self.end())
        } else {
            self.ln_sf_interior(x).0
        };
        raw + self.sf_scale.ln()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x.is_nan() {
            return f64::NAN;
        }
        if x <= self.crossover_x() {
            self.ln_cdf_left(x).exp()
        } else {
            1.0 - self.ln_sf_right(x).exp()
        }
    }

    pub fn survival(&self, x: f64) -> f64 {
        if x.is_nan() {
            return f64::NAN;
        }
        if x <= self.crossover_x() {
            1.0 - self.ln_cdf_left(x).exp()
        } else {
            self.ln_sf_right(x).exp()
        }
    }

    /// `ln(1 - F1(x))`, finite far beyond where the survival underflows.
    pub fn ln_survival(&self, x: f64) -> f64 {
        if x <= self.crossover_x() {
            (-self.ln_cdf_left(x).exp()).ln_1p()
        } else {
            self.ln_sf_right(x)
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        if x <= self.crossover_x() {
            if x < self.start {
                let a = -x;
                let slope = a * a / 8.0 + 0.5 * a.sqrt() / std::f64::consts::SQRT_2 + 1.0 / (16.0 * a);
                return self.ln_cdf_left(x).exp() * slope;
            }
            let (l, dl) = self.ln_cdf_interior(x);
            l.exp() * dl
        } else {
            if x > self.end() {
                let slope = -x.sqrt() - 0.75 / x;
                return -self.ln_sf_right(x).exp() * slope;
            }
            let (l, dl) = self.ln_sf_interior(x);
            -(l + self.sf_scale.ln()).exp() * dl
        }
    }

    /// Inverse CDF by bisection, for `q` in (0, 1).
    pub fn quantile(&self, q: f64) -> f64 {
        assert!(q > 0.0 && q < 1.0, "quantile level {q} outside (0, 1)");
        let (mut lo, mut hi) = (-20.0, 30.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) < q {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-13 {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    /// Mean and standard deviation by composite Simpson quadrature of the
    /// tabulated density over the grid. Mass outside the grid is below 1e-20.
    pub fn table_moments(&self) -> (f64, f64) {
        let m = self.ln_cdf.len();
        let density_at = |i: usize| {
            if i <= self.crossover {
                self.ln_cdf[i].exp() * self.dln_cdf[i]
            } else {
                -(self.ln_sf[i].exp() * self.sf_scale) * self.dln_sf[i]
            }
        };
        let mut s = [0.0f64; 3];
        let intervals = if (m - 1) % 2 == 0 { m - 1 } else { m - 2 };
        for i in 0..=intervals {
            let w = if i == 0 || i == intervals {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            let x = self.node(i);
            let f = density_at(i);
            s[0] += w * f;
            s[1] += w * f * x;
            s[2] += w * f * x * x;
        }
        let h = self.step / 3.0;
        let (mass, first, second) = (s[0] * h, s[1] * h, s[2] * h);
        let mean = first / mass;
        (mean, (second / mass - mean * mean).sqrt())
    }

    pub fn mean(&self) -> f64 {
        TW1_MEAN
    }

    pub fn std_dev(&self) -> f64 {
        TW1_STD
    }
}

/// Cubic Hermite interpolation on interval `i` at local coordinate `t`,
/// with Fritsch–Carlson slope limiting. Returns value and derivative.
fn hermite(values: &[f64], slopes: &[f64], i: usize, t: f64, h: f64) -> (f64, f64) {
    let (y0, y1) = (values[i], values[i + 1]);
    let (mut m0, mut m1) = (slopes[i] * h, slopes[i + 1] * h);
    let delta = y1 - y0;
    if delta == 0.0 {
        m0 = 0.0;
        m1 = 0.0;
    } else {
        let (a, b) = (m0 / delta, m1 / delta);
        if a < 0.0 {
            m0 = 0.0;
        }
        if b < 0.0 {
            m1 = 0.0;
        }
        let r = a * a + b * b;
        if r > 9.0 {
            let tau = 3.0 / r.sqrt();
            m0 *= tau;
            m1 *= tau;
        }
    }
    let t2 = t * t;
    let t3 = t2 * t;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    let value = h00 * y0 + h10 * m0 + h01 * y1 + h11 * m1;
    let d00 = 6.0 * t2 - 6.0 * t;
    let d10 = 3.0 * t2 - 4.0 * t + 1.0;
    let d01 = -6.0 * t2 + 6.0 * t;
    let d11 = 3.0 * t2 - 2.0 * t;
    let deriv = (d00 * y0 + d10 * m0 + d01 * y1 + d11 * m1) / h;
    (value, deriv)
}

pub fn tw1_cdf(x: f64) -> f64 {
    Tw1Distribution::get().cdf(x)
}

pub fn tw1_survival(x: f64) -> f64 {
    Tw1Distribution::get().survival(x)
}

pub fn tw1_quantile(q: f64) -> f64 {
    Tw1Distribution::get().quantile(q)
}

/// `(mean, standard deviation)` of TW1.
pub fn tw1_moments() -> (f64, f64) {
    (TW1_MEAN, TW1_STD)
}
