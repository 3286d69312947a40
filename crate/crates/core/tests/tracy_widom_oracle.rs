//! Spot checks of the embedded TW1 table against a from-scratch evaluation
//! of F1(s) = det(I - K_s) on L^2(0, inf), K_s(x, y) = Ai((x + y)/2 + s)/2,
//! discretised with Gauss-Legendre quadrature.

use nalgebra::DMatrix;
use twsplit::tracy_widom::Tw1Distribution;

const AI0: f64 = 0.355_028_053_887_817_2;
const AIP0: f64 = 0.258_819_403_792_806_8;

fn airy_series(z: f64) -> f64 {
    let z3 = z * z * z;
    let (mut f, mut g) = (0.0, 0.0);
    let (mut tf, mut tg) = (1.0, z);
    for k in 0..200 {
        f += tf;
        g += tg;
        let k = k as f64;
        tf *= z3 / ((3.0 * k + 2.0) * (3.0 * k + 3.0));
        tg *= z3 / ((3.0 * k + 3.0) * (3.0 * k + 4.0));
        if tf.abs() < 1e-18 * f.abs() && tg.abs() < 1e-18 * g.abs().max(1e-300) {
            break;
        }
    }
    AI0 * f - AIP0 * g
}

/// K_{1/3}(zeta) = int_0^inf exp(-zeta cosh t) cosh(t/3) dt by the
/// trapezoid rule, which converges geometrically for this integrand.
fn bessel_k_third(zeta: f64) -> f64 {
    let h: f64 = 0.02;
    let mut sum = 0.5 * (-zeta).exp();
    let mut t = h;
    loop {
        let term = (-zeta * t.cosh()).exp() * (t / 3.0).cosh();
        sum += term;
        if term < 1e-20 * sum {
            break;
        }
        t += h;
    }
    sum * h
}

fn airy(z: f64) -> f64 {
    if z < 1.0 {
        airy_series(z)
    } else {
        let zeta = 2.0 / 3.0 * z.powf(1.5);
        (z / 3.0).sqrt() / std::f64::consts::PI * bessel_k_third(zeta)
    }
}

fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=m {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

fn tw1_cdf_fredholm(s: f64) -> f64 {
    let m = 140;
    let len = (2.0 * (16.0 - s)).max(12.0);
    let (nodes, weights) = gauss_legendre(m);
    let x: Vec<f64> = nodes.iter().map(|t| 0.5 * len * (t + 1.0)).collect();
    let w: Vec<f64> = weights.iter().map(|w| 0.5 * len * w).collect();
    let mat = DMatrix::from_fn(m, m, |i, j| {
        let k = 0.5 * airy(0.5 * (x[i] + x[j]) + s);
        let delta = if i == j { 1.0 } else { 0.0 };
        delta - w[i].sqrt() * k * w[j].sqrt()
    });
    mat.lu().determinant()
}

#[test]
fn airy_reference_values() {
    let cases = [
        (0.0, 0.355_028_053_887_817_2),
        (1.0, 0.135_292_416_312_881_4),
        (-2.0, 0.227_407_428_201_685_6),
        (5.0, 1.083_444_281_360_744e-4),
        (-5.0, 0.350_761_009_024_114_2),
    ];
    for (z, want) in cases {
        let got = airy(z);
        assert!((got - want).abs() < 1e-13 * want.abs().max(1e-3), "Ai({z}) = {got}, want {want}");
    }
    let below = airy_series(1.0);
    let above = {
        let zeta = 2.0 / 3.0;
        (1.0f64 / 3.0).sqrt() / std::f64::consts::PI * bessel_k_third(zeta)
    };
    assert!((below - above).abs() < 1e-14);
}

#[test]
fn gauss_legendre_integrates_polynomials() {
    let (x, w) = gauss_legendre(20);
    let total: f64 = w.iter().sum();
    assert!((total - 2.0).abs() < 1e-14);
    let x38: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(38)).sum();
    assert!((x38 - 2.0 / 39.0).abs() < 1e-14);
}

#[test]
fn table_agrees_with_fredholm_determinant() {
    let dist = Tw1Distribution::get();
    let mut checked = 0;
    let mut worst: f64 = 0.0;
    for k in 0..=24 {
        let s = -7.0 + 0.5 * k as f64;
        let oracle = tw1_cdf_fredholm(s);
        let table = dist.cdf(s);
        let err = (table - oracle).abs();
        worst = worst.max(err / oracle.max(1e-300));
        assert!(err <= 1e-10 + 1e-8 * oracle, "s = {s}: table {table:.15e}, oracle {oracle:.15e}");
        checked += 1;
    }
    // Off-grid points exercise the interpolant as well as the nodes.
    for s in [-4.123, -2.777, -1.001, 0.337, 1.555, 2.911] {
        let oracle = tw1_cdf_fredholm(s);
        assert!((dist.cdf(s) - oracle).abs() <= 1e-9 + 1e-8 * oracle, "s = {s}");
        checked += 1;
    }
    assert!(checked >= 20);
    println!("worst relative disagreement {worst:.3e}");
}

#[test]
fn right_tail_survival_agrees() {
    let dist = Tw1Distribution::get();
    for s in [2.0, 3.0, 4.0] {
        let oracle = 1.0 - tw1_cdf_fredholm(s);
        let table = dist.survival(s);
        assert!((table - oracle).abs() < 1e-12 + 1e-6 * oracle, "s = {s}: {table:e} vs {oracle:e}");
    }
}
