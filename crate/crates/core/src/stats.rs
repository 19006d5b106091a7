//! Small numerical and statistical helpers: quadrature, tabulated CDFs,
//! Kolmogorov-Smirnov statistics and rank correlation.

/// Composite Simpson rule over [a, b] with `n` intervals (rounded up to even).
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = if n % 2 == 1 { n + 1 } else { n.max(2) };
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// A CDF obtained by integrating a density on a uniform grid, evaluated by
/// linear interpolation.
#[derive(Debug, Clone)]
pub struct TabulatedCdf {
    lo: f64,
    h: f64,
    values: Vec<f64>,
}

impl TabulatedCdf {
    pub fn from_density<F: Fn(f64) -> f64>(pdf: F, lo: f64, hi: f64, n: usize) -> Self {
        let h = (hi - lo) / n as f64;
        let mut values = Vec::with_capacity(n + 1);
        values.push(0.0);
        let mut prev = pdf(lo);
        let mut acc = 0.0;
        for i in 1..=n {
            let x1 = lo + i as f64 * h;
            let mid = pdf(x1 - 0.5 * h);
            let cur = pdf(x1);
            acc += h / 6.0 * (prev + 4.0 * mid + cur);
            values.push(acc);
            prev = cur;
        }
        TabulatedCdf { lo, h, values }
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x <= self.lo {
            return 0.0;
        }
        let pos = (x - self.lo) / self.h;
        let i = pos.floor() as usize;
        if i + 1 >= self.values.len() {
            return *self.values.last().unwrap();
        }
        let frac = pos - i as f64;
        self.values[i] + frac * (self.values[i + 1] - self.values[i])
    }
}

/// One-sample KS statistic `sup |F_n(x) - F(x)|`. Sorts `samples` in place.
pub fn ks_one_sample<F: Fn(f64) -> f64>(samples: &mut [f64], cdf: F) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Two-sample KS statistic. Sorts both inputs in place.
pub fn ks_two_sample(a: &mut [f64], b: &mut [f64]) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic Kolmogorov coefficient `c(α) = sqrt(-ln(α/2) / 2)`.
pub fn kolmogorov_c(alpha: f64) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt()
}

pub fn ks_critical_one_sample(n: usize, alpha: f64) -> f64 {
    kolmogorov_c(alpha) / (n as f64).sqrt()
}

pub fn ks_critical_two_sample(n: usize, m: usize, alpha: f64) -> f64 {
    let (n, m) = (n as f64, m as f64);
    kolmogorov_c(alpha) * ((n + m) / (n * m)).sqrt()
}

fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut r = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation with average ranks for ties. Returns 0 when
/// either input is constant.
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let (rx, ry) = (ranks(xs), ranks(ys));
    let n = rx.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        0.0
    } else {
        sxy / (sxx * syy).sqrt()
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}
