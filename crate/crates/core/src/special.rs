//! Special functions needed by the operator algebra and state factories:
//! associated Laguerre polynomials, Bessel functions of small argument,
//! normalized Hermite functions, and overflow-safe factorial ratios.

/// Associated Laguerre polynomial Lₙ^{(k)}(x) by the three-term recurrence
/// L₀ = 1, L₁ = 1 + k − x,
/// (m+1)·L_{m+1} = (2m + k + 1 − x)·L_m − (m + k)·L_{m−1},
/// which stays accurate far beyond the factorial-ratio expansion.
pub fn laguerre(n: usize, k: usize, x: f64) -> f64 {
    let kf = k as f64;
    if n == 0 {
        return 1.0;
    }
    let mut lm1 = 1.0;
    let mut l = 1.0 + kf - x;
    for m in 1..n {
        let mf = m as f64;
        let next = ((2.0 * mf + kf + 1.0 - x) * l - (mf + kf) * lm1) / (mf + 1.0);
        lm1 = l;
        l = next;
    }
    l
}

/// √(n!/(n+k)!) = 1/√((n+1)(n+2)…(n+k)), computed without factorials.
pub fn sqrt_factorial_ratio(n: usize, k: usize) -> f64 {
    let mut prod = 1.0;
    for i in 1..=k {
        prod *= (n + i) as f64;
    }
    1.0 / prod.sqrt()
}

/// Binomial coefficient C(n, k) as f64, multiplicative form.
pub fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k.min(n));
    let mut c = 1.0;
    for i in 1..=k {
        c *= (n - k + i) as f64 / i as f64;
    }
    c
}

/// Bessel function of the first kind J_k(x) by the ascending series
/// Σ_m (−1)^m (x/2)^{k+2m} / (m!(m+k)!). Accurate for the small arguments
/// (|x| ≲ 10) this crate needs.
pub fn bessel_j(k: usize, x: f64) -> f64 {
    let half = x / 2.0;
    // term_0 = (x/2)^k / k!
    let mut term = 1.0;
    for i in 1..=k {
        term *= half / i as f64;
    }
    let mut sum = term;
    let mut m = 1.0;
    loop {
        term *= -half * half / (m * (m + k as f64));
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1e-300) || m > 200.0 {
            break;
        }
        m += 1.0;
    }
    sum
}

/// Modified Bessel function I_q(x), ascending series (x ≥ 0).
pub fn bessel_i(q: usize, x: f64) -> f64 {
    let half = x / 2.0;
    let mut term = 1.0;
    for i in 1..=q {
        term *= half / i as f64;
    }
    let mut sum = term;
    let mut m = 1.0;
    loop {
        term *= half * half / (m * (m + q as f64));
        sum += term;
        if term < 1e-17 * sum || m > 400.0 {
            break;
        }
        m += 1.0;
    }
    sum
}

/// Normalized harmonic-oscillator eigenfunctions h₀…h_{nmax} at position x
/// (dimensionless units), via the stable recurrence
/// h_{n+1} = x√(2/(n+1))·h_n − √(n/(n+1))·h_{n−1},
/// h₀ = π^{−1/4} e^{−x²/2}. No factorials, safe for n ≤ 60 and beyond.
pub fn hermite_functions(nmax: usize, x: f64) -> Vec<f64> {
    let mut h = Vec::with_capacity(nmax + 1);
    let h0 = std::f64::consts::PI.powf(-0.25) * (-x * x / 2.0).exp();
    h.push(h0);
    if nmax == 0 {
        return h;
    }
    h.push(x * std::f64::consts::SQRT_2 * h0);
    for n in 1..nmax {
        let nf = n as f64;
        let next = x * (2.0 / (nf + 1.0)).sqrt() * h[n] - (nf / (nf + 1.0)).sqrt() * h[n - 1];
        h.push(next);
    }
    h
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p_prev = 1.0;
    let mut p = x;
    for k in 2..=n {
        let kf = k as f64;
        let next = ((2.0 * kf - 1.0) * x * p - (kf - 1.0) * p_prev) / kf;
        p_prev = p;
        p = next;
    }
    let dp = n as f64 * (x * p - p_prev) / (x * x - 1.0);
    (p, dp)
}

/// Nodes and weights of the n-point Gauss-Legendre rule on [−1, 1],
/// found by Newton iteration on Pₙ from Chebyshev starting points.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 1);
    let mut rule = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        rule.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    rule
}
