//! Truncated Taylor-series arithmetic at ω = 0 in extended precision.
//!
//! This produces the expansions the boundary-operator derivation consumes:
//! the auxiliary roots η₁, η₂ of the quadratic
//!
//!   σ(1+ω²)η² + (β(1+ω²)+γω)η + δω + (α−2σ)(1+ω²) = 0,
//!
//! the four characteristic roots λ₁…λ₄ of λ² − ηλ + 1 = 0 (paired so that
//! |λ₁(0)|, |λ₂(0)| < 1 < |λ₃(0)|, |λ₄(0)|), and the real power-sum series
//! s_j = (λ₃ʲ+λ₄ʲ)/2, a_j = (λ₃ʲ−λ₄ʲ)/(2i) that make the linear systems
//! real. η uses the Legendre generating function
//! (ω² − 2εω + 1)^{−1/2} = Σ Pₙ(ε)ωⁿ with ε = μ²/(μ²−2ν), which converges
//! only for |ε| < 1; the derivation refuses to run outside that regime.

use crate::mp::{real, Cx, Real, PREC};
use crate::params::SchemeCoefficients;
use crate::Error;
use rug::Float;
use std::io::Write;

/// A finite Taylor expansion c₀ + c₁ω + … + c_Kω^K with extended-precision
/// complex coefficients. Arithmetic never reads beyond index K.
#[derive(Clone, Debug)]
pub struct TruncatedSeries {
    coeffs: Vec<Cx>,
}

impl TruncatedSeries {
    pub fn zero(order: usize) -> Self {
        TruncatedSeries { coeffs: vec![Cx::zero(); order + 1] }
    }

    pub fn constant(c: Cx, order: usize) -> Self {
        let mut s = Self::zero(order);
        s.coeffs[0] = c;
        s
    }

    /// Build from low-order complex coefficients, zero-padded to `order`.
    pub fn from_coeffs(low: &[Cx], order: usize) -> Self {
        assert!(low.len() <= order + 1, "polynomial degree exceeds series order");
        let mut s = Self::zero(order);
        for (i, c) in low.iter().enumerate() {
            s.coeffs[i] = c.clone();
        }
        s
    }

    /// Build from real f64 polynomial coefficients, zero-padded to `order`.
    pub fn from_real_poly(low: &[f64], order: usize) -> Self {
        let lifted: Vec<Cx> = low.iter().map(|&v| Cx::from_f64(v, 0.0)).collect();
        Self::from_coeffs(&lifted, order)
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, i: usize) -> &Cx {
        &self.coeffs[i]
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.order(), other.order());
        TruncatedSeries {
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.order(), other.order());
        TruncatedSeries {
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn scale(&self, c: &Cx) -> Self {
        TruncatedSeries { coeffs: self.coeffs.iter().map(|a| a * c).collect() }
    }

    pub fn scale_real(&self, s: &Real) -> Self {
        TruncatedSeries { coeffs: self.coeffs.iter().map(|a| a.scale(s)).collect() }
    }

    /// Largest coefficient magnitude, as f64.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.abs().to_f64()).fold(0.0, f64::max)
    }

    /// Largest imaginary-part magnitude, as f64.
    pub fn max_imag_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.im.to_f64().abs()).fold(0.0, f64::max)
    }

    /// Debug dump: one `index,re,im` row per coefficient.
    pub fn dump_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "index,re,im")?;
        for (i, c) in self.coeffs.iter().enumerate() {
            let (re, im) = c.to_f64();
            writeln!(w, "{i},{re:e},{im:e}")?;
        }
        Ok(())
    }
}

/// Cauchy product truncated at order `k`. Both inputs must have order ≥ k.
pub fn series_mul(a: &TruncatedSeries, b: &TruncatedSeries, k: usize) -> TruncatedSeries {
    assert!(a.order() >= k && b.order() >= k, "inputs shorter than requested order");
    let mut out = TruncatedSeries::zero(k);
    for i in 0..=k {
        if a.coeffs[i].is_zero() {
            continue;
        }
        for j in 0..=(k - i) {
            let term = &a.coeffs[i] * &b.coeffs[j];
            out.coeffs[i + j] = &out.coeffs[i + j] + &term;
        }
    }
    out
}

/// Expansion of √(1+s) for a series s with zero constant term, via the
/// binomial series Σₙ (−1)ⁿ(2n)!/((1−2n)·(n!)²·4ⁿ)·sⁿ truncated at `k`.
pub fn sqrt_one_plus(s: &TruncatedSeries, k: usize) -> Result<TruncatedSeries, Error> {
    if s.coeffs[0].abs().to_f64() > 1e-40 {
        return Err(Error::Series(
            "sqrt_one_plus requires a series with zero constant term".into(),
        ));
    }
    let mut out = TruncatedSeries::constant(Cx::one(), k);
    let mut s_pow = TruncatedSeries::constant(Cx::one(), k);
    let mut c = real(1.0); // binomial coefficient, updated as c_{n} = c_{n-1}·(3-2n)/(2n)
    for n in 1..=k {
        s_pow = series_mul(&s_pow, s, k);
        let num = Float::with_val(PREC, 3 - 2 * (n as i64));
        c = Float::with_val(PREC, Float::with_val(PREC, &c * &num) / (2 * n as u64));
        out = out.add(&s_pow.scale_real(&c));
    }
    Ok(out)
}

/// Standard Legendre polynomial values P₀(ε)…P_{n_max}(ε) by Belousov's
/// trigonometric sum with α = arccos(ε):
///
///   Pₙ(cos α) = Fₙ·Σ_{j=0}^{⌊n/2⌋} tⱼ·cos((n−2j)α),
///
/// Fₙ = (2n−1)!!/(2ⁿ⁻¹·n!), t₀ = 1,
/// t_{j+1} = tⱼ·(2j+1)(n−j)/((j+1)(2n−2j−1)), and the final term is halved
/// when n is even. Each cos((n−2j)α) is evaluated directly, so no error
/// accumulates across n the way it does in the three-term recurrence.
pub fn legendre_values(eps: f64, n_max: usize) -> Result<Vec<f64>, Error> {
    let values = legendre_values_mp(&real(eps), n_max)?;
    Ok(values.iter().map(|v| v.to_f64()).collect())
}

/// Extended-precision Belousov evaluation; see [`legendre_values`].
pub fn legendre_values_mp(eps: &Real, n_max: usize) -> Result<Vec<Real>, Error> {
    let abs_eps = Float::with_val(PREC, eps.clone().abs());
    if abs_eps >= 1u32 {
        return Err(Error::Regime { epsilon: eps.to_f64() });
    }
    let alpha = eps.clone().acos();
    let mut out = Vec::with_capacity(n_max + 1);
    // F_0 = 2 so the even-case halving of the single j = 0 term yields P_0 = 1.
    let mut prefactor = real(2.0);
    for n in 0..=n_max {
        if n > 0 {
            // F_n = F_{n-1}·(2n−1)/(2n)
            let num = Float::with_val(PREC, 2 * n as u64 - 1);
            prefactor =
                Float::with_val(PREC, Float::with_val(PREC, &prefactor * &num) / (2 * n as u64));
        }
        let half_n = n / 2;
        let mut term = real(1.0);
        let mut sum = real(0.0);
        for j in 0..=half_n {
            let mut weighted = term.clone();
            if n % 2 == 0 && j == half_n {
                weighted = Float::with_val(PREC, &weighted / 2u32);
            }
            let angle = Float::with_val(PREC, &alpha * ((n - 2 * j) as u64));
            let c = angle.cos();
            sum += Float::with_val(PREC, &weighted * &c);
            if j < half_n {
                // t_{j+1}/t_j = (2j+1)(n−j)/((j+1)(2n−2j−1))
                let num = Float::with_val(PREC, ((2 * j + 1) * (n - j)) as u64);
                let den = Float::with_val(PREC, ((j + 1) * (2 * n - 2 * j - 1)) as u64);
                term = Float::with_val(PREC, Float::with_val(PREC, &term * &num) / &den);
            }
        }
        out.push(Float::with_val(PREC, &prefactor * &sum));
    }
    Ok(out)
}

/// The Taylor expansions of η₁(ω), η₂(ω) at ω = 0, truncated at order `k`:
///
///   η_{1,2} = (1/ν)·[(μ+2ν)(1+ω²) − 2μω ∓ √(μ²−2ν)·(1−ω)(ω²−2εω+1)·ΣPₙ(ε)ωⁿ]
///             · Σ(−1)^kω^{2k},
///
/// with the principal complex branch for √(μ²−2ν) when the radicand is
/// negative (then η₂ is the coefficientwise conjugate of η₁).
pub fn eta_series(
    coeffs: &SchemeCoefficients,
    k: usize,
) -> Result<(TruncatedSeries, TruncatedSeries), Error> {
    let nu = real(coeffs.nu);
    let mu = real(coeffs.mu);
    let mu2 = Float::with_val(PREC, &mu * &mu);
    let radicand = Float::with_val(PREC, &mu2 - Float::with_val(PREC, 2.0 * &nu));
    let eps = Float::with_val(PREC, &mu2 / &radicand);

    let legendre = legendre_values_mp(&eps, k)?;
    let l_series = TruncatedSeries::from_coeffs(
        &legendre.into_iter().map(Cx::from_real).collect::<Vec<_>>(),
        k,
    );

    // (1−ω)·(ω²−2εω+1)·L(ω), scaled by the principal root w = √(μ²−2ν).
    let one_minus = TruncatedSeries::from_real_poly(&[1.0, -1.0], k);
    let gen_poly = TruncatedSeries::from_coeffs(
        &[
            Cx::one(),
            Cx::from_real(Float::with_val(PREC, -2.0 * &eps)),
            Cx::one(),
        ],
        k,
    );
    let radical_part = series_mul(&series_mul(&one_minus, &gen_poly, k), &l_series, k);
    let w = Cx::from_real(radicand).sqrt();
    let w_radical = radical_part.scale(&w);

    // (μ+2ν)(1+ω²) − 2μω
    let mu_2nu = Float::with_val(PREC, &mu + Float::with_val(PREC, 2.0 * &nu));
    let poly_part = TruncatedSeries::from_coeffs(
        &[
            Cx::from_real(mu_2nu.clone()),
            Cx::from_real(Float::with_val(PREC, -2.0 * &mu)),
            Cx::from_real(mu_2nu),
        ],
        k,
    );

    // 1/(1+ω²) = Σ (−1)^k ω^{2k}
    let mut geometric = TruncatedSeries::zero(k);
    for i in (0..=k).step_by(2) {
        geometric.coeffs[i] = Cx::from_f64(if (i / 2) % 2 == 0 { 1.0 } else { -1.0 }, 0.0);
    }

    let inv_nu = Float::with_val(PREC, 1.0 / &nu);
    let eta1 = series_mul(&poly_part.sub(&w_radical), &geometric, k).scale_real(&inv_nu);
    let eta2 = series_mul(&poly_part.add(&w_radical), &geometric, k).scale_real(&inv_nu);
    Ok((eta1, eta2))
}

/// The four characteristic-root expansions, paired by modulus at ω = 0.
///
/// `lam1`/`lam3` come from η₁ and `lam2`/`lam4` from η₂; within each pair
/// the decaying root (|λ(0)| < 1) gets the lower index.
#[derive(Clone, Debug)]
pub struct LambdaQuartet {
    pub lam1: TruncatedSeries,
    pub lam2: TruncatedSeries,
    pub lam3: TruncatedSeries,
    pub lam4: TruncatedSeries,
    pub theta1: Cx,
    pub theta2: Cx,
}

/// Threshold below which ϑ ∓ 2 counts as degenerate.
const THETA_DEGENERACY_TOL: f64 = 1e-12;

/// Solve λ² − ηλ + 1 = 0 for both η series: with r = η − ϑ,
///
///   λ = η/2 ∓ √(ϑ²/4−1)·√(1 + r/(ϑ+2))·√(1 + r/(ϑ−2)),
///
/// the two square-root factors expanded by [`sqrt_one_plus`].
pub fn lambda_series(
    eta: (&TruncatedSeries, &TruncatedSeries),
    k: usize,
) -> Result<LambdaQuartet, Error> {
    let (eta1, eta2) = eta;
    let theta1 = eta1.coeff(0).clone();
    let theta2 = eta2.coeff(0).clone();
    let (lam1, lam3) = split_roots(eta1, k)?;
    let (lam2, lam4) = split_roots(eta2, k)?;
    Ok(LambdaQuartet { lam1, lam2, lam3, lam4, theta1, theta2 })
}

fn split_roots(
    eta: &TruncatedSeries,
    k: usize,
) -> Result<(TruncatedSeries, TruncatedSeries), Error> {
    let theta = eta.coeff(0).clone();
    let two = Cx::from_f64(2.0, 0.0);
    let theta_p2 = &theta + &two;
    let theta_m2 = &theta - &two;
    for (label, v) in [("theta+2", &theta_p2), ("theta-2", &theta_m2)] {
        if v.abs().to_f64() < THETA_DEGENERACY_TOL {
            return Err(Error::Series(format!(
                "characteristic constant degenerate: |{label}| < {THETA_DEGENERACY_TOL}"
            )));
        }
    }

    let mut r = eta.clone();
    r.coeffs[0] = Cx::zero();
    let f_plus = sqrt_one_plus(&r.scale(&theta_p2.recip()), k)?;
    let f_minus = sqrt_one_plus(&r.scale(&theta_m2.recip()), k)?;

    // √(ϑ²/4 − 1)
    let quarter = Cx::from_f64(0.25, 0.0);
    let root_const = (&(&(&theta * &theta) * &quarter) - &Cx::one()).sqrt();
    let deviation = series_mul(&f_plus, &f_minus, k).scale(&root_const);

    let half = eta.scale(&Cx::from_f64(0.5, 0.0));
    let minus = half.sub(&deviation);
    let plus = half.add(&deviation);

    let abs_minus = minus.coeff(0).abs().to_f64();
    let abs_plus = plus.coeff(0).abs().to_f64();
    if (abs_minus - 1.0).abs() < 1e-14 || (abs_plus - 1.0).abs() < 1e-14 {
        return Err(Error::Series(
            "characteristic root on the unit circle; boundary is characteristic".into(),
        ));
    }
    if abs_minus < 1.0 { Ok((minus, plus)) } else { Ok((plus, minus)) }
}

/// Real series over extended-precision coefficients, the element type of the
/// ADTBC linear systems.
#[derive(Clone, Debug)]
pub struct RealSeries {
    pub coeffs: Vec<Real>,
}

impl RealSeries {
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, i: usize) -> &Real {
        &self.coeffs[i]
    }
}

/// Symmetric/antisymmetric power sums of the growing roots:
/// s_j = (λ₃ʲ+λ₄ʲ)/2 and a_j = (λ₃ʲ−λ₄ʲ)/(2i) for j = 0..max_power.
#[derive(Clone, Debug)]
pub struct PowerSums {
    pub s: Vec<RealSeries>,
    pub a: Vec<RealSeries>,
}

/// Absolute tolerance for the λ₄ = conj(λ₃) coefficientwise check.
const CONJUGACY_TOL: f64 = 1e-18;
/// Tolerance for the imaginary residue of the combined series.
const REALITY_TOL: f64 = 1e-20;

pub fn power_sums(q: &LambdaQuartet, max_power: usize, k: usize) -> Result<PowerSums, Error> {
    let scale = q.lam3.max_abs().max(1.0);
    for i in 0..=k.min(q.lam3.order()).min(q.lam4.order()) {
        let diff = q.lam3.coeff(i).conj();
        let diff = &diff - q.lam4.coeff(i);
        if diff.abs().to_f64() > CONJUGACY_TOL * scale {
            return Err(Error::Series(format!(
                "lam3/lam4 are not coefficientwise conjugate at index {i} (|delta| = {:.3e})",
                diff.abs().to_f64()
            )));
        }
    }

    let mut s = Vec::with_capacity(max_power + 1);
    let mut a = Vec::with_capacity(max_power + 1);
    let mut p3 = TruncatedSeries::constant(Cx::one(), k);
    let mut p4 = TruncatedSeries::constant(Cx::one(), k);
    for j in 0..=max_power {
        if j > 0 {
            p3 = series_mul(&p3, &q.lam3, k);
            p4 = series_mul(&p4, &q.lam4, k);
        }
        let sum = p3.add(&p4).scale(&Cx::from_f64(0.5, 0.0));
        // (λ₃ʲ−λ₄ʲ)/(2i) = −i/2·(λ₃ʲ−λ₄ʲ)
        let diff = p3.sub(&p4).scale(&Cx::from_f64(0.0, -0.5));
        let pscale = p3.max_abs().max(1.0);
        for series in [&sum, &diff] {
            if series.max_imag_abs() > REALITY_TOL * pscale {
                return Err(Error::Series(format!(
                    "power sum j = {j} has imaginary residue {:.3e}",
                    series.max_imag_abs()
                )));
            }
        }
        s.push(RealSeries { coeffs: (0..=k).map(|i| sum.coeff(i).re.clone()).collect() });
        a.push(RealSeries { coeffs: (0..=k).map(|i| diff.coeff(i).re.clone()).collect() });
    }
    Ok(PowerSums { s, a })
}

/// Scheme weights recomputed from ν, μ in extended precision. The f64
/// fields of [`SchemeCoefficients`] carry their own rounding; series-level
/// residual checks must use the exact weights the expansions embody.
pub fn exact_weights(coeffs: &SchemeCoefficients) -> (Real, Real, Real, Real, Real) {
    let nu = real(coeffs.nu);
    let mu = real(coeffs.mu);
    let alpha = Float::with_val(
        PREC,
        Float::with_val(PREC, 1.0 + Float::with_val(PREC, 3.0 * &nu)) + Float::with_val(PREC, 2.0 * &mu),
    );
    let beta = -Float::with_val(PREC, Float::with_val(PREC, 2.0 * &nu) + &mu);
    let gamma = Float::with_val(PREC, 2.0 * &mu);
    let delta = -Float::with_val(PREC, 2.0 + Float::with_val(PREC, 4.0 * &mu));
    let sigma = Float::with_val(PREC, &nu / 2u32);
    (alpha, beta, gamma, delta, sigma)
}

/// Residual of the characteristic polynomial (used by tests and the
/// derivation report): σ(1+ω²)(λ⁴+1) + (β(1+ω²)+γω)(λ³+λ) + (α(1+ω²)+δω)λ²,
/// evaluated as a truncated series with the exact weights; returns the
/// largest coefficient magnitude.
pub fn characteristic_residual(
    coeffs: &SchemeCoefficients,
    lam: &TruncatedSeries,
    k: usize,
) -> f64 {
    let (alpha, beta, gamma, delta, sigma) = exact_weights(coeffs);
    let one = TruncatedSeries::constant(Cx::one(), k);
    let l2 = series_mul(lam, lam, k);
    let l3 = series_mul(&l2, lam, k);
    let l4 = series_mul(&l2, &l2, k);
    let one_pw2 = TruncatedSeries::from_real_poly(&[1.0, 0.0, 1.0], k);
    let sig = series_mul(&one_pw2, &l4.add(&one), k).scale_real(&sigma);
    let bg = TruncatedSeries::from_coeffs(
        &[
            Cx::from_real(beta.clone()),
            Cx::from_real(gamma),
            Cx::from_real(beta),
        ],
        k,
    );
    let mid = series_mul(&bg, &l3.add(lam), k);
    let ad = TruncatedSeries::from_coeffs(
        &[
            Cx::from_real(alpha.clone()),
            Cx::from_real(delta),
            Cx::from_real(alpha),
        ],
        k,
    );
    let last = series_mul(&ad, &l2, k);
    sig.add(&mid).add(&last).max_abs()
}
