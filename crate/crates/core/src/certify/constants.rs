use serde::Serialize;

use super::{CertifyError, Result};

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CertifyError::InvalidArgument(format!("{name} must be positive and finite, got {v}")))
    }
}

/// `α_η = e^{-ϵ(η/2+1)} / C²`.
pub fn alpha_eta(epsilon: f64, c: f64, eta: f64) -> Result<f64> {
    check_positive("epsilon", epsilon)?;
    if !(c >= 1.0 && c.is_finite()) {
        return Err(CertifyError::InvalidArgument(format!("C must be at least 1, got {c}")));
    }
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(CertifyError::InvalidArgument(format!("eta must be nonnegative, got {eta}")));
    }
    Ok((-epsilon * (eta / 2.0 + 1.0)).exp() / (c * c))
}

/// The three slacks produced by the nesting applications along one segment
/// of gap `segment_gap = d(t_k, t_{k+1})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NestingSlacks {
    pub segment_gap: f64,
    /// `Δ = (D+1)/2 + δ`
    pub first: f64,
    /// `Δ′ = Δ + δ`
    pub second: f64,
    /// `Δ″ = Δ′ + D + 1`
    pub third: f64,
}

pub fn nesting_slacks(segment_gap: f64, delta: f64) -> NestingSlacks {
    let first = (segment_gap + 1.0) / 2.0 + delta;
    let second = first + delta;
    NestingSlacks { segment_gap, first, second, third: second + segment_gap + 1.0 }
}

/// Default extraction gaps `δ₁ = ⌈3δ + 2⌉`, `δ₂ = 2δ₁`.
pub fn default_gaps(delta: f64) -> (f64, f64) {
    let d1 = (3.0 * delta + 2.0).ceil();
    (d1, 2.0 * d1)
}

/// `β = α_{Δ″}/δ₂` with `Δ″` taken at the widest admissible gap `δ₂`.
pub fn beta_from_gaps(epsilon: f64, c: f64, delta: f64, delta2: f64) -> Result<f64> {
    let eta = nesting_slacks(delta2, delta).third;
    Ok(alpha_eta(epsilon, c, eta)? / delta2)
}

/// `D′ = Σ_{k≥0} e^{(β′-ϵq)k}`, finite only when `q > β′/ϵ`.
pub fn series_sum(beta_prime: f64, epsilon: f64, q: f64) -> Result<f64> {
    check_positive("beta_prime", beta_prime)?;
    check_positive("epsilon", epsilon)?;
    let rate = beta_prime - epsilon * q;
    if !(rate < 0.0) {
        return Err(CertifyError::DivergentSeries { q, threshold: beta_prime / epsilon });
    }
    Ok(1.0 / -rate.exp_m1())
}

/// `α′ = β / (D·D′)^{1/q}`.
pub fn alpha_prime(beta: f64, growth_prefactor: f64, beta_prime: f64, epsilon: f64, q: f64) -> Result<f64> {
    check_positive("beta", beta)?;
    check_positive("growth prefactor", growth_prefactor)?;
    let d_prime = series_sum(beta_prime, epsilon, q)?;
    Ok(beta / (growth_prefactor * d_prime).powf(1.0 / q))
}

/// `p₀ = β′/(β′-ϵ)` when `ϵ < β′`; `None` stands for `+∞`.
pub fn p_zero(beta_prime: f64, epsilon: f64) -> Result<Option<f64>> {
    check_positive("beta_prime", beta_prime)?;
    check_positive("epsilon", epsilon)?;
    Ok((epsilon < beta_prime).then(|| beta_prime / (beta_prime - epsilon)))
}

/// Conjugate exponent `q` with `1/p + 1/q = 1`; `p = 1` maps to `+∞`.
pub fn conjugate(p: f64) -> Result<f64> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(CertifyError::InvalidArgument(format!("exponent must be at least 1, got {p}")));
    }
    Ok(if p == 1.0 { f64::INFINITY } else { p / (p - 1.0) })
}

/// Every constant used by the harness, in one serialisable ledger.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProofConstants {
    pub delta: f64,
    pub epsilon: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub delta1: f64,
    pub delta2: f64,
    /// `α = α_{Δ″}` at gap `δ₂`.
    pub alpha: f64,
    /// `α/δ₂`.
    pub beta_paper: f64,
    pub beta_emp: Option<f64>,
    pub beta_prime: f64,
    pub growth_prefactor: f64,
    /// `None` stands for `+∞`.
    pub p_zero: Option<f64>,
}

/// Constants that depend on the exponent in use.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentConstants {
    pub p: f64,
    pub q: f64,
    /// `min(β_paper, β_emp)`.
    pub beta: f64,
    pub series_sum: f64,
    pub alpha_prime: f64,
}

impl ProofConstants {
    /// Builds the ledger with the default gaps.
    pub fn new(delta: f64, epsilon: f64, c: f64, beta_prime: f64, growth_prefactor: f64) -> Result<Self> {
        let (d1, d2) = default_gaps(delta);
        Self::with_gaps(delta, epsilon, c, beta_prime, growth_prefactor, d1, d2)
    }

    pub fn with_gaps(
        delta: f64,
        epsilon: f64,
        c: f64,
        beta_prime: f64,
        growth_prefactor: f64,
        delta1: f64,
        delta2: f64,
    ) -> Result<Self> {
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(CertifyError::InvalidArgument(format!("delta must be nonnegative, got {delta}")));
        }
        if !(delta1 > 3.0 * delta + 1.0 && delta2 >= delta1 && delta2.is_finite()) {
            return Err(CertifyError::InvalidArgument(format!(
                "gaps must satisfy delta2 >= delta1 > 3 delta + 1, got delta1={delta1}, delta2={delta2}, delta={delta}"
            )));
        }
        check_positive("growth prefactor", growth_prefactor)?;
        let alpha = alpha_eta(epsilon, c, nesting_slacks(delta2, delta).third)?;
        Ok(ProofConstants {
            delta,
            epsilon,
            c,
            delta1,
            delta2,
            alpha,
            beta_paper: alpha / delta2,
            beta_emp: None,
            beta_prime,
            growth_prefactor,
            p_zero: p_zero(beta_prime, epsilon)?,
        })
    }

    pub fn alpha_eta(&self, eta: f64) -> Result<f64> {
        alpha_eta(self.epsilon, self.c, eta)
    }

    pub fn slacks(&self, segment_gap: f64) -> NestingSlacks {
        nesting_slacks(segment_gap, self.delta)
    }

    /// `min(β_paper, β_emp)`.
    pub fn beta(&self) -> f64 {
        self.beta_emp.map_or(self.beta_paper, |b| b.min(self.beta_paper))
    }

    /// Constants for exponent `p`; refuses `p ∉ (1, p₀)`.
    pub fn for_exponent(&self, p: f64) -> Result<ExponentConstants> {
        let out_of_range = !(p > 1.0 && p.is_finite()) || self.p_zero.is_some_and(|p0| p >= p0);
        if out_of_range {
            return Err(CertifyError::OutOfRange { p, p_zero: self.p_zero });
        }
        let q = conjugate(p)?;
        let beta = self.beta();
        Ok(ExponentConstants {
            p,
            q,
            beta,
            series_sum: series_sum(self.beta_prime, self.epsilon, q)?,
            alpha_prime: alpha_prime(beta, self.growth_prefactor, self.beta_prime, self.epsilon, q)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    #[test]
    fn alpha_eta_values() {
        assert!((alpha_eta(LN_2, 1.0, 0.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((alpha_eta(1.0, 2.0, 2.0).unwrap() - (-2f64).exp() / 4.0).abs() < 1e-15);
        assert!((alpha_eta(1e-12, 1.0, 0.0).unwrap() - 1.0).abs() < 1e-11);
        assert!(alpha_eta(0.0, 1.0, 0.0).is_err());
        assert!(alpha_eta(1.0, 0.5, 0.0).is_err());
        assert!(alpha_eta(1.0, 1.0, -1.0).is_err());
    }

    #[test]
    fn slack_chain() {
        let s = nesting_slacks(4.0, 1.0);
        assert_eq!(s.first, 3.5);
        assert_eq!(s.second, 4.5);
        assert_eq!(s.third, 3.0 * 5.0 / 2.0 + 2.0);
        assert_eq!(default_gaps(0.0), (2.0, 4.0));
        assert_eq!(default_gaps(1.0), (5.0, 10.0));
        assert_eq!(default_gaps(0.5), (4.0, 8.0));
    }

    #[test]
    fn series_matches_truncated_sum() {
        for (bp, eps, q) in [(0.1, 1.0, 2.0), (1.0986, 0.2, 6.0), (0.5, 0.3, 2.5)] {
            let closed = series_sum(bp, eps, q).unwrap();
            let mut acc = 0.0;
            let mut k = 0;
            loop {
                let term = ((bp - eps * q) * k as f64).exp();
                acc += term;
                if term < 1e-17 {
                    break;
                }
                k += 1;
            }
            assert!((closed - acc).abs() <= 1e-12 * closed, "{closed} vs {acc}");
        }
        assert!(matches!(series_sum(1.0, 0.5, 2.0), Err(CertifyError::DivergentSeries { .. })));
    }

    #[test]
    fn alpha_prime_values() {
        let a = alpha_prime(1.0, 1.0, 0.1, 1.0, 2.0).unwrap();
        assert!((a - (1.0 - (-1.9f64).exp()).sqrt()).abs() < 1e-15);
        assert!((a - 0.9222).abs() < 1e-4);
        // q near the threshold drives the series up and α′ down
        assert!(alpha_prime(1.0, 1.0, 0.1, 1.0, 0.1 + 1e-9).unwrap() < 1e-3);
        assert!((alpha_prime(0.7, 1.0, 0.1, 1.0, 1e6).unwrap() - 0.7).abs() < 1e-5);
    }

    #[test]
    fn p_zero_values() {
        let p0 = p_zero(3f64.ln(), 0.2).unwrap().unwrap();
        assert!((p0 - 1.2226).abs() < 1e-4);
        assert_eq!(p_zero(0.5, 0.5).unwrap(), None);
        assert!((p_zero(1.0, 1e-9).unwrap().unwrap() - 1.0).abs() < 1e-8);
        assert!(p_zero(0.0, 1.0).is_err());
    }

    #[test]
    fn ledger_refuses_out_of_range() {
        let k = ProofConstants::new(0.0, 0.2, 1.0, 3f64.ln(), 2.0).unwrap();
        assert_eq!((k.delta1, k.delta2), (2.0, 4.0));
        assert!((k.beta_paper - alpha_eta(0.2, 1.0, 7.5).unwrap() / 4.0).abs() < 1e-15);
        assert!(matches!(k.for_exponent(1.3), Err(CertifyError::OutOfRange { .. })));
        assert!(k.for_exponent(1.0).is_err());
        let e = k.for_exponent(1.1).unwrap();
        assert!((1.0 / e.p + 1.0 / e.q - 1.0).abs() < 1e-15);
        let expect = e.beta / (2.0 * e.series_sum).powf(1.0 / e.q);
        assert!((e.alpha_prime - expect).abs() < 1e-15);
        assert!(ProofConstants::with_gaps(1.0, 0.2, 1.0, 1.0, 1.0, 4.0, 8.0).is_err());
    }

    #[test]
    fn empirical_beta_only_tightens() {
        let mut k = ProofConstants::new(0.0, LN_2, 1.0, 1.0, 1.0).unwrap();
        k.beta_emp = Some(1.0);
        assert_eq!(k.beta(), k.beta_paper);
        k.beta_emp = Some(k.beta_paper / 2.0);
        assert_eq!(k.beta(), k.beta_paper / 2.0);
    }
}
