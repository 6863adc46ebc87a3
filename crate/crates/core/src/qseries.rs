//! q-analysis primitives: q-shifted factorials, q-binomial coefficients,
//! q-exponentials and the basic hypergeometric series r_phi_s.

use crate::error::{QError, Result};
use crate::scalar::{QContext, Scalar};

/// n(n-1)/2
pub fn binom2(n: i64) -> i64 {
    n * (n - 1) / 2
}

/// (a;q)_n = prod_{k=0}^{n-1} (1 - a q^k); 1 when n = 0.
pub fn qpochhammer<S: Scalar>(a: &S, ctx: &QContext<S>, n: u32) -> S {
    let mut acc = ctx.one();
    let mut aqk = a.clone();
    for _ in 0..n {
        acc = acc * (ctx.one() - aqk.clone());
        aqk = aqk * ctx.q.clone();
    }
    acc
}

/// (a;q)_inf by truncated product.
///
/// Factors (1 - a q^k) are multiplied until |a q^k| < 10^-(P+5); the
/// neglected tail satisfies |log tail| <= |a q^k| / (1 - q), which is
/// below the working precision at that point.
pub fn qpochhammer_inf<S: Scalar>(a: &S, ctx: &QContext<S>) -> Result<S> {
    if a.is_zero() {
        return Ok(ctx.one());
    }
    if S::EXACT {
        return Err(QError::ExactUnsupported(
            "(a;q)_inf requires the float backend".into(),
        ));
    }
    let cutoff = S::pow10(-((ctx.precision + 5) as i64), ctx.precision);
    let mut acc = ctx.one();
    let mut aqk = a.clone();
    while aqk.abs() >= cutoff {
        acc = acc * (ctx.one() - aqk.clone());
        aqk = aqk * ctx.q.clone();
    }
    Ok(acc)
}

/// Gaussian binomial [a; b]_q; 0 outside 0 <= b <= a so that shifted sums
/// can run over rectangular index ranges.
pub fn qbinomial<S: Scalar>(a: u32, b: i64, ctx: &QContext<S>) -> S {
    if b < 0 || b > a as i64 {
        return ctx.zero();
    }
    let b = b as u32;
    qpochhammer(&ctx.q, ctx, a)
        / (qpochhammer(&ctx.q, ctx, b) * qpochhammer(&ctx.q, ctx, a - b))
}

/// Little q-exponential e_q(z) = 1/(z;q)_inf, |z| < 1.
pub fn little_q_exp<S: Scalar>(z: &S, ctx: &QContext<S>) -> Result<S> {
    if z.abs() >= ctx.one() {
        return Err(QError::Domain(format!("e_q requires |z| < 1, got {z}")));
    }
    Ok(ctx.one() / qpochhammer_inf(z, ctx)?)
}

/// Big q-exponential E_q(z) = (-z;q)_inf.
pub fn big_q_exp<S: Scalar>(z: &S, ctx: &QContext<S>) -> Result<S> {
    qpochhammer_inf(&-z.clone(), ctx)
}

/// Parameters of an r_phi_s basic hypergeometric series.
#[derive(Clone, Debug)]
pub struct PhiSeriesSpec<S> {
    pub numerator: Vec<S>,
    pub denominator: Vec<S>,
    pub z: S,
}

impl<S: Scalar> PhiSeriesSpec<S> {
    pub fn new(numerator: Vec<S>, denominator: Vec<S>, z: S) -> Self {
        PhiSeriesSpec {
            numerator,
            denominator,
            z,
        }
    }
}

/// Smallest m <= limit with a = q^-m (exact backend: equality; float:
/// relative proximity below tol).
fn power_match<S: Scalar>(a: &S, ctx: &QContext<S>, limit: usize) -> Option<usize> {
    let one = ctx.one();
    // q^-m is positive and a q^m moves monotonically toward (and past) 1,
    // so the scan can stop as soon as the target becomes unreachable.
    let shrinking = ctx.q < one;
    let mut aqm = a.clone();
    for m in 0..=limit {
        if aqm <= ctx.zero() {
            return None;
        }
        if S::EXACT {
            if aqm == one {
                return Some(m);
            }
        } else if (aqm.clone() - one.clone()).abs() <= ctx.tol {
            return Some(m);
        }
        if shrinking {
            if aqm.clone() + ctx.tol.clone() < one {
                return None;
            }
        } else if one.clone() + ctx.tol.clone() < aqm {
            return None;
        }
        aqm = aqm * ctx.q.clone();
    }
    None
}

/// Evaluates the series of r_phi_s with the exact [(-1)^n q^C(n,2)]^(1+s-r)
/// factor. Terminating series are summed over their finite range; otherwise
/// terms are accumulated until they are negligible relative to the sum.
pub fn phi_series<S: Scalar>(
    spec: &PhiSeriesSpec<S>,
    ctx: &QContext<S>,
    max_terms: usize,
) -> Result<S> {
    let r = spec.numerator.len() as i64;
    let s = spec.denominator.len() as i64;
    let e = 1 + s - r;

    let termination = spec
        .numerator
        .iter()
        .filter_map(|a| power_match(a, ctx, max_terms))
        .min();

    // A denominator parameter equal to q^-m produces a zero factor in
    // (b;q)_k for k > m, i.e. a pole, unless the series stops first.
    for b in &spec.denominator {
        if let Some(m) = power_match(b, ctx, max_terms) {
            let blocks = match termination {
                Some(t) => m < t,
                None => true,
            };
            if blocks {
                return Err(QError::Pole(format!(
                    "denominator parameter {b} = q^-{m} hit before termination"
                )));
            }
        }
    }

    let mut sum = ctx.one();
    let mut term = ctx.one();
    let mut small_streak = 0usize;
    let mut k: usize = 0;
    loop {
        if let Some(t) = termination {
            if k == t {
                return Ok(sum);
            }
        }
        if k >= max_terms {
            if termination.is_none() {
                return Err(QError::Divergence { max_terms });
            }
            return Ok(sum);
        }
        let qk = ctx.q.powi(k as i64);
        let mut ratio = spec.z.clone();
        for a in &spec.numerator {
            ratio = ratio * (ctx.one() - a.clone() * qk.clone());
        }
        for b in &spec.denominator {
            let factor = ctx.one() - b.clone() * qk.clone();
            if factor.is_zero() {
                return Err(QError::Pole(format!(
                    "denominator parameter {b} poles at term {}",
                    k + 1
                )));
            }
            ratio = ratio / factor;
        }
        ratio = ratio / (ctx.one() - ctx.q.powi(k as i64 + 1));
        if e != 0 {
            let mut extra = ctx.q.powi(k as i64 * e);
            if e.rem_euclid(2) == 1 {
                extra = -extra;
            }
            ratio = ratio * extra;
        }
        term = term * ratio;
        sum = sum + term.clone();
        k += 1;

        if termination.is_none() && !S::EXACT {
            // stop well below tol so the geometric tail stays negligible
            let cutoff = ctx.tol.clone() * S::pow10(-10, ctx.precision);
            if term.abs() <= cutoff * (sum.abs() + ctx.one()) {
                small_streak += 1;
                if small_streak >= 2 {
                    return Ok(sum);
                }
            } else {
                small_streak = 0;
            }
        }
    }
}

/// Residuals of the two q-shifted-factorial identities used throughout:
/// the shift identity for (a;q)_{n-k} and the finite identity for
/// (q^-n;q)_k.
#[derive(Clone, Debug)]
pub struct ShiftResiduals<S> {
    pub shift: S,
    pub finite: S,
}

pub fn pochhammer_shift_residuals<S: Scalar>(
    a: &S,
    n: u32,
    k: u32,
    ctx: &QContext<S>,
) -> Result<ShiftResiduals<S>> {
    if k > n {
        return Err(QError::Domain(format!("need k <= n, got k={k} n={n}")));
    }
    if a.is_zero() {
        return Err(QError::Domain("a must be nonzero".into()));
    }

    // (a;q)_{n-k} = (a;q)_n / (q^{1-n}/a;q)_k * (-q/a)^k * q^{C(k,2)-nk}
    let shifted_param = ctx.q.powi(1 - n as i64) / a.clone();
    let denom = qpochhammer(&shifted_param, ctx, k);
    if denom.is_zero() {
        return Err(QError::Pole(format!("(q^{}/a;q)_{} = 0", 1 - n as i64, k)));
    }
    let lhs = qpochhammer(a, ctx, n - k);
    let rhs = qpochhammer(a, ctx, n) / denom
        * (-(ctx.q.clone() / a.clone())).powi(k as i64)
        * ctx.q.powi(binom2(k as i64) - (n as i64) * (k as i64));
    let shift = (lhs - rhs).abs();

    // (q^-n;q)_k = (q;q)_n / (q;q)_{n-k} * (-1)^k q^{C(k,2)-nk}
    let lhs2 = qpochhammer(&ctx.q.powi(-(n as i64)), ctx, k);
    let mut rhs2 = qpochhammer(&ctx.q, ctx, n) / qpochhammer(&ctx.q, ctx, n - k)
        * ctx.q.powi(binom2(k as i64) - (n as i64) * (k as i64));
    if k % 2 == 1 {
        rhs2 = -rhs2;
    }
    let finite = (lhs2 - rhs2).abs();

    Ok(ShiftResiduals { shift, finite })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{BigFloat, Rational};

    fn fctx(num: i64, den: i64) -> QContext<BigFloat> {
        QContext::new(BigFloat::from_ratio(num, den, 100), 100).unwrap()
    }

    fn rctx(num: i64, den: i64) -> QContext<Rational> {
        QContext::new(Rational::from_ratio(num, den, 0), 0).unwrap()
    }

    // direct term-by-term oracle, independent of the incremental path
    fn phi_oracle(
        num: &[Rational],
        den: &[Rational],
        z: &Rational,
        ctx: &QContext<Rational>,
        terms: u32,
    ) -> Rational {
        let e = 1 + den.len() as i64 - num.len() as i64;
        let mut sum = ctx.zero();
        for k in 0..=terms {
            let mut t = z.powi(k as i64);
            for a in num {
                t = t * qpochhammer(a, ctx, k);
            }
            for b in den {
                t = t / qpochhammer(b, ctx, k);
            }
            t = t / qpochhammer(&ctx.q, ctx, k);
            if e != 0 {
                let mut extra = ctx.q.powi(binom2(k as i64) * e);
                if e.rem_euclid(2) == 1 && k % 2 == 1 {
                    extra = -extra;
                }
                t = t * extra;
            }
            sum = sum + t;
        }
        sum
    }

    #[test]
    fn qpochhammer_edge_cases() {
        let ctx = rctx(1, 2);
        assert_eq!(qpochhammer(&ctx.ratio(7, 3), &ctx, 0), ctx.one());
        assert_eq!(qpochhammer(&ctx.one(), &ctx, 4), ctx.zero());
        // (1/2; 1/2)_2 = (1/2)(3/4) = 3/8
        assert_eq!(qpochhammer(&ctx.ratio(1, 2), &ctx, 2), ctx.ratio(3, 8));
    }

    #[test]
    fn qpochhammer_recurrence() {
        let ctx = rctx(2, 3);
        let a = ctx.ratio(-5, 7);
        for n in 0..10u32 {
            let lhs = qpochhammer(&a, &ctx, n + 1);
            let rhs = qpochhammer(&a, &ctx, n) * (ctx.one() - a.clone() * ctx.q.powi(n as i64));
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn qpochhammer_inf_values() {
        let ctx = fctx(1, 2);
        assert_eq!(qpochhammer_inf(&ctx.zero(), &ctx).unwrap(), ctx.one());
        // Euler function at 1/2, frozen from a direct f64 product
        let v = qpochhammer_inf(&ctx.ratio(1, 2), &ctx).unwrap();
        let reference = BigFloat::parse("0.288788095086602421", 100).unwrap();
        assert!((v - reference).abs() < BigFloat::pow10(-17, 100));
    }

    #[test]
    fn qpochhammer_inf_telescoping() {
        let ctx = fctx(3, 5);
        for (num, den, n) in [(1, 3, 4u32), (-2, 7, 6), (4, 5, 1)] {
            let a = ctx.ratio(num, den);
            let lhs = qpochhammer_inf(&a, &ctx).unwrap()
                / qpochhammer_inf(&(a.clone() * ctx.q.powi(n as i64)), &ctx).unwrap();
            let rhs = qpochhammer(&a, &ctx, n);
            assert!(ctx.within_tol(&(lhs - rhs)));
        }
    }

    #[test]
    fn qbinomial_values() {
        let ctx = rctx(1, 2);
        assert_eq!(qbinomial(5, 0, &ctx), ctx.one());
        assert_eq!(qbinomial(2, 1, &ctx), ctx.one() + ctx.q.clone());
        assert_eq!(qbinomial(4, -1, &ctx), ctx.zero());
        assert_eq!(qbinomial(4, 5, &ctx), ctx.zero());
        for n in 0..=12u32 {
            for b in 0..=n as i64 {
                assert_eq!(qbinomial(n, b, &ctx), qbinomial(n, n as i64 - b, &ctx));
            }
        }
    }

    #[test]
    fn qbinomial_pascal_recurrence() {
        let ctx = rctx(2, 3);
        for a in 1..=12u32 {
            for b in 0..=a as i64 {
                let lhs = qbinomial(a, b, &ctx);
                let rhs = qbinomial(a - 1, b - 1, &ctx)
                    + ctx.q.powi(b) * qbinomial(a - 1, b, &ctx);
                assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn q_exponentials() {
        let ctx = fctx(1, 2);
        assert_eq!(little_q_exp(&ctx.zero(), &ctx).unwrap(), ctx.one());
        assert_eq!(big_q_exp(&ctx.zero(), &ctx).unwrap(), ctx.one());
        assert!(little_q_exp(&ctx.int(1), &ctx).is_err());
        // e_q(z) E_q(-z) = 1
        for (num, den) in [(9, 10), (-9, 10), (1, 3), (-7, 11)] {
            let z = ctx.ratio(num, den);
            let prod = little_q_exp(&z, &ctx).unwrap() * big_q_exp(&-z.clone(), &ctx).unwrap();
            assert!(ctx.within_tol(&(prod - ctx.one())));
        }
        // E_q(-lambda q^n) = E_q(-lambda) / (lambda;q)_n
        for (num, den, n) in [(1, 3, 3u32), (4, 5, 5), (-2, 7, 2)] {
            let lam = ctx.ratio(num, den);
            let lhs = big_q_exp(&(-lam.clone() * ctx.q.powi(n as i64)), &ctx).unwrap();
            let rhs = big_q_exp(&-lam.clone(), &ctx).unwrap() / qpochhammer(&lam, &ctx, n);
            assert!(ctx.within_tol(&(lhs - rhs)));
        }
    }

    #[test]
    fn phi_series_unit_numerator_parameter() {
        let ctx = fctx(1, 2);
        let spec = PhiSeriesSpec::new(
            vec![ctx.one(), ctx.ratio(1, 3)],
            vec![ctx.ratio(1, 5)],
            ctx.int(2),
        );
        assert_eq!(phi_series(&spec, &ctx, 200).unwrap(), ctx.one());
    }

    #[test]
    fn phi_series_two_term_example() {
        // 2phi1(q^-1, q^-1; q^-2; q=1/2, z=2) = -1/3
        let ctx = rctx(1, 2);
        let spec = PhiSeriesSpec::new(
            vec![ctx.q.powi(-1), ctx.q.powi(-1)],
            vec![ctx.q.powi(-2)],
            ctx.int(2),
        );
        let v = phi_series(&spec, &ctx, 200).unwrap();
        assert_eq!(v, ctx.ratio(-1, 3));
        let oracle = phi_oracle(
            &[ctx.q.powi(-1), ctx.q.powi(-1)],
            &[ctx.q.powi(-2)],
            &ctx.int(2),
            &ctx,
            1,
        );
        assert_eq!(v, oracle);
    }

    #[test]
    fn phi_series_matches_little_exp() {
        // 1phi0(0; -; q, z) = e_q(z) for |z| < 1
        let ctx = fctx(2, 5);
        for (num, den) in [(1, 2), (-3, 4), (1, 7)] {
            let z = ctx.ratio(num, den);
            let spec = PhiSeriesSpec::new(vec![ctx.zero()], vec![], z.clone());
            let series = phi_series(&spec, &ctx, 5000).unwrap();
            let exp = little_q_exp(&z, &ctx).unwrap();
            assert!(ctx.within_tol(&(series - exp)));
        }
    }

    #[test]
    fn phi_series_pole_detection() {
        let ctx = rctx(1, 2);
        // denominator q^-1 poles at term 2, series terminates at k=3
        let spec = PhiSeriesSpec::new(
            vec![ctx.q.powi(-3)],
            vec![ctx.q.powi(-1)],
            ctx.ratio(1, 3),
        );
        assert!(matches!(phi_series(&spec, &ctx, 200), Err(QError::Pole(_))));
    }

    #[test]
    fn phi_series_divergence() {
        let ctx = fctx(1, 2);
        let spec = PhiSeriesSpec::new(vec![ctx.int(3)], vec![], ctx.int(2));
        assert!(matches!(
            phi_series(&spec, &ctx, 50),
            Err(QError::Divergence { .. })
        ));
    }

    #[test]
    fn phi_series_backend_agreement() {
        let rc = rctx(1, 2);
        let fc = fctx(1, 2);
        let exact = {
            let spec = PhiSeriesSpec::new(
                vec![rc.q.powi(-4), rc.q.powi(-2)],
                vec![rc.q.powi(-6)],
                rc.ratio(5, 7),
            );
            phi_series(&spec, &rc, 200).unwrap()
        };
        let float = {
            let spec = PhiSeriesSpec::new(
                vec![fc.q.powi(-4), fc.q.powi(-2)],
                vec![fc.q.powi(-6)],
                fc.ratio(5, 7),
            );
            phi_series(&spec, &fc, 200).unwrap()
        };
        let expected = BigFloat::parse(&exact.serialize(), 100).unwrap();
        assert!(fc.within_tol(&(float - expected)));
    }

    #[test]
    fn shift_identities() {
        let rc = rctx(1, 2);
        for &(num, den) in &[(2, 3), (-1, 5), (7, 4), (1, 9)] {
            let a = rc.ratio(num, den);
            for n in 0..=8u32 {
                for k in 0..=n {
                    match pochhammer_shift_residuals(&a, n, k, &rc) {
                        Ok(res) => {
                            assert!(res.shift.is_zero(), "shift residual at a={a} n={n} k={k}");
                            assert!(res.finite.is_zero(), "finite residual at n={n} k={k}");
                        }
                        Err(QError::Pole(_)) => {} // a on the excluded set
                        Err(e) => panic!("unexpected error {e}"),
                    }
                }
            }
        }
    }
}
