//! The polynomial families: quantum and affine q-Krawtchouk, their
//! normalized forms, the q-binomial weight, and the classical Krawtchouk
//! limit target.

use crate::error::{QError, Result};
use crate::qseries::{binom2, phi_series, qbinomial, qpochhammer, PhiSeriesSpec};
use crate::scalar::{QContext, Scalar};

const MAX_TERMS: usize = 4096;

/// Index data for K_n^Qtm(q^-x; p, N; q). In the rotation context
/// p = 1/(theta^2 q^N).
#[derive(Clone, Debug)]
pub struct QtmKrawtchoukSpec<S> {
    pub n: u32,
    pub x: u32,
    pub p: S,
    pub big_n: u32,
}

/// Index data for K_n^Aff(q^-x; p, N; q). In the rotation context
/// p = theta^2 / q.
#[derive(Clone, Debug)]
pub struct AffKrawtchoukSpec<S> {
    pub n: u32,
    pub x: u32,
    pub p: S,
    pub big_n: u32,
}

/// K_n^Qtm(q^-x; p, N; q) = 2phi1(q^-n, q^-x; q^-N; q, p q^{n+1}).
pub fn quantum_qk<S: Scalar>(spec: &QtmKrawtchoukSpec<S>, ctx: &QContext<S>) -> Result<S> {
    let series = PhiSeriesSpec::new(
        vec![ctx.q.powi(-(spec.n as i64)), ctx.q.powi(-(spec.x as i64))],
        vec![ctx.q.powi(-(spec.big_n as i64))],
        spec.p.clone() * ctx.q.powi(spec.n as i64 + 1),
    );
    phi_series(&series, ctx, MAX_TERMS)
}

/// K_n^Aff(q^-x; p, N; q), evaluated through both of its hypergeometric
/// forms (a 3phi2 and a prefactored 2phi1); the two must agree.
pub fn affine_qk<S: Scalar>(spec: &AffKrawtchoukSpec<S>, ctx: &QContext<S>) -> Result<S> {
    let n = spec.n as i64;
    let x = spec.x as i64;
    let big_n = spec.big_n as i64;
    let pq = spec.p.clone() * ctx.q.clone();

    let form_3phi2 = phi_series(
        &PhiSeriesSpec::new(
            vec![ctx.q.powi(-n), ctx.zero(), ctx.q.powi(-x)],
            vec![pq.clone(), ctx.q.powi(-big_n)],
            ctx.q.clone(),
        ),
        ctx,
        MAX_TERMS,
    )?;

    let prefactor_denom = qpochhammer(&pq, ctx, spec.n);
    if prefactor_denom.is_zero() {
        return Err(QError::Pole(format!("(pq;q)_{} = 0", spec.n)));
    }
    let mut prefactor = pq.clone().powi(n) * ctx.q.powi(binom2(n)) / prefactor_denom;
    if n % 2 == 1 {
        prefactor = -prefactor;
    }
    let form_2phi1 = prefactor
        * phi_series(
            &PhiSeriesSpec::new(
                vec![ctx.q.powi(-n), ctx.q.powi(x - big_n)],
                vec![ctx.q.powi(-big_n)],
                ctx.q.powi(-x) / spec.p.clone(),
            ),
            ctx,
            MAX_TERMS,
        )?;

    let residual = (form_3phi2.clone() - form_2phi1).abs();
    // The sums are alternating with terms up to ~ q^{-nx} p^{-n}, so the
    // float comparison must absorb the digits lost to that cancellation.
    let consistent = if S::EXACT {
        residual.is_zero()
    } else {
        let lq = -ctx.q.to_f64().log10();
        let pf = spec.p.to_f64().abs();
        let lp = if pf > 0.0 && pf < 1.0 { -pf.log10() } else { 0.0 };
        let loss =
            ((spec.n as f64 * spec.x as f64) * lq + spec.n as f64 * lp).ceil() as i64 + 10;
        residual <= ctx.tol.clone() * S::pow10(loss, ctx.precision)
    };
    if !consistent {
        return Err(QError::Inconsistent(format!(
            "affine q-Krawtchouk forms disagree by {residual} at n={} x={} N={}",
            spec.n, spec.x, spec.big_n
        )));
    }
    Ok(form_3phi2)
}

/// Normalized quantum q-Krawtchouk: the polynomial scaled so that the
/// matrix-element columns built from it are orthonormal. Float backend.
pub fn normalized_quantum_qk<S: Scalar>(
    n: u32,
    x: u32,
    big_n: u32,
    theta2: &S,
    ctx: &QContext<S>,
) -> Result<S> {
    let p = ctx.one() / (theta2.clone() * ctx.q.powi(big_n as i64));
    let shifted = theta2.clone() * ctx.q.powi(big_n as i64 - n as i64);
    let radicand =
        qbinomial(big_n, n as i64, ctx) * theta2.powi(n as i64) / qpochhammer(&shifted, ctx, n);
    let scale = radicand.sqrt()?;
    let poly = quantum_qk(
        &QtmKrawtchoukSpec {
            n,
            x,
            p,
            big_n,
        },
        ctx,
    )?;
    Ok(scale * poly)
}

/// w_x^(N): the q-analog of the binomial distribution on {0..N}.
pub fn weight<S: Scalar>(x: u32, big_n: u32, theta2: &S, ctx: &QContext<S>) -> Result<S> {
    if x > big_n {
        return Err(QError::Domain(format!("x={x} outside 0..{big_n}")));
    }
    Ok(qbinomial(big_n, x as i64, ctx)
        * qpochhammer(theta2, ctx, big_n)
        / qpochhammer(theta2, ctx, x)
        * theta2.powi(x as i64)
        * ctx.q.powi(x as i64 * (x as i64 - 1)))
}

/// Standard Krawtchouk polynomial K_n(x; p; N) as the terminating Gauss
/// sum 2F1(-n, -x; -N; 1/p). q-free; exists as the q -> 1 oracle.
pub fn classical_krawtchouk<S: Scalar>(n: u32, x: u32, big_n: u32, p: &S, precision: u32) -> S {
    let top = n.min(x);
    let mut sum = S::one(precision);
    let mut term = S::one(precision);
    let inv_p = S::one(precision) / p.clone();
    for k in 0..top {
        let k = k as i64;
        let num = S::from_int(k - n as i64, precision) * S::from_int(k - x as i64, precision);
        let den = S::from_int(k - big_n as i64, precision) * S::from_int(k + 1, precision);
        term = term * num / den * inv_p.clone();
        sum = sum + term.clone();
    }
    sum
}

/// Max residual of the orthogonality relation of the quantum family
/// against the weight, over all degree pairs on block N.
pub fn orthogonality_residual<S: Scalar>(big_n: u32, theta2: &S, ctx: &QContext<S>) -> Result<S> {
    let p = ctx.one() / (theta2.clone() * ctx.q.powi(big_n as i64));
    let mut worst = ctx.zero();
    for n in 0..=big_n {
        for n2 in n..=big_n {
            let mut sum = ctx.zero();
            for x in 0..=big_n {
                let kn = quantum_qk(&QtmKrawtchoukSpec { n, x, p: p.clone(), big_n }, ctx)?;
                let kn2 = quantum_qk(&QtmKrawtchoukSpec { n: n2, x, p: p.clone(), big_n }, ctx)?;
                sum = sum + weight(x, big_n, theta2, ctx)? * kn * kn2;
            }
            let expected = if n == n2 {
                let shifted = theta2.clone() * ctx.q.powi(big_n as i64 - n as i64);
                qpochhammer(&ctx.q, ctx, n) * qpochhammer(&ctx.q, ctx, big_n - n)
                    * qpochhammer(&shifted, ctx, n)
                    / (qpochhammer(&ctx.q, ctx, big_n) * theta2.powi(n as i64))
            } else {
                ctx.zero()
            };
            let residual = (sum - expected).abs();
            if residual > worst {
                worst = residual;
            }
        }
    }
    Ok(worst)
}

/// Max residual of the dual orthogonality relation (sum over degrees).
pub fn dual_orthogonality_residual<S: Scalar>(
    big_n: u32,
    theta2: &S,
    ctx: &QContext<S>,
) -> Result<S> {
    let p = ctx.one() / (theta2.clone() * ctx.q.powi(big_n as i64));
    let mut worst = ctx.zero();
    for x in 0..=big_n {
        for x2 in x..=big_n {
            let mut sum = ctx.zero();
            for n in 0..=big_n {
                let shifted = theta2.clone() * ctx.q.powi(big_n as i64 - n as i64);
                let mass = qbinomial(big_n, n as i64, ctx) * theta2.powi(n as i64)
                    / qpochhammer(&shifted, ctx, n);
                let kn = quantum_qk(&QtmKrawtchoukSpec { n, x, p: p.clone(), big_n }, ctx)?;
                let kn2 = quantum_qk(&QtmKrawtchoukSpec { n, x: x2, p: p.clone(), big_n }, ctx)?;
                sum = sum + mass * kn * kn2;
            }
            let expected = if x == x2 {
                ctx.one() / weight(x, big_n, theta2, ctx)?
            } else {
                ctx.zero()
            };
            let residual = (sum - expected).abs();
            if residual > worst {
                worst = residual;
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{BigFloat, Rational};

    fn rctx(num: i64, den: i64) -> QContext<Rational> {
        QContext::new(Rational::from_ratio(num, den, 0), 0).unwrap()
    }

    fn fctx(num: i64, den: i64) -> QContext<BigFloat> {
        QContext::new(BigFloat::from_ratio(num, den, 100), 100).unwrap()
    }

    #[test]
    fn quantum_degenerate_indices() {
        let ctx = rctx(1, 2);
        for (n, x) in [(0u32, 3u32), (0, 0), (4, 0)] {
            let v = quantum_qk(
                &QtmKrawtchoukSpec { n, x, p: ctx.ratio(7, 2), big_n: 5 },
                &ctx,
            )
            .unwrap();
            assert_eq!(v, ctx.one());
        }
    }

    #[test]
    fn quantum_two_term_value() {
        // n=1, x=1, N=2, q=1/2, p=8: 2phi1 term ratio gives 1 - 4/3
        let ctx = rctx(1, 2);
        let v = quantum_qk(
            &QtmKrawtchoukSpec { n: 1, x: 1, p: ctx.int(8), big_n: 2 },
            &ctx,
        )
        .unwrap();
        assert_eq!(v, ctx.ratio(-1, 3));
    }

    #[test]
    fn quantum_degree_variable_symmetry() {
        // The 2phi1 is symmetric in its numerator parameters, so swapping
        // n and x while shifting p to keep the argument p q^{n+1} fixed
        // leaves the value unchanged.
        let ctx = rctx(2, 3);
        let p = ctx.ratio(9, 4);
        for big_n in 1..=6u32 {
            for n in 0..=big_n {
                for x in 0..=n {
                    let a = quantum_qk(&QtmKrawtchoukSpec { n, x, p: p.clone(), big_n }, &ctx)
                        .unwrap();
                    let shifted_p = p.clone() * ctx.q.powi(n as i64 - x as i64);
                    let b = quantum_qk(
                        &QtmKrawtchoukSpec { n: x, x: n, p: shifted_p, big_n },
                        &ctx,
                    )
                    .unwrap();
                    assert_eq!(a, b);
                }
            }
        }
    }

    #[test]
    fn affine_forms_agree_and_edge_cases() {
        let ctx = rctx(1, 2);
        let p = ctx.ratio(1, 4);
        for (n, x) in [(0u32, 2u32), (2, 0)] {
            let v = affine_qk(&AffKrawtchoukSpec { n, x, p: p.clone(), big_n: 3 }, &ctx).unwrap();
            assert_eq!(v, ctx.one());
        }
        // n=1, x=1, N=2: two-term hand sum of the 3phi2:
        // 1 + (1-q^-1)(1-q^-1) q / ((1-q)(1-pq)(1-q^-2)) with q=1/2, p=1/4
        let v = affine_qk(&AffKrawtchoukSpec { n: 1, x: 1, p: p.clone(), big_n: 2 }, &ctx).unwrap();
        let q = ctx.q.clone();
        let hand = ctx.one()
            + (ctx.one() - q.powi(-1)) * (ctx.one() - q.powi(-1)) * q.clone()
                / ((ctx.one() - q.clone())
                    * (ctx.one() - p.clone() * q.clone())
                    * (ctx.one() - q.powi(-2)));
        assert_eq!(v, hand);
        // exhaustive form agreement on a grid (affine_qk errors if the
        // 3phi2 and 2phi1 forms disagree)
        for big_n in 1..=8u32 {
            for n in 0..=big_n {
                for x in 0..=big_n {
                    affine_qk(&AffKrawtchoukSpec { n, x, p: p.clone(), big_n }, &ctx).unwrap();
                }
            }
        }
    }

    #[test]
    fn normalized_quantum_square_matches_definition() {
        let ctx = fctx(1, 2);
        let theta2 = ctx.ratio(1, 3);
        let (n, x, big_n) = (2u32, 1u32, 4u32);
        let v = normalized_quantum_qk(n, x, big_n, &theta2, &ctx).unwrap();
        let p = ctx.one() / (theta2.clone() * ctx.q.powi(big_n as i64));
        let k = quantum_qk(&QtmKrawtchoukSpec { n, x, p, big_n }, &ctx).unwrap();
        let shifted = theta2.clone() * ctx.q.powi(big_n as i64 - n as i64);
        let lhs = v.clone() * v
            * qpochhammer(&shifted, &ctx, n)
            / theta2.powi(n as i64)
            / qbinomial(big_n, n as i64, &ctx);
        assert!(ctx.within_tol(&(lhs - k.clone() * k)));
    }

    #[test]
    fn weight_values_and_normalization() {
        let ctx = rctx(1, 2);
        assert_eq!(weight(0, 0, &ctx.ratio(1, 2), &ctx).unwrap(), ctx.one());
        assert_eq!(weight(0, 1, &ctx.ratio(1, 2), &ctx).unwrap(), ctx.ratio(1, 2));
        assert_eq!(weight(1, 1, &ctx.ratio(1, 2), &ctx).unwrap(), ctx.ratio(1, 2));
        for theta2 in [ctx.ratio(1, 4), ctx.ratio(2, 3)] {
            for big_n in 0..=12u32 {
                let mut total = ctx.zero();
                for x in 0..=big_n {
                    let w = weight(x, big_n, &theta2, &ctx).unwrap();
                    assert!(w > ctx.zero());
                    total = total + w;
                }
                assert_eq!(total, ctx.one(), "weights sum to 1 at N={big_n}");
            }
        }
    }

    #[test]
    fn classical_krawtchouk_values() {
        let p = Rational::from_ratio(1, 2, 0);
        assert_eq!(classical_krawtchouk(0, 3, 5, &p, 0), Rational::from_int(1, 0));
        assert_eq!(classical_krawtchouk(3, 0, 5, &p, 0), Rational::from_int(1, 0));
        // n=1, x=1, N=2, p=1/2: 1 + (-1)(-1)/(-2) * 2 = 0
        assert_eq!(classical_krawtchouk(1, 1, 2, &p, 0), Rational::from_int(0, 0));
    }

    #[test]
    fn orthogonality_exact() {
        for (qn, qd) in [(1i64, 3i64), (1, 2)] {
            let ctx = rctx(qn, qd);
            for theta2 in [ctx.ratio(1, 4), ctx.ratio(3, 4)] {
                for big_n in 0..=6u32 {
                    assert!(orthogonality_residual(big_n, &theta2, &ctx).unwrap().is_zero());
                    assert!(dual_orthogonality_residual(big_n, &theta2, &ctx)
                        .unwrap()
                        .is_zero());
                }
            }
        }
    }
}
