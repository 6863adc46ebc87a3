//! Verification suites for the identities satisfied by the rotation matrix
//! elements and the two q-Krawtchouk families: block-coupling structure
//! relations, conjugation identities, recurrence and difference equations,
//! generating functions, and the quantum/affine dualities.

use crate::error::{QError, Result};
use crate::matrix::Matrix;
use crate::polys::{affine_qk, quantum_qk, AffKrawtchoukSpec, QtmKrawtchoukSpec};
use crate::qseries::{binom2, qbinomial, qpochhammer, PhiSeriesSpec, phi_series};
use crate::rotation::{
    build_u, chi_table, lowering_a, lowering_b, raising_a, raising_b, ChiTable, Provenance,
    RotationParams, chi_q1_limit, chi_q1_target,
};
use crate::scalar::{QContext, Scalar};

const MAX_TERMS: usize = 4096;

/// Dispatch key naming one verifiable identity family.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IdentityKind {
    BackwardMatrix,
    BackwardPoly,
    ForwardMatrix,
    ForwardPoly,
    DualBackward,
    DualForward,
    RecurrenceMatrix,
    RecurrencePoly,
    DifferenceMatrix,
    DifferencePoly,
    GenfunDegrees,
    GenfunDegrees2Phi1,
    GenfunVariables,
    GenfunAffine,
    GenfunAffine2Phi0,
    DualityQtmAff,
    DualityQinv,
    ConjAm,
    ConjB,
    Q1Limit,
}

impl IdentityKind {
    pub const ALL: [IdentityKind; 20] = [
        IdentityKind::BackwardMatrix,
        IdentityKind::BackwardPoly,
        IdentityKind::ForwardMatrix,
        IdentityKind::ForwardPoly,
        IdentityKind::DualBackward,
        IdentityKind::DualForward,
        IdentityKind::RecurrenceMatrix,
        IdentityKind::RecurrencePoly,
        IdentityKind::DifferenceMatrix,
        IdentityKind::DifferencePoly,
        IdentityKind::GenfunDegrees,
        IdentityKind::GenfunDegrees2Phi1,
        IdentityKind::GenfunVariables,
        IdentityKind::GenfunAffine,
        IdentityKind::GenfunAffine2Phi0,
        IdentityKind::DualityQtmAff,
        IdentityKind::DualityQinv,
        IdentityKind::ConjAm,
        IdentityKind::ConjB,
        IdentityKind::Q1Limit,
    ];

    pub fn tag(&self) -> &'static str {
        match self {
            IdentityKind::BackwardMatrix => "backward-matrix",
            IdentityKind::BackwardPoly => "backward-poly",
            IdentityKind::ForwardMatrix => "forward-matrix",
            IdentityKind::ForwardPoly => "forward-poly",
            IdentityKind::DualBackward => "dual-backward",
            IdentityKind::DualForward => "dual-forward",
            IdentityKind::RecurrenceMatrix => "recurrence-matrix",
            IdentityKind::RecurrencePoly => "recurrence-poly",
            IdentityKind::DifferenceMatrix => "difference-matrix",
            IdentityKind::DifferencePoly => "difference-poly",
            IdentityKind::GenfunDegrees => "genfun-degrees",
            IdentityKind::GenfunDegrees2Phi1 => "genfun-degrees-2phi1",
            IdentityKind::GenfunVariables => "genfun-variables",
            IdentityKind::GenfunAffine => "genfun-affine",
            IdentityKind::GenfunAffine2Phi0 => "genfun-affine-2phi0",
            IdentityKind::DualityQtmAff => "duality-qtm-aff",
            IdentityKind::DualityQinv => "duality-qinv",
            IdentityKind::ConjAm => "conj-Am",
            IdentityKind::ConjB => "conj-B",
            IdentityKind::Q1Limit => "q1-limit",
        }
    }

    pub fn from_tag(tag: &str) -> Option<IdentityKind> {
        IdentityKind::ALL.iter().copied().find(|k| k.tag() == tag)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Backend {
    Exact,
    Float,
}

/// Outcome of one identity check over a full index sweep.
#[derive(Clone, Debug)]
pub struct IdentityReport<S> {
    pub kind: IdentityKind,
    pub params: String,
    pub max_residual: S,
    pub backend: Backend,
    pub pass: bool,
}

fn report<S: Scalar>(kind: IdentityKind, params: String, residual: S, ctx: &QContext<S>) -> IdentityReport<S> {
    let pass = ctx.within_tol(&residual);
    IdentityReport {
        kind,
        params,
        max_residual: residual,
        backend: if S::EXACT { Backend::Exact } else { Backend::Float },
        pass,
    }
}

/// Parameters of a relation check: the family is pinned by theta^2 (so the
/// exact backend never needs theta itself) and the block size.
#[derive(Clone, Debug)]
pub struct RelationParams<S> {
    pub theta2: S,
    pub big_n: u32,
}

impl<S: Scalar> RelationParams<S> {
    pub fn new(theta2: S, big_n: u32, ctx: &QContext<S>) -> Result<Self> {
        if theta2 <= ctx.zero() || theta2 >= ctx.one() {
            return Err(QError::Domain(format!("theta^2 = {theta2} outside (0, 1)")));
        }
        Ok(RelationParams { theta2, big_n })
    }

    fn rotation(&self, big_n: u32, ctx: &QContext<S>) -> Result<RotationParams<S>> {
        RotationParams::new(self.theta2.sqrt()?, big_n, ctx)
    }

    fn describe(&self, ctx: &QContext<S>) -> String {
        format!("q={} theta2={} N={}", ctx.q, self.theta2, self.big_n)
    }
}

/// Out-of-range terms are admitted only under an identically vanishing
/// coefficient; anything else is a boundary-convention violation.
fn guarded_term<S: Scalar>(
    coeff: S,
    value: Option<S>,
    ctx: &QContext<S>,
    what: &str,
) -> Result<S> {
    match value {
        Some(v) => Ok(coeff * v),
        None if ctx.within_tol(&coeff) => Ok(ctx.zero()),
        None => Err(QError::Inconsistent(format!(
            "out-of-range {what} carries nonvanishing coefficient {coeff}"
        ))),
    }
}

fn chi_at<S: Scalar>(table: &ChiTable<S>, n: i64, x: i64) -> Option<S> {
    let dim = table.chi.rows() as i64;
    if (0..dim).contains(&n) && (0..dim).contains(&x) {
        Some(table.chi[(n as usize, x as usize)].clone())
    } else {
        None
    }
}

fn qk<S: Scalar>(n: u32, x: u32, p: &S, big_n: u32, ctx: &QContext<S>) -> Result<S> {
    quantum_qk(
        &QtmKrawtchoukSpec {
            n,
            x,
            p: p.clone(),
            big_n,
        },
        ctx,
    )
}

fn max_update<S: Scalar>(worst: &mut S, candidate: S) {
    let a = candidate.abs();
    if a > *worst {
        *worst = a;
    }
}

/// Structure relations coupling blocks N and N-1, at the level of the chi
/// tables, together with the operator conjugation identity they come from.
pub fn check_structure_matrix<S: Scalar>(
    kind: IdentityKind,
    params: &RelationParams<S>,
    ctx: &QContext<S>,
) -> Result<IdentityReport<S>> {
    let big_n = params.big_n;
    assert!(big_n >= 1, "structure relations couple blocks N and N-1");
    if matches!(kind, IdentityKind::ConjAm | IdentityKind::ConjB) {
        let residual = conjugation_residual(kind, params, ctx)?;
        return Ok(report(kind, params.describe(ctx), residual, ctx));
    }

    let theta = params.theta2.sqrt()?;
    let t_n = chi_table(&params.rotation(big_n, ctx)?, ctx, Provenance::ClosedForm)?;
    let t_m = chi_table(&params.rotation(big_n - 1, ctx)?, ctx, Provenance::ClosedForm)?;
    let nn = big_n as i64;
    let pow = |k: i64| ctx.q.powi(k);
    let omq = |k: i64| ctx.one() - ctx.q.powi(k);
    let theta2 = params.theta2.clone();

    let mut worst = ctx.zero();
    match kind {
        IdentityKind::BackwardMatrix => {
            for n in 0..nn {
                for x in 0..=nn {
                    let lhs = omq(n + 1).sqrt()? * chi_at(&t_n, n + 1, x).unwrap();
                    let c1 = (omq(x) * (ctx.one() - theta2.clone() * pow(x - 1))).sqrt()?;
                    let c2 = theta.clone() * pow(x) * omq(nn - x).sqrt()?;
                    let rhs = guarded_term(c1, chi_at(&t_m, n, x - 1), ctx, "chi(N-1)")?
                        + guarded_term(c2, chi_at(&t_m, n, x), ctx, "chi(N-1)")?;
                    max_update(&mut worst, lhs - rhs);
                }
            }
        }
        IdentityKind::ForwardMatrix => {
            for n in 0..=nn {
                for x in 0..nn {
                    let lhs =
                        guarded_term(omq(n).sqrt()?, chi_at(&t_m, n - 1, x), ctx, "chi(N-1)")?;
                    let c1 = (omq(x + 1) * (ctx.one() - theta2.clone() * pow(x))).sqrt()?;
                    let c2 = theta.clone() * pow(x) * omq(nn - x).sqrt()?;
                    let rhs = c1 * chi_at(&t_n, n, x + 1).unwrap()
                        + c2 * chi_at(&t_n, n, x).unwrap();
                    max_update(&mut worst, lhs - rhs);
                }
            }
        }
        IdentityKind::DualBackward => {
            for n in 0..=nn {
                for x in 0..nn {
                    let lhs = omq(nn - x).sqrt()? * chi_at(&t_n, n, x).unwrap();
                    let c1 = (omq(nn - n) * (ctx.one() - theta2.clone() * pow(nn - n - 1)))
                        .sqrt()?;
                    let c2 = theta.clone() * pow(nn - n) * omq(n).sqrt()?;
                    let rhs = guarded_term(c1, chi_at(&t_m, n, x), ctx, "chi(N-1)")?
                        + guarded_term(c2, chi_at(&t_m, n - 1, x), ctx, "chi(N-1)")?;
                    max_update(&mut worst, lhs - rhs);
                }
            }
        }
        IdentityKind::DualForward => {
            for n in 1..=nn {
                for x in 0..=nn {
                    let lhs = guarded_term(
                        omq(nn - x).sqrt()?,
                        chi_at(&t_m, n - 1, x),
                        ctx,
                        "chi(N-1)",
                    )?;
                    let c1 = (omq(nn - n + 1) * (ctx.one() - theta2.clone() * pow(nn - n)))
                        .sqrt()?;
                    let c2 = theta.clone() * pow(nn - n) * omq(n).sqrt()?;
                    let rhs = c1 * chi_at(&t_n, n - 1, x).unwrap()
                        + c2 * chi_at(&t_n, n, x).unwrap();
                    max_update(&mut worst, lhs - rhs);
                }
            }
        }
        other => {
            return Err(QError::Domain(format!(
                "{} is not a structure-matrix relation",
                other.tag()
            )))
        }
    }

    // the operator identity underlying this pair of relations
    let conj_kind = match kind {
        IdentityKind::BackwardMatrix | IdentityKind::ForwardMatrix => IdentityKind::ConjAm,
        _ => IdentityKind::ConjB,
    };
    max_update(&mut worst, conjugation_residual(conj_kind, params, ctx)?);

    Ok(report(kind, params.describe(ctx), worst, ctx))
}

/// Residual of the cross-block conjugation identities: the A side
/// (U^dag A- U and its adjoint) or the B side (U B+- U^dag).
fn conjugation_residual<S: Scalar>(
    kind: IdentityKind,
    params: &RelationParams<S>,
    ctx: &QContext<S>,
) -> Result<S> {
    let big_n = params.big_n;
    assert!(big_n >= 1);
    let theta = params.theta2.sqrt()?;
    let nn = big_n as i64;
    let dim = big_n as usize + 1;

    let u_n = build_u(&RotationParams::new(theta.clone(), big_n, ctx)?, ctx)?.chi;
    let u_m = build_u(&RotationParams::new(theta.clone(), big_n - 1, ctx)?, ctx)?.chi;
    let u_p = build_u(&RotationParams::new(theta.clone(), big_n + 1, ctx)?, ctx)?.chi;

    let a_minus = lowering_a(big_n, ctx)?.mat;
    let a_plus = raising_a(big_n, ctx)?.mat;
    let b_minus = lowering_b(big_n, ctx)?.mat;
    let b_plus = raising_b(big_n, ctx)?.mat;

    // functions of A0 / B0 are diagonal on whichever block they act on
    let diag = |d: usize, f: &dyn Fn(usize) -> Result<S>| -> Result<Matrix<S>> {
        let mut m = Matrix::zeros(d, d, ctx.precision);
        for i in 0..d {
            m[(i, i)] = f(i)?;
        }
        Ok(m)
    };

    let mut worst = ctx.zero();
    match kind {
        IdentityKind::ConjAm => {
            // U^dag A- U = sqrt(1 - th^2 q^{A0}) A- + th q^{A0} B-
            let lhs = u_m.transpose().matmul(&a_minus).matmul(&u_n);
            let sqrt_a = diag(dim - 1, &|m| {
                (ctx.one() - params.theta2.clone() * ctx.q.powi(m as i64)).sqrt()
            })?;
            let q_a = diag(dim - 1, &|m| Ok(theta.clone() * ctx.q.powi(m as i64)))?;
            let rhs = sqrt_a.matmul(&a_minus).add(&q_a.matmul(&b_minus));
            max_update(&mut worst, lhs.sub(&rhs).max_abs(ctx.precision));

            // adjoint: U^dag A+ U = A+ sqrt(1 - th^2 q^{A0}) + th q^{A0} B+
            let lhs = u_p.transpose().matmul(&a_plus).matmul(&u_n);
            let sqrt_a = diag(dim, &|m| {
                (ctx.one() - params.theta2.clone() * ctx.q.powi(m as i64)).sqrt()
            })?;
            let q_a = diag(dim + 1, &|m| Ok(theta.clone() * ctx.q.powi(m as i64)))?;
            let rhs = a_plus.matmul(&sqrt_a).add(&q_a.matmul(&b_plus));
            max_update(&mut worst, lhs.sub(&rhs).max_abs(ctx.precision));
        }
        IdentityKind::ConjB => {
            // U B+ U^dag = B+ sqrt(1 - th^2 q^{B0}) + th q^{B0} A+
            let lhs = u_p.matmul(&b_plus).matmul(&u_n.transpose());
            let sqrt_b = diag(dim, &|n| {
                (ctx.one() - params.theta2.clone() * ctx.q.powi(nn - n as i64)).sqrt()
            })?;
            let q_b = diag(dim + 1, &|m| {
                Ok(theta.clone() * ctx.q.powi(nn + 1 - m as i64))
            })?;
            let rhs = b_plus.matmul(&sqrt_b).add(&q_b.matmul(&a_plus));
            max_update(&mut worst, lhs.sub(&rhs).max_abs(ctx.precision));

            // U B- U^dag = sqrt(1 - th^2 q^{B0}) B- + th q^{B0} A-
            let lhs = u_m.matmul(&b_minus).matmul(&u_n.transpose());
            let sqrt_b = diag(dim - 1, &|m| {
                (ctx.one() - params.theta2.clone() * ctx.q.powi(nn - 1 - m as i64)).sqrt()
            })?;
            let q_b = diag(dim - 1, &|m| {
                Ok(theta.clone() * ctx.q.powi(nn - 1 - m as i64))
            })?;
            let rhs = sqrt_b.matmul(&b_minus).add(&q_b.matmul(&a_minus));
            max_update(&mut worst, lhs.sub(&rhs).max_abs(ctx.precision));
        }
        other => {
            return Err(QError::Domain(format!(
                "{} is not a conjugation identity",
                other.tag()
            )))
        }
    }
    Ok(worst)
}

/// Structure relations at the polynomial level (square-root free, so they
/// certify exactly in the rational backend).
pub fn check_structure_poly<S: Scalar>(
    kind: IdentityKind,
    params: &RelationParams<S>,
    ctx: &QContext<S>,
) -> Result<IdentityReport<S>> {
    let big_n = params.big_n;
    assert!(big_n >= 1);
    let nn = big_n as i64;
    let theta2 = params.theta2.clone();
    let p_n = ctx.one() / (theta2.clone() * ctx.q.powi(nn));
    let p_m = ctx.one() / (theta2.clone() * ctx.q.powi(nn - 1));
    let omq = |k: i64| ctx.one() - ctx.q.powi(k);

    let mut worst = ctx.zero();
    match kind {
        IdentityKind::BackwardPoly => {
            for n in 0..big_n {
                for x in 0..big_n {
                    let lhs = omq(nn) * qk(n + 1, x, &p_n, big_n, ctx)?;
                    let xi = x as i64;
                    let c2 = (ctx.q.clone() / theta2.clone())
                        * (ctx.one() - ctx.q.powi(-xi))
                        * (ctx.one() - theta2.clone() * ctx.q.powi(xi - 1));
                    let k_prev = if x >= 1 {
                        Some(qk(n, x - 1, &p_m, big_n - 1, ctx)?)
                    } else {
                        None
                    };
                    let rhs = (ctx.q.powi(xi) - ctx.q.powi(nn)) * qk(n, x, &p_m, big_n - 1, ctx)?
                        + guarded_term(c2, k_prev, ctx, "K(x-1)")?;
                    max_update(&mut worst, lhs - rhs);
                }
            }
        }
        IdentityKind::ForwardPoly => {
            for n in 0..=big_n {
                for x in 0..big_n {
                    let c = omq(n as i64) / omq(nn);
                    let k_prev = if n >= 1 {
                        Some(qk(n - 1, x, &p_m, big_n - 1, ctx)?)
                    } else {
                        None
                    };
                    let lhs = guarded_term(c, k_prev, ctx, "K(n-1)")?;
                    let rhs = theta2.clone()
                        * ctx.q.powi(x as i64)
                        * (qk(n, x, &p_n, big_n, ctx)? - qk(n, x + 1, &p_n, big_n, ctx)?);
                    max_update(&mut worst, lhs - rhs);
                }
            }
        }
        other => {
            return Err(QError::Domain(format!(
                "{} is not a structure-poly relation",
                other.tag()
            )))
        }
    }
    Ok(report(kind, params.describe(ctx), worst, ctx))
}

fn recurrence_matrix_residuals<S: Scalar>(
    params: &RelationParams<S>,
    ctx: &QContext<S>,
) -> Result<Matrix<S>> {
    let big_n = params.big_n;
    let nn = big_n as i64;
    let theta = params.theta2.sqrt()?;
    let theta2 = params.theta2.clone();
    let table = chi_table(&params.rotation(big_n, ctx)?, ctx, Provenance::ClosedForm)?;
    let omq = |k: i64| ctx.one() - ctx.q.powi(k);
    let omt = |k: i64| ctx.one() - theta2.clone() * ctx.q.powi(k);

    let mut res = Matrix::zeros(big_n as usize + 1, big_n as usize + 1, ctx.precision);
    for n in 0..=nn {
        for x in 0..=nn {
            let lhs = omq(nn - x) * chi_at(&table, n, x).unwrap();
            let diag = (omq(nn - n) * omt(nn - n - 1)
                + theta2.clone() * ctx.q.powi(2 * (nn - n)) * omq(n))
                * chi_at(&table, n, x).unwrap();
            let c_up = theta.clone()
                * ctx.q.powi(nn - n - 1)
                * (omq(n + 1) * omq(nn - n) * omt(nn - n - 1)).sqrt()?;
            let c_down = theta.clone()
                * ctx.q.powi(nn - n)
                * (omq(n) * omt(nn - n) * omq(nn - n + 1)).sqrt()?;
            let rhs = diag
                + guarded_term(c_up, chi_at(&table, n + 1, x), ctx, "chi(n+1)")?
                + guarded_term(c_down, chi_at(&table, n - 1, x), ctx, "chi(n-1)")?;
            res[(n as usize, x as usize)] = lhs - rhs;
        }
    }
    Ok(res)
}

fn difference_matrix_residuals<S: Scalar>(
    params: &RelationParams<S>,
    ctx: &QContext<S>,
) -> Result<Matrix<S>> {
    let big_n = params.big_n;
    let nn = big_n as i64;
    let theta = params.theta2.sqrt()?;
    let theta2 = params.theta2.clone();
    let table = chi_table(&params.rotation(big_n, ctx)?, ctx, Provenance::ClosedForm)?;
    let omq = |k: i64| ctx.one() - ctx.q.powi(k);
    let omt = |k: i64| ctx.one() - theta2.clone() * ctx.q.powi(k);

    let mut res = Matrix::zeros(big_n as usize + 1, big_n as usize + 1, ctx.precision);
    for n in 0..=nn {
        for x in 0..=nn {
            let lhs = omq(n) * chi_at(&table, n, x).unwrap();
            let diag = (omq(x) * omt(x - 1) + theta2.clone() * ctx.q.powi(2 * x) * omq(nn - x))
                * chi_at(&table, n, x).unwrap();
            let c_left = theta.clone()
                * ctx.q.powi(x - 1)
                * (omq(nn - x + 1) * omq(x) * omt(x - 1)).sqrt()?;
            let c_right = theta.clone()
                * ctx.q.powi(x)
                * (omq(nn - x) * omt(x) * omq(x + 1)).sqrt()?;
            let rhs = diag
                + guarded_term(c_left, chi_at(&table, n, x - 1), ctx, "chi(x-1)")?
                + guarded_term(c_right, chi_at(&table, n, x + 1), ctx, "chi(x+1)")?;
            res[(n as usize, x as usize)] = lhs - rhs;
        }
    }
    Ok(res)
}

/// Three-term recurrence in the degree, either on the chi table (float)
/// or for the bare polynomials (exact).
pub fn check_recurrence<S: Scalar>(
    kind: IdentityKind,
    params: &RelationParams<S>,
    ctx: &QContext<S>,
) -> Result<IdentityReport<S>> {
    let big_n = params.big_n;
    let nn = big_n as i64;
    let mut worst = ctx.zero();
    match kind {
        IdentityKind::RecurrenceMatrix => {
            worst = recurrence_matrix_residuals(params, ctx)?.max_abs(ctx.precision);
        }
        IdentityKind::RecurrencePoly => {
            let theta2 = params.theta2.clone();
            let p = ctx.one() / (theta2.clone() * ctx.q.powi(nn));
            let omq = |k: i64| ctx.one() - ctx.q.powi(k);
            let omt = |k: i64| ctx.one() - theta2.clone() * ctx.q.powi(k);
            for n in 0..=big_n {
                for x in 0..=big_n {
                    let ni = n as i64;
                    let lhs = omq(nn - x as i64) * qk(n, x, &p, big_n, ctx)?;
                    let c_up = theta2.clone() * ctx.q.powi(nn - ni - 1) * omq(nn - ni);
                    // diagonal coefficient carries + on the theta^2 q^{2(N-n)}
                    // term, matching the matrix-level recurrence
                    let c_mid = omt(nn - ni - 1) * omq(nn - ni)
                        + theta2.clone() * ctx.q.powi(2 * (nn - ni)) * omq(ni);
                    let c_down = ctx.q.powi(nn - ni) * omt(nn - ni) * omq(ni);
                    let k_up = if n < big_n {
                        Some(qk(n + 1, x, &p, big_n, ctx)?)
                    } else {
                        None
                    };
                    let k_down = if n >= 1 {
                        Some(qk(n - 1, x, &p, big_n, ctx)?)
                    } else {
                        None
                    };
                    let rhs = guarded_term(c_up, k_up, ctx, "K(n+1)")?
                        + c_mid * qk(n, x, &p, big_n, ctx)?
                        + guarded_term(c_down, k_down, ctx, "K(n-1)")?;
                    max_update(&mut worst, lhs - rhs);
                }
            }
        }
        other => {
            return Err(QError::Domain(format!(
                "{} is not a recurrence relation",
                other.tag()
            )))
        }
    }
    Ok(report(kind, params.describe(ctx), worst, ctx))
}

/// Difference equation in the variable; the matrix form is additionally
/// required to be the (n,x) -> (N-x,N-n) relabeling of the recurrence.
pub fn check_difference<S: Scalar>(
    kind: IdentityKind,
    params: &RelationParams<S>,
    ctx: &QContext<S>,
) -> Result<IdentityReport<S>> {
    let big_n = params.big_n;
    let nn = big_n as i64;
    let mut worst = ctx.zero();
    match kind {
        IdentityKind::DifferenceMatrix => {
            let diff = difference_matrix_residuals(params, ctx)?;
            max_update(&mut worst, diff.max_abs(ctx.precision));
            // the difference equation is the relabeled recurrence: their
            // residual arrays must agree entrywise
            let rec = recurrence_matrix_residuals(params, ctx)?;
            for n in 0..=big_n as usize {
                for x in 0..=big_n as usize {
                    let d = diff[(n, x)].clone()
                        - rec[(big_n as usize - x, big_n as usize - n)].clone();
                    max_update(&mut worst, d);
                }
            }
        }
        IdentityKind::DifferencePoly => {
            let theta2 = params.theta2.clone();
            let p = ctx.one() / (theta2.clone() * ctx.q.powi(nn));
            let omq = |k: i64| ctx.one() - ctx.q.powi(k);
            let omt = |k: i64| ctx.one() - theta2.clone() * ctx.q.powi(k);
            for n in 0..=big_n {
                for x in 0..=big_n {
                    let xi = x as i64;
                    let here = qk(n, x, &p, big_n, ctx)?;
                    let lhs = omq(n as i64) * here.clone();
                    let c_left = omq(xi) * omt(xi - 1);
                    let c_right = theta2.clone() * ctx.q.powi(2 * xi) * omq(nn - xi);
                    let k_left = if x >= 1 {
                        Some(here.clone() - qk(n, x - 1, &p, big_n, ctx)?)
                    } else {
                        None
                    };
                    let k_right = if x < big_n {
                        Some(qk(n, x + 1, &p, big_n, ctx)? - here.clone())
                    } else {
                        None
                    };
                    let rhs = guarded_term(c_left, k_left, ctx, "K(x-1)")?
                        - guarded_term(c_right, k_right, ctx, "K(x+1)")?;
                    max_update(&mut worst, lhs - rhs);
                }
            }
        }
        other => {
            return Err(QError::Domain(format!(
                "{} is not a difference relation",
                other.tag()
            )))
        }
    }
    Ok(report(kind, params.describe(ctx), worst, ctx))
}

/// Deterministic rational sample points for the generating-function checks.
pub fn standard_z_samples<S: Scalar>(precision: u32) -> Vec<S> {
    [
        (1, 7),
        (-1, 7),
        (2, 5),
        (-2, 5),
        (3, 4),
        (-5, 8),
        (1, 3),
        (-1, 9),
        (4, 9),
        (-3, 11),
    ]
    .into_iter()
    .map(|(n, d)| S::from_ratio(n, d, precision))
    .collect()
}

fn phi<S: Scalar>(
    numerator: Vec<S>,
    denominator: Vec<S>,
    z: S,
    ctx: &QContext<S>,
) -> Result<S> {
    phi_series(&PhiSeriesSpec::new(numerator, denominator, z), ctx, MAX_TERMS)
}

/// Generating functions: both sides are finite sums, checked at each z
/// sample; reconciled LHS variants must also agree with each other.
pub fn check_genfun<S: Scalar>(
    kind: IdentityKind,
    params: &RelationParams<S>,
    z_samples: &[S],
    ctx: &QContext<S>,
) -> Result<IdentityReport<S>> {
    let big_n = params.big_n;
    let nn = big_n as i64;
    let theta2 = params.theta2.clone();
    let p = ctx.one() / (theta2.clone() * ctx.q.powi(nn));
    let mut worst = ctx.zero();

    for z in z_samples {
        match kind {
            IdentityKind::GenfunDegrees => {
                // (-z;q)_N 1phi1(q^{-x}; -z; q, -qz/th^2) = sum_n [N,n] q^C(n,2) K_n z^n
                for x in 0..=big_n {
                    let lhs = qpochhammer(&-z.clone(), ctx, big_n)
                        * phi(
                            vec![ctx.q.powi(-(x as i64))],
                            vec![-z.clone()],
                            -(ctx.q.clone() * z.clone() / theta2.clone()),
                            ctx,
                        )?;
                    let mut rhs = ctx.zero();
                    for n in 0..=big_n {
                        rhs = rhs
                            + qbinomial(big_n, n as i64, ctx)
                                * ctx.q.powi(binom2(n as i64))
                                * qk(n, x, &p, big_n, ctx)?
                                * z.powi(n as i64);
                    }
                    max_update(&mut worst, lhs - rhs);
                }
            }
            IdentityKind::GenfunDegrees2Phi1 => {
                // v = -q^N z; the 1phi1 form and its terminating 2phi1
                // rewriting must both reproduce the same series in v
                let v = -(ctx.q.powi(nn) * z.clone());
                for x in 0..=big_n {
                    let lhs_a = qpochhammer(&(v.clone() * ctx.q.powi(-nn)), ctx, big_n)
                        * phi(
                            vec![ctx.q.powi(-(x as i64))],
                            vec![v.clone() * ctx.q.powi(-nn)],
                            p.clone() * ctx.q.clone() * v.clone(),
                            ctx,
                        )?;
                    let lhs_b = qpochhammer(&(v.clone() * ctx.q.powi(x as i64 - nn)), ctx, big_n - x)
                        * phi(
                            vec![
                                ctx.q.powi(-(x as i64)),
                                p.clone() * ctx.q.powi(nn - x as i64 + 1),
                            ],
                            vec![ctx.zero()],
                            v.clone() * ctx.q.powi(x as i64 - nn),
                            ctx,
                        )?;
                    let mut rhs = ctx.zero();
                    for n in 0..=big_n {
                        rhs = rhs
                            + qpochhammer(&ctx.q.powi(-nn), ctx, n)
                                / qpochhammer(&ctx.q, ctx, n)
                                * qk(n, x, &p, big_n, ctx)?
                                * v.powi(n as i64);
                    }
                    max_update(&mut worst, lhs_a.clone() - lhs_b.clone());
                    max_update(&mut worst, lhs_a - rhs.clone());
                    max_update(&mut worst, lhs_b - rhs);
                }
            }
            IdentityKind::GenfunVariables => {
                // (-z;q)_N 2phi1(q^{-n},0; -q^{1-N}/z; q, q^{n+1}/(th^2 q^N))
                // summed over the variable x; also its w = -q^N z form
                let w = -(ctx.q.powi(nn) * z.clone());
                for n in 0..=big_n {
                    let lhs = qpochhammer(&-z.clone(), ctx, big_n)
                        * phi(
                            vec![ctx.q.powi(-(n as i64)), ctx.zero()],
                            vec![-(ctx.q.powi(1 - nn) / z.clone())],
                            ctx.q.powi(n as i64 + 1) / (theta2.clone() * ctx.q.powi(nn)),
                            ctx,
                        )?;
                    let lhs_w = qpochhammer(&(w.clone() * ctx.q.powi(-nn)), ctx, big_n)
                        * phi(
                            vec![ctx.q.powi(-(n as i64)), ctx.zero()],
                            vec![ctx.q.clone() / w.clone()],
                            p.clone() * ctx.q.powi(n as i64 + 1),
                            ctx,
                        )?;
                    let mut rhs = ctx.zero();
                    let mut rhs_w = ctx.zero();
                    for x in 0..=big_n {
                        let k = qk(n, x, &p, big_n, ctx)?;
                        rhs = rhs
                            + qbinomial(big_n, x as i64, ctx)
                                * ctx.q.powi(binom2(x as i64))
                                * k.clone()
                                * z.powi(x as i64);
                        rhs_w = rhs_w
                            + qpochhammer(&ctx.q.powi(-nn), ctx, x)
                                / qpochhammer(&ctx.q, ctx, x)
                                * k
                                * w.powi(x as i64);
                    }
                    max_update(&mut worst, lhs - rhs);
                    max_update(&mut worst, lhs_w - rhs_w);
                }
            }
            IdentityKind::GenfunAffine | IdentityKind::GenfunAffine2Phi0 => {
                // affine family at p_aff = th^2/q, generating in the degree
                let p_aff = theta2.clone() / ctx.q.clone();
                let v = z;
                for x in 0..=big_n {
                    let lhs = match kind {
                        IdentityKind::GenfunAffine => {
                            qpochhammer(
                                &-(p_aff.clone() * ctx.q.powi(1 - nn) * v.clone()),
                                ctx,
                                big_n,
                            ) * phi(
                                vec![ctx.q.powi(-(x as i64)), ctx.zero()],
                                vec![-(ctx.one() / (p_aff.clone() * v.clone()))],
                                ctx.q.powi(x as i64 - nn) / p_aff.clone(),
                                ctx,
                            )?
                        }
                        _ => {
                            qpochhammer(
                                &-(p_aff.clone() * v.clone() * ctx.q.powi(1 - nn)),
                                ctx,
                                big_n - x,
                            ) * phi(
                                vec![
                                    ctx.q.powi(-(x as i64)),
                                    p_aff.clone() * ctx.q.powi(nn - x as i64 + 1),
                                ],
                                vec![],
                                -(v.clone() * ctx.q.powi(-(nn - x as i64))),
                                ctx,
                            )?
                        }
                    };
                    let mut rhs = ctx.zero();
                    for n in 0..=big_n {
                        let aff = affine_qk(
                            &AffKrawtchoukSpec {
                                n,
                                x: big_n - x,
                                p: p_aff.clone(),
                                big_n,
                            },
                            ctx,
                        )?;
                        rhs = rhs
                            + qpochhammer(&ctx.q.powi(-nn), ctx, n)
                                * qpochhammer(&(p_aff.clone() * ctx.q.clone()), ctx, n)
                                / qpochhammer(&ctx.q, ctx, n)
                                * ctx.q.powi(-binom2(n as i64))
                                * aff
                                * v.powi(n as i64);
                    }
                    max_update(&mut worst, lhs - rhs);
                }
            }
            other => {
                return Err(QError::Domain(format!(
                    "{} is not a generating-function relation",
                    other.tag()
                )))
            }
        }
    }
    Ok(report(kind, params.describe(ctx), worst, ctx))
}

/// The two quantum/affine dualities: the fixed-q one tying the families at
/// reflected indices, and the base-inversion one at q -> 1/q.
pub fn check_duality_families<S: Scalar>(
    kind: IdentityKind,
    params: &RelationParams<S>,
    ctx: &QContext<S>,
) -> Result<IdentityReport<S>> {
    let big_n = params.big_n;
    let nn = big_n as i64;
    let theta2 = params.theta2.clone();
    let p = ctx.one() / (theta2.clone() * ctx.q.powi(nn));
    let mut worst = ctx.zero();
    match kind {
        IdentityKind::DualityQtmAff => {
            let p_aff = theta2.clone() / ctx.q.clone();
            for n in 0..=big_n {
                for x in 0..=big_n {
                    let lhs = qk(n, x, &p, big_n, ctx)?;
                    let aff = affine_qk(
                        &AffKrawtchoukSpec {
                            n: x,
                            x: big_n - n,
                            p: p_aff.clone(),
                            big_n,
                        },
                        ctx,
                    )?;
                    let sign = if x % 2 == 1 { -ctx.one() } else { ctx.one() };
                    let rhs = sign * qpochhammer(&theta2, ctx, x)
                        / (theta2.powi(x as i64) * ctx.q.powi(binom2(x as i64)))
                        * aff;
                    max_update(&mut worst, lhs - rhs);
                }
            }
        }
        IdentityKind::DualityQinv => {
            let inv = ctx.inverted();
            for n in 0..=big_n {
                for x in 0..=big_n {
                    // quantum family evaluated at base 1/q, same p
                    let lhs = qk(n, x, &p, big_n, &inv)?;
                    let aff = affine_qk(
                        &AffKrawtchoukSpec {
                            n,
                            x: big_n - x,
                            p: ctx.one() / p.clone(),
                            big_n,
                        },
                        ctx,
                    )?;
                    let sign = if n % 2 == 1 { -ctx.one() } else { ctx.one() };
                    let rhs = qpochhammer(&(ctx.q.clone() / p.clone()), ctx, n)
                        * sign
                        * (p.clone() / ctx.q.clone()).powi(n as i64)
                        * ctx.q.powi(-binom2(n as i64))
                        * aff;
                    max_update(&mut worst, lhs - rhs);
                }
            }
        }
        other => {
            return Err(QError::Domain(format!(
                "{} is not a duality relation",
                other.tag()
            )))
        }
    }
    Ok(report(kind, params.describe(ctx), worst, ctx))
}

/// q -> 1 limit of the whole block against the classical Krawtchouk form.
pub fn check_q1_limits<S: Scalar>(
    big_n: u32,
    tau: f64,
    precision: u32,
) -> Result<IdentityReport<S>> {
    let tol = S::pow10(-6, precision);
    let mut worst = S::zero(precision);
    for n in 0..=big_n {
        for x in 0..=big_n {
            let lim = chi_q1_limit::<S>(n, x, big_n, tau, 40, precision)?;
            let target = chi_q1_target::<S>(n, x, big_n, tau, precision)?;
            max_update(&mut worst, lim - target);
        }
    }
    let pass = worst <= tol;
    Ok(IdentityReport {
        kind: IdentityKind::Q1Limit,
        params: format!("N={big_n} tau={tau}"),
        max_residual: worst,
        backend: Backend::Float,
        pass,
    })
}
