//! Schwinger-block operators, the unitary q-rotation operator built as a
//! product of q-exponential matrices, the closed-form matrix elements, and
//! the operator-level verification routines.

use crate::error::{QError, Result};
use crate::matrix::{BlockOperator, Matrix};
use crate::polys::{classical_krawtchouk, AffKrawtchoukSpec, QtmKrawtchoukSpec};
use crate::polys::{affine_qk, quantum_qk};
use crate::qseries::{binom2, qbinomial, qpochhammer, qpochhammer_inf};
use crate::scalar::{QContext, Scalar};

/// Angle-like parameter and block size of a q-rotation.
#[derive(Clone, Debug)]
pub struct RotationParams<S> {
    pub theta: S,
    pub big_n: u32,
}

impl<S: Scalar> RotationParams<S> {
    pub fn new(theta: S, big_n: u32, ctx: &QContext<S>) -> Result<Self> {
        if theta.abs() >= ctx.one() {
            return Err(QError::Domain(format!("|theta| = |{theta}| must be < 1")));
        }
        Ok(RotationParams { theta, big_n })
    }

    pub fn theta2(&self) -> S {
        self.theta.clone() * self.theta.clone()
    }
}

/// How a chi table was produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    OperatorBuilt,
    ClosedForm,
    AffineForm,
}

impl Provenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Provenance::OperatorBuilt => "operator-built",
            Provenance::ClosedForm => "closed-form",
            Provenance::AffineForm => "affine-form",
        }
    }
}

/// The matrix [chi_{n,x}] on one Schwinger block; row n is the output
/// index, column x the input index.
#[derive(Clone, Debug)]
pub struct ChiTable<S> {
    pub params: RotationParams<S>,
    pub chi: Matrix<S>,
    pub provenance: Provenance,
}

/// Named residuals from an operator-identity verification.
#[derive(Clone, Debug)]
pub struct ResidualReport<S> {
    pub entries: Vec<(String, S)>,
}

impl<S: Scalar> ResidualReport<S> {
    pub fn max_residual(&self, precision: u32) -> S {
        let mut worst = S::zero(precision);
        for (_, r) in &self.entries {
            if *r > worst {
                worst = r.clone();
            }
        }
        worst
    }
}

/// The single-block operators of the Schwinger realization on block N.
pub struct BlockOperators<S> {
    pub big_n: u32,
    /// diag(q^n)
    pub q_a0: Matrix<S>,
    /// diag(q^{N-n})
    pub q_b0: Matrix<S>,
    /// A+B-: |x> -> |x+1>, nilpotent raising
    pub raise: Matrix<S>,
    /// A-B+: |x> -> |x-1>, nilpotent lowering
    pub lower: Matrix<S>,
    pub j_plus: Matrix<S>,
    pub j_minus: Matrix<S>,
    /// diag(n - N/2)
    pub j0: Matrix<S>,
}

fn one_minus_qk<S: Scalar>(ctx: &QContext<S>, k: i64) -> S {
    ctx.one() - ctx.q.powi(k)
}

/// Builds the block-preserving operators of Eq-level actions on block N.
pub fn build_block_operators<S: Scalar>(big_n: u32, ctx: &QContext<S>) -> Result<BlockOperators<S>> {
    let dim = big_n as usize + 1;
    let p = ctx.precision;
    let nn = big_n as i64;

    let mut q_a0 = Matrix::zeros(dim, dim, p);
    let mut q_b0 = Matrix::zeros(dim, dim, p);
    let mut j0 = Matrix::zeros(dim, dim, p);
    for n in 0..dim {
        q_a0[(n, n)] = ctx.q.powi(n as i64);
        q_b0[(n, n)] = ctx.q.powi(nn - n as i64);
        j0[(n, n)] = ctx.ratio(2 * n as i64 - nn, 2);
    }

    let inv_1mq = ctx.one() / one_minus_qk(ctx, 1);
    let mut raise = Matrix::zeros(dim, dim, p);
    let mut lower = Matrix::zeros(dim, dim, p);
    for x in 0..big_n as usize {
        let xi = x as i64;
        let up = (one_minus_qk(ctx, xi + 1) * one_minus_qk(ctx, nn - xi)).sqrt()?;
        raise[(x + 1, x)] = inv_1mq.clone() * up;
    }
    for x in 1..dim {
        let xi = x as i64;
        let down = (one_minus_qk(ctx, xi) * one_minus_qk(ctx, nn - xi + 1)).sqrt()?;
        lower[(x - 1, x)] = inv_1mq.clone() * down;
    }

    // q^{(1-N)/4} via two nested square roots of q^{1-N}
    let q_quarter = ctx.q.powi(1 - nn).sqrt()?.sqrt()?;
    let mut j_plus = Matrix::zeros(dim, dim, p);
    let mut j_minus = Matrix::zeros(dim, dim, p);
    for n in 0..big_n as usize {
        let ni = n as i64;
        let amp = (one_minus_qk(ctx, ni + 1) * one_minus_qk(ctx, nn - ni)).sqrt()?;
        j_plus[(n + 1, n)] = q_quarter.clone() * inv_1mq.clone() * amp;
    }
    for n in 1..dim {
        let ni = n as i64;
        let amp = (one_minus_qk(ctx, ni) * one_minus_qk(ctx, nn - ni + 1)).sqrt()?;
        j_minus[(n - 1, n)] = q_quarter.clone() * inv_1mq.clone() * amp;
    }

    Ok(BlockOperators {
        big_n,
        q_a0,
        q_b0,
        raise,
        lower,
        j_plus,
        j_minus,
        j0,
    })
}

/// A-: block N -> N-1, entries sqrt((1-q^n)/(1-q)).
pub fn lowering_a<S: Scalar>(big_n: u32, ctx: &QContext<S>) -> Result<BlockOperator<S>> {
    assert!(big_n >= 1);
    let mut m = Matrix::zeros(big_n as usize, big_n as usize + 1, ctx.precision);
    let inv = ctx.one() / one_minus_qk(ctx, 1);
    for n in 1..=big_n as usize {
        m[(n - 1, n)] = (one_minus_qk(ctx, n as i64) * inv.clone()).sqrt()?;
    }
    Ok(BlockOperator::new(big_n as usize, big_n as usize - 1, m))
}

/// A+: block N -> N+1.
pub fn raising_a<S: Scalar>(big_n: u32, ctx: &QContext<S>) -> Result<BlockOperator<S>> {
    let mut m = Matrix::zeros(big_n as usize + 2, big_n as usize + 1, ctx.precision);
    let inv = ctx.one() / one_minus_qk(ctx, 1);
    for n in 0..=big_n as usize {
        m[(n + 1, n)] = (one_minus_qk(ctx, n as i64 + 1) * inv.clone()).sqrt()?;
    }
    Ok(BlockOperator::new(big_n as usize, big_n as usize + 1, m))
}

/// B-: block N -> N-1, diagonal in n.
pub fn lowering_b<S: Scalar>(big_n: u32, ctx: &QContext<S>) -> Result<BlockOperator<S>> {
    assert!(big_n >= 1);
    let mut m = Matrix::zeros(big_n as usize, big_n as usize + 1, ctx.precision);
    let inv = ctx.one() / one_minus_qk(ctx, 1);
    for n in 0..big_n as usize {
        m[(n, n)] = (one_minus_qk(ctx, big_n as i64 - n as i64) * inv.clone()).sqrt()?;
    }
    Ok(BlockOperator::new(big_n as usize, big_n as usize - 1, m))
}

/// B+: block N -> N+1, diagonal in n.
pub fn raising_b<S: Scalar>(big_n: u32, ctx: &QContext<S>) -> Result<BlockOperator<S>> {
    let mut m = Matrix::zeros(big_n as usize + 2, big_n as usize + 1, ctx.precision);
    let inv = ctx.one() / one_minus_qk(ctx, 1);
    for n in 0..=big_n as usize {
        m[(n, n)] = (one_minus_qk(ctx, big_n as i64 - n as i64 + 1) * inv.clone()).sqrt()?;
    }
    Ok(BlockOperator::new(big_n as usize, big_n as usize + 1, m))
}

/// e_q of a nilpotent matrix: the finite sum of z^k / (q;q)_k.
pub fn little_q_exp_nilpotent<S: Scalar>(m: &Matrix<S>, ctx: &QContext<S>) -> Matrix<S> {
    let dim = m.rows();
    let mut sum = Matrix::identity(dim, ctx.precision);
    let mut power = Matrix::identity(dim, ctx.precision);
    let mut denom = ctx.one();
    for k in 1..=dim {
        power = power.matmul(m);
        if power.max_abs(ctx.precision).is_zero() {
            break;
        }
        denom = denom * one_minus_qk(ctx, k as i64);
        sum = sum.add(&power.scale(&(ctx.one() / denom.clone())));
    }
    sum
}

/// E_q of a nilpotent matrix: finite sum of q^C(k,2) z^k / (q;q)_k.
pub fn big_q_exp_nilpotent<S: Scalar>(m: &Matrix<S>, ctx: &QContext<S>) -> Matrix<S> {
    let dim = m.rows();
    let mut sum = Matrix::identity(dim, ctx.precision);
    let mut power = Matrix::identity(dim, ctx.precision);
    let mut denom = ctx.one();
    for k in 1..=dim {
        power = power.matmul(m);
        if power.max_abs(ctx.precision).is_zero() {
            break;
        }
        denom = denom * one_minus_qk(ctx, k as i64);
        let coeff = ctx.q.powi(binom2(k as i64)) / denom.clone();
        sum = sum.add(&power.scale(&coeff));
    }
    sum
}

/// e_q of a general matrix by its series; requires spectral radius < 1
/// (checked indirectly through term decay).
pub fn little_q_exp_matrix<S: Scalar>(m: &Matrix<S>, ctx: &QContext<S>) -> Result<Matrix<S>> {
    let dim = m.rows();
    let cutoff = S::pow10(-((ctx.precision + 10) as i64), ctx.precision);
    let mut sum = Matrix::identity(dim, ctx.precision);
    let mut term = Matrix::identity(dim, ctx.precision);
    let max_iter = 64 * (ctx.precision as usize + 8);
    for k in 1..=max_iter {
        term = term.matmul(m).scale(&(ctx.one() / one_minus_qk(ctx, k as i64)));
        sum = sum.add(&term);
        if term.max_abs(ctx.precision) < cutoff {
            return Ok(sum);
        }
    }
    Err(QError::Divergence { max_terms: max_iter })
}

/// E_q of a general matrix by its series (entire, converges for any input).
pub fn big_q_exp_matrix<S: Scalar>(m: &Matrix<S>, ctx: &QContext<S>) -> Result<Matrix<S>> {
    let dim = m.rows();
    let cutoff = S::pow10(-((ctx.precision + 10) as i64), ctx.precision);
    let mut sum = Matrix::identity(dim, ctx.precision);
    let mut power = Matrix::identity(dim, ctx.precision);
    let mut denom = ctx.one();
    let max_iter = 64 * (ctx.precision as usize + 8);
    for k in 1..=max_iter {
        power = power.matmul(m);
        denom = denom * one_minus_qk(ctx, k as i64);
        let coeff = ctx.q.powi(binom2(k as i64)) / denom.clone();
        let term = power.scale(&coeff);
        sum = sum.add(&term);
        if term.max_abs(ctx.precision) < cutoff {
            return Ok(sum);
        }
    }
    Err(QError::Divergence { max_terms: max_iter })
}

/// Builds U(theta) on block N as the product
/// e_q^{1/2}(th^2 q^{B0}) e_q(th(1-q)A+B-) E_q(-th(1-q)A-B+) E_q^{1/2}(-th^2 q^{A0}).
/// The half-power factors are entrywise square roots of the diagonal
/// q-exponentials.
pub fn build_u<S: Scalar>(params: &RotationParams<S>, ctx: &QContext<S>) -> Result<ChiTable<S>> {
    let big_n = params.big_n;
    let dim = big_n as usize + 1;
    if params.theta.is_zero() {
        return Ok(ChiTable {
            params: params.clone(),
            chi: Matrix::identity(dim, ctx.precision),
            provenance: Provenance::OperatorBuilt,
        });
    }
    let ops = build_block_operators(big_n, ctx)?;
    let theta2 = params.theta2();

    let mut left_diag = Matrix::zeros(dim, dim, ctx.precision);
    let mut right_diag = Matrix::zeros(dim, dim, ctx.precision);
    for n in 0..dim {
        // e_q(th^2 q^{N-n}) = 1 / (th^2 q^{N-n}; q)_inf
        let zb = theta2.clone() * ctx.q.powi(big_n as i64 - n as i64);
        let e_val = ctx.one() / qpochhammer_inf(&zb, ctx)?;
        left_diag[(n, n)] = e_val.sqrt()?;
        // E_q(-th^2 q^n) = (th^2 q^n; q)_inf
        let za = theta2.clone() * ctx.q.powi(n as i64);
        let e_val = qpochhammer_inf(&za, ctx)?;
        right_diag[(n, n)] = e_val.sqrt()?;
    }

    let c = params.theta.clone() * one_minus_qk(ctx, 1);
    let middle_raise = little_q_exp_nilpotent(&ops.raise.scale(&c), ctx);
    let middle_lower = big_q_exp_nilpotent(&ops.lower.scale(&-c.clone()), ctx);

    let chi = left_diag
        .matmul(&middle_raise)
        .matmul(&middle_lower)
        .matmul(&right_diag);
    Ok(ChiTable {
        params: params.clone(),
        chi,
        provenance: Provenance::OperatorBuilt,
    })
}

/// Decimal digits lost to cancellation in the alternating hypergeometric
/// sums behind chi_{n,x}: the largest term grows like q^{-nx} theta^{-2k}
/// while the sum collapses to O(1).
fn cancellation_guard<S: Scalar>(n: u32, x: u32, theta: &S, ctx: &QContext<S>) -> u32 {
    if S::EXACT {
        return 0;
    }
    if theta.is_zero() {
        return 0;
    }
    let lq = -ctx.q.to_f64().log10();
    let lt = (-theta.abs().to_f64().log10()).max(0.0);
    let loss = (n as f64 * x as f64 + n as f64 + x as f64) * lq
        + 2.0 * (n.min(x) as f64 + 2.0) * lt;
    loss.min(100_000.0).ceil() as u32 + 20
}

/// Runs `f` against a context (and theta) carrying enough guard digits to
/// absorb the cancellation at (n, x), then rounds back.
fn with_guard<S: Scalar>(
    n: u32,
    x: u32,
    params: &RotationParams<S>,
    ctx: &QContext<S>,
    f: impl Fn(&RotationParams<S>, &QContext<S>) -> Result<S>,
) -> Result<S> {
    let guard = cancellation_guard(n, x, &params.theta, ctx);
    if guard == 0 {
        return f(params, ctx);
    }
    let hctx = ctx.boosted(guard);
    let hparams = RotationParams {
        theta: params.theta.with_precision(hctx.precision),
        big_n: params.big_n,
    };
    Ok(f(&hparams, &hctx)?.with_precision(ctx.precision))
}

/// chi_{n,x}^(N) from the closed hypergeometric form.
pub fn chi_closed_form<S: Scalar>(
    n: u32,
    x: u32,
    params: &RotationParams<S>,
    ctx: &QContext<S>,
) -> Result<S> {
    with_guard(n, x, params, ctx, |p, c| chi_closed_form_impl(n, x, p, c))
}

fn chi_closed_form_impl<S: Scalar>(
    n: u32,
    x: u32,
    params: &RotationParams<S>,
    ctx: &QContext<S>,
) -> Result<S> {
    let big_n = params.big_n;
    assert!(n <= big_n && x <= big_n);
    if params.theta.is_zero() {
        return Ok(if n == x { ctx.one() } else { ctx.zero() });
    }
    let theta2 = params.theta2();
    let p = ctx.one() / (theta2.clone() * ctx.q.powi(big_n as i64));
    let poly = quantum_qk(&QtmKrawtchoukSpec { n, x, p, big_n }, ctx)?;
    let radicand = qbinomial(big_n, x as i64, ctx)
        * qbinomial(big_n, n as i64, ctx)
        * qpochhammer(&theta2, ctx, big_n - n)
        / qpochhammer(&theta2, ctx, x);
    if radicand <= ctx.zero() {
        return Err(QError::NegativeRadicand(format!(
            "closed-form radicand at n={n} x={x} N={big_n}"
        )));
    }
    let mut value =
        params.theta.powi(n as i64 + x as i64) * ctx.q.powi(binom2(x as i64)) * radicand.sqrt()? * poly;
    if x % 2 == 1 {
        value = -value;
    }
    Ok(value)
}

/// chi_{n,x}^(N) through the affine q-Krawtchouk family, where x plays
/// the role of the degree.
pub fn chi_affine_form<S: Scalar>(
    n: u32,
    x: u32,
    params: &RotationParams<S>,
    ctx: &QContext<S>,
) -> Result<S> {
    // here x is the polynomial degree and N - n the variable index, so the
    // cancellation scale is governed by that pair
    with_guard(x, params.big_n - n, params, ctx, |p, c| {
        chi_affine_form_impl(n, x, p, c)
    })
}

fn chi_affine_form_impl<S: Scalar>(
    n: u32,
    x: u32,
    params: &RotationParams<S>,
    ctx: &QContext<S>,
) -> Result<S> {
    let big_n = params.big_n;
    assert!(n <= big_n && x <= big_n);
    if params.theta.is_zero() {
        return Ok(if n == x { ctx.one() } else { ctx.zero() });
    }
    let theta2 = params.theta2();
    let p = theta2.clone() / ctx.q.clone();
    let poly = affine_qk(
        &AffKrawtchoukSpec {
            n: x,
            x: big_n - n,
            p,
            big_n,
        },
        ctx,
    )?;
    let radicand = qbinomial(big_n, x as i64, ctx)
        * qbinomial(big_n, n as i64, ctx)
        * qpochhammer(&theta2, ctx, x)
        * qpochhammer(&theta2, ctx, big_n - n);
    if radicand <= ctx.zero() {
        return Err(QError::NegativeRadicand(format!(
            "affine-form radicand at n={n} x={x} N={big_n}"
        )));
    }
    Ok(params.theta.powi(n as i64 - x as i64) * radicand.sqrt()? * poly)
}

/// Full chi table for the requested provenance.
pub fn chi_table<S: Scalar>(
    params: &RotationParams<S>,
    ctx: &QContext<S>,
    provenance: Provenance,
) -> Result<ChiTable<S>> {
    match provenance {
        Provenance::OperatorBuilt => build_u(params, ctx),
        Provenance::ClosedForm | Provenance::AffineForm => {
            let dim = params.big_n as usize + 1;
            let mut chi = Matrix::zeros(dim, dim, ctx.precision);
            for n in 0..dim {
                for x in 0..dim {
                    chi[(n, x)] = match provenance {
                        Provenance::ClosedForm => {
                            chi_closed_form(n as u32, x as u32, params, ctx)?
                        }
                        _ => chi_affine_form(n as u32, x as u32, params, ctx)?,
                    };
                }
            }
            Ok(ChiTable {
                params: params.clone(),
                chi,
                provenance,
            })
        }
    }
}

/// max |chi chi^T - I| and |chi^T chi - I|.
pub fn verify_unitarity<S: Scalar>(table: &ChiTable<S>, ctx: &QContext<S>) -> S {
    let id = Matrix::identity(table.chi.rows(), ctx.precision);
    let t = table.chi.transpose();
    let r1 = table.chi.matmul(&t).sub(&id).max_abs(ctx.precision);
    let r2 = t.matmul(&table.chi).sub(&id).max_abs(ctx.precision);
    if r1 > r2 { r1 } else { r2 }
}

/// max |chi_{n,x} - chi_{N-x,N-n}|.
pub fn verify_duality<S: Scalar>(table: &ChiTable<S>, ctx: &QContext<S>) -> S {
    let dim = table.chi.rows();
    let mut worst = S::zero(ctx.precision);
    for n in 0..dim {
        for x in 0..dim {
            let d = (table.chi[(n, x)].clone() - table.chi[(dim - 1 - x, dim - 1 - n)].clone()).abs();
            if d > worst {
                worst = d;
            }
        }
    }
    worst
}

/// Residuals of the U_q(sl2) defining relations and the Chevalley
/// presentation on block N.
pub fn verify_uq_relations<S: Scalar>(big_n: u32, ctx: &QContext<S>) -> Result<ResidualReport<S>> {
    let ops = build_block_operators(big_n, ctx)?;
    let p = ctx.precision;
    let dim = big_n as usize + 1;
    let mut entries = Vec::new();

    // [J0, J+-] = +- J+-
    let r = ops.j0.commutator(&ops.j_plus).sub(&ops.j_plus).max_abs(p);
    entries.push(("[J0,J+] - J+".to_string(), r));
    let r = ops.j0.commutator(&ops.j_minus).add(&ops.j_minus).max_abs(p);
    entries.push(("[J0,J-] + J-".to_string(), r));

    // [J+, J-] = (q^{J0} - q^{-J0}) / (q^{1/2} - q^{-1/2})
    let sq = ctx.q.sqrt()?;
    let mut q_j0 = Matrix::zeros(dim, dim, p);
    let mut q_j0_inv = Matrix::zeros(dim, dim, p);
    for n in 0..dim {
        let e = 2 * n as i64 - big_n as i64;
        q_j0[(n, n)] = sq.powi(e);
        q_j0_inv[(n, n)] = sq.powi(-e);
    }
    let denom = sq.clone() - ctx.one() / sq.clone();
    let rhs = q_j0.sub(&q_j0_inv).scale(&(ctx.one() / denom.clone()));
    let r = ops.j_plus.commutator(&ops.j_minus).sub(&rhs).max_abs(p);
    entries.push(("[J+,J-] - (q^J0 - q^-J0)/(q^1/2 - q^-1/2)".to_string(), r));

    // Chevalley: k = q^{2 J0}, k^{1/2} = q^{J0}, e = J+, f = J-
    let mut k = Matrix::zeros(dim, dim, p);
    let mut k_inv = Matrix::zeros(dim, dim, p);
    for n in 0..dim {
        let e = 2 * n as i64 - big_n as i64;
        k[(n, n)] = ctx.q.powi(e);
        k_inv[(n, n)] = ctx.q.powi(-e);
    }
    let id = Matrix::identity(dim, p);
    entries.push(("k k^-1 - 1".to_string(), k.matmul(&k_inv).sub(&id).max_abs(p)));
    let r = q_j0
        .matmul(&ops.j_plus)
        .sub(&ops.j_plus.matmul(&q_j0).scale(&ctx.q))
        .max_abs(p);
    entries.push(("k^1/2 e - q e k^1/2".to_string(), r));
    let r = q_j0
        .matmul(&ops.j_minus)
        .sub(&ops.j_minus.matmul(&q_j0).scale(&(ctx.one() / ctx.q.clone())))
        .max_abs(p);
    entries.push(("k^1/2 f - q^-1 f k^1/2".to_string(), r));
    let rhs = q_j0.sub(&q_j0_inv).scale(&(ctx.one() / denom));
    let r = ops.j_plus.commutator(&ops.j_minus).sub(&rhs).max_abs(p);
    entries.push(("[e,f] - (k^1/2 - k^-1/2)/(q^1/2 - q^-1/2)".to_string(), r));

    Ok(ResidualReport { entries })
}

/// Verifies the two master braiding identities between triples of
/// q-exponentials, and the q-commutation factorization identities, on
/// blocks 0..=n_max.
pub fn verify_master_identities<S: Scalar>(
    n_max: u32,
    params: &RotationParams<S>,
    ctx: &QContext<S>,
) -> Result<ResidualReport<S>> {
    let mut entries = Vec::new();
    let theta = params.theta.clone();
    let one_mq = one_minus_qk(ctx, 1);
    let tenth = ctx.ratio(1, 10);
    let candidates = [
        theta.clone() * one_mq.clone(),
        -(theta.clone() * one_mq.clone()),
        tenth.clone() * one_mq.clone(),
        -(tenth * one_mq.clone()),
    ];

    for big_n in 0..=n_max {
        let ops = build_block_operators(big_n, ctx)?;
        let dim = big_n as usize + 1;
        for alpha in &candidates {
            for beta in &candidates {
                let scale = alpha.clone() * beta.clone() / (one_mq.clone() * one_mq.clone());
                if scale.abs() >= ctx.one() {
                    return Err(QError::Domain(format!(
                        "spectral condition |ab|/(1-q)^2 < 1 violated: {scale}"
                    )));
                }
                // Master-1 with little q-exponentials
                let mut diag_b = Matrix::zeros(dim, dim, ctx.precision);
                let mut diag_a = Matrix::zeros(dim, dim, ctx.precision);
                for n in 0..dim {
                    let zb = scale.clone() * ctx.q.powi(big_n as i64 - n as i64);
                    diag_b[(n, n)] = ctx.one() / qpochhammer_inf(&zb, ctx)?;
                    let za = scale.clone() * ctx.q.powi(n as i64);
                    diag_a[(n, n)] = ctx.one() / qpochhammer_inf(&za, ctx)?;
                }
                let e_lower = little_q_exp_nilpotent(&ops.lower.scale(alpha), ctx);
                let e_raise = little_q_exp_nilpotent(&ops.raise.scale(beta), ctx);
                let lhs = e_lower.matmul(&diag_b).matmul(&e_raise);
                let rhs = e_raise.matmul(&diag_a).matmul(&e_lower);
                entries.push((
                    format!("master-1 N={big_n}"),
                    lhs.sub(&rhs).max_abs(ctx.precision),
                ));

                // Master-2 with big q-exponentials (gamma = alpha on the
                // raising side, delta = beta on the lowering side)
                let mut diag_b2 = Matrix::zeros(dim, dim, ctx.precision);
                let mut diag_a2 = Matrix::zeros(dim, dim, ctx.precision);
                for n in 0..dim {
                    let zb = scale.clone() * ctx.q.powi(big_n as i64 - n as i64);
                    diag_b2[(n, n)] = qpochhammer_inf(&zb, ctx)?;
                    let za = scale.clone() * ctx.q.powi(n as i64);
                    diag_a2[(n, n)] = qpochhammer_inf(&za, ctx)?;
                }
                let e_raise2 = big_q_exp_nilpotent(&ops.raise.scale(alpha), ctx);
                let e_lower2 = big_q_exp_nilpotent(&ops.lower.scale(beta), ctx);
                let lhs = e_raise2.matmul(&diag_b2).matmul(&e_lower2);
                let rhs = e_lower2.matmul(&diag_a2).matmul(&e_raise2);
                entries.push((
                    format!("master-2 N={big_n}"),
                    lhs.sub(&rhs).max_abs(ctx.precision),
                ));
            }
        }

        // Q-Commutation: X = th(1-q) A+B-, Y = th^2 q^{B0} satisfy XY = qYX
        let x_op = ops.raise.scale(&(theta.clone() * one_mq.clone()));
        let y_op = ops.q_b0.scale(&params.theta2());
        let braid = x_op
            .matmul(&y_op)
            .sub(&y_op.matmul(&x_op).scale(&ctx.q))
            .max_abs(ctx.precision);
        entries.push((format!("XY = qYX precondition N={big_n}"), braid));

        let sum = x_op.add(&y_op);
        let lhs = little_q_exp_matrix(&sum, ctx)?;
        let mut e_y = Matrix::zeros(dim, dim, ctx.precision);
        for n in 0..dim {
            e_y[(n, n)] = ctx.one() / qpochhammer_inf(&y_op[(n, n)], ctx)?;
        }
        let rhs = e_y.matmul(&little_q_exp_nilpotent(&x_op, ctx));
        entries.push((
            format!("e_q(X+Y) = e_q(Y) e_q(X) N={big_n}"),
            lhs.sub(&rhs).max_abs(ctx.precision),
        ));

        let lhs = big_q_exp_matrix(&sum, ctx)?;
        let mut e_y2 = Matrix::zeros(dim, dim, ctx.precision);
        for n in 0..dim {
            e_y2[(n, n)] = qpochhammer_inf(&-y_op[(n, n)].clone(), ctx)?;
        }
        let rhs = big_q_exp_nilpotent(&x_op, ctx).matmul(&e_y2);
        entries.push((
            format!("E_q(X+Y) = E_q(X) E_q(Y) N={big_n}"),
            lhs.sub(&rhs).max_abs(ctx.precision),
        ));
    }

    Ok(ResidualReport { entries })
}

fn bracket_little<S: Scalar>(
    x: &Matrix<S>,
    prev: &Matrix<S>,
    n: usize,
    ctx: &QContext<S>,
) -> Matrix<S> {
    // [X,Y]_{n+1} = q^n X [X,Y]_n - [X,Y]_n X
    x.matmul(prev)
        .scale(&ctx.q.powi(n as i64))
        .sub(&prev.matmul(x))
}

fn bracket_big<S: Scalar>(
    x: &Matrix<S>,
    prev: &Matrix<S>,
    n: usize,
    ctx: &QContext<S>,
) -> Matrix<S> {
    // [X,Y]'_{n+1} = X [X,Y]'_n - q^n [X,Y]'_n X
    x.matmul(prev)
        .sub(&prev.matmul(x).scale(&ctx.q.powi(n as i64)))
}

/// Verifies the two q-BCH conjugation expansions with X = A-B+ (nilpotent)
/// and Y in {A+B-, q^{B0}} on block N.
pub fn verify_qbch<S: Scalar>(
    big_n: u32,
    lambda: &S,
    ctx: &QContext<S>,
) -> Result<ResidualReport<S>> {
    let ops = build_block_operators(big_n, ctx)?;
    let x = ops.lower.clone();
    let mut entries = Vec::new();
    let cap = 2 * big_n as usize + 2;

    for (name, y) in [("A+B-", ops.raise.clone()), ("q^B0", ops.q_b0.clone())] {
        // Conjugation-1: E_q(lam X) Y e_q(-lam X) = sum lam^n/(q;q)_n [X,Y]_n
        let left = big_q_exp_nilpotent(&x.scale(lambda), ctx);
        let right = little_q_exp_nilpotent(&x.scale(&-lambda.clone()), ctx);
        let lhs = left.matmul(&y).matmul(&right);
        let mut rhs = y.clone();
        let mut bracket = y.clone();
        let mut coeff = ctx.one();
        for n in 0..cap {
            bracket = bracket_little(&x, &bracket, n, ctx);
            if bracket.max_abs(ctx.precision).is_zero() {
                break;
            }
            coeff = coeff * (lambda.clone() / one_minus_qk(ctx, n as i64 + 1));
            rhs = rhs.add(&bracket.scale(&coeff));
        }
        entries.push((
            format!("conjugation-1 Y={name} N={big_n}"),
            lhs.sub(&rhs).max_abs(ctx.precision),
        ));

        // Conjugation-2: e_q(lam X) Y E_q(-lam X) = sum lam^n/(q;q)_n [X,Y]'_n
        let left = little_q_exp_nilpotent(&x.scale(lambda), ctx);
        let right = big_q_exp_nilpotent(&x.scale(&-lambda.clone()), ctx);
        let lhs = left.matmul(&y).matmul(&right);
        let mut rhs = y.clone();
        let mut bracket = y.clone();
        let mut coeff = ctx.one();
        for n in 0..cap {
            bracket = bracket_big(&x, &bracket, n, ctx);
            if bracket.max_abs(ctx.precision).is_zero() {
                break;
            }
            coeff = coeff * (lambda.clone() / one_minus_qk(ctx, n as i64 + 1));
            rhs = rhs.add(&bracket.scale(&coeff));
        }
        entries.push((
            format!("conjugation-2 Y={name} N={big_n}"),
            lhs.sub(&rhs).max_abs(ctx.precision),
        ));
    }

    Ok(ResidualReport { entries })
}

/// Extrapolates chi_{n,x}^(N)(q) to q -> 1 along q_k = 1 - 2^-k with
/// theta = sin(tau), using repeated first-order Richardson steps.
pub fn chi_q1_limit<S: Scalar>(
    n: u32,
    x: u32,
    big_n: u32,
    tau: f64,
    k_max: u32,
    precision: u32,
) -> Result<S> {
    if !(0.0..std::f64::consts::FRAC_PI_2).contains(&tau) || tau <= 0.0 {
        return Err(QError::Domain(format!("tau = {tau} outside (0, pi/2)")));
    }
    let theta = S::from_f64(tau.sin(), precision);
    let convergence = S::pow10(-8, precision);

    // rows of the Richardson tableau, newest value first per level
    let mut tableau: Vec<Vec<S>> = Vec::new();
    let mut last_extrapolant: Option<S> = None;
    for k in 4..=k_max.max(6) {
        let q = S::one(precision) - S::from_ratio(1, 1i64 << k, precision);
        let ctx = QContext::new(q, precision)?;
        let params = RotationParams::new(theta.clone(), big_n, &ctx)?;
        let value = chi_closed_form(n, x, &params, &ctx)?;

        let mut row = vec![value];
        let prev = tableau.last();
        if let Some(prev_row) = prev {
            for (level, prev_val) in prev_row.iter().enumerate() {
                let factor = S::from_int(2, precision).powi(level as i64 + 1);
                let newest = row[level].clone();
                let extrap = (factor.clone() * newest - prev_val.clone())
                    / (factor - S::one(precision));
                row.push(extrap);
                if row.len() > 3 {
                    break;
                }
            }
        }
        let best = row.last().unwrap().clone();
        tableau.push(row);
        if let Some(prev_best) = &last_extrapolant {
            if (best.clone() - prev_best.clone()).abs() < convergence {
                return Ok(best);
            }
        }
        last_extrapolant = Some(best);
    }
    Err(QError::LimitFailure(format!(
        "extrapolants not contracting for n={n} x={x} N={big_n} tau={tau}"
    )))
}

/// The analytic q -> 1 target: binomial-weighted classical Krawtchouk.
pub fn chi_q1_target<S: Scalar>(n: u32, x: u32, big_n: u32, tau: f64, precision: u32) -> Result<S> {
    let sin2 = S::from_f64(tau.sin() * tau.sin(), precision);
    let tan = S::from_f64(tau.tan(), precision);
    let cos = S::from_f64(tau.cos(), precision);
    let binom = |a: u32, b: u32| -> S {
        let mut v = S::one(precision);
        for i in 0..b {
            v = v * S::from_int((a - i) as i64, precision) / S::from_int(i as i64 + 1, precision);
        }
        v
    };
    let k = classical_krawtchouk(n, x, big_n, &sin2, precision);
    let mut value = (binom(big_n, n) * binom(big_n, x)).sqrt()?
        * tan.powi(n as i64 + x as i64)
        * cos.powi(big_n as i64)
        * k;
    if x % 2 == 1 {
        value = -value;
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{BigFloat, DEFAULT_PRECISION};

    fn ctx(q_num: i64, q_den: i64) -> QContext<BigFloat> {
        QContext::new(
            BigFloat::from_ratio(q_num, q_den, DEFAULT_PRECISION),
            DEFAULT_PRECISION,
        )
        .unwrap()
    }

    fn params(theta_num: i64, theta_den: i64, big_n: u32, c: &QContext<BigFloat>) -> RotationParams<BigFloat> {
        RotationParams::new(BigFloat::from_ratio(theta_num, theta_den, c.precision), big_n, c).unwrap()
    }

    #[test]
    fn one_dimensional_block_is_trivial() {
        let c = ctx(1, 2);
        let p = params(1, 2, 0, &c);
        for prov in [Provenance::OperatorBuilt, Provenance::ClosedForm, Provenance::AffineForm] {
            let t = chi_table(&p, &c, prov).unwrap();
            assert!(c.within_tol(&(t.chi[(0, 0)].clone() - c.one())));
        }
    }

    #[test]
    fn block_one_matches_hand_matrix() {
        let c = ctx(1, 2);
        let p = params(1, 2, 1, &c);
        let s = (c.one() - p.theta2()).sqrt().unwrap();
        let expect = [[s.clone(), -p.theta.clone()], [p.theta.clone(), s]];
        for prov in [Provenance::OperatorBuilt, Provenance::ClosedForm, Provenance::AffineForm] {
            let t = chi_table(&p, &c, prov).unwrap();
            for n in 0..2 {
                for x in 0..2 {
                    let d = t.chi[(n, x)].clone() - expect[n][x].clone();
                    assert!(c.within_tol(&d), "{prov:?} entry ({n},{x}) off by {d}");
                }
            }
        }
    }

    #[test]
    fn theta_zero_gives_identity() {
        let c = ctx(2, 3);
        let p = RotationParams::new(c.zero(), 4, &c).unwrap();
        for prov in [Provenance::OperatorBuilt, Provenance::ClosedForm, Provenance::AffineForm] {
            let t = chi_table(&p, &c, prov).unwrap();
            let d = t.chi.sub(&Matrix::identity(5, c.precision)).max_abs(c.precision);
            assert!(c.within_tol(&d));
        }
    }

    #[test]
    fn ladder_operators_are_nilpotent() {
        let c = ctx(3, 10);
        let ops = build_block_operators(5, &c).unwrap();
        let mut r = ops.raise.clone();
        let mut l = ops.lower.clone();
        for _ in 0..5 {
            r = r.matmul(&ops.raise);
            l = l.matmul(&ops.lower);
        }
        assert!(r.max_abs(c.precision).is_zero());
        assert!(l.max_abs(c.precision).is_zero());
    }

    #[test]
    fn three_constructions_agree() {
        let c = ctx(3, 10);
        let p = params(7, 10, 6, &c);
        let op = chi_table(&p, &c, Provenance::OperatorBuilt).unwrap();
        let cf = chi_table(&p, &c, Provenance::ClosedForm).unwrap();
        let af = chi_table(&p, &c, Provenance::AffineForm).unwrap();
        let d1 = op.chi.sub(&cf.chi).max_abs(c.precision);
        let d2 = op.chi.sub(&af.chi).max_abs(c.precision);
        assert!(c.within_tol(&d1), "operator vs closed: {d1}");
        assert!(c.within_tol(&d2), "operator vs affine: {d2}");
    }

    #[test]
    fn unitarity_and_duality() {
        let c = ctx(9, 10);
        let p = params(1, 2, 7, &c);
        let t = chi_table(&p, &c, Provenance::OperatorBuilt).unwrap();
        assert!(c.within_tol(&verify_unitarity(&t, &c)));
        assert!(c.within_tol(&verify_duality(&t, &c)));
    }

    #[test]
    fn algebra_relations_hold() {
        let c = ctx(1, 2);
        for big_n in [1, 4, 8] {
            let report = verify_uq_relations(big_n, &c).unwrap();
            let worst = report.max_residual(c.precision);
            assert!(c.within_tol(&worst), "N={big_n}: {worst}");
        }
    }

    #[test]
    fn master_identities_hold() {
        let c = ctx(1, 2);
        let p = params(3, 5, 0, &c);
        let report = verify_master_identities(3, &p, &c).unwrap();
        let worst = report.max_residual(c.precision);
        assert!(c.within_tol(&worst), "{worst}");
    }

    #[test]
    fn qbch_conjugations_hold() {
        let c = ctx(2, 5);
        let lambda = BigFloat::from_ratio(3, 10, c.precision);
        let report = verify_qbch(3, &lambda, &c).unwrap();
        let worst = report.max_residual(c.precision);
        assert!(c.within_tol(&worst), "{worst}");
    }

    #[test]
    fn classical_limit_extrapolates() {
        let tau = std::f64::consts::FRAC_PI_4;
        let tol = BigFloat::pow10(-6, DEFAULT_PRECISION);
        for (n, x, big_n) in [(0, 0, 1u32), (1, 1, 2), (2, 1, 3)] {
            let lim: BigFloat = chi_q1_limit(n, x, big_n, tau, 40, DEFAULT_PRECISION).unwrap();
            let target: BigFloat = chi_q1_target(n, x, big_n, tau, DEFAULT_PRECISION).unwrap();
            let d = (lim - target).abs();
            assert!(d < tol, "n={n} x={x} N={big_n}: {d}");
        }
    }
}
