//! Assembly and solution of the vector rational-approximation systems that
//! define the boundary operators.
//!
//! For each condition k = 1, 2 the polynomial symbols ⟨P_k, Q_k, R_k, S_k⟩
//! must satisfy, through order ω^{K_k},
//!
//!   P_k + Q_k·s₁ + R_k·s₂ + S_k·s₃ = O(ω^{K_k}),
//!   Q_k·a₁ + R_k·a₂ + S_k·a₃      = O(ω^{K_k}),
//!
//! together with the normalisation P₁(0) = 1, Q₁(0) = 0 (resp. P₂(0) = 0,
//! Q₂(0) = 1) and, optionally, the constant-solution constraint
//! P_k(1) + Q_k(1) + R_k(1) + S_k(1) = 0. With M = deg P + deg Q + deg R +
//! deg S + 4 unknowns this is a square M×M dense system (M = 2K+2 without
//! the constraint, M = 2K+3 with it), solved by LU with full pivoting in
//! extended precision.

use crate::mp::{real, Real, PREC};
use crate::params::ModelParams;
use crate::series::{eta_series, lambda_series, power_sums, PowerSums};
use crate::Error;
use rug::Float;
use serde::{Deserialize, Serialize};

/// Condition-number threshold beyond which the system counts as singular
/// ("ADTBCs do not exist for this degree set").
pub const SINGULARITY_COND_LIMIT: f64 = 1e18;

/// Residual bound (extended precision) for an accepted solve.
pub const SOLVE_RESIDUAL_LIMIT: f64 = 1e-20;

/// Polynomial degrees ⟨deg P, deg Q, deg R, deg S⟩ for one condition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeSet {
    pub dp: usize,
    pub dq: usize,
    pub dr: usize,
    pub ds: usize,
}

impl DegreeSet {
    pub fn new(dp: usize, dq: usize, dr: usize, ds: usize) -> Self {
        DegreeSet { dp, dq, dr, ds }
    }

    /// Number of unknown polynomial coefficients, M = dP+dQ+dR+dS+4.
    pub fn unknowns(&self) -> usize {
        self.dp + self.dq + self.dr + self.ds + 4
    }

    /// Smallness order K for the given constraint mode, or a parity error:
    /// M = 2K+2 plain, M = 2K+3 with the constant-solution constraint row.
    pub fn smallness_order(&self, const_constraint: bool) -> Result<usize, Error> {
        let m = self.unknowns();
        let fixed = if const_constraint { 3 } else { 2 };
        if (m - fixed) % 2 != 0 {
            return Err(Error::InvalidParameter(format!(
                "degree set {:?} gives M = {m}, which must be {} (got the wrong parity); \
                 adjust one degree by one",
                (self.dp, self.dq, self.dr, self.ds),
                if const_constraint { "odd (M = 2K+3)" } else { "even (M = 2K+2)" },
            )));
        }
        Ok((m - fixed) / 2)
    }

    pub fn max_degree(&self) -> usize {
        self.dp.max(self.dq).max(self.dr).max(self.ds)
    }
}

impl std::fmt::Display for DegreeSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "<{},{},{},{}>", self.dp, self.dq, self.dr, self.ds)
    }
}

/// Which segment edge an operator acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Edge {
    Left,
    Right,
}

/// One edge's pair of boundary convolution operators: for k = 1, 2 the
/// coefficient lists (p, q, r, s) of ω⁰, ω¹, … For the left edge they weight
/// u₀, u₁, u₂, u₃; the mirrored right edge weights u_N, u_{N−1}, u_{N−2},
/// u_{N−3}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryOperator {
    pub edge: Edge,
    pub degrees: [DegreeSet; 2],
    /// `coeffs[k][0..4]` = p, q, r, s lists of condition k+1.
    pub coeffs: [[Vec<f64>; 4]; 2],
    /// Smallness orders K₁, K₂ actually used.
    pub smallness: [usize; 2],
}

impl BoundaryOperator {
    /// Longest convolution memory: 1 + max polynomial degree.
    pub fn history_depth(&self) -> usize {
        1 + self.degrees.iter().map(|d| d.max_degree()).max().unwrap()
    }
}

/// Conditioning and residual evidence attached to a derivation.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DerivationReport {
    /// Infinity-norm condition number of each k-system.
    pub condition_numbers: [f64; 2],
    /// Max-abs residual of each solved linear system (extended precision).
    pub residuals: [f64; 2],
    /// Smallness orders K₁, K₂.
    pub smallness_orders: [usize; 2],
    /// Max leading-coefficient magnitude of the back-substituted combination
    /// series over indices 0..K_k (the defining asymptotic, checked).
    pub back_substitution: [f64; 2],
}

/// Dense extended-precision system for one condition k.
pub struct AssembledSystem {
    pub matrix: Vec<Vec<Real>>,
    pub rhs: Vec<Real>,
    /// Unknown layout: (column, polynomial 0..4 = p/q/r/s, power).
    pub layout: Vec<(usize, usize)>,
}

/// Build the square M×M system for condition `k` (1 or 2) from the power
/// sums. Rows: K smallness rows for P + Q·s₁ + R·s₂ + S·s₃, K rows for
/// Q·a₁ + R·a₂ + S·a₃, two normalisation rows, and the optional
/// constant-solution row Σ(all coefficients) = 0.
pub fn assemble_system(
    ps: &PowerSums,
    degrees: &DegreeSet,
    k: usize,
    const_constraint: bool,
) -> Result<AssembledSystem, Error> {
    assert!(k == 1 || k == 2, "condition index must be 1 or 2");
    let order = degrees.smallness_order(const_constraint)?;
    let m = degrees.unknowns();
    if ps.s[1].order() + 1 < order {
        return Err(Error::Series(format!(
            "power sums truncated at order {} but K = {order} needed",
            ps.s[1].order()
        )));
    }

    let mut layout = Vec::with_capacity(m);
    for (poly, deg) in [degrees.dp, degrees.dq, degrees.dr, degrees.ds].into_iter().enumerate() {
        for power in 0..=deg {
            layout.push((poly, power));
        }
    }

    let mut matrix = vec![vec![real(0.0); m]; m];
    let mut rhs = vec![real(0.0); m];
    // coefficient of ω^row in P + Q·s₁ + R·s₂ + S·s₃
    for row in 0..order {
        for (col, &(poly, power)) in layout.iter().enumerate() {
            if power > row {
                continue;
            }
            matrix[row][col] = match poly {
                0 => real(if power == row { 1.0 } else { 0.0 }),
                1 => ps.s[1].coeff(row - power).clone(),
                2 => ps.s[2].coeff(row - power).clone(),
                _ => ps.s[3].coeff(row - power).clone(),
            };
        }
    }
    // coefficient of ω^row in Q·a₁ + R·a₂ + S·a₃
    for row in 0..order {
        for (col, &(poly, power)) in layout.iter().enumerate() {
            if power > row || poly == 0 {
                continue;
            }
            matrix[order + row][col] = match poly {
                1 => ps.a[1].coeff(row - power).clone(),
                2 => ps.a[2].coeff(row - power).clone(),
                _ => ps.a[3].coeff(row - power).clone(),
            };
        }
    }
    // normalisation rows: p₀ and q₀
    let p0 = layout.iter().position(|&(poly, power)| poly == 0 && power == 0).unwrap();
    let q0 = layout.iter().position(|&(poly, power)| poly == 1 && power == 0).unwrap();
    matrix[2 * order][p0] = real(1.0);
    rhs[2 * order] = real(if k == 1 { 1.0 } else { 0.0 });
    matrix[2 * order + 1][q0] = real(1.0);
    rhs[2 * order + 1] = real(if k == 1 { 0.0 } else { 1.0 });
    if const_constraint {
        for col in 0..m {
            matrix[2 * order + 2][col] = real(1.0);
        }
    }
    Ok(AssembledSystem { matrix, rhs, layout })
}

/// LU with full pivoting in extended precision; returns the solution and the
/// infinity-norm condition number estimate ‖A‖·‖A⁻¹‖ (from the explicit
/// inverse; M ≤ ~40 keeps this cheap).
fn solve_full_pivot(matrix: &[Vec<Real>], rhs: &[Real]) -> Result<(Vec<Real>, f64), Error> {
    let n = matrix.len();
    let mut a: Vec<Vec<Real>> = matrix.to_vec();
    // augmented right-hand sides: b plus the identity for the inverse
    let mut b: Vec<Vec<Real>> = vec![vec![real(0.0); n + 1]; n];
    for i in 0..n {
        b[i][0] = rhs[i].clone();
        b[i][1 + i] = real(1.0);
    }
    let mut col_perm: Vec<usize> = (0..n).collect();

    for step in 0..n {
        // full pivot search over the active submatrix
        let (mut pr, mut pc) = (step, step);
        let mut best = real(-1.0);
        for i in step..n {
            for j in step..n {
                let mag = a[i][j].clone().abs();
                if mag > best {
                    best = mag;
                    pr = i;
                    pc = j;
                }
            }
        }
        if best.is_zero() {
            return Err(Error::SingularSystem {
                degrees: String::new(),
                reason: format!("exact zero pivot at elimination step {step}"),
            });
        }
        a.swap(step, pr);
        b.swap(step, pr);
        if pc != step {
            for row in a.iter_mut() {
                row.swap(step, pc);
            }
            col_perm.swap(step, pc);
        }
        let pivot = a[step][step].clone();
        for i in (step + 1)..n {
            let factor = Float::with_val(PREC, &a[i][step] / &pivot);
            if factor.is_zero() {
                continue;
            }
            for j in step..n {
                let t = Float::with_val(PREC, &factor * &a[step][j]);
                a[i][j] -= t;
            }
            for j in 0..=n {
                let t = Float::with_val(PREC, &factor * &b[step][j]);
                b[i][j] -= t;
            }
        }
    }
    // back substitution for all right-hand sides
    let mut x = vec![vec![real(0.0); n + 1]; n];
    for i in (0..n).rev() {
        for j in 0..=n {
            let mut acc = b[i][j].clone();
            for l in (i + 1)..n {
                let t = Float::with_val(PREC, &a[i][l] * &x[l][j]);
                acc -= t;
            }
            x[i][j] = Float::with_val(PREC, &acc / &a[i][i]);
        }
    }
    // undo column permutation
    let mut solution = vec![real(0.0); n];
    let mut inverse = vec![vec![real(0.0); n]; n];
    for i in 0..n {
        solution[col_perm[i]] = x[i][0].clone();
        for j in 0..n {
            inverse[col_perm[i]][j] = x[i][1 + j].clone();
        }
    }
    let row_norm = |m: &[Vec<Real>]| -> f64 {
        m.iter()
            .map(|row| row.iter().map(|v| v.to_f64().abs()).sum::<f64>())
            .fold(0.0, f64::max)
    };
    let cond = row_norm(matrix) * row_norm(&inverse);
    Ok((solution, cond))
}

fn max_residual(matrix: &[Vec<Real>], x: &[Real], rhs: &[Real]) -> f64 {
    let n = matrix.len();
    let mut worst = 0.0f64;
    for i in 0..n {
        let mut acc = Float::with_val(PREC, -rhs[i].clone());
        for j in 0..n {
            acc += Float::with_val(PREC, &matrix[i][j] * &x[j]);
        }
        worst = worst.max(acc.to_f64().abs());
    }
    worst
}

/// Back-substitute a solved coefficient set into the two combination series
/// and return the largest coefficient magnitude over indices 0..K (these are
/// the coefficients the system forced to vanish).
fn back_substitution_residual(
    ps: &PowerSums,
    layout: &[(usize, usize)],
    x: &[Real],
    order: usize,
) -> f64 {
    let mut worst = 0.0f64;
    for row in 0..order {
        let mut sym = real(0.0);
        let mut asym = real(0.0);
        for (col, &(poly, power)) in layout.iter().enumerate() {
            if power > row {
                continue;
            }
            match poly {
                0 => {
                    if power == row {
                        sym += x[col].clone();
                    }
                }
                1 => {
                    sym += Float::with_val(PREC, &x[col] * ps.s[1].coeff(row - power));
                    asym += Float::with_val(PREC, &x[col] * ps.a[1].coeff(row - power));
                }
                2 => {
                    sym += Float::with_val(PREC, &x[col] * ps.s[2].coeff(row - power));
                    asym += Float::with_val(PREC, &x[col] * ps.a[2].coeff(row - power));
                }
                _ => {
                    sym += Float::with_val(PREC, &x[col] * ps.s[3].coeff(row - power));
                    asym += Float::with_val(PREC, &x[col] * ps.a[3].coeff(row - power));
                }
            }
        }
        worst = worst.max(sym.to_f64().abs()).max(asym.to_f64().abs());
    }
    worst
}

/// Series truncation order for a degree set: 2·max degree + 8 margin.
pub fn truncation_order(degrees: &[DegreeSet; 2]) -> usize {
    2 * degrees.iter().map(|d| d.max_degree()).max().unwrap() + 8
}

/// Derive the left-edge boundary operator for both conditions k = 1, 2.
///
/// Fails with [`Error::Regime`] when |ε| ≥ 1 and with
/// [`Error::SingularSystem`] when either dense system is singular or its
/// condition number exceeds [`SINGULARITY_COND_LIMIT`], i.e. no boundary
/// operator exists for this degree set.
pub fn derive_adtbc(
    params: &ModelParams,
    degrees: [DegreeSet; 2],
    const_constraint: bool,
) -> Result<(BoundaryOperator, DerivationReport), Error> {
    if !params.regime.legendre_ok {
        return Err(Error::Regime { epsilon: params.regime.epsilon });
    }
    let k_series = truncation_order(&degrees);
    let (eta1, eta2) = eta_series(&params.coeffs, k_series)?;
    let quartet = lambda_series((&eta1, &eta2), k_series)?;
    let ps = power_sums(&quartet, 3, k_series)?;

    let mut coeffs: [[Vec<f64>; 4]; 2] = Default::default();
    let mut cond = [0.0f64; 2];
    let mut resid = [0.0f64; 2];
    let mut smallness = [0usize; 2];
    let mut backsub = [0.0f64; 2];

    for (idx, degs) in degrees.iter().enumerate() {
        let k = idx + 1;
        let order = degs.smallness_order(const_constraint)?;
        let system = assemble_system(&ps, degs, k, const_constraint)?;
        let (x, c) = solve_full_pivot(&system.matrix, &system.rhs).map_err(|e| match e {
            Error::SingularSystem { reason, .. } => {
                Error::SingularSystem { degrees: degs.to_string(), reason }
            }
            other => other,
        })?;
        let r = max_residual(&system.matrix, &x, &system.rhs);
        if !c.is_finite() || c > SINGULARITY_COND_LIMIT || r > SOLVE_RESIDUAL_LIMIT {
            return Err(Error::SingularSystem {
                degrees: degs.to_string(),
                reason: format!("condition number {c:.3e}, residual {r:.3e}"),
            });
        }
        backsub[idx] = back_substitution_residual(&ps, &system.layout, &x, order);
        cond[idx] = c;
        resid[idx] = r;
        smallness[idx] = order;
        let mut lists: [Vec<f64>; 4] =
            [Vec::new(), Vec::new(), Vec::new(), Vec::new()];
        for (col, &(poly, _)) in system.layout.iter().enumerate() {
            lists[poly].push(x[col].to_f64());
        }
        // normalisation must survive rounding exactly
        lists[0][0] = if k == 1 { 1.0 } else { 0.0 };
        lists[1][0] = if k == 1 { 0.0 } else { 1.0 };
        coeffs[idx] = lists;
    }

    let op = BoundaryOperator { edge: Edge::Left, degrees, coeffs, smallness };
    let report = DerivationReport {
        condition_numbers: cond,
        residuals: resid,
        smallness_orders: smallness,
        back_substitution: backsub,
    };
    Ok((op, report))
}

/// The right-edge operator: identical coefficient lists applied to the
/// mirrored stencil (u_N, u_{N−1}, u_{N−2}, u_{N−3}), justified by the
/// spatial reflection symmetry of the scheme and λ ↦ 1/λ under m ↦ N−m.
pub fn mirror_right_edge(left: &BoundaryOperator) -> BoundaryOperator {
    let mut out = left.clone();
    out.edge = match left.edge {
        Edge::Left => Edge::Right,
        Edge::Right => Edge::Left,
    };
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{GridSpec, ModelParams, RodModel};
    use approx::assert_relative_eq;

    fn steel_params() -> ModelParams {
        let rod = RodModel::new(7860.0, 210e9, 1e-3, 1.0).unwrap();
        let grid = GridSpec::new(&rod, 0.02, 1.6e-4, 0.3).unwrap();
        ModelParams::new(rod, grid)
    }

    #[test]
    fn degree_accounting() {
        let d = DegreeSet::new(4, 4, 8, 8);
        assert_eq!(d.unknowns(), 28);
        assert_eq!(d.smallness_order(false).unwrap(), 13);
        let d = DegreeSet::new(4, 5, 8, 8);
        assert_eq!(d.unknowns(), 29);
        assert_eq!(d.smallness_order(true).unwrap(), 13);
        let d = DegreeSet::new(0, 0, 0, 0);
        assert_eq!(d.unknowns(), 4);
        assert_eq!(d.smallness_order(false).unwrap(), 1);
        // parity mismatches
        assert!(DegreeSet::new(4, 5, 8, 8).smallness_order(false).is_err());
        assert!(DegreeSet::new(4, 4, 8, 8).smallness_order(true).is_err());
    }

    #[test]
    fn smallest_admissible_stencil_is_4x4() {
        let params = steel_params();
        let d = DegreeSet::new(0, 0, 0, 0);
        let k_series = truncation_order(&[d, d]);
        let (eta1, eta2) = eta_series(&params.coeffs, k_series).unwrap();
        let q = lambda_series((&eta1, &eta2), k_series).unwrap();
        let ps = power_sums(&q, 3, k_series).unwrap();
        let sys = assemble_system(&ps, &d, 1, false).unwrap();
        assert_eq!(sys.matrix.len(), 4);
        assert_eq!(sys.rhs.len(), 4);
    }

    #[test]
    fn unconstrained_coefficient_spot_values() {
        let params = steel_params();
        let d = DegreeSet::new(4, 4, 8, 8);
        let (op, report) = derive_adtbc(&params, [d, d], false).unwrap();
        let p1 = &op.coeffs[0][0];
        for (got, want) in
            p1.iter().zip([1.0, -1.039354, 1.040798, -0.484423, 0.217631])
        {
            assert_relative_eq!(*got, want, epsilon = 5e-7);
        }
        let s2 = &op.coeffs[1][3];
        for (got, want) in s2[4..].iter().zip([-0.020261, -0.023854, -0.006821, 0.000709, 0.000827])
        {
            assert_relative_eq!(*got, want, epsilon = 5e-7);
        }
        assert_eq!(report.smallness_orders, [13, 13]);
        assert!(report.residuals.iter().all(|&r| r < SOLVE_RESIDUAL_LIMIT));
        assert!(report.back_substitution.iter().all(|&r| r < 1e-18));
    }

    #[test]
    fn constrained_q1_coefficients() {
        let params = steel_params();
        let d = DegreeSet::new(4, 5, 8, 8);
        let (op, _) = derive_adtbc(&params, [d, d], true).unwrap();
        let q1 = &op.coeffs[0][1];
        for (got, want) in
            q1.iter().zip([0.0, 2.432054, -1.792876, 2.376252, -1.388514, -0.519196])
        {
            assert_relative_eq!(*got, want, epsilon = 5e-7);
        }
        // per-condition coefficient sums vanish under the constraint
        for k in 0..2 {
            let total: f64 = op.coeffs[k].iter().flatten().sum();
            assert!(total.abs() < 1e-10, "k = {}: sum = {total:e}", k + 1);
        }
    }

    #[test]
    fn normalization_rows_exact_after_rounding() {
        let params = steel_params();
        let d = DegreeSet::new(4, 4, 8, 8);
        let (op, _) = derive_adtbc(&params, [d, d], false).unwrap();
        assert_eq!(op.coeffs[0][0][0], 1.0);
        assert_eq!(op.coeffs[0][1][0], 0.0);
        assert_eq!(op.coeffs[1][0][0], 0.0);
        assert_eq!(op.coeffs[1][1][0], 1.0);
    }

    #[test]
    fn derivation_is_deterministic() {
        let params = steel_params();
        let d = DegreeSet::new(4, 4, 8, 8);
        let (a, _) = derive_adtbc(&params, [d, d], false).unwrap();
        let (b, _) = derive_adtbc(&params, [d, d], false).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn regime_failure_reported() {
        let rod = RodModel::new(7860.0, 210e9, 1e-3, 1.0).unwrap();
        // tau below R·sqrt(rho/E): |eps| >= 1
        let grid = GridSpec::new(&rod, 0.02, 1e-7, 1e-5).unwrap();
        let params = ModelParams::new(rod, grid);
        let d = DegreeSet::new(4, 4, 8, 8);
        assert!(matches!(
            derive_adtbc(&params, [d, d], false),
            Err(Error::Regime { .. })
        ));
    }

    #[test]
    fn mirror_is_involution() {
        let params = steel_params();
        let d = DegreeSet::new(4, 4, 8, 8);
        let (left, _) = derive_adtbc(&params, [d, d], false).unwrap();
        let right = mirror_right_edge(&left);
        assert_eq!(right.edge, Edge::Right);
        assert_eq!(mirror_right_edge(&right), left);
        // same coefficient lists, only the edge changes
        assert_eq!(right.coeffs, left.coeffs);
    }

    #[test]
    fn history_depth_is_one_plus_max_degree() {
        let params = steel_params();
        let d = DegreeSet::new(4, 4, 8, 8);
        let (op, _) = derive_adtbc(&params, [d, d], false).unwrap();
        assert_eq!(op.history_depth(), 9);
    }

    #[test]
    fn full_pivot_lu_solves_known_system() {
        // small well-conditioned system with known solution
        let a = vec![
            vec![real(2.0), real(1.0), real(-1.0)],
            vec![real(-3.0), real(-1.0), real(2.0)],
            vec![real(-2.0), real(1.0), real(2.0)],
        ];
        let b = vec![real(8.0), real(-11.0), real(-3.0)];
        let (x, cond) = solve_full_pivot(&a, &b).unwrap();
        assert_relative_eq!(x[0].to_f64(), 2.0, epsilon = 1e-30);
        assert_relative_eq!(x[1].to_f64(), 3.0, epsilon = 1e-30);
        assert_relative_eq!(x[2].to_f64(), -1.0, epsilon = 1e-30);
        assert!(cond > 1.0 && cond < 1e3);
    }

    #[test]
    fn exactly_singular_matrix_detected() {
        let a = vec![
            vec![real(1.0), real(2.0)],
            vec![real(2.0), real(4.0)],
        ];
        let b = vec![real(1.0), real(2.0)];
        assert!(matches!(
            solve_full_pivot(&a, &b),
            Err(Error::SingularSystem { .. })
        ));
    }
}
