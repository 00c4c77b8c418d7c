//! Exact convex-hull membership in low dimension.
//!
//! Decides μ ∈ conv{v₁, …, v_k} ⊂ ℚ^m by phase-I linear programming over the
//! homogenised system (Σ tᵢ·vᵢ = μ, Σ tᵢ = 1, t ≥ 0).  A fast double-precision
//! revised simplex produces a candidate final basis, which is then certified
//! in exact rational arithmetic: a feasible basis is re-solved exactly, an
//! infeasible basis yields an exact dual Farkas certificate checked against
//! every vertex.  If certification fails the whole problem is re-run with an
//! exact rational simplex, so the returned answer is always exact.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::seq::Rat;

pub fn rat_to_big(r: Rat) -> BigRational {
    BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

/// Scalar abstraction shared by the float pass and the exact pass.
trait LpScalar: Clone + PartialOrd + num_traits::Num + std::ops::Neg<Output = Self> {
    fn from_rat(r: Rat) -> Self;
    fn is_negative_pivot(&self) -> bool;
    fn is_effectively_zero(&self) -> bool;
    /// Ranking used to pick elimination pivots; magnitude for floats, any
    /// nonzero for exact scalars.
    fn pivot_size(&self) -> f64;
}

impl LpScalar for f64 {
    fn from_rat(r: Rat) -> f64 {
        crate::seq::rat_to_f64(r)
    }
    fn is_negative_pivot(&self) -> bool {
        *self < -1e-9
    }
    fn is_effectively_zero(&self) -> bool {
        self.abs() < 1e-9
    }
    fn pivot_size(&self) -> f64 {
        self.abs()
    }
}

impl LpScalar for BigRational {
    fn from_rat(r: Rat) -> BigRational {
        rat_to_big(r)
    }
    fn is_negative_pivot(&self) -> bool {
        self.is_negative()
    }
    fn is_effectively_zero(&self) -> bool {
        self.is_zero()
    }
    fn pivot_size(&self) -> f64 {
        if self.is_zero() {
            0.0
        } else {
            1.0
        }
    }
}

/// Dense r×r linear solve by Gaussian elimination with partial pivoting;
/// returns None when singular.
fn solve_square<T: LpScalar>(a: &[Vec<T>], b: &[T]) -> Option<Vec<T>> {
    let r = b.len();
    let mut m: Vec<Vec<T>> = (0..r)
        .map(|i| {
            let mut row = a[i].clone();
            row.push(b[i].clone());
            row
        })
        .collect();
    for col in 0..r {
        let pivot = (col..r)
            .max_by(|&i, &j| m[i][col].pivot_size().total_cmp(&m[j][col].pivot_size()))
            .filter(|&i| !m[i][col].is_effectively_zero())?;
        m.swap(col, pivot);
        let p = m[col][col].clone();
        for j in col..=r {
            m[col][j] = m[col][j].clone() / p.clone();
        }
        for i in 0..r {
            if i != col && !m[i][col].is_effectively_zero() {
                let f = m[i][col].clone();
                for j in col..=r {
                    m[i][j] = m[i][j].clone() - f.clone() * m[col][j].clone();
                }
            }
        }
    }
    Some((0..r).map(|i| m[i][r].clone()).collect())
}

/// Final basis of the phase-I simplex, raw column indices with artificial
/// slots kept: a zero optimum proves feasibility, a positive one determines
/// a dual Farkas certificate.
enum SimplexOutcome {
    Feasible(Vec<usize>),
    Infeasible(Vec<usize>),
    Stalled,
}

/// Phase-I revised simplex on Σ tᵢ(vᵢ,1) = (target,1), t ≥ 0.
///
/// Columns 0..k are vertices, k..k+r artificials.  Bland's rule; the basis
/// system is small (r ≤ window+1) and re-solved from scratch each iteration.
/// `cap` bounds the pivot count: in exact arithmetic Bland's rule cannot
/// cycle so the cap may be unbounded, while the float pass hands anything
/// past a few hundred pivots — tolerance-induced cycling — to the caller.
fn phase_one<T: LpScalar>(columns: &[Vec<T>], rhs: &[T], cap: usize) -> SimplexOutcome {
    let r = rhs.len();
    let k = columns.len();
    // flip rows to make the right side nonnegative
    let flip: Vec<bool> = rhs.iter().map(|v| v < &T::zero()).collect();
    // artificial identity columns are added after the row flip, so the
    // all-artificial starting basis is feasible
    let col_entry = |j: usize, i: usize| -> T {
        if j < k {
            if flip[i] {
                -columns[j][i].clone()
            } else {
                columns[j][i].clone()
            }
        } else if j - k == i {
            T::one()
        } else {
            T::zero()
        }
    };
    let b: Vec<T> = rhs
        .iter()
        .enumerate()
        .map(|(i, v)| if flip[i] { -v.clone() } else { v.clone() })
        .collect();
    let cost = |j: usize| -> T {
        if j < k {
            T::zero()
        } else {
            T::one()
        }
    };

    let mut basis: Vec<usize> = (k..k + r).collect();
    for _ in 0..cap {
        let bmat: Vec<Vec<T>> = (0..r)
            .map(|i| basis.iter().map(|&j| col_entry(j, i)).collect())
            .collect();
        let Some(x_b) = solve_square(&bmat, &b) else {
            return SimplexOutcome::Stalled;
        };
        // dual: yᵀB = c_B  ⇔  Bᵀ y = c_B
        let bt: Vec<Vec<T>> = (0..r)
            .map(|i| (0..r).map(|j| bmat[j][i].clone()).collect())
            .collect();
        let c_b: Vec<T> = basis.iter().map(|&j| cost(j)).collect();
        let Some(y) = solve_square(&bt, &c_b) else {
            return SimplexOutcome::Stalled;
        };
        // entering column: Bland — smallest index with negative reduced cost
        let mut entering = None;
        for j in 0..k + r {
            if basis.contains(&j) {
                continue;
            }
            let mut rc = cost(j);
            for i in 0..r {
                rc = rc - y[i].clone() * col_entry(j, i);
            }
            if rc.is_negative_pivot() {
                entering = Some(j);
                break;
            }
        }
        let Some(enter) = entering else {
            // optimal: objective = Σ artificial levels
            let mut obj = T::zero();
            for (slot, &j) in basis.iter().enumerate() {
                if j >= k {
                    obj = obj + x_b[slot].clone();
                }
            }
            return if obj.is_effectively_zero() {
                SimplexOutcome::Feasible(basis)
            } else {
                SimplexOutcome::Infeasible(basis)
            };
        };
        let acol: Vec<T> = (0..r).map(|i| col_entry(enter, i)).collect();
        let Some(d) = solve_square(&bmat, &acol) else {
            return SimplexOutcome::Stalled;
        };
        // ratio test, Bland ties by smallest basis column index
        let mut leave: Option<(usize, T)> = None;
        for i in 0..r {
            if d[i] > T::zero() && !d[i].is_effectively_zero() {
                let ratio = x_b[i].clone() / d[i].clone();
                let better = match &leave {
                    None => true,
                    Some((li, lr)) => {
                        ratio < *lr || (ratio == *lr && basis[i] < basis[*li])
                    }
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
        }
        let Some((leave_slot, _)) = leave else {
            return SimplexOutcome::Stalled;
        };
        basis[leave_slot] = enter;
    }
    SimplexOutcome::Stalled
}

/// Exact phase-I simplex with float-screened pricing.
///
/// Identical to `phase_one::<BigRational>` except that the pricing scan —
/// the dominant cost on heavily degenerate hulls, where Bland's rule walks
/// hundreds of pivots over hundreds of columns — first evaluates reduced
/// costs in doubles and skips columns that are clearly nonnegative.  Every
/// entering column is admitted only after its exact reduced cost verifies
/// negative, and optimality is re-confirmed by a full exact scan, so the
/// verdict never depends on float behaviour.  The screen can in principle
/// disturb Bland's pivot order (losing its anti-cycling guarantee), hence
/// the cap; the caller backs a capped run with the unscreened rule.
fn phase_one_exact_guided(
    columns: &[Vec<BigRational>],
    rhs: &[BigRational],
    cap: usize,
) -> SimplexOutcome {
    let r = rhs.len();
    let k = columns.len();
    let flip: Vec<bool> = rhs.iter().map(|v| v.is_negative()).collect();
    let col_entry = |j: usize, i: usize| -> BigRational {
        if j < k {
            if flip[i] {
                -columns[j][i].clone()
            } else {
                columns[j][i].clone()
            }
        } else if j - k == i {
            BigRational::one()
        } else {
            BigRational::zero()
        }
    };
    let b: Vec<BigRational> = rhs
        .iter()
        .enumerate()
        .map(|(i, v)| if flip[i] { -v.clone() } else { v.clone() })
        .collect();
    let cost = |j: usize| -> BigRational {
        if j < k {
            BigRational::zero()
        } else {
            BigRational::one()
        }
    };
    let rc_exact = |j: usize, y: &[BigRational]| -> BigRational {
        let mut rc = cost(j);
        for (i, yi) in y.iter().enumerate() {
            rc -= yi * col_entry(j, i);
        }
        rc
    };
    // float mirror of the flipped columns, artificials included
    let colf: Vec<Vec<f64>> = (0..k + r)
        .map(|j| {
            (0..r)
                .map(|i| col_entry(j, i).to_f64().unwrap_or(f64::NAN))
                .collect()
        })
        .collect();

    let mut basis: Vec<usize> = (k..k + r).collect();
    for _ in 0..cap {
        let bmat: Vec<Vec<BigRational>> = (0..r)
            .map(|i| basis.iter().map(|&j| col_entry(j, i)).collect())
            .collect();
        let Some(x_b) = solve_square(&bmat, &b) else {
            return SimplexOutcome::Stalled;
        };
        let bt: Vec<Vec<BigRational>> = (0..r)
            .map(|i| (0..r).map(|j| bmat[j][i].clone()).collect())
            .collect();
        let c_b: Vec<BigRational> = basis.iter().map(|&j| cost(j)).collect();
        let Some(y) = solve_square(&bt, &c_b) else {
            return SimplexOutcome::Stalled;
        };
        let yf: Vec<f64> = y.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect();
        let mut entering = None;
        let mut screened_any = false;
        for j in 0..k + r {
            if basis.contains(&j) {
                continue;
            }
            let mut rcf = if j < k { 0.0 } else { 1.0 };
            for i in 0..r {
                rcf -= yf[i] * colf[j][i];
            }
            // NaN also lands in the screened bucket and is re-checked below
            if !(rcf < 1e-7) {
                screened_any = true;
                continue;
            }
            if rc_exact(j, &y).is_negative() {
                entering = Some(j);
                break;
            }
        }
        if entering.is_none() && screened_any {
            // exact confirmation: the screen may only skip optimal columns
            for j in 0..k + r {
                if !basis.contains(&j) && rc_exact(j, &y).is_negative() {
                    entering = Some(j);
                    break;
                }
            }
        }
        let Some(enter) = entering else {
            let mut obj = BigRational::zero();
            for (slot, &j) in basis.iter().enumerate() {
                if j >= k {
                    obj += x_b[slot].clone();
                }
            }
            return if obj.is_zero() {
                SimplexOutcome::Feasible(basis)
            } else {
                SimplexOutcome::Infeasible(basis)
            };
        };
        let acol: Vec<BigRational> = (0..r).map(|i| col_entry(enter, i)).collect();
        let Some(d) = solve_square(&bmat, &acol) else {
            return SimplexOutcome::Stalled;
        };
        let mut leave: Option<(usize, BigRational)> = None;
        for i in 0..r {
            if d[i].is_positive() {
                let ratio = x_b[i].clone() / d[i].clone();
                let better = match &leave {
                    None => true,
                    Some((li, lr)) => ratio < *lr || (ratio == *lr && basis[i] < basis[*li]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
        }
        let Some((leave_slot, _)) = leave else {
            return SimplexOutcome::Stalled;
        };
        basis[leave_slot] = enter;
    }
    SimplexOutcome::Stalled
}

/// Row flips `phase_one` applies to the homogenised system so its right
/// side is nonnegative; the last row (Σ tᵢ = 1) never flips.
fn row_flips(target: &[Rat]) -> Vec<bool> {
    let m = target.len();
    (0..=m).map(|i| i < m && target[i].is_negative()).collect()
}

/// Entry (row `i`) of homogenised column `j` in the row-flipped system;
/// columns ≥ k are the artificial identity, added after the flip.
fn flipped_entry(vertices: &[Vec<Rat>], flip: &[bool], j: usize, i: usize) -> BigRational {
    let m = flip.len() - 1;
    let k = vertices.len();
    if j < k {
        let e = if i < m {
            rat_to_big(vertices[j][i])
        } else {
            BigRational::one()
        };
        if flip[i] {
            -e
        } else {
            e
        }
    } else if j - k == i {
        BigRational::one()
    } else {
        BigRational::zero()
    }
}

/// Exact check that the final basis solves the system with nonnegative
/// weights on vertex columns and exactly zero weight on artificials.
fn certify_feasible(vertices: &[Vec<Rat>], target: &[Rat], basis: &[usize]) -> bool {
    let m = target.len();
    let r = m + 1;
    let k = vertices.len();
    if basis.len() != r {
        return false;
    }
    let flip = row_flips(target);
    let bmat: Vec<Vec<BigRational>> = (0..r)
        .map(|i| {
            basis
                .iter()
                .map(|&j| flipped_entry(vertices, &flip, j, i))
                .collect()
        })
        .collect();
    let b: Vec<BigRational> = (0..r)
        .map(|i| {
            let e = if i < m {
                rat_to_big(target[i])
            } else {
                BigRational::one()
            };
            if flip[i] {
                -e
            } else {
                e
            }
        })
        .collect();
    let Some(t) = solve_square(&bmat, &b) else {
        return false;
    };
    basis
        .iter()
        .zip(&t)
        .all(|(&j, tj)| if j < k { !tj.is_negative() } else { tj.is_zero() })
}

/// Exact Farkas check from the final basis of the float pass.  The dual is
/// re-derived in rational arithmetic from the basis indices — the float dual
/// values themselves are too noisy to survive exact verification — and then
/// checked against every vertex: y·(vᵢ,1) ≤ 0 for all i while y·(μ,1) > 0.
fn certify_infeasible(vertices: &[Vec<Rat>], target: &[Rat], basis: &[usize]) -> bool {
    let m = target.len();
    let r = m + 1;
    let k = vertices.len();
    if basis.len() != r {
        return false;
    }
    let flip = row_flips(target);
    // dual equations y·A_j = c_j over the basic columns:  Bᵀ y = c_B
    let bt: Vec<Vec<BigRational>> = basis
        .iter()
        .map(|&j| {
            (0..r)
                .map(|i| flipped_entry(vertices, &flip, j, i))
                .collect()
        })
        .collect();
    let c_b: Vec<BigRational> = basis
        .iter()
        .map(|&j| if j < k { BigRational::zero() } else { BigRational::one() })
        .collect();
    let Some(mut y) = solve_square(&bt, &c_b) else {
        return false;
    };
    for (yi, &f) in y.iter_mut().zip(&flip) {
        if f {
            *yi = -yi.clone();
        }
    }
    let pair = |v: &[Rat]| -> BigRational {
        let mut acc = y[m].clone(); // homogenising row contributes y_m·1
        for i in 0..m {
            acc += &y[i] * rat_to_big(v[i]);
        }
        acc
    };
    if !pair(target).is_positive() {
        return false;
    }
    vertices.iter().all(|v| !pair(v).is_positive())
}

/// Exact membership of `target` in the convex hull of `vertices`.
///
/// All vectors must share the same length; an empty vertex list yields
/// `false`.
pub fn contains(vertices: &[Vec<Rat>], target: &[Rat]) -> bool {
    if vertices.is_empty() {
        return false;
    }
    let m = target.len();
    assert!(vertices.iter().all(|v| v.len() == m));
    let columns_f: Vec<Vec<f64>> = vertices
        .iter()
        .map(|v| {
            let mut c: Vec<f64> = v.iter().map(|&x| f64::from_rat(x)).collect();
            c.push(1.0);
            c
        })
        .collect();
    let mut rhs_f: Vec<f64> = target.iter().map(|&x| f64::from_rat(x)).collect();
    rhs_f.push(1.0);

    match phase_one(&columns_f, &rhs_f, 400) {
        SimplexOutcome::Feasible(basis) => {
            if certify_feasible(vertices, target, &basis) {
                return true;
            }
        }
        SimplexOutcome::Infeasible(basis) => {
            if certify_infeasible(vertices, target, &basis) {
                return false;
            }
        }
        SimplexOutcome::Stalled => {}
    }
    contains_exact(vertices, target)
}

/// Membership decided entirely in rational arithmetic; slower than
/// `contains` but independent of the float pass.  Pricing is float-screened
/// with every pivot verified exactly; should the screen ever cycle, an
/// unscreened Bland run — which cannot cycle — settles the question.
pub fn contains_exact(vertices: &[Vec<Rat>], target: &[Rat]) -> bool {
    if vertices.is_empty() {
        return false;
    }
    let columns: Vec<Vec<BigRational>> = vertices
        .iter()
        .map(|v| {
            let mut c: Vec<BigRational> = v.iter().map(|&x| rat_to_big(x)).collect();
            c.push(BigRational::one());
            c
        })
        .collect();
    let mut rhs: Vec<BigRational> = target.iter().map(|&x| rat_to_big(x)).collect();
    rhs.push(BigRational::one());
    match phase_one_exact_guided(&columns, &rhs, 20_000) {
        SimplexOutcome::Feasible(_) => true,
        SimplexOutcome::Infeasible(_) => false,
        SimplexOutcome::Stalled => match phase_one(&columns, &rhs, usize::MAX) {
            SimplexOutcome::Feasible(_) => true,
            SimplexOutcome::Infeasible(_) => false,
            SimplexOutcome::Stalled => {
                unreachable!("exact simplex with Bland's rule cannot stall")
            }
        },
    }
}
