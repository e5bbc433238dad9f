//! Exact no-signaling bound by linear programming over the rationals.
//!
//! The solver is a two-phase tableau simplex with Bland's rule. Artificial
//! columns are kept for the whole solve: their final reduced costs are the
//! dual solution, which [`verify_certificate`] checks independently.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::scenario::{BellFunctional, Scenario};

pub type Rational = BigRational;

/// `maximize c·x subject to A x = b, x >= 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct StandardFormLp {
    pub objective: Vec<Rational>,
    pub equality_matrix: Vec<Vec<Rational>>,
    pub equality_rhs: Vec<Rational>,
    pub variable_count: usize,
}

impl StandardFormLp {
    /// Checks the shape invariants.
    pub fn is_well_formed(&self) -> bool {
        self.objective.len() == self.variable_count
            && self.equality_matrix.len() == self.equality_rhs.len()
            && self
                .equality_matrix
                .iter()
                .all(|r| r.len() == self.variable_count)
    }

    pub fn row_count(&self) -> usize {
        self.equality_rhs.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Unbounded,
    Infeasible,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpResult {
    pub status: LpStatus,
    pub value: Rational,
    /// Primal solution; empty unless optimal.
    pub solution: Vec<Rational>,
    /// Dual solution `y` with `Aᵀy >= c` and `b·y = value`; empty unless optimal.
    pub dual: Vec<Rational>,
}

impl LpResult {
    fn without_solution(status: LpStatus) -> Self {
        LpResult {
            status,
            value: Rational::zero(),
            solution: Vec::new(),
            dual: Vec::new(),
        }
    }
}

fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

struct Tableau {
    rows: Vec<Vec<Rational>>,
    rhs: Vec<Rational>,
    basis: Vec<usize>,
    /// Reduced costs `c_B B⁻¹ A_j - c_j`; the current basis is optimal when
    /// every eligible entry is nonnegative.
    reduced: Vec<Rational>,
    value: Rational,
    /// Columns that may enter the basis.
    eligible: usize,
}

impl Tableau {
    fn reprice(&mut self, costs: &[Rational]) {
        let width = self.reduced.len();
        let mut reduced: Vec<Rational> = costs.iter().map(|c| -c).collect();
        let mut value = Rational::zero();
        for (i, &bv) in self.basis.iter().enumerate() {
            let cb = &costs[bv];
            if cb.is_zero() {
                continue;
            }
            for (j, r) in reduced.iter_mut().enumerate().take(width) {
                let t = &self.rows[i][j];
                if !t.is_zero() {
                    *r += cb * t;
                }
            }
            value += cb * &self.rhs[i];
        }
        self.reduced = reduced;
        self.value = value;
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let inv = self.rows[row][col].recip();
        for t in self.rows[row].iter_mut() {
            if !t.is_zero() {
                *t *= &inv;
            }
        }
        self.rhs[row] *= &inv;
        let support: Vec<usize> = (0..self.rows[row].len())
            .filter(|&j| !self.rows[row][j].is_zero())
            .collect();
        let pivot_row = self.rows[row].clone();
        let pivot_rhs = self.rhs[row].clone();
        for i in 0..self.rows.len() {
            if i == row || self.rows[i][col].is_zero() {
                continue;
            }
            let factor = self.rows[i][col].clone();
            for &j in &support {
                let delta = &factor * &pivot_row[j];
                self.rows[i][j] -= delta;
            }
            self.rhs[i] -= &factor * &pivot_rhs;
        }
        if !self.reduced[col].is_zero() {
            let factor = self.reduced[col].clone();
            for &j in &support {
                let delta = &factor * &pivot_row[j];
                self.reduced[j] -= delta;
            }
            self.value -= &factor * &pivot_rhs;
        }
        self.basis[row] = col;
    }

    /// Runs Bland's rule to optimality; returns false when unbounded.
    fn optimize(&mut self) -> bool {
        loop {
            let Some(col) = (0..self.eligible).find(|&j| self.reduced[j].is_negative()) else {
                return true;
            };
            let mut leave: Option<(usize, Rational)> = None;
            for i in 0..self.rows.len() {
                let t = &self.rows[i][col];
                if !t.is_positive() {
                    continue;
                }
                let ratio = &self.rhs[i] / t;
                let better = match &leave {
                    None => true,
                    Some((r, best)) => {
                        ratio < *best || (ratio == *best && self.basis[i] < self.basis[*r])
                    }
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            match leave {
                Some((row, _)) => self.pivot(row, col),
                None => return false,
            }
        }
    }
}

/// Exact two-phase primal simplex with Bland's anti-cycling rule.
///
/// # Panics
///
/// Panics if `lp` is not well formed.
pub fn simplex_maximize(lp: &StandardFormLp) -> LpResult {
    assert!(lp.is_well_formed(), "malformed standard-form LP");
    let n = lp.variable_count;
    let m = lp.row_count();

    // Flip rows so that b >= 0; remember the flips for the dual.
    let flipped: Vec<bool> = lp.equality_rhs.iter().map(|v| v.is_negative()).collect();
    let mut rows = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    for (i, &neg) in flipped.iter().enumerate() {
        let mut row: Vec<Rational> = lp.equality_matrix[i]
            .iter()
            .map(|v| if neg { -v } else { v.clone() })
            .collect();
        row.extend((0..m).map(|k| {
            if k == i {
                Rational::one()
            } else {
                Rational::zero()
            }
        }));
        rows.push(row);
        rhs.push(if neg {
            -&lp.equality_rhs[i]
        } else {
            lp.equality_rhs[i].clone()
        });
    }

    let mut tab = Tableau {
        rows,
        rhs,
        basis: (n..n + m).collect(),
        reduced: vec![Rational::zero(); n + m],
        value: Rational::zero(),
        eligible: n,
    };

    // Phase one: maximize minus the sum of artificials.
    let phase_one: Vec<Rational> = (0..n + m)
        .map(|j| if j < n { Rational::zero() } else { int(-1) })
        .collect();
    tab.reprice(&phase_one);
    tab.optimize();
    if tab.value.is_negative() {
        return LpResult::without_solution(LpStatus::Infeasible);
    }

    // Drive zero-level artificials out where possible. Rows where that is
    // impossible are redundant and keep their artificial at zero.
    for i in 0..m {
        if tab.basis[i] >= n {
            if let Some(col) = (0..n).find(|&j| !tab.rows[i][j].is_zero()) {
                tab.pivot(i, col);
            }
        }
    }

    let phase_two: Vec<Rational> = lp
        .objective
        .iter()
        .cloned()
        .chain((0..m).map(|_| Rational::zero()))
        .collect();
    tab.reprice(&phase_two);
    if !tab.optimize() {
        return LpResult::without_solution(LpStatus::Unbounded);
    }

    let mut solution = vec![Rational::zero(); n];
    for (i, &bv) in tab.basis.iter().enumerate() {
        if bv < n {
            solution[bv] = tab.rhs[i].clone();
        }
    }
    let dual = (0..m)
        .map(|i| {
            let y = tab.reduced[n + i].clone();
            if flipped[i] {
                -y
            } else {
                y
            }
        })
        .collect();
    LpResult {
        status: LpStatus::Optimal,
        value: tab.value,
        solution,
        dual,
    }
}

/// Checks primal feasibility, dual feasibility and zero duality gap of an
/// optimal result, in exact arithmetic.
pub fn verify_certificate(lp: &StandardFormLp, result: &LpResult) -> Result<(), String> {
    if result.status != LpStatus::Optimal {
        return Err(format!("status is {:?}", result.status));
    }
    let x = &result.solution;
    let y = &result.dual;
    if x.len() != lp.variable_count || y.len() != lp.row_count() {
        return Err("certificate has the wrong shape".into());
    }
    if let Some(j) = (0..x.len()).find(|&j| x[j].is_negative()) {
        return Err(format!("x[{j}] = {} < 0", x[j]));
    }
    for (i, row) in lp.equality_matrix.iter().enumerate() {
        let lhs: Rational = row.iter().zip(x).map(|(a, v)| a * v).sum();
        if lhs != lp.equality_rhs[i] {
            return Err(format!("row {i}: {lhs} != {}", lp.equality_rhs[i]));
        }
    }
    for j in 0..lp.variable_count {
        let col: Rational = (0..lp.row_count())
            .map(|i| &lp.equality_matrix[i][j] * &y[i])
            .sum();
        if col < lp.objective[j] {
            return Err(format!(
                "dual constraint {j} violated: {col} < {}",
                lp.objective[j]
            ));
        }
    }
    let primal: Rational = lp.objective.iter().zip(x).map(|(c, v)| c * v).sum();
    let dual: Rational = lp.equality_rhs.iter().zip(y).map(|(b, v)| b * v).sum();
    if primal != result.value || dual != result.value {
        return Err(format!(
            "objective {primal} / dual {dual} / reported {}",
            result.value
        ));
    }
    Ok(())
}

/// The no-signaling polytope LP for `functional`.
///
/// Rows, in order: per-block normalization; Alice's marginals for `y >= 1`
/// tied to `y = 0`; Bob's marginals for `x >= 1` tied to `x = 0`.
pub fn build_ns_lp(functional: &BellFunctional) -> StandardFormLp {
    let s: Scenario = *functional.scenario();
    let n = s.probability_dimension();
    let idx = |x, y, a, b| s.index_unchecked(x, y, a, b);
    let zero_row = || vec![Rational::zero(); n];
    let mut matrix = Vec::new();
    let mut rhs = Vec::new();

    for x in 0..s.m_a() {
        for y in 0..s.m_b() {
            let mut row = zero_row();
            for a in 0..s.o_a() {
                for b in 0..s.o_b() {
                    row[idx(x, y, a, b)] = int(1);
                }
            }
            matrix.push(row);
            rhs.push(int(1));
        }
    }
    for x in 0..s.m_a() {
        for a in 0..s.o_a() {
            for y in 1..s.m_b() {
                let mut row = zero_row();
                for b in 0..s.o_b() {
                    row[idx(x, y, a, b)] = int(1);
                    row[idx(x, 0, a, b)] = int(-1);
                }
                matrix.push(row);
                rhs.push(int(0));
            }
        }
    }
    for y in 0..s.m_b() {
        for b in 0..s.o_b() {
            for x in 1..s.m_a() {
                let mut row = zero_row();
                for a in 0..s.o_a() {
                    row[idx(x, y, a, b)] = int(1);
                    row[idx(0, y, a, b)] = int(-1);
                }
                matrix.push(row);
                rhs.push(int(0));
            }
        }
    }
    StandardFormLp {
        objective: functional
            .coefficients()
            .iter()
            .map(|c| Rational::from_integer(c.clone()))
            .collect(),
        equality_matrix: matrix,
        equality_rhs: rhs,
        variable_count: n,
    }
}

/// Exact maximum of `functional` over the no-signaling polytope.
pub fn ns_bound(functional: &BellFunctional) -> Rational {
    let result = simplex_maximize(&build_ns_lp(functional));
    assert_eq!(
        result.status,
        LpStatus::Optimal,
        "the no-signaling polytope is nonempty and bounded"
    );
    result.value
}

/// `Σ_{x,y} max_{a,b} V(a,b|x,y)`, an upper bound on every normalized behavior.
pub fn trivial_upper_bound(functional: &BellFunctional) -> BigInt {
    let s = functional.scenario();
    let mut total = BigInt::zero();
    for x in 0..s.m_a() {
        for y in 0..s.m_b() {
            total += functional.block(x, y).iter().max().expect("nonempty block");
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{make_truncated_xor_game, white_noise_behavior};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(BigInt::from(n), BigInt::from(d))
    }

    fn lp(objective: &[i64], rows: &[&[i64]], rhs: &[i64]) -> StandardFormLp {
        StandardFormLp {
            objective: objective.iter().map(|&v| int(v)).collect(),
            equality_matrix: rows
                .iter()
                .map(|row| row.iter().map(|&v| int(v)).collect())
                .collect(),
            equality_rhs: rhs.iter().map(|&v| int(v)).collect(),
            variable_count: objective.len(),
        }
    }

    #[test]
    fn small_textbook_problems() {
        // max 3x + 2y s.t. x + y + s1 = 4, x + 3y + s2 = 6
        let p = lp(&[3, 2, 0, 0], &[&[1, 1, 1, 0], &[1, 3, 0, 1]], &[4, 6]);
        let res = simplex_maximize(&p);
        assert_eq!(res.status, LpStatus::Optimal);
        assert_eq!(res.value, int(12));
        verify_certificate(&p, &res).unwrap();

        // fractional optimum: max x + y s.t. 2x + y + s1 = 3, x + 2y + s2 = 3 -> x = y = 1
        let p = lp(&[1, 1, 0, 0], &[&[2, 1, 1, 0], &[1, 2, 0, 1]], &[3, 3]);
        assert_eq!(simplex_maximize(&p).value, int(2));
        // max x s.t. 3x + s = 2 -> 2/3
        let p = lp(&[1, 0], &[&[3, 1]], &[2]);
        let res = simplex_maximize(&p);
        assert_eq!(res.value, r(2, 3));
        verify_certificate(&p, &res).unwrap();
    }

    #[test]
    fn unbounded_and_infeasible() {
        // max x s.t. x - y = 1
        let p = lp(&[1, 0], &[&[1, -1]], &[1]);
        assert_eq!(simplex_maximize(&p).status, LpStatus::Unbounded);
        // x + y = -1 with x, y >= 0
        let p = lp(&[1, 1], &[&[1, 1]], &[-1]);
        assert_eq!(simplex_maximize(&p).status, LpStatus::Infeasible);
        // negative rhs that is feasible after the flip: -x = -2
        let p = lp(&[1], &[&[-1]], &[-2]);
        let res = simplex_maximize(&p);
        assert_eq!(res.value, int(2));
        verify_certificate(&p, &res).unwrap();
    }

    #[test]
    fn redundant_rows_are_tolerated() {
        let p = lp(
            &[1, 2, 0],
            &[&[1, 1, 1], &[2, 2, 2], &[1, 1, 1]],
            &[1, 2, 1],
        );
        let res = simplex_maximize(&p);
        assert_eq!(res.value, int(2));
        verify_certificate(&p, &res).unwrap();
    }

    #[test]
    fn ns_lp_shapes() {
        let p = build_ns_lp(&make_truncated_xor_game(5).unwrap());
        assert_eq!(p.variable_count, 250);
        assert_eq!(p.row_count(), 75);
        let p = build_ns_lp(&make_truncated_xor_game(2).unwrap());
        assert_eq!(p.variable_count, 16);
        assert_eq!(p.row_count(), 12);
        assert!(p.is_well_formed());
    }

    #[test]
    fn white_noise_is_feasible() {
        let g = make_truncated_xor_game(3).unwrap();
        let p = build_ns_lp(&g);
        let u = white_noise_behavior(g.scenario());
        let x: Vec<Rational> = u.probabilities().iter().map(|_| r(1, 9)).collect();
        for (row, b) in p.equality_matrix.iter().zip(&p.equality_rhs) {
            let lhs: Rational = row.iter().zip(&x).map(|(a, v)| a * v).sum();
            assert_eq!(&lhs, b);
        }
    }

    #[test]
    fn trivial_objectives() {
        let g = make_truncated_xor_game(3).unwrap();
        let zero = BellFunctional::zero(*g.scenario());
        assert!(ns_bound(&zero).is_zero());
        let block =
            BellFunctional::from_fn(*g.scenario(), |x, y, _, _| i64::from(x == 1 && y == 0));
        assert_eq!(ns_bound(&block), int(1));
    }

    #[test]
    fn xor_game_ns_bounds() {
        for d in [2, 3, 4, 5] {
            let g = make_truncated_xor_game(d).unwrap();
            let p = build_ns_lp(&g);
            let res = simplex_maximize(&p);
            assert_eq!(res.value, int(2 * d as i64), "d = {d}");
            assert!(res.value.is_integer());
            verify_certificate(&p, &res).unwrap();
        }
    }

    #[test]
    fn trivial_upper_bound_examples() {
        assert_eq!(
            trivial_upper_bound(&make_truncated_xor_game(5).unwrap()),
            BigInt::from(10)
        );
        let s = Scenario::new(2, 2, 2, 2).unwrap();
        assert!(trivial_upper_bound(&BellFunctional::zero(s)).is_zero());
    }

    /// The 24 vertices of the (2,2,2,2) no-signaling polytope: 16 local
    /// deterministic points and 8 PR boxes `a ⊕ b = xy ⊕ αx ⊕ βy ⊕ γ`.
    fn ns_vertices_2222() -> Vec<Vec<Rational>> {
        let s = Scenario::new(2, 2, 2, 2).unwrap();
        let mut out = Vec::new();
        for mask in 0..16 {
            let f = |x: usize| mask >> x & 1;
            let g = |y: usize| mask >> (2 + y) & 1;
            let mut p = vec![Rational::zero(); 16];
            for x in 0..2 {
                for y in 0..2 {
                    p[s.index_unchecked(x, y, f(x), g(y))] = int(1);
                }
            }
            out.push(p);
        }
        for mask in 0..8usize {
            let (al, be, ga) = (mask & 1, mask >> 1 & 1, mask >> 2 & 1);
            let mut p = vec![Rational::zero(); 16];
            for x in 0..2 {
                for y in 0..2 {
                    for a in 0..2 {
                        for b in 0..2 {
                            if a ^ b == (x & y) ^ (al & x) ^ (be & y) ^ ga {
                                p[s.index_unchecked(x, y, a, b)] = r(1, 2);
                            }
                        }
                    }
                }
            }
            out.push(p);
        }
        out
    }

    #[test]
    fn matches_vertex_enumeration_on_2222() {
        let s = Scenario::new(2, 2, 2, 2).unwrap();
        let vertices = ns_vertices_2222();
        assert_eq!(vertices.len(), 24);
        let mut rng = ChaCha8Rng::seed_from_u64(2222);
        for _ in 0..60 {
            let f = BellFunctional::from_fn(s, |_, _, _, _| rng.random_range(-5..=5));
            let obj: Vec<Rational> = f
                .coefficients()
                .iter()
                .map(|c| Rational::from_integer(c.clone()))
                .collect();
            let best = vertices
                .iter()
                .map(|v| v.iter().zip(&obj).map(|(p, c)| p * c).sum::<Rational>())
                .max()
                .unwrap();
            let p = build_ns_lp(&f);
            let res = simplex_maximize(&p);
            assert_eq!(res.value, best);
            verify_certificate(&p, &res).unwrap();
            assert!(crate::classical::local_bound(&f).value <= res.value.to_integer());
            assert!(res.value <= Rational::from_integer(trivial_upper_bound(&f)));
        }
    }
}
