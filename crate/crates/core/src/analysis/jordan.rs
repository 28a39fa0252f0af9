//! The D = 3 shot recurrence matrix and its Jordan data.
//!
//! Writing `u_i = (a_{i-2}, a_{i-1}, a_i)` for consecutive shot counts, the
//! firing balance `σ_i = a_{i-2} - 3a_i + 2a_{i+1}` becomes
//! `u_{i+1} = A u_i + (0, 0, σ_i / 2)`. Everything below is derived from
//! `A` by exact elimination; nothing is hard-coded except `A` itself and
//! the normalization of the basis vectors.

use num_traits::{One, Zero};

use super::rational::{frac, int, Matrix3, Poly, Rational, RationalVec3};

/// The recurrence matrix `A = [[0, 1, 0], [0, 0, 1], [-1/2, 0, 3/2]]`.
pub fn recurrence_matrix() -> Matrix3 {
    Matrix3::from_rows([
        [int(0), int(1), int(0)],
        [int(0), int(0), int(1)],
        [frac(-1, 2), int(0), frac(3, 2)],
    ])
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JordanData {
    pub a: Matrix3,
    /// Monic `det(xI - A)`.
    pub characteristic: Poly,
    /// Rational eigenvalues with algebraic multiplicity, ascending.
    pub eigenvalues: Vec<(Rational, usize)>,
    /// `dim ker(A - λI)` for each eigenvalue, same order.
    pub geometric: Vec<usize>,
    /// `e'_1, e'_2, e'_3`: eigenvector for 1, generalized eigenvector with
    /// `(A - I) e'_2 = e'_1`, eigenvector for -1/2.
    pub basis: [RationalVec3; 3],
    /// Columns are the basis vectors.
    pub change_of_basis: Matrix3,
    pub inverse: Matrix3,
    /// `P^{-1} A P`.
    pub jordan_form: Matrix3,
}

impl JordanData {
    pub fn compute() -> Self {
        Self::for_matrix(recurrence_matrix())
    }

    fn for_matrix(a: Matrix3) -> Self {
        let characteristic = a.characteristic_polynomial();
        let eigenvalues = characteristic.rational_roots();
        let geometric = eigenvalues
            .iter()
            .map(|(l, _)| 3 - a.sub_scalar_identity(l).rank())
            .collect();

        let one = Rational::one();
        let half = frac(-1, 2);
        let shifted = a.sub_scalar_identity(&one);
        let e1 = normalize_first(kernel_vector(&shifted).expect("A - I is singular"));
        let e2 = solve_with_zero_first(&shifted, &e1).expect("generalized eigenvector exists");
        let e3 = normalize_last(
            kernel_vector(&a.sub_scalar_identity(&half)).expect("A + I/2 is singular"),
        );

        let change_of_basis = Matrix3::from_columns([&e1, &e2, &e3]);
        let inverse = change_of_basis
            .inverse()
            .expect("Jordan basis is independent");
        let jordan_form = &(&inverse * &a) * &change_of_basis;
        JordanData {
            a,
            characteristic,
            eigenvalues,
            geometric,
            basis: [e1, e2, e3],
            change_of_basis,
            inverse,
            jordan_form,
        }
    }

    /// Coordinate of `x` along `e'_3` in the basis `(e'_1, e'_2, e'_3)`,
    /// i.e. the projection onto `span(e'_3)` along `span(e'_1, e'_2)`.
    pub fn project_e3(&self, x: &RationalVec3) -> Rational {
        (0..3).map(|j| &self.inverse.0[2][j] * &x.0[j]).sum()
    }

    /// Eigenvalue of `A` on `e'_3`.
    pub fn contraction(&self) -> Rational {
        self.jordan_form.0[2][2].clone()
    }

    /// The per-double-step drift `b = A (0,0,1)` produced by a `(2, 0)` pair.
    pub fn pair_drift(&self) -> RationalVec3 {
        &self.a * &RationalVec3::unit(2)
    }

    /// Coordinate `c` of the fixed point `v = c e'_3` of
    /// `v = λ² v + p(b)`, with `λ` the contraction eigenvalue.
    pub fn projection_shift(&self) -> Rational {
        let lambda = self.contraction();
        let pb = self.project_e3(&self.pair_drift());
        pb / (Rational::one() - &lambda * &lambda)
    }

    pub fn shift_vector(&self) -> RationalVec3 {
        self.basis[2].scale(&self.projection_shift())
    }
}

/// Nonzero vector spanning the kernel of a rank-2 matrix: the cross product
/// of two independent rows.
fn kernel_vector(m: &Matrix3) -> Option<RationalVec3> {
    let rows: Vec<RationalVec3> = (0..3).map(|i| RationalVec3(m.0[i].clone())).collect();
    for i in 0..3 {
        for j in i + 1..3 {
            let c = cross(&rows[i], &rows[j]);
            if c.0.iter().any(|x| !x.is_zero()) {
                return Some(c);
            }
        }
    }
    None
}

fn cross(a: &RationalVec3, b: &RationalVec3) -> RationalVec3 {
    let (a, b) = (&a.0, &b.0);
    RationalVec3::new(
        &a[1] * &b[2] - &a[2] * &b[1],
        &a[2] * &b[0] - &a[0] * &b[2],
        &a[0] * &b[1] - &a[1] * &b[0],
    )
}

fn normalize_first(v: RationalVec3) -> RationalVec3 {
    let c = v.0[0].clone();
    v.scale(&(Rational::one() / c))
}

fn normalize_last(v: RationalVec3) -> RationalVec3 {
    let c = v.0[2].clone();
    v.scale(&(Rational::one() / c))
}

/// Solves `m x = rhs` with `x_1 = 0`.
fn solve_with_zero_first(m: &Matrix3, rhs: &RationalVec3) -> Option<RationalVec3> {
    for i in 0..3 {
        for j in i + 1..3 {
            let (a, b, c, d) = (&m.0[i][1], &m.0[i][2], &m.0[j][1], &m.0[j][2]);
            let det = a * d - b * c;
            if det.is_zero() {
                continue;
            }
            let y = (&rhs.0[i] * d - b * &rhs.0[j]) / &det;
            let z = (a * &rhs.0[j] - c * &rhs.0[i]) / &det;
            let x = RationalVec3::new(Rational::zero(), y, z);
            if &(m * &x) == rhs {
                return Some(x);
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn characteristic_polynomial_factors() {
        let jd = JordanData::compute();
        // ½(2x + 1)(x - 1)² = x³ - 3/2 x² + 1/2
        let expected = Poly::from_coeffs(&[frac(1, 2)]);
        let expected = &(&expected * &Poly::from_coeffs(&[int(1), int(2)]))
            * &(&Poly::from_coeffs(&[int(-1), int(1)]) * &Poly::from_coeffs(&[int(-1), int(1)]));
        assert_eq!(jd.characteristic, expected);
        assert_eq!(
            jd.characteristic,
            Poly::from_coeffs(&[frac(1, 2), int(0), frac(-3, 2), int(1)])
        );
    }

    #[test]
    fn eigen_structure() {
        let jd = JordanData::compute();
        assert_eq!(jd.eigenvalues, vec![(frac(-1, 2), 1), (int(1), 2)]);
        assert_eq!(jd.geometric, vec![1, 1]);
        assert_eq!(
            jd.jordan_form,
            Matrix3::from_rows([
                [int(1), int(1), int(0)],
                [int(0), int(1), int(0)],
                [int(0), int(0), frac(-1, 2)],
            ])
        );
    }

    #[test]
    fn basis_matches_reference_vectors() {
        let jd = JordanData::compute();
        assert_eq!(jd.basis[0], RationalVec3::from_ints(1, 1, 1));
        assert_eq!(jd.basis[1], RationalVec3::from_ints(0, 1, 2));
        assert_eq!(jd.basis[2], RationalVec3::from_ints(4, -2, 1));
    }

    #[test]
    fn projection_of_basis_vectors() {
        let jd = JordanData::compute();
        assert_eq!(jd.project_e3(&jd.basis[2]), int(1));
        assert_eq!(jd.project_e3(&jd.basis[0]), int(0));
        assert_eq!(jd.project_e3(&jd.basis[1]), int(0));
    }

    #[test]
    fn drift_and_shift() {
        let jd = JordanData::compute();
        assert_eq!(
            jd.pair_drift(),
            RationalVec3::new(int(0), int(1), frac(3, 2))
        );
        assert_eq!(jd.project_e3(&jd.pair_drift()), frac(-1, 18));
        assert_eq!(jd.projection_shift(), frac(-2, 27));
    }

    #[test]
    fn double_step_contracts_by_a_quarter() {
        let jd = JordanData::compute();
        let a2 = &jd.a * &jd.a;
        for u in [
            RationalVec3::from_ints(7, -3, 11),
            RationalVec3::from_ints(0, 0, 1),
            RationalVec3::new(frac(1, 3), int(5), frac(-9, 7)),
        ] {
            assert_eq!(jd.project_e3(&(&a2 * &u)), jd.project_e3(&u) * frac(1, 4));
        }
    }
}
