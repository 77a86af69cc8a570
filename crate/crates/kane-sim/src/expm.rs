//! Dense complex matrix exponential via Padé(13) approximation with scaling
//! and squaring, plus a BLAS-backed multiply for the larger superoperators.

use nalgebra::DMatrix;

use crate::spin::C64;

/// Column-major complex matrix product using `matrixmultiply::zgemm`.
pub fn matmul(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    let (m, k) = a.shape();
    let (k2, n) = b.shape();
    assert_eq!(k, k2, "matmul shape mismatch");
    let mut c = DMatrix::<C64>::zeros(m, n);
    unsafe {
        matrixmultiply::zgemm(
            matrixmultiply::CGemmOption::Standard,
            matrixmultiply::CGemmOption::Standard,
            m,
            k,
            n,
            [1.0, 0.0],
            a.as_slice().as_ptr() as *const [f64; 2],
            1,
            m as isize,
            b.as_slice().as_ptr() as *const [f64; 2],
            1,
            k as isize,
            [0.0, 0.0],
            c.as_mut_slice().as_mut_ptr() as *mut [f64; 2],
            1,
            m as isize,
        );
    }
    c
}

fn one_norm(a: &DMatrix<C64>) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

// Padé(13) coefficients.
const B: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Largest one-norm for which the Padé(13) approximant is accurate without
/// scaling.
const THETA_13: f64 = 5.371920351148152;

/// exp(A) for a general square complex matrix.
pub fn expm(a: &DMatrix<C64>) -> DMatrix<C64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm needs a square matrix");
    let norm = one_norm(a);
    let s = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil() as i32
    } else {
        0
    };
    let a_scaled = a.map(|z| z / 2f64.powi(s));

    let id = DMatrix::<C64>::identity(n, n);
    let a2 = matmul(&a_scaled, &a_scaled);
    let a4 = matmul(&a2, &a2);
    let a6 = matmul(&a2, &a4);

    let re = |x: f64| C64::new(x, 0.0);
    // U = A (A6 (b13 A6 + b11 A4 + b9 A2) + b7 A6 + b5 A4 + b3 A2 + b1 I)
    let u_inner = &a6 * re(B[13]) + &a4 * re(B[11]) + &a2 * re(B[9]);
    let u_poly = matmul(&a6, &u_inner) + &a6 * re(B[7]) + &a4 * re(B[5]) + &a2 * re(B[3])
        + &id * re(B[1]);
    let u = matmul(&a_scaled, &u_poly);
    // V = A6 (b12 A6 + b10 A4 + b8 A2) + b6 A6 + b4 A4 + b2 A2 + b0 I
    let v_inner = &a6 * re(B[12]) + &a4 * re(B[10]) + &a2 * re(B[8]);
    let v = matmul(&a6, &v_inner) + &a6 * re(B[6]) + &a4 * re(B[4]) + &a2 * re(B[2])
        + &id * re(B[0]);

    let p = &v + &u;
    let q = &v - &u;
    let mut r = q
        .lu()
        .solve(&p)
        .expect("Pade denominator is singular; matrix norm too large");
    for _ in 0..s {
        r = matmul(&r, &r);
    }
    r
}
