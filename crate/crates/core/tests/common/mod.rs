//! Brute-force 4×4 matrix oracle, written independently of the library's
//! statevector code: operators are built as explicit Kronecker products and
//! Bell probabilities come from projectors onto hand-written Bell vectors.

#![allow(dead_code)]

use num_complex::Complex64 as C;

pub type Vec4 = [C; 4];
pub type Mat2 = [[C; 2]; 2];
pub type Mat4 = [[C; 4]; 4];

const R: f64 = std::f64::consts::FRAC_1_SQRT_2;

pub fn c(x: f64) -> C {
    C::new(x, 0.0)
}

pub fn identity2() -> Mat2 {
    [[c(1.0), c(0.0)], [c(0.0), c(1.0)]]
}

pub fn pauli_z() -> Mat2 {
    [[c(1.0), c(0.0)], [c(0.0), c(-1.0)]]
}

pub fn hadamard() -> Mat2 {
    [[c(R), c(R)], [c(R), c(-R)]]
}

/// Projector onto `|bit>` in Z (basis 0) or `|±>` in X (basis 1).
pub fn projector(x_basis: bool, bit: u8) -> Mat2 {
    let v: [C; 2] = match (x_basis, bit) {
        (false, 0) => [c(1.0), c(0.0)],
        (false, _) => [c(0.0), c(1.0)],
        (true, 0) => [c(R), c(R)],
        (true, _) => [c(R), c(-R)],
    };
    let mut p = [[c(0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            p[i][j] = v[i] * v[j].conj();
        }
    }
    p
}

pub fn pow2(m: Mat2, e: u8) -> Mat2 {
    if e == 0 {
        identity2()
    } else {
        m
    }
}

/// `a ⊗ b` with `a` acting on the home (first) qubit.
pub fn kron(a: Mat2, b: Mat2) -> Mat4 {
    let mut m = [[c(0.0); 4]; 4];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    m[2 * i + k][2 * j + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    m
}

pub fn on_travel(op: Mat2) -> Mat4 {
    kron(identity2(), op)
}

pub fn on_home(op: Mat2) -> Mat4 {
    kron(op, identity2())
}

pub fn apply(m: &Mat4, v: &Vec4) -> Vec4 {
    let mut out = [c(0.0); 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i] += m[i][j] * v[j];
        }
    }
    out
}

pub fn norm_sqr(v: &Vec4) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum()
}

/// Bell vectors in label order Φ+, Φ−, Ψ+, Ψ−.
pub fn bell_vectors() -> [Vec4; 4] {
    [
        [c(R), c(0.0), c(0.0), c(R)],
        [c(R), c(0.0), c(0.0), c(-R)],
        [c(0.0), c(R), c(R), c(0.0)],
        [c(0.0), c(R), c(-R), c(0.0)],
    ]
}

/// `|<B|v>|²` for each Bell vector (unnormalized `v` gives joint weights).
pub fn bell_weights(v: &Vec4) -> [f64; 4] {
    bell_vectors().map(|b| {
        b.iter().zip(v).map(|(x, y)| x.conj() * y).sum::<C>().norm_sqr()
    })
}

/// Probability that Z-basis control measurements on both qubits agree.
pub fn identical_bit_probability(v: &Vec4) -> f64 {
    // |00> and |11> components.
    v[0].norm_sqr() + v[3].norm_sqr()
}

pub fn psi_plus() -> Vec4 {
    bell_vectors()[2]
}

/// Eve's intercept on one leg: (basis is X, enumerated bit) branches.
pub type Intercept = Option<bool>;

/// Exact control-round detection probability with an optional
/// forward-leg intercept in Z (`Some(false)`) or X (`Some(true)`).
pub fn control_detection_probability(forward: Intercept) -> f64 {
    let start = psi_plus();
    match forward {
        None => identical_bit_probability(&start),
        Some(x) => (0..2u8)
            .map(|e| identical_bit_probability(&apply(&on_travel(projector(x, e)), &start)))
            .sum(),
    }
}

/// Joint weights over Bell outcomes for hidden bits `(j, k)`, summed over
/// Eve's results on the attacked legs.
pub fn message_outcome_distribution(
    forward: Intercept,
    ret: Intercept,
    j: u8,
    k: u8,
    bob_on_home: bool,
) -> [f64; 4] {
    let mut total = [0.0; 4];
    let fwd_bits: Vec<Option<u8>> = if forward.is_some() { vec![Some(0), Some(1)] } else { vec![None] };
    let ret_bits: Vec<Option<u8>> = if ret.is_some() { vec![Some(0), Some(1)] } else { vec![None] };
    for fe in &fwd_bits {
        for re in &ret_bits {
            let mut v = psi_plus();
            if let (Some(x), Some(e)) = (forward, fe) {
                v = apply(&on_travel(projector(x, *e)), &v);
            }
            v = apply(&on_travel(pow2(pauli_z(), j)), &v);
            if let (Some(x), Some(e)) = (ret, re) {
                v = apply(&on_travel(projector(x, *e)), &v);
            }
            let bob = pow2(pauli_z(), k);
            v = apply(&if bob_on_home { on_home(bob) } else { on_travel(bob) }, &v);
            for (t, w) in total.iter_mut().zip(bell_weights(&v)) {
                *t += w;
            }
        }
    }
    total
}

/// Best achievable accuracy of Eve's guesses of `j` and of `k`, from the
/// joint distribution of her intercept bits and the public Bell outcome.
pub fn eve_optimal_accuracy(forward: Intercept, ret: Intercept) -> (f64, f64) {
    let bits = |x: Intercept| if x.is_some() { vec![Some(0u8), Some(1)] } else { vec![None] };
    let mut acc = (0.0, 0.0);
    for fe in bits(forward) {
        for re in bits(ret) {
            // joint[outcome][j][k] for this pair of Eve results.
            let mut joint = [[[0.0; 2]; 2]; 4];
            for j in 0..2u8 {
                for k in 0..2u8 {
                    let mut v = psi_plus();
                    if let (Some(x), Some(e)) = (forward, fe) {
                        v = apply(&on_travel(projector(x, e)), &v);
                    }
                    v = apply(&on_travel(pow2(pauli_z(), j)), &v);
                    if let (Some(x), Some(e)) = (ret, re) {
                        v = apply(&on_travel(projector(x, e)), &v);
                    }
                    v = apply(&on_travel(pow2(pauli_z(), k)), &v);
                    for (o, w) in bell_weights(&v).into_iter().enumerate() {
                        joint[o][j as usize][k as usize] = w;
                    }
                }
            }
            for cell in &joint {
                let p = |j: usize, k: usize| 0.25 * cell[j][k];
                let pj = |j| p(j, 0) + p(j, 1);
                let pk = |k| p(0, k) + p(1, k);
                acc.0 += pj(0).max(pj(1));
                acc.1 += pk(0).max(pk(1));
            }
        }
    }
    acc
}

/// Probability that a checked message round mismatches (Φ outcome or Ψ
/// parity different from `j XOR k`), averaged over uniform `(j, k)`.
pub fn mismatch_probability(forward: Intercept, ret: Intercept) -> f64 {
    let mut p = 0.0;
    for j in 0..2u8 {
        for k in 0..2u8 {
            let d = message_outcome_distribution(forward, ret, j, k, false);
            let consistent = if j ^ k == 0 { d[2] } else { d[3] };
            p += 0.25 * (1.0 - consistent);
        }
    }
    p
}
