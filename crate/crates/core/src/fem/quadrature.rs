//! Gauss–Legendre rules on `[-1, 1]`.

/// Points and weights of the `n`-point Gauss–Legendre rule, `n ∈ 1..=4`.
///
/// An `n`-point rule integrates polynomials of degree `2n - 1` exactly.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    match n {
        1 => (vec![0.0], vec![2.0]),
        2 => {
            let a = 1.0 / 3f64.sqrt();
            (vec![-a, a], vec![1.0, 1.0])
        }
        3 => {
            let a = (3.0f64 / 5.0).sqrt();
            (vec![-a, 0.0, a], vec![5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0])
        }
        4 => {
            let s = (6.0f64 / 5.0).sqrt();
            let inner = ((3.0 - 2.0 * s) / 7.0).sqrt();
            let outer = ((3.0 + 2.0 * s) / 7.0).sqrt();
            let w_in = (18.0 + 30f64.sqrt()) / 36.0;
            let w_out = (18.0 - 30f64.sqrt()) / 36.0;
            (vec![-outer, -inner, inner, outer], vec![w_out, w_in, w_in, w_out])
        }
        _ => panic!("Gauss–Legendre rule with {n} points is not tabulated"),
    }
}

/// Tensor-product rule on `[-1, 1]²` as `(ξ, η, weight)` triples.
pub fn gauss_tensor(n: usize) -> Vec<(f64, f64, f64)> {
    let (p, w) = gauss_legendre(n);
    let mut out = Vec::with_capacity(n * n);
    for (eta, we) in p.iter().zip(&w) {
        for (xi, wx) in p.iter().zip(&w) {
            out.push((*xi, *eta, wx * we));
        }
    }
    out
}
