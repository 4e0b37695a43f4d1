//! Integer-order Bessel functions `J_n(x)` for the Jacobi-Anger expansion
//! `exp(i x sin a) = sum_n J_n(x) exp(i n a)`.

const RESCALE_ABOVE: f64 = 1e250;
const RESCALE_BY: f64 = 1e-250;
/// Terms below this magnitude are dropped from the tail of the sequence.
pub const TAIL_CUTOFF: f64 = 1e-18;

/// `J_0(x), ..., J_M(x)` for `x >= 0`, where `M` is the last order whose
/// magnitude exceeds [`TAIL_CUTOFF`]. Uses Miller's backward recurrence
/// normalized by `J_0 + 2 sum_k J_{2k} = 1`.
pub fn bessel_j_sequence(x: f64) -> Vec<f64> {
    assert!(
        x >= 0.0 && x.is_finite(),
        "bessel argument must be finite and nonnegative"
    );
    if x == 0.0 {
        return vec![1.0];
    }
    // past n ~ x + c x^{1/3} the sequence decays super-exponentially
    let needed = (x + 15.0 * (x / 2.0).cbrt() + 20.0).ceil() as usize;
    let mut start = needed + (40.0 * needed as f64).sqrt() as usize + 10;
    start += start % 2;

    let mut vals = vec![0.0f64; start + 2];
    vals[start] = 1.0;
    for m in (1..=start).rev() {
        let next = (2.0 * m as f64 / x) * vals[m] - vals[m + 1];
        vals[m - 1] = next;
        if next.abs() > RESCALE_ABOVE {
            for v in &mut vals[m - 1..=start] {
                *v *= RESCALE_BY;
            }
        }
    }
    let norm = vals[0] + 2.0 * vals.iter().skip(2).step_by(2).sum::<f64>();
    for v in &mut vals {
        *v /= norm;
    }
    let last = vals
        .iter()
        .rposition(|v| v.abs() > TAIL_CUTOFF)
        .unwrap_or(0);
    vals.truncate(last + 1);
    vals
}
