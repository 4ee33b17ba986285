use super::normal::std_normal_pdf;
use crate::error::{Error, Result};

/// Largest Hermite degree evaluated anywhere in the crate.
pub const MAX_HERMITE_DEGREE: usize = 60;

/// He₀(z), …, Heₙ(z) at a single point, probabilists' convention.
#[derive(Debug, Clone, PartialEq)]
pub struct HermiteSequence {
    pub z: f64,
    pub values: Vec<f64>,
}

impl HermiteSequence {
    pub fn degree(&self) -> usize {
        self.values.len() - 1
    }
}

/// Evaluates He₀..Heₙ at `z` by He_{k+1} = z·He_k − k·He_{k−1}.
pub fn hermite_sequence(z: f64, n: usize) -> Result<HermiteSequence> {
    if n > MAX_HERMITE_DEGREE {
        return Err(Error::config(format!(
            "Hermite degree {n} exceeds the cap of {MAX_HERMITE_DEGREE}"
        )));
    }
    let mut values = vec![0.0; n + 1];
    hermite_values(z, &mut values);
    Ok(HermiteSequence { z, values })
}

/// Fills `out[k] = He_k(z)` for k < out.len().
#[inline]
pub(crate) fn hermite_values(z: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = z;
    }
    for k in 1..out.len().saturating_sub(1) {
        out[k + 1] = z * out[k] - k as f64 * out[k - 1];
    }
}

/// Fills `out[k] = He_k(z)·φ(z)`; zero at ±∞ (and wherever φ underflows).
pub(crate) fn hermite_phi_row(z: f64, out: &mut [f64]) {
    let pdf = std_normal_pdf(z);
    if pdf == 0.0 {
        out.iter_mut().for_each(|v| *v = 0.0);
        return;
    }
    hermite_values(z, out);
    out.iter_mut().for_each(|v| *v *= pdf);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_sequences() {
        assert_eq!(
            hermite_sequence(2.0, 3).unwrap().values,
            vec![1.0, 2.0, 3.0, 2.0]
        );
        assert_eq!(
            hermite_sequence(0.0, 4).unwrap().values,
            vec![1.0, 0.0, -1.0, 0.0, 3.0]
        );
        assert_eq!(
            hermite_sequence(1.0, 2).unwrap().values,
            vec![1.0, 1.0, 0.0]
        );
        assert_eq!(hermite_sequence(0.3, 0).unwrap().values, vec![1.0]);
    }

    #[test]
    fn degree_cap() {
        assert!(hermite_sequence(0.1, MAX_HERMITE_DEGREE).is_ok());
        assert!(matches!(
            hermite_sequence(0.1, MAX_HERMITE_DEGREE + 1),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn explicit_polynomials() {
        for i in -20..=20 {
            let z = i as f64 * 0.25;
            let s = hermite_sequence(z, 6).unwrap().values;
            let z2 = z * z;
            assert!((s[4] - (z2 * z2 - 6.0 * z2 + 3.0)).abs() < 1e-10);
            assert!((s[5] - (z2 * z2 * z - 10.0 * z2 * z + 15.0 * z)).abs() < 1e-9);
        }
    }

    #[test]
    fn phi_row_vanishes_at_infinity() {
        let mut row = [1.0; 8];
        hermite_phi_row(f64::INFINITY, &mut row);
        assert!(row.iter().all(|&v| v == 0.0));
        hermite_phi_row(f64::NEG_INFINITY, &mut row);
        assert!(row.iter().all(|&v| v == 0.0));
        let mut huge = [1.0; MAX_HERMITE_DEGREE + 1];
        hermite_phi_row(1e10, &mut huge);
        assert!(huge.iter().all(|v| v.is_finite()));
    }
}
