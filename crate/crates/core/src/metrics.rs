//! Support recall (TPR), support precision (PPV) and relative coefficient error (E2).

use crate::error::{Error, Result};
use crate::library::Coefficients;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Score {
    pub tpr: f64,
    pub ppv: f64,
    pub e2: f64,
    /// Recovered support was empty; `ppv` is reported as 0.
    pub empty_recovery: bool,
}

impl Score {
    pub fn exact_support(&self) -> bool {
        self.tpr == 1.0 && self.ppv == 1.0
    }
}

pub fn score(truth: &Coefficients, recovered: &Coefficients) -> Result<Score> {
    if truth.len() != recovered.len() {
        return Err(Error::DimensionMismatch { expected: truth.len(), actual: recovered.len() });
    }
    let true_count = truth.values().iter().filter(|v| **v != 0.0).count();
    if true_count == 0 {
        return Err(Error::ZeroTruth);
    }
    let found = recovered.values().iter().filter(|v| **v != 0.0).count();
    let hits = truth.values().iter().zip(recovered.values()).filter(|(a, b)| **a != 0.0 && **b != 0.0).count();
    let (diff, norm) = truth.values().iter().zip(recovered.values()).fold((0.0, 0.0), |(d, n), (a, b)| {
        (d + (a - b) * (a - b), n + a * a)
    });
    Ok(Score {
        tpr: hits as f64 / true_count as f64,
        ppv: if found == 0 { 0.0 } else { hits as f64 / found as f64 },
        e2: libm::sqrt(diff) / libm::sqrt(norm),
        empty_recovery: found == 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn perfect_recovery() {
        let a = Coefficients(vec![1.0, 0.0, 2.0]);
        let s = score(&a, &a).unwrap();
        assert_eq!((s.tpr, s.ppv, s.e2), (1.0, 1.0, 0.0));
        assert!(s.exact_support());
    }

    #[test]
    fn scaled_recovery() {
        let s = score(&Coefficients(vec![1.0, 0.0, 2.0]), &Coefficients(vec![0.9, 0.0, 1.8])).unwrap();
        assert_eq!((s.tpr, s.ppv), (1.0, 1.0));
        assert!((s.e2 - 0.1).abs() <= 1e-15);
    }

    #[test]
    fn half_right() {
        let s = score(&Coefficients(vec![1.0, 0.0, 2.0]), &Coefficients(vec![1.0, 3.0, 0.0])).unwrap();
        assert_eq!((s.tpr, s.ppv), (0.5, 0.5));
        assert!(!s.exact_support());
    }

    #[test]
    fn empty_and_invalid() {
        let s = score(&Coefficients(vec![1.0, 0.0]), &Coefficients(vec![0.0, 0.0])).unwrap();
        assert!(s.empty_recovery);
        assert_eq!((s.tpr, s.ppv, s.e2), (0.0, 0.0, 1.0));
        assert_eq!(score(&Coefficients(vec![0.0]), &Coefficients(vec![1.0])), Err(Error::ZeroTruth));
        assert!(score(&Coefficients(vec![1.0]), &Coefficients(vec![1.0, 0.0])).is_err());
    }
}
