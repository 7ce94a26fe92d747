//! Numeric evaluators for the two-stage adversarial training objective.
//!
//! Stage one trains frame- and instance-level discriminators against the
//! enhancer; stage two fine-tunes the multi-exit structure on detection loss
//! with the stage-one term kept as a regularizer. Everything here works on
//! plain probability and loss values, no networks involved.

use crate::{Error, Result};

/// Floor applied to probabilities before taking logs.
const PROB_FLOOR: f64 = 1e-12;

/// Discriminator probabilities gathered on real and generated inputs, at
/// frame and instance granularity.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscriminatorOutputs {
    pub df_real: Vec<f64>,
    pub df_gen: Vec<f64>,
    pub di_real: Vec<f64>,
    pub di_gen: Vec<f64>,
}

/// Per-exit detection losses, indexed kappa = 0..beta.
#[derive(Debug, Clone, PartialEq)]
pub struct ExitLosses {
    pub per_exit: Vec<f64>,
}

fn check_probs(probs: &[f64], what: &str) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::InvalidInput(format!("{what}: empty probability list")));
    }
    for &p in probs {
        if !(0.0..=1.0).contains(&p) || p.is_nan() {
            return Err(Error::InvalidInput(format!("{what}: probability {p} outside [0, 1]")));
        }
    }
    Ok(())
}

/// Mean log-probability, the sample estimate of `E[log D(x)]`.
///
/// Probabilities are floored at 1e-12 so the log stays finite.
pub fn discriminator_expectation(probs: &[f64]) -> Result<f64> {
    check_probs(probs, "discriminator expectation")?;
    Ok(probs.iter().map(|&p| p.max(PROB_FLOOR).ln()).sum::<f64>() / probs.len() as f64)
}

/// Stage-one adversarial loss: the sum of both discriminators' real-side
/// expectations and their generated-side complements.
pub fn stage1_loss(outs: &DiscriminatorOutputs) -> Result<f64> {
    check_probs(&outs.df_gen, "df_gen")?;
    check_probs(&outs.di_gen, "di_gen")?;
    let complement = |probs: &[f64]| probs.iter().map(|&p| 1.0 - p).collect::<Vec<_>>();
    Ok(discriminator_expectation(&outs.df_real)?
        + discriminator_expectation(&complement(&outs.df_gen))?
        + discriminator_expectation(&outs.di_real)?
        + discriminator_expectation(&complement(&outs.di_gen))?)
}

/// Mean detection loss over all exits.
pub fn multi_exit_detection_loss(exits: &ExitLosses) -> Result<f64> {
    if exits.per_exit.is_empty() {
        return Err(Error::InvalidInput("no per-exit losses supplied".into()));
    }
    if exits.per_exit.iter().any(|&l| l < 0.0 || !l.is_finite()) {
        return Err(Error::InvalidInput("per-exit losses must be finite and >= 0".into()));
    }
    Ok(exits.per_exit.iter().sum::<f64>() / exits.per_exit.len() as f64)
}

/// Stage-two loss: mean per-exit detection loss plus the stage-one term.
pub fn stage2_loss(exits: &ExitLosses, s1: f64) -> Result<f64> {
    Ok(multi_exit_detection_loss(exits)? + s1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expectation_basics() {
        assert_eq!(discriminator_expectation(&[1.0, 1.0]).unwrap(), 0.0);
        assert!((discriminator_expectation(&[0.5]).unwrap() - 0.5f64.ln()).abs() < 1e-12);
        assert!((discriminator_expectation(&[0.0]).unwrap() - 1e-12f64.ln()).abs() < 1e-9);
        assert!(discriminator_expectation(&[]).is_err());
        assert!(discriminator_expectation(&[1.5]).is_err());
    }

    #[test]
    fn perfect_discriminator_scores_zero() {
        let outs = DiscriminatorOutputs {
            df_real: vec![1.0],
            df_gen: vec![0.0],
            di_real: vec![1.0],
            di_gen: vec![0.0],
        };
        assert_eq!(stage1_loss(&outs).unwrap(), 0.0);
    }

    #[test]
    fn chance_discriminator() {
        let outs = DiscriminatorOutputs {
            df_real: vec![0.5],
            df_gen: vec![0.5],
            di_real: vec![0.5],
            di_gen: vec![0.5],
        };
        assert!((stage1_loss(&outs).unwrap() - 4.0 * 0.5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn mixed_scalar_case() {
        // ln 0.9 + ln 0.8 + ln 0.8 + ln 0.9
        let outs = DiscriminatorOutputs {
            df_real: vec![0.9],
            df_gen: vec![0.2],
            di_real: vec![0.8],
            di_gen: vec![0.1],
        };
        let expected = 0.9f64.ln() + 0.8f64.ln() + 0.8f64.ln() + 0.9f64.ln();
        assert!((expected - (-0.657008)).abs() < 1e-6);
        assert!((stage1_loss(&outs).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn stage1_rejects_empty_lists() {
        let outs = DiscriminatorOutputs {
            df_real: vec![0.5],
            df_gen: vec![],
            di_real: vec![0.5],
            di_gen: vec![0.5],
        };
        assert!(stage1_loss(&outs).is_err());
    }

    #[test]
    fn detection_loss_is_mean() {
        let mean = |v: Vec<f64>| multi_exit_detection_loss(&ExitLosses { per_exit: v }).unwrap();
        assert_eq!(mean(vec![2.0, 2.0, 2.0]), 2.0);
        assert_eq!(mean(vec![1.0, 2.0, 3.0]), 2.0);
        assert_eq!(mean(vec![0.0, 0.0, 0.0, 0.0]), 0.0);
        assert!(multi_exit_detection_loss(&ExitLosses { per_exit: vec![] }).is_err());
    }

    #[test]
    fn stage2_composes() {
        let exits = ExitLosses { per_exit: vec![1.0, 2.0, 3.0] };
        assert!((stage2_loss(&exits, -0.5).unwrap() - 1.5).abs() < 1e-12);
        let zeros = ExitLosses { per_exit: vec![0.0, 0.0] };
        assert_eq!(stage2_loss(&zeros, 0.0).unwrap(), 0.0);
        let twos = ExitLosses { per_exit: vec![2.0, 2.0] };
        let s1 = 4.0 * 0.5f64.ln();
        assert!((stage2_loss(&twos, s1).unwrap() - (2.0 + s1)).abs() < 1e-12);
    }

    #[test]
    fn stage1_permutation_invariant() {
        let a = DiscriminatorOutputs {
            df_real: vec![0.3, 0.9, 0.6],
            df_gen: vec![0.1, 0.4],
            di_real: vec![0.7, 0.2],
            di_gen: vec![0.5],
        };
        let b = DiscriminatorOutputs {
            df_real: vec![0.9, 0.6, 0.3],
            df_gen: vec![0.4, 0.1],
            di_real: vec![0.2, 0.7],
            di_gen: vec![0.5],
        };
        assert!((stage1_loss(&a).unwrap() - stage1_loss(&b).unwrap()).abs() < 1e-12);
    }
}
