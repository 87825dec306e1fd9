use serde::{Deserialize, Serialize};

use crate::multitask::{LatentState, LATENT_DIM};
use crate::{Error, Result};

/// Raw observation followed by the scaled shared and specific latents and
/// any extra features (raw indicator histories for the Base+raw variant).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnhancedObservation {
    pub raw: Vec<f64>,
    pub shr: Vec<f64>,
    pub spe: Vec<f64>,
    pub extra: Vec<f64>,
}

impl EnhancedObservation {
    pub fn len(&self) -> usize {
        self.raw.len() + self.shr.len() + self.spe.len() + self.extra.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.len());
        v.extend_from_slice(&self.raw);
        v.extend_from_slice(&self.shr);
        v.extend_from_slice(&self.spe);
        v.extend_from_slice(&self.extra);
        v
    }
}

/// `[raw, coef_shr * o_shr, coef_spe * o_spe]`. A zero coefficient yields
/// exact positive zeros regardless of the latent values.
pub fn assemble_observation(raw: &[f64], latent: &LatentState, coef_shr: f64, coef_spe: f64) -> Result<EnhancedObservation> {
    if latent.o_shr.len() != LATENT_DIM || latent.o_spe.len() != LATENT_DIM {
        return Err(Error::Shape(format!(
            "latents must have dimension {LATENT_DIM}, got {} and {}",
            latent.o_shr.len(),
            latent.o_spe.len()
        )));
    }
    let scale = |v: &[f64], c: f64| -> Vec<f64> {
        if c == 0.0 {
            vec![0.0; v.len()]
        } else {
            v.iter().map(|x| c * x).collect()
        }
    };
    let obs = EnhancedObservation {
        raw: raw.to_vec(),
        shr: scale(&latent.o_shr, coef_shr),
        spe: scale(&latent.o_spe, coef_spe),
        extra: Vec::new(),
    };
    if !obs.to_vec().iter().all(|x| x.is_finite()) {
        return Err(Error::NonFinite("enhanced observation".into()));
    }
    Ok(obs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn latent() -> LatentState {
        LatentState {
            o_shr: vec![0.1, 0.2, 0.3, 0.4, 0.5],
            o_spe: vec![-1.0, 0.0, 1.0, 2.0, -0.5],
        }
    }

    #[test]
    fn default_coefficients_scale_by_ten() {
        let o = assemble_observation(&[1.0; 16], &latent(), 10.0, 10.0).unwrap();
        assert_eq!(o.len(), 26);
        assert_eq!(o.shr, vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(o.spe, vec![-10.0, 0.0, 10.0, 20.0, -5.0]);
    }

    #[test]
    fn zero_latents_pad_with_zeros() {
        let raw: Vec<f64> = (0..16).map(f64::from).collect();
        let o = assemble_observation(&raw, &LatentState::zeros(), 10.0, 10.0).unwrap();
        let mut expected = raw.clone();
        expected.extend([0.0; 10]);
        assert_eq!(o.to_vec(), expected);
    }

    #[test]
    fn zero_coefficient_gives_positive_zero() {
        let o = assemble_observation(&[1.0], &latent(), 0.0, 0.0).unwrap();
        assert!(o.spe.iter().all(|x| x.to_bits() == 0));
    }

    #[test]
    fn wrong_latent_dim() {
        let l = LatentState {
            o_shr: vec![0.0; 4],
            o_spe: vec![0.0; 5],
        };
        assert!(matches!(assemble_observation(&[1.0], &l, 1.0, 1.0), Err(Error::Shape(_))));
    }
}
