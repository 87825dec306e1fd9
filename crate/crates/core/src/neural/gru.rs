use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{join, Parameters, Tensor};
use crate::{Error, Result};

/// Gated recurrent unit with gate order (reset, update, new):
///
/// ```text
/// r  = σ(W_ir x + b_ir + W_hr h + b_hr)
/// z  = σ(W_iz x + b_iz + W_hz h + b_hz)
/// n  = tanh(W_in x + b_in + r ⊙ (W_hn h + b_hn))
/// h' = (1 - z) ⊙ n + z ⊙ h
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gru {
    pub w_ih: Tensor,
    pub w_hh: Tensor,
    pub b_ih: Tensor,
    pub b_hh: Tensor,
}

/// Intermediate values from [`Gru::step`] needed for the backward pass.
#[derive(Clone, Debug)]
pub struct GruCache {
    pub x: Vec<f64>,
    pub h_prev: Vec<f64>,
    pub r: Vec<f64>,
    pub z: Vec<f64>,
    pub n: Vec<f64>,
    /// `W_hn h + b_hn`
    pub hn: Vec<f64>,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl Gru {
    pub fn new(input: usize, hidden: usize, rng: &mut impl Rng) -> Self {
        Gru {
            w_ih: Tensor::uniform(&[3 * hidden, input], 1.0 / (input as f64).sqrt(), rng),
            w_hh: Tensor::uniform(&[3 * hidden, hidden], 1.0 / (hidden as f64).sqrt(), rng),
            b_ih: Tensor::zeros(&[3 * hidden]),
            b_hh: Tensor::zeros(&[3 * hidden]),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w_ih.cols()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w_hh.cols()
    }

    pub fn step(&self, x: &[f64], h_prev: &[f64]) -> Result<(Vec<f64>, GruCache)> {
        let hd = self.hidden_dim();
        if x.len() != self.input_dim() || h_prev.len() != hd {
            return Err(Error::Shape(format!(
                "gru expects input {} and hidden {}, got {} and {}",
                self.input_dim(),
                hd,
                x.len(),
                h_prev.len()
            )));
        }
        let mut gi = self.b_ih.data().to_vec();
        self.w_ih.matvec_add(x, &mut gi);
        let mut gh = self.b_hh.data().to_vec();
        self.w_hh.matvec_add(h_prev, &mut gh);

        let mut r = vec![0.0; hd];
        let mut z = vec![0.0; hd];
        let mut n = vec![0.0; hd];
        let mut h = vec![0.0; hd];
        for j in 0..hd {
            r[j] = sigmoid(gi[j] + gh[j]);
            z[j] = sigmoid(gi[hd + j] + gh[hd + j]);
            n[j] = (gi[2 * hd + j] + r[j] * gh[2 * hd + j]).tanh();
            h[j] = (1.0 - z[j]) * n[j] + z[j] * h_prev[j];
        }
        let cache = GruCache {
            x: x.to_vec(),
            h_prev: h_prev.to_vec(),
            r,
            z,
            n,
            hn: gh[2 * hd..].to_vec(),
        };
        Ok((h, cache))
    }

    /// Given dL/dh', accumulates parameter gradients and returns
    /// (dL/dx, dL/dh_prev).
    pub fn backward(&self, cache: &GruCache, dh: &[f64], grad: &mut Gru) -> (Vec<f64>, Vec<f64>) {
        let hd = self.hidden_dim();
        let mut d_gi = vec![0.0; 3 * hd];
        let mut d_gh = vec![0.0; 3 * hd];
        let mut dh_prev = vec![0.0; hd];
        for j in 0..hd {
            let (r, z, n) = (cache.r[j], cache.z[j], cache.n[j]);
            let dn = dh[j] * (1.0 - z);
            let dz = dh[j] * (cache.h_prev[j] - n);
            dh_prev[j] = dh[j] * z;
            let da_n = dn * (1.0 - n * n);
            let dr = da_n * cache.hn[j];
            let da_z = dz * z * (1.0 - z);
            let da_r = dr * r * (1.0 - r);
            d_gi[j] = da_r;
            d_gi[hd + j] = da_z;
            d_gi[2 * hd + j] = da_n;
            d_gh[j] = da_r;
            d_gh[hd + j] = da_z;
            d_gh[2 * hd + j] = da_n * r;
        }
        grad.w_ih.outer_add(&d_gi, &cache.x);
        grad.w_hh.outer_add(&d_gh, &cache.h_prev);
        for (g, d) in grad.b_ih.data_mut().iter_mut().zip(&d_gi) {
            *g += d;
        }
        for (g, d) in grad.b_hh.data_mut().iter_mut().zip(&d_gh) {
            *g += d;
        }
        let mut dx = vec![0.0; self.input_dim()];
        self.w_ih.matvec_t_add(&d_gi, &mut dx);
        self.w_hh.matvec_t_add(&d_gh, &mut dh_prev);
        (dx, dh_prev)
    }
}

impl Parameters for Gru {
    fn visit<'a>(&'a self, prefix: &str, f: &mut dyn FnMut(String, &'a Tensor)) {
        f(join(prefix, "w_ih"), &self.w_ih);
        f(join(prefix, "w_hh"), &self.w_hh);
        f(join(prefix, "b_ih"), &self.b_ih);
        f(join(prefix, "b_hh"), &self.b_hh);
    }

    fn visit_mut<'a>(&'a mut self, prefix: &str, f: &mut dyn FnMut(String, &'a mut Tensor)) {
        f(join(prefix, "w_ih"), &mut self.w_ih);
        f(join(prefix, "w_hh"), &mut self.w_hh);
        f(join(prefix, "b_ih"), &mut self.b_ih);
        f(join(prefix, "b_hh"), &mut self.b_hh);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::gradcheck::check_gradients;
    use crate::rng::stream_rng;
    use proptest::prelude::*;

    #[test]
    fn zero_weights_give_half_previous_state() {
        // r = z = 0.5, n = 0  =>  h' = 0.5 h
        let mut rng = stream_rng(0, 0);
        let mut g = Gru::new(3, 2, &mut rng);
        g.zero();
        let (h, _) = g.step(&[1.0, 2.0, 3.0], &[0.8, -0.4]).unwrap();
        assert_eq!(h, vec![0.4, -0.2]);
    }

    #[test]
    fn shape_errors() {
        let mut rng = stream_rng(0, 0);
        let g = Gru::new(3, 2, &mut rng);
        assert!(g.step(&[1.0], &[0.0, 0.0]).is_err());
        assert!(g.step(&[1.0, 2.0, 3.0], &[0.0]).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences_including_h_prev() {
        let mut rng = stream_rng(11, 0);
        let mut g = Gru::new(4, 3, &mut rng);
        g.b_ih = Tensor::uniform(&[9], 0.5, &mut rng);
        g.b_hh = Tensor::uniform(&[9], 0.5, &mut rng);
        let x = [0.5, -1.0, 0.25, 2.0];
        let h0 = [0.3, -0.6, 0.9];
        let w = [1.0, -2.0, 0.5];
        let loss = |m: &Gru| {
            let (h, _) = m.step(&x, &h0).unwrap();
            h.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>()
        };
        let (_, cache) = g.step(&x, &h0).unwrap();
        let mut grad = g.zeros_like();
        let (_, dh_prev) = g.backward(&cache, &w, &mut grad);
        let report = check_gradients(&g, &grad, loss, 1e-5);
        assert!(report.max_rel_error < 1e-4, "{report:?}");

        for j in 0..3 {
            let mut hp = h0;
            hp[j] += 1e-5;
            let (up, _) = g.step(&x, &hp).unwrap();
            hp[j] -= 2e-5;
            let (dn, _) = g.step(&x, &hp).unwrap();
            let num: f64 = up.iter().zip(&dn).zip(&w).map(|((a, b), c)| (a - b) * c).sum::<f64>() / 2e-5;
            assert!((num - dh_prev[j]).abs() < 1e-7, "h_prev[{j}]: {num} vs {}", dh_prev[j]);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn hidden_state_stays_bounded(
            seed in 0u64..1000,
            x in prop::collection::vec(-1e3f64..1e3, 5),
            h in prop::collection::vec(-1.0f64..=1.0, 4),
        ) {
            let mut rng = stream_rng(seed, 0);
            let g = Gru::new(5, 4, &mut rng);
            let (out, _) = g.step(&x, &h).unwrap();
            for v in out {
                prop_assert!(v.abs() <= 1.0);
            }
        }
    }
}
