//! Model parameters, their canonical ordering, and seeded initialization.
//!
//! Every consumer of the full parameter set (optimizers, checkpoints, the
//! gradient checker) walks parameters through [`PitWeights::visit`] /
//! [`PitWeights::visit_mut`], which enumerate them in one fixed manifest
//! order. Initialization draws weight matrices in that same order, so a
//! given (config, seed) pair always produces bit-identical weights.

use super::math::{Mat, Real};
use super::PitConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// y = x W^T + b, with `w` stored (out, in).
#[derive(Debug, Clone, PartialEq)]
pub struct LinearP<T> {
    pub w: Mat<T>,
    pub b: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormP<T> {
    pub gain: Vec<T>,
    pub bias: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttnP<T> {
    pub q: LinearP<T>,
    pub k: LinearP<T>,
    pub v: LinearP<T>,
    pub o: LinearP<T>,
}

/// One transformer block: pre-norm attention, then pre-norm feed-forward.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockP<T> {
    pub norm_attn: NormP<T>,
    pub attn: AttnP<T>,
    pub norm_ff: NormP<T>,
    pub ff1: LinearP<T>,
    pub ff2: LinearP<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PitWeights<T> {
    /// Position features (4 * n_fourier) -> d_model / 2.
    pub pos_proj: LinearP<T>,
    /// Measured value (scalar) -> d_model / 2.
    pub val_proj: LinearP<T>,
    pub enc: Vec<BlockP<T>>,
    pub enc_norm: NormP<T>,
    pub dec: Vec<BlockP<T>>,
    pub dec_norm: NormP<T>,
    /// Readout: d_model -> d_model, GELU, then d_model -> 1.
    pub head1: LinearP<T>,
    pub head2: LinearP<T>,
}

impl<T: Real> LinearP<T> {
    fn zeros(out_dim: usize, in_dim: usize) -> Self {
        LinearP {
            w: Mat::zeros(out_dim, in_dim),
            b: vec![T::zero(); out_dim],
        }
    }

    /// Scaled-uniform weight init, bound sqrt(6 / (fan_in + fan_out)); zero bias.
    /// Draws one f64 per weight in row-major order.
    fn init(out_dim: usize, in_dim: usize, rng: &mut ChaCha8Rng) -> Self {
        let bound = (6.0 / (in_dim + out_dim) as f64).sqrt();
        let mut w = Mat::zeros(out_dim, in_dim);
        for v in w.data.iter_mut() {
            let u: f64 = rng.gen();
            *v = T::from_f64((2.0 * u - 1.0) * bound);
        }
        LinearP {
            w,
            b: vec![T::zero(); out_dim],
        }
    }

    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[usize], &[T])) {
        f(
            &format!("{prefix}.w"),
            &[self.w.rows, self.w.cols],
            &self.w.data,
        );
        f(&format!("{prefix}.b"), &[self.b.len()], &self.b);
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &[usize], &mut [T])) {
        f(
            &format!("{prefix}.w"),
            &[self.w.rows, self.w.cols],
            &mut self.w.data,
        );
        f(&format!("{prefix}.b"), &[self.b.len()], &mut self.b);
    }

    fn map<U: Real>(&self, f: &impl Fn(T) -> U) -> LinearP<U> {
        LinearP {
            w: Mat::from_vec(self.w.rows, self.w.cols, self.w.data.iter().map(|&v| f(v)).collect()),
            b: self.b.iter().map(|&v| f(v)).collect(),
        }
    }
}

impl<T: Real> NormP<T> {
    fn zeros(d: usize) -> Self {
        NormP {
            gain: vec![T::zero(); d],
            bias: vec![T::zero(); d],
        }
    }

    /// Identity transform: unit gain, zero bias. No random draws.
    fn init(d: usize) -> Self {
        NormP {
            gain: vec![T::one(); d],
            bias: vec![T::zero(); d],
        }
    }

    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[usize], &[T])) {
        f(&format!("{prefix}.gain"), &[self.gain.len()], &self.gain);
        f(&format!("{prefix}.bias"), &[self.bias.len()], &self.bias);
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &[usize], &mut [T])) {
        f(&format!("{prefix}.gain"), &[self.gain.len()], &mut self.gain);
        f(&format!("{prefix}.bias"), &[self.bias.len()], &mut self.bias);
    }

    fn map<U: Real>(&self, f: &impl Fn(T) -> U) -> NormP<U> {
        NormP {
            gain: self.gain.iter().map(|&v| f(v)).collect(),
            bias: self.bias.iter().map(|&v| f(v)).collect(),
        }
    }
}

impl<T: Real> AttnP<T> {
    fn zeros(d: usize) -> Self {
        AttnP {
            q: LinearP::zeros(d, d),
            k: LinearP::zeros(d, d),
            v: LinearP::zeros(d, d),
            o: LinearP::zeros(d, d),
        }
    }

    fn init(d: usize, rng: &mut ChaCha8Rng) -> Self {
        AttnP {
            q: LinearP::init(d, d, rng),
            k: LinearP::init(d, d, rng),
            v: LinearP::init(d, d, rng),
            o: LinearP::init(d, d, rng),
        }
    }

    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[usize], &[T])) {
        self.q.visit(&format!("{prefix}.q"), f);
        self.k.visit(&format!("{prefix}.k"), f);
        self.v.visit(&format!("{prefix}.v"), f);
        self.o.visit(&format!("{prefix}.o"), f);
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &[usize], &mut [T])) {
        self.q.visit_mut(&format!("{prefix}.q"), f);
        self.k.visit_mut(&format!("{prefix}.k"), f);
        self.v.visit_mut(&format!("{prefix}.v"), f);
        self.o.visit_mut(&format!("{prefix}.o"), f);
    }

    fn map<U: Real>(&self, f: &impl Fn(T) -> U) -> AttnP<U> {
        AttnP {
            q: self.q.map(f),
            k: self.k.map(f),
            v: self.v.map(f),
            o: self.o.map(f),
        }
    }
}

impl<T: Real> BlockP<T> {
    fn zeros(d: usize, d_ff: usize) -> Self {
        BlockP {
            norm_attn: NormP::zeros(d),
            attn: AttnP::zeros(d),
            norm_ff: NormP::zeros(d),
            ff1: LinearP::zeros(d_ff, d),
            ff2: LinearP::zeros(d, d_ff),
        }
    }

    fn init(d: usize, d_ff: usize, rng: &mut ChaCha8Rng) -> Self {
        BlockP {
            norm_attn: NormP::init(d),
            attn: AttnP::init(d, rng),
            norm_ff: NormP::init(d),
            ff1: LinearP::init(d_ff, d, rng),
            ff2: LinearP::init(d, d_ff, rng),
        }
    }

    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[usize], &[T])) {
        self.norm_attn.visit(&format!("{prefix}.norm_attn"), f);
        self.attn.visit(&format!("{prefix}.attn"), f);
        self.norm_ff.visit(&format!("{prefix}.norm_ff"), f);
        self.ff1.visit(&format!("{prefix}.ff1"), f);
        self.ff2.visit(&format!("{prefix}.ff2"), f);
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &[usize], &mut [T])) {
        self.norm_attn.visit_mut(&format!("{prefix}.norm_attn"), f);
        self.attn.visit_mut(&format!("{prefix}.attn"), f);
        self.norm_ff.visit_mut(&format!("{prefix}.norm_ff"), f);
        self.ff1.visit_mut(&format!("{prefix}.ff1"), f);
        self.ff2.visit_mut(&format!("{prefix}.ff2"), f);
    }

    fn map<U: Real>(&self, f: &impl Fn(T) -> U) -> BlockP<U> {
        BlockP {
            norm_attn: self.norm_attn.map(f),
            attn: self.attn.map(f),
            norm_ff: self.norm_ff.map(f),
            ff1: self.ff1.map(f),
            ff2: self.ff2.map(f),
        }
    }
}

impl<T: Real> PitWeights<T> {
    /// All-zero parameters with the shapes `cfg` implies. Gradient buffers.
    pub fn zeros(cfg: &PitConfig) -> Self {
        let d = cfg.d_model;
        let half = d / 2;
        let feat = 4 * cfg.n_fourier;
        PitWeights {
            pos_proj: LinearP::zeros(half, feat),
            val_proj: LinearP::zeros(half, 1),
            enc: (0..cfg.n_enc_layers).map(|_| BlockP::zeros(d, cfg.d_ff)).collect(),
            enc_norm: NormP::zeros(d),
            dec: (0..cfg.n_dec_layers).map(|_| BlockP::zeros(d, cfg.d_ff)).collect(),
            dec_norm: NormP::zeros(d),
            head1: LinearP::zeros(d, d),
            head2: LinearP::zeros(1, d),
        }
    }

    /// Walk parameters in manifest order: name, shape, values.
    pub fn visit(&self, f: &mut dyn FnMut(&str, &[usize], &[T])) {
        self.pos_proj.visit("pos_proj", f);
        self.val_proj.visit("val_proj", f);
        for (i, b) in self.enc.iter().enumerate() {
            b.visit(&format!("enc.{i}"), f);
        }
        self.enc_norm.visit("enc_norm", f);
        for (i, b) in self.dec.iter().enumerate() {
            b.visit(&format!("dec.{i}"), f);
        }
        self.dec_norm.visit("dec_norm", f);
        self.head1.visit("head1", f);
        self.head2.visit("head2", f);
    }

    pub fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &[usize], &mut [T])) {
        self.pos_proj.visit_mut("pos_proj", f);
        self.val_proj.visit_mut("val_proj", f);
        for (i, b) in self.enc.iter_mut().enumerate() {
            b.visit_mut(&format!("enc.{i}"), f);
        }
        self.enc_norm.visit_mut("enc_norm", f);
        for (i, b) in self.dec.iter_mut().enumerate() {
            b.visit_mut(&format!("dec.{i}"), f);
        }
        self.dec_norm.visit_mut("dec_norm", f);
        self.head1.visit_mut("head1", f);
        self.head2.visit_mut("head2", f);
    }

    pub fn n_params(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_, _, data| n += data.len());
        n
    }

    /// (name, shape) pairs in manifest order, as stored in checkpoints.
    pub fn manifest(&self) -> Vec<(String, Vec<usize>)> {
        let mut out = Vec::new();
        self.visit(&mut |name, shape, _| out.push((name.to_string(), shape.to_vec())));
        out
    }

    /// All parameters concatenated in manifest order.
    pub fn flatten(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.n_params());
        self.visit(&mut |_, _, data| out.extend_from_slice(data));
        out
    }

    /// Overwrite every parameter from a flat manifest-order slice.
    pub fn assign_flat(&mut self, flat: &[T]) {
        let mut off = 0;
        self.visit_mut(&mut |_, _, data| {
            data.copy_from_slice(&flat[off..off + data.len()]);
            off += data.len();
        });
        debug_assert_eq!(off, flat.len());
    }

    /// Add `delta` to the parameter at flat manifest-order index `idx`.
    pub fn nudge(&mut self, idx: usize, delta: T) {
        let mut off = 0;
        self.visit_mut(&mut |_, _, data| {
            if idx >= off && idx < off + data.len() {
                data[idx - off] += delta;
            }
            off += data.len();
        });
    }

    /// Name of the parameter group holding flat index `idx`.
    pub fn param_name(&self, idx: usize) -> String {
        let mut off = 0;
        let mut found = String::new();
        self.visit(&mut |name, _, data| {
            if idx >= off && idx < off + data.len() {
                found = format!("{name}[{}]", idx - off);
            }
            off += data.len();
        });
        found
    }

    pub fn convert<U: Real>(&self) -> PitWeights<U> {
        let f = |v: T| U::from_f64(v.to_f64());
        PitWeights {
            pos_proj: self.pos_proj.map(&f),
            val_proj: self.val_proj.map(&f),
            enc: self.enc.iter().map(|b| b.map(&f)).collect(),
            enc_norm: self.enc_norm.map(&f),
            dec: self.dec.iter().map(|b| b.map(&f)).collect(),
            dec_norm: self.dec_norm.map(&f),
            head1: self.head1.map(&f),
            head2: self.head2.map(&f),
        }
    }
}

impl PitWeights<f32> {
    /// Seeded init. Weight matrices draw from the scaled uniform in manifest
    /// order; biases start at zero, norm gains at one. Initialization is
    /// always performed in f32, so an f64 model starts from the exact same
    /// values widened.
    pub fn init(cfg: &PitConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = cfg.d_model;
        let half = d / 2;
        let feat = 4 * cfg.n_fourier;
        PitWeights {
            pos_proj: LinearP::init(half, feat, &mut rng),
            val_proj: LinearP::init(half, 1, &mut rng),
            enc: (0..cfg.n_enc_layers)
                .map(|_| BlockP::init(d, cfg.d_ff, &mut rng))
                .collect(),
            enc_norm: NormP::init(d),
            dec: (0..cfg.n_dec_layers)
                .map(|_| BlockP::init(d, cfg.d_ff, &mut rng))
                .collect(),
            dec_norm: NormP::init(d),
            head1: LinearP::init(d, d, &mut rng),
            head2: LinearP::init(1, d, &mut rng),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_is_deterministic_and_seed_sensitive() {
        let cfg = PitConfig::tiny();
        let a = PitWeights::init(&cfg, 7);
        let b = PitWeights::init(&cfg, 7);
        let c = PitWeights::init(&cfg, 8);
        assert_eq!(a.flatten(), b.flatten());
        assert_ne!(a.flatten(), c.flatten());
    }

    #[test]
    fn init_bounds_and_fixed_values() {
        let cfg = PitConfig::tiny();
        let w = PitWeights::init(&cfg, 0);
        // pos_proj: in 4*2=8, out 4 -> bound sqrt(6/12).
        let bound = (6.0f32 / 12.0).sqrt();
        assert!(w.pos_proj.w.data.iter().all(|v| v.abs() <= bound));
        assert!(w.pos_proj.b.iter().all(|&v| v == 0.0));
        assert!(w.enc[0].norm_attn.gain.iter().all(|&v| v == 1.0));
        assert!(w.enc[0].norm_attn.bias.iter().all(|&v| v == 0.0));
        assert!(w.enc_norm.gain.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn param_count_matches_shape_arithmetic() {
        let cfg = PitConfig::default();
        let w = PitWeights::<f32>::zeros(&cfg);
        let d = 64;
        let block = 2 * 2 * d + 4 * (d * d + d) + (256 * d + 256) + (d * 256 + d);
        let expect = (32 * 64 + 32) + (32 + 32) + 6 * block + 2 * 2 * d + (d * d + d) + (d + 1);
        assert_eq!(w.n_params(), expect);
    }

    #[test]
    fn manifest_order_is_stable() {
        let cfg = PitConfig::tiny();
        let w = PitWeights::<f32>::zeros(&cfg);
        let m = w.manifest();
        assert_eq!(m[0].0, "pos_proj.w");
        assert_eq!(m[0].1, vec![4, 8]);
        assert_eq!(m[1].0, "pos_proj.b");
        assert_eq!(m[2].0, "val_proj.w");
        assert_eq!(m[2].1, vec![4, 1]);
        assert_eq!(m[4].0, "enc.0.norm_attn.gain");
        let names: Vec<&str> = m.iter().map(|(n, _)| n.as_str()).collect();
        assert!(names.contains(&"enc.2.ff2.b"));
        assert!(names.contains(&"dec.1.attn.o.w"));
        assert_eq!(m.last().unwrap().0, "head2.b");
        assert_eq!(m.last().unwrap().1, vec![1]);
    }

    #[test]
    fn flatten_assign_nudge_round_trip() {
        let cfg = PitConfig::tiny();
        let w = PitWeights::init(&cfg, 3);
        let flat = w.flatten();
        let mut z = PitWeights::<f32>::zeros(&cfg);
        z.assign_flat(&flat);
        assert_eq!(z.flatten(), flat);
        let mut n = z.clone();
        n.nudge(5, 1.5);
        let f2 = n.flatten();
        assert_eq!(f2[5], flat[5] + 1.5);
        assert_eq!(f2[4], flat[4]);
        assert_eq!(f2[6], flat[6]);
    }

    #[test]
    fn convert_f32_to_f64_preserves_values() {
        let cfg = PitConfig::tiny();
        let w = PitWeights::init(&cfg, 11);
        let w64: PitWeights<f64> = w.convert();
        let a = w.flatten();
        let b = w64.flatten();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(*x as f64, *y);
        }
        assert_eq!(w.param_name(0), "pos_proj.w[0]");
    }
}
