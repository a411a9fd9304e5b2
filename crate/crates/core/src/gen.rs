//! Seeded instance generators.
//!
//! Randomness comes from `ChaCha8Rng::seed_from_u64(seed)`. Each consumer
//! uses its own ChaCha stream so that, for a given seed, the instance, the
//! pursuit start and the randomization draws are independent and individually
//! reproducible:
//!
//! * stream 0: instance data
//! * stream 1: random pursuit starts ([`random_start`])
//! * randomization draw `i` uses stream `i` of a generator seeded with
//!   `derive_seed(seed, RANDOMIZATION_TAG)`
//!
//! Complex Gaussians are drawn real part first, then imaginary part, each with
//! `rand_distr::StandardNormal` scaled to half the requested total variance.
//! Matrices are drawn row-major.
//!
//! Random QCQP stream order: `x_init` (n entries), then for each constraint
//! the `n x n` matrix `G` followed by the noise of `c_m`.
//! Multicast stream order: `h_1..h_M`, then `g_1..g_K`.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::hermitian::{ComplexVector, HermitianMatrix};
use crate::problem::{Metadata, QcqpInstance, QuadConstraint};

pub const INSTANCE_STREAM: u64 = 0;
pub const START_STREAM: u64 = 1;
pub const RANDOMIZATION_TAG: u64 = 0x5244_5241_4e44; // "RDRAND"

/// Variance of each complex entry of random starts and of `x_init`.
pub const START_VARIANCE: f64 = 2.0;

pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// SplitMix64 mix of `seed` and `tag`.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Circularly symmetric complex Gaussian with total variance `variance`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let sd = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(sd * re, sd * im)
}

pub fn complex_gaussian_vector<R: Rng + ?Sized>(rng: &mut R, n: usize, variance: f64) -> ComplexVector {
    ComplexVector::from_fn(n, |_, _| complex_gaussian(rng, variance))
}

/// Row-major `n x n` matrix of i.i.d. complex Gaussians.
pub fn complex_gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, n: usize, variance: f64) -> DMatrix<Complex64> {
    let entries: Vec<Complex64> = (0..n * n).map(|_| complex_gaussian(rng, variance)).collect();
    DMatrix::from_row_slice(n, n, &entries)
}

/// Random start with i.i.d. circular complex Gaussian entries of variance 2.
pub fn random_start(n: usize, seed: u64) -> ComplexVector {
    complex_gaussian_vector(&mut rng_for(seed, START_STREAM), n, START_VARIANCE)
}

#[derive(Clone, Debug, PartialEq)]
pub struct RandomQcqpConfig {
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    pub entry_variance: f64,
    pub c_noise_variance: f64,
}

impl RandomQcqpConfig {
    pub fn new(n: usize, m: usize, seed: u64) -> Self {
        Self {
            n,
            m,
            seed,
            entry_variance: 2.0,
            c_noise_variance: 1.0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 {
            return Err(Error::InvalidParameter("random QCQP needs n >= 1 and M >= 1".into()));
        }
        if !(self.entry_variance > 0.0 && self.c_noise_variance >= 0.0) {
            return Err(Error::InvalidParameter("variances must be positive".into()));
        }
        Ok(())
    }
}

/// Indefinite random QCQP with `A0 = I`. Each `Am = (G + G^H) / 2` for a
/// complex Gaussian `G`; `cm ~ N(x_init^H Am x_init, noise)` and the pair is
/// negated whenever `x_init` would violate it, so `x_init` is feasible.
pub fn gen_random_qcqp(cfg: &RandomQcqpConfig) -> Result<QcqpInstance> {
    cfg.validate()?;
    let mut rng = rng_for(cfg.seed, INSTANCE_STREAM);
    let x_init = complex_gaussian_vector(&mut rng, cfg.n, START_VARIANCE);
    let noise_sd = cfg.c_noise_variance.sqrt();
    let mut constraints = Vec::with_capacity(cfg.m);
    for _ in 0..cfg.m {
        let g = complex_gaussian_matrix(&mut rng, cfg.n, cfg.entry_variance);
        let a = HermitianMatrix::new(g)?;
        let value = a.quad_form(&x_init)?;
        let noise: f64 = rng.sample(StandardNormal);
        let c = value + noise_sd * noise;
        constraints.push(if value > c {
            QuadConstraint { a: a.scaled(-1.0), c: -c }
        } else {
            QuadConstraint { a, c }
        });
    }
    Ok(QcqpInstance::new(HermitianMatrix::identity(cfg.n), constraints)?.with_metadata(Metadata {
        generator: Some(GeneratorSpec::Random { n: cfg.n, m: cfg.m }.to_string()),
        seed: Some(cfg.seed),
        x_init: Some(x_init),
    }))
}

#[derive(Clone, Debug, PartialEq)]
pub struct MulticastConfig {
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub tau: f64,
    pub eta: f64,
    pub seed: u64,
}

/// Secondary multicast beamforming: minimize `||w||^2` subject to
/// `|w^H h_i|^2 >= tau` (written `-w^H h_i h_i^H w <= -tau`) and
/// `|w^H g_k|^2 <= eta`. Channels are i.i.d. unit-variance complex Gaussian.
pub fn gen_multicast(cfg: &MulticastConfig) -> Result<QcqpInstance> {
    if cfg.n == 0 || cfg.m + cfg.k == 0 {
        return Err(Error::InvalidParameter("multicast needs n >= 1 and M + K >= 1".into()));
    }
    if !(cfg.tau > 0.0 && cfg.eta > 0.0) {
        return Err(Error::InvalidParameter("tau and eta must be positive".into()));
    }
    let mut rng = rng_for(cfg.seed, INSTANCE_STREAM);
    let mut constraints = Vec::with_capacity(cfg.m + cfg.k);
    for _ in 0..cfg.m {
        let h = complex_gaussian_vector(&mut rng, cfg.n, 1.0);
        constraints.push(QuadConstraint {
            a: HermitianMatrix::outer(&h).scaled(-1.0),
            c: -cfg.tau,
        });
    }
    for _ in 0..cfg.k {
        let g = complex_gaussian_vector(&mut rng, cfg.n, 1.0);
        constraints.push(QuadConstraint {
            a: HermitianMatrix::outer(&g),
            c: cfg.eta,
        });
    }
    Ok(QcqpInstance::new(HermitianMatrix::identity(cfg.n), constraints)?.with_metadata(Metadata {
        generator: Some(
            GeneratorSpec::Multicast {
                n: cfg.n,
                m: cfg.m,
                k: cfg.k,
                tau: cfg.tau,
                eta: cfg.eta,
            }
            .to_string(),
        ),
        seed: Some(cfg.seed),
        x_init: None,
    }))
}

/// Instance family parsed from strings such as `random:n=8,M=16,seed=42` or
/// `multicast:n=8,M=12,K=4,tau=10,eta=1,seed=7`. The seed is kept separately
/// so a spec can describe a whole ensemble.
#[derive(Clone, Debug, PartialEq)]
pub enum GeneratorSpec {
    Random { n: usize, m: usize },
    Multicast { n: usize, m: usize, k: usize, tau: f64, eta: f64 },
}

/// A generator spec together with an optional seed.
#[derive(Clone, Debug, PartialEq)]
pub struct SeededSpec {
    pub spec: GeneratorSpec,
    pub seed: Option<u64>,
}

impl GeneratorSpec {
    pub fn generate(&self, seed: u64) -> Result<QcqpInstance> {
        match *self {
            GeneratorSpec::Random { n, m } => gen_random_qcqp(&RandomQcqpConfig::new(n, m, seed)),
            GeneratorSpec::Multicast { n, m, k, tau, eta } => gen_multicast(&MulticastConfig {
                n,
                m,
                k,
                tau,
                eta,
                seed,
            }),
        }
    }

    pub fn is_multicast(&self) -> bool {
        matches!(self, GeneratorSpec::Multicast { .. })
    }
}

impl fmt::Display for GeneratorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeneratorSpec::Random { n, m } => write!(f, "random:n={n},M={m}"),
            GeneratorSpec::Multicast { n, m, k, tau, eta } => {
                write!(f, "multicast:n={n},M={m},K={k},tau={tau},eta={eta}")
            }
        }
    }
}

impl fmt::Display for SeededSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.seed {
            Some(seed) => write!(f, "{},seed={seed}", self.spec),
            None => write!(f, "{}", self.spec),
        }
    }
}

impl FromStr for SeededSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |reason: String| Error::InvalidSpec {
            spec: s.to_string(),
            reason,
        };
        let (family, rest) = s
            .trim()
            .split_once(':')
            .ok_or_else(|| bad("expected `family:key=value,...`".into()))?;
        let mut n = None;
        let mut m = None;
        let mut k = None;
        let mut tau = None;
        let mut eta = None;
        let mut seed = None;
        for pair in rest.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = pair
                .split_once('=')
                .ok_or_else(|| bad(format!("`{pair}` is not key=value")))?;
            let value = value.trim();
            let int = || value.parse::<u64>().map_err(|_| bad(format!("`{key}` needs an integer")));
            let real = || value.parse::<f64>().map_err(|_| bad(format!("`{key}` needs a number")));
            match key.trim() {
                "n" => n = Some(int()? as usize),
                "M" | "m" => m = Some(int()? as usize),
                "K" | "k" => k = Some(int()? as usize),
                "tau" => tau = Some(real()?),
                "eta" => eta = Some(real()?),
                "seed" => seed = Some(int()?),
                other => return Err(bad(format!("unknown key `{other}`"))),
            }
        }
        let need = |v: Option<usize>, name: &str| v.ok_or_else(|| bad(format!("missing `{name}`")));
        let spec = match family.trim() {
            "random" => {
                if k.is_some() || tau.is_some() || eta.is_some() {
                    return Err(bad("random instances take only n, M, seed".into()));
                }
                GeneratorSpec::Random {
                    n: need(n, "n")?,
                    m: need(m, "M")?,
                }
            }
            "multicast" => GeneratorSpec::Multicast {
                n: need(n, "n")?,
                m: need(m, "M")?,
                k: need(k, "K")?,
                tau: tau.ok_or_else(|| bad("missing `tau`".into()))?,
                eta: eta.ok_or_else(|| bad("missing `eta`".into()))?,
            },
            other => return Err(bad(format!("unknown family `{other}`"))),
        };
        match spec {
            GeneratorSpec::Random { n, m } if n == 0 || m == 0 => {
                return Err(bad("n and M must be positive".into()))
            }
            GeneratorSpec::Multicast { n, tau, eta, .. } if n == 0 || !(tau > 0.0) || !(eta > 0.0) => {
                return Err(bad("n, tau and eta must be positive".into()))
            }
            _ => {}
        }
        Ok(SeededSpec { spec, seed })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn x_init_is_feasible_over_many_seeds() {
        for seed in 0..1000 {
            let inst = gen_random_qcqp(&RandomQcqpConfig::new(4, 6, seed)).unwrap();
            let x = inst.metadata.x_init.as_ref().unwrap();
            assert!(inst.check_feasibility(x, 1e-9).unwrap().feasible, "seed {seed}");
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = RandomQcqpConfig::new(8, 16, 42);
        assert_eq!(gen_random_qcqp(&cfg).unwrap(), gen_random_qcqp(&cfg).unwrap());
        let other = gen_random_qcqp(&RandomQcqpConfig::new(8, 16, 43)).unwrap();
        assert_ne!(gen_random_qcqp(&cfg).unwrap(), other);
    }

    #[test]
    fn random_instance_shape() {
        let inst = gen_random_qcqp(&RandomQcqpConfig::new(8, 16, 1)).unwrap();
        assert_eq!(inst.dim(), 8);
        assert_eq!(inst.num_constraints(), 16);
        assert_eq!(inst.objective_matrix(), &HermitianMatrix::identity(8));
        assert!(!inst.is_convex().unwrap());
        for qc in inst.constraints() {
            let m = qc.a.matrix();
            assert_eq!(m, &m.adjoint());
        }
    }

    #[test]
    fn gaussian_entry_variance() {
        let mut rng = rng_for(7, INSTANCE_STREAM);
        let g = complex_gaussian_matrix(&mut rng, 100, 2.0);
        let mean = g.iter().copied().sum::<Complex64>() / 1e4;
        let var = g.iter().map(|z| (z - mean).norm_sqr()).sum::<f64>() / (1e4 - 1.0);
        assert!((var - 2.0).abs() < 0.2, "{var}");
    }

    #[test]
    fn multicast_structure() {
        let cfg = MulticastConfig {
            n: 8,
            m: 12,
            k: 4,
            tau: 10.0,
            eta: 1.0,
            seed: 3,
        };
        let inst = gen_multicast(&cfg).unwrap();
        assert_eq!(inst.num_constraints(), 16);
        for (idx, qc) in inst.constraints().iter().enumerate() {
            let eig = qc.a.eigen().unwrap();
            let scale = qc.a.frobenius_norm();
            let tiny = |v: &f64| v.abs() < 1e-12 * scale;
            if idx < 12 {
                assert_eq!(qc.c, -10.0);
                assert!(eig.values[0] < 0.0 && eig.values.iter().skip(1).all(tiny));
            } else {
                assert_eq!(qc.c, 1.0);
                assert!(eig.values[7] > 0.0 && eig.values.iter().take(7).all(tiny));
            }
        }
        let f = inst.check_feasibility(&ComplexVector::zeros(8), 1e-6).unwrap();
        assert!(f.violations[..12].iter().all(|&v| v == 10.0));
        assert!(f.violations[12..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn spec_strings() {
        let s: SeededSpec = "random:n=8,M=16,seed=42".parse().unwrap();
        assert_eq!(s.spec, GeneratorSpec::Random { n: 8, m: 16 });
        assert_eq!(s.seed, Some(42));
        assert_eq!(s.to_string(), "random:n=8,M=16,seed=42");
        let s: SeededSpec = "multicast:n=8,M=12,K=4,tau=10,eta=1,seed=7".parse().unwrap();
        assert_eq!(
            s.spec,
            GeneratorSpec::Multicast {
                n: 8,
                m: 12,
                k: 4,
                tau: 10.0,
                eta: 1.0
            }
        );
        let round: SeededSpec = s.to_string().parse().unwrap();
        assert_eq!(round, s);
        for bad in [
            "random",
            "random:n=8",
            "random:n=8,M=x",
            "random:n=0,M=3",
            "cubic:n=2,M=2",
            "random:n=8,M=16,foo=1",
            "multicast:n=8,M=12,K=4,tau=-1,eta=1",
        ] {
            assert!(bad.parse::<SeededSpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn derived_seeds_differ() {
        assert_ne!(derive_seed(1, RANDOMIZATION_TAG), derive_seed(2, RANDOMIZATION_TAG));
        assert_ne!(derive_seed(1, RANDOMIZATION_TAG), derive_seed(1, 0));
        assert_eq!(derive_seed(5, 9), derive_seed(5, 9));
    }
}
