//! Seeded Monte-Carlo experiments.
//!
//! An [`ExperimentConfig`] names a topology, the clean-signal law under each
//! hypothesis, an SNR, a detector and a trial count. [`Workspace`] holds the
//! complex and lazily computed decompositions so that sweeps over the same
//! topology pay for the eigen-solves once.
//!
//! Randomness is drawn from ChaCha8 streams keyed by `(seed, role, trial)`,
//! so results do not depend on how trials are scheduled across threads.

use std::io::Write;
use std::path::PathBuf;
use std::sync::OnceLock;

use faer::{Mat, MatRef};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::complex::{CochainStack, SimplicialComplex};
use crate::detector::{
    ComplementDetector, InterpolationDetector, MinNormDetector, OverdetDetector, RegularizerSpec,
    RidgeDetector, SamplingMask,
};
use crate::error::{Error, Result};
use crate::io::MaskScope;
use crate::linalg::norm_sq;
use crate::performance::theoretical_auc;
use crate::spectral::{
    Decomposition, DiracDecomposition, Flavor, HodgeDecomposition, Part, Parts, SubspaceBasis,
    SubspaceLabel, DEFAULT_TOL,
};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum TopologySpec {
    /// All pairs and all triples on `n` vertices.
    Complete { n: usize },
    /// `G(n, p)` with every 3-clique filled.
    ErdosRenyi { n: usize, p: f64, seed: u64 },
    File { path: PathBuf },
}

/// Structured law for one order of the clean signal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SliceLaw {
    Zero,
    /// Edge flow `B1ᵀ z`, `z ~ N(0, I)`.
    GradientInduced,
    /// Edge flow `B2 w`, `w ~ N(0, I)`.
    CurlInduced,
    /// Node signal `B1 s`, `s ~ N(0, I)` on edges.
    LowerInduced,
    /// Triangle signal `B2ᵀ s`, `s ~ N(0, I)` on edges.
    UpperInduced,
    /// Gaussian combination of the kernel of the order's Laplacian.
    Harmonic,
    /// Sum of independent draws.
    Union(Vec<SliceLaw>),
}

fn one() -> f64 {
    1.0
}

fn zero_slice() -> SliceSpec {
    SliceSpec {
        law: SliceLaw::Zero,
        power: 1.0,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SliceSpec {
    pub law: SliceLaw,
    /// Average power per simplex after normalisation.
    #[serde(default = "one")]
    pub power: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SliceSpecs {
    #[serde(default = "zero_slice")]
    pub node: SliceSpec,
    #[serde(default = "zero_slice")]
    pub edge: SliceSpec,
    #[serde(default = "zero_slice")]
    pub triangle: SliceSpec,
}

/// Coefficients over a spectrally ordered basis,
/// `ŝᵢ ~ N(exp(−i/decay), variance)` for `i = 1..r`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingSpec {
    pub parts: Parts,
    pub decay: f64,
    pub variance: f64,
    #[serde(default = "one")]
    pub power: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum HypothesisSpec {
    Slices(SliceSpecs),
    Embedding(EmbeddingSpec),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeKind {
    Hodge,
    Dirac,
    MissingOver,
    MissingUnder,
    /// Unregularised two-hypothesis statistic with minimum-norm fits.
    MissingMinNorm,
    Interp,
}

/// Diagonal weights `scale · exp(i / rate)`, `i = 1..r`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightLaw {
    pub scale: f64,
    pub rate: f64,
}

impl WeightLaw {
    pub fn weights(&self, width: usize) -> Vec<f64> {
        (1..=width)
            .map(|i| self.scale * (i as f64 / self.rate).exp())
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegularizerConfig {
    #[serde(default = "one")]
    pub lambda0: f64,
    #[serde(default = "one")]
    pub lambda1: f64,
    pub r0: WeightLaw,
    pub r1: WeightLaw,
}

impl RegularizerConfig {
    pub fn materialize(&self, width0: usize, width1: usize) -> RegularizerSpec {
        RegularizerSpec {
            lambda0: self.lambda0,
            lambda1: self.lambda1,
            r0: self.r0.weights(width0),
            r1: self.r1.weights(width1),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorSpec {
    pub regime: RegimeKind,
    pub flavor: Flavor,
    /// Null subspace `Δ`.
    pub parts: Parts,
    /// Alternative model for the two-hypothesis statistics.
    #[serde(default = "all_parts")]
    pub h1_parts: Parts,
    #[serde(default)]
    pub regularizer: Option<RegularizerConfig>,
}

fn all_parts() -> Parts {
    Parts::ALL
}

impl DetectorSpec {
    pub fn scope(&self) -> MaskScope {
        match self.flavor {
            Flavor::Hodge(k) => MaskScope::Order(k),
            Flavor::Dirac => MaskScope::Stack,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SnrReference {
    /// The signal the detector observes: one order for Hodge detectors,
    /// the whole stack for Dirac ones.
    #[default]
    Scope,
    /// One order of the stack.
    Order(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub name: Option<String>,
    pub topology: TopologySpec,
    pub h0: HypothesisSpec,
    pub h1: HypothesisSpec,
    pub detector: DetectorSpec,
    pub snr_db: f64,
    #[serde(default)]
    pub snr_reference: SnrReference,
    pub trials: usize,
    #[serde(default)]
    pub sampling_rate: Option<f64>,
    pub seed: u64,
    /// Draw a new clean sample for every trial instead of one per hypothesis.
    #[serde(default)]
    pub fresh_samples: bool,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if !self.snr_db.is_finite() {
            return Err(Error::Config("snr_db must be finite".into()));
        }
        if let Some(r) = self.sampling_rate {
            if !(r > 0.0 && r <= 1.0) {
                return Err(Error::RateOutOfRange(r));
            }
        }
        match &self.topology {
            TopologySpec::ErdosRenyi { p, .. } if !(0.0..=1.0).contains(p) => {
                return Err(Error::Config(format!("edge probability {p} outside [0, 1]")));
            }
            TopologySpec::File { path } if !path.exists() => {
                return Err(Error::Config(format!("topology file {} not found", path.display())));
            }
            _ => {}
        }
        let d = &self.detector;
        match (d.regime, d.flavor) {
            (RegimeKind::Hodge, Flavor::Dirac) | (RegimeKind::Dirac, Flavor::Hodge(_)) => {
                return Err(Error::Config("regime and flavor disagree".into()));
            }
            (_, Flavor::Hodge(k)) if k > 2 => return Err(Error::UnsupportedOrder(k)),
            _ => {}
        }
        if let SnrReference::Order(k) = self.snr_reference {
            if k > 2 {
                return Err(Error::UnsupportedOrder(k));
            }
        }
        for h in [&self.h0, &self.h1] {
            if let HypothesisSpec::Embedding(e) = h {
                if !(e.decay > 0.0) || !(e.variance >= 0.0) {
                    return Err(Error::Config("embedding decay must be positive and variance nonnegative".into()));
                }
            }
        }
        Ok(())
    }
}

const ROLE_TOPOLOGY: u64 = 1;
const ROLE_MASK: u64 = 2;
const ROLE_SIGNAL: u64 = 3;
const ROLE_NOISE: u64 = 5;

/// Generator for one `(seed, role, index)` key.
pub fn keyed_rng(seed: u64, role: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((role << 48) | (index & 0xFFFF_FFFF_FFFF));
    rng
}

fn gaussian_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

pub fn generate_topology(spec: &TopologySpec) -> Result<SimplicialComplex> {
    match spec {
        TopologySpec::Complete { n } => {
            let n = *n;
            let edges: Vec<_> = (0..n)
                .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
                .collect();
            let tris: Vec<_> = (0..n)
                .flat_map(|i| (i + 1..n).flat_map(move |j| (j + 1..n).map(move |k| (i, j, k))))
                .collect();
            SimplicialComplex::build(n, &edges, &tris)
        }
        TopologySpec::ErdosRenyi { n, p, seed } => {
            let n = *n;
            let mut rng = keyed_rng(*seed, ROLE_TOPOLOGY, 0);
            let mut adj = vec![vec![false; n]; n];
            let mut edges = Vec::new();
            for i in 0..n {
                for j in i + 1..n {
                    if rng.gen::<f64>() < *p {
                        adj[i][j] = true;
                        adj[j][i] = true;
                        edges.push((i, j));
                    }
                }
            }
            let mut tris = Vec::new();
            for &(i, j) in &edges {
                for k in j + 1..n {
                    if adj[i][k] && adj[j][k] {
                        tris.push((i, j, k));
                    }
                }
            }
            SimplicialComplex::build(n, &edges, &tris)
        }
        TopologySpec::File { path } => crate::io::read_complex(path),
    }
}

/// `N_o = round(rate · dim)` indices drawn without replacement.
pub fn generate_mask(ambient_dim: usize, rate: f64, seed: u64) -> Result<SamplingMask> {
    if !(rate > 0.0 && rate <= 1.0) {
        return Err(Error::RateOutOfRange(rate));
    }
    let n_obs = ((rate * ambient_dim as f64).round() as usize).clamp(1, ambient_dim);
    if n_obs == ambient_dim {
        return Ok(SamplingMask::identity(ambient_dim));
    }
    let mut rng = keyed_rng(seed, ROLE_MASK, 0);
    let picked = index::sample(&mut rng, ambient_dim, n_obs).into_vec();
    SamplingMask::new(ambient_dim, picked)
}

/// Noise variance that puts the reference signal at `snr_db`:
/// `σ² = ‖s‖² / (dim · 10^{snr/10})`.
pub fn noise_variance(reference: &[f64], snr_db: f64) -> Result<f64> {
    let e = norm_sq(reference);
    if e == 0.0 || reference.is_empty() {
        return Err(Error::ZeroSignal);
    }
    Ok(e / (reference.len() as f64 * 10f64.powf(snr_db / 10.0)))
}

/// `s + n` with `n ~ N(0, σ² I)` at the given SNR; returns the noisy stack
/// and `σ²`. Infinite SNR returns `s` unchanged.
pub fn add_noise(s: &CochainStack, snr_db: f64, seed: u64) -> Result<(CochainStack, f64)> {
    if snr_db == f64::INFINITY {
        return Ok((s.clone(), 0.0));
    }
    let flat = s.flatten();
    let sigma2 = noise_variance(&flat, snr_db)?;
    let mut rng = keyed_rng(seed, ROLE_NOISE, 0);
    let sd = sigma2.sqrt();
    let mut out = s.clone();
    for k in 0..3 {
        for v in out.slice_mut(k) {
            *v += sd * rng.sample::<f64, _>(StandardNormal);
        }
    }
    Ok((out, sigma2))
}

/// Complex plus cached decompositions.
pub struct Workspace {
    cx: SimplicialComplex,
    tol: f64,
    hodge: [OnceLock<HodgeDecomposition>; 3],
    dirac: OnceLock<DiracDecomposition>,
}

impl Workspace {
    pub fn new(cx: SimplicialComplex) -> Self {
        Self {
            cx,
            tol: DEFAULT_TOL,
            hodge: Default::default(),
            dirac: OnceLock::new(),
        }
    }

    pub fn from_spec(spec: &TopologySpec) -> Result<Self> {
        Ok(Self::new(generate_topology(spec)?))
    }

    pub fn complex(&self) -> &SimplicialComplex {
        &self.cx
    }

    pub fn hodge(&self, k: usize) -> Result<&HodgeDecomposition> {
        if k > 2 {
            return Err(Error::UnsupportedOrder(k));
        }
        if let Some(d) = self.hodge[k].get() {
            return Ok(d);
        }
        let d = HodgeDecomposition::compute(&self.cx, k, self.tol)?;
        Ok(self.hodge[k].get_or_init(|| d))
    }

    pub fn dirac(&self) -> Result<&DiracDecomposition> {
        if let Some(d) = self.dirac.get() {
            return Ok(d);
        }
        let d = DiracDecomposition::compute(&self.cx, self.tol)?;
        Ok(self.dirac.get_or_init(|| d))
    }

    pub fn decomposition(&self, flavor: Flavor) -> Result<&dyn Decomposition> {
        Ok(match flavor {
            Flavor::Hodge(k) => self.hodge(k)?,
            Flavor::Dirac => self.dirac()?,
        })
    }

    /// Draws one clean stack. `rng` drives every random coefficient.
    pub fn generate_signal(
        &self,
        spec: &HypothesisSpec,
        flavor: Flavor,
        rng: &mut ChaCha8Rng,
    ) -> Result<CochainStack> {
        match spec {
            HypothesisSpec::Slices(s) => {
                let mut out = CochainStack::zeros(&self.cx);
                for (k, slice) in [&s.node, &s.edge, &s.triangle].into_iter().enumerate() {
                    let mut v = self.draw_slice(k, &slice.law, rng)?;
                    let e = norm_sq(&v);
                    if e > 0.0 {
                        let c = (slice.power * v.len() as f64 / e).sqrt();
                        v.iter_mut().for_each(|x| *x *= c);
                    }
                    out.slice_mut(k).copy_from_slice(&v);
                }
                Ok(out)
            }
            HypothesisSpec::Embedding(e) => {
                let basis = spectral_order(self.decomposition(flavor)?, e.parts)?;
                let coef: Vec<f64> = (1..=basis.rank())
                    .map(|i| {
                        let z: f64 = rng.sample(StandardNormal);
                        (-(i as f64) / e.decay).exp() + e.variance.sqrt() * z
                    })
                    .collect();
                let mut x = basis.synthesize(&coef)?;
                let en = norm_sq(&x);
                if en > 0.0 {
                    let c = (e.power * x.len() as f64 / en).sqrt();
                    x.iter_mut().for_each(|v| *v *= c);
                }
                match flavor {
                    Flavor::Dirac => CochainStack::from_flat(&self.cx, &x),
                    Flavor::Hodge(k) => CochainStack::single(&self.cx, k, x),
                }
            }
        }
    }

    fn draw_slice(&self, k: usize, law: &SliceLaw, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        let cx = &self.cx;
        let bad = || Error::UnsupportedLaw(format!("{law:?} at order {k}"));
        Ok(match (law, k) {
            (SliceLaw::Zero, _) => vec![0.0; cx.count(k)],
            (SliceLaw::GradientInduced, 1) => cx.gradient(&gaussian_vec(rng, cx.count(0)))?,
            (SliceLaw::CurlInduced, 1) => cx.circulation(&gaussian_vec(rng, cx.count(2)))?,
            (SliceLaw::LowerInduced, 0) => cx.divergence(&gaussian_vec(rng, cx.count(1)))?,
            (SliceLaw::UpperInduced, 2) => cx.curl(&gaussian_vec(rng, cx.count(1)))?,
            (SliceLaw::Harmonic, _) => {
                let h = self.hodge(k)?.part(Part::Harmonic);
                if h.rank() == 0 {
                    return Err(Error::UnsupportedLaw(format!(
                        "harmonic law on order {k}, whose harmonic space is trivial"
                    )));
                }
                h.synthesize(&gaussian_vec(rng, h.rank()))?
            }
            (SliceLaw::Union(laws), _) => {
                let mut acc = vec![0.0; cx.count(k)];
                for l in laws {
                    let v = self.draw_slice(k, l, rng)?;
                    acc.iter_mut().zip(v).for_each(|(a, b)| *a += b);
                }
                acc
            }
            _ => return Err(bad()),
        })
    }

    /// Clean `(H0, H1)` stacks for sample `t`, with `H0` rescaled to the
    /// energy of `H1`.
    pub fn clean_pair(&self, cfg: &ExperimentConfig, t: usize) -> Result<(CochainStack, CochainStack)> {
        let flavor = cfg.detector.flavor;
        let mut r1 = keyed_rng(cfg.seed, ROLE_SIGNAL + 1, t as u64);
        let s1 = self.generate_signal(&cfg.h1, flavor, &mut r1)?;
        let mut r0 = keyed_rng(cfg.seed, ROLE_SIGNAL, t as u64);
        let mut s0 = self.generate_signal(&cfg.h0, flavor, &mut r0)?;
        let (e0, e1) = (s0.energy(), s1.energy());
        if e0 > 0.0 && e1 > 0.0 {
            s0.scale((e1 / e0).sqrt());
        }
        Ok((s0, s1))
    }

    pub fn run(&self, cfg: &ExperimentConfig) -> Result<TrialOutcome> {
        cfg.validate()?;
        let det = &cfg.detector;
        let scope = det.scope();
        let dim = scope.ambient_dim(&self.cx);

        let n_samples = if cfg.fresh_samples { cfg.trials } else { 1 };
        let mut clean: [Vec<CochainStack>; 2] = [Vec::new(), Vec::new()];
        for t in 0..n_samples {
            let (s0, s1) = self.clean_pair(cfg, t)?;
            clean[0].push(s0);
            clean[1].push(s1);
        }

        let reference: Vec<f64> = match cfg.snr_reference {
            SnrReference::Scope => scope.extract(&self.cx, &clean[1][0]),
            SnrReference::Order(k) => clean[1][0].slice(k).to_vec(),
        };
        let sigma2 = noise_variance(&reference, cfg.snr_db)?;

        let mask = match cfg.sampling_rate {
            Some(r) => generate_mask(dim, r, cfg.seed)?,
            None => SamplingMask::identity(dim),
        };
        let prepared = self.prepare_detector(det, &mask)?;

        let mut stats: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
        let mut deltas = Vec::with_capacity(n_samples);
        for h in 0..2 {
            let signals: Vec<Vec<f64>> = clean[h]
                .iter()
                .map(|s| mask.apply(&scope.extract(&self.cx, s)))
                .collect::<Result<_>>()?;
            let xs = noisy_observations(&signals, &mask, sigma2, cfg.trials, cfg.seed, h as u64);
            stats[h] = prepared
                .energies(xs.as_ref())
                .into_iter()
                .map(|e| e / sigma2)
                .collect();
            if h == 1 && prepared.has_noncentrality() {
                for s in &signals {
                    let m = MatRef::from_column_major_slice(s, s.len(), 1);
                    deltas.push(prepared.energies(m)[0] / sigma2);
                }
            }
        }
        let [h0, h1] = stats;
        let delta = if deltas.is_empty() {
            None
        } else {
            Some(deltas.iter().sum::<f64>() / deltas.len() as f64)
        };
        Ok(TrialOutcome {
            h0,
            h1,
            sigma2,
            dims: prepared.dims(dim, mask.len()),
            dof: prepared.dof(),
            delta,
            deltas,
        })
    }

    pub fn prepare_detector(&self, det: &DetectorSpec, mask: &SamplingMask) -> Result<Prepared> {
        let dec = self.decomposition(det.flavor)?;
        let subspace = dec.select(det.parts)?.rank();
        let complement = dec.complement(det.parts)?;
        let kind = match det.regime {
            RegimeKind::Hodge | RegimeKind::Dirac => {
                if !mask.is_identity() {
                    return Err(Error::Config(
                        "complete-data regimes take no sampling rate; use missing_over".into(),
                    ));
                }
                if complement.rank() == 0 {
                    return Err(Error::EmptyComplement);
                }
                if subspace < complement.rank() {
                    // ‖x‖² − ‖U_Δᵀx‖² is cheaper when Δ is the smaller side.
                    PreparedKind::Overdet(OverdetDetector::new(&dec.select(det.parts)?, mask)?)
                } else {
                    PreparedKind::Complete(ComplementDetector::new(complement.clone())?)
                }
            }
            RegimeKind::MissingOver => {
                PreparedKind::Overdet(OverdetDetector::new(&dec.select(det.parts)?, mask)?)
            }
            RegimeKind::MissingUnder => {
                let b0 = spectral_order(dec, det.parts)?;
                let b1 = spectral_order(dec, det.h1_parts)?;
                let reg = match &det.regularizer {
                    Some(r) => r.materialize(b0.rank(), b1.rank()),
                    None => RegularizerSpec::none(b0.rank(), b1.rank()),
                };
                PreparedKind::Ridge(Box::new(RidgeDetector::new(&b0, &b1, mask, &reg)?))
            }
            RegimeKind::MissingMinNorm => PreparedKind::MinNorm(MinNormDetector::new(
                &dec.select(det.parts)?,
                &dec.select(det.h1_parts)?,
                mask,
            )?),
            RegimeKind::Interp => {
                PreparedKind::Interp(Box::new(InterpolationDetector::new(&complement, mask)?))
            }
        };
        Ok(Prepared {
            kind,
            subspace,
            complement: complement.rank(),
        })
    }
}

/// Basis of `parts` with columns sorted by ascending eigen/singular value,
/// so that "low-pass" coefficient laws refer to the low end of the spectrum.
pub fn spectral_order(dec: &dyn Decomposition, parts: Parts) -> Result<SubspaceBasis> {
    if parts.is_empty() {
        return Err(Error::EmptySelection);
    }
    let mut cols: Vec<(f64, usize, usize)> = Vec::new();
    let blocks: Vec<&SubspaceBasis> = parts.iter().map(|p| dec.part(p)).collect();
    for (b, p) in parts.iter().enumerate() {
        for (j, &v) in dec.values(p).iter().enumerate() {
            cols.push((v, b, j));
        }
    }
    cols.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let n = dec.ambient_dim();
    let mut out = Mat::zeros(n, cols.len());
    for (c, &(_, b, j)) in cols.iter().enumerate() {
        let src = blocks[b].columns();
        for i in 0..n {
            out[(i, c)] = src[(i, j)];
        }
    }
    Ok(SubspaceBasis::new(
        SubspaceLabel {
            flavor: dec.flavor(),
            parts,
        },
        out,
    ))
}

/// `dim_obs × trials` matrix of `Θ(s + n)`, one noise draw per trial.
fn noisy_observations(
    signals: &[Vec<f64>],
    mask: &SamplingMask,
    sigma2: f64,
    trials: usize,
    seed: u64,
    hypothesis: u64,
) -> Mat<f64> {
    let dim = mask.ambient_dim();
    let sd = sigma2.sqrt();
    let cols: Vec<Vec<f64>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = keyed_rng(seed, ROLE_NOISE + hypothesis, t as u64);
            let noise = gaussian_vec(&mut rng, dim);
            let s = &signals[t.min(signals.len() - 1)];
            mask.selected()
                .iter()
                .zip(s)
                .map(|(&i, &v)| v + sd * noise[i])
                .collect()
        })
        .collect();
    Mat::from_fn(mask.len(), trials, |i, j| cols[j][i])
}

enum PreparedKind {
    Complete(ComplementDetector),
    Overdet(OverdetDetector),
    Ridge(Box<RidgeDetector>),
    MinNorm(MinNormDetector),
    Interp(Box<InterpolationDetector>),
}

/// A detector built for one mask, scoring batches of observations.
pub struct Prepared {
    kind: PreparedKind,
    subspace: usize,
    complement: usize,
}

impl Prepared {
    /// Statistic numerators (before division by `σ²`).
    pub fn energies(&self, xs: MatRef<'_, f64>) -> Vec<f64> {
        match &self.kind {
            PreparedKind::Complete(d) => d.energies(xs),
            PreparedKind::Overdet(d) => d.energies(xs),
            PreparedKind::Ridge(d) => d.energies(xs),
            PreparedKind::MinNorm(d) => d.energies(xs),
            PreparedKind::Interp(d) => d.energies(xs),
        }
    }

    /// Degrees of freedom of the null chi-square law, where one exists.
    pub fn dof(&self) -> Option<usize> {
        match &self.kind {
            PreparedKind::Complete(d) => Some(d.dof()),
            PreparedKind::Overdet(d) => Some(d.dof()),
            _ => None,
        }
    }

    fn has_noncentrality(&self) -> bool {
        matches!(self.kind, PreparedKind::Complete(_) | PreparedKind::Overdet(_))
    }

    fn dims(&self, ambient: usize, observed: usize) -> Dims {
        Dims {
            ambient,
            subspace: self.subspace,
            complement: self.complement,
            observed,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub ambient: usize,
    pub subspace: usize,
    pub complement: usize,
    pub observed: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub h0: Vec<f64>,
    pub h1: Vec<f64>,
    pub sigma2: f64,
    pub dims: Dims,
    pub dof: Option<usize>,
    /// Mean noncentrality of the alternative samples.
    pub delta: Option<f64>,
    pub deltas: Vec<f64>,
}

impl TrialOutcome {
    pub fn roc(&self) -> Result<RocCurve> {
        empirical_roc(&self.h0, &self.h1)
    }
}

pub fn run_trials(cfg: &ExperimentConfig) -> Result<TrialOutcome> {
    cfg.validate()?;
    Workspace::from_spec(&cfg.topology)?.run(cfg)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    /// `(P_FA, P_D)` from `(0, 0)` to `(1, 1)`.
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
    pub mann_whitney: f64,
    pub n0: usize,
    pub n1: usize,
}

/// Threshold sweep over the pooled statistics. Ties between hypotheses
/// produce diagonal steps and count one half.
pub fn empirical_roc(h0: &[f64], h1: &[f64]) -> Result<RocCurve> {
    if h0.is_empty() || h1.is_empty() {
        return Err(Error::EmptyInput);
    }
    let (n0, n1) = (h0.len(), h1.len());
    let mut pooled: Vec<(f64, bool)> = h0
        .iter()
        .map(|&v| (v, false))
        .chain(h1.iter().map(|&v| (v, true)))
        .collect();
    pooled.sort_by(|a, b| b.0.total_cmp(&a.0));

    let mut points = vec![(0.0, 0.0)];
    let mut area = 0.0;
    let (mut fp, mut tp) = (0usize, 0usize);
    let mut i = 0;
    while i < pooled.len() {
        let v = pooled[i].0;
        while i < pooled.len() && pooled[i].0 == v {
            if pooled[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let p = (fp as f64 / n0 as f64, tp as f64 / n1 as f64);
        let last = *points.last().unwrap();
        area += (p.0 - last.0) * (p.1 + last.1) / 2.0;
        points.push(p);
    }

    Ok(RocCurve {
        points,
        auc: area,
        mann_whitney: mann_whitney_auc(h0, h1),
        n0,
        n1,
    })
}

/// `P(T1 > T0) + ½ P(T1 = T0)` from mid-ranks.
pub fn mann_whitney_auc(h0: &[f64], h1: &[f64]) -> f64 {
    let mut pooled: Vec<(f64, bool)> = h0
        .iter()
        .map(|&v| (v, false))
        .chain(h1.iter().map(|&v| (v, true)))
        .collect();
    pooled.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < pooled.len() {
        let mut j = i;
        while j < pooled.len() && pooled[j].0 == pooled[i].0 {
            j += 1;
        }
        let mid = (i + 1 + j) as f64 / 2.0;
        rank_sum += mid * pooled[i..j].iter().filter(|p| p.1).count() as f64;
        i = j;
    }
    let (n0, n1) = (h0.len() as f64, h1.len() as f64);
    (rank_sum - n1 * (n1 + 1.0) / 2.0) / (n0 * n1)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoryComparison {
    pub empirical: f64,
    pub theoretical: f64,
    pub gap: f64,
}

pub fn compare_theory(curve: &RocCurve, dof: f64, delta: f64) -> Result<TheoryComparison> {
    let theoretical = theoretical_auc(dof, delta)?;
    Ok(TheoryComparison {
        empirical: curve.auc,
        theoretical,
        gap: (curve.auc - theoretical).abs(),
    })
}

pub fn write_statistics_csv<W: Write>(out: &TrialOutcome, w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["trial", "hypothesis", "statistic"])?;
    for (h, stats) in [&out.h0, &out.h1].into_iter().enumerate() {
        for (t, s) in stats.iter().enumerate() {
            wtr.serialize((t, format!("H{h}"), s))?;
        }
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_roc_csv<W: Write>(curve: &RocCurve, w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["pfa", "pd"])?;
    for p in &curve.points {
        wtr.serialize(p)?;
    }
    wtr.flush()?;
    Ok(())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Summary {
    pub config: ExperimentConfig,
    pub auc: f64,
    pub theoretical_auc: Option<f64>,
    pub gap: Option<f64>,
    pub dims: Dims,
    pub dof: Option<usize>,
    pub sigma2: f64,
    pub delta: Option<f64>,
}

pub fn summarize(cfg: &ExperimentConfig, out: &TrialOutcome) -> Result<Summary> {
    let curve = out.roc()?;
    let theory = match (out.dof, out.delta) {
        (Some(k), Some(d)) if k > 0 => Some(compare_theory(&curve, k as f64, d)?),
        _ => None,
    };
    Ok(Summary {
        config: cfg.clone(),
        auc: curve.auc,
        theoretical_auc: theory.map(|t| t.theoretical),
        gap: theory.map(|t| t.gap),
        dims: out.dims,
        dof: out.dof,
        sigma2: out.sigma2,
        delta: out.delta,
    })
}
