//! Packed (ramp) secret sharing of a padded gradient.
//!
//! A client holding `g` draws a one-time key `r`, splits `g + r` into `nu`
//! blocks, and encodes them as the low coefficients of a polynomial whose
//! top `z_bs` coefficient blocks are fresh uniform masks:
//!
//! ```text
//! f(x) = sum_{j in [nu]} x^(j-1) (g^j + r^j)  +  sum_{j in [z]} x^(nu+j-1) t^j
//! ```
//!
//! Each connected base station k receives the evaluation f(alpha_k). Any
//! `z_bs` shares are statistically independent of the secret; `z_bs + nu`
//! shares reconstruct it.

use std::collections::BTreeMap;

use rand::Rng;
use thiserror::Error;

use crate::field::{FieldElement, FieldError, FieldVector, LagrangeBasis};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SharingError {
    #[error("sharing needs nu >= 1 and d >= 1 (got nu={nu}, d={d})")]
    InvalidParams { nu: usize, d: usize },
    #[error("vector has length {got}, expected {expected}")]
    WrongLength { expected: usize, got: usize },
    #[error("expected {expected} evaluation points, got {got}")]
    WrongPointCount { expected: usize, got: usize },
    #[error("expected {expected} mask vectors, got {got}")]
    WrongMaskCount { expected: usize, got: usize },
    #[error("evaluation point reduces to zero in the field")]
    ZeroEvaluationPoint,
    #[error("reconstruction needs {needed} evaluations, got {got}")]
    InsufficientEvaluations { needed: usize, got: usize },
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Sharing geometry for one client: collusion threshold, data block count,
/// and gradient length.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SharingParams {
    pub z_bs: usize,
    pub nu: usize,
    pub d: usize,
}

impl SharingParams {
    pub fn new(z_bs: usize, nu: usize, d: usize) -> Result<Self, SharingError> {
        if nu == 0 || d == 0 {
            return Err(SharingError::InvalidParams { nu, d });
        }
        Ok(Self { z_bs, nu, d })
    }

    /// d rounded up to a multiple of nu.
    pub fn padded_len(&self) -> usize {
        self.nu * self.d.div_ceil(self.nu)
    }

    /// Symbols per share: padded_len / nu.
    pub fn share_len(&self) -> usize {
        self.d.div_ceil(self.nu)
    }

    /// Evaluations required to reconstruct: z_bs + nu.
    pub fn shares_needed(&self) -> usize {
        self.z_bs + self.nu
    }
}

/// Distinct nonzero evaluation points, one per base station index.
///
/// Points are stored as plain integers so one topology can run under any
/// sufficiently large field. The default assignment is alpha_k = k with
/// 1-based station numbering, which requires q > B.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvaluationPointMap {
    points: BTreeMap<usize, u64>,
}

impl EvaluationPointMap {
    pub fn new<I: IntoIterator<Item = (usize, u64)>>(entries: I) -> Result<Self, SharingError> {
        let mut points = BTreeMap::new();
        for (bs, alpha) in entries {
            if alpha == 0 {
                return Err(SharingError::ZeroEvaluationPoint);
            }
            if points.values().any(|&a| a == alpha) {
                return Err(SharingError::Field(FieldError::DuplicatePoint(alpha)));
            }
            points.insert(bs, alpha);
        }
        Ok(Self { points })
    }

    /// alpha_k = k + 1 for every 0-based station index in `stations`.
    pub fn sequential<I: IntoIterator<Item = usize>>(stations: I) -> Self {
        Self {
            points: stations.into_iter().map(|k| (k, k as u64 + 1)).collect(),
        }
    }

    pub fn alpha(&self, station: usize) -> Option<u64> {
        self.points.get(&station).copied()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, u64)> + '_ {
        self.points.iter().map(|(&k, &a)| (k, a))
    }
}

/// The per-station shares f_i(alpha_k) produced by one client.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShareBundle {
    shares: BTreeMap<usize, FieldVector>,
}

impl ShareBundle {
    pub fn get(&self, station: usize) -> Option<&FieldVector> {
        self.shares.get(&station)
    }

    pub fn len(&self) -> usize {
        self.shares.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shares.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &FieldVector)> + '_ {
        self.shares.iter().map(|(&k, v)| (k, v))
    }
}

/// Zero-pads `v` to a multiple of `nu` and splits it into `nu` contiguous
/// blocks.
pub fn pad_and_split(v: &FieldVector, nu: usize) -> Vec<FieldVector> {
    assert!(nu >= 1, "nu must be at least 1");
    let cfg = v.config();
    let block = v.len().div_ceil(nu).max(1);
    let mut blocks = Vec::with_capacity(nu);
    for j in 0..nu {
        let mut b = cfg.zeros(0);
        for p in 0..block {
            let idx = j * block + p;
            let e = if idx < v.len() { v.get(idx) } else { cfg.zero() };
            b.push(e).expect("same field");
        }
        blocks.push(b);
    }
    blocks
}

/// Shares `g + r` with masks drawn from `rng`.
pub fn make_shares<R: Rng>(
    g: &FieldVector,
    r: &FieldVector,
    params: &SharingParams,
    points: &EvaluationPointMap,
    rng: &mut R,
) -> Result<ShareBundle, SharingError> {
    let q = g.modulus();
    let share_len = params.share_len();
    let masks: Vec<FieldVector> = (0..params.z_bs)
        .map(|_| g.config().vector((0..share_len).map(|_| rng.gen_range(0..q))))
        .collect();
    make_shares_with_masks(g, r, params, points, &masks)
}

/// Shares `g + r` with caller-supplied mask blocks; the deterministic core
/// of [`make_shares`].
pub fn make_shares_with_masks(
    g: &FieldVector,
    r: &FieldVector,
    params: &SharingParams,
    points: &EvaluationPointMap,
    masks: &[FieldVector],
) -> Result<ShareBundle, SharingError> {
    if g.len() != params.d {
        return Err(SharingError::WrongLength {
            expected: params.d,
            got: g.len(),
        });
    }
    if r.len() != params.d {
        return Err(SharingError::WrongLength {
            expected: params.d,
            got: r.len(),
        });
    }
    if points.len() != params.shares_needed() {
        return Err(SharingError::WrongPointCount {
            expected: params.shares_needed(),
            got: points.len(),
        });
    }
    if masks.len() != params.z_bs {
        return Err(SharingError::WrongMaskCount {
            expected: params.z_bs,
            got: masks.len(),
        });
    }
    let share_len = params.share_len();
    for m in masks {
        if m.len() != share_len {
            return Err(SharingError::WrongLength {
                expected: share_len,
                got: m.len(),
            });
        }
        if m.modulus() != g.modulus() {
            return Err(FieldError::ModulusMismatch(g.modulus(), m.modulus()).into());
        }
    }

    let cfg = g.config();
    let padded = g.checked_add(r)?;
    let blocks = pad_and_split(&padded, params.nu);

    let mut shares = BTreeMap::new();
    let mut seen = Vec::with_capacity(points.len());
    for (station, alpha) in points.iter() {
        let x = cfg.element(alpha);
        if x.is_zero() {
            return Err(SharingError::ZeroEvaluationPoint);
        }
        if seen.contains(&x.value()) {
            return Err(SharingError::Field(FieldError::DuplicatePoint(x.value())));
        }
        seen.push(x.value());

        let mut share = cfg.zeros(0);
        for p in 0..share_len {
            // Horner over the nu data blocks then the z mask blocks
            let mut acc = cfg.zero();
            for m in masks.iter().rev() {
                acc = acc * x + m.get(p);
            }
            for b in blocks.iter().rev() {
                acc = acc * x + b.get(p);
            }
            share.push(acc)?;
        }
        shares.insert(station, share);
    }
    Ok(ShareBundle { shares })
}

/// Interpolates the coefficient blocks from `z_bs + nu` (or more) evaluations
/// and returns the secret `g + r` truncated back to length `d`.
///
/// When the evaluations are sums of several clients' share polynomials, the
/// result is the corresponding sum of padded secrets.
pub fn reconstruct_padded(
    evals: &[(FieldElement, FieldVector)],
    params: &SharingParams,
) -> Result<FieldVector, SharingError> {
    let needed = params.shares_needed();
    if evals.len() < needed {
        return Err(SharingError::InsufficientEvaluations {
            needed,
            got: evals.len(),
        });
    }
    let share_len = params.share_len();
    let cfg = evals[0].0;
    let q = cfg.modulus();
    for (x, v) in evals {
        if x.modulus() != q || v.modulus() != q {
            return Err(FieldError::ModulusMismatch(q, v.modulus()).into());
        }
        if v.len() != share_len {
            return Err(SharingError::WrongLength {
                expected: share_len,
                got: v.len(),
            });
        }
    }
    for (i, (xi, _)) in evals.iter().enumerate() {
        for (xj, _) in &evals[..i] {
            if xi.value() == xj.value() {
                return Err(FieldError::DuplicatePoint(xi.value()).into());
            }
        }
    }

    let xs: Vec<u64> = evals[..needed].iter().map(|(x, _)| x.value()).collect();
    let basis = LagrangeBasis::new(evals[0].1.config(), &xs)?;

    let mut block_rows: Vec<Vec<u64>> = vec![Vec::with_capacity(share_len); params.nu];
    let mut ys = vec![0u64; needed];
    for p in 0..share_len {
        for (slot, (_, v)) in ys.iter_mut().zip(&evals[..needed]) {
            *slot = v.values()[p];
        }
        let coeffs = basis.interpolate(&ys);
        // consistency of any surplus evaluations
        for (x, v) in &evals[needed..] {
            let mut acc = 0u64;
            for &c in coeffs.iter().rev() {
                acc = crate::field::add_mod(
                    crate::field::mul_mod(acc, x.value(), q),
                    c,
                    q,
                );
            }
            if acc != v.values()[p] {
                return Err(FieldError::InconsistentPoints {
                    degree_bound: needed,
                }
                .into());
            }
        }
        for (j, row) in block_rows.iter_mut().enumerate() {
            row.push(coeffs[j]);
        }
    }

    let mut out = evals[0].1.config().zeros(0);
    for row in block_rows {
        for value in row {
            out.push(evals[0].1.config().element(value))?;
        }
    }
    out.truncate(params.d);
    Ok(out)
}
