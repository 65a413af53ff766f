//! The little `d`-discs operad over exact rationals.
//!
//! A little disc is the affine contraction `x ↦ r·x + a` of the closed unit
//! disc `D^d`; a configuration is a finite ordered family of little discs whose
//! closed images are pairwise disjoint.  Both the containment invariant of a
//! single disc and the disjointness invariant of a configuration are decided by
//! comparing squared norms, so validity is exact and no square root is ever
//! extracted.
//!
//! The operad structure consists of the blockwise composition [`gamma`] and the
//! symmetric-group action [`sigma_action`]; both preserve validity, and the
//! composition is associative and equivariant (checked exhaustively in the
//! tests on randomized valid inputs).
//!
//! Radii are required to lie strictly between `0` and `1`.  Degenerate discs of
//! radius zero are excluded because later rescaling operations divide by the
//! radius, and radius one is excluded so that every disc is a strict
//! contraction; consequently there is no unit element, and unit-like behaviour
//! is only approximated by "near-identity" discs of radius close to one.

use crate::geometry::{add, dot, sub, Vect};
use crate::scalar::{fmt_rat, rat_int, Rat};
use crate::{Error, Result};

/// The affine contraction `x ↦ radius·x + center` of the closed unit disc.
///
/// A disc is *valid* when `0 < radius < 1` and the closed image stays inside
/// the unit disc, i.e. `‖center‖² ≤ (1 − radius)²`.  Construction does not
/// validate; see [`LittleDisc::validate`] and [`validate_configuration`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LittleDisc {
    center: Vect,
    radius: Rat,
}

impl LittleDisc {
    pub fn new(center: Vect, radius: Rat) -> LittleDisc {
        LittleDisc { center, radius }
    }

    /// Ambient dimension (the length of the center vector).
    pub fn dimension(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &[Rat] {
        &self.center
    }

    pub fn radius(&self) -> &Rat {
        &self.radius
    }

    /// The image of a point under the disc's affine map.
    pub fn apply(&self, x: &[Rat]) -> Vect {
        let scaled: Vect = x.iter().map(|c| c * &self.radius).collect();
        add(&scaled, &self.center)
    }

    /// Checks the radius bounds and the containment of the closed image in the
    /// unit disc, comparing squared norms exactly.
    pub fn validate(&self) -> Result<()> {
        match self.violation() {
            None => Ok(()),
            Some(msg) => Err(Error::invalid(msg)),
        }
    }

    fn violation(&self) -> Option<String> {
        if self.radius <= rat_int(0) || self.radius >= rat_int(1) {
            return Some(format!(
                "radius {} outside the open interval (0, 1)",
                fmt_rat(&self.radius)
            ));
        }
        let reach = rat_int(1) - &self.radius;
        let bound = reach.clone() * reach;
        let norm = norm_sq(&self.center);
        if norm > bound {
            return Some(format!(
                "image leaves the unit disc: ‖center‖² = {} > (1 − radius)² = {}",
                fmt_rat(&norm),
                fmt_rat(&bound)
            ));
        }
        None
    }
}

/// An ordered, possibly empty family of little discs in a fixed dimension.
///
/// A configuration is *valid* when every disc is valid and the closed images
/// are pairwise disjoint: `‖a_i − a_j‖² > (r_i + r_j)²` for `i ≠ j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscConfiguration {
    dimension: usize,
    discs: Vec<LittleDisc>,
}

impl DiscConfiguration {
    pub fn new(dimension: usize, discs: Vec<LittleDisc>) -> DiscConfiguration {
        DiscConfiguration { dimension, discs }
    }

    /// The empty configuration, which is valid in every dimension.
    pub fn empty(dimension: usize) -> DiscConfiguration {
        DiscConfiguration::new(dimension, Vec::new())
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.discs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.discs.is_empty()
    }

    pub fn discs(&self) -> &[LittleDisc] {
        &self.discs
    }

    /// Shorthand for a configuration check as a `Result`; the error carries the
    /// first violated constraint of [`validate_configuration`].
    pub fn validate(&self) -> Result<()> {
        let report = validate_configuration(self);
        match report.first_violation {
            None => Ok(()),
            Some(msg) => Err(Error::invalid(msg)),
        }
    }
}

/// Validity diagnostics for a configuration: the verdict together with the
/// first violated constraint in reading order (disc invariants first, then
/// pairwise disjointness).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigurationReport {
    pub dimension: usize,
    pub size: usize,
    pub first_violation: Option<String>,
}

impl ConfigurationReport {
    pub fn verdict(&self) -> bool {
        self.first_violation.is_none()
    }
}

impl std::fmt::Display for ConfigurationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.first_violation {
            None => write!(
                f,
                "valid configuration of {} disc(s) in dimension {}",
                self.size, self.dimension
            ),
            Some(msg) => write!(f, "invalid configuration: {msg}"),
        }
    }
}

/// Decides validity of a configuration exactly and reports the first violated
/// constraint: per-disc radius and containment bounds, then pairwise
/// disjointness of closed images via `‖a_i − a_j‖² > (r_i + r_j)²`.
pub fn validate_configuration(cfg: &DiscConfiguration) -> ConfigurationReport {
    let mut report = ConfigurationReport {
        dimension: cfg.dimension,
        size: cfg.discs.len(),
        first_violation: None,
    };
    for (i, disc) in cfg.discs.iter().enumerate() {
        if disc.dimension() != cfg.dimension {
            report.first_violation = Some(format!(
                "disc {i}: center has {} coordinate(s), configuration dimension is {}",
                disc.dimension(),
                cfg.dimension
            ));
            return report;
        }
        if let Some(msg) = disc.violation() {
            report.first_violation = Some(format!("disc {i}: {msg}"));
            return report;
        }
    }
    for i in 0..cfg.discs.len() {
        for j in i + 1..cfg.discs.len() {
            let gap = norm_sq(&sub(&cfg.discs[i].center, &cfg.discs[j].center));
            let touch = cfg.discs[i].radius.clone() + &cfg.discs[j].radius;
            let touch_sq = touch.clone() * touch;
            if gap <= touch_sq {
                report.first_violation = Some(format!(
                    "discs {i} and {j}: closed images meet: ‖a_{i} − a_{j}‖² = {} ≤ (r_{i} + r_{j})² = {}",
                    fmt_rat(&gap),
                    fmt_rat(&touch_sq)
                ));
                return report;
            }
        }
    }
    report
}

/// The composite contraction `outer ∘ inner`: center `r·a′ + a` and radius
/// `r·r′`.  The image of the result is the image of `inner` seen through
/// `outer`, hence contained in the image of `outer`; composing valid discs
/// always yields a valid disc.
pub fn compose_affine(outer: &LittleDisc, inner: &LittleDisc) -> LittleDisc {
    LittleDisc::new(outer.apply(&inner.center), outer.radius.clone() * &inner.radius)
}

/// Operadic composition: plugs the `k` inner configurations into the `k` discs
/// of the outer configuration and concatenates the blockwise composites in
/// block order.  Inputs must be valid and arities must match; the result is
/// then automatically valid.
pub fn gamma(outer: &DiscConfiguration, inners: &[DiscConfiguration]) -> Result<DiscConfiguration> {
    if inners.len() != outer.len() {
        return Err(Error::invalid(format!(
            "composition arity mismatch: outer has {} disc(s), {} inner configuration(s) given",
            outer.len(),
            inners.len()
        )));
    }
    outer.validate()?;
    for inner in inners {
        if inner.dimension() != outer.dimension() {
            return Err(Error::invalid(format!(
                "composition dimension mismatch: outer is {}-dimensional, inner is {}-dimensional",
                outer.dimension(),
                inner.dimension()
            )));
        }
        inner.validate()?;
    }
    let mut discs = Vec::new();
    for (slot, inner) in outer.discs.iter().zip(inners) {
        for disc in &inner.discs {
            discs.push(compose_affine(slot, disc));
        }
    }
    let result = DiscConfiguration::new(outer.dimension, discs);
    debug_assert!(result.validate().is_ok());
    Ok(result)
}

/// The symmetric-group action: entry `i` of the result is entry `σ⁻¹(i)` of the
/// configuration.  The permutation is given in one-line notation (`sigma[i]`
/// is the image of position `i`, zero-based) and must have the configuration's
/// length.
pub fn sigma_action(sigma: &[usize], cfg: &DiscConfiguration) -> Result<DiscConfiguration> {
    let n = cfg.len();
    if sigma.len() != n {
        return Err(Error::invalid(format!(
            "permutation of length {} applied to a configuration of {} disc(s)",
            sigma.len(),
            n
        )));
    }
    let mut inverse = vec![usize::MAX; n];
    for (i, &image) in sigma.iter().enumerate() {
        if image >= n || inverse[image] != usize::MAX {
            return Err(Error::invalid(format!(
                "not a permutation of 0..{n}: entry {i} is {image}"
            )));
        }
        inverse[image] = i;
    }
    let discs = inverse.iter().map(|&j| cfg.discs[j].clone()).collect();
    Ok(DiscConfiguration::new(cfg.dimension, discs))
}

fn norm_sq(v: &[Rat]) -> Rat {
    dot(v, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn disc1(center: i64, cd: i64, radius: i64, rd: i64) -> LittleDisc {
        LittleDisc::new(vec![rat(center, cd)], rat(radius, rd))
    }

    #[test]
    fn single_disc_bounds() {
        assert!(disc1(0, 1, 1, 2).validate().is_ok());
        // Touching the boundary of the unit disc is allowed (closed containment).
        assert!(disc1(1, 2, 1, 2).validate().is_ok());
        assert!(disc1(3, 4, 1, 2).validate().is_err());
        assert!(disc1(0, 1, 0, 1).validate().is_err());
        assert!(disc1(0, 1, 1, 1).validate().is_err());
        assert!(disc1(0, 1, 3, 2).validate().is_err());
    }

    #[test]
    fn validity_examples_in_dimension_one() {
        let valid = DiscConfiguration::new(1, vec![disc1(-1, 2, 1, 4), disc1(1, 2, 1, 4)]);
        let report = validate_configuration(&valid);
        assert!(report.verdict(), "{report}");
        assert!(valid.validate().is_ok());

        let overlapping = DiscConfiguration::new(1, vec![disc1(0, 1, 1, 2), disc1(1, 2, 1, 4)]);
        let report = validate_configuration(&overlapping);
        assert!(!report.verdict());
        let msg = report.first_violation.clone().unwrap();
        assert!(msg.contains("discs 0 and 1"), "{msg}");
        assert!(overlapping.validate().is_err());

        assert!(validate_configuration(&DiscConfiguration::empty(1)).verdict());
    }

    #[test]
    fn tangent_discs_are_rejected() {
        // |a_0 - a_1| = 1/2 equals r_0 + r_1: closed images share one point.
        let tangent = DiscConfiguration::new(1, vec![disc1(-1, 4, 1, 4), disc1(1, 4, 1, 4)]);
        assert!(!validate_configuration(&tangent).verdict());
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let cfg = DiscConfiguration::new(2, vec![disc1(0, 1, 1, 2)]);
        let report = validate_configuration(&cfg);
        assert!(!report.verdict());
        assert!(report.first_violation.unwrap().contains("dimension"));
    }

    #[test]
    fn composition_of_centered_halvings() {
        let half = LittleDisc::new(vec![rat_int(0), rat_int(0)], rat(1, 2));
        let quarter = compose_affine(&half, &half);
        assert_eq!(quarter.center(), &[rat_int(0), rat_int(0)]);
        assert_eq!(quarter.radius(), &rat(1, 4));
    }

    #[test]
    fn composition_matches_evaluation() {
        let outer = disc1(1, 2, 1, 4);
        let inner = disc1(-1, 2, 1, 2);
        let composed = compose_affine(&outer, &inner);
        assert_eq!(composed, disc1(3, 8, 1, 8));
        for x in [rat_int(-1), rat_int(0), rat_int(1), rat(1, 3)] {
            assert_eq!(composed.apply(&[x.clone()]), outer.apply(&inner.apply(&[x])));
        }
    }

    #[test]
    fn composition_is_associative_on_a_triple() {
        let a = disc1(1, 3, 1, 5);
        let b = disc1(-2, 5, 2, 7);
        let c = disc1(1, 7, 3, 11);
        assert_eq!(
            compose_affine(&compose_affine(&a, &b), &c),
            compose_affine(&a, &compose_affine(&b, &c))
        );
    }

    #[test]
    fn gamma_plugs_a_pair_into_a_halving() {
        let outer = DiscConfiguration::new(1, vec![disc1(0, 1, 1, 2)]);
        let inner = DiscConfiguration::new(1, vec![disc1(-1, 2, 1, 4), disc1(1, 2, 1, 4)]);
        let result = gamma(&outer, &[inner]).unwrap();
        let expected =
            DiscConfiguration::new(1, vec![disc1(-1, 4, 1, 8), disc1(1, 4, 1, 8)]);
        assert_eq!(result, expected);
    }

    #[test]
    fn gamma_with_singleton_inners_scales_radii() {
        let outer = DiscConfiguration::new(1, vec![disc1(-1, 2, 1, 4), disc1(1, 2, 1, 4)]);
        let inner = DiscConfiguration::new(1, vec![disc1(0, 1, 1, 3)]);
        let result = gamma(&outer, &[inner.clone(), inner]).unwrap();
        for (slot, composed) in outer.discs().iter().zip(result.discs()) {
            assert_eq!(composed.center(), slot.center());
            assert_eq!(composed.radius(), &(slot.radius() * rat(1, 3)));
        }
    }

    #[test]
    fn gamma_with_near_identity_inners() {
        // Inners of radius 1 − ε with ε = 1/8 barely shrink each slot.
        let outer = DiscConfiguration::new(1, vec![disc1(-1, 2, 1, 4), disc1(1, 2, 1, 4)]);
        let near = DiscConfiguration::new(1, vec![LittleDisc::new(vec![rat_int(0)], rat(7, 8))]);
        let result = gamma(&outer, &[near.clone(), near]).unwrap();
        assert!(result.validate().is_ok());
        for (slot, composed) in outer.discs().iter().zip(result.discs()) {
            assert_eq!(composed.center(), slot.center());
            assert_eq!(composed.radius(), &(slot.radius() * rat(7, 8)));
        }
    }

    #[test]
    fn gamma_rejects_arity_and_validity_failures() {
        let outer = DiscConfiguration::new(1, vec![disc1(0, 1, 1, 2)]);
        assert!(gamma(&outer, &[]).is_err());
        let bad_inner = DiscConfiguration::new(1, vec![disc1(0, 1, 3, 2)]);
        assert!(gamma(&outer, &[bad_inner]).is_err());
        let wrong_dim = DiscConfiguration::new(2, vec![LittleDisc::new(
            vec![rat_int(0), rat_int(0)],
            rat(1, 2),
        )]);
        assert!(gamma(&outer, &[wrong_dim]).is_err());
    }

    #[test]
    fn sigma_action_examples() {
        let cfg = DiscConfiguration::new(1, vec![disc1(-1, 2, 1, 4), disc1(1, 2, 1, 4)]);
        let same = sigma_action(&[0, 1], &cfg).unwrap();
        assert_eq!(same, cfg);
        let swapped = sigma_action(&[1, 0], &cfg).unwrap();
        assert_eq!(swapped.discs()[0], cfg.discs()[1]);
        assert_eq!(swapped.discs()[1], cfg.discs()[0]);
        assert!(sigma_action(&[0], &cfg).is_err());
        assert!(sigma_action(&[0, 0], &cfg).is_err());
        assert!(sigma_action(&[0, 2], &cfg).is_err());
    }

    /// `n` equal discs packed along one axis, optionally jittered and shrunk.
    /// Centers sit at `−1 + (2i+1)/n` with radius `1/(2n)`; a jitter of at most
    /// `1/(8n)` and a shrink factor `≥ 1/2` keep both invariants strict.
    fn packed(dim: usize, n: usize, axis: usize, rng: &mut ChaCha8Rng) -> DiscConfiguration {
        let discs = (0..n)
            .map(|i| {
                let jitter = rat(rng.gen_range(-2..=2), 16 * n as i64);
                let shrink = rat(rng.gen_range(2..=4), 4);
                let mut center = vec![rat_int(0); dim];
                center[axis] = rat(-1, 1) + rat(2 * i as i64 + 1, n as i64) + jitter;
                LittleDisc::new(center, rat(1, 2 * n as i64) * shrink)
            })
            .collect();
        DiscConfiguration::new(dim, discs)
    }

    fn random_config(dim: usize, rng: &mut ChaCha8Rng) -> DiscConfiguration {
        let n = rng.gen_range(1..=3);
        let axis = rng.gen_range(0..dim);
        packed(dim, n, axis, rng)
    }

    #[test]
    fn operad_associativity_on_random_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for dim in [1usize, 2] {
            for _ in 0..60 {
                let a = random_config(dim, &mut rng);
                let bs: Vec<_> = (0..a.len()).map(|_| random_config(dim, &mut rng)).collect();
                let total: usize = bs.iter().map(|b| b.len()).sum();
                let cs: Vec<_> = (0..total).map(|_| random_config(dim, &mut rng)).collect();

                let left = gamma(&gamma(&a, &bs).unwrap(), &cs).unwrap();

                let mut offset = 0;
                let mut composed_blocks = Vec::new();
                for b in &bs {
                    let slice = &cs[offset..offset + b.len()];
                    offset += b.len();
                    composed_blocks.push(gamma(b, slice).unwrap());
                }
                let right = gamma(&a, &composed_blocks).unwrap();

                assert_eq!(left, right);
                assert!(left.validate().is_ok());
            }
        }
    }

    /// The block permutation induced on `Σ n_i` letters when `sigma` permutes
    /// `k` blocks of sizes `n_0..n_{k-1}`.
    fn block_permutation(sigma: &[usize], sizes: &[usize]) -> Vec<usize> {
        let k = sigma.len();
        let offsets: Vec<usize> = sizes
            .iter()
            .scan(0, |acc, &n| {
                let here = *acc;
                *acc += n;
                Some(here)
            })
            .collect();
        // Offset of block i inside the permuted concatenation.
        let mut inverse = vec![0; k];
        for (i, &image) in sigma.iter().enumerate() {
            inverse[image] = i;
        }
        let mut permuted_offsets = vec![0; k];
        let mut acc = 0;
        for &source in &inverse {
            permuted_offsets[source] = acc;
            acc += sizes[source];
        }
        let total: usize = sizes.iter().sum();
        let mut out = vec![0; total];
        for i in 0..k {
            for t in 0..sizes[i] {
                out[offsets[i] + t] = permuted_offsets[i] + t;
            }
        }
        out
    }

    fn random_permutation(n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
        let mut p: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = rng.gen_range(0..=i);
            p.swap(i, j);
        }
        p
    }

    #[test]
    fn equivariance_on_random_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for dim in [1usize, 2] {
            for _ in 0..50 {
                let outer = random_config(dim, &mut rng);
                let sigma = random_permutation(outer.len(), &mut rng);
                let inners: Vec<_> =
                    (0..outer.len()).map(|_| random_config(dim, &mut rng)).collect();

                // γ(σ·c; x_{σ⁻¹(0)}, …) = σ̃·γ(c; x_0, …).
                let permuted_outer = sigma_action(&sigma, &outer).unwrap();
                let mut inverse = vec![0; sigma.len()];
                for (i, &image) in sigma.iter().enumerate() {
                    inverse[image] = i;
                }
                let permuted_inners: Vec<_> =
                    inverse.iter().map(|&j| inners[j].clone()).collect();
                let left = gamma(&permuted_outer, &permuted_inners).unwrap();

                let sizes: Vec<usize> = inners.iter().map(|c| c.len()).collect();
                let induced = block_permutation(&sigma, &sizes);
                let right = sigma_action(&induced, &gamma(&outer, &inners).unwrap()).unwrap();

                assert_eq!(left, right);
                assert!(left.validate().is_ok());
            }
        }
    }

    #[test]
    fn permutation_action_is_a_left_action() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..40 {
            let cfg = random_config(2, &mut rng);
            let s = random_permutation(cfg.len(), &mut rng);
            let t = random_permutation(cfg.len(), &mut rng);
            // (s·t)(i) = s(t(i)); acting by s·t equals acting by t then s.
            let st: Vec<usize> = (0..cfg.len()).map(|i| s[t[i]]).collect();
            let both = sigma_action(&st, &cfg).unwrap();
            let stepwise = sigma_action(&s, &sigma_action(&t, &cfg).unwrap()).unwrap();
            assert_eq!(both, stepwise);
            assert!(both.validate().is_ok());
        }
    }
}
