//! Exact-arithmetic stability theory for extensions and cohomology triples.
//!
//! Everything here works on numerical invariants only: ranks, degrees and the
//! four weights `(a1, a2, tau1, tau2)`. No floating point is involved, so wall
//! membership (`theta == 0`) is decided exactly.

use std::cmp::Ordering;
use std::fmt;

use num_rational::Ratio;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Exact rational used throughout the combinatorial layer.
pub type Rational = Ratio<i128>;

pub fn rat(n: i128, d: i128) -> Rational {
    Rational::new(n, d)
}

pub fn int(n: i128) -> Rational {
    Rational::from_integer(n)
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StabilityError {
    #[error("empty subobject")]
    EmptySubobject,
    #[error("parameters off the constraint hyperplane (defect {0})")]
    OffConstraint(Rational),
    #[error("negative weight a{0}")]
    NegativeWeight(u8),
    #[error("invalid witness: {0}")]
    InvalidWitness(String),
    #[error("bundle rank must be at least 1")]
    ZeroRank,
    #[error("region undefined: a1 = 0")]
    RegionUndefined,
    #[error("parameters have no extension (alpha) form: {0}")]
    NotExtensionForm(String),
    #[error("inconsistent exact-sequence arithmetic: {0}")]
    InconsistentSequence(String),
    #[error("outside line-bundle hypotheses: need d1 < d2, got d1 = {d1}, d2 = {d2}")]
    OutsideLineHypotheses { d1: i64, d2: i64 },
    #[error("filtration gaps must be positive")]
    NonPositiveGap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BundleInvariant {
    pub rank: u32,
    pub degree: Rational,
}

impl BundleInvariant {
    pub fn new(rank: u32, degree: Rational) -> Result<Self, StabilityError> {
        if rank == 0 {
            return Err(StabilityError::ZeroRank);
        }
        Ok(BundleInvariant { rank, degree })
    }

    /// Shorthand for integer degrees; panics on rank zero.
    pub fn line(degree: i128) -> Self {
        BundleInvariant { rank: 1, degree: int(degree) }
    }

    pub fn of(rank: u32, degree: i128) -> Self {
        Self::new(rank, int(degree)).expect("rank must be positive")
    }

    pub fn slope(&self) -> Rational {
        self.degree / int(self.rank as i128)
    }
}

impl fmt::Display for BundleInvariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(r={}, d={})", self.rank, self.degree)
    }
}

/// The pair `(E1, E2)` an object is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BundlePair {
    pub e1: BundleInvariant,
    pub e2: BundleInvariant,
}

impl BundlePair {
    pub fn new(e1: BundleInvariant, e2: BundleInvariant) -> Self {
        BundlePair { e1, e2 }
    }

    pub fn lines(d1: i128, d2: i128) -> Self {
        BundlePair { e1: BundleInvariant::line(d1), e2: BundleInvariant::line(d2) }
    }

    pub fn total_rank(&self) -> u32 {
        self.e1.rank + self.e2.rank
    }

    pub fn total_degree(&self) -> Rational {
        self.e1.degree + self.e2.degree
    }

    /// The full object as a witness.
    pub fn full(&self, kind: WitnessKind) -> SubobjectWitness {
        SubobjectWitness { sub1: Some(self.e1), sub2: Some(self.e2), kind }
    }
}

/// Weights `(a1, a2, tau1, tau2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamTuple {
    pub a1: Rational,
    pub a2: Rational,
    pub tau1: Rational,
    pub tau2: Rational,
}

impl ParamTuple {
    pub fn new(a1: Rational, a2: Rational, tau1: Rational, tau2: Rational) -> Self {
        ParamTuple { a1, a2, tau1, tau2 }
    }

    /// `a1 d1 + a2 d2 - tau1 r1 - tau2 r2` for the pair; zero on the constraint hyperplane.
    pub fn constraint_defect(&self, pair: &BundlePair) -> Rational {
        theta_raw(self, pair.e1.rank, pair.e1.degree, pair.e2.rank, pair.e2.degree)
    }

    pub fn check(&self, pair: &BundlePair) -> Result<(), StabilityError> {
        if self.a1.is_negative() {
            return Err(StabilityError::NegativeWeight(1));
        }
        if self.a2.is_negative() {
            return Err(StabilityError::NegativeWeight(2));
        }
        let defect = self.constraint_defect(pair);
        if !defect.is_zero() {
            return Err(StabilityError::OffConstraint(defect));
        }
        Ok(())
    }

    pub fn scaled(&self, lambda: Rational) -> Self {
        ParamTuple {
            a1: self.a1 * lambda,
            a2: self.a2 * lambda,
            tau1: self.tau1 * lambda,
            tau2: self.tau2 * lambda,
        }
    }

    pub fn has_zero_weight(&self) -> bool {
        self.a1.is_zero() || self.a2.is_zero()
    }
}

impl fmt::Display for ParamTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {}, {})", self.a1, self.a2, self.tau1, self.tau2)
    }
}

/// Extension-viewpoint parameter `alpha = tau1 - tau2`, with `tau` fixed by
/// `d1 + d2 = r1 tau + r2 (tau - alpha)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlphaParam {
    pub alpha: Rational,
    pub tau: Rational,
}

impl AlphaParam {
    pub fn new(alpha: Rational, pair: &BundlePair) -> Self {
        let r1 = int(pair.e1.rank as i128);
        let r2 = int(pair.e2.rank as i128);
        let tau = (pair.total_degree() + r2 * alpha) / (r1 + r2);
        AlphaParam { alpha, tau }
    }

    pub fn tau2(&self) -> Rational {
        self.tau - self.alpha
    }

    /// The equivalent `(1, 1, tau, tau - alpha)` tuple.
    pub fn to_tuple(&self) -> ParamTuple {
        ParamTuple::new(int(1), int(1), self.tau, self.tau2())
    }

    /// Inverse of [`AlphaParam::to_tuple`]; requires `a1 = a2 > 0`.
    pub fn from_tuple(p: &ParamTuple) -> Result<Self, StabilityError> {
        if p.a1 != p.a2 || !p.a1.is_positive() {
            return Err(StabilityError::NotExtensionForm(format!(
                "need a1 = a2 > 0, got {p}"
            )));
        }
        let tau = p.tau1 / p.a1;
        let alpha = (p.tau1 - p.tau2) / p.a1;
        Ok(AlphaParam { alpha, tau })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WitnessKind {
    Subtriple,
    SurjectiveSubtriple,
    Subextension,
}

/// Numerical invariants of a candidate destabilizing subobject `(E'1, E'2)`.
/// `None` stands for the zero sheaf.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SubobjectWitness {
    pub sub1: Option<BundleInvariant>,
    pub sub2: Option<BundleInvariant>,
    pub kind: WitnessKind,
}

impl SubobjectWitness {
    pub fn new(
        sub1: Option<BundleInvariant>,
        sub2: Option<BundleInvariant>,
        kind: WitnessKind,
    ) -> Result<Self, StabilityError> {
        if sub1.is_none() && sub2.is_none() {
            return Err(StabilityError::EmptySubobject);
        }
        Ok(SubobjectWitness { sub1, sub2, kind })
    }

    /// `(E'1, 0)`.
    pub fn first(e: BundleInvariant, kind: WitnessKind) -> Self {
        SubobjectWitness { sub1: Some(e), sub2: None, kind }
    }

    /// `(0, E'2)`.
    pub fn second(e: BundleInvariant, kind: WitnessKind) -> Self {
        SubobjectWitness { sub1: None, sub2: Some(e), kind }
    }

    pub fn r1(&self) -> u32 {
        self.sub1.map_or(0, |b| b.rank)
    }
    pub fn r2(&self) -> u32 {
        self.sub2.map_or(0, |b| b.rank)
    }
    pub fn d1(&self) -> Rational {
        self.sub1.map_or_else(Rational::zero, |b| b.degree)
    }
    pub fn d2(&self) -> Rational {
        self.sub2.map_or_else(Rational::zero, |b| b.degree)
    }
    pub fn total_rank(&self) -> u32 {
        self.r1() + self.r2()
    }
    pub fn total_degree(&self) -> Rational {
        self.d1() + self.d2()
    }

    pub fn is_full(&self, pair: &BundlePair) -> bool {
        self.sub1 == Some(pair.e1) && self.sub2 == Some(pair.e2)
    }

    /// Rank bounds relative to the ambient pair.
    pub fn validate(&self, pair: &BundlePair) -> Result<(), StabilityError> {
        if self.sub1.is_none() && self.sub2.is_none() {
            return Err(StabilityError::EmptySubobject);
        }
        if self.r1() > pair.e1.rank || self.r2() > pair.e2.rank {
            return Err(StabilityError::InvalidWitness(format!(
                "ranks ({}, {}) exceed ambient ({}, {})",
                self.r1(),
                self.r2(),
                pair.e1.rank,
                pair.e2.rank
            )));
        }
        if self.sub1.is_some_and(|b| b.rank == 0) || self.sub2.is_some_and(|b| b.rank == 0) {
            return Err(StabilityError::InvalidWitness("zero rank side must be None".into()));
        }
        Ok(())
    }

    /// Image under the subtriple -> surjective-subtriple correspondence:
    /// `(E'1, E'2)` maps to `(E'2, E')` with `E' = E'1 + E'2` numerically.
    pub fn to_surjective(&self) -> SurjectiveWitness {
        SurjectiveWitness {
            quotient_rank: self.r2(),
            quotient_degree: self.d2(),
            total_rank: self.total_rank(),
            total_degree: self.total_degree(),
        }
    }
}

impl fmt::Display for SubobjectWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let side = |s: &Option<BundleInvariant>| match s {
            Some(b) => b.to_string(),
            None => "0".to_string(),
        };
        write!(f, "[{}, {}]", side(&self.sub1), side(&self.sub2))
    }
}

/// Subobject `(E'2, E')` of a surjective triple `(E2, E, pi)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurjectiveWitness {
    pub quotient_rank: u32,
    pub quotient_degree: Rational,
    pub total_rank: u32,
    pub total_degree: Rational,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Status {
    Stable,
    StrictlySemistable,
    Unstable,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Status::Stable => "Stable",
            Status::StrictlySemistable => "StrictlySemistable",
            Status::Unstable => "Unstable",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub status: Status,
    /// Maximizing destabilizer; present iff status is not `Stable`.
    pub witness: Option<SubobjectWitness>,
    /// Largest theta over the declared list (None for an empty list).
    pub max_theta: Option<Rational>,
    /// Set when one of the weights is zero (allowed, but outside the strict
    /// positivity some statements assume).
    pub zero_weight: bool,
}

fn theta_raw(p: &ParamTuple, r1: u32, d1: Rational, r2: u32, d2: Rational) -> Rational {
    p.a1 * d1 + p.a2 * d2 - p.tau1 * int(r1 as i128) - p.tau2 * int(r2 as i128)
}

/// Defect function `a1 d'1 + a2 d'2 - tau1 r'1 - tau2 r'2`.
pub fn theta(params: &ParamTuple, sub: &SubobjectWitness) -> Rational {
    theta_raw(params, sub.r1(), sub.d1(), sub.r2(), sub.d2())
}

/// Defect function of a surjective subtriple `(E'2, E')`: the weights
/// `(a1, tau1)` go with the quotient side and `(a2, tau2)` with the subsheaf of `E`.
pub fn theta_surjective(params: &ParamTuple, sub: &SurjectiveWitness) -> Rational {
    theta_raw(
        params,
        sub.quotient_rank,
        sub.quotient_degree,
        sub.total_rank,
        sub.total_degree,
    )
}

/// `mu(E') + alpha * r'2 / r'`.
pub fn alpha_slope(
    sub1: Option<&BundleInvariant>,
    sub2: Option<&BundleInvariant>,
    alpha: Rational,
) -> Result<Rational, StabilityError> {
    let r1 = sub1.map_or(0, |b| b.rank) as i128;
    let r2 = sub2.map_or(0, |b| b.rank) as i128;
    let r = r1 + r2;
    if r == 0 {
        return Err(StabilityError::EmptySubobject);
    }
    let d = sub1.map_or_else(Rational::zero, |b| b.degree) + sub2.map_or_else(Rational::zero, |b| b.degree);
    Ok(d / int(r) + alpha * int(r2) / int(r))
}

pub fn witness_alpha_slope(w: &SubobjectWitness, alpha: Rational) -> Result<Rational, StabilityError> {
    alpha_slope(w.sub1.as_ref(), w.sub2.as_ref(), alpha)
}

/// Either parameterization accepted by [`verdict`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StabilityParams {
    Tuple(ParamTuple),
    Alpha(AlphaParam),
}

impl StabilityParams {
    pub fn tuple(&self) -> ParamTuple {
        match self {
            StabilityParams::Tuple(p) => *p,
            StabilityParams::Alpha(a) => a.to_tuple(),
        }
    }
}

/// Pick the maximizing witness from scored candidates; ties go to larger total rank.
fn decide(scored: impl Iterator<Item = (Rational, SubobjectWitness)>, zero_weight: bool) -> Verdict {
    let mut best: Option<(Rational, SubobjectWitness)> = None;
    for (t, w) in scored {
        best = match best {
            None => Some((t, w)),
            Some((bt, bw)) => match t.cmp(&bt).then(w.total_rank().cmp(&bw.total_rank())) {
                Ordering::Greater => Some((t, w)),
                _ => Some((bt, bw)),
            },
        };
    }
    match best {
        None => Verdict { status: Status::Stable, witness: None, max_theta: None, zero_weight },
        Some((t, w)) => {
            let status = match t.cmp(&Rational::zero()) {
                Ordering::Less => Status::Stable,
                Ordering::Equal => Status::StrictlySemistable,
                Ordering::Greater => Status::Unstable,
            };
            let witness = (status != Status::Stable).then_some(w);
            Verdict { status, witness, max_theta: Some(t), zero_weight }
        }
    }
}

/// Stability verdict over a caller-declared list of proper subobjects.
///
/// Witnesses equal to the full object are skipped; completeness of the list is
/// the caller's responsibility.
pub fn verdict(
    params: StabilityParams,
    pair: &BundlePair,
    subobjects: &[SubobjectWitness],
) -> Result<Verdict, StabilityError> {
    let p = params.tuple();
    p.check(pair)?;
    for w in subobjects {
        w.validate(pair)?;
    }
    let scored = subobjects
        .iter()
        .filter(|w| !w.is_full(pair))
        .map(|w| (theta(&p, w), *w));
    Ok(decide(scored, p.has_zero_weight()))
}

/// Extension-viewpoint verdict computed by comparing alpha-slopes directly,
/// independently of the theta route.
pub fn verdict_by_alpha_slope(
    alpha: Rational,
    pair: &BundlePair,
    subobjects: &[SubobjectWitness],
) -> Result<Verdict, StabilityError> {
    let full = alpha_slope(Some(&pair.e1), Some(&pair.e2), alpha)?;
    let mut scored = Vec::with_capacity(subobjects.len());
    for w in subobjects {
        w.validate(pair)?;
        if w.is_full(pair) {
            continue;
        }
        // theta = r' (mu_alpha(e') - mu_alpha(e)), same sign, same scale
        let mu = witness_alpha_slope(w, alpha)?;
        scored.push((int(w.total_rank() as i128) * (mu - full), *w));
    }
    Ok(decide(scored.into_iter(), false))
}

/// Surjective-triple verdict for the image of each subtriple under the
/// subobject correspondence.
pub fn verdict_surjective(
    params: &ParamTuple,
    pair: &BundlePair,
    subobjects: &[SubobjectWitness],
) -> Result<Verdict, StabilityError> {
    let e_total = SurjectiveWitness {
        quotient_rank: pair.e2.rank,
        quotient_degree: pair.e2.degree,
        total_rank: pair.total_rank(),
        total_degree: pair.total_degree(),
    };
    let defect = theta_surjective(params, &e_total);
    if !defect.is_zero() {
        return Err(StabilityError::OffConstraint(defect));
    }
    let mut scored = Vec::with_capacity(subobjects.len());
    for w in subobjects {
        w.validate(pair)?;
        if w.is_full(pair) {
            continue;
        }
        scored.push((theta_surjective(params, &w.to_surjective()), *w));
    }
    Ok(decide(scored.into_iter(), params.has_zero_weight()))
}

/// Half-open interval `(lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpenClosedInterval {
    pub lo: Rational,
    pub hi: Rational,
}

impl OpenClosedInterval {
    pub fn is_empty(&self) -> bool {
        self.lo >= self.hi
    }

    pub fn contains(&self, x: Rational) -> bool {
        self.lo < x && x <= self.hi
    }
}

/// `(mu(E1) - mu(E2), 0]`: the window where alpha-stability and solvability
/// through the convex functional can coexist.
pub fn alpha_necessary_interval(pair: &BundlePair) -> OpenClosedInterval {
    OpenClosedInterval { lo: pair.e1.slope() - pair.e2.slope(), hi: Rational::zero() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Viewpoint {
    Extension,
    CohomologyTriple,
    SurjectiveTriple,
}

/// Parameters expressed in one of the three viewpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ViewpointParams {
    Extension { alpha: Rational },
    CohomologyTriple(ParamTuple),
    SurjectiveTriple(ParamTuple),
}

impl ViewpointParams {
    pub fn viewpoint(&self) -> Viewpoint {
        match self {
            ViewpointParams::Extension { .. } => Viewpoint::Extension,
            ViewpointParams::CohomologyTriple(_) => Viewpoint::CohomologyTriple,
            ViewpointParams::SurjectiveTriple(_) => Viewpoint::SurjectiveTriple,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AllViewpoints {
    pub alpha: AlphaParam,
    pub cohomology: ParamTuple,
    pub surjective: ParamTuple,
}

/// Cohomology-triple weights to surjective-triple weights: `(a2 - a1, a1, tau2 - tau1, tau1)`.
pub fn cohomology_to_surjective(p: &ParamTuple) -> ParamTuple {
    ParamTuple::new(p.a2 - p.a1, p.a1, p.tau2 - p.tau1, p.tau1)
}

pub fn surjective_to_cohomology(p: &ParamTuple) -> ParamTuple {
    ParamTuple::new(p.a2, p.a1 + p.a2, p.tau2, p.tau1 + p.tau2)
}

/// Express parameters in all three viewpoints. Cohomology and surjective
/// tuples must have equal (resp. zero first) weights to admit an alpha form;
/// they are normalized to unit weight first.
pub fn convert_params(source: ViewpointParams, pair: &BundlePair) -> Result<AllViewpoints, StabilityError> {
    let alpha = match source {
        ViewpointParams::Extension { alpha } => AlphaParam::new(alpha, pair),
        ViewpointParams::CohomologyTriple(p) => {
            p.check(pair)?;
            AlphaParam::from_tuple(&p)?
        }
        ViewpointParams::SurjectiveTriple(p) => {
            if !p.a1.is_zero() || !p.a2.is_positive() {
                return Err(StabilityError::NotExtensionForm(format!(
                    "surjective weights must be (0, b, ., .) with b > 0, got {p}"
                )));
            }
            let coh = surjective_to_cohomology(&p);
            coh.check(pair)?;
            AlphaParam::from_tuple(&coh)?
        }
    };
    let cohomology = alpha.to_tuple();
    Ok(AllViewpoints { alpha, cohomology, surjective: cohomology_to_surjective(&cohomology) })
}

/// Verdicts in the three viewpoints, each computed by its own route.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThreeWayVerdict {
    pub params: AllViewpoints,
    pub extension: Verdict,
    pub cohomology: Verdict,
    pub surjective: Verdict,
}

impl ThreeWayVerdict {
    pub fn agree(&self) -> bool {
        self.extension.status == self.cohomology.status
            && self.cohomology.status == self.surjective.status
    }
}

pub fn verdict_all_viewpoints(
    alpha: Rational,
    pair: &BundlePair,
    subobjects: &[SubobjectWitness],
) -> Result<ThreeWayVerdict, StabilityError> {
    let params = convert_params(ViewpointParams::Extension { alpha }, pair)?;
    Ok(ThreeWayVerdict {
        extension: verdict_by_alpha_slope(alpha, pair, subobjects)?,
        cohomology: verdict(StabilityParams::Tuple(params.cohomology), pair, subobjects)?,
        surjective: verdict_surjective(&params.surjective, pair, subobjects)?,
        params,
    })
}

/// Both sides of `theta_{a1,a2,tau1,tau2}(E'1, E'2) = theta_{a2-a1,a1,tau2-tau1,tau1}(E'2, E')`.
pub fn theta_swap_identity(params: &ParamTuple, sub: &SubobjectWitness) -> (Rational, Rational) {
    let lhs = theta(params, sub);
    let rhs = theta_surjective(&cohomology_to_surjective(params), &sub.to_surjective());
    (lhs, rhs)
}

/// Invariants of the sheaves in the two exact sequences relating a
/// non-surjective subtriple `(E'2, E')` to its surjective neighbours.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitInput {
    /// Subsheaf `E'` of `E`.
    pub sub_total: BundleInvariant,
    /// Subsheaf `E'2` of `E2`.
    pub sub_quotient: BundleInvariant,
    /// `Ker(pi')`, `None` when zero.
    pub kernel: Option<BundleInvariant>,
    /// `pi'(E')`, `None` when zero.
    pub image: Option<BundleInvariant>,
    /// `pi^{-1}(E'2)`.
    pub preimage: BundleInvariant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitRecord {
    /// `2 theta(E'2, E')`.
    pub twice_theta: Rational,
    /// `theta(pi'(E'), E')`.
    pub theta_image: Rational,
    /// `theta(E'2, pi^{-1}(E'2))`.
    pub theta_preimage: Rational,
    pub delta_d: Rational,
    pub delta_r: i64,
    /// `(a1 - a2) delta_d + (tau2 - tau1) delta_r`.
    pub correction: Rational,
}

impl SplitRecord {
    pub fn holds(&self) -> bool {
        self.twice_theta == self.theta_image + self.theta_preimage + self.correction
    }
}

fn rd(b: Option<BundleInvariant>) -> (i64, Rational) {
    b.map_or((0, Rational::zero()), |b| (b.rank as i64, b.degree))
}

/// Decompose `2 theta` of a subtriple into the two surjective subtriples built
/// from image and preimage, plus the correction term.
pub fn surjective_split(params: &ParamTuple, input: &SplitInput) -> Result<SplitRecord, StabilityError> {
    let (rk, dk) = rd(input.kernel);
    let (ri, di) = rd(input.image);
    let (rt, dt) = rd(Some(input.sub_total));
    let (rq, dq) = rd(Some(input.sub_quotient));
    let (rp, dp) = rd(Some(input.preimage));
    if rt != rk + ri || dt != dk + di {
        return Err(StabilityError::InconsistentSequence(
            "E' must be an extension of pi'(E') by Ker(pi')".into(),
        ));
    }
    if rp != rk + rq || dp != dk + dq {
        return Err(StabilityError::InconsistentSequence(
            "pi^-1(E'2) must be an extension of E'2 by Ker(pi')".into(),
        ));
    }
    if ri > rq {
        return Err(StabilityError::InconsistentSequence(
            "image rank exceeds rank of E'2".into(),
        ));
    }
    let sw = |q: (i64, Rational), t: (i64, Rational)| SurjectiveWitness {
        quotient_rank: q.0 as u32,
        quotient_degree: q.1,
        total_rank: t.0 as u32,
        total_degree: t.1,
    };
    let th = theta_surjective(params, &sw((rq, dq), (rt, dt)));
    let theta_image = theta_surjective(params, &sw((ri, di), (rt, dt)));
    let theta_preimage = theta_surjective(params, &sw((rq, dq), (rp, dp)));
    let delta_d = dp - dt;
    let delta_r = rp - rt;
    debug_assert!(delta_r >= 0);
    let correction = (params.a1 - params.a2) * delta_d + (params.tau2 - params.tau1) * int(delta_r as i128);
    Ok(SplitRecord {
        twice_theta: int(2) * th,
        theta_image,
        theta_preimage,
        delta_d,
        delta_r,
        correction,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpsilonRegionReport {
    /// `tau1 / a1 - mu(E1)`.
    pub gap: Rational,
    /// Stable objects cannot exist unless `tau1 / a1 > mu(E1)`.
    pub stable_set_empty: bool,
    pub in_region: bool,
}

/// Position of the parameters relative to the region where stable objects
/// force semistable `E1`, `E2`.
pub fn epsilon_region_report(
    pair: &BundlePair,
    params: &ParamTuple,
    eps1: Rational,
    eps2: Rational,
) -> Result<EpsilonRegionReport, StabilityError> {
    if params.a1.is_zero() {
        return Err(StabilityError::RegionUndefined);
    }
    let gap = params.tau1 / params.a1 - pair.e1.slope();
    let in_region = !params.a2.is_zero()
        && gap.is_positive()
        && gap < eps1
        && gap < (params.a2 / params.a1) * eps2;
    Ok(EpsilonRegionReport { gap, stable_set_empty: !gap.is_positive(), in_region })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ext(w1: Option<i128>, w2: Option<i128>) -> SubobjectWitness {
        SubobjectWitness {
            sub1: w1.map(BundleInvariant::line),
            sub2: w2.map(BundleInvariant::line),
            kind: WitnessKind::Subextension,
        }
    }

    #[test]
    fn theta_vanishes_on_full_object() {
        let pair = BundlePair::lines(0, 1);
        let p = ParamTuple::new(int(1), int(1), int(0), int(1));
        p.check(&pair).unwrap();
        assert_eq!(theta(&p, &pair.full(WitnessKind::Subtriple)), int(0));
    }

    #[test]
    fn theta_on_first_factor_matches_slope_form() {
        let p = ParamTuple::new(int(1), int(1), rat(3, 4), rat(1, 4));
        let w = ext(Some(0), None);
        assert_eq!(theta(&p, &w), -p.tau1);
        // a1 r'1 (mu - tau1/a1)
        assert_eq!(theta(&p, &w), p.a1 * (int(0) - p.tau1 / p.a1));
    }

    #[test]
    fn alpha_slope_examples() {
        let l1 = BundleInvariant::line(-2);
        let l = BundleInvariant::line(5);
        let a = rat(-1, 3);
        assert_eq!(alpha_slope(Some(&l1), None, a).unwrap(), int(-2));
        assert_eq!(alpha_slope(None, Some(&l), a).unwrap(), int(5) + a);
        let l2 = BundleInvariant::line(1);
        assert_eq!(alpha_slope(Some(&l1), Some(&l2), int(0)).unwrap(), rat(-1, 2));
        assert_eq!(alpha_slope(None, None, a), Err(StabilityError::EmptySubobject));
    }

    #[test]
    fn nontrivial_line_extension_stable_in_first_window() {
        let pair = BundlePair::lines(0, 1);
        // div = d2 - 1 = 0: lifted lines of degree <= 0
        let mut ws = vec![ext(Some(0), None)];
        ws.extend((-4..=0).map(|d| ext(None, Some(d))));
        let v = verdict(StabilityParams::Alpha(AlphaParam::new(int(0), &pair)), &pair, &ws).unwrap();
        assert_eq!(v.status, Status::Stable);
        assert!(v.witness.is_none());
    }

    #[test]
    fn split_extension_destabilized_by_second_factor() {
        let pair = BundlePair::lines(0, 1);
        let ws = vec![ext(Some(0), None), ext(None, Some(1))];
        for alpha in [rat(-1, 2), int(0), rat(1, 2)] {
            let v = verdict(StabilityParams::Alpha(AlphaParam::new(alpha, &pair)), &pair, &ws).unwrap();
            assert_eq!(v.status, Status::Unstable);
            assert_eq!(v.witness, Some(ext(None, Some(1))));
        }
    }

    #[test]
    fn boundary_alpha_is_strictly_semistable() {
        let pair = BundlePair::lines(0, 1);
        let ws = vec![ext(Some(0), None), ext(None, Some(0))];
        let v = verdict(StabilityParams::Alpha(AlphaParam::new(int(-1), &pair)), &pair, &ws).unwrap();
        assert_eq!(v.status, Status::StrictlySemistable);
        assert_eq!(v.witness, Some(ext(Some(0), None)));
        assert_eq!(v.max_theta, Some(int(0)));
    }

    #[test]
    fn verdict_rejects_off_constraint_params() {
        let pair = BundlePair::lines(0, 1);
        let p = ParamTuple::new(int(1), int(1), int(0), int(0));
        let err = verdict(StabilityParams::Tuple(p), &pair, &[]).unwrap_err();
        assert!(matches!(err, StabilityError::OffConstraint(_)));
        assert_eq!(err.to_string(), "parameters off the constraint hyperplane (defect 1)");
    }

    #[test]
    fn verdict_rejects_oversized_witness() {
        let pair = BundlePair::lines(0, 1);
        let w = SubobjectWitness::first(BundleInvariant::of(2, 0), WitnessKind::Subtriple);
        let p = AlphaParam::new(int(0), &pair);
        assert!(matches!(
            verdict(StabilityParams::Alpha(p), &pair, &[w]),
            Err(StabilityError::InvalidWitness(_))
        ));
    }

    #[test]
    fn tie_break_prefers_larger_rank() {
        let pair = BundlePair::new(BundleInvariant::of(2, 0), BundleInvariant::of(1, 0));
        let p = AlphaParam::new(int(0), &pair).to_tuple();
        // both theta = 0
        let small = SubobjectWitness::first(BundleInvariant::of(1, 0), WitnessKind::Subtriple);
        let big = SubobjectWitness::first(BundleInvariant::of(2, 0), WitnessKind::Subtriple);
        let v = verdict(StabilityParams::Tuple(p), &pair, &[small, big]).unwrap();
        assert_eq!(v.witness, Some(big));
        let v = verdict(StabilityParams::Tuple(p), &pair, &[big, small]).unwrap();
        assert_eq!(v.witness, Some(big));
    }

    #[test]
    fn zero_weight_flagged() {
        let pair = BundlePair::lines(-1, 0);
        let surj = convert_params(ViewpointParams::Extension { alpha: rat(-1, 2) }, &pair).unwrap().surjective;
        assert!(surj.has_zero_weight());
        let v = verdict_surjective(&surj, &pair, &[ext(Some(-1), None)]).unwrap();
        assert!(v.zero_weight);
    }

    #[test]
    fn necessary_interval_examples() {
        let i = alpha_necessary_interval(&BundlePair::lines(-1, 0));
        assert_eq!((i.lo, i.hi), (int(-1), int(0)));
        assert!(i.contains(rat(-1, 2)) && i.contains(int(0)) && !i.contains(int(-1)));
        assert!(alpha_necessary_interval(&BundlePair::lines(2, 2)).is_empty());
        let i = alpha_necessary_interval(&BundlePair::lines(0, 3));
        assert_eq!((i.lo, i.hi), (int(-3), int(0)));
    }

    #[test]
    fn convert_params_worked_example() {
        let pair = BundlePair::lines(-1, 0);
        let all = convert_params(ViewpointParams::Extension { alpha: rat(-1, 2) }, &pair).unwrap();
        assert_eq!(all.cohomology, ParamTuple::new(int(1), int(1), rat(-3, 4), rat(-1, 4)));
        assert_eq!(all.surjective, ParamTuple::new(int(0), int(1), rat(1, 2), rat(-3, 4)));
        let back = convert_params(ViewpointParams::SurjectiveTriple(all.surjective), &pair).unwrap();
        assert_eq!(back, all);
        let back = convert_params(ViewpointParams::CohomologyTriple(all.cohomology.scaled(int(7))), &pair).unwrap();
        assert_eq!(back, all);
    }

    #[test]
    fn alpha_zero_gives_equal_taus() {
        let pair = BundlePair::new(BundleInvariant::of(2, 3), BundleInvariant::of(1, 5));
        let all = convert_params(ViewpointParams::Extension { alpha: int(0) }, &pair).unwrap();
        let mu = pair.total_degree() / int(3);
        assert_eq!(all.cohomology.tau1, mu);
        assert_eq!(all.cohomology.tau2, mu);
    }

    #[test]
    fn convert_rejects_unequal_weights() {
        let pair = BundlePair::lines(0, 0);
        let p = ParamTuple::new(int(1), int(2), int(0), int(0));
        assert!(matches!(
            convert_params(ViewpointParams::CohomologyTriple(p), &pair),
            Err(StabilityError::NotExtensionForm(_))
        ));
    }

    #[test]
    fn swap_identity_with_zero_second_factor() {
        let p = ParamTuple::new(int(2), int(3), rat(1, 2), rat(5, 3));
        let w = SubobjectWitness::first(BundleInvariant::of(2, 7), WitnessKind::Subtriple);
        let (l, r) = theta_swap_identity(&p, &w);
        assert_eq!(l, r);
        assert_eq!(l, int(2) * int(7) - rat(1, 2) * int(2));
    }

    #[test]
    fn split_degenerates_for_surjective_witness() {
        let p = ParamTuple::new(int(0), int(1), rat(1, 2), rat(-3, 4));
        let e2p = BundleInvariant::of(1, -1);
        let input = SplitInput {
            sub_total: BundleInvariant::of(2, -2),
            sub_quotient: e2p,
            kernel: Some(BundleInvariant::of(1, -1)),
            image: Some(e2p),
            preimage: BundleInvariant::of(2, -2),
        };
        let rec = surjective_split(&p, &input).unwrap();
        assert_eq!(rec.delta_d, int(0));
        assert_eq!(rec.delta_r, 0);
        assert_eq!(rec.theta_image, rec.theta_preimage);
        assert!(rec.holds());
    }

    #[test]
    fn split_rejects_inconsistent_ranks() {
        let p = ParamTuple::new(int(1), int(1), int(0), int(0));
        let input = SplitInput {
            sub_total: BundleInvariant::of(2, 0),
            sub_quotient: BundleInvariant::of(1, 0),
            kernel: Some(BundleInvariant::of(1, 0)),
            image: None,
            preimage: BundleInvariant::of(2, 0),
        };
        assert!(matches!(surjective_split(&p, &input), Err(StabilityError::InconsistentSequence(_))));
    }

    #[test]
    fn epsilon_region_cases() {
        let pair = BundlePair::new(BundleInvariant::of(2, 1), BundleInvariant::of(1, 0));
        let mu1 = pair.e1.slope();
        let eps1 = rat(1, 10);
        let eps2 = rat(1, 10);
        let make = |tau1: Rational, a2: Rational| {
            let tau2 = (pair.e1.degree + a2 * pair.e2.degree - tau1 * int(2)) / int(1);
            ParamTuple::new(int(1), a2, tau1, tau2)
        };
        let r = epsilon_region_report(&pair, &make(mu1, int(1)), eps1, eps2).unwrap();
        assert!(r.stable_set_empty && !r.in_region);
        let r = epsilon_region_report(&pair, &make(mu1 + eps1 / int(2), int(100)), eps1, eps2).unwrap();
        assert!(!r.stable_set_empty && r.in_region);
        let r = epsilon_region_report(&pair, &make(mu1 + eps1, int(100)), eps1, eps2).unwrap();
        assert!(!r.in_region);
        let z = ParamTuple::new(int(0), int(1), int(0), int(0));
        assert_eq!(epsilon_region_report(&pair, &z, eps1, eps2), Err(StabilityError::RegionUndefined));
    }
}
