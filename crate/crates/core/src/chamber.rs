//! Walls, chambers and the alpha-stratification of line-bundle extensions.

use std::collections::BTreeMap;

use num_integer::Integer;
use num_traits::{Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::stability::{
    int, theta, AlphaParam, BundleInvariant, BundlePair, ParamTuple, Rational, StabilityError,
    Status, SubobjectWitness, Verdict, WitnessKind,
};

/// `{params : theta(params, witness) = 0}` inside the constraint hyperplane.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Wall {
    pub witness: SubobjectWitness,
    /// `(d'1, d'2, -r'1, -r'2)`, paired with `(a1, a2, tau1, tau2)`.
    pub normal: [i64; 4],
    /// Normal parallel to the constraint normal: the "wall" is everything.
    pub degenerate: bool,
}

impl Wall {
    pub fn evaluate(&self, p: &ParamTuple) -> Rational {
        theta(p, &self.witness)
    }

    /// Where the wall crosses the extension line `(1, 1, tau, tau - alpha)`,
    /// if it does so transversally.
    pub fn alpha_crossing(&self, pair: &BundlePair) -> Option<Rational> {
        let r = int(pair.total_rank() as i128);
        let rp = int(self.witness.total_rank() as i128);
        let r2 = int(pair.e2.rank as i128);
        let r2p = int(self.witness.r2() as i128);
        // theta = d' - r' D / r + alpha (r'2 - r' r2 / r)
        let slope = r2p - rp * r2 / r;
        if slope.is_zero() {
            return None;
        }
        let offset = self.witness.total_degree() - rp * pair.total_degree() / r;
        Some(-offset / slope)
    }
}

/// Wall arrangement together with the truncation radius it was computed at.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WallArrangement {
    pub degree_box: i64,
    pub walls: Vec<Wall>,
}

impl WallArrangement {
    /// Sign of theta on each wall; equal signatures mean the same chamber.
    pub fn chamber_signature(&self, p: &ParamTuple) -> Vec<i8> {
        self.walls
            .iter()
            .filter(|w| !w.degenerate)
            .map(|w| {
                let t = w.evaluate(p);
                if t.is_zero() {
                    0
                } else if t.is_positive() {
                    1
                } else {
                    -1
                }
            })
            .collect()
    }
}

/// Projective class of an integer vector: divide by gcd, make the first
/// nonzero entry positive.
fn projective_key(v: [i64; 4]) -> [i64; 4] {
    let g = v.iter().fold(0i64, |g, &x| g.gcd(&x));
    if g == 0 {
        return v;
    }
    let mut out = v.map(|x| x / g);
    if out.iter().find(|&&x| x != 0).is_some_and(|&x| x < 0) {
        out = out.map(|x| -x);
    }
    out
}

/// All walls induced by integer witnesses inside the degree box, one per
/// projective class of normal.
pub fn enumerate_walls(d1: i64, d2: i64, r1: u32, r2: u32, degree_box: i64) -> Result<WallArrangement, StabilityError> {
    if r1 == 0 || r2 == 0 {
        return Err(StabilityError::ZeroRank);
    }
    if degree_box < d1.abs().max(d2.abs()) {
        return Err(StabilityError::InvalidWitness(format!(
            "degree box {degree_box} smaller than max(|d1|, |d2|)"
        )));
    }
    let constraint = projective_key([d1, d2, -(r1 as i64), -(r2 as i64)]);
    let side = |r: u32| -> Vec<(u32, i64)> {
        let mut v = vec![(0, 0)];
        for rank in 1..=r {
            v.extend((-degree_box..=degree_box).map(|d| (rank, d)));
        }
        v
    };
    let s1 = side(r1);
    let s2 = side(r2);
    let found: Vec<([i64; 4], Wall)> = s1
        .par_iter()
        .flat_map_iter(|&(rp1, dp1)| {
            let s2 = &s2;
            s2.iter().filter_map(move |&(rp2, dp2)| {
                if rp1 == 0 && rp2 == 0 {
                    return None;
                }
                let mk = |r: u32, d: i64| (r > 0).then(|| BundleInvariant::of(r, d as i128));
                let witness = SubobjectWitness {
                    sub1: mk(rp1, dp1),
                    sub2: mk(rp2, dp2),
                    kind: WitnessKind::Subtriple,
                };
                let normal = [dp1, dp2, -(rp1 as i64), -(rp2 as i64)];
                let key = projective_key(normal);
                Some((key, Wall { witness, normal, degenerate: key == constraint }))
            })
        })
        .collect();
    // deterministic: keep the smallest-total-rank, then lexicographically first witness per class
    let mut classes: BTreeMap<[i64; 4], Wall> = BTreeMap::new();
    for (key, wall) in found {
        classes
            .entry(key)
            .and_modify(|cur| {
                let better = (wall.witness.total_rank(), wall.normal) < (cur.witness.total_rank(), cur.normal);
                if better {
                    *cur = wall.clone();
                }
            })
            .or_insert(wall);
    }
    Ok(WallArrangement { degree_box, walls: classes.into_values().collect() })
}

fn require_line_case(d1: i64, d2: i64) -> Result<(), StabilityError> {
    if d1 >= d2 {
        return Err(StabilityError::OutsideLineHypotheses { d1, d2 });
    }
    Ok(())
}

/// Boundaries `{d1 - d2, d1 - d2 + 2, ..., d2 - d1}` of the alpha-intervals.
pub fn alpha_critical_values(d1: i64, d2: i64) -> Result<Vec<Rational>, StabilityError> {
    require_line_case(d1, d2)?;
    Ok((d1 - d2..=d2 - d1).step_by(2).map(|k| int(k as i128)).collect())
}

/// Maximal degree of a line subbundle of the extension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DivisorData {
    pub div: Rational,
}

impl DivisorData {
    pub fn new(div: i64) -> Self {
        DivisorData { div: int(div as i128) }
    }

    pub fn is_trivial_extension(&self, d2: i64) -> bool {
        self.div == int(d2 as i128)
    }
}

fn check_div(d2: i64, div: &DivisorData) -> Result<(), StabilityError> {
    if div.div > int(d2 as i128) {
        return Err(StabilityError::InvalidWitness(format!("div {} exceeds d2 = {d2}", div.div)));
    }
    Ok(())
}

/// Index `k` of the stratum `(k, k + 2)` containing alpha, if alpha lies
/// strictly inside one of the intervals between critical values.
pub fn stratum_index(d1: i64, d2: i64, alpha: Rational) -> Option<i64> {
    let lo = d1 - d2;
    let hi = d2 - d1;
    if alpha <= int(lo as i128) || alpha >= int(hi as i128) {
        return None;
    }
    let offset = alpha - int(lo as i128);
    if offset.is_integer() && offset.to_integer() % 2 == 0 {
        return None;
    }
    let steps = (offset / int(2)).floor().to_integer() as i64;
    Some(lo + 2 * steps)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtensionClass {
    pub verdict: Verdict,
    /// `Ext_k` label of the interval containing alpha.
    pub stratum: Option<i64>,
}

fn line_witness_first(d1: i64) -> SubobjectWitness {
    SubobjectWitness::first(BundleInvariant::line(d1 as i128), WitnessKind::Subextension)
}

fn line_witness_second(d: Rational) -> SubobjectWitness {
    SubobjectWitness::second(
        BundleInvariant::new(1, d).expect("rank one"),
        WitnessKind::Subextension,
    )
}

/// Closed-form classification of a line-bundle extension: stable exactly on
/// `(d1 - d2, d1 + d2 - 2 div)`.
pub fn classify_extension(d1: i64, d2: i64, div: &DivisorData, alpha: Rational) -> Result<ExtensionClass, StabilityError> {
    require_line_case(d1, d2)?;
    check_div(d2, div)?;
    let (dl, dh) = (int(d1 as i128), int(d2 as i128));
    // signed defects of the two binding witnesses
    let lower = (dl - dh - alpha) / int(2);
    let upper = (alpha - (dl + dh - int(2) * div.div)) / int(2);
    let (worst, witness) = if lower >= upper {
        (lower, line_witness_first(d1))
    } else {
        (upper, line_witness_second(div.div))
    };
    let status = if worst.is_negative() {
        Status::Stable
    } else if worst.is_zero() {
        Status::StrictlySemistable
    } else {
        Status::Unstable
    };
    let verdict = Verdict {
        status,
        witness: (status != Status::Stable).then_some(witness),
        max_theta: Some(worst),
        zero_weight: false,
    };
    Ok(ExtensionClass { verdict, stratum: stratum_index(d1, d2, alpha) })
}

/// Complete witness list for line-bundle extensions: `(L1, 0)` followed by the
/// lifted lines `(0, L)` with `deg L <= div`, truncated below at the depth
/// where they can no longer bind for any alpha in the critical range.
pub fn admissible_witnesses_line_case(d1: i64, d2: i64, div: &DivisorData) -> Result<Vec<SubobjectWitness>, StabilityError> {
    require_line_case(d1, d2)?;
    check_div(d2, div)?;
    let top = div.div;
    let depth = (d2 - d1 + 2) as i128;
    let mut out = vec![line_witness_first(d1)];
    out.extend((0..=depth).map(|k| line_witness_second(top - int(k))));
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StratumAlias {
    /// All non-trivial extensions.
    AllNontrivial,
    Minus,
    Plus,
    /// Extensions whose middle term is a semistable bundle.
    Semistable,
    /// Extensions whose middle term is a stable bundle; equal to `Plus` only
    /// when `d1 - d2` is even.
    Stable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stratum {
    pub index: i64,
    pub interval: (Rational, Rational),
    pub aliases: Vec<StratumAlias>,
    /// Some extension with `d1 <= div < d2` is stable on the interval.
    pub nonempty: bool,
}

impl Stratum {
    pub fn label(&self) -> String {
        format!("Ext_{}", self.index)
    }

    /// Membership of an extension with the given `div`.
    pub fn contains(&self, d1: i64, d2: i64, div: &DivisorData) -> bool {
        self.interval.1 <= int((d1 + d2) as i128) - int(2) * div.div
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlphaStratification {
    pub critical_values: Vec<Rational>,
    pub strata: Vec<Stratum>,
    /// `(superset, subset)` pairs of stratum indices.
    pub containments: Vec<(i64, i64)>,
}

impl AlphaStratification {
    pub fn stratum(&self, index: i64) -> Option<&Stratum> {
        self.strata.iter().find(|s| s.index == index)
    }

    pub fn by_alias(&self, alias: StratumAlias) -> Option<&Stratum> {
        self.strata.iter().find(|s| s.aliases.contains(&alias))
    }
}

/// Indices of `Ext_-` and `Ext_+` under the parity convention.
pub fn plus_minus_indices(d1: i64, d2: i64) -> (i64, i64) {
    if (d1 - d2).rem_euclid(2) == 0 {
        (-2, 0)
    } else {
        (-1, 1)
    }
}

/// The descending chain `Ext_{d1-d2} ⊇ Ext_{d1-d2+2} ⊇ ... ⊇ Ext_- ⊇ Ext_+`.
pub fn strata_diagram(d1: i64, d2: i64) -> Result<AlphaStratification, StabilityError> {
    let critical_values = alpha_critical_values(d1, d2)?;
    let (minus, plus) = plus_minus_indices(d1, d2);
    let stable_index = if (d1 - d2).rem_euclid(2) == 0 { plus } else { minus };
    let first = d1 - d2;
    let last = plus.max(d2 - d1 - 2).max(first);
    let strata: Vec<Stratum> = (first..=last)
        .step_by(2)
        .map(|k| {
            let mut aliases = Vec::new();
            if k == first {
                aliases.push(StratumAlias::AllNontrivial);
            }
            if k == minus {
                aliases.extend([StratumAlias::Minus, StratumAlias::Semistable]);
            }
            if k == plus {
                aliases.push(StratumAlias::Plus);
            }
            // stable bundles: d1 + d2 - 2 div > 0. For odd d1 - d2 the sum is
            // odd, so this coincides with semistability and lands on Ext_-.
            if k == stable_index {
                aliases.push(StratumAlias::Stable);
            }
            Stratum {
                index: k,
                interval: (int(k as i128), int((k + 2) as i128)),
                aliases,
                nonempty: k + 2 <= d2 - d1,
            }
        })
        .collect();
    let containments = strata.windows(2).map(|w| (w[0].index, w[1].index)).collect();
    Ok(AlphaStratification { critical_values, strata, containments })
}

/// Alpha for the extension-viewpoint verdict at a given stratum midpoint.
pub fn stratum_midpoint(index: i64) -> Rational {
    int((index + 1) as i128)
}

/// Convenience: the pair and alpha parameter for a line-bundle extension.
pub fn line_alpha_params(d1: i64, d2: i64, alpha: Rational) -> (BundlePair, AlphaParam) {
    let pair = BundlePair::lines(d1 as i128, d2 as i128);
    let p = AlphaParam::new(alpha, &pair);
    (pair, p)
}
