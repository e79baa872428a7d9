//! Balls, the density function `f_a(ε) = μ(B_ε(a)) / ε^q`, the
//! concentration of mass `C_r(a) = ∫_r^∞ f_a dν` and the density map used to
//! flag entities whose local density is unexpectedly high or low.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::SquareMatrix;

pub const DEFAULT_Z_THRESHOLD: f64 = 2.0;

/// Consistency constant of the MAD for normally distributed data.
const MAD_SCALE: f64 = 1.4826;
/// Consistency constant of the mean absolute deviation, used when MAD = 0.
const MEAN_AD_SCALE: f64 = 1.253314;

/// `B_eps(a) = { b : d(a, b) < eps }`, in ordinal order.
pub fn ball(d: &SquareMatrix, a: usize, eps: f64) -> Result<Vec<usize>> {
    check_index(d, a)?;
    if !(eps > 0.0) {
        return Err(Error::Parameter(format!("ball radius must be positive, got {eps}")));
    }
    Ok((0..d.order()).filter(|&b| d.get(a, b) < eps).collect())
}

fn check_index(d: &SquareMatrix, a: usize) -> Result<()> {
    if a >= d.order() {
        return Err(Error::Index {
            index: a,
            len: d.order(),
        });
    }
    Ok(())
}

/// Distances from one entity to every entity, sorted, with the mass of
/// each entity attached.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityProfile {
    entity: usize,
    distances: Vec<f64>,
    masses: Vec<f64>,
    // cumulative[i] = masses[0] + ... + masses[i]
    cumulative: Vec<f64>,
}

impl DensityProfile {
    /// Profile of entity `a` from row `a` of `d`; `weights` defaults to the
    /// counting measure when `None`.
    pub fn from_matrix(d: &SquareMatrix, a: usize, weights: Option<&[f64]>) -> Result<Self> {
        check_index(d, a)?;
        let n = d.order();
        let unit;
        let weights = match weights {
            Some(w) => w,
            None => {
                unit = vec![1.0; n];
                &unit
            }
        };
        if weights.len() != n {
            return Err(Error::Dimension(format!(
                "{} mass weights for {n} entities",
                weights.len()
            )));
        }
        if d.get(a, a) != 0.0 {
            return Err(Error::Validation(format!(
                "self-distance of entity {a} is {} (must be 0)",
                d.get(a, a)
            )));
        }
        let mut pairs: Vec<(f64, f64)> = (0..n).map(|b| (d.get(a, b), weights[b])).collect();
        // the centre first among zero distances
        pairs.swap(0, a);
        Self::build(a, pairs)
    }

    /// Profile from raw distances (one of which must be the zero
    /// self-distance) and masses.
    pub fn new(entity: usize, distances: Vec<f64>, masses: Vec<f64>) -> Result<Self> {
        if distances.len() != masses.len() {
            return Err(Error::Dimension(format!(
                "{} distances but {} masses",
                distances.len(),
                masses.len()
            )));
        }
        Self::build(entity, distances.into_iter().zip(masses).collect())
    }

    pub fn with_unit_masses(entity: usize, distances: Vec<f64>) -> Result<Self> {
        let n = distances.len();
        Self::new(entity, distances, vec![1.0; n])
    }

    fn build(entity: usize, mut pairs: Vec<(f64, f64)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::Validation("empty density profile".into()));
        }
        for &(dist, mass) in &pairs {
            if !(dist.is_finite() && dist >= 0.0) {
                return Err(Error::Validation(format!("invalid distance {dist} in profile")));
            }
            if !(mass.is_finite() && mass >= 0.0) {
                return Err(Error::Validation(format!("invalid mass weight {mass}")));
            }
        }
        pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
        if pairs[0].0 != 0.0 {
            return Err(Error::Validation(
                "profile must contain the zero self-distance".into(),
            ));
        }
        let distances: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let masses: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let mut acc = 0.0;
        let cumulative = masses
            .iter()
            .map(|m| {
                acc += m;
                acc
            })
            .collect();
        Ok(DensityProfile {
            entity,
            distances,
            masses,
            cumulative,
        })
    }

    pub fn entity(&self) -> usize {
        self.entity
    }

    pub fn sorted_distances(&self) -> &[f64] {
        &self.distances
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn len(&self) -> usize {
        self.distances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.distances.is_empty()
    }

    /// Number of entities at distance strictly below `eps`.
    pub fn ball_count(&self, eps: f64) -> usize {
        self.distances.partition_point(|&d| d < eps)
    }

    /// `μ(B_eps(a))`.
    pub fn ball_mass(&self, eps: f64) -> f64 {
        match self.ball_count(eps) {
            0 => 0.0,
            k => self.cumulative[k - 1],
        }
    }

    pub fn total_mass(&self) -> f64 {
        *self.cumulative.last().unwrap_or(&0.0)
    }
}

/// `ψ(ε) = ε^q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialWeight {
    q: f64,
}

impl RadialWeight {
    pub fn new(q: f64) -> Result<Self> {
        if !(q > 0.0 && q.is_finite()) {
            return Err(Error::Parameter(format!("radial exponent q = {q} must be positive")));
        }
        Ok(RadialWeight { q })
    }

    pub fn exponent(&self) -> f64 {
        self.q
    }

    pub fn eval(&self, eps: f64) -> f64 {
        eps.powf(self.q)
    }
}

/// The measure `ν` on radii.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MassMeasure {
    /// Point mass at `ε₀ > 0`.
    Dirac(f64),
    Lebesgue,
}

impl MassMeasure {
    fn validate(&self) -> Result<()> {
        match *self {
            MassMeasure::Dirac(e0) if !(e0 > 0.0 && e0.is_finite()) => Err(Error::Parameter(
                format!("Dirac radius must be positive, got {e0}"),
            )),
            _ => Ok(()),
        }
    }
}

/// `f_a(eps) = μ(B_eps(a)) / eps^q`.
pub fn density_at(profile: &DensityProfile, eps: f64, psi: RadialWeight) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::Parameter(format!("radius must be positive, got {eps}")));
    }
    Ok(profile.ball_mass(eps) / psi.eval(eps))
}

/// `C_r(a) = ∫_r^∞ f_a(ε) dν(ε)`.
///
/// The Lebesgue case is evaluated exactly: the ball mass is a step function
/// of `ε`, constant between consecutive distinct distances, so each piece
/// integrates to `m (L^{1-q} - U^{1-q}) / (q - 1)`.
pub fn concentration(
    profile: &DensityProfile,
    r: f64,
    psi: RadialWeight,
    nu: MassMeasure,
) -> Result<f64> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Parameter(format!(
            "lower radius r = {r} must be positive for the integral to converge"
        )));
    }
    nu.validate()?;
    match nu {
        MassMeasure::Dirac(e0) => {
            if e0 >= r {
                density_at(profile, e0, psi)
            } else {
                Ok(0.0)
            }
        }
        MassMeasure::Lebesgue => {
            let q = psi.exponent();
            if q <= 1.0 {
                return Err(Error::Divergence { q });
            }
            let antiderivative = |x: f64| x.powf(1.0 - q) / (q - 1.0);
            let d = &profile.distances;
            let mut total = 0.0;
            let mut k = 0;
            while k < d.len() {
                // [d[k], next) carries the mass of every distance <= d[k]
                let mut end = k;
                while end + 1 < d.len() && d[end + 1] == d[k] {
                    end += 1;
                }
                let mass = profile.cumulative[end];
                let lower = d[k].max(r);
                match d.get(end + 1) {
                    Some(&upper) => {
                        if upper > lower {
                            total += mass * (antiderivative(lower) - antiderivative(upper));
                        }
                    }
                    None => total += mass * antiderivative(lower),
                }
                k = end + 1;
            }
            Ok(total)
        }
    }
}

/// `sup { r > 0 : |B_r(a)| = 1 }`, i.e. the distance to the nearest other
/// entity. A large value means low density.
pub fn r_max(profile: &DensityProfile) -> Result<f64> {
    if profile.len() < 2 {
        return Err(Error::Undefined(
            "r_max needs at least two entities".into(),
        ));
    }
    Ok(profile.distances[1])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Radius {
    /// Half the smallest positive pairwise distance.
    Auto,
    #[serde(untagged)]
    Value(f64),
}

/// Which score drives the flags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum FlagBasis {
    #[default]
    Robust,
    Classical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DensityFlag {
    HighDensity,
    LowDensity,
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityRequest {
    pub r: Radius,
    pub psi: RadialWeight,
    pub nu: MassMeasure,
    pub z_threshold: f64,
    pub basis: FlagBasis,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EntityDensity {
    pub entity: usize,
    pub c_r: f64,
    pub r_max: f64,
    pub z: f64,
    pub robust_z: f64,
    pub flag: DensityFlag,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcentrationReport {
    /// The lower radius actually used (resolved when `Auto`).
    pub r: f64,
    pub mean: f64,
    pub std: f64,
    pub median: f64,
    pub mad: f64,
    pub entities: Vec<EntityDensity>,
}

/// Half the smallest positive off-diagonal distance.
pub fn auto_radius(d: &SquareMatrix) -> Result<f64> {
    let n = d.order();
    let mut best = f64::INFINITY;
    for i in 0..n {
        for j in 0..n {
            let v = d.get(i, j);
            if i != j && v > 0.0 && v < best {
                best = v;
            }
        }
    }
    if best.is_finite() {
        Ok(0.5 * best)
    } else {
        Err(Error::Undefined(
            "automatic radius needs at least one positive pairwise distance".into(),
        ))
    }
}

/// Computes `C_r` and `r_max` for every entity and flags those whose score
/// deviates from the population by more than `z_threshold`.
///
/// The classical score is `(C - mean) / std` (population std, 0 when the
/// spread vanishes). The robust score is `(C - median) / (1.4826 MAD)`; when
/// the MAD is zero it falls back to `1.2533 * mean absolute deviation`
/// around the median, and to 0 when that vanishes too.
pub fn density_map(
    d: &SquareMatrix,
    weights: Option<&[f64]>,
    request: &DensityRequest,
) -> Result<ConcentrationReport> {
    let n = d.order();
    if n < 2 {
        return Err(Error::Undefined("density map needs at least two entities".into()));
    }
    if !(request.z_threshold > 0.0) {
        return Err(Error::Parameter("z_threshold must be positive".into()));
    }
    let r = match request.r {
        Radius::Auto => auto_radius(d)?,
        Radius::Value(r) => r,
    };

    let mut c_values = Vec::with_capacity(n);
    let mut r_values = Vec::with_capacity(n);
    for a in 0..n {
        let profile = DensityProfile::from_matrix(d, a, weights)?;
        c_values.push(concentration(&profile, r, request.psi, request.nu)?);
        r_values.push(r_max(&profile)?);
    }

    let mean = c_values.iter().sum::<f64>() / n as f64;
    let var = c_values.iter().map(|c| (c - mean) * (c - mean)).sum::<f64>() / n as f64;
    let mut std = var.sqrt();
    if std <= 1e-12 * mean.abs() {
        std = 0.0;
    }
    let median = median(&c_values);
    let abs_dev: Vec<f64> = c_values.iter().map(|c| (c - median).abs()).collect();
    let mad = self::median(&abs_dev);
    let mean_ad = abs_dev.iter().sum::<f64>() / n as f64;
    let robust_scale = if mad > 0.0 {
        MAD_SCALE * mad
    } else {
        MEAN_AD_SCALE * mean_ad
    };

    let entities = (0..n)
        .map(|a| {
            let c = c_values[a];
            let z = if std > 0.0 { (c - mean) / std } else { 0.0 };
            let robust_z = if robust_scale > 0.0 {
                (c - median) / robust_scale
            } else {
                0.0
            };
            let score = match request.basis {
                FlagBasis::Robust => robust_z,
                FlagBasis::Classical => z,
            };
            let flag = if score > request.z_threshold {
                DensityFlag::HighDensity
            } else if score < -request.z_threshold {
                DensityFlag::LowDensity
            } else {
                DensityFlag::Normal
            };
            EntityDensity {
                entity: a,
                c_r: c,
                r_max: r_values[a],
                z,
                robust_z,
                flag,
            }
        })
        .collect();

    Ok(ConcentrationReport {
        r,
        mean,
        std,
        median,
        mad,
        entities,
    })
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        0.0
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
