//! Random and closed-form instance generators.
//!
//! Random utility curves pass through three anchors: `(0, 0)`,
//! `(C/2, v)` and `(C, v + w)` with `0 ≤ w ≤ v` drawn from a value
//! distribution. The anchors are joined by a monotone cubic Hermite
//! interpolant with Fritsch–Carlson tangents, sampled at every unit, and
//! the unit increments are then made nonincreasing by pool-adjacent-
//! violators run separately on each half so both anchors keep their values.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Instance, Thread, UtilityFunction};
use crate::rng::{stream, streams};

/// Value distribution used to draw the anchors of a random utility curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistSpec {
    Uniform {
        lo: f64,
        hi: f64,
    },
    Normal {
        mean: f64,
        sd: f64,
    },
    /// Density proportional to `x^(-alpha_exp)` on `[x_min, x_max]`.
    Powerlaw {
        alpha_exp: f64,
        x_min: f64,
        x_max: f64,
    },
    /// `ell` with probability `gamma_prob`, otherwise `theta · ell`.
    Discrete {
        ell: f64,
        theta: f64,
        gamma_prob: f64,
    },
    /// Deterministic curves `f(u) = u^beta_exp`.
    PowerBeta {
        beta_exp: f64,
    },
}

impl DistSpec {
    pub fn uniform() -> Self {
        DistSpec::Uniform { lo: 0.0, hi: 1.0 }
    }

    pub fn normal() -> Self {
        DistSpec::Normal { mean: 1.0, sd: 1.0 }
    }

    pub fn powerlaw(alpha_exp: f64) -> Self {
        DistSpec::Powerlaw {
            alpha_exp,
            x_min: 1.0,
            x_max: 1000.0,
        }
    }

    pub fn discrete(gamma_prob: f64, theta: f64) -> Self {
        DistSpec::Discrete {
            ell: 1.0,
            theta,
            gamma_prob,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            DistSpec::Uniform { .. } => "uniform",
            DistSpec::Normal { .. } => "normal",
            DistSpec::Powerlaw { .. } => "powerlaw",
            DistSpec::Discrete { .. } => "discrete",
            DistSpec::PowerBeta { .. } => "power",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            DistSpec::Uniform { lo, hi } => lo >= 0.0 && hi > lo && hi.is_finite(),
            DistSpec::Normal { mean, sd } => mean.is_finite() && sd > 0.0 && sd.is_finite(),
            DistSpec::Powerlaw {
                alpha_exp,
                x_min,
                x_max,
            } => alpha_exp > 1.0 && x_min > 0.0 && x_max > x_min && x_max.is_finite(),
            DistSpec::Discrete {
                ell,
                theta,
                gamma_prob,
            } => {
                ell > 0.0
                    && ell.is_finite()
                    && theta >= 1.0
                    && theta.is_finite()
                    && (0.0..=1.0).contains(&gamma_prob)
            }
            DistSpec::PowerBeta { beta_exp } => beta_exp > 0.0 && beta_exp < 1.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Parameter(format!("invalid distribution {self:?}")))
        }
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            DistSpec::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            DistSpec::Normal { mean, sd } => {
                let normal = Normal::new(mean, sd).expect("validated parameters");
                loop {
                    let x = normal.sample(rng);
                    if x >= 0.0 {
                        return x;
                    }
                }
            }
            DistSpec::Powerlaw {
                alpha_exp,
                x_min,
                x_max,
            } => {
                let a = 1.0 - alpha_exp;
                let (lo, hi) = (x_min.powf(a), x_max.powf(a));
                let u: f64 = rng.random();
                (lo + u * (hi - lo)).powf(1.0 / a).clamp(x_min, x_max)
            }
            DistSpec::Discrete {
                ell,
                theta,
                gamma_prob,
            } => {
                if rng.random::<f64>() < gamma_prob {
                    ell
                } else {
                    theta * ell
                }
            }
            DistSpec::PowerBeta { .. } => unreachable!("power curves have no anchors"),
        }
    }
}

/// Draws anchor values `(v, w)` with `v ≥ w ≥ 0` by rejection.
pub fn sample_vw<R: Rng + ?Sized>(spec: &DistSpec, rng: &mut R) -> Result<(f64, f64)> {
    spec.validate()?;
    if let DistSpec::PowerBeta { .. } = spec {
        return Err(Error::Parameter(
            "power curves are not drawn from anchor values".into(),
        ));
    }
    loop {
        let v = spec.draw(rng);
        let w = spec.draw(rng);
        if 0.0 <= w && w <= v {
            return Ok((v, w));
        }
    }
}

/// Fritsch–Carlson tangents for three equally spaced knots with secants `d0`, `d1`.
fn pchip_tangents(d0: f64, d1: f64) -> [f64; 3] {
    let interior = if d0 * d1 > 0.0 {
        2.0 * d0 * d1 / (d0 + d1)
    } else {
        0.0
    };
    let end = |near: f64, far: f64| {
        let t = (3.0 * near - far) / 2.0;
        if t.signum() != near.signum() || near == 0.0 {
            0.0
        } else if near.signum() != far.signum() && t.abs() > 3.0 * near.abs() {
            3.0 * near
        } else {
            t
        }
    };
    let mut m = [end(d0, d1), interior, end(d1, d0)];
    for (k, d) in [(0, d0), (1, d1)] {
        if d == 0.0 {
            m[k] = 0.0;
            m[k + 1] = 0.0;
            continue;
        }
        let (a, b) = (m[k] / d, m[k + 1] / d);
        let r = a * a + b * b;
        if r > 9.0 {
            let tau = 3.0 / r.sqrt();
            m[k] = tau * a * d;
            m[k + 1] = tau * b * d;
        }
    }
    m
}

fn hermite(y0: f64, y1: f64, m0: f64, m1: f64, h: f64, t: f64) -> f64 {
    let (t2, t3) = (t * t, t * t * t);
    (2.0 * t3 - 3.0 * t2 + 1.0) * y0
        + (t3 - 2.0 * t2 + t) * h * m0
        + (-2.0 * t3 + 3.0 * t2) * y1
        + (t3 - t2) * h * m1
}

/// Pool-adjacent-violators for a nonincreasing fit; block sums are kept.
fn pav_nonincreasing(values: &mut [f64]) {
    // (sum, len) per block.
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(values.len());
    for &x in values.iter() {
        blocks.push((x, 1));
        while blocks.len() > 1 {
            let (s1, n1) = blocks[blocks.len() - 1];
            let (s0, n0) = blocks[blocks.len() - 2];
            if s0 / n0 as f64 >= s1 / n1 as f64 {
                break;
            }
            blocks.pop();
            *blocks.last_mut().unwrap() = (s0 + s1, n0 + n1);
        }
    }
    let mut k = 0;
    for (s, n) in blocks {
        values[k..k + n].fill(s / n as f64);
        k += n;
    }
}

/// Merges breakpoints that lie on the line through their neighbours.
fn collapse_collinear(values: &[f64]) -> Vec<(u64, f64)> {
    let slope = |a: usize, b: usize| (values[b] - values[a]) / (b - a) as f64;
    let last = values.len() - 1;
    let mut points = vec![(0u64, values[0])];
    let mut anchor = 0;
    for (u, &y) in values.iter().enumerate().take(last).skip(1) {
        let (left, right) = (slope(anchor, u), slope(u, u + 1));
        let scale = left.abs().max(right.abs()).max(1.0);
        if (left - right).abs() > 1e-12 * scale {
            points.push((u as u64, y));
            anchor = u;
        }
    }
    points.push((last as u64, values[last]));
    points
}

/// Concave curve through `(0, 0)`, `(C/2, v)` and `(C, v + w)`.
pub fn concave_from_anchors(v: f64, w: f64, capacity: u64) -> Result<UtilityFunction> {
    if capacity < 2 || !capacity.is_multiple_of(2) {
        return Err(Error::Parameter(format!(
            "capacity must be a positive even number, got {capacity}"
        )));
    }
    if !(0.0 <= w && w <= v && v.is_finite()) {
        return Err(Error::Parameter(format!(
            "anchors need 0 <= w <= v, got v={v} w={w}"
        )));
    }
    let half = capacity / 2;
    let h = half as f64;
    let knots = [0.0, v, v + w];
    let m = pchip_tangents(v / h, w / h);

    let c = capacity as usize;
    let mut y: Vec<f64> = (0..=c)
        .map(|u| {
            let k = usize::from(u as u64 >= half).min(1);
            let t = (u as f64 - k as f64 * h) / h;
            hermite(knots[k], knots[k + 1], m[k], m[k + 1], h, t)
        })
        .collect();
    y[0] = 0.0;
    y[half as usize] = v;
    y[c] = v + w;

    let mut inc: Vec<f64> = y.windows(2).map(|p| (p[1] - p[0]).max(0.0)).collect();
    let (first, second) = inc.split_at_mut(half as usize);
    pav_nonincreasing(first);
    pav_nonincreasing(second);

    let mut acc = 0.0;
    for u in 0..c {
        acc += inc[u];
        y[u + 1] = acc;
        if u + 1 == half as usize {
            acc = v;
            y[u + 1] = v;
        }
    }
    y[c] = v + w;

    Ok(UtilityFunction::new(collapse_collinear(&y), capacity)?)
}

/// Random concave curve on `[0, C]` drawn according to `spec`.
pub fn gen_utility<R: Rng + ?Sized>(
    spec: &DistSpec,
    capacity: u64,
    rng: &mut R,
) -> Result<UtilityFunction> {
    if let DistSpec::PowerBeta { beta_exp } = *spec {
        return gen_power_utility(beta_exp, capacity);
    }
    let (v, w) = sample_vw(spec, rng)?;
    concave_from_anchors(v, w, capacity)
}

/// Dense table `f(u) = u^beta`.
pub fn gen_power_utility(beta_exp: f64, capacity: u64) -> Result<UtilityFunction> {
    DistSpec::PowerBeta { beta_exp }.validate()?;
    let values: Vec<f64> = (0..=capacity).map(|u| (u as f64).powf(beta_exp)).collect();
    Ok(UtilityFunction::from_table(&values)?)
}

/// `beta_load · m` random threads; thread `i` draws from stream `i` of `seed`.
pub fn gen_instance(
    servers: usize,
    beta_load: usize,
    capacity: u64,
    spec: &DistSpec,
    seed: u64,
) -> Result<Instance> {
    spec.validate()?;
    if servers == 0 || beta_load == 0 {
        return Err(Error::Parameter("servers and load must be positive".into()));
    }
    let n = servers * beta_load;
    let threads = (0..n)
        .map(|i| {
            let mut rng = stream(seed, streams::THREADS + i as u64);
            gen_utility(spec, capacity, &mut rng).map(Thread::new)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut metadata = serde_json::Map::new();
    metadata.insert(
        "generator".into(),
        serde_json::json!({
            "dist": spec,
            "servers": servers,
            "beta_load": beta_load,
            "capacity": capacity,
            "seed": seed,
        }),
    );
    Ok(Instance::new(servers, capacity, threads)?.with_metadata(metadata))
}

/// Two-server instance whose optimum reaches the returned target exactly
/// when `numbers` can be split into two halves of equal sum.
///
/// Thread `i` has `f_i(x) = min(x, c_i)` and each server holds `Σ c_i / 2`.
pub fn from_partition(numbers: &[u64]) -> Result<(Instance, u64)> {
    if numbers.is_empty() || numbers.contains(&0) {
        return Err(Error::Parameter(
            "partition numbers must be positive and nonempty".into(),
        ));
    }
    let sum: u64 = numbers.iter().sum();
    if !sum.is_multiple_of(2) {
        return Err(Error::OddSum(sum));
    }
    let capacity = sum / 2;
    let threads = numbers
        .iter()
        .map(|&c| {
            let points = if c >= capacity {
                vec![(0, 0.0), (capacity, capacity as f64)]
            } else {
                vec![(0, 0.0), (c, c as f64), (capacity, c as f64)]
            };
            Ok(Thread::named(
                c.to_string(),
                UtilityFunction::new(points, capacity)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut metadata = serde_json::Map::new();
    metadata.insert("partition".into(), serde_json::json!(numbers));
    metadata.insert("target".into(), serde_json::json!(sum));
    Ok((
        Instance::new(2, capacity, threads)?.with_metadata(metadata),
        sum,
    ))
}
