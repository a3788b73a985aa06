use std::path::Path;

use rand::Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{NlcsError, Result};
use crate::instances::{
    build_base, build_opt_instance, build_perturbed, build_stitched, bump_radius, pack_caps, pack_opt_centers,
    solve_gamma, BaseInstance, LowerBoundParams, OptInstance, PerturbedInstance, StitchedGaussian,
};
use crate::numkit::SymMatrix;
use crate::oracle::{make_gaussian, make_hs_mixture, make_mixture, GaussianPotential, HsMixture, MixturePotential, MixtureSpec, Potential};
use crate::rng::stream;
use crate::sampler::GridSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceKind {
    Gaussian,
    Mixture,
    Hs,
    Stitched,
    LbBase,
    LbPerturbed,
    Opt,
}

/// Wire form of an instance.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSpec {
    pub kind: InstanceKind,
    pub params: Value,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GaussianParams {
    mean: Vec<f64>,
    cov: Option<Vec<Vec<f64>>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MixtureParams {
    weights: Vec<f64>,
    means: Vec<Vec<f64>>,
    covs: Option<Vec<Vec<Vec<f64>>>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct HsParams {
    #[serde(rename = "J")]
    j: Vec<Vec<f64>>,
    h: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StitchedParams {
    u: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LbParams {
    d: usize,
    #[serde(rename = "L")]
    l: f64,
    #[serde(rename = "M")]
    m: f64,
    eps: f64,
    v: Option<Vec<f64>>,
    gamma: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct OptParams {
    d: usize,
    #[serde(rename = "L")]
    l: f64,
    m: f64,
    #[serde(rename = "R")]
    r_big: f64,
    eps: f64,
    center: Option<Vec<f64>>,
    index: Option<usize>,
}

fn typed<T: DeserializeOwned>(v: &Value) -> Result<T> {
    serde_path_to_error::deserialize(v.clone()).map_err(|e| NlcsError::Schema {
        path: format!("params.{}", e.path()),
        msg: e.inner().to_string(),
    })
}

fn matrix(rows: &[Vec<f64>], d: usize, path: &str) -> Result<SymMatrix> {
    if rows.len() != d || rows.iter().any(|r| r.len() != d) {
        return Err(NlcsError::Schema { path: path.into(), msg: format!("expected a {d}x{d} matrix") });
    }
    let m = SymMatrix::from_fn(d, d, |i, j| rows[i][j]);
    if (&m - m.transpose()).amax() > 1e-12 * (1.0 + m.amax()) {
        return Err(NlcsError::Schema { path: path.into(), msg: "matrix is not symmetric".into() });
    }
    Ok(m)
}

fn schema(path: &str, e: NlcsError) -> NlcsError {
    match e {
        NlcsError::Schema { .. } => e,
        other => NlcsError::Schema { path: path.into(), msg: other.to_string() },
    }
}

/// A materialized instance.
#[derive(Clone, Debug)]
pub enum Instance {
    Gaussian(GaussianPotential),
    Mixture(MixturePotential),
    Hs(HsMixture),
    Stitched(StitchedGaussian),
    LbBase(BaseInstance),
    LbPerturbed(PerturbedInstance),
    Opt(OptInstance),
}

impl Instance {
    pub fn potential(&self) -> &dyn Potential {
        match self {
            Instance::Gaussian(p) => p,
            Instance::Mixture(p) => p,
            Instance::Hs(p) => p,
            Instance::Stitched(p) => p,
            Instance::LbBase(p) => p,
            Instance::LbPerturbed(p) => p,
            Instance::Opt(p) => p,
        }
    }

    pub fn kind(&self) -> InstanceKind {
        match self {
            Instance::Gaussian(_) => InstanceKind::Gaussian,
            Instance::Mixture(_) => InstanceKind::Mixture,
            Instance::Hs(_) => InstanceKind::Hs,
            Instance::Stitched(_) => InstanceKind::Stitched,
            Instance::LbBase(_) => InstanceKind::LbBase,
            Instance::LbPerturbed(_) => InstanceKind::LbPerturbed,
            Instance::Opt(_) => InstanceKind::Opt,
        }
    }

    /// Derived constants echoed into the instance file.
    pub fn derived(&self) -> Value {
        let lb = |p: &LowerBoundParams| {
            let grid = GridSpec::new(p.l, p.m, p.eps, p.d).ok();
            json!({
                "d": p.d, "R": p.r(), "r1": p.r1(), "r2": p.r2(), "h1": p.h1(),
                "ell": grid.map(|g| g.ell),
            })
        };
        match self {
            Instance::LbBase(b) => lb(&b.params),
            Instance::LbPerturbed(p) => {
                let mut v = lb(&p.base.params);
                v["gamma"] = json!(p.gamma);
                v["h2"] = json!(p.h2());
                v["v"] = json!(p.v);
                v
            }
            Instance::Opt(o) => json!({
                "d": o.center.len(), "r": o.r, "R": o.r_big, "center": o.center,
                "packing_count": pack_opt_centers(o.r_big, o.r, o.center.len()).map(|c| c.len()).ok(),
            }),
            Instance::Stitched(s) => json!({ "d": s.u().len(), "s": crate::numkit::norm2(s.u()) }),
            other => json!({ "d": other.potential().dim() }),
        }
    }
}

impl InstanceSpec {
    pub fn materialize(&self) -> Result<Instance> {
        let p = &self.params;
        Ok(match self.kind {
            InstanceKind::Gaussian => {
                let g: GaussianParams = typed(p)?;
                let d = g.mean.len();
                let cov = match &g.cov {
                    Some(c) => matrix(c, d, "params.cov")?,
                    None => SymMatrix::identity(d, d),
                };
                Instance::Gaussian(make_gaussian(g.mean, cov).map_err(|e| schema("params.cov", e))?)
            }
            InstanceKind::Mixture => {
                let m: MixtureParams = typed(p)?;
                let d = m.means.first().map_or(0, |u| u.len());
                let covs = match &m.covs {
                    Some(cs) => cs.iter().enumerate().map(|(i, c)| matrix(c, d, &format!("params.covs[{i}]"))).collect::<Result<_>>()?,
                    None => vec![SymMatrix::identity(d, d); m.weights.len()],
                };
                let spec = MixtureSpec { weights: m.weights, means: m.means, covs };
                Instance::Mixture(make_mixture(spec).map_err(|e| schema("params", e))?)
            }
            InstanceKind::Hs => {
                let h: HsParams = typed(p)?;
                let j = matrix(&h.j, h.h.len(), "params.J")?;
                Instance::Hs(make_hs_mixture(j, h.h).map_err(|e| schema("params.J", e))?)
            }
            InstanceKind::Stitched => {
                let s: StitchedParams = typed(p)?;
                Instance::Stitched(build_stitched(s.u).map_err(|e| schema("params.u", e))?)
            }
            InstanceKind::LbBase | InstanceKind::LbPerturbed => {
                let q: LbParams = typed(p)?;
                let params = LowerBoundParams::new(q.d, q.l, q.m, q.eps).map_err(|e| schema("params", e))?;
                let base = build_base(params)?;
                if self.kind == InstanceKind::LbBase {
                    if q.v.is_some() || q.gamma.is_some() {
                        return Err(NlcsError::Schema { path: "params".into(), msg: "lb_base takes no v or gamma".into() });
                    }
                    Instance::LbBase(base)
                } else {
                    let v = match q.v {
                        Some(v) => v,
                        None => pack_caps(&params, 1, self.seed)?.remove(0),
                    };
                    let gamma = match q.gamma {
                        Some(g) => g,
                        None => solve_gamma(&base, &v, 1e-6).map_err(|e| schema("params.v", e))?,
                    };
                    Instance::LbPerturbed(build_perturbed(base, v, gamma).map_err(|e| schema("params", e))?)
                }
            }
            InstanceKind::Opt => {
                let o: OptParams = typed(p)?;
                let center = match (o.center, o.index) {
                    (Some(c), None) => c,
                    (None, idx) => {
                        let r = bump_radius(o.l, o.eps);
                        let centers = pack_opt_centers(o.r_big, r, o.d).map_err(|e| schema("params", e))?;
                        let i = idx.unwrap_or_else(|| stream(self.seed, "opt_center", 0).random_range(0..centers.len()));
                        centers.get(i).cloned().ok_or_else(|| NlcsError::Schema {
                            path: "params.index".into(),
                            msg: format!("index {i} out of range (have {} centers)", centers.len()),
                        })?
                    }
                    (Some(_), Some(_)) => {
                        return Err(NlcsError::Schema { path: "params".into(), msg: "give center or index, not both".into() })
                    }
                };
                if center.len() != o.d {
                    return Err(NlcsError::Schema { path: "params.center".into(), msg: format!("expected {} coordinates", o.d) });
                }
                Instance::Opt(build_opt_instance(center, o.l, o.m, o.r_big, o.eps).map_err(|e| schema("params", e))?)
            }
        })
    }
}

/// Parses either a bare spec or an instance file (`{"spec": ..., ...}`).
pub fn parse_spec(text: &str) -> Result<InstanceSpec> {
    let v: Value = serde_json::from_str(text).map_err(|e| NlcsError::Schema { path: "$".into(), msg: e.to_string() })?;
    let inner = match v.get("spec") {
        Some(s) if v.get("kind").is_none() => s.clone(),
        _ => v,
    };
    serde_path_to_error::deserialize(inner).map_err(|e| NlcsError::Schema { path: e.path().to_string(), msg: e.inner().to_string() })
}

pub fn load_spec(path: &Path) -> Result<InstanceSpec> {
    parse_spec(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        let specs = [
            json!({"kind": "gaussian", "params": {"mean": [0.0, 1.0]}}),
            json!({"kind": "mixture", "params": {"weights": [0.5, 0.5], "means": [[-3.0], [3.0]]}}),
            json!({"kind": "hs", "params": {"J": [[0.5, 0.1], [0.1, 0.5]], "h": [0.0, 0.2]}}),
            json!({"kind": "stitched", "params": {"u": [20.0, 0.0]}}),
            json!({"kind": "lb_base", "params": {"d": 2, "L": 4.0, "M": 2.0, "eps": 0.004}}),
            json!({"kind": "opt", "params": {"d": 2, "L": 1.0, "m": 0.5, "R": 4.0, "eps": 0.01}, "seed": 3}),
        ];
        for s in specs {
            let spec = parse_spec(&s.to_string()).unwrap();
            let inst = spec.materialize().unwrap();
            assert_eq!(inst.kind(), spec.kind);
            let again = parse_spec(&serde_json::to_string(&spec).unwrap()).unwrap();
            assert_eq!(serde_json::to_value(&again).unwrap(), serde_json::to_value(&spec).unwrap());
        }
    }

    #[test]
    fn schema_errors_name_the_field() {
        let bad = json!({"kind": "lb_base", "params": {"d": 2, "L": 4.0, "M": 2.0, "eps": "x"}});
        match parse_spec(&bad.to_string()).unwrap().materialize() {
            Err(NlcsError::Schema { path, .. }) => assert_eq!(path, "params.eps"),
            other => panic!("{other:?}"),
        }
        let big = json!({"kind": "lb_base", "params": {"d": 2, "L": 4.0, "M": 2.0, "eps": 0.5}});
        assert!(matches!(parse_spec(&big.to_string()).unwrap().materialize(), Err(NlcsError::Schema { .. })));
        assert!(parse_spec(r#"{"kind": "nope", "params": {}}"#).is_err());
    }
}
