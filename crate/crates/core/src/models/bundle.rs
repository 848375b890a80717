//! JSON persistence of a learned model bundle.
//!
//! Reals are written with 17 significant digits, so every f64 survives a round trip
//! bit for bit.

use std::fs;
use std::path::Path;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::value::RawValue;

use super::{
    ConfigKernel, ConfigurationModel, ContactKernel, ContactLink, ContactModel, FormationAnchor, ObjectModel,
    TaskModel, TaskOffset,
};
use crate::cloud::{Curvature2, SurfaceFeature};
use crate::density::{Bandwidths, FeatureKernel, MixtureDensity};
use crate::error::{Error, Result};
use crate::geom::{Pose, UnitQuaternion, Vec3};
use crate::scalar::Real;

pub const SCHEMA_VERSION: u64 = 1;

const SECTIONS: [&str; 7] = ["label", "metadata", "bandwidths", "object", "task", "contact", "configuration"];

/// Settings the models were learned with, kept so inference can reuse them.
#[derive(Clone, Debug, PartialEq)]
pub struct BundleMeta {
    pub k_neighbors: usize,
    pub contact_radius: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelBundle<T: Real> {
    pub label: String,
    pub meta: BundleMeta,
    pub surface_bw: Bandwidths<T>,
    pub task_bw: Bandwidths<T>,
    pub object: ObjectModel<T>,
    pub task: TaskModel<T>,
    pub contact: ContactModel<T>,
    pub configuration: ConfigurationModel<T>,
}

#[derive(Clone, Copy, Debug)]
struct Num(f64);

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let raw = RawValue::from_string(format!("{:.16e}", self.0)).map_err(serde::ser::Error::custom)?;
        raw.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Num {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        if !v.is_finite() {
            return Err(D::Error::custom("non-finite number"));
        }
        Ok(Num(v))
    }
}

fn num<T: Real>(x: T) -> Num {
    Num(x.to_f64_lossy())
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BandwidthsFile {
    sigma_p: Num,
    sigma_q: Num,
    sigma_r: Num,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AllBandwidths {
    surface: BandwidthsFile,
    task: BandwidthsFile,
    contact: BandwidthsFile,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MetaFile {
    k_neighbors: usize,
    contact_radius: Num,
    seed: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FeatureKernelFile {
    pose: [Num; 7],
    r: [Num; 2],
    weight: Num,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    region: Option<usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct KernelList {
    kernels: Vec<FeatureKernelFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ContactKernelFile {
    source: usize,
    u: [Num; 7],
    r: [Num; 2],
    weight: Num,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ContactLinkFile {
    kernels: Vec<ContactKernelFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OffsetFile {
    i: usize,
    j: usize,
    u: [Num; 7],
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ContactFile {
    links: Vec<ContactLinkFile>,
    task_offsets: Vec<OffsetFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigKernelFile {
    record: usize,
    b: [Num; 7],
    l: [Num; 7],
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    alpha: Num,
    sigma_p: Num,
    sigma_q: Num,
    rot_weight: Num,
    anchor: String,
    kernels: Vec<ConfigKernelFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BundleFile {
    schema_version: u64,
    label: String,
    metadata: MetaFile,
    bandwidths: AllBandwidths,
    object: KernelList,
    task: KernelList,
    contact: ContactFile,
    configuration: ConfigFile,
}

fn pose_out<T: Real>(p: &Pose<T>) -> [Num; 7] {
    p.to_array().map(num)
}

fn bw_out<T: Real>(b: &Bandwidths<T>) -> BandwidthsFile {
    BandwidthsFile { sigma_p: num(b.sigma_p), sigma_q: num(b.sigma_q), sigma_r: num(b.sigma_r) }
}

fn kernels_out<T: Real>(d: &MixtureDensity<T>, region: Option<&[usize]>) -> KernelList {
    let kernels = d
        .kernels()
        .iter()
        .enumerate()
        .map(|(i, k)| FeatureKernelFile {
            pose: pose_out(&k.mean.pose),
            r: k.mean.r.to_array().map(num),
            weight: num(k.weight),
            region: region.and_then(|r| r.get(i).copied()),
        })
        .collect();
    KernelList { kernels }
}

fn to_file<T: Real>(b: &ModelBundle<T>) -> BundleFile {
    BundleFile {
        schema_version: SCHEMA_VERSION,
        label: b.label.clone(),
        metadata: MetaFile {
            k_neighbors: b.meta.k_neighbors,
            contact_radius: Num(b.meta.contact_radius),
            seed: b.meta.seed,
        },
        bandwidths: AllBandwidths {
            surface: bw_out(&b.surface_bw),
            task: bw_out(&b.task_bw),
            contact: bw_out(&b.contact.bandwidths),
        },
        object: kernels_out(&b.object.density, Some(&b.object.region)),
        task: kernels_out(&b.task.density, None),
        contact: ContactFile {
            links: b
                .contact
                .links
                .iter()
                .map(|l| ContactLinkFile {
                    kernels: l
                        .kernels
                        .iter()
                        .map(|k| ContactKernelFile {
                            source: k.source,
                            u: pose_out(&k.u),
                            r: k.r.to_array().map(num),
                            weight: num(k.weight),
                        })
                        .collect(),
                })
                .collect(),
            task_offsets: b
                .contact
                .task_offsets
                .iter()
                .map(|o| OffsetFile { i: o.i, j: o.j, u: pose_out(&o.u) })
                .collect(),
        },
        configuration: ConfigFile {
            alpha: num(b.configuration.alpha),
            sigma_p: num(b.configuration.sigma_p),
            sigma_q: num(b.configuration.sigma_q),
            rot_weight: num(b.configuration.rot_weight),
            anchor: b.configuration.anchor.name().to_string(),
            kernels: b
                .configuration
                .kernels
                .iter()
                .map(|k| ConfigKernelFile { record: k.record, b: pose_out(&k.drone), l: pose_out(&k.link) })
                .collect(),
        },
    }
}

pub fn to_json<T: Real>(b: &ModelBundle<T>) -> String {
    serde_json::to_string_pretty(&to_file(b)).expect("bundle serializes")
}

pub fn save_model<T: Real>(path: &Path, b: &ModelBundle<T>) -> Result<()> {
    let mut text = to_json(b);
    text.push('\n');
    fs::write(path, text).map_err(|source| Error::Io { path: path.into(), source })
}

fn corrupt(msg: impl Into<String>) -> Error {
    Error::Corrupt(msg.into())
}

// Stored quaternions are already unit length; keep their bits instead of renormalizing.
fn pose_in<T: Real>(a: &[Num; 7], what: &str) -> Result<Pose<T>> {
    let v = a.map(|n| n.0);
    let norm2 = v[3] * v[3] + v[4] * v[4] + v[5] * v[5] + v[6] * v[6];
    if (norm2 - 1.0).abs() > T::sum_tolerance(4) {
        return Err(corrupt(format!("{what}: quaternion is not unit length")));
    }
    let p = Vec3::new(T::lit(v[0]), T::lit(v[1]), T::lit(v[2]));
    let q = UnitQuaternion::new_unchecked(T::lit(v[3]), T::lit(v[4]), T::lit(v[5]), T::lit(v[6]));
    Ok(Pose::new(p, q))
}

fn bw_in<T: Real>(b: &BandwidthsFile, what: &str) -> Result<Bandwidths<T>> {
    Bandwidths::new(T::lit(b.sigma_p.0), T::lit(b.sigma_q.0), T::lit(b.sigma_r.0))
        .map_err(|e| corrupt(format!("{what} bandwidths: {e}")))
}

fn curv_in<T: Real>(r: &[Num; 2]) -> Curvature2<T> {
    Curvature2::new(T::lit(r[0].0), T::lit(r[1].0))
}

fn mixture_in<T: Real>(list: &KernelList, bw: Bandwidths<T>, what: &str) -> Result<MixtureDensity<T>> {
    let kernels = list
        .kernels
        .iter()
        .enumerate()
        .map(|(i, k)| {
            Ok(FeatureKernel {
                mean: SurfaceFeature::new(pose_in(&k.pose, &format!("{what} kernel {i}"))?, curv_in(&k.r)),
                weight: T::lit(k.weight.0),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    MixtureDensity::from_normalized(kernels, bw).map_err(|e| corrupt(format!("{what}: {e}")))
}

fn from_file<T: Real>(f: BundleFile) -> Result<ModelBundle<T>> {
    let surface_bw = bw_in(&f.bandwidths.surface, "surface")?;
    let task_bw = bw_in(&f.bandwidths.task, "task")?;
    let contact_bw = bw_in(&f.bandwidths.contact, "contact")?;

    let object_density = mixture_in(&f.object, surface_bw, "object")?;
    let region = f.object.kernels.iter().map(|k| k.region.unwrap_or(0)).collect();
    let object = ObjectModel { density: object_density, region };
    let task = TaskModel { density: mixture_in(&f.task, task_bw, "task")? };

    let n_obj = object.density.len();
    let n_task = task.density.len();
    let mut links = Vec::with_capacity(f.contact.links.len());
    for (n, l) in f.contact.links.iter().enumerate() {
        let kernels = l
            .kernels
            .iter()
            .map(|k| {
                if k.source >= n_obj {
                    return Err(corrupt(format!("contact link {n}: source {} out of range", k.source)));
                }
                Ok(ContactKernel {
                    source: k.source,
                    u: pose_in(&k.u, &format!("contact link {n}"))?,
                    r: curv_in(&k.r),
                    weight: T::lit(k.weight.0),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        links.push(ContactLink::new(kernels).map_err(|e| corrupt(format!("contact link {n}: {e}")))?);
    }
    if links.is_empty() {
        return Err(corrupt("contact model has no links"));
    }
    let offsets = f
        .contact
        .task_offsets
        .iter()
        .map(|o| {
            if o.i >= n_obj || o.j >= n_task {
                return Err(corrupt(format!("task offset ({}, {}) out of range", o.i, o.j)));
            }
            Ok(TaskOffset { i: o.i, j: o.j, u: pose_in(&o.u, "task offset")? })
        })
        .collect::<Result<Vec<_>>>()?;
    let contact = ContactModel::new(links, offsets, contact_bw);

    let c = &f.configuration;
    let anchor = FormationAnchor::parse(&c.anchor).ok_or_else(|| corrupt(format!("unknown anchor `{}`", c.anchor)))?;
    let kernels = c
        .kernels
        .iter()
        .map(|k| {
            Ok(ConfigKernel {
                record: k.record,
                drone: pose_in(&k.b, "configuration kernel")?,
                link: pose_in(&k.l, "configuration kernel")?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let configuration = ConfigurationModel::new(
        kernels,
        T::lit(c.alpha.0),
        T::lit(c.sigma_p.0),
        T::lit(c.sigma_q.0),
        T::lit(c.rot_weight.0),
        anchor,
    )
    .map_err(|e| corrupt(format!("configuration: {e}")))?;

    Ok(ModelBundle {
        label: f.label,
        meta: BundleMeta {
            k_neighbors: f.metadata.k_neighbors,
            contact_radius: f.metadata.contact_radius.0,
            seed: f.metadata.seed,
        },
        surface_bw,
        task_bw,
        object,
        task,
        contact,
        configuration,
    })
}

/// Parses a bundle, checking the version first, then that every section is present,
/// then the model invariants. Nothing is returned unless all checks pass.
pub fn from_json<T: Real>(text: &str) -> Result<ModelBundle<T>> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| corrupt(e.to_string()))?;
    let obj = value.as_object().ok_or_else(|| corrupt("top level is not an object"))?;
    let version = obj.get("schema_version").ok_or_else(|| Error::MissingSection("schema_version".into()))?;
    let version = version.as_u64().ok_or_else(|| corrupt("schema_version is not an integer"))?;
    if version != SCHEMA_VERSION {
        return Err(Error::SchemaVersion { found: version, expected: SCHEMA_VERSION });
    }
    for s in SECTIONS {
        if !obj.contains_key(s) {
            return Err(Error::MissingSection(s.into()));
        }
    }
    let file: BundleFile = serde_json::from_value(value).map_err(|e| corrupt(e.to_string()))?;
    from_file(file)
}

pub fn load_model<T: Real>(path: &Path) -> Result<ModelBundle<T>> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.into(), source })?;
    from_json(&text)
}
