//! The four learned densities: object, task, contact and configuration.

mod bundle;

pub use bundle::{from_json, load_model, save_model, to_json, BundleMeta, ModelBundle, SCHEMA_VERSION};

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cloud::{Curvature2, PointCloud, SurfaceFeature};
use crate::density::{Bandwidths, FeatureKernel, FeatureKernelEval, LogSumExp, MixtureDensity, PoseKernel};
use crate::error::{Error, Result};
use crate::geom::{pose_distance, relative_pose, Pose, Vec3};
use crate::scalar::Real;

/// One demonstrated drone/link pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinkDemo<T: Real> {
    pub drone: Pose<T>,
    pub link: Pose<T>,
}

#[derive(Clone, Debug)]
pub struct DemonstrationRecord<T: Real> {
    pub cloud: PointCloud<T>,
    pub links: Vec<LinkDemo<T>>,
    pub label: String,
}

impl<T: Real> DemonstrationRecord<T> {
    /// Checks that there is at least one link and that every link touches the cloud.
    pub fn new(cloud: PointCloud<T>, links: Vec<LinkDemo<T>>, label: impl Into<String>, contact_radius: T) -> Result<Self> {
        if links.is_empty() {
            return Err(Error::EmptyInput("demonstration needs at least one link"));
        }
        for l in &links {
            let (_, d) = cloud.nearest(l.link.p);
            if d > contact_radius {
                return Err(Error::NoContact { radius: contact_radius.to_f64_lossy() });
            }
        }
        Ok(Self { cloud, links, label: label.into() })
    }
}

/// Surface features observed under the demonstrated links, equally weighted.
#[derive(Clone, Debug, PartialEq)]
pub struct ObjectModel<T: Real> {
    pub density: MixtureDensity<T>,
    /// Index of the link whose contact region produced each kernel.
    pub region: Vec<usize>,
}

impl<T: Real> ObjectModel<T> {
    /// One region per link, concatenated in link order.
    pub fn from_regions(regions: &[Vec<SurfaceFeature<T>>], bw: Bandwidths<T>) -> Result<Self> {
        let features: Vec<_> = regions.iter().flatten().copied().collect();
        let region = regions.iter().enumerate().flat_map(|(n, r)| std::iter::repeat_n(n, r.len())).collect();
        Ok(Self { density: MixtureDensity::uniform(&features, bw)?, region })
    }

    pub fn log_marginal_curvature(&self, r: &Curvature2<T>) -> f64 {
        self.density.log_marginal_curvature(r)
    }
}

pub fn learn_object_model<T: Real>(contact_features: &[SurfaceFeature<T>], bw: Bandwidths<T>) -> Result<ObjectModel<T>> {
    if contact_features.is_empty() {
        return Err(Error::EmptyInput("object model needs contact features"));
    }
    ObjectModel::from_regions(&[contact_features.to_vec()], bw)
}

/// Salient features of the whole payload, weighted by their largest curvature.
#[derive(Clone, Debug, PartialEq)]
pub struct TaskModel<T: Real> {
    pub density: MixtureDensity<T>,
}

/// Largest r1 below which a task sample counts as flat.
pub const FLAT_R1: f64 = 1e-9;

pub fn learn_task_model<T: Real>(task_features: &[SurfaceFeature<T>], bw: Bandwidths<T>) -> Result<TaskModel<T>> {
    if task_features.is_empty() {
        return Err(Error::EmptyInput("task model needs features"));
    }
    let max_r1 = task_features.iter().fold(T::zero(), |m, f| m.max(f.r.r1));
    let flat = max_r1 <= T::lit(FLAT_R1);
    if flat {
        log::info!("task features are flat; using uniform task weights");
    }
    let kernels = task_features
        .iter()
        .map(|f| FeatureKernel { mean: *f, weight: if flat { T::one() } else { f.r.r1.max(T::zero()) / max_r1 } })
        .collect();
    Ok(TaskModel { density: MixtureDensity::new(kernels, bw)? })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContactKernel<T: Real> {
    /// Object-model kernel this was taken from.
    pub source: usize,
    /// Link pose in the source feature's frame.
    pub u: Pose<T>,
    pub r: Curvature2<T>,
    pub weight: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContactLink<T: Real> {
    pub kernels: Vec<ContactKernel<T>>,
    cumulative: Vec<f64>,
}

impl<T: Real> ContactLink<T> {
    pub fn new(kernels: Vec<ContactKernel<T>>) -> Result<Self> {
        if kernels.is_empty() {
            return Err(Error::EmptyInput("contact link needs kernels"));
        }
        let mut cumulative = Vec::with_capacity(kernels.len());
        let mut acc = 0.0;
        for k in &kernels {
            let w = k.weight.to_f64_lossy();
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::InvalidParameter("contact weights must be finite and non-negative".into()));
            }
            acc += w;
            cumulative.push(acc);
        }
        if (acc - 1.0).abs() > T::sum_tolerance(kernels.len()) {
            return Err(Error::InvalidParameter(format!("contact weights sum to {acc}, not 1")));
        }
        Ok(Self { kernels, cumulative })
    }

    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u = rng.random::<f64>() * self.cumulative[self.cumulative.len() - 1];
        self.cumulative.partition_point(|&c| c <= u).min(self.kernels.len() - 1)
    }
}

/// Pose of task feature `j` in the frame of object feature `i`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TaskOffset<T: Real> {
    pub i: usize,
    pub j: usize,
    pub u: Pose<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContactModel<T: Real> {
    pub links: Vec<ContactLink<T>>,
    /// Sorted by `(i, j)`.
    pub task_offsets: Vec<TaskOffset<T>>,
    pub bandwidths: Bandwidths<T>,
}

impl<T: Real> ContactModel<T> {
    pub fn new(links: Vec<ContactLink<T>>, mut task_offsets: Vec<TaskOffset<T>>, bandwidths: Bandwidths<T>) -> Self {
        task_offsets.sort_by_key(|o| (o.i, o.j));
        Self { links, task_offsets, bandwidths }
    }

    /// Stored offsets whose source is object kernel `i`.
    pub fn offsets_for(&self, i: usize) -> &[TaskOffset<T>] {
        let lo = self.task_offsets.partition_point(|o| o.i < i);
        let hi = self.task_offsets.partition_point(|o| o.i <= i);
        &self.task_offsets[lo..hi]
    }

    pub fn log_eval(&self, link: usize, u: &Pose<T>, r: &Curvature2<T>) -> f64 {
        let ev = FeatureKernelEval::new(&self.bandwidths);
        let s = SurfaceFeature::new(*u, *r);
        let mut acc = LogSumExp::default();
        for k in &self.links[link].kernels {
            let w = k.weight.to_f64_lossy();
            if w > 0.0 {
                acc.add(w.ln() + ev.log_eval(&s, &SurfaceFeature::new(k.u, k.r)));
            }
        }
        acc.value()
    }

    pub fn log_marginal_curvature(&self, link: usize, r: &Curvature2<T>) -> f64 {
        let ev = FeatureKernelEval::new(&self.bandwidths);
        let mut acc = LogSumExp::default();
        for k in &self.links[link].kernels {
            let w = k.weight.to_f64_lossy();
            if w > 0.0 {
                acc.add(w.ln() + ev.log_curvature(r, &k.r));
            }
        }
        acc.value()
    }
}

/// Keeps `n_c` object kernels per link (uniformly, without replacement) and records
/// where the link sat relative to each of them, plus every task feature's pose
/// relative to each kept kernel.
///
/// Kernels are drawn from the link's own contact region when the object model was
/// built per link, otherwise from the whole object model.
pub fn learn_contact_model<T: Real>(
    record: &DemonstrationRecord<T>,
    object: &ObjectModel<T>,
    task: &TaskModel<T>,
    n_c: usize,
    bw_c: Bandwidths<T>,
    seed: u64,
) -> Result<ContactModel<T>> {
    if n_c == 0 {
        return Err(Error::InvalidParameter("N_c must be positive".into()));
    }
    let okernels = object.density.kernels();
    let mut links = Vec::with_capacity(record.links.len());
    let mut sources: Vec<usize> = Vec::new();
    for (n, demo) in record.links.iter().enumerate() {
        let mut pool: Vec<usize> = (0..okernels.len()).filter(|&i| object.region.get(i) == Some(&n)).collect();
        if pool.is_empty() {
            pool = (0..okernels.len()).collect();
        }
        if n_c > pool.len() {
            return Err(Error::DownsampleOverflow { requested: n_c, available: pool.len() });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(n as u64);
        let mut picked: Vec<usize> = index::sample(&mut rng, pool.len(), n_c).into_iter().map(|k| pool[k]).collect();
        picked.sort_unstable();
        let w = T::one() / T::from_usize(n_c).unwrap_or_else(T::one);
        let kernels = picked
            .iter()
            .map(|&i| {
                let v = okernels[i].mean;
                ContactKernel { source: i, u: relative_pose(&v.pose, &demo.link), r: v.r, weight: w }
            })
            .collect();
        sources.extend_from_slice(&picked);
        links.push(ContactLink::new(kernels)?);
    }
    sources.sort_unstable();
    sources.dedup();
    let tk = task.density.kernels();
    let mut offsets = Vec::with_capacity(sources.len() * tk.len());
    for &i in &sources {
        let vi = okernels[i].mean.pose;
        for (j, t) in tk.iter().enumerate() {
            offsets.push(TaskOffset { i, j, u: relative_pose(&vi, &t.mean.pose) });
        }
    }
    Ok(ContactModel::new(links, offsets, bw_c))
}

pub fn contact_eval<T: Real>(m: &ContactModel<T>, link: usize, u: &Pose<T>, r: &Curvature2<T>) -> T {
    T::lit(m.log_eval(link, u, r).exp())
}

/// How a candidate formation is aligned with the demonstrations before comparison.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum FormationAnchor {
    /// Compare poses in world coordinates as given.
    World,
    /// Translate the candidate so its link centroid matches the demonstration's.
    #[default]
    LinkCentroid,
}

impl FormationAnchor {
    pub fn name(self) -> &'static str {
        match self {
            FormationAnchor::World => "world",
            FormationAnchor::LinkCentroid => "link-centroid",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "world" => Some(FormationAnchor::World),
            "link-centroid" => Some(FormationAnchor::LinkCentroid),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConfigKernel<T: Real> {
    pub record: usize,
    pub drone: Pose<T>,
    pub link: Pose<T>,
}

/// Demonstrated drone/link pairs, used as a similarity-gated kernel density over
/// link poses.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigurationModel<T: Real> {
    pub kernels: Vec<ConfigKernel<T>>,
    pub alpha: T,
    pub sigma_p: T,
    pub sigma_q: T,
    pub rot_weight: T,
    pub anchor: FormationAnchor,
}

impl<T: Real> ConfigurationModel<T> {
    pub fn new(
        kernels: Vec<ConfigKernel<T>>,
        alpha: T,
        sigma_p: T,
        sigma_q: T,
        rot_weight: T,
        anchor: FormationAnchor,
    ) -> Result<Self> {
        if kernels.is_empty() {
            return Err(Error::EmptyInput("configuration model needs kernels"));
        }
        if !(alpha > T::zero() && alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!("alpha must be finite and positive, got {alpha}")));
        }
        Bandwidths::new(sigma_p, sigma_q, T::one())?;
        if !(rot_weight >= T::zero() && rot_weight.is_finite()) {
            return Err(Error::InvalidParameter(format!("rot_weight must be non-negative, got {rot_weight}")));
        }
        Ok(Self { kernels, alpha, sigma_p, sigma_q, rot_weight, anchor })
    }

    fn record_centroid(&self, record: usize) -> Vec3<T> {
        centroid(self.kernels.iter().filter(|k| k.record == record).map(|k| k.link.p))
    }

    /// `ln H` summed over the candidate pairs (the log of the per-pair product).
    pub fn log_eval(&self, candidate: &[LinkDemo<T>]) -> f64 {
        let pk = PoseKernel::new(self.sigma_p, self.sigma_q);
        let alpha = self.alpha.to_f64_lossy();
        let nrec = self.kernels.iter().map(|k| k.record).max().unwrap_or(0) + 1;
        let shifts: Vec<Vec3<T>> = match self.anchor {
            FormationAnchor::World => vec![Vec3::zero(); nrec],
            FormationAnchor::LinkCentroid => {
                let c = centroid(candidate.iter().map(|h| h.link.p));
                (0..nrec).map(|r| self.record_centroid(r) - c).collect()
            }
        };
        let mut total = 0.0;
        for h in candidate {
            let mut acc = LogSumExp::default();
            for k in &self.kernels {
                let t = shifts[k.record];
                let b = Pose::new(h.drone.p + t, h.drone.q);
                let l = Pose::new(h.link.p + t, h.link.q);
                let d = pose_distance(&b, &k.drone, self.rot_weight).to_f64_lossy();
                acc.add(-alpha * d * d + pk.log_eval(&l, &k.link));
            }
            total += acc.value();
        }
        total
    }

    /// Drone pose for link `n` placed at `link`: the demonstrated offset from link to
    /// drone is kept fixed in world axes and the drone keeps its demonstrated attitude.
    pub fn drone_for_link(&self, n: usize, link: &Pose<T>) -> Pose<T> {
        let k = self.kernels.iter().filter(|k| k.record == 0).nth(n).unwrap_or(&self.kernels[0]);
        Pose::new(link.p + (k.drone.p - k.link.p), k.drone.q)
    }
}

fn centroid<T: Real>(pts: impl Iterator<Item = Vec3<T>>) -> Vec3<T> {
    let mut sum = Vec3::zero();
    let mut n = 0usize;
    for p in pts {
        sum += p;
        n += 1;
    }
    if n == 0 {
        sum
    } else {
        sum * (T::one() / T::from_usize(n).unwrap_or_else(T::one))
    }
}

pub fn learn_configuration_model<T: Real>(
    records: &[DemonstrationRecord<T>],
    alpha: T,
    bw: &Bandwidths<T>,
) -> Result<ConfigurationModel<T>> {
    if records.is_empty() {
        return Err(Error::EmptyInput("configuration model needs a demonstration"));
    }
    let kernels = records
        .iter()
        .enumerate()
        .flat_map(|(r, rec)| rec.links.iter().map(move |l| ConfigKernel { record: r, drone: l.drone, link: l.link }))
        .collect();
    ConfigurationModel::new(kernels, alpha, bw.sigma_p, bw.sigma_q, T::one(), FormationAnchor::default())
}

pub fn configuration_eval<T: Real>(h: &ConfigurationModel<T>, candidate: &[LinkDemo<T>]) -> T {
    T::lit(h.log_eval(candidate).exp())
}

/// Everything needed to learn a bundle from one demonstration.
#[derive(Clone, Debug, PartialEq)]
pub struct LearnParams<T> {
    pub k_neighbors: usize,
    pub contact_radius: T,
    pub n_o: usize,
    pub n_t: usize,
    pub n_c: usize,
    pub surface_bw: Bandwidths<T>,
    pub task_bw: Bandwidths<T>,
    pub contact_bw: Bandwidths<T>,
    pub alpha: T,
    pub rot_weight: T,
    pub anchor: FormationAnchor,
    pub seed: u64,
}

impl<T: Real> Default for LearnParams<T> {
    fn default() -> Self {
        let bw = |p: f64| Bandwidths { sigma_p: T::lit(p), sigma_q: T::lit(100.0), sigma_r: T::lit(10.0) };
        Self {
            k_neighbors: 30,
            contact_radius: T::lit(0.05),
            n_o: 500,
            n_t: 50,
            n_c: 500,
            surface_bw: bw(0.01),
            task_bw: bw(0.05),
            contact_bw: bw(0.01),
            alpha: T::lit(10.0),
            rot_weight: T::one(),
            anchor: FormationAnchor::default(),
            seed: 0,
        }
    }
}

/// Learns all four models from one demonstration.
///
/// Each link gets its own contact region of `n_o` features (seed `seed + 1000 + n`),
/// the task model uses `seed + 1` and the contact downsampling `seed + 2`.
pub fn learn_bundle<T: Real>(record: &DemonstrationRecord<T>, p: &LearnParams<T>) -> Result<ModelBundle<T>> {
    let regions = record
        .links
        .iter()
        .enumerate()
        .map(|(n, l)| {
            crate::cloud::sample_contact_region(
                &record.cloud,
                &l.link,
                p.contact_radius,
                p.n_o,
                p.k_neighbors,
                p.seed.wrapping_add(1000 + n as u64),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let object = ObjectModel::from_regions(&regions, p.surface_bw)?;
    let task_features = crate::cloud::sample_task_features(&record.cloud, p.n_t, p.k_neighbors, p.seed.wrapping_add(1))?;
    let task = learn_task_model(&task_features, p.task_bw)?;
    let contact = learn_contact_model(record, &object, &task, p.n_c, p.contact_bw, p.seed.wrapping_add(2))?;
    let mut configuration = learn_configuration_model(std::slice::from_ref(record), p.alpha, &p.contact_bw)?;
    configuration.rot_weight = p.rot_weight;
    configuration.anchor = p.anchor;
    Ok(ModelBundle {
        label: record.label.clone(),
        meta: BundleMeta { k_neighbors: p.k_neighbors, contact_radius: p.contact_radius.to_f64_lossy(), seed: p.seed },
        surface_bw: p.surface_bw,
        task_bw: p.task_bw,
        object,
        task,
        contact,
        configuration,
    })
}
