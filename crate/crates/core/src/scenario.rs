//! Synthetic demand and instance files.
//!
//! Random draws use ChaCha8 (`rand_chacha`) seeded through
//! `SeedableRng::seed_from_u64`, which is portable across platforms.
//!
//! JSON instances look like
//! `{"params": {...}, "requests": [{"id", "ox", "oy", "dx", "dy", "depart_at"}]}`;
//! CSV files carry only the requests under the header `id,ox,oy,dx,dy,depart_at`.

use std::fs;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CtgError, Result};
use crate::model::{validate_requests, CostParams, Point, TripRequest};

/// Requests plus the cost parameters they are priced with.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub params: CostParams,
    pub requests: Vec<TripRequest>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Geometry {
    /// Uniform over `[0, width] x [0, height]` km; the centre is the box centre.
    Box { width: f64, height: f64 },
    /// Uniform over a disc of `radius` km around the origin.
    RingRadial { radius: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum DestinationMode {
    /// Drawn like origins.
    Uniform,
    /// Everyone goes to the centre.
    CommonCenter,
    /// Uniform over a disc of `spread` km around the centre.
    CenterBiased { spread: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DemandConfig {
    pub n_riders: usize,
    pub window_seconds: f64,
    pub geometry: Geometry,
    pub seed: u64,
    pub destination_mode: DestinationMode,
}

impl Default for DemandConfig {
    fn default() -> Self {
        Self {
            n_riders: 50,
            window_seconds: 600.0,
            geometry: Geometry::Box {
                width: 10.0,
                height: 10.0,
            },
            seed: 42,
            destination_mode: DestinationMode::CenterBiased { spread: 1.5 },
        }
    }
}

impl DemandConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_riders == 0 {
            return Err(CtgError::InvalidParameter("n_riders must be at least 1".into()));
        }
        if !(self.window_seconds >= 0.0 && self.window_seconds.is_finite()) {
            return Err(CtgError::InvalidParameter("window must be non-negative".into()));
        }
        let positive = |v: f64| v > 0.0 && v.is_finite();
        let geometry_ok = match self.geometry {
            Geometry::Box { width, height } => positive(width) && positive(height),
            Geometry::RingRadial { radius } => positive(radius),
        };
        if !geometry_ok {
            return Err(CtgError::InvalidParameter("geometry sizes must be positive".into()));
        }
        if let DestinationMode::CenterBiased { spread } = self.destination_mode {
            if !positive(spread) {
                return Err(CtgError::InvalidParameter("spread must be positive".into()));
            }
        }
        Ok(())
    }
}

fn in_disc(rng: &mut ChaCha8Rng, center: Point, radius: f64) -> Point {
    let r = radius * rng.gen::<f64>().sqrt();
    let a = rng.gen_range(0.0..std::f64::consts::TAU);
    Point::new(center.x + r * a.cos(), center.y + r * a.sin())
}

type PointSampler = Box<dyn Fn(&mut ChaCha8Rng) -> Point>;

/// Seeded synthetic requests.
pub fn generate_demand(config: &DemandConfig) -> Result<Vec<TripRequest>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (center, draw): (Point, PointSampler) = match config.geometry {
        Geometry::Box { width, height } => (
            Point::new(width / 2.0, height / 2.0),
            Box::new(move |rng: &mut ChaCha8Rng| {
                Point::new(rng.gen_range(0.0..width), rng.gen_range(0.0..height))
            }),
        ),
        Geometry::RingRadial { radius } => (
            Point::new(0.0, 0.0),
            Box::new(move |rng: &mut ChaCha8Rng| in_disc(rng, Point::new(0.0, 0.0), radius)),
        ),
    };
    let mut out = Vec::with_capacity(config.n_riders);
    for id in 0..config.n_riders {
        let depart_at = if config.window_seconds > 0.0 {
            rng.gen_range(0.0..=config.window_seconds)
        } else {
            0.0
        };
        let (origin, destination) = loop {
            let o = draw(&mut rng);
            let d = match config.destination_mode {
                DestinationMode::Uniform => draw(&mut rng),
                DestinationMode::CommonCenter => center,
                DestinationMode::CenterBiased { spread } => in_disc(&mut rng, center, spread),
            };
            if o != d {
                break (o, d);
            }
        };
        out.push(TripRequest::new(id, origin, destination, depart_at));
    }
    Ok(out)
}

#[derive(Serialize, Deserialize)]
struct RequestRecord {
    id: usize,
    ox: f64,
    oy: f64,
    dx: f64,
    dy: f64,
    depart_at: f64,
}

impl From<&TripRequest> for RequestRecord {
    fn from(r: &TripRequest) -> Self {
        Self {
            id: r.id,
            ox: r.origin.x,
            oy: r.origin.y,
            dx: r.destination.x,
            dy: r.destination.y,
            depart_at: r.depart_at,
        }
    }
}

impl From<RequestRecord> for TripRequest {
    fn from(r: RequestRecord) -> Self {
        TripRequest::new(
            r.id,
            Point::new(r.ox, r.oy),
            Point::new(r.dx, r.dy),
            r.depart_at,
        )
    }
}

#[derive(Serialize, Deserialize)]
struct InstanceRecord {
    params: CostParams,
    requests: Vec<RequestRecord>,
}

impl From<InstanceRecord> for Instance {
    fn from(rec: InstanceRecord) -> Self {
        Instance {
            params: rec.params,
            requests: rec.requests.into_iter().map(Into::into).collect(),
        }
    }
}

/// Parses and validates a JSON instance held in memory.
pub fn instance_from_json(text: &str) -> Result<Instance> {
    let rec: InstanceRecord =
        serde_json::from_str(text).map_err(|e| CtgError::InvalidInstance(e.to_string()))?;
    let inst = Instance::from(rec);
    validate_requests(&inst.requests)?;
    inst.params.validate()?;
    Ok(inst)
}

fn is_csv(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CtgError + '_ {
    move |source| CtgError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn read_csv(path: &Path) -> Result<Vec<TripRequest>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CtgError::Row {
            path: path.to_path_buf(),
            row: 0,
            message: e.to_string(),
        })?;
    let expected = ["id", "ox", "oy", "dx", "dy", "depart_at"];
    let header = reader.headers().map_err(|e| CtgError::Row {
        path: path.to_path_buf(),
        row: 0,
        message: e.to_string(),
    })?;
    if header.iter().collect::<Vec<_>>() != expected {
        return Err(CtgError::Row {
            path: path.to_path_buf(),
            row: 0,
            message: format!("expected header {}", expected.join(",")),
        });
    }
    let mut out = Vec::new();
    for (k, rec) in reader.deserialize::<RequestRecord>().enumerate() {
        // row 1 is the first data row
        let rec = rec.map_err(|e| CtgError::Row {
            path: path.to_path_buf(),
            row: k + 1,
            message: e.to_string(),
        })?;
        out.push(rec.into());
    }
    Ok(out)
}

/// Reads requests from a JSON instance or a CSV file (chosen by extension).
pub fn load_requests(path: impl AsRef<Path>) -> Result<Vec<TripRequest>> {
    Ok(load_instance(path)?.requests)
}

/// Reads an instance. CSV files get default cost parameters.
pub fn load_instance(path: impl AsRef<Path>) -> Result<Instance> {
    let path = path.as_ref();
    let inst = if is_csv(path) {
        Instance {
            params: CostParams::default(),
            requests: read_csv(path)?,
        }
    } else {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        let rec: InstanceRecord = serde_json::from_str(&text).map_err(|source| CtgError::Json {
            path: path.to_path_buf(),
            source,
        })?;
        rec.into()
    };
    validate_requests(&inst.requests)?;
    inst.params.validate()?;
    Ok(inst)
}

/// Writes an instance as JSON, or its requests as CSV (chosen by extension).
pub fn save_instance(path: impl AsRef<Path>, instance: &Instance) -> Result<()> {
    let path = path.as_ref();
    if is_csv(path) {
        let mut writer = csv::Writer::from_path(path).map_err(|e| CtgError::Row {
            path: path.to_path_buf(),
            row: 0,
            message: e.to_string(),
        })?;
        for (k, r) in instance.requests.iter().enumerate() {
            writer
                .serialize(RequestRecord::from(r))
                .map_err(|e| CtgError::Row {
                    path: path.to_path_buf(),
                    row: k + 1,
                    message: e.to_string(),
                })?;
        }
        writer.flush().map_err(io_err(path))?;
        return Ok(());
    }
    let rec = InstanceRecord {
        params: instance.params,
        requests: instance.requests.iter().map(Into::into).collect(),
    };
    let text = serde_json::to_string_pretty(&rec).expect("instance serialises");
    fs::write(path, text + "\n").map_err(io_err(path))
}
