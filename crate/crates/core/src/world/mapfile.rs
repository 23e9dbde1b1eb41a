//! Map files: a binary (P5) or ASCII (P2) portable graymap holding the
//! raster, plus a TOML sidecar with the metric frame. Pixels darker than
//! `occupied_below` are occupied. The first raster row is the top of the
//! map (largest y), as in ROS map_server images.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{OccupancyGrid, WorldError};
use crate::geometry::Pose2D;

fn default_threshold() -> u8 {
    128
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSidecar {
    /// Raster path, relative to the sidecar file.
    pub image: String,
    pub resolution: f64,
    /// `[x, y, heading]` of the lower-left corner of the raster.
    pub origin: [f64; 3],
    #[serde(default = "default_threshold")]
    pub occupied_below: u8,
}

/// Parsed PGM raster, rows top to bottom.
struct Raster {
    width: usize,
    height: usize,
    maxval: u16,
    pixels: Vec<u16>,
}

fn map_err(msg: impl Into<String>) -> WorldError {
    WorldError::MapFile(msg.into())
}

/// Splits header tokens, skipping `#` comments. Returns the tokens and the
/// byte offset just past the single whitespace byte after the last token.
fn header_tokens(data: &[u8], count: usize) -> Result<(Vec<String>, usize), WorldError> {
    let mut tokens = Vec::with_capacity(count);
    let mut i = 0;
    while tokens.len() < count {
        while i < data.len() && data[i].is_ascii_whitespace() {
            i += 1;
        }
        if i < data.len() && data[i] == b'#' {
            while i < data.len() && data[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        while i < data.len() && !data[i].is_ascii_whitespace() && data[i] != b'#' {
            i += 1;
        }
        if start == i {
            return Err(map_err("truncated PGM header"));
        }
        tokens.push(String::from_utf8_lossy(&data[start..i]).into_owned());
    }
    Ok((tokens, i + 1))
}

fn parse_raster(data: &[u8]) -> Result<Raster, WorldError> {
    let (hdr, body_start) = header_tokens(data, 4)?;
    let magic = hdr[0].as_str();
    let num = |s: &str, what: &str| s.parse::<usize>().map_err(|_| map_err(format!("bad PGM {what}: {s:?}")));
    let width = num(&hdr[1], "width")?;
    let height = num(&hdr[2], "height")?;
    let maxval = num(&hdr[3], "maxval")?;
    if width == 0 || height == 0 {
        return Err(map_err("PGM has zero size"));
    }
    if maxval == 0 || maxval > 255 {
        return Err(map_err(format!("unsupported PGM maxval {maxval} (1..=255 supported)")));
    }
    let n = width * height;
    let pixels: Vec<u16> = match magic {
        "P5" => {
            let body = data.get(body_start..body_start + n).ok_or_else(|| map_err("truncated P5 raster"))?;
            body.iter().map(|&b| u16::from(b)).collect()
        }
        "P2" => {
            let text = std::str::from_utf8(&data[body_start.min(data.len())..])
                .map_err(|_| map_err("P2 raster is not ASCII"))?;
            let values: Result<Vec<u16>, _> = text
                .lines()
                .map(|l| l.split('#').next().unwrap_or(""))
                .flat_map(str::split_whitespace)
                .map(str::parse::<u16>)
                .collect();
            let values = values.map_err(|_| map_err("bad P2 pixel value"))?;
            if values.len() != n {
                return Err(map_err(format!("P2 raster has {} values, expected {n}", values.len())));
            }
            values
        }
        other => return Err(map_err(format!("unsupported image magic {other:?} (P2 or P5 expected)"))),
    };
    if pixels.iter().any(|&p| usize::from(p) > maxval) {
        return Err(map_err("pixel value exceeds maxval"));
    }
    Ok(Raster { width, height, maxval: maxval as u16, pixels })
}

/// Decodes a PGM raster into an occupancy grid with the given frame.
pub fn parse_pgm(
    data: &[u8],
    resolution: f64,
    origin: Pose2D,
    occupied_below: u8,
) -> Result<OccupancyGrid, WorldError> {
    let raster = parse_raster(data)?;
    // Rescale so the threshold is always on the 0..=255 scale.
    let scale = 255.0 / f64::from(raster.maxval);
    let mut cells = vec![false; raster.width * raster.height];
    for row in 0..raster.height {
        let grid_row = raster.height - 1 - row;
        for col in 0..raster.width {
            let v = f64::from(raster.pixels[row * raster.width + col]) * scale;
            cells[grid_row * raster.width + col] = v < f64::from(occupied_below);
        }
    }
    OccupancyGrid::new(resolution, raster.width, raster.height, origin, cells)
}

/// Encodes the grid as a P5 raster: occupied = 0, free = 254.
pub fn write_pgm(grid: &OccupancyGrid) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", grid.width(), grid.height()).into_bytes();
    for row in (0..grid.height()).rev() {
        for col in 0..grid.width() {
            out.push(if grid.is_occupied((col, row)) { 0 } else { 254 });
        }
    }
    out
}

fn read(path: &Path) -> Result<Vec<u8>, WorldError> {
    fs::read(path).map_err(|source| WorldError::Io { path: path.display().to_string(), source })
}

/// Loads a map from its TOML sidecar.
pub fn load_map(sidecar_path: impl AsRef<Path>) -> Result<OccupancyGrid, WorldError> {
    let sidecar_path = sidecar_path.as_ref();
    let text = String::from_utf8(read(sidecar_path)?).map_err(|_| map_err("sidecar is not UTF-8"))?;
    let sidecar: MapSidecar = toml::from_str(&text).map_err(|e| map_err(format!("{}: {e}", sidecar_path.display())))?;
    let image_path: PathBuf = sidecar_path.parent().unwrap_or(Path::new(".")).join(&sidecar.image);
    let data = read(&image_path)?;
    let [x, y, heading] = sidecar.origin;
    parse_pgm(&data, sidecar.resolution, Pose2D::new(x, y, heading), sidecar.occupied_below)
}

/// Writes `<stem>.pgm` next to the sidecar path and the sidecar itself.
pub fn save_map(grid: &OccupancyGrid, sidecar_path: impl AsRef<Path>) -> Result<(), WorldError> {
    let sidecar_path = sidecar_path.as_ref();
    let stem =
        sidecar_path.file_stem().and_then(|s| s.to_str()).ok_or_else(|| map_err("sidecar path has no file name"))?;
    let stem = stem.strip_suffix(".map").unwrap_or(stem);
    let image = format!("{stem}.pgm");
    let dir = sidecar_path.parent().unwrap_or(Path::new("."));
    let origin = grid.origin();
    let sidecar = MapSidecar {
        image: image.clone(),
        resolution: grid.resolution(),
        origin: [origin.x, origin.y, origin.heading],
        occupied_below: default_threshold(),
    };
    let io = |path: &Path, e| WorldError::Io { path: path.display().to_string(), source: e };
    let image_path = dir.join(&image);
    fs::write(&image_path, write_pgm(grid)).map_err(|e| io(&image_path, e))?;
    let text = toml::to_string(&sidecar).map_err(|e| map_err(e.to_string()))?;
    fs::write(sidecar_path, text).map_err(|e| io(sidecar_path, e))
}
