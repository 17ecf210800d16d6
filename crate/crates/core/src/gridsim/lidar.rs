use super::{GridMap, Pose, OCCUPIED};

/// One lidar reading: a range per beam, in cells.
#[derive(Clone, Debug, PartialEq)]
pub struct LidarScan {
    pub ranges: Vec<f64>,
}

impl LidarScan {
    pub fn len(&self) -> usize {
        self.ranges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranges.is_empty()
    }
}

/// Masked labeling `z`: the true label on cells hit by a beam, 0 elsewhere.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ObservationVector {
    z: Vec<i8>,
}

impl ObservationVector {
    pub fn values(&self) -> &[i8] {
        &self.z
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BeamHit {
    /// Occupied cell that stopped the beam, if any within range.
    pub cell: Option<usize>,
    pub range: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Lidar {
    max_range: f64,
    resolution: f64,
    /// Beam offsets from the heading in radians, counterclockwise positive.
    offsets: Vec<f64>,
}

impl Default for Lidar {
    fn default() -> Self {
        Self::new(100, 240.0, 10.0)
    }
}

impl Lidar {
    pub fn new(beams: usize, fov_deg: f64, max_range: f64) -> Self {
        assert!(beams > 0 && max_range > 0.0);
        let offsets = (0..beams)
            .map(|i| {
                if beams == 1 {
                    0.0
                } else {
                    (-fov_deg / 2.0 + fov_deg * i as f64 / (beams - 1) as f64).to_radians()
                }
            })
            .collect();
        Self {
            max_range,
            resolution: 0.1,
            offsets,
        }
    }

    pub fn beams(&self) -> usize {
        self.offsets.len()
    }

    pub fn max_range(&self) -> f64 {
        self.max_range
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    /// Beam offsets relative to the heading, in degrees.
    pub fn beam_angles(&self) -> Vec<f64> {
        self.offsets.iter().map(|o| o.to_degrees()).collect()
    }

    /// Unit direction of beam `i` in grid coordinates (y down).
    pub fn direction(&self, pose: Pose, i: usize) -> (f64, f64) {
        let (hx, hy) = pose.heading.delta();
        let (hx, hy) = (hx as f64, hy as f64);
        let (s, c) = self.offsets[i].sin_cos();
        (hx * c + hy * s, -hx * s + hy * c)
    }

    /// Marches every beam from the cell center in `resolution` steps. The
    /// range is the distance to the hit cell's center, never shorter than
    /// the march distance at which the cell was entered, capped at
    /// `max_range`.
    pub fn trace(&self, map: &GridMap, pose: Pose) -> Vec<BeamHit> {
        let ox = pose.x as f64 + 0.5;
        let oy = pose.y as f64 + 0.5;
        let samples = (self.max_range / self.resolution).round() as usize;
        (0..self.beams())
            .map(|i| {
                let (dx, dy) = self.direction(pose, i);
                for k in 1..=samples {
                    let t = k as f64 * self.resolution;
                    let cx = (ox + t * dx).floor() as isize;
                    let cy = (oy + t * dy).floor() as isize;
                    let inside = map.in_bounds(cx, cy);
                    if !inside || map.label(cx as usize, cy as usize) == OCCUPIED {
                        let center = (cx as f64 + 0.5 - ox).hypot(cy as f64 + 0.5 - oy);
                        return BeamHit {
                            cell: inside.then(|| map.index(cx as usize, cy as usize)),
                            range: center.max(t).min(self.max_range),
                        };
                    }
                }
                BeamHit {
                    cell: None,
                    range: self.max_range,
                }
            })
            .collect()
    }

    pub fn scan(&self, map: &GridMap, pose: Pose) -> LidarScan {
        LidarScan {
            ranges: self.trace(map, pose).into_iter().map(|h| h.range).collect(),
        }
    }

    /// Visibility operator applied to the hidden labeling. Free cells read
    /// 0 whether seen or not, so only hit cells carry information.
    pub fn observe(&self, map: &GridMap, pose: Pose) -> ObservationVector {
        let mut z = vec![0i8; map.len()];
        for hit in self.trace(map, pose) {
            if let Some(c) = hit.cell {
                z[c] = map.labels()[c];
            }
        }
        ObservationVector { z }
    }
}
