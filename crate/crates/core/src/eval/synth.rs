//! Synthetic hand generator with known ground truth.
//!
//! Poses are built in a local hand frame (lateral axis `u` toward the thumb,
//! axis `v` from wrist toward the fingers, units of hand scale) and then
//! rotated, scaled and placed in the image. Because every finger is laid out
//! explicitly as extended or folded, the construction labels are an oracle the
//! encoder can be checked against.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::encoder::{Extension, Facing, Finger, Point2};
use crate::frame::{self, HandFrame, Handedness, Landmark, LANDMARK_COUNT};

/// Fan angle (degrees, positive toward the thumb side) of each finger in an
/// open hand, thumb..pinky. The thumb entry is unused.
pub const OPEN_SPREAD_DEG: [f64; 5] = [0.0, 25.0, 5.0, -12.0, -30.0];

const FINGER_LENGTH: [f64; 5] = [0.0, 1.0, 1.1, 1.0, 0.8];

// (u, v) of wrist-relative palm joints in hand-scale units.
const INDEX_MCP: (f64, f64) = (0.26, 1.0);
const MIDDLE_MCP: (f64, f64) = (0.04, 1.05);
const RING_MCP: (f64, f64) = (-0.15, 1.0);
const PINKY_MCP: (f64, f64) = (-0.30, 0.92);

#[derive(Debug, Clone, PartialEq)]
pub struct HandPose {
    pub handedness: Handedness,
    /// `Toward` or `Away`; anything else is treated as `Toward`.
    pub facing: Facing,
    /// Screen angle of the wrist-to-fingers axis in degrees (90 = up).
    pub rotation_deg: f64,
    /// Image length of one hand unit (wrist to MCP row is about one unit).
    pub scale: f64,
    /// Where the palm center lands in the image.
    pub center: Point2,
    pub extension: Extension,
    pub spread_deg: [f64; 5],
    pub length_factor: [f64; 5],
}

impl Default for HandPose {
    fn default() -> Self {
        Self {
            handedness: Handedness::Right,
            facing: Facing::Toward,
            rotation_deg: 90.0,
            scale: 0.18,
            center: Point2::new(0.5, 0.5),
            extension: Extension::OPEN,
            spread_deg: OPEN_SPREAD_DEG,
            length_factor: [1.0; 5],
        }
    }
}

impl HandPose {
    pub fn with_extension(mut self, ext: Extension) -> Self {
        self.extension = ext;
        self
    }

    pub fn with_rotation(mut self, deg: f64) -> Self {
        self.rotation_deg = deg;
        self
    }

    pub fn with_facing(mut self, facing: Facing) -> Self {
        self.facing = facing;
        self
    }

    pub fn with_center(mut self, center: Point2) -> Self {
        self.center = center;
        self
    }

    /// Index-only pose with the index aligned to the hand axis.
    pub fn pointing(rotation_deg: f64) -> Self {
        let mut spread = OPEN_SPREAD_DEG;
        spread[Finger::Index.ordinal()] = 0.0;
        Self {
            rotation_deg,
            extension: Extension::from_fingers(&[Finger::Index]),
            spread_deg: spread,
            ..Self::default()
        }
    }

    fn lateral_sign(&self) -> f64 {
        let toward = self.facing != Facing::Away;
        match (self.handedness, toward) {
            (Handedness::Right, true) | (Handedness::Left, false) => 1.0,
            _ => -1.0,
        }
    }

    /// Local (u, v, z) coordinates of all 21 landmarks, hand units.
    pub fn local_points(&self) -> [[f64; 3]; LANDMARK_COUNT] {
        let mut p = [[0.0; 3]; LANDMARK_COUNT];
        p[frame::WRIST] = [0.0, 0.0, 0.0];
        p[1] = [0.25, 0.2, 0.0];
        p[frame::THUMB_MCP] = [0.5, 0.4, 0.0];
        if self.extension.is_extended(Finger::Thumb) {
            p[frame::THUMB_IP] = [0.85, 0.6, 0.0];
            p[frame::THUMB_TIP] = [1.3, 0.8, 0.0];
        } else {
            p[frame::THUMB_IP] = [0.45, 0.7, -0.1];
            p[frame::THUMB_TIP] = [0.05, 0.8, -0.15];
        }
        let mcps = [(Finger::Index, INDEX_MCP), (Finger::Middle, MIDDLE_MCP), (Finger::Ring, RING_MCP), (Finger::Pinky, PINKY_MCP)];
        for (finger, (mu, mv)) in mcps {
            let k = finger.ordinal();
            let len = FINGER_LENGTH[k] * self.length_factor[k];
            let base = finger.mcp();
            p[base] = [mu, mv, 0.0];
            if self.extension.is_extended(finger) {
                let a = self.spread_deg[k].to_radians();
                let (du, dv) = (a.sin(), a.cos());
                for (j, frac) in [0.4, 0.7, 1.0].into_iter().enumerate() {
                    p[base + 1 + j] = [mu + frac * len * du, mv + frac * len * dv, 0.0];
                }
            } else {
                p[base + 1] = [mu, mv + 0.35 * len, -0.15 * len];
                p[base + 2] = [mu, mv + 0.15 * len, -0.35 * len];
                p[base + 3] = [mu, mv - 0.25 * len, -0.25 * len];
            }
        }
        p
    }

    pub fn landmarks(&self) -> [Landmark; LANDMARK_COUNT] {
        let local = self.local_points();
        let palm = [frame::WRIST, frame::INDEX_MCP, frame::MIDDLE_MCP, frame::RING_MCP, frame::PINKY_MCP];
        let cu = palm.iter().map(|&i| local[i][0]).sum::<f64>() / 5.0;
        let cv = palm.iter().map(|&i| local[i][1]).sum::<f64>() / 5.0;
        let phi = self.rotation_deg.to_radians();
        let axis = (phi.cos(), -phi.sin());
        let s = self.lateral_sign();
        let lateral = (s * phi.sin(), s * phi.cos());
        local.map(|[u, v, z]| {
            let (u, v) = (u - cu, v - cv);
            Landmark::new(
                self.center.x + self.scale * (u * lateral.0 + v * axis.0),
                self.center.y + self.scale * (u * lateral.1 + v * axis.1),
                self.scale * z,
            )
        })
    }

    /// Builds a frame without any clamping side effects checked; callers keep
    /// poses inside the image.
    pub fn frame(&self, timestamp: f64, confidence: f64) -> HandFrame {
        HandFrame::new(timestamp, self.handedness, confidence, &self.landmarks()).expect("synthetic frame is valid")
    }

    /// Signed radial margin per finger in image units: positive means the
    /// construction label is honoured with that much room.
    pub fn extension_margins(&self) -> [f64; 5] {
        let lm = self.landmarks();
        Finger::ALL.map(|f| {
            let anchor = lm[f.extension_anchor()];
            let d = anchor.distance(&lm[f.tip()]) - anchor.distance(&lm[f.pip()]);
            if self.extension.is_extended(f) {
                d
            } else {
                -d
            }
        })
    }

    pub fn in_bounds(&self) -> bool {
        self.landmarks()
            .iter()
            .all(|l| (0.0..=1.0).contains(&l.x) && (0.0..=1.0).contains(&l.y))
    }

    /// Random pose for property tests: any handedness, facing, rotation and
    /// extension pattern, with mild variation of finger geometry.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut spread = OPEN_SPREAD_DEG;
        let mut length = [1.0; 5];
        for k in 1..5 {
            spread[k] += rng.gen_range(-4.0..4.0);
            length[k] = rng.gen_range(0.95..1.05);
        }
        let ext = Extension(std::array::from_fn(|_| rng.gen_bool(0.5)));
        Self {
            handedness: if rng.gen_bool(0.5) { Handedness::Left } else { Handedness::Right },
            facing: if rng.gen_bool(0.5) { Facing::Toward } else { Facing::Away },
            rotation_deg: rng.gen_range(0.0..360.0),
            scale: rng.gen_range(0.17..0.2),
            center: Point2::new(rng.gen_range(0.3..0.7), rng.gen_range(0.3..0.7)),
            extension: ext,
            spread_deg: spread,
            length_factor: length,
        }
    }
}

/// Adds independent Gaussian noise to every landmark coordinate. Image
/// coordinates are clamped back into `[0, 1]` as the frame parser would.
pub fn jitter<R: Rng + ?Sized>(frame: &HandFrame, sigma: f64, rng: &mut R) -> HandFrame {
    if sigma <= 0.0 {
        return frame.clone();
    }
    let normal = Normal::new(0.0, sigma).expect("finite sigma");
    let lms: Vec<Landmark> = frame
        .landmarks
        .iter()
        .map(|l| Landmark::new(l.x + normal.sample(rng), l.y + normal.sample(rng), l.z + normal.sample(rng)))
        .collect();
    HandFrame::new(frame.timestamp, frame.handedness, frame.confidence, &lms).expect("jittered frame is valid")
}

/// Reflects a frame horizontally (`x ↦ 1 − x`) and flips its handedness.
pub fn mirror(frame: &HandFrame) -> HandFrame {
    let lms: Vec<Landmark> = frame.landmarks.iter().map(|l| Landmark::new(1.0 - l.x, l.y, l.z)).collect();
    HandFrame::new(frame.timestamp, frame.handedness.flipped(), frame.confidence, &lms).expect("mirrored frame is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::{finger_states, hand_orientation, DirectionLabel, HandOrientation};
    use crate::keyframe::hand_center;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn palm_center_lands_on_target() {
        let pose = HandPose::default().with_center(Point2::new(0.42, 0.61)).with_rotation(33.0);
        let c = hand_center(&pose.frame(0.0, 1.0));
        assert!((c.x - 0.42).abs() < 1e-12 && (c.y - 0.61).abs() < 1e-12);
    }

    #[test]
    fn random_poses_stay_in_frame_with_margin() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..2000 {
            let pose = HandPose::random(&mut rng);
            assert!(pose.in_bounds(), "{pose:?}");
            let m = pose.extension_margins();
            assert!(m.iter().all(|m| *m >= 0.05), "{m:?} for {pose:?}");
        }
    }

    #[test]
    fn canonical_open_hand_faces_camera() {
        let f = HandPose::default().frame(0.0, 1.0);
        assert_eq!(finger_states(&f), Extension::OPEN);
        let up_toward = HandOrientation {
            facing: Facing::Toward,
            direction: Some(DirectionLabel::Up),
        };
        assert_eq!(hand_orientation(&f).unwrap(), up_toward);
        assert_eq!(hand_orientation(&mirror(&f)).unwrap(), up_toward);
        let away = HandPose::default().with_facing(Facing::Away).frame(0.0, 1.0);
        assert_eq!(hand_orientation(&away).unwrap().facing, Facing::Away);
    }
}
