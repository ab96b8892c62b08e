//! Idle-timeout gesture segmentation.

use crate::config::EngineConfig;
use crate::frame::HandFrame;
use crate::keyframe::{Keyframe, KeyframeExtractor};

/// Groups keyframes into gestures: a gesture closes once `idle_timeout`
/// seconds of stream time pass after its last keyframe.
#[derive(Debug, Clone)]
pub struct Segmenter {
    idle_timeout: f64,
    pending: Vec<Keyframe>,
}

impl Segmenter {
    pub fn new(idle_timeout: f64) -> Self {
        Self {
            idle_timeout,
            pending: Vec::new(),
        }
    }

    pub fn pending(&self) -> &[Keyframe] {
        &self.pending
    }

    /// Moves stream time forward, closing the pending gesture if it timed out.
    pub fn advance(&mut self, t: f64) -> Option<Vec<Keyframe>> {
        let last = self.pending.last()?.timestamp();
        (t - last >= self.idle_timeout).then(|| std::mem::take(&mut self.pending))
    }

    pub fn push_keyframe(&mut self, kf: Keyframe) -> Option<Vec<Keyframe>> {
        let closed = self.advance(kf.timestamp());
        self.pending.push(kf);
        closed
    }

    /// Closes whatever is pending (end of stream).
    pub fn finish(&mut self) -> Option<Vec<Keyframe>> {
        (!self.pending.is_empty()).then(|| std::mem::take(&mut self.pending))
    }
}

pub fn segment_gestures(keyframes: impl IntoIterator<Item = Keyframe>, idle_timeout: f64) -> Vec<Vec<Keyframe>> {
    let mut s = Segmenter::new(idle_timeout);
    let mut out: Vec<_> = keyframes.into_iter().filter_map(|k| s.push_keyframe(k)).collect();
    out.extend(s.finish());
    out
}

/// Frame-level front end of one input stream: keyframe extraction plus
/// segmentation. When no frame passes the confidence gate for a full idle
/// timeout the hand is considered gone, and the extractor starts over so a
/// repeated gesture is seen again.
#[derive(Debug, Clone)]
pub struct StreamPipeline {
    extractor: KeyframeExtractor,
    segmenter: Segmenter,
    idle_timeout: f64,
    last_confident: Option<f64>,
}

/// What one frame produced.
#[derive(Debug, Default)]
pub struct FrameEffect {
    pub keyframe: Option<Keyframe>,
    pub closed: Option<Vec<Keyframe>>,
}

impl StreamPipeline {
    pub fn new(config: &EngineConfig) -> Self {
        Self {
            extractor: KeyframeExtractor::new(config.extractor),
            segmenter: Segmenter::new(config.gesture_timeout),
            idle_timeout: config.gesture_timeout,
            last_confident: None,
        }
    }

    pub fn push_frame(&mut self, frame: &HandFrame) -> FrameEffect {
        let closed = self.segmenter.advance(frame.timestamp);
        if frame.confidence >= self.extractor.params().confidence_threshold {
            if self.last_confident.is_some_and(|t| frame.timestamp - t >= self.idle_timeout) {
                self.extractor.reset();
            }
            self.last_confident = Some(frame.timestamp);
        }
        let keyframe = self.extractor.push(frame);
        if let Some(k) = &keyframe {
            // advance() above already closed anything stale
            let none = self.segmenter.push_keyframe(k.clone());
            debug_assert!(none.is_none());
        }
        FrameEffect { keyframe, closed }
    }

    /// Closes the pending gesture regardless of time.
    pub fn flush(&mut self) -> Option<Vec<Keyframe>> {
        self.segmenter.finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::synth::HandPose;
    use crate::keyframe::ExtractorParams;

    fn kf(t: f64) -> Keyframe {
        let frame = HandPose::default().frame(t, 1.0);
        let mut ex = KeyframeExtractor::new(ExtractorParams::default());
        ex.push(&frame).unwrap()
    }

    #[test]
    fn closes_after_idle_timeout() {
        let mut s = Segmenter::new(1.0);
        for t in [0.0, 0.3, 0.6] {
            assert!(s.push_keyframe(kf(t)).is_none());
        }
        assert!(s.advance(1.5).is_none());
        let g = s.advance(1.6).unwrap();
        assert_eq!(g.len(), 3);
        assert!(s.advance(2.0).is_none());
        assert!(s.finish().is_none());
    }

    #[test]
    fn separated_keyframes() {
        let gs = segment_gestures([kf(0.0), kf(5.0)], 1.0);
        assert_eq!(gs.iter().map(Vec::len).collect::<Vec<_>>(), vec![1, 1]);
        assert!(segment_gestures(Vec::new(), 1.0).is_empty());
    }

    #[test]
    fn hand_gone_resets_extractor() {
        let config = EngineConfig::default();
        let mut p = StreamPipeline::new(&config);
        let pose = HandPose::default();
        let mut gestures = 0;
        let mut keyframes = 0;
        let mut feed = |p: &mut StreamPipeline, t: f64, conf: f64| {
            let e = p.push_frame(&pose.frame(t, conf));
            keyframes += e.keyframe.is_some() as usize;
            gestures += e.closed.is_some() as usize;
        };
        for i in 0..10 {
            feed(&mut p, i as f64 / 30.0, 0.9);
        }
        // hand leaves for 1.5 s, then the same pose comes back
        for i in 0..45 {
            feed(&mut p, 0.4 + i as f64 / 30.0, 0.2);
        }
        for i in 0..10 {
            feed(&mut p, 2.0 + i as f64 / 30.0, 0.9);
        }
        assert_eq!(keyframes, 2);
        assert_eq!(gestures, 1);
        assert!(p.flush().is_some());
    }
}
