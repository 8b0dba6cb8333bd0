//! Word-level accounting of solver working memory.
//!
//! Buffers are charged when they become live and released when dropped. The
//! peak is the memory proxy reported for each run; one word is one `f64` or
//! one index.

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MemoryMeter {
    current: usize,
    peak: usize,
}

impl MemoryMeter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn charge(&mut self, words: usize) {
        self.current += words;
        self.peak = self.peak.max(self.current);
    }

    pub fn release(&mut self, words: usize) {
        self.current = self.current.saturating_sub(words);
    }

    /// Charge a transient buffer that is released immediately.
    pub fn touch(&mut self, words: usize) {
        self.charge(words);
        self.release(words);
    }

    pub fn current(&self) -> usize {
        self.current
    }

    pub fn peak(&self) -> usize {
        self.peak
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tracks_peak() {
        let mut m = MemoryMeter::new();
        m.charge(10);
        m.touch(5);
        m.release(10);
        m.charge(3);
        assert_eq!(m.peak(), 15);
        assert_eq!(m.current(), 3);
    }
}
