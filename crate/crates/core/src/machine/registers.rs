use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

/// Liveness bookkeeping for the ultraword registers of one machine.
///
/// Every ultraword produced by the machine holds a [`RegisterSlot`]; the slot
/// counts as one live register until it is dropped.
#[derive(Debug, Default)]
pub(crate) struct RegisterFile {
    live: AtomicUsize,
    peak: AtomicUsize,
}

impl RegisterFile {
    pub(crate) fn live(&self) -> usize {
        self.live.load(Ordering::Relaxed)
    }

    pub(crate) fn peak(&self) -> usize {
        self.peak.load(Ordering::Relaxed)
    }

    pub(crate) fn reset_peak(&self) {
        self.peak.store(self.live(), Ordering::Relaxed);
    }

    fn acquire(&self) {
        let live = self.live.fetch_add(1, Ordering::Relaxed) + 1;
        self.peak.fetch_max(live, Ordering::Relaxed);
    }

    fn release(&self) {
        self.live.fetch_sub(1, Ordering::Relaxed);
    }
}

#[derive(Debug)]
pub(crate) struct RegisterSlot(Arc<RegisterFile>);

impl RegisterSlot {
    pub(crate) fn acquire(file: &Arc<RegisterFile>) -> Self {
        file.acquire();
        RegisterSlot(Arc::clone(file))
    }
}

impl Clone for RegisterSlot {
    fn clone(&self) -> Self {
        RegisterSlot::acquire(&self.0)
    }
}

impl Drop for RegisterSlot {
    fn drop(&mut self) {
        self.0.release();
    }
}
