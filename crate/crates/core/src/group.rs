use serde::{Deserialize, Serialize};

/// One cell of the (target label, protected label) cross.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GroupKey {
    pub target_label: bool,
    pub protected_label: bool,
}

impl GroupKey {
    /// Fixed reporting order: (1,1), (1,0), (0,1), (0,0).
    pub const ALL: [GroupKey; 4] = [
        GroupKey::new(true, true),
        GroupKey::new(true, false),
        GroupKey::new(false, true),
        GroupKey::new(false, false),
    ];

    pub const fn new(target_label: bool, protected_label: bool) -> Self {
        Self {
            target_label,
            protected_label,
        }
    }

    /// Position in [`GroupKey::ALL`].
    pub const fn index(self) -> usize {
        (!self.target_label as usize) * 2 + (!self.protected_label as usize)
    }

    pub fn label(self) -> String {
        format!("t{}_p{}", self.target_label as u8, self.protected_label as u8)
    }
}

pub const DEFAULT_EXCLUSION_THRESHOLD: f64 = 0.01;

/// A group is excluded when its size is strictly below `threshold * total`.
pub fn is_excluded(size: usize, total: usize, threshold: f64) -> bool {
    (size as f64) < threshold * total as f64
}
