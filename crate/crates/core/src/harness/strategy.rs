//! Strategy-change detection on a steering direction sequence.

/// Steps a new direction must be kept for, counting the onset step.
pub const PERSISTENCE: usize = 6;

/// Onset indices of sustained direction flips. `dirs` holds -1, 0 or +1
/// per step. A nonzero direction starting at `t` is sustained when
/// `t..t+PERSISTENCE` lies inside the sequence and contains no step in the
/// opposite direction; zeros neither break nor extend it. A sustained
/// direction that differs from the previously sustained one is a change.
/// The first sustained direction of an episode is not a change.
pub fn detect_direction_changes(dirs: &[i8]) -> Vec<usize> {
    let mut established = 0i8;
    let mut events = Vec::new();
    for t in 0..dirs.len() {
        let d = dirs[t].signum();
        if d == 0 || d == established {
            continue;
        }
        if sustained(dirs, t, d) {
            if established != 0 {
                events.push(t);
            }
            established = d;
        }
    }
    events
}

fn sustained(dirs: &[i8], t: usize, d: i8) -> bool {
    t + PERSISTENCE <= dirs.len() && dirs[t..t + PERSISTENCE].iter().all(|x| x.signum() != -d)
}

/// Reference implementation: a step is a change iff its direction is
/// sustained and the latest earlier sustained step points the other way.
/// Quadratic, kept for testing the detector.
pub fn brute_force_direction_changes(dirs: &[i8]) -> Vec<usize> {
    let n = dirs.len();
    let sustained_dir = |t: usize| -> Option<i8> {
        let d = dirs[t].signum();
        let ok = d != 0 && t + PERSISTENCE <= n && (t..t + PERSISTENCE).all(|i| dirs[i].signum() != -d);
        ok.then_some(d)
    };
    (0..n)
        .filter(|&t| match sustained_dir(t) {
            None => false,
            Some(d) => (0..t).rev().find_map(sustained_dir).is_some_and(|prev| prev != d),
        })
        .collect()
}
