/// Solver-call accounting for one controller run or gradient evaluation.
///
/// A "forward rollout" is one pass of the reference solver over whatever
/// horizon the caller works on (a full trajectory for open-loop methods, one
/// prediction horizon for MPC); a "backward sweep" is one adjoint recursion
/// over the same horizon. Single true steps taken by receding-horizon
/// controllers to advance the plant are counted as forward rollouts too —
/// they are solver calls like any other.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolveStats {
    pub forward_rollouts: usize,
    pub backward_sweeps: usize,
}

impl SolveStats {
    pub fn new() -> Self {
        Self::default()
    }

    /// Folds another accounting into this one.
    pub fn absorb(&mut self, other: SolveStats) {
        self.forward_rollouts += other.forward_rollouts;
        self.backward_sweeps += other.backward_sweeps;
    }
}
