//! Arithmetic-operation counting at complex-operation granularity.

/// Counts complex arithmetic operations performed by the instrumented kernels.
///
/// One complex multiply, add, divide, or square root each counts as one
/// operation. [`FlopCounter::total`] is the figure reported in
/// `GradientResult::flops` and by the benchmark harness; ratios between
/// methods are convention-free since every method is counted the same way.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct FlopCounter {
    pub adds: u64,
    pub muls: u64,
    pub divs: u64,
    pub sqrts: u64,
}

impl FlopCounter {
    pub fn new() -> Self {
        Self::default()
    }

    /// Total complex operations.
    pub fn total(&self) -> u64 {
        self.adds + self.muls + self.divs + self.sqrts
    }

    /// Equivalent real floating-point operations (6 per complex multiply,
    /// 2 per complex add; divides and square roots weighted like multiplies).
    pub fn real_flops(&self) -> u64 {
        6 * self.muls + 2 * self.adds + 6 * self.divs + self.sqrts
    }

    pub fn reset(&mut self) {
        *self = Self::default();
    }
}

impl std::ops::AddAssign for FlopCounter {
    fn add_assign(&mut self, rhs: Self) {
        self.adds += rhs.adds;
        self.muls += rhs.muls;
        self.divs += rhs.divs;
        self.sqrts += rhs.sqrts;
    }
}
