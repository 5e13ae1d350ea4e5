//! Float intrinsics for `no_std`.

#[inline]
pub(crate) fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub(crate) fn floor(x: f64) -> f64 {
    libm::floor(x)
}

#[inline]
pub(crate) fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}

/// Mean taken relative to the first value: exact for constant input, where
/// `sum / n` can be off by an ulp. `None` if empty.
pub(crate) fn mean(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let mut it = values.into_iter();
    let first = it.next()?;
    let (dev, n) = it.fold((0.0, 1usize), |(s, n), v| (s + (v - first), n + 1));
    Some(first + dev / n as f64)
}
