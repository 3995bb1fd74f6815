/// Mean computed around the first element, so a constant slice returns
/// exactly that constant.
pub(crate) fn shifted_mean<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut it = values.into_iter();
    let Some(first) = it.next() else {
        return f64::NAN;
    };
    let (mut sum, mut n) = (0.0, 1usize);
    for v in it {
        sum += v - first;
        n += 1;
    }
    first + sum / n as f64
}
