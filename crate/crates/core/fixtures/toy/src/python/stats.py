def mean(samples):
    """Compute the arithmetic average of a list of numbers."""
    if not samples:
        return 0.0
    return sum(samples) / len(samples)


def median(samples):
    """Return the middle value of the samples after sorting them."""
    ordered = sorted(samples)
    size = len(ordered)
    mid = size // 2
    # even sized inputs average the two central values
    if size % 2 == 0:
        return (ordered[mid - 1] + ordered[mid]) / 2.0
    return ordered[mid]


def variance(samples):
    """Measure the spread of the samples around their average."""
    center = mean(samples)
    # population variance divides by the number of samples
    return sum((x - center) ** 2 for x in samples) / len(samples)


def moving_average(series, window):
    """Smooth a series by averaging each sliding window of values."""
    smoothed = []
    for start in range(len(series) - window + 1):
        chunk = series[start:start + window]
        smoothed.append(sum(chunk) / window)
    return smoothed
