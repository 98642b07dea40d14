"""Sorting helpers."""


def bubble_sort(arr):
    """Sort the input array into ascending order."""
    n = len(arr)
    for i in range(n):
        swapped = False
        for j in range(0, n - i - 1):
            # if adjacent elements appear
            # in descending order, swap them
            if arr[j] > arr[j + 1]:
                temp = arr[j]
                arr[j] = arr[j + 1]
                arr[j + 1] = temp
                swapped = True
        # stop early when a full pass made no swaps
        if not swapped:
            break
    return arr


def insertion_sort(values):
    """Order a list by inserting each value into the sorted prefix."""
    for idx in range(1, len(values)):
        key = values[idx]
        pos = idx - 1
        # shift larger entries one slot to the right
        while pos >= 0 and values[pos] > key:
            values[pos + 1] = values[pos]
            pos -= 1
        values[pos + 1] = key  # place
    return values


def merge_sorted(left, right):
    """Combine two already sorted sequences into one sorted list."""
    merged = []
    a = b = 0
    while a < len(left) and b < len(right):
        # take the smaller head element first
        if left[a] <= right[b]:
            merged.append(left[a])
            a += 1
        else:
            merged.append(right[b])
            b += 1
    # TODO: avoid the two extra list copies below
    merged.extend(left[a:])
    merged.extend(right[b:])
    return merged
