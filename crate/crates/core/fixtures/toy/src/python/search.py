def binary_search(items, target):
    """Find the index of target in a sorted list, or -1 when absent."""
    low, high = 0, len(items) - 1
    while low <= high:
        mid = (low + high) // 2
        # discard the half that cannot contain the target
        if items[mid] == target:
            return mid
        if items[mid] < target:
            low = mid + 1
        else:
            high = mid - 1
    return -1


def linear_search(records, key):
    """Scan every record and return the first one whose name equals key."""
    for record in records:
        # result = lookup(record, key);
        if record.get("name") == key:
            return record
    return None
