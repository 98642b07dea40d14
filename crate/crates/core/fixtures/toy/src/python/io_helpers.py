import json


def read_lines(path):
    """Load a text file and return its lines without trailing newlines."""
    with open(path, "r", encoding="utf-8") as handle:
        # rstrip keeps leading indentation intact
        return [line.rstrip("\n") for line in handle]


def save_json(path, payload):
    """Serialize a dictionary to a JSON file on disk."""
    with open(path, "w", encoding="utf-8") as handle:
        # sort keys so the written file is stable across runs
        json.dump(payload, handle, indent=2, sort_keys=True)


def word_frequencies(path):
    """Tally how often each word occurs in a text file."""
    counts = {}
    for line in read_lines(path):
        for word in line.split():
            # normalise case so The and the are the same word
            key = word.lower()
            counts[key] = counts.get(key, 0) + 1
    return counts
