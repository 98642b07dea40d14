import string


def is_palindrome(text):
    """Check whether a word reads the same forwards and backwards."""
    # ignore case and spaces before comparing
    cleaned = "".join(ch.lower() for ch in text if not ch.isspace())
    return cleaned == cleaned[::-1]


def reverse_words(sentence):
    """Reverse the order of the words in a sentence."""
    words = sentence.split()
    # walk the word list from the end to the start
    return " ".join(reversed(words))


def count_vowels(text):
    """Count how many vowels appear in the given text."""
    vowels = "aeiou"
    total = 0
    for ch in text.lower():
        if ch in vowels:
            total += 1
    return total


def capitalize_words(title):
    """Upper-case the first letter of every word in a title."""
    # split on single spaces so repeated spaces survive the join
    parts = title.split(" ")
    return " ".join(p[:1].upper() + p[1:] for p in parts)


def strip_punctuation(line):
    """Remove punctuation characters from a line of text."""
    table = str.maketrans("", "", string.punctuation)
    # the translation table deletes every punctuation symbol
    return line.translate(table)
