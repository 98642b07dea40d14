import math


def fibonacci(n):
    """Return the nth Fibonacci number computed iteratively."""
    if n < 2:
        return n
    prev, curr = 0, 1
    for _ in range(n - 1):
        # each term is the sum of the two previous terms
        prev, curr = curr, prev + curr
    return curr


def gcd(a, b):
    """Compute the greatest common divisor of two integers."""
    # Euclid: replace the pair with the divisor and the remainder
    # until the remainder becomes zero
    while b != 0:
        a, b = b, a % b
    return abs(a)


def factorial(n):
    """Return the factorial of a non-negative integer."""
    if n < 0:
        raise ValueError("negative input")
    result = 1
    for k in range(2, n + 1):
        result *= k  # noqa
    return result


def is_prime(number):
    """Check whether a number has no divisors other than one and itself."""
    if number < 2:
        return False
    # only trial divisors up to the square root are needed
    limit = int(math.sqrt(number))
    for divisor in range(2, limit + 1):
        if number % divisor == 0:
            return False
    return True


def clamp(value, low, high):
    """Limit a value to the closed range between low and high."""
    # pylint: disable=invalid-name
    return max(low, min(high, value))
