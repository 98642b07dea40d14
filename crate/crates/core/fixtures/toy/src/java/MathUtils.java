package toy.algo;

public final class MathUtils {

    private MathUtils() {
    }

    /**
     * Returns the nth Fibonacci number using an iterative loop.
     */
    public static long fibonacci(int n) {
        if (n < 2) {
            return n;
        }
        long prev = 0;
        long curr = 1;
        for (int i = 1; i < n; i++) {
            // each term is the sum of the two previous terms
            long next = prev + curr;
            prev = curr;
            curr = next;
        }
        return curr;
    }

    /**
     * Computes the greatest common divisor of two integers.
     */
    public static int gcd(int a, int b) {
        // Euclid: keep the divisor and the remainder
        // until the remainder reaches zero
        while (b != 0) {
            int r = a % b;
            a = b;
            b = r;
        }
        return Math.abs(a);
    }

    /**
     * Returns the factorial of a non-negative integer.
     */
    public static long factorial(int n) {
        if (n < 0) {
            throw new IllegalArgumentException("negative input");
        }
        long result = 1;
        for (int k = 2; k <= n; k++) {
            result *= k;
        }
        return result;
    }

    /**
     * Computes the least common multiple of two positive integers.
     */
    public static int lcm(int a, int b) {
        // divide first so the product does not overflow as quickly
        return a / gcd(a, b) * b;
    }

    /**
     * Raises a base to an integer exponent by repeated squaring.
     */
    public static long power(long base, int exponent) {
        long result = 1;
        while (exponent > 0) {
            // multiply in the current square when the low bit is set
            if ((exponent & 1) == 1) {
                result *= base;
            }
            base *= base;
            exponent >>= 1;
        }
        return result;
    }
}
