package toy.algo;

public class Search {

    /**
     * Finds the index of target in a sorted array, or returns -1 when it is absent.
     */
    public static int binarySearch(int[] items, int target) {
        int low = 0;
        int high = items.length - 1;
        while (low <= high) {
            int mid = (low + high) / 2;
            // discard the half that cannot contain the target
            if (items[mid] == target) {
                return mid;
            }
            if (items[mid] < target) {
                low = mid + 1;
            } else {
                high = mid - 1;
            }
        }
        return -1;
    }

    /**
     * Returns the position of the largest element in the array.
     */
    public static int indexOfMax(double[] values) {
        int best = 0;
        for (int i = 1; i < values.length; i++) {
            // keep the first index on ties
            if (values[i] > values[best]) {
                best = i;
            }
        }
        return best;
    }
}
