package toy.algo;

import java.util.Arrays;

public class Sorting {

    /**
     * Sorts the input array into ascending order.
     *
     * @param arr values to sort in place
     * @return the same array, sorted
     */
    public static int[] bubbleSort(int[] arr) {
        int n = arr.length;
        for (int i = 0; i < n; i++) {
            boolean swapped = false;
            for (int j = 0; j < n - i - 1; j++) {
                // swap neighbours that appear
                // in descending order
                if (arr[j] > arr[j + 1]) {
                    int temp = arr[j];
                    arr[j] = arr[j + 1];
                    arr[j + 1] = temp;
                    swapped = true;
                }
            }
            // a pass without swaps means the array is sorted
            if (!swapped) {
                break;
            }
        }
        return arr;
    }

    /**
     * Sorts a range of the array with the quicksort divide and conquer scheme.
     */
    public static void quickSort(int[] data, int lo, int hi) {
        if (lo < hi) {
            int p = partition(data, lo, hi);
            // recurse on both sides of the pivot position
            quickSort(data, lo, p - 1);
            quickSort(data, p + 1, hi);
        }
    }

    /**
     * Moves elements smaller than the pivot to its left and returns the pivot index.
     */
    private static int partition(int[] data, int lo, int hi) {
        int pivot = data[hi];
        int store = lo;
        for (int k = lo; k < hi; k++) {
            if (data[k] < pivot) {
                int t = data[k];
                data[k] = data[store];
                data[store] = t;
                store++;
            }
        }
        int t = data[hi];
        data[hi] = data[store];
        data[store] = t;
        return store;
    }

    /**
     * Returns a sorted copy and leaves the original array untouched.
     */
    public static int[] sortedCopy(int[] source) {
        int[] copy = Arrays.copyOf(source, source.length);
        // Arrays.sort(copy, 0, copy.length);
        Arrays.sort(copy);
        return copy;
    }
}
