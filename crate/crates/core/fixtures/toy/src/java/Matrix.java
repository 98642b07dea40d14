package toy.algo;

public class Matrix {

    /**
     * Flips a matrix over its diagonal, swapping rows and columns.
     */
    public static double[][] transpose(double[][] m) {
        int rows = m.length;
        int cols = m[0].length;
        double[][] t = new double[cols][rows];
        for (int r = 0; r < rows; r++) {
            for (int c = 0; c < cols; c++) {
                t[c][r] = m[r][c];
            }
        }
        return t;
    }

    /**
     * Multiplies two matrices whose inner dimensions agree.
     */
    public static double[][] multiply(double[][] a, double[][] b) {
        int n = a.length;
        int k = b.length;
        int p = b[0].length;
        double[][] out = new double[n][p];
        for (int i = 0; i < n; i++) {
            for (int j = 0; j < p; j++) {
                double acc = 0.0;
                // dot product of row i and column j
                for (int s = 0; s < k; s++) {
                    acc += a[i][s] * b[s][j];
                }
                out[i][j] = acc;
            }
        }
        return out;
    }

    /**
     * Builds a square identity matrix of the requested size.
     */
    public static double[][] identity(int size) {
        double[][] id = new double[size][size];
        for (int i = 0; i < size; i++) {
            id[i][i] = 1.0;
        }
        return id;
    }
}
