package toy.io;

import java.io.BufferedReader;
import java.io.FileReader;
import java.io.IOException;
import java.nio.file.Files;
import java.nio.file.Paths;

public class FileUtils {

    /**
     * Reads an entire file into a single string.
     */
    public static String readAllText(String path) throws IOException {
        // checkstyle:off MagicNumber rule for this block
        return new String(Files.readAllBytes(Paths.get(path)), "UTF-8");
    }

    /**
     * Counts the number of lines stored in a text file.
     */
    public static int countLines(String path) throws IOException {
        int lines = 0;
        try (BufferedReader reader = new BufferedReader(new FileReader(path))) {
            // read until the reader reports end of stream
            while (reader.readLine() != null) {
                lines++;
            }
        }
        return lines;
    }
}
