package toy.text;

public class StringUtils {

    /**
     * Checks whether a word reads the same in both directions.
     */
    public static boolean isPalindrome(String text) {
        // ignore case and spaces before comparing
        String cleaned = text.replaceAll("\\s+", "").toLowerCase();
        int i = 0;
        int j = cleaned.length() - 1;
        while (i < j) {
            if (cleaned.charAt(i) != cleaned.charAt(j)) {
                return false;
            }
            i++;
            j--;
        }
        return true;
    }

    /**
     * Reverses the order of the words in a sentence.
     */
    public static String reverseWords(String sentence) {
        String[] words = sentence.trim().split("\\s+");
        StringBuilder sb = new StringBuilder();
        // walk the word list from the end to the start
        for (int k = words.length - 1; k >= 0; k--) {
            sb.append(words[k]);
            if (k > 0) {
                sb.append(" ");
            }
        }
        return sb.toString();
    }

    /**
     * Counts how many vowels appear in the given text.
     */
    public static int countVowels(String text) {
        String vowels = "aeiou";
        int total = 0;
        for (char ch : text.toLowerCase().toCharArray()) {
            if (vowels.indexOf(ch) >= 0) {
                total++;
            }
        }
        return total;
    }

    /**
     * Repeats a string the requested number of times.
     */
    public static String repeat(String unit, int times) {
        StringBuilder out = new StringBuilder();
        for (int k = 0; k < times; k++) {
            out.append(unit);
        }
        return out.toString();
    }

    /**
     * Returns true when the string is null or contains only whitespace.
     */
    public static boolean isBlank(String value) {
        // TODO handle unicode whitespace explicitly
        return value == null || value.trim().isEmpty();
    }
}
