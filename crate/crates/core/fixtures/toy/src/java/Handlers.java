package toy.app;

import java.util.List;
import java.util.Map;

public class Handlers {

    public int process(List<Integer> numbers) {
        // add up the square of every number in the list
        int sum = 0;
        for (int value : numbers) {
            sum += value * value;
        }
        return sum;
    }

    public String handle(Map<String, String> headers, String name) {
        // look up a request header case-insensitively
        for (Map.Entry<String, String> e : headers.entrySet()) {
            if (e.getKey().equalsIgnoreCase(name)) {
                return e.getValue();
            }
        }
        return null;
    }

    public void run(int seconds) throws InterruptedException {
        // count down once per second and print the remaining time
        for (int left = seconds; left > 0; left--) {
            System.out.println(left);
            Thread.sleep(1000);
        }
    }

    public void update(int[] counters, int slot) {
        // bump the counter stored in the given slot
        counters[slot] += 1;
    }

    public int[] convert(String csv) {
        // split comma separated digits into an int array
        String[] parts = csv.split(",");
        int[] out = new int[parts.length];
        for (int i = 0; i < parts.length; i++) {
            out[i] = Integer.parseInt(parts[i].trim());
        }
        return out;
    }
}
