package toy.model;

import java.util.Objects;

public class Person {

    private String name;
    private int age;

    public Person(String name, int age) {
        this.name = name;
        this.age = age;
    }

    public String getName() {
        return name;
    }

    public void setName(String name) {
        // replace the stored name with the new value given
        this.name = name;
    }

    public int getAge() {
        return age;
    }

    @Override
    public String toString() {
        // render the person as a readable name and age label
        return "Person(" + name + ", " + age + ")";
    }

    @Override
    public boolean equals(Object other) {
        if (!(other instanceof Person)) {
            return false;
        }
        Person p = (Person) other;
        return age == p.age && Objects.equals(name, p.name);
    }

    @Override
    public int hashCode() {
        return Objects.hash(name, age);
    }

    /**
     * Tells whether the person is old enough to vote.
     */
    public boolean canVote() {
        // voting age is fixed at eighteen years
        return age >= 18;
    }
}
