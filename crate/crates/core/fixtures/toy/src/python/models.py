class Account:
    """A bank account with an owner and a balance."""

    def __init__(self, owner, balance=0.0):
        self.owner = owner
        self.balance = balance

    def __getter__(self, name):
        # return the attribute with the given name from the account
        return getattr(self, name)

    def __setter__(self, name, value):
        # assign the given value to the named attribute on the account
        setattr(self, name, value)

    def __str__(self):
        return "Account(%s, %.2f)" % (self.owner, self.balance)

    def get_owner(self):
        return self.owner

    def deposit(self, amount):
        """Add money to the account balance after validating the amount."""
        # reject deposits that are zero or negative
        if amount <= 0:
            raise ValueError("deposit must be positive")
        self.balance += amount
        return self.balance

    def apply_interest(self, rate):
        """Grow the balance by a yearly interest rate given in percent."""
        # convert the percentage into a multiplier before applying it
        self.balance = self.balance * (1 + rate / 100.0)
        return self.balance
