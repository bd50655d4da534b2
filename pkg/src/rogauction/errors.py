"""Exception types shared across the package."""


class InputError(ValueError):
    """Malformed input: bad item, bad permutation, overlapping bundles, ..."""


class BudgetExceeded(RuntimeError):
    """An exhaustive computation would exceed its configured budget."""

    def __init__(self, what: str, required: int, budget: int):
        self.what = what
        self.required = required
        self.budget = budget
        super().__init__(f"{what} needs {required} evaluations, budget is {budget}")
