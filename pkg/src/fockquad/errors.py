class ConvergenceError(ArithmeticError):
    """An iterative solver failed to converge.

    ``indices`` lists the eigenvalue / root positions that did not settle.
    """

    def __init__(self, message: str, indices=()):
        super().__init__(message)
        self.indices = tuple(int(i) for i in indices)
