#!/usr/bin/env python3
"""
Exception hierarchy for the consensus toolkit.

InputError subclasses mean the caller handed over something invalid
(bad graph, bad scenario, bad gains). NumericalError subclasses mean the
numbers themselves went wrong. main.py maps the two families to exit
statuses 1 and 2.
"""


class ConsensusToolkitError(Exception):
    """Base class for every error raised by this package."""


class InputError(ConsensusToolkitError):
    """Invalid input: graphs, gains, scenarios, dimensions."""


class NumericalError(ConsensusToolkitError):
    """A numerical routine failed or produced unusable values."""


# Graph construction

class SelfLoopError(InputError):
    def __init__(self, node):
        self.node = node
        super().__init__(f"self-loop on node {node}")


class IndexOutOfRangeError(InputError):
    def __init__(self, index, n):
        self.index = index
        self.n = n
        super().__init__(f"node index {index} outside [0, {n})")


class DuplicateEdgeError(InputError):
    def __init__(self, i, j):
        self.i = i
        self.j = j
        super().__init__(f"duplicate edge ({i}, {j})")


class NotConnectedError(InputError):
    def __init__(self, message="graph is not connected"):
        super().__init__(message)


# Controller / gains

class NonPositiveGainError(InputError):
    def __init__(self, index, value=None):
        self.index = index
        self.value = value
        detail = f" (got {value})" if value is not None else ""
        super().__init__(f"gain k[{index}] must be positive{detail}")


class DimensionMismatchError(InputError):
    def __init__(self, what, expected, got):
        self.what = what
        self.expected = expected
        self.got = got
        super().__init__(f"{what}: expected length {expected}, got {got}")


class NotLocalizableError(InputError):
    """Raised when a per-agent law is requested for a non-local projection."""


class NotConstantDisturbanceError(InputError):
    def __init__(self, kind):
        self.kind = kind
        super().__init__(f"operation needs a constant disturbance, got '{kind}'")


# Scenarios

class UnknownExampleError(InputError):
    def __init__(self, example_id):
        self.example_id = example_id
        super().__init__(f"unknown built-in example {example_id!r} (expected 1, 2 or 3)")


class ParseError(InputError):
    def __init__(self, line, message):
        self.line = line
        self.message = message
        super().__init__(f"line {line}: {message}")


class ValidationError(InputError):
    def __init__(self, field, message):
        self.field = field
        self.message = message
        super().__init__(f"{field}: {message}")


# Numerics

class NotSymmetricError(NumericalError):
    def __init__(self, asymmetry):
        self.asymmetry = asymmetry
        super().__init__(f"matrix is not symmetric (max |A - A^T| = {asymmetry:.3e})")


class EigenFailureError(NumericalError):
    pass


class AssumptionInfeasibleError(NumericalError):
    def __init__(self, r_min_eig, rbar_min_eig):
        self.r_min_eig = r_min_eig
        self.rbar_min_eig = rbar_min_eig
        super().__init__(
            "gain set violates the dissipation assumption "
            f"(lambda_min(R) = {r_min_eig:.4g}, lambda_min(Rbar) = {rbar_min_eig:.4g})"
        )


class NonFiniteStateError(NumericalError):
    def __init__(self, time):
        self.time = time
        super().__init__(f"state became non-finite at t = {time:.6g} s")
