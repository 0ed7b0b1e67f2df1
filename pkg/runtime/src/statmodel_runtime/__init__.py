"""Runtime support for generated instruction-mix models.

Generated modules import exactly one name from here. The shim has no
third-party dependencies, so emitted models run on any Python 3.10+.
"""

__version__ = "0.1.0"

__all__ = ["handle_function_call"]


def handle_function_call(caller, callee, iterations):
    """Fold a callee's metric dict into the caller's: caller + iterations*callee.

    Both arguments map category names to integer counts; missing keys mean
    zero. Returns a new dict; the inputs are not mutated.
    """
    if iterations < 0:
        raise ValueError(f"iterations must be non-negative, got {iterations}")
    result = dict(caller)
    for category, count in callee.items():
        result[category] = result.get(category, 0) + iterations * count
    return result
