"""Reads numbers and prints their mean.

Input: one line of integers.
"""
import statistics


def mean(values):
    """Arithmetic mean."""
    return statistics.mean(values)


class Summary:
    """Holds a list of values."""

    def __init__(self, values):
        '''Store values.'''
        self.values = values

    def describe(self):
        """Describe the values.

        Returns a string.
        """
        return f"n={len(self.values)} mean={mean(self.values)}"


print(Summary(list(map(int, input().split()))).describe())
