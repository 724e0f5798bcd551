try:
    from numba import njit
except ImportError:
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


def register(cls):
    cls.registered = True
    return cls


@register
class Solver:
    def run(self, values):
        @njit(cache=False)
        def total(xs):
            s = 0
            for x in xs:
                s += x
            return s

        return total(values)


n = int(input())
vals = list(range(n))
print(Solver.registered, Solver().run(vals))
