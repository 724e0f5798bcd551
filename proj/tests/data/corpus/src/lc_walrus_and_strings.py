import math

words = input().split()
lens = [len(w) for w in words]
caps = [w.upper() for w in words if (m := len(w)) > 2]
text = [f"{w}:{len(w)}" for w in words]
roots = [math.isqrt(v) for v in lens]
print(lens, caps, m)
print(text, roots)
