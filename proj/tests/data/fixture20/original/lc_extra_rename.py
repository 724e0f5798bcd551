vals = list(map(int, input().split()))
neg = [v for v in vals if v < 0]
print(len(neg))
