m = int(input())
grid = []
for r in range(m):
    grid.append([r * c for c in range(m)])
print(grid[-1])
