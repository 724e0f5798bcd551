MOD = 10 ** 9 + 7


def power(base, exp, MOD):
    Result = 1
    while exp:
        if exp & 1:
            Result = Result * base % MOD
        base = base * base % MOD
        exp >>= 1
    return Result


N, M = map(int, input().split())
Total_Ways = power(M, N, MOD)
Bad_Ways = power(M - 1, N, MOD)
Answer = (Total_Ways - Bad_Ways) % MOD
print(Answer)
