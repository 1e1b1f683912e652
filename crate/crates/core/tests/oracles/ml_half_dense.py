"""E_{1/2,1}(-x) on x = 0, 0.25, ..., 10 by high-precision series summation.

Output is a Rust array literal embedded in src/verify/suites.rs.
"""
import mpmath as mp

from ml_reference import ml_series

print("// (x, E_{1/2,1}(-x))")
for i in range(41):
    x = mp.mpf(i) / 4
    mp.mp.dps = int(float(x) ** 2 / 2.3) + 60
    v, n = ml_series("0.5", "1", -x)
    print(f"    ({float(x)!r}, {mp.nstr(v, 25)}),")
