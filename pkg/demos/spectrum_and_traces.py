"""The Airy spectrum behind the position marginal.

The zeros of h -> u'(-h) set the scales of the position law, and their
power sums have closed values.  Watch the truncated sums converge once the
integral-comparison tail is added.
"""
from tsrm import airy

data = airy.spectrum(500)
print("first zeros  :", data.delta_prime[:5].round(6))
print("first weights:", data.p[:5].round(6))
print(f"sum of weights with tail: {data.p.sum() + data.tail_estimate:.12f}")

for n in (2, 3, 4):
    print(f"\nsum delta^-{n}  (closed value {airy.trace_target(n):.12f})")
    for k in (50, 500, 5000):
        t = airy.trace_sum(n, k)
        print(f"  K={k:5d}: {t.value:.12f}  tail enclosure width {t.bound:.1e}")
