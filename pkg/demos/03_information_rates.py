"""Compare achievable rates: SIR, i.u.d. once-rate, delayed coding and markers.

The SIR is the information rate of the channel with i.u.d. inputs.  The
once-rates measure what a single detection pass extracts, which is what
the chained decoder actually uses.
"""
from dcids import ChannelParams, default_scheme
from dcids.rates import estimate_once_rate_dc, estimate_once_rate_iud, \
    estimate_once_rate_marker, estimate_sir

n, trials = 4000, 4
print(" p_id    SIR    iud   DC T=3  DC T=15  marker d=10")
for p_id in (0.02, 0.05, 0.08, 0.11):
    p = ChannelParams(p_id)
    sir = estimate_sir(p, n, trials, seed=0).value
    iud = estimate_once_rate_iud(p, n, trials, seed=0).value
    dc3 = estimate_once_rate_dc(p, default_scheme(3), n // 4, trials, seed=0)
    dc15 = estimate_once_rate_dc(p, default_scheme(15), n // 16, trials, seed=0).value
    mk = estimate_once_rate_marker(p, 10, n, trials, seed=0).value
    print(f"{p_id:5.2f}  {sir:.3f}  {iud:.3f}  {dc3.value:.3f}   {dc15:.3f}    {mk:.3f}")

# Later delay subchannels see more pilots and carry more information.
print("per-delay rates at p_id=0.11, T=(0,1,2,3):", dc3.per_delay.round(3))
