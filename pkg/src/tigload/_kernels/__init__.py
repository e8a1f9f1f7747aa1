"""Hot-path kernels with a compiled core and a vectorized fallback.

The Cython extension is picked at import when present; setting
``TIGLOAD_PURE_PYTHON=1`` in the environment forces the fallback. Both
backends emit bit-identical streams (see ``vectors.py``), so results never
depend on which one loaded. ``BACKEND`` reports the active one.
"""

import os

if os.environ.get("TIGLOAD_PURE_PYTHON"):
    from tigload._kernels import reference as _impl
else:
    try:
        from tigload._kernels import _speedups as _impl  # type: ignore[attr-defined]
    except ImportError:
        from tigload._kernels import reference as _impl

BACKEND = _impl.BACKEND
fill_u64 = _impl.fill_u64
fill_uniform = _impl.fill_uniform
count_task_successes = _impl.count_task_successes
node_pass_counts = _impl.node_pass_counts
sample_bernoulli = _impl.sample_bernoulli

__all__ = [
    "BACKEND",
    "fill_u64",
    "fill_uniform",
    "count_task_successes",
    "node_pass_counts",
    "sample_bernoulli",
]
