import numpy as np

# Doctests were written against NumPy 1.x scalar reprs (e.g. `True`, not
# `np.True_`); NumPy >= 2 changed them, so pin the legacy repr for tests.
if int(np.__version__.split('.')[0]) >= 2:
    np.set_printoptions(legacy = '1.25')
