"""Open quantum walks and their Brownian scaling limit: simulation and checks.

Subpackage map:

* ``linalg``       -- dense complex primitives, state validation, Bloch map
* ``discrete``     -- exact discrete-time walks and measured trajectories
* ``scaling``      -- continuum moduli -> transition pairs, tilt parameter
* ``trajectories`` -- Euler-Maruyama integrators for the continuum equations
* ``lindblad``     -- deterministic propagation of the averaged map
* ``ito``          -- noise-algebra identity checks on finite stand-ins
* ``spinhalf``     -- two-level gyroscope analytics and ensembles
* ``harness``      -- reproducible experiment driver (configs, files, pool)
* ``service``      -- HTTP facade over the harness
* ``cli``          -- thin command-line client
"""

__version__ = "0.1.0"
