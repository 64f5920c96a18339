"""coposos: sum-of-squares relaxations of copositive programs.

Library layout:

- :mod:`coposos.polycore`   exact multi-index / polynomial arithmetic
- :mod:`coposos.sdpcore`    block SDP model and interior-point solver
- :mod:`coposos.cones`      cone membership tests and SoS certificates
- :mod:`coposos.relax`      conic-program relaxation assembly and solving
- :mod:`coposos.apps`       quadratic-program, stability and chromatic bounds
- :mod:`coposos.pathology`  pathological program generators and verifiers
- :mod:`coposos.cli`        command-line front end and file formats
"""

__version__ = "0.1.0"
