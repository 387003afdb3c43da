# SPDX-License-Identifier: Apache-2.0
"""Charts, aligned atlases, tangent transport and blow-ups on weighted point clouds."""

from ._core import (  # noqa: F401
    Chart,
    Error,
    Fixture,
    OrthoNet,
    Space,
    __version__,
    ball,
    ball_average,
    blowup_map,
    density,
    density_one_points,
    doubling_constant,
    generate,
    lipschitz_constant,
    mcshane_extend,
    measure,
    ortho_net,
    project_to_set,
    quasi_isometry_defect,
    run_tower,
    sampling_resolution,
    validate_space,
)
